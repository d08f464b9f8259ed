#include "dislab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "dislab/errors.hpp"

namespace dislab {

namespace {

Vec softmax(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& pi : p) pi /= sum;
    return p;
}

double log_softmax_at(const Vec& logits, std::size_t k) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    return logits[k] - m - std::log(sum);
}

}  // namespace

Vec MlpNetwork::forward(const Vec& x) const {
    Tape tape;
    return forward(x, tape);
}

Vec MlpNetwork::forward(const Vec& x, Tape& tape) const {
    if (x.size() != input_dim()) throw ShapeError("mlp: input dimension mismatch");
    tape.activations.clear();
    tape.activations.push_back(x);
    Vec a = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        Vec z = matvec(w[l], a);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += b[l][i];
        if (l + 1 < w.size())
            for (double& zi : z) zi = std::tanh(zi);
        a = std::move(z);
        tape.activations.push_back(a);
    }
    return a;
}

Vec MlpNetwork::input_grad(const Tape& tape, const Vec& dlogits) const {
    Vec delta = dlogits;
    for (std::size_t l = w.size(); l-- > 0;) {
        Vec prev = matvec_transposed(w[l], delta);
        if (l > 0) {
            const Vec& a = tape.activations[l];  // tanh outputs of layer l-1
            for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= 1.0 - a[i] * a[i];
        }
        delta = std::move(prev);
    }
    return delta;
}

void MlpNetwork::accumulate_grads(const Tape& tape, const Vec& dlogits, std::vector<Mat>& gw,
                                  std::vector<Vec>& gb) const {
    Vec delta = dlogits;
    for (std::size_t l = w.size(); l-- > 0;) {
        const Vec& a_in = tape.activations[l];
        for (std::size_t i = 0; i < w[l].rows; ++i) {
            gb[l][i] += delta[i];
            for (std::size_t j = 0; j < w[l].cols; ++j) gw[l](i, j) += delta[i] * a_in[j];
        }
        if (l == 0) break;
        Vec prev = matvec_transposed(w[l], delta);
        const Vec& a = tape.activations[l];
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] *= 1.0 - a[i] * a[i];
        delta = std::move(prev);
    }
}

MlpNetwork make_mlp(const std::vector<std::size_t>& sizes, RngStream& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least two layer sizes");
    MlpNetwork net;
    net.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Mat wl(sizes[l + 1], sizes[l]);
        const double scale = std::sqrt(1.0 / static_cast<double>(sizes[l]));
        for (double& v : wl.data) v = scale * (2.0 * rng.uniform() - 1.0);
        net.w.push_back(std::move(wl));
        net.b.emplace_back(sizes[l + 1], 0.0);
    }
    return net;
}

std::string mlp_to_json(const MlpNetwork& net) {
    nlohmann::json j;
    j["sizes"] = net.sizes;
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        nlohmann::json layer;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < net.w[l].rows; ++i) {
            std::vector<double> row(net.w[l].cols);
            for (std::size_t c = 0; c < net.w[l].cols; ++c) row[c] = net.w[l](i, c);
            rows.push_back(std::move(row));
        }
        layer["w"] = rows;
        layer["b"] = net.b[l];
        j["layers"].push_back(layer);
    }
    return j.dump(2);
}

MlpNetwork mlp_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MlpNetwork net;
    net.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    for (const auto& layer : j.at("layers")) {
        const auto rows = layer.at("w").get<std::vector<std::vector<double>>>();
        Mat wl(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t c = 0; c < rows[i].size(); ++c) wl(i, c) = rows[i][c];
        net.w.push_back(std::move(wl));
        net.b.push_back(layer.at("b").get<Vec>());
    }
    return net;
}

void save_mlp(const MlpNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
    out << mlp_to_json(net) << '\n';
}

MlpNetwork load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return mlp_from_json(ss.str());
}

DistanceKind distance_from_string(const std::string& s) {
    if (s == "mse") return DistanceKind::mse;
    if (s == "cross_entropy") return DistanceKind::cross_entropy;
    throw ConfigError("unknown distance: " + s);
}

std::string to_string(DistanceKind d) {
    return d == DistanceKind::mse ? "mse" : "cross_entropy";
}

MeasurementOperator make_linear_operator(Mat a, DistanceKind distance, double smoothing_tau) {
    if (a.rows < 1) throw std::invalid_argument("linear operator: need m >= 1");
    if (!all_finite(a)) throw std::invalid_argument("linear operator: non-finite matrix");
    if (distance == DistanceKind::cross_entropy)
        throw ConfigError("cross_entropy distance requires an mlp operator");
    MeasurementOperator op;
    op.kind = OperatorKind::linear;
    op.a = std::move(a);
    op.distance = distance;
    op.smoothing_tau = smoothing_tau;
    return op;
}

MeasurementOperator make_mlp_operator(MlpNetwork net, DistanceKind distance,
                                      double smoothing_tau) {
    MeasurementOperator op;
    op.kind = OperatorKind::mlp;
    op.net = std::move(net);
    op.distance = distance;
    op.smoothing_tau = smoothing_tau;
    return op;
}

namespace {

Vec smoothed_input(const MeasurementOperator& op, const Vec& x, RngStream& rng) {
    if (op.smoothing_tau <= 0.0) return x;
    Vec xn = x;
    for (double& xi : xn) xi += op.smoothing_tau * rng.normal();
    return xn;
}

}  // namespace

Vec apply(const MeasurementOperator& op, const Vec& x, RngStream& rng) {
    if (x.size() != op.input_dim()) throw ShapeError("operator apply: input dimension mismatch");
    const Vec xn = smoothed_input(op, x, rng);
    if (op.kind == OperatorKind::linear) return matvec(op.a, xn);
    return op.net.forward(xn);
}

LossResult loss_and_grad(const MeasurementOperator& op, const Vec& x, const Target& target,
                         RngStream& rng) {
    if (x.size() != op.input_dim()) throw ShapeError("operator loss: input dimension mismatch");
    const Vec xn = smoothed_input(op, x, rng);

    LossResult res;
    if (op.kind == OperatorKind::linear) {
        const Vec fx = matvec(op.a, xn);
        if (target.y.size() != fx.size()) throw TargetError("loss: target dimension mismatch");
        const Vec r = fx - target.y;
        res.loss = 0.5 * dot(r, r);
        res.grad_x = matvec_transposed(op.a, r);
        return res;
    }

    MlpNetwork::Tape tape;
    const Vec logits = op.net.forward(xn, tape);
    if (op.distance == DistanceKind::mse) {
        if (target.y.size() != logits.size()) throw TargetError("loss: target dimension mismatch");
        const Vec r = logits - target.y;
        res.loss = 0.5 * dot(r, r);
        res.grad_x = op.net.input_grad(tape, r);
        return res;
    }

    if (target.label >= logits.size()) throw TargetError("loss: class index out of range");
    res.loss = -log_softmax_at(logits, target.label);
    Vec dlogits = softmax(logits);
    dlogits[target.label] -= 1.0;
    res.grad_x = op.net.input_grad(tape, dlogits);
    return res;
}

double loss(const MeasurementOperator& op, const Vec& x, const Target& target, RngStream& rng) {
    return loss_and_grad(op, x, target, rng).loss;
}

Vec loss_grad_x(const MeasurementOperator& op, const Vec& x, const Target& target,
                RngStream& rng) {
    return loss_and_grad(op, x, target, rng).grad_x;
}

MlpNetwork train_mlp(const GaussianMixture& gmm, const TrainingParams& params) {
    const std::size_t classes = gmm.components();
    if (params.samples < 10 * classes)
        throw std::invalid_argument("train_mlp: need at least 10 samples per class");

    RngStream data_rng = make_stream(params.seed, 0, "mlp-train-data");
    RngStream init_rng = make_stream(params.seed, 0, "mlp-init");
    RngStream shuffle_rng = make_stream(params.seed, 0, "mlp-shuffle");

    std::vector<Vec> xs;
    std::vector<std::size_t> ys;
    xs.reserve(params.samples);
    for (std::size_t i = 0; i < params.samples; ++i) {
        Vec x = sample_prior(gmm, data_rng);
        ys.push_back(nearest_mode(gmm, x));
        xs.push_back(std::move(x));
    }

    MlpNetwork net = make_mlp({gmm.dim, params.hidden, classes}, init_rng);

    std::vector<std::size_t> order(params.samples);
    std::iota(order.begin(), order.end(), 0);

    std::vector<Mat> gw;
    std::vector<Vec> gb;
    for (std::size_t l = 0; l < net.w.size(); ++l) {
        gw.emplace_back(net.w[l].rows, net.w[l].cols);
        gb.emplace_back(net.b[l].size(), 0.0);
    }

    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        // Fisher-Yates with the dedicated shuffle stream
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.index(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < params.samples; start += params.batch) {
            const std::size_t end = std::min(start + params.batch, params.samples);
            for (auto& g : gw) std::fill(g.data.begin(), g.data.end(), 0.0);
            for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                MlpNetwork::Tape tape;
                const Vec logits = net.forward(xs[idx], tape);
                if (!std::isfinite(log_softmax_at(logits, ys[idx])))
                    throw TrainingError("train_mlp: diverged (loss not finite)");
                Vec dlogits = softmax(logits);
                dlogits[ys[idx]] -= 1.0;
                net.accumulate_grads(tape, dlogits, gw, gb);
            }
            const double scale = params.lr / static_cast<double>(end - start);
            for (std::size_t l = 0; l < net.w.size(); ++l) {
                for (std::size_t k = 0; k < net.w[l].data.size(); ++k)
                    net.w[l].data[k] -= scale * gw[l].data[k];
                for (std::size_t k = 0; k < net.b[l].size(); ++k)
                    net.b[l][k] -= scale * gb[l][k];
                if (!all_finite(net.w[l])) throw TrainingError("train_mlp: diverged (non-finite)");
            }
        }
    }
    return net;
}

double classifier_accuracy(const MlpNetwork& net, const GaussianMixture& gmm,
                           std::size_t n_samples, RngStream& rng) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const Vec x = sample_prior(gmm, rng);
        const Vec logits = net.forward(x);
        const std::size_t pred =
            static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == nearest_mode(gmm, x)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n_samples);
}

}  // namespace dislab
