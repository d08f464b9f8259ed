#include "dislab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dislab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_point(const GaussianMixture& gmm, const Vec& x) {
    if (x.size() != gmm.dim) throw ShapeError("mixture: point dimension mismatch");
}

void check_sigma_t(double sigma_t) {
    if (!(sigma_t >= 0.0)) throw std::invalid_argument("mixture: sigma_t must be >= 0");
}

// log weights of the smoothed mixture responsibilities, before normalization
Vec component_log_weights(const GaussianMixture& gmm, double v, const Vec& x) {
    const std::size_t n = gmm.components();
    Vec lw(n);
    for (std::size_t i = 0; i < n; ++i)
        lw[i] = std::log(gmm.weights[i]) - 0.5 * dist2(x, gmm.means[i]) / v;
    return lw;
}

}  // namespace

GaussianMixture::GaussianMixture(std::size_t d, std::vector<Vec> mu, double sigma_component,
                                 std::vector<double> w)
    : dim(d), means(std::move(mu)), sigma(sigma_component), weights(std::move(w)) {
    if (dim == 0) throw std::invalid_argument("GaussianMixture: dim must be positive");
    if (means.empty()) throw std::invalid_argument("GaussianMixture: need at least one component");
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianMixture: sigma must be positive");
    for (const auto& m : means) {
        if (m.size() != dim) throw ShapeError("GaussianMixture: mean dimension mismatch");
        if (!all_finite(m)) throw std::invalid_argument("GaussianMixture: non-finite mean");
    }
    if (weights.empty()) {
        weights.assign(means.size(), 1.0 / static_cast<double>(means.size()));
    } else {
        if (weights.size() != means.size())
            throw ShapeError("GaussianMixture: weights/means size mismatch");
        double sum = 0.0;
        for (double w0 : weights) {
            if (!(w0 > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be positive");
            sum += w0;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    }
}

GaussianMixture toy_five_gmm(double sigma) {
    return GaussianMixture(2,
                           {{-1.0, -1.0}, {-1.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}, {0.0, 0.0}},
                           sigma);
}

double log_marginal_density(const GaussianMixture& gmm, double sigma_t, const Vec& x) {
    check_point(gmm, x);
    check_sigma_t(sigma_t);
    const double v = gmm.sigma * gmm.sigma + sigma_t * sigma_t;
    const Vec lw = component_log_weights(gmm, v, x);
    return logsumexp(lw) - 0.5 * static_cast<double>(gmm.dim) * (kLog2Pi + std::log(v));
}

double marginal_density(const GaussianMixture& gmm, double sigma_t, const Vec& x) {
    return std::exp(log_marginal_density(gmm, sigma_t, x));
}

std::vector<double> component_weights(const GaussianMixture& gmm, double sigma_t, const Vec& x) {
    check_point(gmm, x);
    check_sigma_t(sigma_t);
    const double v = gmm.sigma * gmm.sigma + sigma_t * sigma_t;
    Vec lw = component_log_weights(gmm, v, x);
    const double lse = logsumexp(lw);
    std::vector<double> w(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - lse);
    return w;
}

Vec score(const GaussianMixture& gmm, double sigma_t, const Vec& x) {
    const auto w = component_weights(gmm, sigma_t, x);
    const double v = gmm.sigma * gmm.sigma + sigma_t * sigma_t;
    Vec s(gmm.dim, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < gmm.dim; ++j) s[j] += w[i] * (gmm.means[i][j] - x[j]) / v;
    return s;
}

Mat score_hessian(const GaussianMixture& gmm, double sigma_t, const Vec& x) {
    const auto w = component_weights(gmm, sigma_t, x);
    const double v = gmm.sigma * gmm.sigma + sigma_t * sigma_t;
    const std::size_t d = gmm.dim;

    // H = sum_i w_i (g_i g_i^T - I/v) - s s^T with g_i = (mu_i - x)/v
    Mat h(d, d);
    Vec s(d, 0.0);
    Vec g(d);
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) g[j] = (gmm.means[i][j] - x[j]) / v;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) h(a, b) += w[i] * g[a] * g[b];
            h(a, a) -= w[i] / v;
        }
        axpy(w[i], g, s);
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) h(a, b) -= s[a] * s[b];
    return h;
}

PosteriorMixture exact_posterior(const GaussianMixture& gmm, double sigma_t, const Vec& x_t) {
    if (!(sigma_t > 0.0)) throw std::invalid_argument("exact_posterior: sigma_t must be > 0");
    check_point(gmm, x_t);
    const double s2 = gmm.sigma * gmm.sigma;
    const double t2 = sigma_t * sigma_t;
    const double v = s2 + t2;

    PosteriorMixture post;
    post.weights = component_weights(gmm, sigma_t, x_t);
    post.var = s2 * t2 / v;
    post.means.reserve(gmm.components());
    for (const auto& mu : gmm.means) {
        Vec m(gmm.dim);
        for (std::size_t j = 0; j < gmm.dim; ++j) m[j] = (s2 * x_t[j] + t2 * mu[j]) / v;
        post.means.push_back(std::move(m));
    }
    return post;
}

double PosteriorMixture::log_density(const Vec& x0) const {
    if (means.empty() || x0.size() != means[0].size())
        throw ShapeError("PosteriorMixture: point dimension mismatch");
    const std::size_t d = x0.size();
    Vec lw(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        lw[i] = std::log(weights[i]) - 0.5 * dist2(x0, means[i]) / var;
    return logsumexp(lw) - 0.5 * static_cast<double>(d) * (kLog2Pi + std::log(var));
}

double PosteriorMixture::density(const Vec& x0) const { return std::exp(log_density(x0)); }

Vec posterior_mean(const GaussianMixture& gmm, double sigma_t, const Vec& x_t) {
    const auto post = exact_posterior(gmm, sigma_t, x_t);
    Vec mean(gmm.dim, 0.0);
    for (std::size_t i = 0; i < post.weights.size(); ++i) axpy(post.weights[i], post.means[i], mean);
    return mean;
}

Mat posterior_cov(const GaussianMixture& gmm, double sigma_t, const Vec& x_t) {
    const auto post = exact_posterior(gmm, sigma_t, x_t);
    const std::size_t d = gmm.dim;
    Vec mean(d, 0.0);
    for (std::size_t i = 0; i < post.weights.size(); ++i) axpy(post.weights[i], post.means[i], mean);

    Mat cov(d, d);
    for (std::size_t i = 0; i < post.weights.size(); ++i) {
        const Vec& m = post.means[i];
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) cov(a, b) += post.weights[i] * m[a] * m[b];
            cov(a, a) += post.weights[i] * post.var;
        }
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) cov(a, b) -= mean[a] * mean[b];
    return cov;
}

Vec tweedie_mean(const GaussianMixture& gmm, double sigma_t, const Vec& x_t) {
    Vec m = x_t;
    if (sigma_t == 0.0) return m;
    axpy(sigma_t * sigma_t, score(gmm, sigma_t, x_t), m);
    return m;
}

Mat tweedie_cov(const GaussianMixture& gmm, double sigma_t, const Vec& x_t) {
    if (!(sigma_t > 0.0)) throw std::invalid_argument("tweedie_cov: sigma_t must be > 0");
    const double t2 = sigma_t * sigma_t;
    Mat cov = score_hessian(gmm, sigma_t, x_t);
    for (double& c : cov.data) c *= t2 * t2;
    for (std::size_t a = 0; a < cov.rows; ++a) cov(a, a) += t2;
    return cov;
}

std::size_t nearest_mode(const GaussianMixture& gmm, const Vec& x) {
    check_point(gmm, x);
    std::size_t best = 0;
    double best_d = dist2(x, gmm.means[0]);
    for (std::size_t i = 1; i < gmm.components(); ++i) {
        const double d = dist2(x, gmm.means[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Vec sample_prior(const GaussianMixture& gmm, RngStream& rng) {
    const std::size_t i = rng.categorical(gmm.weights);
    Vec x = gmm.means[i];
    for (std::size_t j = 0; j < gmm.dim; ++j) x[j] += gmm.sigma * rng.normal();
    return x;
}

Vec sample_exact_posterior(const PosteriorMixture& post, RngStream& rng) {
    const std::size_t i = rng.categorical(post.weights);
    Vec x = post.means[i];
    const double s = std::sqrt(post.var);
    for (double& xj : x) xj += s * rng.normal();
    return x;
}

Vec sample_gaussian(const Vec& mean, const Mat& cov, RngStream& rng) {
    const Mat l = cholesky_psd(cov);
    const Vec z = rng.normal_vec(mean.size());
    Vec x = mean;
    for (std::size_t i = 0; i < mean.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) x[i] += l(i, j) * z[j];
    return x;
}

}  // namespace dislab
