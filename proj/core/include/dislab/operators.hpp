#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dislab/linalg.hpp"
#include "dislab/mixture.hpp"
#include "dislab/rng.hpp"

namespace dislab {

// Small dense tanh network with linear logits output. Parameters are plain
// matrices; forward and input-gradient backprop are hand-written.
struct MlpNetwork {
    std::vector<std::size_t> sizes;  // e.g. {2, 16, 5}
    std::vector<Mat> w;              // w[l]: sizes[l+1] x sizes[l]
    std::vector<Vec> b;

    std::size_t input_dim() const { return sizes.front(); }
    std::size_t output_dim() const { return sizes.back(); }

    Vec forward(const Vec& x) const;

    // Forward pass keeping activations; backprop of dL/dlogits to dL/dx.
    struct Tape {
        std::vector<Vec> activations;  // a[0] = x, a[L] = logits
    };
    Vec forward(const Vec& x, Tape& tape) const;
    Vec input_grad(const Tape& tape, const Vec& dlogits) const;

    // Parameter-gradient step used by training.
    void accumulate_grads(const Tape& tape, const Vec& dlogits, std::vector<Mat>& gw,
                          std::vector<Vec>& gb) const;
};

MlpNetwork make_mlp(const std::vector<std::size_t>& sizes, RngStream& rng);

std::string mlp_to_json(const MlpNetwork& net);
MlpNetwork mlp_from_json(const std::string& text);
void save_mlp(const MlpNetwork& net, const std::string& path);
MlpNetwork load_mlp(const std::string& path);

enum class DistanceKind { mse, cross_entropy };
DistanceKind distance_from_string(const std::string& s);
std::string to_string(DistanceKind d);

enum class OperatorKind { linear, mlp };

// Measurement target: a vector for mse, a class index for cross-entropy.
struct Target {
    Vec y;                  // mse target
    std::size_t label = 0;  // cross-entropy target
};

// Measurement operator f with a distance d(f(x), y), optional randomized
// smoothing on the input (noise treated as a constant during
// differentiation), and vector-Jacobian support for guidance gradients.
struct MeasurementOperator {
    OperatorKind kind = OperatorKind::linear;
    Mat a;           // linear map, m x d
    MlpNetwork net;  // mlp operator
    DistanceKind distance = DistanceKind::mse;
    double smoothing_tau = 0.0;

    std::size_t input_dim() const { return kind == OperatorKind::linear ? a.cols : net.input_dim(); }
    std::size_t output_dim() const { return kind == OperatorKind::linear ? a.rows : net.output_dim(); }
};

MeasurementOperator make_linear_operator(Mat a, DistanceKind distance = DistanceKind::mse,
                                         double smoothing_tau = 0.0);
MeasurementOperator make_mlp_operator(MlpNetwork net,
                                      DistanceKind distance = DistanceKind::cross_entropy,
                                      double smoothing_tau = 0.0);

// f(x + tau * eps); deterministic when smoothing_tau == 0.
Vec apply(const MeasurementOperator& op, const Vec& x, RngStream& rng);

struct LossResult {
    double loss = 0.0;
    Vec grad_x;  // d loss / d x (through the smoothed input, noise constant)
};

// Loss and gradient share a single smoothing draw.
LossResult loss_and_grad(const MeasurementOperator& op, const Vec& x, const Target& target,
                         RngStream& rng);
double loss(const MeasurementOperator& op, const Vec& x, const Target& target, RngStream& rng);
Vec loss_grad_x(const MeasurementOperator& op, const Vec& x, const Target& target,
                RngStream& rng);

struct TrainingParams {
    std::size_t samples = 4000;
    std::size_t epochs = 40;
    double lr = 0.05;
    std::size_t batch = 32;
    std::size_t hidden = 16;
    std::uint64_t seed = 0;
};

// Trains a classifier of Voronoi (nearest-mode) labels of exact prior draws
// by minibatch gradient descent on cross-entropy. Deterministic per seed.
MlpNetwork train_mlp(const GaussianMixture& gmm, const TrainingParams& params);

// Fraction of correctly classified held-out prior draws.
double classifier_accuracy(const MlpNetwork& net, const GaussianMixture& gmm,
                           std::size_t n_samples, RngStream& rng);

}  // namespace dislab
