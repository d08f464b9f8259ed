#pragma once

#include <cstddef>
#include <vector>

#include "dislab/linalg.hpp"
#include "dislab/rng.hpp"

namespace dislab {

// Isotropic Gaussian mixture prior: N components, shared per-component
// std sigma, optional non-uniform weights. All densities, scores and
// posteriors below are exact closed forms.
struct GaussianMixture {
    std::size_t dim = 0;
    std::vector<Vec> means;
    double sigma = 0.0;
    std::vector<double> weights;  // strictly positive, sums to 1

    GaussianMixture() = default;
    GaussianMixture(std::size_t d, std::vector<Vec> mu, double sigma_component,
                    std::vector<double> w = {});

    std::size_t components() const { return means.size(); }
};

// The five-component R^2 prior used throughout the toy experiments:
// centers (-1,-1), (-1,1), (1,1), (1,-1), (0,0), sigma 0.1, uniform weights.
GaussianMixture toy_five_gmm(double sigma = 0.1);

// Exact posterior p(X0 | Xt = x_t): a reweighted Gaussian mixture whose
// components all share the shrunk isotropic variance var = s^2.
struct PosteriorMixture {
    std::vector<double> weights;  // u~_i, sum to 1
    std::vector<Vec> means;       // m_i = (sigma^2 x_t + sigma_t^2 mu_i) / (sigma^2 + sigma_t^2)
    double var = 0.0;             // s^2 = sigma^2 sigma_t^2 / (sigma^2 + sigma_t^2)

    double log_density(const Vec& x0) const;
    double density(const Vec& x0) const;
};

double log_marginal_density(const GaussianMixture& gmm, double sigma_t, const Vec& x);
double marginal_density(const GaussianMixture& gmm, double sigma_t, const Vec& x);

// Softmax responsibilities of the smoothed mixture at noise level sigma_t.
// These double as the exact posterior component weights.
std::vector<double> component_weights(const GaussianMixture& gmm, double sigma_t, const Vec& x);

Vec score(const GaussianMixture& gmm, double sigma_t, const Vec& x);
Mat score_hessian(const GaussianMixture& gmm, double sigma_t, const Vec& x);

PosteriorMixture exact_posterior(const GaussianMixture& gmm, double sigma_t, const Vec& x_t);

Vec posterior_mean(const GaussianMixture& gmm, double sigma_t, const Vec& x_t);
Mat posterior_cov(const GaussianMixture& gmm, double sigma_t, const Vec& x_t);

// First- and second-order denoising identities: the mean is
// x_t + sigma_t^2 * score, the covariance sigma_t^2 (I + sigma_t^2 * hessian).
Vec tweedie_mean(const GaussianMixture& gmm, double sigma_t, const Vec& x_t);
Mat tweedie_cov(const GaussianMixture& gmm, double sigma_t, const Vec& x_t);

// Argmin of the distance to the component means; ties resolved to the
// lowest index.
std::size_t nearest_mode(const GaussianMixture& gmm, const Vec& x);

Vec sample_prior(const GaussianMixture& gmm, RngStream& rng);
Vec sample_exact_posterior(const PosteriorMixture& post, RngStream& rng);

// Gaussian draw from N(mean, cov) via Cholesky; cov must be symmetric PSD.
Vec sample_gaussian(const Vec& mean, const Mat& cov, RngStream& rng);

}  // namespace dislab
