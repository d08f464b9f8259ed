#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dislab/analysis.hpp"
#include "dislab/dynamics.hpp"
#include "dislab/mixture.hpp"
#include "dislab/schedule.hpp"

namespace dislab {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;  // measured margin vs threshold
};

struct TweedieOracleResult {
    double max_mean_err = 0.0;      // against 1e-8 * (1 + |x_t|), normalized
    double max_cov_err = 0.0;       // Frobenius
    bool pass_mean = false;
    bool pass_cov = false;
};

// |tweedie_mean - posterior_mean| and |tweedie_cov - posterior_cov|_F over
// random (x_t, sigma_t) drawn from the marginal at log-uniform noise levels.
TweedieOracleResult check_tweedie_oracles(const GaussianMixture& gmm, std::size_t n,
                                          std::uint64_t seed);

// Max disagreement between the weighted-sum velocity and
// -1/2 d(sigma^2)/dt * score. fault_eps shifts one score coordinate; the
// verify command uses it to prove the harness can fail.
double check_lemma_equivalence(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                               std::size_t n, std::uint64_t seed, double fault_eps = 0.0);

// Single-Gaussian quadratic-schedule integration against the separable
// closed form mu + (x - mu) sqrt(sigma^2 / (sigma^2 + t^2)).
double check_closed_form_ode(std::size_t n, std::uint64_t seed, std::size_t ode_steps);

// Max |score - central FD of log marginal| over random points.
double check_score_gradient_fd(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed);
// Max |hessian - central FD of score| over random points.
double check_hessian_fd(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed);
// Max relative |sensitivity jacobian - central FD of the solution map|.
double check_consistency_jacobian_fd(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                                     std::size_t n, std::uint64_t seed, std::size_t ode_steps);

// 2-d trapezoid quadrature of the exact posterior over means +- 6 sigma.
double posterior_quadrature_mass(const GaussianMixture& gmm, double sigma_t, const Vec& x_t,
                                 std::size_t grid_points = 801);

struct MarginalPreservationResult {
    std::vector<std::size_t> mode_counts;
    double chi2 = 0.0;
    double chi2_critical = 0.0;
    double max_std_rel_dev = 0.0;  // worst per-mode scatter deviation from sigma
    bool pass = false;
};

// Pushes N(0, sigma_max^2 I) draws through the PF-ODE and checks uniform
// mode assignment plus per-mode scatter.
MarginalPreservationResult check_marginal_preservation(const GaussianMixture& gmm,
                                                       const NoiseSchedule& schedule,
                                                       std::size_t n, std::uint64_t seed,
                                                       std::size_t ode_steps,
                                                       std::size_t threads);

struct VerifyOptions {
    std::uint64_t seed = 20240901;
    std::size_t threads = 1;
    bool fault_score = false;  // test hook: corrupt one route of the lemma check
};

// The fast invariant suite behind the `verify` command.
std::vector<CheckResult> run_verification(const VerifyOptions& opts);

}  // namespace dislab
