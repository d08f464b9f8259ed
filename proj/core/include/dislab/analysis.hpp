#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dislab/dynamics.hpp"
#include "dislab/mixture.hpp"
#include "dislab/operators.hpp"
#include "dislab/schedule.hpp"
#include "dislab/solvers.hpp"

namespace dislab {

// Exact-posterior log densities of the competing posterior-sample
// approximations at one (x_t, sigma_t), all evaluated through the
// closed-form posterior.
struct ApproximationComparison {
    double sigma_t = 0.0;
    Vec x_t;
    Vec x_ode;   // PF-ODE solution
    Vec x_mean;  // posterior mean
    double post_logdensity_ode = 0.0;
    double post_logdensity_mean = 0.0;
    std::vector<double> post_logdensity_mean_noise;  // mean + N(0, r^2) draws
    std::vector<double> post_logdensity_mean_cov;    // mean + N(0, posterior cov) draws
    double median_mean_noise = 0.0;
    double median_mean_cov = 0.0;
};

ApproximationComparison compare_approximations(const GaussianMixture& gmm,
                                               const NoiseSchedule& schedule, const Vec& x_t,
                                               double sigma_t, double lgd_r, std::size_t n_draws,
                                               std::uint64_t seed,
                                               std::size_t ode_steps = kDefaultIntegratorSteps);

struct GridSpec {
    double xmin = -2.0, xmax = 2.0;
    double ymin = -2.0, ymax = 2.0;
    std::size_t nx = 201, ny = 201;

    std::size_t cells() const { return nx * ny; }
    Vec point(std::size_t i) const;  // cell centers, row-major
};

struct DecisionMap {
    GridSpec grid;
    double sigma_t = 0.0;
    std::vector<int> ode_mode;      // -1 for integration failure
    std::vector<int> voronoi_mode;
    std::vector<std::uint8_t> excluded;  // boundary band or failed cells
    double agreement = 0.0;
    std::size_t n_counted = 0;
    std::size_t n_excluded = 0;
    std::size_t n_failed = 0;
};

// Distance from x to the nearest Voronoi boundary between components.
double voronoi_boundary_distance(const GaussianMixture& gmm, const Vec& x);

DecisionMap decision_map(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                         double sigma_t, const GridSpec& grid,
                         std::size_t ode_steps = kDefaultIntegratorSteps,
                         std::size_t threads = 1, double boundary_band = 0.05);

// Checks the posterior density lower bound for PF-ODE solutions on samples
// from the noise-level marginal. A sample "qualifies" when the solution lies
// inside the concentration sphere of its nearest component.
struct DensityBoundReport {
    double sigma_t = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_qualifying = 0;
    std::size_t n_violations = 0;
    double qualification_rate = 0.0;
    double min_margin = 0.0;  // min over qualifying samples of log density - log bound
};

DensityBoundReport verify_density_bound(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                           double sigma_t, std::size_t n_samples, std::uint64_t seed,
                           std::size_t ode_steps = kDefaultIntegratorSteps,
                           std::size_t threads = 1);

struct BenchTask {
    std::string name;
    SolverConfig config;
};

struct BenchRow {
    std::string name;
    std::size_t runs = 0;
    std::size_t diverged = 0;
    // classification consistency: fraction of finals the evaluation model
    // assigns to the target class (model A = the solver's own operator)
    double model_a_accuracy = -1.0;
    double model_b_accuracy = -1.0;
    double mse = -1.0;  // linear consistency: mean squared measurement error
    double mean_post_logdensity = 0.0;      // x0t validity, all steps
    double mean_post_logdensity_mid = 0.0;  // x0t validity, steps with sigma_t > component sigma
    double mean_prior_logdensity_final = 0.0;
    std::vector<std::uint8_t> model_a_correct;  // per run, classification only
    std::vector<std::uint8_t> model_b_correct;
};

// Runs each configured solver across n_runs seeded runs and aggregates
// consistency and validity metrics. The evaluation network model_b is never
// the one used inside the solver. Aggregation order is fixed, so results do
// not depend on the thread count.
std::vector<BenchRow> benchmark_solvers(const Problem& problem, const MlpNetwork* model_b,
                                        const std::vector<BenchTask>& tasks, std::size_t n_runs,
                                        std::size_t threads);

struct AblationRow {
    std::string name;
    double tau = 0.0;
    double model_a_accuracy = 0.0;
    double model_b_accuracy = 0.0;
};

// tau sweep of one solver configuration, scored under the in-the-loop model
// (A) and the held-out model (B).
std::vector<AblationRow> overfit_ablation(const Problem& problem, const MlpNetwork& model_b,
                                          const SolverConfig& base_config,
                                          const std::vector<double>& taus, std::size_t n_runs,
                                          std::size_t threads);

double median(std::vector<double> values);

// Pearson chi-square statistic for observed counts against uniform expected.
double chi_square_uniform(const std::vector<std::size_t>& counts);
// Upper critical value at significance alpha = 0.01 for small dof.
double chi_square_critical_99(std::size_t dof);

}  // namespace dislab
