#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dislab/dynamics.hpp"
#include "dislab/linalg.hpp"
#include "dislab/mixture.hpp"
#include "dislab/operators.hpp"
#include "dislab/rng.hpp"
#include "dislab/schedule.hpp"

namespace dislab {

enum class SolverKind { dps, freedom, mpgd, lgd, stsl, proposed1, cm, proposed2 };

SolverKind solver_kind_from_string(const std::string& s);
std::string to_string(SolverKind k);

enum class ApproxKind { posterior_mean, cm };

struct SolverConfig {
    SolverKind solver = SolverKind::dps;
    double zeta = 0.0;   // guidance step size (stage 1 for proposed2)
    double zeta2 = 0.0;  // proposed2 step size for later stages
    double tau = 0.0;    // approximation noise (proposed1 / proposed2)
    std::size_t inner_iters = 1;  // freedom time-travel count / proposed2 optimization steps
    // freedom time-travel range, in 1-based schedule steps counted from the
    // noisy end; empty when travel_hi < travel_lo
    std::size_t travel_lo = 1;
    std::size_t travel_hi = 0;
    double r_t = 0.0;  // lgd perturbation std
    double eta = 0.0;  // stsl second-order step
    std::vector<double> ts;  // cm/proposed2 sigma sub-schedule (stored descending)
    ApproxKind approx = ApproxKind::cm;  // proposed1 ablation switch
    std::size_t cm_steps = kDefaultIntegratorSteps;
    bool scale_zeta_by_loss = false;  // zeta_t = zeta / sqrt(2 loss) variant, off by default
    std::uint64_t seed = 0;           // master seed; run streams derive from (seed, run)

    void validate(const NoiseSchedule& schedule) const;
};

struct Problem {
    GaussianMixture gmm;
    NoiseSchedule schedule;
    MeasurementOperator op;
    Target target;
};

struct StepRecord {
    double sigma_t = 0.0;
    Vec x;    // state entering this step
    Vec x0t;  // posterior-sample approximation fed to the operator
    double loss = 0.0;
    double post_logdensity = 0.0;   // exact posterior log p(x0t | x, sigma_t)
    double prior_logdensity = 0.0;  // prior log p(x0t)
};

struct Trajectory {
    std::vector<StepRecord> records;
    Vec final_x;
    std::size_t guidance_evals = 0;  // network-equivalent evaluation count
};

// Runs one seeded solver trajectory. All randomness derives from
// (config.seed, run_index, stream label); a given pair reproduces bitwise.
Trajectory run_solver(const Problem& problem, const SolverConfig& config,
                      std::uint64_t run_index);

// Unconditional few-step consistency sampling over [sigma_max] + ts.
// Shares the stage structure of proposed2 so the zeta = 0 reduction is exact.
Trajectory sample_cm(const Problem& problem, const SolverConfig& config, std::uint64_t run_index);

// Guidance direction through the first-order denoiser: (I + sigma_t^2 H) g.
Vec chain_through_tweedie(const GaussianMixture& gmm, double sigma_t, const Vec& x_t,
                          const Vec& grad);

// Gradient of eps^T (s(x + eps) - s(x)) with respect to x.
Vec stsl_correction_grad(const GaussianMixture& gmm, double sigma_t, const Vec& x,
                         const Vec& eps);

}  // namespace dislab
