#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dislab/linalg.hpp"
#include "dislab/mixture.hpp"
#include "dislab/rng.hpp"
#include "dislab/schedule.hpp"

namespace dislab {

enum class IntegratorMethod { heun, euler };

IntegratorMethod integrator_method_from_string(const std::string& s);

inline constexpr std::size_t kDefaultIntegratorSteps = 80;
// Step budget of the dense run used as ground truth for ODE values.
inline constexpr std::size_t kReferenceIntegratorSteps = 10000;

// Time-parametrized velocity field of the probability-flow ODE, written as
// the softmax-weighted sum over component directions. Must agree with
// -1/2 d(sigma^2)/dt * score to floating-point accuracy; both routes are
// exposed so the equivalence is testable.
Vec velocity(const GaussianMixture& gmm, const NoiseSchedule& schedule, double sigma_t,
             const Vec& x);

// Integrates dX/dsigma = -sigma * score(sigma, X) from sigma_start down to
// schedule.sigma_min and returns the terminal state. Throws
// IntegrationError (with the failing sigma) if the state leaves the finite
// range.
Vec solve_pf_ode(const GaussianMixture& gmm, const NoiseSchedule& schedule, double sigma_start,
                 const Vec& x, std::size_t steps = kDefaultIntegratorSteps,
                 IntegratorMethod method = IntegratorMethod::heun);

struct SensitivityResult {
    Vec value;     // terminal state Phi(x)
    Mat jacobian;  // d Phi / d x
};

// One-step solution map of the PF-ODE ("perfect" distillation): the exact
// integral at a configurable step budget stands in for a learned one-step
// network.
struct ConsistencyFunction {
    GaussianMixture gmm;
    double sigma_min = kDefaultSigmaMin;
    std::size_t integrator_steps = kDefaultIntegratorSteps;
    IntegratorMethod method = IntegratorMethod::heun;

    ConsistencyFunction() = default;
    ConsistencyFunction(GaussianMixture g, const NoiseSchedule& schedule,
                        std::size_t steps = kDefaultIntegratorSteps,
                        IntegratorMethod m = IntegratorMethod::heun);
};

Vec consistency_apply(const ConsistencyFunction& cf, double sigma_t, const Vec& x);

// Value plus dense Jacobian, propagated by the forward sensitivity system
// J' = dv/dx * J integrated alongside the state with J(sigma_t) = I.
SensitivityResult consistency_jacobian(const ConsistencyFunction& cf, double sigma_t,
                                       const Vec& x);

// One reverse-diffusion transition: x + (sigma_t^2 - sigma_prev^2) * score
// plus sqrt(sigma_t^2 - sigma_prev^2) noise.
Vec ancestral_step(const GaussianMixture& gmm, double sigma_t, double sigma_prev, const Vec& x,
                   RngStream& rng);

// Full ladder of ancestral steps from N(0, sigma_max^2 I); returns the state
// at every schedule level (length = schedule.steps).
std::vector<Vec> sample_unconditional(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                                      RngStream& rng);

}  // namespace dislab
