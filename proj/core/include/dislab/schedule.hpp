#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dislab/linalg.hpp"
#include "dislab/rng.hpp"

namespace dislab {

enum class ScheduleKind { karras, quadratic, linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Descending noise ladder sigma_max = levels[0] > ... > levels[T-1] = sigma_min,
// together with the time grid that defines the discrete d(sigma^2)/dt
// accessor. Immutable after construction.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::karras;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    std::size_t steps = 0;
    double rho = 7.0;
    std::vector<double> levels;  // descending sigma
    std::vector<double> times;   // descending alongside levels; sigma grows with t

    double dsigma2_dt(double sigma_t) const;
};

// Default terminal level, the published convention for this ladder family.
inline constexpr double kDefaultSigmaMin = 0.002;

NoiseSchedule make_schedule(ScheduleKind kind, double sigma_min, double sigma_max,
                            std::size_t steps, double rho = 7.0);

// Forward smoothing kernel: x0 + sigma_t * eps.
Vec forward_perturb(const Vec& x0, double sigma_t, RngStream& rng);

// Bridge q(X_prev | X_t = x_t, X_0 = x0) of the variance-exploding chain.
Vec bridge_sample(const Vec& x_t, const Vec& x0, double sigma_t, double sigma_prev,
                  RngStream& rng);

}  // namespace dislab
