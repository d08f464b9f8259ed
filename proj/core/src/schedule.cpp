#include "dislab/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "dislab/errors.hpp"

namespace dislab {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "karras") return ScheduleKind::karras;
    if (s == "quadratic") return ScheduleKind::quadratic;
    if (s == "linear") return ScheduleKind::linear;
    throw ConfigError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::karras: return "karras";
        case ScheduleKind::quadratic: return "quadratic";
        case ScheduleKind::linear: return "linear";
    }
    return "?";
}

NoiseSchedule make_schedule(ScheduleKind kind, double sigma_min, double sigma_max,
                            std::size_t steps, double rho) {
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
        throw ConfigError("make_schedule: need 0 < sigma_min < sigma_max");
    if (steps < 2) throw ConfigError("make_schedule: steps must be >= 2");
    if (!(rho > 0.0)) throw ConfigError("make_schedule: rho must be positive");

    NoiseSchedule sch;
    sch.kind = kind;
    sch.sigma_min = sigma_min;
    sch.sigma_max = sigma_max;
    sch.steps = steps;
    sch.rho = rho;
    sch.levels.resize(steps);
    sch.times.resize(steps);

    const double n1 = static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < steps; ++i) {
        const double frac = static_cast<double>(i) / n1;
        switch (kind) {
            case ScheduleKind::karras: {
                const double a = std::pow(sigma_max, 1.0 / rho);
                const double b = std::pow(sigma_min, 1.0 / rho);
                sch.levels[i] = std::pow(a + frac * (b - a), rho);
                sch.times[i] = 1.0 - frac;
                break;
            }
            case ScheduleKind::quadratic:
                // sigma(t) = t, so the time grid is the sigma grid itself
                sch.levels[i] = sigma_max + frac * (sigma_min - sigma_max);
                sch.times[i] = sch.levels[i];
                break;
            case ScheduleKind::linear:
                sch.levels[i] = sigma_max + frac * (sigma_min - sigma_max);
                sch.times[i] = 1.0 - frac;
                break;
        }
    }
    sch.levels.front() = sigma_max;
    sch.levels.back() = sigma_min;
    for (std::size_t i = 0; i + 1 < steps; ++i)
        if (!(sch.levels[i] > sch.levels[i + 1]))
            throw ConfigError("make_schedule: levels not strictly decreasing");
    return sch;
}

double NoiseSchedule::dsigma2_dt(double sigma_t) const {
    // Discrete difference quotient on the bracketing grid cell; clamped to
    // the end cells outside the ladder range.
    std::size_t i = 0;
    while (i + 2 < levels.size() && sigma_t <= levels[i + 1]) ++i;
    const double ds2 = levels[i] * levels[i] - levels[i + 1] * levels[i + 1];
    const double dt = times[i] - times[i + 1];
    return ds2 / dt;
}

Vec forward_perturb(const Vec& x0, double sigma_t, RngStream& rng) {
    if (!(sigma_t >= 0.0)) throw std::invalid_argument("forward_perturb: sigma_t must be >= 0");
    Vec x = x0;
    for (double& xi : x) xi += sigma_t * rng.normal();
    return x;
}

Vec bridge_sample(const Vec& x_t, const Vec& x0, double sigma_t, double sigma_prev,
                  RngStream& rng) {
    if (!(sigma_prev >= 0.0) || !(sigma_prev < sigma_t))
        throw OrderingError("bridge_sample: need 0 <= sigma_prev < sigma_t");
    if (x_t.size() != x0.size()) throw ShapeError("bridge_sample: dimension mismatch");
    const double t2 = sigma_t * sigma_t;
    const double p2 = sigma_prev * sigma_prev;
    const double w0 = (t2 - p2) / t2;
    const double wt = p2 / t2;
    const double std_dev = std::sqrt(p2 * (t2 - p2) / t2);
    Vec x(x_t.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = w0 * x0[i] + wt * x_t[i] + std_dev * rng.normal();
    return x;
}

}  // namespace dislab
