#include "dislab/dynamics.hpp"

#include <cmath>

#include "dislab/errors.hpp"

namespace dislab {

namespace {

// Substep grid between sigma_start and sigma_end: the rho=7 warped spacing
// concentrates substeps at small noise where the flow contracts hardest.
std::vector<double> substep_grid(double sigma_start, double sigma_end, std::size_t steps) {
    constexpr double rho = 7.0;
    std::vector<double> grid(steps + 1);
    const double a = std::pow(sigma_start, 1.0 / rho);
    const double b = std::pow(sigma_end, 1.0 / rho);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(steps);
        grid[i] = std::pow(a + frac * (b - a), rho);
    }
    grid.front() = sigma_start;
    grid.back() = sigma_end;
    return grid;
}

Vec pf_velocity_sigma(const GaussianMixture& gmm, double sigma, const Vec& x) {
    // dX/dsigma = -sigma * score
    Vec v = score(gmm, sigma, x);
    for (double& vi : v) vi *= -sigma;
    return v;
}

void check_state(const Vec& x, double sigma) {
    if (!all_finite(x)) throw IntegrationError("pf-ode: non-finite state", sigma);
}

Vec integrate_sigma(const GaussianMixture& gmm, double sigma_start, double sigma_end,
                    const Vec& x, std::size_t steps, IntegratorMethod method) {
    const auto grid = substep_grid(sigma_start, sigma_end, steps);
    Vec state = x;
    for (std::size_t i = 0; i < steps; ++i) {
        const double sa = grid[i];
        const double sb = grid[i + 1];
        const double h = sb - sa;
        const Vec fa = pf_velocity_sigma(gmm, sa, state);
        if (method == IntegratorMethod::euler) {
            axpy(h, fa, state);
        } else {
            Vec pred = state;
            axpy(h, fa, pred);
            const Vec fb = pf_velocity_sigma(gmm, sb, pred);
            for (std::size_t j = 0; j < state.size(); ++j)
                state[j] += 0.5 * h * (fa[j] + fb[j]);
        }
        check_state(state, sb);
    }
    return state;
}

}  // namespace

IntegratorMethod integrator_method_from_string(const std::string& s) {
    if (s == "heun") return IntegratorMethod::heun;
    if (s == "euler") return IntegratorMethod::euler;
    throw ConfigError("unknown integrator method: " + s);
}

Vec velocity(const GaussianMixture& gmm, const NoiseSchedule& schedule, double sigma_t,
             const Vec& x) {
    const auto w = component_weights(gmm, sigma_t, x);
    const double v = gmm.sigma * gmm.sigma + sigma_t * sigma_t;
    const double ds2 = schedule.dsigma2_dt(sigma_t);
    Vec out(gmm.dim, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < gmm.dim; ++j)
            out[j] += 0.5 * w[i] * ds2 * (x[j] - gmm.means[i][j]) / v;
    return out;
}

Vec solve_pf_ode(const GaussianMixture& gmm, const NoiseSchedule& schedule, double sigma_start,
                 const Vec& x, std::size_t steps, IntegratorMethod method) {
    const double sigma_end = schedule.sigma_min;
    if (!(sigma_start >= sigma_end))
        throw std::invalid_argument("solve_pf_ode: sigma_start below schedule sigma_min");
    if (sigma_start == sigma_end) return x;
    if (steps < 1 || (method == IntegratorMethod::heun && steps < 2))
        throw std::invalid_argument("solve_pf_ode: step budget too small");
    return integrate_sigma(gmm, sigma_start, sigma_end, x, steps, method);
}

ConsistencyFunction::ConsistencyFunction(GaussianMixture g, const NoiseSchedule& schedule,
                                         std::size_t steps, IntegratorMethod m)
    : gmm(std::move(g)), sigma_min(schedule.sigma_min), integrator_steps(steps), method(m) {
    if (m == IntegratorMethod::heun && steps < 2)
        throw std::invalid_argument("ConsistencyFunction: heun needs >= 2 integrator steps");
}

Vec consistency_apply(const ConsistencyFunction& cf, double sigma_t, const Vec& x) {
    if (sigma_t <= cf.sigma_min) return x;
    return integrate_sigma(cf.gmm, sigma_t, cf.sigma_min, x, cf.integrator_steps, cf.method);
}

SensitivityResult consistency_jacobian(const ConsistencyFunction& cf, double sigma_t,
                                       const Vec& x) {
    const std::size_t d = x.size();
    SensitivityResult res;
    res.value = x;
    res.jacobian = Mat::identity(d);
    if (sigma_t <= cf.sigma_min) return res;

    // Joint state (x, J); the state update matches consistency_apply exactly
    // so that value and value-only integration agree bitwise.
    const auto grid = substep_grid(sigma_t, cf.sigma_min, cf.integrator_steps);
    Vec& state = res.value;
    Mat& jac = res.jacobian;
    for (std::size_t i = 0; i < cf.integrator_steps; ++i) {
        const double sa = grid[i];
        const double sb = grid[i + 1];
        const double h = sb - sa;

        const Vec fa = pf_velocity_sigma(cf.gmm, sa, state);
        Mat ha = score_hessian(cf.gmm, sa, state);
        for (double& v : ha.data) v *= -sa;  // dv/dx at sa
        const Mat ja_dot = matmul(ha, jac);

        if (cf.method == IntegratorMethod::euler) {
            axpy(h, fa, state);
            for (std::size_t k = 0; k < jac.data.size(); ++k) jac.data[k] += h * ja_dot.data[k];
        } else {
            Vec pred = state;
            axpy(h, fa, pred);
            Mat jac_pred = jac;
            for (std::size_t k = 0; k < jac.data.size(); ++k)
                jac_pred.data[k] += h * ja_dot.data[k];

            const Vec fb = pf_velocity_sigma(cf.gmm, sb, pred);
            Mat hb = score_hessian(cf.gmm, sb, pred);
            for (double& v : hb.data) v *= -sb;
            const Mat jb_dot = matmul(hb, jac_pred);

            for (std::size_t j = 0; j < state.size(); ++j)
                state[j] += 0.5 * h * (fa[j] + fb[j]);
            for (std::size_t k = 0; k < jac.data.size(); ++k)
                jac.data[k] += 0.5 * h * (ja_dot.data[k] + jb_dot.data[k]);
        }
        check_state(state, sb);
        if (!all_finite(jac)) throw IntegrationError("pf-ode: non-finite sensitivity", sb);
    }
    return res;
}

Vec ancestral_step(const GaussianMixture& gmm, double sigma_t, double sigma_prev, const Vec& x,
                   RngStream& rng) {
    if (!(sigma_prev < sigma_t))
        throw OrderingError("ancestral_step: need sigma_prev < sigma_t");
    const double dv = sigma_t * sigma_t - sigma_prev * sigma_prev;
    const double sd = std::sqrt(dv);
    Vec next = x;
    axpy(dv, score(gmm, sigma_t, x), next);
    for (double& xi : next) xi += sd * rng.normal();
    return next;
}

std::vector<Vec> sample_unconditional(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                                      RngStream& rng) {
    std::vector<Vec> states;
    states.reserve(schedule.steps);
    Vec x(gmm.dim);
    for (double& xi : x) xi = schedule.sigma_max * rng.normal();
    states.push_back(x);
    for (std::size_t i = 0; i + 1 < schedule.steps; ++i) {
        x = ancestral_step(gmm, schedule.levels[i], schedule.levels[i + 1], x, rng);
        states.push_back(x);
    }
    return states;
}

}  // namespace dislab
