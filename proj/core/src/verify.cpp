#include "dislab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dislab/parallel.hpp"

namespace dislab {

namespace {

// marginal draw at a log-uniform noise level in [lo, hi]
std::pair<double, Vec> random_level_point(const GaussianMixture& gmm, RngStream& rng, double lo,
                                          double hi) {
    const double sigma_t = lo * std::exp(rng.uniform() * std::log(hi / lo));
    Vec x = sample_prior(gmm, rng);
    for (double& v : x) v += sigma_t * rng.normal();
    return {sigma_t, x};
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

}  // namespace

TweedieOracleResult check_tweedie_oracles(const GaussianMixture& gmm, std::size_t n,
                                          std::uint64_t seed) {
    RngStream rng = make_stream(seed, 0, "tweedie-oracle");
    TweedieOracleResult res;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [sigma_t, x] = random_level_point(gmm, rng, 0.01, 4.0);
        const Vec tm = tweedie_mean(gmm, sigma_t, x);
        const Vec pm = posterior_mean(gmm, sigma_t, x);
        const double mean_err = norm2(tm - pm) / (1.0 + norm2(x));
        res.max_mean_err = std::max(res.max_mean_err, mean_err);
        const double cov_err = frobenius_distance(tweedie_cov(gmm, sigma_t, x),
                                                  posterior_cov(gmm, sigma_t, x));
        res.max_cov_err = std::max(res.max_cov_err, cov_err);
    }
    res.pass_mean = res.max_mean_err <= 1e-8;
    res.pass_cov = res.max_cov_err <= 1e-6;
    return res;
}

double check_lemma_equivalence(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                               std::size_t n, std::uint64_t seed, double fault_eps) {
    RngStream rng = make_stream(seed, 0, "lemma-equivalence");
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [sigma_t, x] =
            random_level_point(gmm, rng, schedule.sigma_min, schedule.sigma_max);
        const Vec v_weighted = velocity(gmm, schedule, sigma_t, x);
        Vec s = score(gmm, sigma_t, x);
        s[0] += fault_eps;
        const double ds2 = schedule.dsigma2_dt(sigma_t);
        Vec v_score(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) v_score[j] = -0.5 * ds2 * s[j];
        max_err = std::max(max_err, norm2(v_weighted - v_score));
    }
    return max_err;
}

double check_closed_form_ode(std::size_t n, std::uint64_t seed, std::size_t ode_steps) {
    const double sigma_c = 0.1;
    const GaussianMixture gmm(1, {{0.0}}, sigma_c);
    const NoiseSchedule schedule =
        make_schedule(ScheduleKind::quadratic, 1e-4, 2.0, 101);
    RngStream rng = make_stream(seed, 0, "closed-form-ode");
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.3, 2.0);
        const double x = rng.uniform(-3.0, 3.0);
        const Vec phi = solve_pf_ode(gmm, schedule, t, {x}, ode_steps);
        const double expected = x * std::sqrt(sigma_c * sigma_c / (sigma_c * sigma_c + t * t));
        max_err = std::max(max_err, std::abs(phi[0] - expected));
    }
    return max_err;
}

double check_score_gradient_fd(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed) {
    RngStream rng = make_stream(seed, 0, "score-fd");
    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma_t = 0.05 * std::exp(rng.uniform() * std::log(4.0 / 0.05));
        const double radius = 3.0 * 4.0;  // |x| <= 3 sigma_max
        Vec x(gmm.dim);
        for (double& v : x) v = rng.uniform(-radius, radius) / std::sqrt((double)gmm.dim);
        const Vec s = score(gmm, sigma_t, x);
        for (std::size_t j = 0; j < gmm.dim; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (log_marginal_density(gmm, sigma_t, xp) -
                               log_marginal_density(gmm, sigma_t, xm)) /
                              (2.0 * h);
            max_err = std::max(max_err, std::abs(s[j] - fd));
        }
    }
    return max_err;
}

double check_hessian_fd(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed) {
    RngStream rng = make_stream(seed, 0, "hessian-fd");
    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma_t = 0.1 * std::exp(rng.uniform() * std::log(4.0 / 0.1));
        Vec x(gmm.dim);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        const Mat hess = score_hessian(gmm, sigma_t, x);
        for (std::size_t j = 0; j < gmm.dim; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Vec sp = score(gmm, sigma_t, xp);
            const Vec sm = score(gmm, sigma_t, xm);
            for (std::size_t a = 0; a < gmm.dim; ++a) {
                const double fd = (sp[a] - sm[a]) / (2.0 * h);
                max_err = std::max(max_err, std::abs(hess(a, j) - fd));
            }
        }
    }
    return max_err;
}

double check_consistency_jacobian_fd(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                                     std::size_t n, std::uint64_t seed, std::size_t ode_steps) {
    RngStream rng = make_stream(seed, 0, "jacobian-fd");
    const ConsistencyFunction cf(gmm, schedule, ode_steps);
    const double h = 1e-4;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma_t =
            schedule.sigma_min * 20.0 *
            std::exp(rng.uniform() * std::log(schedule.sigma_max / (schedule.sigma_min * 20.0)));
        Vec x(gmm.dim);
        for (double& v : x) v = rng.uniform(-1.5, 1.5);
        const SensitivityResult sr = consistency_jacobian(cf, sigma_t, x);
        double scale = 0.0;
        for (double v : sr.jacobian.data) scale = std::max(scale, std::abs(v));
        scale = std::max(scale, 1.0);
        for (std::size_t j = 0; j < gmm.dim; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Vec fp = consistency_apply(cf, sigma_t, xp);
            const Vec fm = consistency_apply(cf, sigma_t, xm);
            for (std::size_t a = 0; a < gmm.dim; ++a) {
                const double fd = (fp[a] - fm[a]) / (2.0 * h);
                max_rel = std::max(max_rel, std::abs(sr.jacobian(a, j) - fd) / scale);
            }
        }
    }
    return max_rel;
}

double posterior_quadrature_mass(const GaussianMixture& gmm, double sigma_t, const Vec& x_t,
                                 std::size_t grid_points) {
    if (gmm.dim != 2) throw ShapeError("posterior_quadrature_mass: 2-d only");
    const PosteriorMixture post = exact_posterior(gmm, sigma_t, x_t);
    double lo0 = INFINITY, hi0 = -INFINITY, lo1 = INFINITY, hi1 = -INFINITY;
    for (const auto& m : post.means) {
        lo0 = std::min(lo0, m[0]);
        hi0 = std::max(hi0, m[0]);
        lo1 = std::min(lo1, m[1]);
        hi1 = std::max(hi1, m[1]);
    }
    const double pad = 6.0 * std::sqrt(std::max(post.var, gmm.sigma * gmm.sigma));
    lo0 -= pad;
    hi0 += pad;
    lo1 -= pad;
    hi1 += pad;
    const std::size_t n = grid_points;
    const double h0 = (hi0 - lo0) / static_cast<double>(n - 1);
    const double h1 = (hi1 - lo1) / static_cast<double>(n - 1);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            row += wj * post.density({lo0 + h0 * static_cast<double>(i),
                                      lo1 + h1 * static_cast<double>(j)});
        }
        mass += wi * row;
    }
    return mass * h0 * h1;
}

MarginalPreservationResult check_marginal_preservation(const GaussianMixture& gmm,
                                                       const NoiseSchedule& schedule,
                                                       std::size_t n, std::uint64_t seed,
                                                       std::size_t ode_steps,
                                                       std::size_t threads) {
    const std::size_t n_modes = gmm.components();
    std::vector<std::size_t> mode_of(n);
    std::vector<double> sqdist_of(n);
    parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng = make_stream(seed, i, "marginal-pushforward");
        Vec x(gmm.dim);
        for (double& v : x) v = schedule.sigma_max * rng.normal();
        const Vec phi = solve_pf_ode(gmm, schedule, schedule.sigma_max, x, ode_steps);
        const std::size_t k = nearest_mode(gmm, phi);
        mode_of[i] = k;
        sqdist_of[i] = dist2(phi, gmm.means[k]);
    });

    MarginalPreservationResult res;
    res.mode_counts.assign(n_modes, 0);
    std::vector<double> sq_sums(n_modes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        ++res.mode_counts[mode_of[i]];
        sq_sums[mode_of[i]] += sqdist_of[i];
    }
    res.chi2 = chi_square_uniform(res.mode_counts);
    res.chi2_critical = chi_square_critical_99(n_modes - 1);
    for (std::size_t k = 0; k < n_modes; ++k) {
        if (res.mode_counts[k] == 0) {
            res.max_std_rel_dev = INFINITY;
            continue;
        }
        const double var = sq_sums[k] / (static_cast<double>(res.mode_counts[k]) *
                                         static_cast<double>(gmm.dim));
        const double rel = std::abs(std::sqrt(var) / gmm.sigma - 1.0);
        res.max_std_rel_dev = std::max(res.max_std_rel_dev, rel);
    }
    res.pass = res.chi2 < res.chi2_critical && res.max_std_rel_dev <= 0.05;
    return res;
}

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
    const GaussianMixture toy = toy_five_gmm();
    const NoiseSchedule schedule = make_schedule(ScheduleKind::karras, 0.002, 4.0, 100);
    std::vector<CheckResult> checks;

    {
        const auto r = check_tweedie_oracles(toy, 1000, opts.seed);
        checks.push_back({"tweedie-mean-oracle", r.pass_mean,
                          fmt("max_err=%.3e tol=1e-8 (relative to 1+|x|)", r.max_mean_err)});
        checks.push_back({"tweedie-cov-oracle", r.pass_cov,
                          fmt("max_frobenius=%.3e tol=1e-6", r.max_cov_err)});
    }
    {
        const double fault = opts.fault_score ? 1e-3 : 0.0;
        const double err = check_lemma_equivalence(toy, schedule, 1000, opts.seed, fault);
        checks.push_back({"pf-ode-velocity-equivalence", err <= 1e-10,
                          fmt("max_err=%.3e tol=1e-10", err)});
    }
    {
        const double err = check_score_gradient_fd(toy, 100, opts.seed);
        checks.push_back({"score-gradient-fd", err <= 1e-5, fmt("max_err=%.3e tol=1e-5", err)});
    }
    {
        const double err = check_hessian_fd(toy, 50, opts.seed);
        checks.push_back({"score-hessian-fd", err <= 1e-5, fmt("max_err=%.3e tol=1e-5", err)});
    }
    {
        const double err = check_closed_form_ode(100, opts.seed, 4000);
        checks.push_back({"pf-ode-closed-form", err <= 1e-4, fmt("max_err=%.3e tol=1e-4", err)});
    }
    {
        const double err = check_consistency_jacobian_fd(toy, schedule, 25, opts.seed, 200);
        checks.push_back({"consistency-jacobian-fd", err <= 1e-4,
                          fmt("max_rel_err=%.3e tol=1e-4", err)});
    }
    {
        const double mass = posterior_quadrature_mass(toy, 0.7, {0.4, -0.2});
        checks.push_back({"posterior-normalization", std::abs(mass - 1.0) <= 1e-3,
                          fmt("mass=%.6f tol=1e-3", mass)});
    }
    {
        RngStream rng = make_stream(opts.seed, 0, "voronoi-argmax");
        bool ok = true;
        for (std::size_t i = 0; i < 500 && ok; ++i) {
            const double sigma_t = 0.01 * std::exp(rng.uniform() * std::log(400.0));
            Vec x(2);
            for (double& v : x) v = rng.uniform(-2.5, 2.5);
            const auto post = exact_posterior(toy, sigma_t, x);
            const std::size_t am = static_cast<std::size_t>(
                std::max_element(post.weights.begin(), post.weights.end()) -
                post.weights.begin());
            ok = am == nearest_mode(toy, x);
        }
        checks.push_back({"posterior-argmax-voronoi", ok, ok ? "500/500 agree" : "disagreement"});
    }
    {
        const auto r =
            check_marginal_preservation(toy, schedule, 2000, opts.seed, 200, opts.threads);
        checks.push_back({"pf-ode-marginal-preservation", r.pass,
                          fmt("chi2=%.2f crit=%.2f", r.chi2, r.chi2_critical) +
                              fmt(" max_std_rel_dev=%.4f tol=0.05", r.max_std_rel_dev)});
    }
    {
        const auto rep = verify_density_bound(toy, schedule, 1.0, 300, opts.seed, 200, opts.threads);
        checks.push_back(
            {"posterior-density-lower-bound", rep.n_violations == 0,
             fmt("violations=%.0f qualifying=%.0f", static_cast<double>(rep.n_violations),
                 static_cast<double>(rep.n_qualifying))});
    }
    return checks;
}

}  // namespace dislab
