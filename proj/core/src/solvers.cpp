#include "dislab/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "dislab/errors.hpp"

namespace dislab {

SolverKind solver_kind_from_string(const std::string& s) {
    if (s == "dps") return SolverKind::dps;
    if (s == "freedom") return SolverKind::freedom;
    if (s == "mpgd") return SolverKind::mpgd;
    if (s == "lgd") return SolverKind::lgd;
    if (s == "stsl") return SolverKind::stsl;
    if (s == "proposed1") return SolverKind::proposed1;
    if (s == "cm") return SolverKind::cm;
    if (s == "proposed2") return SolverKind::proposed2;
    throw ConfigError("unknown solver: " + s);
}

std::string to_string(SolverKind k) {
    switch (k) {
        case SolverKind::dps: return "dps";
        case SolverKind::freedom: return "freedom";
        case SolverKind::mpgd: return "mpgd";
        case SolverKind::lgd: return "lgd";
        case SolverKind::stsl: return "stsl";
        case SolverKind::proposed1: return "proposed1";
        case SolverKind::cm: return "cm";
        case SolverKind::proposed2: return "proposed2";
    }
    return "?";
}

void SolverConfig::validate(const NoiseSchedule& schedule) const {
    if (zeta < 0.0 || zeta2 < 0.0) throw ConfigError("solver config: zeta must be >= 0");
    if (tau < 0.0) throw ConfigError("solver config: tau must be >= 0");
    if (r_t < 0.0) throw ConfigError("solver config: r_t must be >= 0");
    if (eta < 0.0) throw ConfigError("solver config: eta must be >= 0");
    if (inner_iters < 1) throw ConfigError("solver config: inner iteration count must be >= 1");
    if (travel_hi >= travel_lo && travel_hi > schedule.steps)
        throw ConfigError("solver config: travel range exceeds schedule steps");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] > schedule.sigma_min) || !(ts[i] <= schedule.sigma_max))
            throw ConfigError("solver config: ts level outside schedule sigma range");
        if (i > 0 && !(ts[i] < ts[i - 1]))
            throw ConfigError("solver config: ts must be strictly monotone");
    }
}

namespace {

constexpr double kDivergenceNorm = 1e3;

void guard(const Vec& x, std::size_t step, const char* who) {
    if (!all_finite(x)) throw SolverDivergence(std::string(who) + ": non-finite state", step);
    if (norm2(x) > kDivergenceNorm)
        throw SolverDivergence(std::string(who) + ": state norm exceeded limit", step);
}

struct RunStreams {
    RngStream ancestral;  // path noise: init draw, ancestral/bridge/re-noise
    RngStream approx;     // approximation noise: lgd r_t, tau, stsl probe
    RngStream smoothing;  // operator input smoothing
    RngStream stage_z;    // cm/proposed2 per-stage z draws
};

RunStreams make_run_streams(const SolverConfig& cfg, std::uint64_t run_index) {
    return RunStreams{make_stream(cfg.seed, run_index, "ancestral"),
                      make_stream(cfg.seed, run_index, "approx"),
                      make_stream(cfg.seed, run_index, "smoothing"),
                      make_stream(cfg.seed, run_index, "stage-z")};
}

StepRecord make_record(const Problem& p, double sigma_t, const Vec& x, const Vec& x0t,
                       double loss_value) {
    StepRecord rec;
    rec.sigma_t = sigma_t;
    rec.x = x;
    rec.x0t = x0t;
    rec.loss = loss_value;
    rec.post_logdensity = exact_posterior(p.gmm, sigma_t, x).log_density(x0t);
    rec.prior_logdensity = log_marginal_density(p.gmm, 0.0, x0t);
    return rec;
}

double effective_zeta(const SolverConfig& cfg, double loss_value) {
    if (!cfg.scale_zeta_by_loss) return cfg.zeta;
    return cfg.zeta / std::max(std::sqrt(2.0 * loss_value), 1e-6);
}

// Stage ladder shared by cm and proposed2: the sigma_max stage plus the
// configured sub-schedule, descending.
std::vector<double> stage_levels(const Problem& p, const SolverConfig& cfg) {
    std::vector<double> stages;
    stages.push_back(p.schedule.sigma_max);
    std::vector<double> ts = cfg.ts;
    std::sort(ts.begin(), ts.end(), std::greater<>());
    stages.insert(stages.end(), ts.begin(), ts.end());
    return stages;
}

Trajectory run_ancestral_family(const Problem& p, const SolverConfig& cfg,
                                std::uint64_t run_index) {
    const auto& levels = p.schedule.levels;
    RunStreams rs = make_run_streams(cfg, run_index);
    const ConsistencyFunction cf(p.gmm, p.schedule, cfg.cm_steps);

    Trajectory traj;
    traj.records.reserve(p.schedule.steps);

    Vec x(p.gmm.dim);
    for (double& xi : x) xi = p.schedule.sigma_max * rs.ancestral.normal();

    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        const double sigma_t = levels[i];
        const double sigma_prev = levels[i + 1];
        const std::size_t step_number = i + 1;  // 1-based from the noisy end

        switch (cfg.solver) {
            case SolverKind::dps:
            case SolverKind::lgd:
            case SolverKind::proposed1: {
                Vec x_next = ancestral_step(p.gmm, sigma_t, sigma_prev, x, rs.ancestral);

                Vec x0t;
                Mat jac;  // only for the cm approximation path
                const bool use_cm =
                    cfg.solver == SolverKind::proposed1 && cfg.approx == ApproxKind::cm;
                if (use_cm) {
                    if (cfg.zeta != 0.0) {
                        SensitivityResult sr = consistency_jacobian(cf, sigma_t, x);
                        x0t = std::move(sr.value);
                        jac = std::move(sr.jacobian);
                    } else {
                        x0t = consistency_apply(cf, sigma_t, x);
                    }
                } else {
                    x0t = tweedie_mean(p.gmm, sigma_t, x);
                }
                if (cfg.solver == SolverKind::lgd && cfg.r_t != 0.0) {
                    const Vec eps = rs.approx.normal_vec(p.gmm.dim);
                    axpy(cfg.r_t, eps, x0t);
                } else if (cfg.solver == SolverKind::proposed1 && cfg.tau != 0.0) {
                    const Vec eps = rs.approx.normal_vec(p.gmm.dim);
                    axpy(cfg.tau, eps, x0t);
                }

                const LossResult lr = loss_and_grad(p.op, x0t, p.target, rs.smoothing);
                const double ze = effective_zeta(cfg, lr.loss);
                if (ze != 0.0) {
                    const Vec g = use_cm ? matvec_transposed(jac, lr.grad_x)
                                         : chain_through_tweedie(p.gmm, sigma_t, x, lr.grad_x);
                    axpy(-ze, g, x_next);
                }
                ++traj.guidance_evals;

                traj.records.push_back(make_record(p, sigma_t, x, x0t, lr.loss));
                x = std::move(x_next);
                break;
            }

            case SolverKind::freedom: {
                const bool travelling =
                    step_number >= cfg.travel_lo && step_number <= cfg.travel_hi;
                for (std::size_t k = cfg.inner_iters; k >= 1; --k) {
                    Vec x_next = ancestral_step(p.gmm, sigma_t, sigma_prev, x, rs.ancestral);
                    const Vec x0t = tweedie_mean(p.gmm, sigma_t, x);
                    const LossResult lr = loss_and_grad(p.op, x0t, p.target, rs.smoothing);
                    const double ze = effective_zeta(cfg, lr.loss);
                    if (ze != 0.0)
                        axpy(-ze, chain_through_tweedie(p.gmm, sigma_t, x, lr.grad_x), x_next);
                    ++traj.guidance_evals;
                    if (k != 1 && travelling) {
                        // forward kernel q(X_t | X_{t-1})
                        const double sd =
                            std::sqrt(sigma_t * sigma_t - sigma_prev * sigma_prev);
                        x = x_next;
                        for (double& xi : x) xi += sd * rs.ancestral.normal();
                        guard(x, i, "freedom");
                    } else {
                        traj.records.push_back(make_record(p, sigma_t, x, x0t, lr.loss));
                        x = std::move(x_next);
                        break;
                    }
                }
                break;
            }

            case SolverKind::mpgd: {
                const Vec x0t = tweedie_mean(p.gmm, sigma_t, x);
                const LossResult lr = loss_and_grad(p.op, x0t, p.target, rs.smoothing);
                Vec x0g = x0t;
                const double ze = effective_zeta(cfg, lr.loss);
                if (ze != 0.0) axpy(-ze, lr.grad_x, x0g);
                ++traj.guidance_evals;
                const Vec x_next = bridge_sample(x, x0g, sigma_t, sigma_prev, rs.ancestral);
                traj.records.push_back(make_record(p, sigma_t, x, x0t, lr.loss));
                x = x_next;
                break;
            }

            case SolverKind::stsl: {
                const Vec x0t = tweedie_mean(p.gmm, sigma_t, x);
                const LossResult lr = loss_and_grad(p.op, x0t, p.target, rs.smoothing);
                Vec xg = x;
                const double ze = effective_zeta(cfg, lr.loss);
                if (ze != 0.0)
                    axpy(-ze, chain_through_tweedie(p.gmm, sigma_t, x, lr.grad_x), xg);
                if (cfg.eta != 0.0) {
                    const Vec eps = rs.approx.normal_vec(p.gmm.dim);
                    const Vec corr = stsl_correction_grad(p.gmm, sigma_t, xg, eps);
                    axpy(-cfg.eta, corr, xg);
                }
                ++traj.guidance_evals;
                guard(xg, i, "stsl");
                const Vec x_next = ancestral_step(p.gmm, sigma_t, sigma_prev, xg, rs.ancestral);
                traj.records.push_back(make_record(p, sigma_t, x, x0t, lr.loss));
                x = x_next;
                break;
            }

            default:
                throw std::logic_error("run_ancestral_family: unexpected solver kind");
        }
        guard(x, i, to_string(cfg.solver).c_str());
    }

    // terminal record at sigma_min
    {
        const double sigma_t = levels.back();
        const Vec x0t = tweedie_mean(p.gmm, sigma_t, x);
        const double lval = loss(p.op, x0t, p.target, rs.smoothing);
        traj.records.push_back(make_record(p, sigma_t, x, x0t, lval));
    }
    traj.final_x = x;
    return traj;
}

Trajectory run_cm_family(const Problem& p, const SolverConfig& cfg, std::uint64_t run_index) {
    RunStreams rs = make_run_streams(cfg, run_index);
    const ConsistencyFunction cf(p.gmm, p.schedule, cfg.cm_steps);
    const auto stages = stage_levels(p, cfg);

    Trajectory traj;
    traj.records.reserve(stages.size());

    Vec x0(p.gmm.dim, 0.0);
    for (std::size_t n = 0; n < stages.size(); ++n) {
        const double sigma_n = stages[n];
        const double zeta_n =
            cfg.solver == SolverKind::cm ? 0.0 : (n == 0 ? cfg.zeta : cfg.zeta2);
        Vec z = rs.stage_z.normal_vec(p.gmm.dim);

        if (zeta_n == 0.0) {
            // optimization off: plain consistency sampling stage
            Vec x_tn = x0;
            axpy(sigma_n, z, x_tn);
            x0 = consistency_apply(cf, sigma_n, x_tn);
            ++traj.guidance_evals;
            const double lval = loss(p.op, x0, p.target, rs.smoothing);
            traj.records.push_back(make_record(p, sigma_n, x_tn, x0, lval));
        } else {
            Vec x_tn;
            Vec x_tau;
            double last_loss = 0.0;
            for (std::size_t k = 0; k < cfg.inner_iters; ++k) {
                x_tn = x0;
                axpy(sigma_n, z, x_tn);
                SensitivityResult sr = consistency_jacobian(cf, sigma_n, x_tn);
                x0 = std::move(sr.value);
                x_tau = x0;
                if (cfg.tau != 0.0) {
                    const Vec eps = rs.approx.normal_vec(p.gmm.dim);
                    axpy(cfg.tau, eps, x_tau);
                }
                const LossResult lr = loss_and_grad(p.op, x_tau, p.target, rs.smoothing);
                last_loss = lr.loss;
                Vec gz = matvec_transposed(sr.jacobian, lr.grad_x);
                axpy(-zeta_n * sigma_n, gz, z);
                ++traj.guidance_evals;
                guard(z, n, "proposed2");
            }
            traj.records.push_back(make_record(p, sigma_n, x_tn, x_tau, last_loss));
        }
        guard(x0, n, "cm");
    }
    traj.final_x = x0;
    return traj;
}

}  // namespace

Vec chain_through_tweedie(const GaussianMixture& gmm, double sigma_t, const Vec& x_t,
                          const Vec& grad) {
    const Mat h = score_hessian(gmm, sigma_t, x_t);
    Vec out = grad;
    axpy(sigma_t * sigma_t, matvec(h, grad), out);
    return out;
}

Vec stsl_correction_grad(const GaussianMixture& gmm, double sigma_t, const Vec& x,
                         const Vec& eps) {
    Vec x_pert = x + eps;
    const Mat h_pert = score_hessian(gmm, sigma_t, x_pert);
    const Mat h = score_hessian(gmm, sigma_t, x);
    Vec out = matvec(h_pert, eps);
    const Vec base = matvec(h, eps);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= base[i];
    return out;
}

Trajectory run_solver(const Problem& problem, const SolverConfig& config,
                      std::uint64_t run_index) {
    config.validate(problem.schedule);
    if (problem.op.input_dim() != problem.gmm.dim)
        throw ShapeError("run_solver: operator input dimension mismatch");
    switch (config.solver) {
        case SolverKind::cm:
        case SolverKind::proposed2:
            return run_cm_family(problem, config, run_index);
        default:
            return run_ancestral_family(problem, config, run_index);
    }
}

Trajectory sample_cm(const Problem& problem, const SolverConfig& config,
                     std::uint64_t run_index) {
    SolverConfig cm_cfg = config;
    cm_cfg.solver = SolverKind::cm;
    return run_cm_family(problem, cm_cfg, run_index);
}

}  // namespace dislab
