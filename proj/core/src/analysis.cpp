#include "dislab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dislab/errors.hpp"
#include "dislab/parallel.hpp"

namespace dislab {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double chi_square_uniform(const std::vector<std::size_t>& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

double chi_square_critical_99(std::size_t dof) {
    // upper 1% tail, dof 1..10
    static const double table[] = {6.635, 9.210, 11.345, 13.277, 15.086,
                                   16.812, 18.475, 20.090, 21.666, 23.209};
    if (dof >= 1 && dof <= 10) return table[dof - 1];
    // Wilson-Hilferty for larger dof
    const double z = 2.3263478740408408;  // Phi^{-1}(0.99)
    const double k = static_cast<double>(dof);
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

ApproximationComparison compare_approximations(const GaussianMixture& gmm,
                                               const NoiseSchedule& schedule, const Vec& x_t,
                                               double sigma_t, double lgd_r, std::size_t n_draws,
                                               std::uint64_t seed, std::size_t ode_steps) {
    if (!(sigma_t > 0.0))
        throw std::invalid_argument("compare_approximations: sigma_t must be > 0");
    const PosteriorMixture post = exact_posterior(gmm, sigma_t, x_t);

    ApproximationComparison cmp;
    cmp.sigma_t = sigma_t;
    cmp.x_t = x_t;
    cmp.x_mean = posterior_mean(gmm, sigma_t, x_t);
    cmp.x_ode = solve_pf_ode(gmm, schedule, sigma_t, x_t, ode_steps);
    cmp.post_logdensity_ode = post.log_density(cmp.x_ode);
    cmp.post_logdensity_mean = post.log_density(cmp.x_mean);

    const Mat cov = tweedie_cov(gmm, sigma_t, x_t);
    RngStream rng = make_stream(seed, 0, "compare-approximations");
    cmp.post_logdensity_mean_noise.reserve(n_draws);
    cmp.post_logdensity_mean_cov.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
        Vec draw = cmp.x_mean;
        for (double& v : draw) v += lgd_r * rng.normal();
        cmp.post_logdensity_mean_noise.push_back(post.log_density(draw));
        cmp.post_logdensity_mean_cov.push_back(post.log_density(sample_gaussian(cmp.x_mean, cov, rng)));
    }
    cmp.median_mean_noise = median(cmp.post_logdensity_mean_noise);
    cmp.median_mean_cov = median(cmp.post_logdensity_mean_cov);
    return cmp;
}

Vec GridSpec::point(std::size_t i) const {
    const std::size_t ix = i % nx;
    const std::size_t iy = i / nx;
    const double fx = nx > 1 ? static_cast<double>(ix) / static_cast<double>(nx - 1) : 0.5;
    const double fy = ny > 1 ? static_cast<double>(iy) / static_cast<double>(ny - 1) : 0.5;
    return {xmin + fx * (xmax - xmin), ymin + fy * (ymax - ymin)};
}

double voronoi_boundary_distance(const GaussianMixture& gmm, const Vec& x) {
    const std::size_t a = nearest_mode(gmm, x);
    const double da = dist2(x, gmm.means[a]);
    double best = INFINITY;
    for (std::size_t b = 0; b < gmm.components(); ++b) {
        if (b == a) continue;
        const double gap = dist2(x, gmm.means[b]) - da;
        const double sep = std::sqrt(dist2(gmm.means[a], gmm.means[b]));
        best = std::min(best, gap / (2.0 * sep));
    }
    return best;
}

DecisionMap decision_map(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                         double sigma_t, const GridSpec& grid, std::size_t ode_steps,
                         std::size_t threads, double boundary_band) {
    if (gmm.dim != 2) throw ShapeError("decision_map: 2-d priors only");
    DecisionMap map;
    map.grid = grid;
    map.sigma_t = sigma_t;
    const std::size_t n = grid.cells();
    map.ode_mode.assign(n, -1);
    map.voronoi_mode.assign(n, -1);
    map.excluded.assign(n, 0);

    parallel_for(n, threads, [&](std::size_t i) {
        const Vec x = grid.point(i);
        map.voronoi_mode[i] = static_cast<int>(nearest_mode(gmm, x));
        if (voronoi_boundary_distance(gmm, x) < boundary_band) map.excluded[i] = 1;
        try {
            const Vec x0 = solve_pf_ode(gmm, schedule, sigma_t, x, ode_steps);
            map.ode_mode[i] = static_cast<int>(nearest_mode(gmm, x0));
        } catch (const IntegrationError&) {
            map.ode_mode[i] = -1;
            map.excluded[i] = 1;
        }
    });

    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (map.ode_mode[i] < 0) ++map.n_failed;
        if (map.excluded[i]) {
            ++map.n_excluded;
            continue;
        }
        ++map.n_counted;
        if (map.ode_mode[i] == map.voronoi_mode[i]) ++agree;
    }
    map.agreement = map.n_counted ? static_cast<double>(agree) / static_cast<double>(map.n_counted)
                                  : 0.0;
    return map;
}

DensityBoundReport verify_density_bound(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                           double sigma_t, std::size_t n_samples, std::uint64_t seed,
                           std::size_t ode_steps, std::size_t threads) {
    if (!(sigma_t > 0.0)) throw std::invalid_argument("verify_density_bound: sigma_t must be > 0");
    const std::size_t d = gmm.dim;
    const double s2 = gmm.sigma * gmm.sigma;
    const double sphere_radius2 = s2 + static_cast<double>(d) * s2;
    const double log_bound_const = -std::log(static_cast<double>(gmm.components()))
                                   - 0.5 * static_cast<double>(d) * std::log(4.0 * M_PI * s2)
                                   - 0.5 * (static_cast<double>(d) + 1.0);

    struct Item {
        bool qualifies = false;
        double margin = 0.0;
    };
    std::vector<Item> items(n_samples);

    parallel_for(n_samples, threads, [&](std::size_t i) {
        RngStream rng = make_stream(seed, i, "density-bound");
        Vec x_t = sample_prior(gmm, rng);
        for (double& v : x_t) v += sigma_t * rng.normal();

        const Vec phi = solve_pf_ode(gmm, schedule, sigma_t, x_t, ode_steps);
        const std::size_t k = nearest_mode(gmm, phi);
        if (!(dist2(phi, gmm.means[k]) <= sphere_radius2)) return;

        const double c = std::max(norm2(x_t), norm2(phi));
        const double log_bound = log_bound_const - 2.0 * c * c / (sigma_t * sigma_t);
        const double log_post = exact_posterior(gmm, sigma_t, x_t).log_density(phi);
        items[i].qualifies = true;
        items[i].margin = log_post - log_bound;
    });

    DensityBoundReport rep;
    rep.sigma_t = sigma_t;
    rep.n_samples = n_samples;
    rep.min_margin = INFINITY;
    for (const auto& it : items) {
        if (!it.qualifies) continue;
        ++rep.n_qualifying;
        if (it.margin < 0.0) ++rep.n_violations;
        rep.min_margin = std::min(rep.min_margin, it.margin);
    }
    rep.qualification_rate =
        static_cast<double>(rep.n_qualifying) / static_cast<double>(n_samples);
    return rep;
}

namespace {

std::size_t argmax_index(const Vec& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct RunOutcome {
    bool diverged = false;
    bool a_correct = false;
    bool b_correct = false;
    double sq_err = 0.0;
    double sum_post = 0.0;
    double sum_post_mid = 0.0;
    std::size_t n_steps = 0;
    std::size_t n_steps_mid = 0;
    double prior_logdensity_final = 0.0;
};

RunOutcome evaluate_run(const Problem& problem, const MlpNetwork* model_b,
                        const SolverConfig& cfg, std::uint64_t run) {
    RunOutcome out;
    Trajectory traj;
    try {
        traj = run_solver(problem, cfg, run);
    } catch (const SolverDivergence&) {
        out.diverged = true;
        return out;
    } catch (const IntegrationError&) {
        out.diverged = true;
        return out;
    }
    for (const auto& rec : traj.records) {
        out.sum_post += rec.post_logdensity;
        ++out.n_steps;
        if (rec.sigma_t > problem.gmm.sigma) {
            out.sum_post_mid += rec.post_logdensity;
            ++out.n_steps_mid;
        }
    }
    out.prior_logdensity_final = log_marginal_density(problem.gmm, 0.0, traj.final_x);

    if (problem.op.kind == OperatorKind::mlp &&
        problem.op.distance == DistanceKind::cross_entropy) {
        out.a_correct = argmax_index(problem.op.net.forward(traj.final_x)) == problem.target.label;
        if (model_b)
            out.b_correct = argmax_index(model_b->forward(traj.final_x)) == problem.target.label;
    } else {
        const Vec fx = matvec(problem.op.a, traj.final_x);
        out.sq_err = dist2(fx, problem.target.y);
    }
    return out;
}

}  // namespace

std::vector<BenchRow> benchmark_solvers(const Problem& problem, const MlpNetwork* model_b,
                                        const std::vector<BenchTask>& tasks, std::size_t n_runs,
                                        std::size_t threads) {
    if (tasks.empty()) throw ConfigError("benchmark_solvers: no solver configurations");
    const bool classification = problem.op.kind == OperatorKind::mlp &&
                                problem.op.distance == DistanceKind::cross_entropy;
    std::vector<BenchRow> rows;
    rows.reserve(tasks.size());

    for (const auto& task : tasks) {
        std::vector<RunOutcome> outcomes(n_runs);
        parallel_for(n_runs, threads, [&](std::size_t run) {
            outcomes[run] = evaluate_run(problem, model_b, task.config, run);
        });

        BenchRow row;
        row.name = task.name;
        row.runs = n_runs;
        double sum_post = 0.0, sum_post_mid = 0.0, sum_prior_final = 0.0, sum_sq = 0.0;
        std::size_t n_steps = 0, n_steps_mid = 0, a_ok = 0, b_ok = 0, ok_runs = 0;
        for (const auto& o : outcomes) {
            if (o.diverged) {
                ++row.diverged;
                if (classification) {
                    row.model_a_correct.push_back(0);
                    row.model_b_correct.push_back(0);
                }
                continue;
            }
            ++ok_runs;
            sum_post += o.sum_post;
            sum_post_mid += o.sum_post_mid;
            n_steps += o.n_steps;
            n_steps_mid += o.n_steps_mid;
            sum_prior_final += o.prior_logdensity_final;
            sum_sq += o.sq_err;
            if (classification) {
                a_ok += o.a_correct;
                b_ok += o.b_correct;
                row.model_a_correct.push_back(o.a_correct ? 1 : 0);
                row.model_b_correct.push_back(o.b_correct ? 1 : 0);
            }
        }
        row.mean_post_logdensity = n_steps ? sum_post / static_cast<double>(n_steps) : 0.0;
        row.mean_post_logdensity_mid =
            n_steps_mid ? sum_post_mid / static_cast<double>(n_steps_mid) : 0.0;
        row.mean_prior_logdensity_final =
            ok_runs ? sum_prior_final / static_cast<double>(ok_runs) : 0.0;
        if (classification) {
            row.model_a_accuracy = static_cast<double>(a_ok) / static_cast<double>(n_runs);
            row.model_b_accuracy =
                model_b ? static_cast<double>(b_ok) / static_cast<double>(n_runs) : -1.0;
        } else {
            row.mse = ok_runs ? sum_sq / static_cast<double>(ok_runs) : -1.0;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AblationRow> overfit_ablation(const Problem& problem, const MlpNetwork& model_b,
                                          const SolverConfig& base_config,
                                          const std::vector<double>& taus, std::size_t n_runs,
                                          std::size_t threads) {
    std::vector<BenchTask> tasks;
    for (double tau : taus) {
        BenchTask task;
        task.name = "tau=" + std::to_string(tau);
        task.config = base_config;
        task.config.tau = tau;
        tasks.push_back(std::move(task));
    }
    const auto rows = benchmark_solvers(problem, &model_b, tasks, n_runs, threads);
    std::vector<AblationRow> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        AblationRow r;
        r.name = rows[i].name;
        r.tau = taus[i];
        r.model_a_accuracy = rows[i].model_a_accuracy;
        r.model_b_accuracy = rows[i].model_b_accuracy;
        out.push_back(r);
    }
    return out;
}

}  // namespace dislab
