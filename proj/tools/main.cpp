#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "dislab/analysis.hpp"
#include "dislab/config.hpp"
#include "dislab/csv.hpp"
#include "dislab/errors.hpp"
#include "dislab/parallel.hpp"
#include "dislab/solvers.hpp"
#include "dislab/svg.hpp"
#include "dislab/verify.hpp"

namespace fs = std::filesystem;
using namespace dislab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 1;
    std::string solver_filter;
};

ExperimentConfig load_config_with_overrides(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.config_path.empty()
                               ? parse_experiment_config(builtin_toy_config_text())
                               : load_experiment_config(opts.config_path);
    if (opts.seed_set) {
        cfg.master_seed = opts.seed;
        for (auto& s : cfg.solvers) s.config.seed = opts.seed;
    }
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (!opts.solver_filter.empty()) {
        std::vector<NamedSolver> kept;
        for (auto& s : cfg.solvers)
            if (s.name == opts.solver_filter) kept.push_back(s);
        if (kept.empty())
            throw ConfigError("--solver: no configured solver named '" + opts.solver_filter + "'");
        cfg.solvers = std::move(kept);
    }
    return cfg;
}

void add_metadata(CsvWriter& csv, const ExperimentConfig& cfg) {
    csv.metadata("config_hash", hash_hex(cfg.config_hash));
    csv.metadata("master_seed", std::to_string(cfg.master_seed));
}

std::string path_join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------- toy-demo

int cmd_toy_demo(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config_with_overrides(opts);
    fs::create_directories(cfg.output_dir);
    const GaussianMixture& gmm = cfg.prior;
    const NoiseSchedule& schedule = cfg.schedule;

    // upper panel: exact posterior at x_t = (1, 0.4), sigma_t = 1, against the
    // competing posterior-sample approximations
    const Vec x_t{1.0, 0.4};
    const double sigma_t = 1.0;
    const std::size_t n_draws = 200;
    const auto cmp = compare_approximations(gmm, schedule, x_t, sigma_t, 0.2, n_draws,
                                            cfg.master_seed, 400);
    const PosteriorMixture post = exact_posterior(gmm, sigma_t, x_t);

    HeatmapPanel heat;
    heat.xmin = heat.ymin = -1.6;
    heat.xmax = heat.ymax = 1.6;
    heat.nx = heat.ny = 161;
    heat.values.resize(heat.nx * heat.ny);
    CsvWriter density_csv;
    add_metadata(density_csv, cfg);
    density_csv.header({"x0", "x1", "posterior_logdensity"});
    for (std::size_t iy = 0; iy < heat.ny; ++iy)
        for (std::size_t ix = 0; ix < heat.nx; ++ix) {
            const Vec pt{heat.xmin + (heat.xmax - heat.xmin) * ix / double(heat.nx - 1),
                         heat.ymin + (heat.ymax - heat.ymin) * iy / double(heat.ny - 1)};
            const double ld = post.log_density(pt);
            heat.values[iy * heat.nx + ix] = std::max(ld, -40.0);
            density_csv.row_values({pt[0], pt[1], ld});
        }
    density_csv.write(path_join(cfg.output_dir, "posterior_density.csv"));

    RngStream draw_rng = make_stream(cfg.master_seed, 0, "toy-demo-draws");
    ScatterSeries mean_noise{{}, "#ee6677", 2.0, "posterior mean + noise draws"};
    ScatterSeries mean_cov{{}, "#ccbb44", 2.0, "posterior mean + covariance draws"};
    const Mat cov = tweedie_cov(gmm, sigma_t, x_t);
    CsvWriter scatter_csv;
    add_metadata(scatter_csv, cfg);
    scatter_csv.header({"kind", "x0", "x1", "posterior_logdensity"});
    auto emit_point = [&](const std::string& kind, const Vec& v) {
        scatter_csv.row({kind, format_double(v[0]), format_double(v[1]),
                         format_double(post.log_density(v))});
    };
    for (std::size_t i = 0; i < n_draws; ++i) {
        Vec d1 = cmp.x_mean;
        for (double& v : d1) v += 0.2 * draw_rng.normal();
        mean_noise.points.push_back(d1);
        emit_point("mean_plus_noise", d1);
        const Vec d2 = sample_gaussian(cmp.x_mean, cov, draw_rng);
        mean_cov.points.push_back(d2);
        emit_point("mean_plus_cov", d2);
    }
    ScatterSeries mean_pt{{cmp.x_mean}, "#222255", 5.0, "posterior mean"};
    ScatterSeries ode_pt{{cmp.x_ode}, "#228833", 5.0, "pf-ode solution"};
    ScatterSeries xt_pt{{x_t}, "#ffffff", 4.0, "x_t"};
    emit_point("posterior_mean", cmp.x_mean);
    emit_point("pf_ode_solution", cmp.x_ode);
    emit_point("x_t", x_t);
    scatter_csv.write(path_join(cfg.output_dir, "toy_scatter.csv"));
    const std::string svg_meta = "config_hash=" + hash_hex(cfg.config_hash) +
                                 " master_seed=" + std::to_string(cfg.master_seed);
    write_heatmap_svg(path_join(cfg.output_dir, "toy_scatter.svg"), heat,
                      {mean_noise, mean_cov, mean_pt, ode_pt, xt_pt},
                      "exact posterior at x_t=(1,0.4), sigma_t=1 (log density)", svg_meta);

    // lower panels: pf-ode decision maps against the Voronoi cells
    const std::vector<double> levels{0.1, 0.5, 1.0, 2.0};
    GridSpec grid;
    CsvWriter agree_csv;
    add_metadata(agree_csv, cfg);
    agree_csv.header({"sigma_t", "agreement", "cells_counted", "cells_excluded", "cells_failed"});
    CsvWriter cells_csv;
    add_metadata(cells_csv, cfg);
    cells_csv.header({"sigma_t", "x0", "x1", "ode_mode", "voronoi_mode", "excluded"});
    std::vector<ModeMapPanel> panels;
    for (double level : levels) {
        const DecisionMap map = decision_map(gmm, schedule, level, grid, 80, opts.threads);
        agree_csv.row_values({level, map.agreement, double(map.n_counted),
                              double(map.n_excluded), double(map.n_failed)});
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const Vec pt = grid.point(i);
            cells_csv.row_values({level, pt[0], pt[1], double(map.ode_mode[i]),
                                  double(map.voronoi_mode[i]), double(map.excluded[i])});
        }
        // render at half resolution; the csv keeps the full lattice
        ModeMapPanel panel;
        panel.xmin = grid.xmin;
        panel.xmax = grid.xmax;
        panel.ymin = grid.ymin;
        panel.ymax = grid.ymax;
        panel.nx = (grid.nx + 1) / 2;
        panel.ny = (grid.ny + 1) / 2;
        panel.modes.reserve(panel.nx * panel.ny);
        for (std::size_t iy = 0; iy < grid.ny; iy += 2)
            for (std::size_t ix = 0; ix < grid.nx; ix += 2)
                panel.modes.push_back(map.ode_mode[iy * grid.nx + ix]);
        char title[64];
        std::snprintf(title, sizeof(title), "pf-ode modes, sigma_t=%.2f (agree %.4f)", level,
                      map.agreement);
        panel.title = title;
        panels.push_back(std::move(panel));
    }
    agree_csv.write(path_join(cfg.output_dir, "decision_agreement.csv"));
    cells_csv.write(path_join(cfg.output_dir, "decision_cells.csv"));
    write_mode_maps_svg(path_join(cfg.output_dir, "decision_maps.svg"), panels, gmm.means,
                        svg_meta);

    std::printf("toy-demo: wrote 6 files to %s\n", cfg.output_dir.c_str());
    return kExitOk;
}

// ------------------------------------------------------------------- solve

int cmd_solve(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config_with_overrides(opts);
    if (cfg.solvers.empty()) throw ConfigError("solve: config lists no solvers");
    fs::create_directories(cfg.output_dir);
    const Problem problem = build_problem(cfg);

    for (const auto& named : cfg.solvers) {
        std::vector<Trajectory> trajectories(cfg.run_count);
        std::vector<std::string> failures(cfg.run_count);
        parallel_for(cfg.run_count, opts.threads, [&](std::size_t run) {
            try {
                trajectories[run] = run_solver(problem, named.config, run);
            } catch (const SolverDivergence& e) {
                failures[run] = e.what();
            } catch (const IntegrationError& e) {
                failures[run] = e.what();
            }
        });
        std::size_t diverged = 0;
        for (std::size_t run = 0; run < cfg.run_count; ++run) {
            if (!failures[run].empty()) {
                ++diverged;
                continue;
            }
            const Trajectory& traj = trajectories[run];
            CsvWriter csv;
            add_metadata(csv, cfg);
            csv.metadata("solver", named.name);
            csv.metadata("run_index", std::to_string(run));
            std::vector<std::string> header{"step", "sigma_t"};
            for (std::size_t j = 0; j < problem.gmm.dim; ++j)
                header.push_back("x" + std::to_string(j));
            for (std::size_t j = 0; j < problem.gmm.dim; ++j)
                header.push_back("x0t" + std::to_string(j));
            header.insert(header.end(), {"loss", "post_logdensity", "prior_logdensity"});
            csv.header(header);
            for (std::size_t s = 0; s < traj.records.size(); ++s) {
                const StepRecord& rec = traj.records[s];
                std::vector<double> row{double(s), rec.sigma_t};
                row.insert(row.end(), rec.x.begin(), rec.x.end());
                row.insert(row.end(), rec.x0t.begin(), rec.x0t.end());
                row.insert(row.end(), {rec.loss, rec.post_logdensity, rec.prior_logdensity});
                csv.row_values(row);
            }
            csv.write(path_join(cfg.output_dir,
                                named.name + "_run" + std::to_string(run) + ".csv"));
        }
        std::printf("solve %s: %zu runs, %zu diverged\n", named.name.c_str(), cfg.run_count,
                    diverged);
        if (diverged == cfg.run_count && cfg.run_count > 0) return kExitDivergence;
    }
    return kExitOk;
}

// -------------------------------------------------------------------- bench

int cmd_bench(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config_with_overrides(opts);
    if (cfg.solvers.size() < 2)
        throw ConfigError("bench: config must list at least two solvers");
    fs::create_directories(cfg.output_dir);
    const Problem problem = build_problem(cfg);

    const bool classification = problem.op.kind == OperatorKind::mlp &&
                                problem.op.distance == DistanceKind::cross_entropy;
    MlpNetwork model_b;
    if (classification) model_b = build_model_b(cfg);

    std::vector<BenchTask> tasks;
    for (const auto& named : cfg.solvers) tasks.push_back({named.name, named.config});
    const auto rows = benchmark_solvers(problem, classification ? &model_b : nullptr, tasks,
                                        cfg.run_count, opts.threads);

    CsvWriter csv;
    add_metadata(csv, cfg);
    csv.header({"solver", "runs", "failures", "model_a_accuracy", "model_b_accuracy", "mse",
                "mean_post_logdensity", "mean_post_logdensity_mid",
                "mean_prior_logdensity_final"});
    std::string md = "<!-- config_hash=" + hash_hex(cfg.config_hash) +
                     " master_seed=" + std::to_string(cfg.master_seed) + " -->\n" +
                     "| solver | runs | failures | acc(A) | acc(B) | mse | post logdens (mid) | prior "
                     "logdens (final) |\n|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        csv.row({row.name, std::to_string(row.runs), std::to_string(row.diverged),
                 format_double(row.model_a_accuracy), format_double(row.model_b_accuracy),
                 format_double(row.mse), format_double(row.mean_post_logdensity),
                 format_double(row.mean_post_logdensity_mid),
                 format_double(row.mean_prior_logdensity_final)});
        char line[256];
        std::snprintf(line, sizeof(line),
                      "| %s | %zu | %zu | %.3f | %.3f | %.4g | %.3f | %.3f |\n", row.name.c_str(),
                      row.runs, row.diverged, row.model_a_accuracy, row.model_b_accuracy, row.mse,
                      row.mean_post_logdensity_mid, row.mean_prior_logdensity_final);
        md += line;
    }
    csv.write(path_join(cfg.output_dir, "bench_summary.csv"));
    write_text_file(path_join(cfg.output_dir, "bench_summary.md"), md);

    if (classification) {
        // tau sweep on the configured ablation solver (default: the first
        // proposed1/proposed2 entry)
        const NamedSolver* abl = nullptr;
        for (const auto& named : cfg.solvers) {
            if (!cfg.analysis.ablation_solver.empty()) {
                if (named.name == cfg.analysis.ablation_solver) abl = &named;
            } else if (named.config.solver == SolverKind::proposed1 ||
                       named.config.solver == SolverKind::proposed2) {
                abl = &named;
                break;
            }
        }
        if (abl) {
            const auto ablation = overfit_ablation(problem, model_b, abl->config,
                                                   cfg.analysis.ablation_taus, cfg.run_count,
                                                   opts.threads);
            CsvWriter acsv;
            add_metadata(acsv, cfg);
            acsv.metadata("ablation_solver", abl->name);
            acsv.header({"tau", "model_a_accuracy", "model_b_accuracy"});
            for (const auto& row : ablation)
                acsv.row_values({row.tau, row.model_a_accuracy, row.model_b_accuracy});
            acsv.write(path_join(cfg.output_dir, "ablation.csv"));
        }
    }
    std::printf("bench: %zu solvers x %zu runs written to %s\n", rows.size(), cfg.run_count,
                cfg.output_dir.c_str());
    return kExitOk;
}

// ------------------------------------------------------------------- verify

int cmd_verify(std::size_t threads, const std::string& fault) {
    VerifyOptions vopts;
    vopts.threads = threads;
    vopts.fault_score = fault == "score";
    const auto checks = run_verification(vopts);
    bool all_pass = true;
    for (const auto& check : checks) {
        std::printf("[%s] %-32s %s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                    check.detail.c_str());
        all_pass = all_pass && check.pass;
    }
    std::printf("verify: %zu checks, %s\n", checks.size(), all_pass ? "all passed" : "FAILURES");
    return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytic Gaussian-mixture laboratory for diffusion inverse solvers"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string fault;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "experiment config (json)");
        cmd->add_option("--out", opts.out_dir, "output directory override");
        cmd->add_option("--seed", opts.seed, "master seed override")
            ->each([&](const std::string&) { opts.seed_set = true; });
        cmd->add_option("--threads", opts.threads, "worker thread count");
        cmd->add_option("--solver", opts.solver_filter, "run only the named solver entry");
    };

    CLI::App* toy = app.add_subcommand("toy-demo", "built-in five-mixture demo figures");
    add_common(toy);
    CLI::App* solve = app.add_subcommand("solve", "run configured solvers, emit trajectories");
    add_common(solve);
    CLI::App* bench = app.add_subcommand("bench", "solver comparison and tau ablation");
    add_common(bench);
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_option("--threads", opts.threads, "worker thread count");
    verify->add_option("--inject-fault", fault, "test hook: corrupt a named component")
        ->group("");  // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (toy->parsed()) return cmd_toy_demo(opts);
        if (solve->parsed()) return cmd_solve(opts);
        if (bench->parsed()) return cmd_bench(opts);
        if (verify->parsed()) return cmd_verify(opts.threads, fault);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const SolverDivergence& e) {
        std::fprintf(stderr, "error: %s (step %zu)\n", e.what(), e.step_index);
        return kExitDivergence;
    } catch (const IntegrationError& e) {
        std::fprintf(stderr, "error: %s (sigma %.6g)\n", e.what(), e.sigma_at_failure);
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
    return kExitConfigError;
}
