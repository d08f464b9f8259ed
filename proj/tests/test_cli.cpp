#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dislab/csv.hpp"
#include "dislab/dynamics.hpp"
#include "dislab/mixture.hpp"
#include "dislab/schedule.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace dislab;
using namespace dislab::testutil;

namespace {

std::string cli_binary() {
    const char* env = std::getenv("DISLAB_BIN");
    REQUIRE(env != nullptr);
    return env;
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string out_path =
        (fs::temp_directory_path() / "dislab_cli_out.txt").string();
    const std::string cmd = cli_binary() + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.output = read_text_file(out_path);
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const std::string& name,
                         const std::string& text) {
    const fs::path path = dir / name;
    write_text_file(path.string(), text);
    return path.string();
}

const char* kSolveConfig = R"({
  "prior": {"dim": 2, "sigma": 0.1,
            "means": [[-1, -1], [-1, 1], [1, 1], [1, -1], [0, 0]]},
  "schedule": {"kind": "karras", "sigma_min": 0.002, "sigma_max": 4.0, "steps": 100},
  "operator": {"kind": "linear", "matrix": [[1, 0]], "distance": "mse"},
  "target": {"y": [1.0]},
  "solvers": [
    {"name": "unguided", "solver": "dps", "zeta": 0.0},
    {"name": "dps", "solver": "dps", "zeta": 0.3}
  ],
  "seeds": {"master": 20240901, "runs": 3},
  "output_dir": "out"
}
)";

}  // namespace

TEST_CASE("toy-demo writes six files, deterministically") {
    const fs::path dir1 = fresh_dir("dislab_demo1");
    const auto r1 = run_cli("toy-demo --out " + dir1.string() + " --threads 2");
    CHECK(r1.exit_code == 0);
    const std::vector<std::string> expected{
        "toy_scatter.svg",       "toy_scatter.csv",   "decision_maps.svg",
        "decision_agreement.csv", "decision_cells.csv", "posterior_density.csv"};
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir1)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 6);
    for (const auto& name : expected) CHECK(fs::exists(dir1 / name));

    // agreement at the smallest level
    const std::string agreement = read_text_file((dir1 / "decision_agreement.csv").string());
    const auto line = agreement.find("\n0.1,");
    REQUIRE(line != std::string::npos);
    const double value = std::stod(agreement.substr(line + 5));
    CHECK(value >= 0.99);

    // rerun with a different thread count: byte-identical artifacts
    const fs::path dir2 = fresh_dir("dislab_demo2");
    const auto r2 = run_cli("toy-demo --out " + dir2.string() + " --threads 1");
    CHECK(r2.exit_code == 0);
    for (const auto& name : expected)
        CHECK(read_text_file((dir1 / name).string()) ==
              read_text_file((dir2 / name).string()));
}

TEST_CASE("solve: guidance-off run matches the unconditional sampler csv") {
    const fs::path dir = fresh_dir("dislab_solve");
    const std::string cfg = write_config(dir, "solve.json", kSolveConfig);
    const auto res =
        run_cli("solve --config " + cfg + " --out " + dir.string() + " --threads 2");
    CHECK(res.exit_code == 0);
    for (int run = 0; run < 3; ++run) {
        CHECK(fs::exists(dir / ("unguided_run" + std::to_string(run) + ".csv")));
        CHECK(fs::exists(dir / ("dps_run" + std::to_string(run) + ".csv")));
    }

    const GaussianMixture toy = toy_five_gmm();
    const NoiseSchedule ladder = make_schedule(ScheduleKind::karras, 0.002, 4.0, 100);
    RngStream rng = make_stream(20240901, 1, "ancestral");
    const auto states = sample_unconditional(toy, ladder, rng);

    const std::string csv = read_text_file((dir / "unguided_run1.csv").string());
    std::istringstream lines(csv);
    std::string line;
    std::size_t row = 0;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("step,", 0) == 0) continue;
        double step, sigma_t, x0, x1;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &step, &sigma_t, &x0, &x1) == 4);
        REQUIRE(row < states.size());
        CHECK(x0 == states[row][0]);  // %.17g round-trips exactly
        CHECK(x1 == states[row][1]);
        ++row;
    }
    CHECK(row == ladder.steps);

    // dps run reaches a small terminal loss
    const std::string dps_csv = read_text_file((dir / "dps_run0.csv").string());
    const auto last_line = dps_csv.find_last_of('\n', dps_csv.size() - 2);
    double step, sigma_t, x0, x1, y0, y1, loss;
    REQUIRE(std::sscanf(dps_csv.c_str() + last_line + 1, "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &step,
                        &sigma_t, &x0, &x1, &y0, &y1, &loss) == 7);
    CHECK(loss < 1e-2);

    // reruns are byte-identical
    const fs::path dir2 = fresh_dir("dislab_solve2");
    const std::string cfg2 = write_config(dir2, "solve.json", kSolveConfig);
    const auto res2 =
        run_cli("solve --config " + cfg2 + " --out " + dir2.string() + " --threads 1");
    CHECK(res2.exit_code == 0);
    CHECK(read_text_file((dir / "dps_run0.csv").string()) ==
          read_text_file((dir2 / "dps_run0.csv").string()));
}

TEST_CASE("solve honors the --solver filter and rejects unknown names") {
    const fs::path dir = fresh_dir("dislab_filter");
    const std::string cfg = write_config(dir, "solve.json", kSolveConfig);
    const auto res = run_cli("solve --config " + cfg + " --out " + dir.string() +
                             " --solver dps");
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "dps_run0.csv"));
    CHECK_FALSE(fs::exists(dir / "unguided_run0.csv"));

    const auto bad = run_cli("solve --config " + cfg + " --solver nosuch");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("missing config file is a config error") {
    const auto res = run_cli("solve --config /nonexistent/dislab.json");
    CHECK(res.exit_code == 2);
}

TEST_CASE("malformed config fails with a line-anchored message") {
    const fs::path dir = fresh_dir("dislab_badcfg");
    const std::string cfg = write_config(dir, "bad.json", "{\n  \"prior\": {\n  oops\n}\n");
    const auto res = run_cli("solve --config " + cfg);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("line") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
    const fs::path dir = fresh_dir("dislab_unknownkey");
    std::string text = kSolveConfig;
    text.replace(text.find("\"seeds\""), 7, "\"sneeds\"");
    const std::string cfg = write_config(dir, "unknown.json", text);
    const auto res = run_cli("solve --config " + cfg);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("sneeds") != std::string::npos);
}

TEST_CASE("bench demands at least two solvers") {
    const fs::path dir = fresh_dir("dislab_benchcfg");
    std::string text = kSolveConfig;
    const auto start = text.find('[');
    const auto end = text.find(']');
    text.replace(start, end - start + 1, "[]");
    const std::string cfg = write_config(dir, "empty.json", text);
    const auto res = run_cli("bench --config " + cfg);
    CHECK(res.exit_code == 2);
}

TEST_CASE("bench produces summary tables deterministically") {
    const fs::path dir = fresh_dir("dislab_bench");
    const std::string cfg = write_config(dir, "bench.json", kSolveConfig);
    const auto res =
        run_cli("bench --config " + cfg + " --out " + dir.string() + " --threads 2");
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "bench_summary.csv"));
    CHECK(fs::exists(dir / "bench_summary.md"));

    const fs::path dir2 = fresh_dir("dislab_bench2");
    const std::string cfg2 = write_config(dir2, "bench.json", kSolveConfig);
    const auto res2 =
        run_cli("bench --config " + cfg2 + " --out " + dir2.string() + " --threads 1");
    CHECK(res2.exit_code == 0);
    CHECK(read_text_file((dir / "bench_summary.csv").string()) ==
          read_text_file((dir2 / "bench_summary.csv").string()));
}

TEST_CASE("--seed overrides the configured master seed") {
    const fs::path dir1 = fresh_dir("dislab_seed1");
    const fs::path dir2 = fresh_dir("dislab_seed2");
    const std::string cfg1 = write_config(dir1, "solve.json", kSolveConfig);
    CHECK(run_cli("solve --config " + cfg1 + " --out " + dir1.string() + " --solver dps")
              .exit_code == 0);
    CHECK(run_cli("solve --config " + cfg1 + " --out " + dir2.string() +
                  " --solver dps --seed 777")
              .exit_code == 0);
    const std::string a = read_text_file((dir1 / "dps_run0.csv").string());
    const std::string b = read_text_file((dir2 / "dps_run0.csv").string());
    CHECK(a != b);
    CHECK(b.find("master_seed=777") != std::string::npos);
}

TEST_CASE("verify passes clean and fails under fault injection") {
    const auto ok = run_cli("verify --threads 2");
    CHECK(ok.exit_code == 0);
    for (const char* name :
         {"tweedie-mean-oracle", "tweedie-cov-oracle", "pf-ode-velocity-equivalence",
          "score-gradient-fd", "score-hessian-fd", "pf-ode-closed-form",
          "consistency-jacobian-fd", "posterior-normalization", "posterior-argmax-voronoi",
          "pf-ode-marginal-preservation", "posterior-density-lower-bound"}) {
        CHECK(ok.output.find(name) != std::string::npos);
    }
    CHECK(ok.output.find("[PASS]") != std::string::npos);
    CHECK(ok.output.find("max_err") != std::string::npos);  // measured margins reported

    const auto bad = run_cli("verify --threads 2 --inject-fault score");
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("[FAIL]") != std::string::npos);
}
