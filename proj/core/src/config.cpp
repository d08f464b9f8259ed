#include "dislab/config.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "dislab/csv.hpp"
#include "dislab/errors.hpp"

namespace dislab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void reject_unknown_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) fail(where, "unknown key '" + item.key() + "'");
}

const json& require(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) fail(where, "missing key '" + key + "'");
    return j.at(key);
}

double get_number(const json& j, const std::string& where, const std::string& key) {
    const json& v = require(j, where, key);
    if (!v.is_number()) fail(where, "'" + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& j, const std::string& where, const std::string& key,
                     double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(where, "'" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::size_t get_index_or(const json& j, const std::string& where, const std::string& key,
                         std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned()) fail(where, "'" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

std::string get_string_or(const json& j, const std::string& where, const std::string& key,
                          const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) fail(where, "'" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

GaussianMixture parse_prior(const json& j) {
    reject_unknown_keys(j, "prior", {"dim", "sigma", "means", "weights"});
    const auto dim = get_index_or(j, "prior", "dim", 2);
    const double sigma = get_number(j, "prior", "sigma");
    const json& means_j = require(j, "prior", "means");
    if (!means_j.is_array() || means_j.empty()) fail("prior", "'means' must be a non-empty array");
    std::vector<Vec> means;
    for (const auto& m : means_j) {
        if (!m.is_array() || m.size() != dim) fail("prior", "each mean must have 'dim' entries");
        means.push_back(m.get<Vec>());
    }
    std::vector<double> weights;
    if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
    try {
        return GaussianMixture(dim, std::move(means), sigma, std::move(weights));
    } catch (const std::exception& e) {
        fail("prior", e.what());
    }
}

NoiseSchedule parse_schedule(const json& j) {
    reject_unknown_keys(j, "schedule", {"kind", "sigma_min", "sigma_max", "steps", "rho"});
    const auto kind = schedule_kind_from_string(get_string_or(j, "schedule", "kind", "karras"));
    const double sigma_min = get_number_or(j, "schedule", "sigma_min", kDefaultSigmaMin);
    const double sigma_max = get_number(j, "schedule", "sigma_max");
    const auto steps = get_index_or(j, "schedule", "steps", 100);
    const double rho = get_number_or(j, "schedule", "rho", 7.0);
    return make_schedule(kind, sigma_min, sigma_max, steps, rho);
}

TrainingParams parse_training(const json& j, const std::string& where, TrainingParams base) {
    reject_unknown_keys(j, where, {"samples", "epochs", "lr", "batch", "hidden", "seed"});
    base.samples = get_index_or(j, where, "samples", base.samples);
    base.epochs = get_index_or(j, where, "epochs", base.epochs);
    base.lr = get_number_or(j, where, "lr", base.lr);
    base.batch = get_index_or(j, where, "batch", base.batch);
    base.hidden = get_index_or(j, where, "hidden", base.hidden);
    base.seed = get_index_or(j, where, "seed", base.seed);
    return base;
}

OperatorSpec parse_operator(const json& j) {
    reject_unknown_keys(j, "operator",
                        {"kind", "distance", "smoothing_tau", "matrix", "train", "train_b",
                         "load_path"});
    OperatorSpec spec;
    const std::string kind = get_string_or(j, "operator", "kind", "linear");
    if (kind == "linear") {
        spec.kind = OperatorKind::linear;
        const json& m = require(j, "operator", "matrix");
        if (!m.is_array() || m.empty()) fail("operator", "'matrix' must be a non-empty array");
        const std::size_t rows = m.size();
        const std::size_t cols = m[0].size();
        spec.matrix = Mat(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            if (!m[i].is_array() || m[i].size() != cols)
                fail("operator", "'matrix' rows must have equal length");
            for (std::size_t c = 0; c < cols; ++c) spec.matrix(i, c) = m[i][c].get<double>();
        }
    } else if (kind == "mlp") {
        spec.kind = OperatorKind::mlp;
        spec.distance = DistanceKind::cross_entropy;
    } else {
        fail("operator", "unknown kind '" + kind + "'");
    }
    spec.distance = distance_from_string(
        get_string_or(j, "operator", "distance",
                      spec.kind == OperatorKind::mlp ? "cross_entropy" : "mse"));
    if (spec.kind == OperatorKind::linear && spec.distance == DistanceKind::cross_entropy)
        fail("operator", "cross_entropy requires the mlp kind");
    spec.smoothing_tau = get_number_or(j, "operator", "smoothing_tau", 0.0);
    if (spec.smoothing_tau < 0.0) fail("operator", "'smoothing_tau' must be >= 0");

    TrainingParams defaults_a;
    defaults_a.seed = 101;
    defaults_a.hidden = 16;
    TrainingParams defaults_b;
    defaults_b.seed = 202;
    defaults_b.hidden = 24;
    spec.train = j.contains("train") ? parse_training(j.at("train"), "operator.train", defaults_a)
                                     : defaults_a;
    spec.train_b = j.contains("train_b")
                       ? parse_training(j.at("train_b"), "operator.train_b", defaults_b)
                       : defaults_b;
    if (spec.train.seed == spec.train_b.seed && spec.train.hidden == spec.train_b.hidden)
        fail("operator", "models A and B must differ in seed or hidden width");
    spec.load_path = get_string_or(j, "operator", "load_path", "");
    return spec;
}

TargetSpec parse_target(const json& j) {
    reject_unknown_keys(j, "target", {"y", "class"});
    TargetSpec t;
    if (j.contains("class")) {
        if (j.contains("y")) fail("target", "give either 'y' or 'class', not both");
        t.is_label = true;
        t.label = j.at("class").get<std::size_t>();
    } else if (j.contains("y")) {
        t.y = j.at("y").get<Vec>();
    } else {
        fail("target", "needs 'y' or 'class'");
    }
    return t;
}

SolverConfig parse_solver(const json& j, const std::string& where, std::uint64_t master_seed) {
    reject_unknown_keys(j, where,
                        {"name", "solver", "zeta", "zeta2", "tau", "K", "travel", "r_t", "eta",
                         "ts", "approx", "cm_steps", "scale_zeta_by_loss"});
    SolverConfig cfg;
    cfg.solver = solver_kind_from_string(
        require(j, where, "solver").get<std::string>());
    cfg.zeta = get_number_or(j, where, "zeta", 0.0);
    cfg.zeta2 = get_number_or(j, where, "zeta2", cfg.zeta);
    cfg.tau = get_number_or(j, where, "tau", 0.0);
    cfg.inner_iters = get_index_or(j, where, "K", 1);
    if (j.contains("travel")) {
        const json& r = j.at("travel");
        if (!r.is_array() || r.size() != 2) fail(where, "'travel' must be [lo, hi]");
        cfg.travel_lo = r[0].get<std::size_t>();
        cfg.travel_hi = r[1].get<std::size_t>();
    }
    cfg.r_t = get_number_or(j, where, "r_t", 0.0);
    cfg.eta = get_number_or(j, where, "eta", 0.0);
    if (j.contains("ts")) {
        cfg.ts = j.at("ts").get<std::vector<double>>();
        // accept either monotone order; stages run descending
        std::sort(cfg.ts.begin(), cfg.ts.end(), std::greater<>());
    }
    const std::string approx = get_string_or(j, where, "approx", "cm");
    if (approx == "cm")
        cfg.approx = ApproxKind::cm;
    else if (approx == "posterior_mean")
        cfg.approx = ApproxKind::posterior_mean;
    else
        fail(where, "unknown approx '" + approx + "'");
    cfg.cm_steps = get_index_or(j, where, "cm_steps", kDefaultIntegratorSteps);
    if (j.contains("scale_zeta_by_loss")) {
        if (!j.at("scale_zeta_by_loss").is_boolean())
            fail(where, "'scale_zeta_by_loss' must be a boolean");
        cfg.scale_zeta_by_loss = j.at("scale_zeta_by_loss").get<bool>();
    }
    cfg.seed = master_seed;
    return cfg;
}

AnalysisSpec parse_analysis(const json& j) {
    reject_unknown_keys(j, "analysis", {"ablation_taus", "ablation_solver"});
    AnalysisSpec spec;
    if (j.contains("ablation_taus"))
        spec.ablation_taus = j.at("ablation_taus").get<std::vector<double>>();
    spec.ablation_solver = get_string_or(j, "analysis", "ablation_solver", "");
    return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        // byte offset -> line number for a usable pointer into the document
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < json_text.size(); ++i)
            if (json_text[i] == '\n') ++line;
        throw ConfigError("config: parse error at line " + std::to_string(line) + ": " +
                          e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(j, "top level",
                        {"prior", "schedule", "operator", "target", "solvers", "seeds",
                         "analysis", "output_dir"});

    ExperimentConfig cfg;
    cfg.prior = parse_prior(require(j, "top level", "prior"));
    cfg.schedule = parse_schedule(require(j, "top level", "schedule"));
    cfg.op_spec = parse_operator(require(j, "top level", "operator"));
    cfg.target = parse_target(require(j, "top level", "target"));

    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        reject_unknown_keys(s, "seeds", {"master", "runs"});
        cfg.master_seed = get_index_or(s, "seeds", "master", 0);
        cfg.run_count = get_index_or(s, "seeds", "runs", 1);
        if (cfg.run_count == 0) fail("seeds", "'runs' must be >= 1");
    }

    const json& solvers = require(j, "top level", "solvers");
    if (!solvers.is_array()) fail("solvers", "must be an array");
    for (std::size_t i = 0; i < solvers.size(); ++i) {
        const std::string where = "solvers[" + std::to_string(i) + "]";
        NamedSolver named;
        named.config = parse_solver(solvers[i], where, cfg.master_seed);
        named.name = get_string_or(solvers[i], where, "name", to_string(named.config.solver));
        named.config.validate(cfg.schedule);
        cfg.solvers.push_back(std::move(named));
    }

    if (j.contains("analysis")) cfg.analysis = parse_analysis(j.at("analysis"));
    cfg.output_dir = get_string_or(j, "top level", "output_dir", "out");

    if (cfg.op_spec.kind == OperatorKind::linear && cfg.target.is_label)
        fail("target", "class targets require the mlp operator");
    if (cfg.op_spec.kind == OperatorKind::linear && !cfg.target.is_label &&
        cfg.target.y.size() != cfg.op_spec.matrix.rows)
        fail("target", "'y' length must match the operator output");
    if (cfg.op_spec.kind == OperatorKind::linear &&
        cfg.op_spec.matrix.cols != cfg.prior.dim)
        fail("operator", "matrix column count must match prior dim");

    cfg.config_hash = fnv1a_hash(json_text);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment_config(text);
}

std::string builtin_toy_config_text() {
    return R"({
  "prior": {
    "dim": 2,
    "sigma": 0.1,
    "means": [[-1, -1], [-1, 1], [1, 1], [1, -1], [0, 0]]
  },
  "schedule": {"kind": "karras", "sigma_min": 0.002, "sigma_max": 4.0, "steps": 100, "rho": 7.0},
  "operator": {"kind": "linear", "matrix": [[1, 0]], "distance": "mse"},
  "target": {"y": [1.0]},
  "solvers": [
    {"name": "dps", "solver": "dps", "zeta": 0.5, "scale_zeta_by_loss": false}
  ],
  "seeds": {"master": 20240901, "runs": 1},
  "output_dir": "out"
}
)";
}

Problem build_problem(const ExperimentConfig& cfg) {
    Problem p;
    p.gmm = cfg.prior;
    p.schedule = cfg.schedule;
    if (cfg.op_spec.kind == OperatorKind::linear) {
        p.op = make_linear_operator(cfg.op_spec.matrix, cfg.op_spec.distance,
                                    cfg.op_spec.smoothing_tau);
    } else {
        MlpNetwork net;
        if (!cfg.op_spec.load_path.empty()) {
            net = load_mlp(cfg.op_spec.load_path);
        } else {
            TrainingParams params = cfg.op_spec.train;
            net = train_mlp(cfg.prior, params);
        }
        p.op = make_mlp_operator(std::move(net), cfg.op_spec.distance, cfg.op_spec.smoothing_tau);
    }
    if (cfg.target.is_label) {
        if (cfg.target.label >= p.op.output_dim())
            throw ConfigError("config: target class out of range");
        p.target.label = cfg.target.label;
    } else {
        p.target.y = cfg.target.y;
        if (p.target.y.size() != p.op.output_dim())
            throw ConfigError("config: target length does not match operator output");
    }
    return p;
}

MlpNetwork build_model_b(const ExperimentConfig& cfg) {
    if (cfg.op_spec.kind != OperatorKind::mlp)
        throw ConfigError("config: model B requires the mlp operator");
    return train_mlp(cfg.prior, cfg.op_spec.train_b);
}

}  // namespace dislab
