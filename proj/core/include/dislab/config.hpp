#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dislab/mixture.hpp"
#include "dislab/operators.hpp"
#include "dislab/schedule.hpp"
#include "dislab/solvers.hpp"

namespace dislab {

struct OperatorSpec {
    OperatorKind kind = OperatorKind::linear;
    DistanceKind distance = DistanceKind::mse;
    double smoothing_tau = 0.0;
    Mat matrix;                    // linear
    TrainingParams train;          // mlp model used inside the solver (model A)
    TrainingParams train_b;        // held-out evaluation model (model B)
    std::string load_path;         // optional pre-trained network (json)
};

struct TargetSpec {
    bool is_label = false;
    Vec y;
    std::size_t label = 0;
};

struct NamedSolver {
    std::string name;
    SolverConfig config;
};

struct AnalysisSpec {
    std::vector<double> ablation_taus = {0.0, 0.05};
    std::string ablation_solver;  // name of the solver entry to sweep; empty = first proposed1
};

// One experiment document: prior, ladder, operator, target, solver list,
// seeds and output location. Parsing is strict; unknown keys are errors.
struct ExperimentConfig {
    GaussianMixture prior;
    NoiseSchedule schedule;
    OperatorSpec op_spec;
    TargetSpec target;
    std::vector<NamedSolver> solvers;
    AnalysisSpec analysis;
    std::uint64_t master_seed = 0;
    std::size_t run_count = 1;
    std::string output_dir = "out";

    std::uint64_t config_hash = 0;  // hash of the canonical source text
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// The built-in toy experiment document (five-GMM prior, Karras ladder,
// sigma_T = 4, T = 100).
std::string builtin_toy_config_text();

// Instantiates the operator (training the network if needed) and assembles a
// runnable problem around the configured target.
Problem build_problem(const ExperimentConfig& cfg);

// Builds the held-out evaluation network (model B).
MlpNetwork build_model_b(const ExperimentConfig& cfg);

}  // namespace dislab
