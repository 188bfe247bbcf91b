#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plis/ap_model.hpp"
#include "plis/common.hpp"
#include "plis/controllers.hpp"
#include "plis/engines.hpp"
#include "plis/metrics.hpp"
#include "plis/plan.hpp"
#include "plis/solvers.hpp"

namespace plis {

struct BudgetPair {
    double eps_p = 0.03;
    double psi_p = 0.05;
};

/// Full description of one benchmark matrix: cohort x controller x engine x
/// budget, plus timing protocol and output location.
struct ExperimentConfig {
    std::uint64_t seed = 2024;
    int cohort_size = 12;
    CohortOptions cohort;

    std::vector<ControllerKind> controllers = {
        ControllerKind::pid, ControllerKind::mpc, ControllerKind::bayesian_lqg};
    bool run_oracle = true;
    bool run_plis = true;
    bool run_koopman = true;
    std::vector<BudgetPair> budgets = {{0.03, 0.05}, {0.05, 0.10}, {0.10, 0.15}};

    double horizon = 2880.0;  // minutes (two days)
    double q_sim = 1.0;
    SolverConfig solver;
    ControllerSettings controller_settings;
    PlanOptions plan;
    int timing_reps = 5;
    int koopman_order = 13;
    double koopman_training_days = 3.0;
    double carb_to_glucose = 4.5;
    std::string out_dir = "out";
    bool quiet = false;

    void validate() const;

    /// Parse from the JSON config file; schema violations carry line numbers.
    static ExperimentConfig load(const std::string& path);

    /// Manifest echo of every key.
    [[nodiscard]] std::string to_json_string() const;
};

/// One (patient, controller, engine[, budget]) cell of the matrix.
struct CellResult {
    std::string patient_id;
    ControllerKind controller = ControllerKind::pid;
    std::string engine;  // "oracle", "koopman" or "plis"
    double eps_p = 0.0, psi_p = 0.0;

    GlycemicReport glycemic_report;
    double rho = 0.0;
    double s_p = 0.0;
    double trace_error = 0.0;
    bool has_comparison = false;  // rho / s_p / trace_error valid
    double wall_seconds = 0.0;    // median over timing reps

    double q_inv = 0.0;  // plis cells only
    bool plan_converged = true;
    double plan_error_rmse = 0.0;
    double plan_error_alg1_sum = 0.0;

    bool failed = false;
    std::string failure;

    [[nodiscard]] std::string approach_label() const;
};

struct TraceRecord {
    std::string filename;
    std::string patient_id;
    Trace trace;
    std::vector<std::pair<double, double>> commands;
    double basal_command = 0.0;
};

struct ExperimentResults {
    ExperimentConfig config;
    std::vector<VirtualPatient> cohort;
    std::vector<CellResult> cells;
    std::vector<TraceRecord> traces;
    int failed_cells = 0;
};

/// Run the whole matrix. Engine divergence marks the cell failed and the
/// experiment continues; timed runs are interleaved across engines and
/// summarized by the median, with one discarded warmup per engine.
ExperimentResults run_experiment(const ExperimentConfig& config);

/// Write glycemic.csv, optimality.csv, speedup.csv, summary.txt, the run
/// manifest and one trace CSV per run into `dir`. Every value except the
/// timing fields (speedup.csv and the manifest) is bit-reproducible for a
/// fixed (config, seed).
void emit_reports(const ExperimentResults& results, const std::string& dir);

/// Throws on an unusable output directory; called before any simulation.
void ensure_writable_dir(const std::string& dir);

}  // namespace plis
