// Command-line front end: run benchmark matrices, inspect invariant-step
// plans, fit lifted models from trace files, and validate configs.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "plis/experiment.hpp"
#include "plis/koopman.hpp"
#include "plis/wmn.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitIo = 3;

struct CommonFlags {
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int reps = 0;
    double horizon = 0.0;
    bool quiet = false;
};

plis::ExperimentConfig load_config(const std::string& path, const CommonFlags& flags) {
    plis::ExperimentConfig config = plis::ExperimentConfig::load(path);
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.seed_set) config.seed = flags.seed;
    if (flags.reps > 0) config.timing_reps = flags.reps;
    if (flags.horizon > 0.0) config.horizon = flags.horizon;
    if (flags.quiet) config.quiet = true;
    config.validate();
    return config;
}

int cmd_run(const std::string& config_path, const CommonFlags& flags) {
    const plis::ExperimentConfig config = load_config(config_path, flags);
    plis::ensure_writable_dir(config.out_dir);
    const plis::ExperimentResults results = plis::run_experiment(config);
    plis::emit_reports(results, config.out_dir);
    if (!config.quiet) {
        std::cout << "wrote " << config.out_dir << "/{glycemic,optimality,speedup}.csv, "
                  << "summary.txt, manifest.json and " << results.traces.size()
                  << " trace files\n";
        if (results.failed_cells > 0) {
            std::cout << results.failed_cells << " cell(s) failed; see manifest.json\n";
        }
    }
    return results.failed_cells > 0 ? kExitPartialFailure : kExitOk;
}

int cmd_plan(const std::string& config_path, const CommonFlags& flags, double eps,
             double psi) {
    plis::ExperimentConfig config = load_config(config_path, flags);
    const plis::ErrorBudget budget{eps, psi};
    budget.validate();
    const auto cohort = plis::generate_cohort(config.seed, config.cohort_size, config.cohort);
    std::cout << "invariant-step plans for eps_p=" << eps * 100.0 << "% psi_p="
              << psi * 100.0 << "% over " << config.horizon << " min\n";
    for (const auto& patient : cohort) {
        const auto sys = plis::bmm_system(patient);
        const auto input =
            plis::open_loop_input(patient, config.horizon, config.carb_to_glucose);
        plis::PlanOptions opts = config.plan;
        opts.q_sim = config.q_sim;
        const auto plan = plis::compute_invariant_step(sys, input, 0.0, config.horizon,
                                                       patient.x0, budget, opts);
        std::cout << patient.id << ": q_inv=" << plan.q_inv << " min, intervals="
                  << plan.intervals.size() << ", worst r_j=" << plan.worst_interval_error
                  << ", E(rmse)=" << plan.trace_error_rmse << ", E(alg1 sum)="
                  << plan.trace_error_alg1_sum
                  << (plan.converged ? "" : "  [NOT CONVERGED]") << "\n";
        if (!config.quiet) {
            for (const auto& interval : plan.intervals) {
                std::cout << "    [" << interval.frozen.tau_start << ", "
                          << interval.frozen.tau_end << ") r_max=" << interval.r_max
                          << "\n";
            }
        }
    }
    return kExitOk;
}

int cmd_fit_koopman(const std::string& traces_dir, int order, const std::string& out_path,
                    double step) {
    std::vector<plis::SnapshotSequence> sequences;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(traces_dir)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw plis::Error("no .csv trace files in " + traces_dir);

    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw plis::Error("cannot open " + file.string());
        std::string line;
        std::getline(in, line);  // header
        plis::SnapshotSequence sequence;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string field;
            std::vector<double> values;
            while (std::getline(row, field, ',')) values.push_back(std::stod(field));
            if (values.size() < 6) continue;
            plis::Vector x(3), u(2);
            x << values[1], values[2], values[3];
            u << values[4], values[5];
            sequence.emplace_back(x, u);
        }
        if (!sequence.empty()) sequences.push_back(std::move(sequence));
    }

    const plis::KoopmanModel model = plis::dmd_fit(sequences, order, step);
    plis::save_koopman(model, out_path);
    std::cout << "fitted order-" << order << " model from " << sequences.size()
              << " trace(s): fit_error=" << model.fit_error << ", truncated_singular_values="
              << model.truncated_singular_values << " -> " << out_path << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    const plis::ExperimentConfig config = plis::ExperimentConfig::load(config_path);
    std::cout << "config ok: " << config.cohort_size << " patients, "
              << config.controllers.size() << " controller(s), horizon "
              << config.horizon << " min, " << config.budgets.size() << " budget pair(s)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise-LTI simulation benchmark for wireless-controlled plants"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string config_path;
    double eps = 0.03, psi = 0.05;
    std::string traces_dir, model_out = "koopman_model.txt";
    int order = 13;
    double fit_step = 1.0;

    auto add_common = [&flags](CLI::App* cmd) {
        cmd->add_option("--out", flags.out_dir, "output directory");
        cmd->add_option("--seed", flags.seed, "cohort seed")
            ->each([&flags](const std::string&) { flags.seed_set = true; });
        cmd->add_option("--reps", flags.reps, "timing repetitions");
        cmd->add_option("--horizon", flags.horizon, "horizon in minutes");
        cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
    };

    CLI::App* run = app.add_subcommand("run", "execute the benchmark matrix");
    run->add_option("config", config_path, "experiment config file")->required();
    add_common(run);

    CLI::App* plan = app.add_subcommand("plan", "print invariant-step plans");
    plan->add_option("config", config_path, "experiment config file")->required();
    plan->add_option("--eps", eps, "trajectory budget eps_p (fraction)");
    plan->add_option("--psi", psi, "trace budget psi_p (fraction)");
    add_common(plan);

    CLI::App* fit = app.add_subcommand("fit-koopman", "fit a lifted model from trace CSVs");
    fit->add_option("traces", traces_dir, "directory of trace .csv files")->required();
    fit->add_option("--order", order, "lifted dimension");
    fit->add_option("--model-out", model_out, "output model file");
    fit->add_option("--step", fit_step, "sample step of the traces (minutes)");

    CLI::App* validate = app.add_subcommand("validate", "check a config file");
    validate->add_option("config", config_path, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, flags);
        if (plan->parsed()) return cmd_plan(config_path, flags, eps, psi);
        if (fit->parsed()) return cmd_fit_koopman(traces_dir, order, model_out, fit_step);
        if (validate->parsed()) return cmd_validate(config_path);
    } catch (const plis::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const plis::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const std::string what = e.what();
        if (what.find("directory") != std::string::npos ||
            what.find("cannot open") != std::string::npos) {
            return kExitIo;
        }
        return kExitPartialFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
