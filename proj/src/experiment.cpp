#include "plis/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plis/wmn.hpp"

namespace plis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

ControllerKind controller_from_name(const std::string& name) {
    if (name == "pid") return ControllerKind::pid;
    if (name == "mpc") return ControllerKind::mpc;
    if (name == "bayesian" || name == "bayesian_lqg") return ControllerKind::bayesian_lqg;
    throw ConfigError("unknown controller '" + name + "'");
}

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

/// Fetch a key with type checking; error messages carry the key path.
template <typename T>
T get_or(const json& node, const std::string& key, T fallback) {
    if (!node.contains(key)) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

/// Applied plant input at time t, reconstructed from the command log.
Vector applied_input(const LoopSetup& setup,
                     const std::vector<std::pair<double, double>>& commands, double t) {
    Vector u = setup.exogenous.at(t);
    if (setup.command_channel >= 0 && !commands.empty()) {
        auto it = std::upper_bound(
            commands.begin(), commands.end(), t,
            [](double value, const auto& entry) { return value < entry.first; });
        if (it != commands.begin()) {
            const double command = std::prev(it)->second;
            u(setup.command_channel) += command - setup.basal_command;
        }
    }
    return u;
}

double command_at(const std::vector<std::pair<double, double>>& commands, double t,
                  double basal) {
    auto it = std::upper_bound(
        commands.begin(), commands.end(), t,
        [](double value, const auto& entry) { return value < entry.first; });
    if (it == commands.begin()) return basal;
    return std::prev(it)->second;
}

}  // namespace

std::string CellResult::approach_label() const {
    if (engine != "plis") return engine;
    std::ostringstream out;
    out << "plis(eps=" << eps_p * 100.0 << "%,psi=" << psi_p * 100.0 << "%)";
    return out.str();
}

void ExperimentConfig::validate() const {
    if (cohort_size < 1) throw ConfigError("cohort_size must be >= 1");
    if (controllers.empty()) throw ConfigError("at least one controller is required");
    if (!(horizon > 0.0) || !(q_sim > 0.0)) throw ConfigError("horizon and q_sim must be positive");
    const double steps = horizon / q_sim;
    if (std::abs(steps - std::round(steps)) > 1e-9) {
        throw ConfigError("horizon must be an integer number of q_sim steps");
    }
    const double tick = controller_settings.tick_period;
    const double tick_steps = tick / q_sim;
    if (std::abs(tick_steps - std::round(tick_steps)) > 1e-9) {
        throw ConfigError("tick_period must be an integer multiple of q_sim");
    }
    if ((run_plis || run_koopman) && !run_oracle) {
        throw ConfigError("optimality and speedup need the oracle engine in the matrix");
    }
    if (run_plis && budgets.empty()) throw ConfigError("plis requested without budgets");
    for (const auto& budget : budgets) {
        ErrorBudget{budget.eps_p, budget.psi_p}.validate();
    }
    if (timing_reps < 1) throw ConfigError("timing_reps must be >= 1");
    if (koopman_order < 3) throw ConfigError("koopman_order must be >= state dimension");
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream msg;
        msg << path << ":" << line_of_offset(text, e.byte) << ": " << e.what();
        throw ConfigError(msg.str());
    }

    ExperimentConfig config;
    config.seed = get_or<std::uint64_t>(root, "seed", config.seed);
    config.cohort_size = get_or<int>(root, "cohort_size", config.cohort_size);
    config.horizon = get_or<double>(root, "horizon_minutes", config.horizon);
    config.q_sim = get_or<double>(root, "q_sim", config.q_sim);
    config.timing_reps = get_or<int>(root, "timing_reps", config.timing_reps);
    config.koopman_order = get_or<int>(root, "koopman_order", config.koopman_order);
    config.koopman_training_days =
        get_or<double>(root, "koopman_training_days", config.koopman_training_days);
    config.carb_to_glucose = get_or<double>(root, "carb_to_glucose", config.carb_to_glucose);
    config.out_dir = get_or<std::string>(root, "out_dir", config.out_dir);
    config.quiet = get_or<bool>(root, "quiet", config.quiet);

    if (root.contains("controllers")) {
        config.controllers.clear();
        for (const auto& name : root.at("controllers")) {
            config.controllers.push_back(controller_from_name(name.get<std::string>()));
        }
    }
    if (root.contains("engines")) {
        config.run_oracle = config.run_plis = config.run_koopman = false;
        for (const auto& name : root.at("engines")) {
            const auto engine = name.get<std::string>();
            if (engine == "oracle") config.run_oracle = true;
            else if (engine == "plis") config.run_plis = true;
            else if (engine == "koopman") config.run_koopman = true;
            else throw ConfigError("unknown engine '" + engine + "'");
        }
    }
    if (root.contains("budgets")) {
        config.budgets.clear();
        for (const auto& pair : root.at("budgets")) {
            config.budgets.push_back(
                BudgetPair{pair.at("eps_p").get<double>(), pair.at("psi_p").get<double>()});
        }
    }
    if (root.contains("cohort")) {
        const auto& c = root.at("cohort");
        config.cohort.perturbation = get_or<double>(c, "perturbation", config.cohort.perturbation);
        config.cohort.glucose_eq_spread =
            get_or<double>(c, "glucose_eq_spread", config.cohort.glucose_eq_spread);
        config.cohort.max_si_depression =
            get_or<double>(c, "max_si_depression", config.cohort.max_si_depression);
        if (c.contains("meal_times")) {
            config.cohort.meal_times.clear();
            for (const auto& t : c.at("meal_times")) {
                config.cohort.meal_times.push_back(t.get<double>());
            }
        }
    }
    if (root.contains("solver")) {
        const auto& s = root.at("solver");
        config.solver.rel_tol = get_or<double>(s, "rel_tol", config.solver.rel_tol);
        config.solver.abs_tol = get_or<double>(s, "abs_tol", config.solver.abs_tol);
        config.solver.max_step = get_or<double>(s, "max_step", config.solver.max_step);
    }
    if (root.contains("plan")) {
        const auto& p = root.at("plan");
        config.plan.initial_q_inv = get_or<double>(p, "initial_q_inv", config.plan.initial_q_inv);
        config.plan.decrement = get_or<double>(p, "decrement", config.plan.decrement);
        const auto mode = get_or<std::string>(p, "trace_error_mode", "trace_rmse");
        if (mode == "trace_rmse") config.plan.error_mode = TraceErrorMode::trace_rmse;
        else if (mode == "alg1_sum") config.plan.error_mode = TraceErrorMode::alg1_sum;
        else throw ConfigError("trace_error_mode must be trace_rmse or alg1_sum");
    }
    if (root.contains("pid")) {
        const auto& p = root.at("pid");
        auto& pid = config.controller_settings.pid;
        pid.kp = get_or<double>(p, "kp", pid.kp);
        pid.ki = get_or<double>(p, "ki", pid.ki);
        pid.kd = get_or<double>(p, "kd", pid.kd);
        pid.setpoint = get_or<double>(p, "setpoint", pid.setpoint);
        pid.u_max = get_or<double>(p, "u_max", pid.u_max);
    }
    if (root.contains("mpc")) {
        const auto& m = root.at("mpc");
        auto& mpc = config.controller_settings.mpc;
        mpc.prediction_horizon = get_or<double>(m, "prediction_horizon", mpc.prediction_horizon);
        mpc.control_horizon = get_or<double>(m, "control_horizon", mpc.control_horizon);
        mpc.setpoint = get_or<double>(m, "setpoint", mpc.setpoint);
        mpc.q_weight = get_or<double>(m, "q_weight", mpc.q_weight);
        mpc.r_weight = get_or<double>(m, "r_weight", mpc.r_weight);
        mpc.u_max = get_or<double>(m, "u_max", mpc.u_max);
    }
    if (root.contains("bayesian")) {
        const auto& b = root.at("bayesian");
        auto& bay = config.controller_settings.bayesian;
        bay.q_glucose = get_or<double>(b, "q_glucose", bay.q_glucose);
        bay.r_input = get_or<double>(b, "r_input", bay.r_input);
        bay.process_noise = get_or<double>(b, "process_noise", bay.process_noise);
        bay.measurement_noise = get_or<double>(b, "measurement_noise", bay.measurement_noise);
        bay.setpoint_floor = get_or<double>(b, "setpoint_floor", bay.setpoint_floor);
        bay.meal_window = get_or<double>(b, "meal_window", bay.meal_window);
        bay.u_max = get_or<double>(b, "u_max", bay.u_max);
    }
    config.controller_settings.tick_period =
        get_or<double>(root, "tick_period", config.controller_settings.tick_period);
    config.cohort.q_sim = config.q_sim;
    config.validate();
    return config;
}

std::string ExperimentConfig::to_json_string() const {
    json root;
    root["seed"] = seed;
    root["cohort_size"] = cohort_size;
    root["horizon_minutes"] = horizon;
    root["q_sim"] = q_sim;
    root["timing_reps"] = timing_reps;
    root["koopman_order"] = koopman_order;
    root["koopman_training_days"] = koopman_training_days;
    root["carb_to_glucose"] = carb_to_glucose;
    root["out_dir"] = out_dir;
    root["quiet"] = quiet;
    json ctrls = json::array();
    for (auto kind : controllers) ctrls.push_back(to_string(kind));
    root["controllers"] = ctrls;
    json engines = json::array();
    if (run_oracle) engines.push_back("oracle");
    if (run_plis) engines.push_back("plis");
    if (run_koopman) engines.push_back("koopman");
    root["engines"] = engines;
    json buds = json::array();
    for (const auto& b : budgets) buds.push_back({{"eps_p", b.eps_p}, {"psi_p", b.psi_p}});
    root["budgets"] = buds;
    root["cohort"] = {{"perturbation", cohort.perturbation},
                      {"glucose_eq_spread", cohort.glucose_eq_spread},
                      {"max_si_depression", cohort.max_si_depression},
                      {"meal_times", cohort.meal_times}};
    root["solver"] = {{"rel_tol", solver.rel_tol},
                      {"abs_tol", solver.abs_tol},
                      {"max_step", solver.max_step}};
    root["plan"] = {{"initial_q_inv", plan.initial_q_inv},
                    {"decrement", plan.decrement},
                    {"trace_error_mode",
                     plan.error_mode == TraceErrorMode::trace_rmse ? "trace_rmse" : "alg1_sum"}};
    const auto& pid = controller_settings.pid;
    root["pid"] = {{"kp", pid.kp}, {"ki", pid.ki}, {"kd", pid.kd},
                   {"setpoint", pid.setpoint}, {"u_max", pid.u_max}};
    const auto& mpc = controller_settings.mpc;
    root["mpc"] = {{"prediction_horizon", mpc.prediction_horizon},
                   {"control_horizon", mpc.control_horizon},
                   {"setpoint", mpc.setpoint},
                   {"q_weight", mpc.q_weight},
                   {"r_weight", mpc.r_weight},
                   {"u_max", mpc.u_max}};
    const auto& bay = controller_settings.bayesian;
    root["bayesian"] = {{"q_glucose", bay.q_glucose},
                        {"r_input", bay.r_input},
                        {"process_noise", bay.process_noise},
                        {"measurement_noise", bay.measurement_noise},
                        {"setpoint_floor", bay.setpoint_floor},
                        {"meal_window", bay.meal_window},
                        {"u_max", bay.u_max}};
    root["tick_period"] = controller_settings.tick_period;
    return root.dump(2);
}

void ensure_writable_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
    const fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream out(probe);
    if (!out) throw Error("output directory " + dir + " is not writable");
    out.close();
    fs::remove(probe, ec);
}

ExperimentResults run_experiment(const ExperimentConfig& config) {
    config.validate();
    ensure_writable_dir(config.out_dir);

    ExperimentResults results;
    results.config = config;
    results.cohort = generate_cohort(config.seed, config.cohort_size, config.cohort);

    for (const auto& patient : results.cohort) {
        const TimeVaryingLinearSystem sys = bmm_system(patient);
        const auto meals = expand_daily(patient.meal_schedule, config.horizon);
        const WmnEventSchedule schedule = announcements_for(meals);

        for (auto controller_kind : config.controllers) {
            struct TimedEngine {
                std::string engine;
                BudgetPair budget{};
                InvariantStepPlan plan;
                KoopmanModel koopman;
                RunResult run;
                std::vector<double> times;
                bool failed = false;
                std::string failure;
            };
            std::vector<TimedEngine> lanes;

            auto controller =
                make_controller(controller_kind, config.controller_settings, patient);
            LoopSetup setup =
                make_loop_setup(patient, config.horizon, controller.get(), &schedule,
                                config.controller_settings.tick_period,
                                config.carb_to_glucose);

            if (config.run_oracle) {
                lanes.push_back({.engine = "oracle"});
            }
            if (config.run_plis) {
                const InputSignal reference =
                    open_loop_input(patient, config.horizon, config.carb_to_glucose);
                for (const auto& budget : config.budgets) {
                    TimedEngine lane{.engine = "plis", .budget = budget};
                    PlanOptions opts = config.plan;
                    opts.q_sim = config.q_sim;
                    try {
                        lane.plan = compute_invariant_step(
                            sys, reference, 0.0, config.horizon, patient.x0,
                            ErrorBudget{budget.eps_p, budget.psi_p}, opts);
                    } catch (const Error& e) {
                        lane.failed = true;
                        lane.failure = e.what();
                    }
                    lanes.push_back(std::move(lane));
                }
            }
            if (config.run_koopman) {
                TimedEngine lane{.engine = "koopman"};
                try {
                    // Train on an oracle run of the same loop over the longer
                    // training horizon, on the shared q_sim grid.
                    const double train_horizon = config.koopman_training_days * 1440.0;
                    const auto train_meals = expand_daily(patient.meal_schedule, train_horizon);
                    const WmnEventSchedule train_schedule = announcements_for(train_meals);
                    auto train_controller = make_controller(
                        controller_kind, config.controller_settings, patient);
                    LoopSetup train_setup = make_loop_setup(
                        patient, train_horizon, train_controller.get(), &train_schedule,
                        config.controller_settings.tick_period, config.carb_to_glucose);
                    const RunResult training = oracle_simulate(
                        sys, train_setup, patient.x0, 0.0, train_horizon, config.solver);
                    SnapshotSequence sequence;
                    sequence.reserve(training.trace.size());
                    for (std::size_t k = 0; k < training.trace.size(); ++k) {
                        sequence.emplace_back(
                            training.trace.states[k],
                            applied_input(train_setup, training.commands,
                                          training.trace.times[k]));
                    }
                    lane.koopman =
                        dmd_fit({sequence}, config.koopman_order, config.q_sim);
                } catch (const Error& e) {
                    lane.failed = true;
                    lane.failure = e.what();
                }
                lanes.push_back(std::move(lane));
            }

            // Interleaved timing: one discarded warmup per lane, then
            // timing_reps rounds visiting every lane in order.
            auto execute = [&](TimedEngine& lane) -> RunResult {
                if (lane.engine == "oracle") {
                    return oracle_simulate(sys, setup, patient.x0, 0.0, config.horizon,
                                           config.solver);
                }
                if (lane.engine == "plis") {
                    return plis_simulate(sys, setup, patient.x0, 0.0, config.horizon,
                                         lane.plan, config.q_sim);
                }
                return koopman_simulate(lane.koopman, setup, patient.x0, 0.0,
                                        config.horizon);
            };
            for (auto& lane : lanes) {
                if (lane.failed) continue;
                try {
                    lane.run = execute(lane);  // warmup, discarded timing
                } catch (const Error& e) {
                    lane.failed = true;
                    lane.failure = e.what();
                }
            }
            for (int rep = 0; rep < config.timing_reps; ++rep) {
                for (auto& lane : lanes) {
                    if (lane.failed) continue;
                    try {
                        lane.run = execute(lane);
                        lane.times.push_back(lane.run.trace.wall_clock_seconds);
                    } catch (const Error& e) {
                        lane.failed = true;
                        lane.failure = e.what();
                    }
                }
            }

            const TimedEngine* oracle_lane = nullptr;
            for (const auto& lane : lanes) {
                if (lane.engine == "oracle" && !lane.failed) oracle_lane = &lane;
            }

            for (auto& lane : lanes) {
                CellResult cell;
                cell.patient_id = patient.id;
                cell.controller = controller_kind;
                cell.engine = lane.engine;
                cell.eps_p = lane.budget.eps_p;
                cell.psi_p = lane.budget.psi_p;
                if (lane.failed) {
                    cell.failed = true;
                    cell.failure = lane.failure;
                    ++results.failed_cells;
                    results.cells.push_back(std::move(cell));
                    continue;
                }
                cell.wall_seconds = median(lane.times);
                lane.run.trace.wall_clock_seconds = cell.wall_seconds;
                cell.glycemic_report = glycemic(lane.run.trace);
                if (lane.engine == "plis") {
                    cell.q_inv = lane.plan.q_inv;
                    cell.plan_converged = lane.plan.converged;
                    cell.plan_error_rmse = lane.plan.trace_error_rmse;
                    cell.plan_error_alg1_sum = lane.plan.trace_error_alg1_sum;
                }
                if (lane.engine != "oracle" && oracle_lane != nullptr) {
                    cell.rho = optimality(lane.run.trace, oracle_lane->run.trace);
                    cell.s_p = oracle_lane->run.trace.wall_clock_seconds /
                               cell.wall_seconds;
                    cell.trace_error = trace_distance(
                        lane.run.trace, oracle_lane->run.trace, DistanceMode::relative_rmse);
                    cell.has_comparison = true;
                }

                TraceRecord record;
                std::ostringstream name;
                name << patient.id << "_" << to_string(controller_kind) << "_"
                     << lane.engine;
                if (lane.engine == "plis") {
                    name << "_eps" << lane.budget.eps_p * 100.0 << "_psi"
                         << lane.budget.psi_p * 100.0;
                }
                record.filename = name.str() + ".csv";
                record.patient_id = patient.id;
                record.trace = lane.run.trace;
                record.commands = lane.run.commands;
                record.basal_command = setup.basal_command;
                results.traces.push_back(std::move(record));
                results.cells.push_back(std::move(cell));
            }
        }
    }
    return results;
}

void emit_reports(const ExperimentResults& results, const std::string& dir) {
    ensure_writable_dir(dir);
    ensure_writable_dir((fs::path(dir) / "traces").string());

    const auto& cohort = results.cohort;
    auto patient_by_id = [&cohort](const std::string& id) -> const VirtualPatient& {
        for (const auto& p : cohort) {
            if (p.id == id) return p;
        }
        throw Error("unknown patient id " + id);
    };

    // Aggregate cells by (approach, controller).
    struct Key {
        std::string approach;
        ControllerKind controller;
        bool operator<(const Key& other) const {
            if (approach != other.approach) return approach < other.approach;
            return static_cast<int>(controller) < static_cast<int>(other.controller);
        }
    };
    struct Agg {
        std::vector<double> tir, tar, tbr, rho, sp, err;
        bool has_comparison = false;
    };
    std::vector<std::pair<Key, Agg>> groups;
    auto group_of = [&groups](const Key& key) -> Agg& {
        for (auto& [k, agg] : groups) {
            if (!(k < key) && !(key < k)) return agg;
        }
        groups.emplace_back(key, Agg{});
        return groups.back().second;
    };
    for (const auto& cell : results.cells) {
        if (cell.failed) continue;
        Agg& agg = group_of(Key{cell.approach_label(), cell.controller});
        agg.tir.push_back(cell.glycemic_report.tir);
        agg.tar.push_back(cell.glycemic_report.tar);
        agg.tbr.push_back(cell.glycemic_report.tbr);
        if (cell.has_comparison) {
            agg.has_comparison = true;
            agg.rho.push_back(cell.rho);
            agg.sp.push_back(cell.s_p);
            agg.err.push_back(cell.trace_error);
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    {
        std::ofstream out(fs::path(dir) / "glycemic.csv");
        out << "approach,control_method,tir_mean,tir_sd,tar_mean,tar_sd,tbr_mean,tbr_sd\n";
        for (const auto& [key, agg] : groups) {
            const auto tir = mean_sd(agg.tir), tar = mean_sd(agg.tar), tbr = mean_sd(agg.tbr);
            out << key.approach << "," << to_string(key.controller) << "," << fmt(tir.mean)
                << "," << fmt(tir.sd) << "," << fmt(tar.mean) << "," << fmt(tar.sd) << ","
                << fmt(tbr.mean) << "," << fmt(tbr.sd) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "optimality.csv");
        out << "approach,control_method,rho_mean,rho_sd,trace_error_mean,trace_error_sd\n";
        for (const auto& [key, agg] : groups) {
            if (!agg.has_comparison) continue;
            const auto rho = mean_sd(agg.rho), err = mean_sd(agg.err);
            out << key.approach << "," << to_string(key.controller) << "," << fmt(rho.mean)
                << "," << fmt(rho.sd) << "," << fmt(err.mean) << "," << fmt(err.sd) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "speedup.csv");
        out << "approach,control_method,speedup_mean,speedup_sd\n";
        for (const auto& [key, agg] : groups) {
            if (!agg.has_comparison) continue;
            const auto sp = mean_sd(agg.sp);
            out << key.approach << "," << to_string(key.controller) << "," << fmt(sp.mean)
                << "," << fmt(sp.sd) << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "summary.txt");
        out << "Glycemic metrics (cohort mean [+/- sd])\n";
        out << "approach | control | TIR% | TAR% | TBR%\n";
        char line[256];
        for (const auto& [key, agg] : groups) {
            const auto tir = mean_sd(agg.tir), tar = mean_sd(agg.tar), tbr = mean_sd(agg.tbr);
            std::snprintf(line, sizeof(line),
                          "%-28s | %-8s | %5.1f [+/- %4.1f] | %5.1f [+/- %4.1f] | %5.1f [+/- %4.1f]\n",
                          key.approach.c_str(), to_string(key.controller), tir.mean, tir.sd,
                          tar.mean, tar.sd, tbr.mean, tbr.sd);
            out << line;
        }
        out << "\nOptimality and speedup vs oracle\n";
        out << "approach | control | rho | S_p | trace error\n";
        for (const auto& [key, agg] : groups) {
            if (!agg.has_comparison) continue;
            const auto rho = mean_sd(agg.rho), sp = mean_sd(agg.sp), err = mean_sd(agg.err);
            std::snprintf(line, sizeof(line),
                          "%-28s | %-8s | %5.3f | %5.2f | %7.5f\n", key.approach.c_str(),
                          to_string(key.controller), rho.mean, sp.mean, err.mean);
            out << line;
        }
        if (results.failed_cells > 0) {
            out << "\nfailed cells: " << results.failed_cells << " (see manifest.json)\n";
        }
    }

    for (const auto& record : results.traces) {
        const VirtualPatient& patient = patient_by_id(record.patient_id);
        std::ofstream out(fs::path(dir) / "traces" / record.filename);
        out << "time,i,i_s,G,u_insulin,u_meal,p3\n";
        const auto meals = expand_daily(patient.meal_schedule,
                                        results.config.horizon);
        for (std::size_t k = 0; k < record.trace.size(); ++k) {
            const double t = record.trace.times[k];
            const auto& x = record.trace.states[k];
            out << fmt(t) << "," << fmt(x(0)) << "," << fmt(x(1)) << "," << fmt(x(2)) << ","
                << fmt(command_at(record.commands, t, record.basal_command)) << ","
                << fmt(meal_to_input(meals, t, results.config.carb_to_glucose)) << ","
                << fmt(p3_at(patient, t)) << "\n";
        }
    }

    {
        json manifest;
        manifest["config"] = json::parse(results.config.to_json_string());
        manifest["timing_protocol"] =
            "median of timing_reps interleaved runs per engine, one discarded warmup, "
            "single-threaded";
        manifest["cohort_ids"] = json::array();
        for (const auto& p : cohort) manifest["cohort_ids"].push_back(p.id);
        char host[256] = "unknown";
        if (const char* env = std::getenv("HOSTNAME")) std::snprintf(host, sizeof(host), "%s", env);
        manifest["host"] = host;
        manifest["failed_cells"] = results.failed_cells;
        json cells = json::array();
        for (const auto& cell : results.cells) {
            json c;
            c["patient"] = cell.patient_id;
            c["controller"] = to_string(cell.controller);
            c["approach"] = cell.approach_label();
            c["failed"] = cell.failed;
            if (cell.failed) {
                c["failure"] = cell.failure;
            } else {
                c["wall_seconds"] = cell.wall_seconds;
                if (cell.engine == "plis") {
                    c["q_inv"] = cell.q_inv;
                    c["plan_converged"] = cell.plan_converged;
                    c["plan_error_rmse"] = cell.plan_error_rmse;
                    c["plan_error_alg1_sum"] = cell.plan_error_alg1_sum;
                }
                if (cell.has_comparison) {
                    c["rho"] = cell.rho;
                    c["speedup"] = cell.s_p;
                    c["trace_error"] = cell.trace_error;
                }
            }
            cells.push_back(c);
        }
        manifest["cells"] = cells;
        std::ofstream out(fs::path(dir) / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
}

}  // namespace plis
