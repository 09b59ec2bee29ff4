#include "lve/cli.hpp"

#include "lve/bridge.hpp"
#include "lve/evaluator.hpp"
#include "lve/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace lve::cli {

namespace fs = std::filesystem;

void EvaluatorOptions::validate() const {
    if (kind == "synthetic") {
        if (!worker_command.empty() || !target_path.empty())
            throw ConfigError("--worker-cmd and --target are only valid with --evaluator worker");
        if (proxy_dim < 1) throw ConfigError("--proxy-dim must be positive");
    } else if (kind == "worker") {
        if (worker_command.empty()) throw ConfigError("--evaluator worker requires --worker-cmd");
        if (target_path.empty()) throw ConfigError("--evaluator worker requires --target");
    } else {
        throw ConfigError("unknown evaluator '" + kind + "'");
    }
}

EvaluatorDescriptor EvaluatorOptions::descriptor() const {
    EvaluatorDescriptor d;
    d.kind = kind;
    if (kind == "synthetic") {
        d.world_seed = world_seed;
        d.proxy_dim = proxy_dim;
    } else {
        d.worker_command = worker_command;
        d.target_path = target_path;
    }
    return d;
}

namespace {

std::string one_line(std::string text) {
    while (!text.empty() && text.back() == '\n') text.pop_back();
    std::string out;
    for (char c : text) {
        if (c == '\n') out += " | ";
        else out += c;
    }
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

EvolutionConfig load_or_default(const std::optional<fs::path>& path) {
    EvolutionConfig config = path ? load_config(path->string()) : EvolutionConfig{};
    config.validate();
    return config;
}

std::vector<double> parse_axis(const std::string& values, const std::string& name) {
    std::vector<double> out;
    std::stringstream ss(values);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("grid axis " + name + ": '" + item + "' is not a number");
        }
        if (used != item.size()) throw ConfigError("grid axis " + name + ": '" + item + "' is not a number");
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("grid axis " + name + ": probability out of [0,1]");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("grid axis " + name + " is empty");
    return out;
}

}  // namespace

SweepGrid parse_grid(const std::string& text) {
    SweepGrid grid;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ';');) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("grid entry '" + part + "' lacks '='");
        const std::string key = part.substr(0, eq);
        const std::string values = part.substr(eq + 1);
        if (key == "pR") grid.crossover_probs = parse_axis(values, key);
        else if (key == "pM") grid.mutation_probs = parse_axis(values, key);
        else throw ConfigError("unknown grid axis '" + key + "'");
    }
    if (grid.crossover_probs.empty() || grid.mutation_probs.empty())
        throw ConfigError("grid must define both pR and pM");
    return grid;
}

std::vector<SweepRun> plan_sweep(const SweepGrid& grid, int repeats, std::uint64_t master_seed) {
    if (repeats < 1) throw ConfigError("--repeats must be at least 1");
    std::vector<SweepRun> runs;
    std::size_t cell = 0;
    for (double pr : grid.crossover_probs)
        for (double pm : grid.mutation_probs) {
            for (int r = 0; r < repeats; ++r) {
                const std::size_t index = cell * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r);
                char name[32];
                std::snprintf(name, sizeof name, "run_%04zu", index);
                runs.push_back({index, cell, r, pr, pm, derive_child_seed(master_seed, index), name});
            }
            ++cell;
        }
    return runs;
}

RunRecord execute_run(const EvolutionConfig& config, std::uint64_t seed, const EvaluatorOptions& evaluator,
                      const fs::path& out_dir, std::ostream* progress) {
    config.validate();
    evaluator.validate();
    ensure_dir(out_dir);

    StatsCsvWriter stats(out_dir / "stats.csv");
    const ProgressSink sink = [&](const GenerationStats& s) {
        stats.append(s);
        if (progress)
            *progress << "gen " << s.generation << " best " << format_double(s.best_distance) << " best_so_far "
                      << format_double(s.best_so_far) << " evals " << s.evaluations_so_far << '\n';
    };

    Rng rng(seed);
    RunRecord record;
    if (evaluator.kind == "synthetic") {
        const SyntheticWorld world(evaluator.world_seed, config.latent_dim, evaluator.proxy_dim, config.embedding_dim);
        SyntheticEvaluator eval(world);
        record = run_evolution(config, eval, rng, sink);
    } else {
        auto handle = bridge::WorkerHandle::spawn(evaluator.worker_command,
                                                  std::chrono::milliseconds(evaluator.shutdown_grace_ms));
        handle->handshake(config.latent_dim, config.embedding_dim);
        bridge::WorkerEvaluator eval(*handle, config.latent_dim, config.embedding_dim);
        eval.load_target(evaluator.target_path);
        record = run_evolution(config, eval, rng, sink);
        const int status = handle->shutdown();
        if (status != 0 && progress) *progress << "worker exited with status " << status << '\n';
    }
    record.seed = seed;
    write_run_outcome(out_dir, record, evaluator.descriptor());
    return record;
}

int report_current_exception(std::ostream& err, const std::string& context) {
    const std::string prefix = context.empty() ? "error: " : "error: " + context + ": ";
    try {
        throw;
    } catch (const RunAborted& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kEvaluatorError;
    } catch (const ConfigError& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kConfigError;
    } catch (const ContractError& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kIoError;
    } catch (const EvaluatorError& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kEvaluatorError;
    } catch (const std::exception& e) {
        err << prefix << one_line(e.what()) << '\n';
        return kEvaluatorError;
    }
}

int cmd_run(const RunOptions& options, std::ostream& err) {
    try {
        options.evaluator.validate();
        EvolutionConfig config = load_or_default(options.config_path);
        const std::uint64_t seed = options.seed.value_or(config.master_seed);
        execute_run(config, seed, options.evaluator, options.out_dir, options.progress ? &err : nullptr);
        return kOk;
    } catch (...) {
        return report_current_exception(err, "run");
    }
}

int cmd_sweep(const SweepOptions& options, std::ostream& err) {
    std::vector<SweepRun> plan;
    EvolutionConfig base;
    try {
        options.evaluator.validate();
        base = load_or_default(options.config_path);
        const SweepGrid grid = parse_grid(options.grid);
        if (options.jobs < 1) throw ConfigError("--jobs must be at least 1");
        plan = plan_sweep(grid, options.repeats, options.seed.value_or(base.master_seed));
        ensure_dir(options.out_dir);
    } catch (...) {
        return report_current_exception(err, "sweep");
    }

    struct Outcome {
        std::string best_distance;
        std::string wall_time;
        std::string status = "ok";
        int code = kOk;
    };
    std::vector<Outcome> outcomes(plan.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            const SweepRun& run = plan[i];
            EvolutionConfig config = base;
            config.crossover_prob = run.crossover_prob;
            config.mutation_prob = run.mutation_prob;
            try {
                const RunRecord record = execute_run(config, run.seed, options.evaluator, options.out_dir / run.dir_name);
                outcomes[i].best_distance = format_double(best_so_far(record).distance);
                outcomes[i].wall_time = format_double(record.wall_time_seconds);
            } catch (...) {
                std::ostringstream msg;
                std::lock_guard lock(err_mutex);
                outcomes[i].code = report_current_exception(msg, run.dir_name);
                std::string line = msg.str();
                err << line;
                line = one_line(line);
                std::replace(line.begin(), line.end(), ',', ';');
                outcomes[i].status = "failed: " + line;
            }
        }
    };

    const int jobs = std::min<int>(options.jobs, static_cast<int>(plan.size()));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string summary = "run_index,cell,p_R,p_M,repeat,seed,best_distance,wall_time_seconds,status\n";
    int failures = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const SweepRun& r = plan[i];
        summary += std::to_string(r.run_index) + ',' + std::to_string(r.cell) + ',' + format_double(r.crossover_prob) +
                   ',' + format_double(r.mutation_prob) + ',' + std::to_string(r.repeat) + ',' + std::to_string(r.seed) +
                   ',' + outcomes[i].best_distance + ',' + outcomes[i].wall_time + ',' + outcomes[i].status + '\n';
        if (outcomes[i].code != kOk) ++failures;
    }
    try {
        write_text_file(options.out_dir / "sweep_summary.csv", summary);
    } catch (...) {
        return report_current_exception(err, "sweep");
    }
    if (failures > 0) {
        err << "sweep: " << failures << " of " << plan.size() << " runs failed\n";
        for (const auto& o : outcomes)
            if (o.code != kOk) return o.code;
    }
    return kOk;
}

namespace {

struct LoadedRun {
    fs::path dir;
    RunArtifacts artifacts;
};

std::vector<fs::path> expand_run_dirs(const std::vector<fs::path>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::exists(in / "meta.json") || !fs::is_directory(in)) {
            out.push_back(in);
            continue;
        }
        std::vector<fs::path> children;
        for (const auto& entry : fs::directory_iterator(in))
            if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) children.push_back(entry.path());
        if (children.empty()) {
            out.push_back(in);  // reported as missing artifacts by the loader
            continue;
        }
        std::sort(children.begin(), children.end());
        out.insert(out.end(), children.begin(), children.end());
    }
    return out;
}

std::string run_label(const fs::path& dir) {
    const fs::path clean = dir.lexically_normal();
    return clean.has_filename() ? clean.filename().string() : clean.parent_path().filename().string();
}

}  // namespace

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.runs.empty()) throw ConfigError("--runs requires at least one directory");
        if (options.baseline && !(*options.baseline > 0.0)) throw ConfigError("--baseline must be positive");

        std::vector<LoadedRun> runs;
        for (const auto& dir : expand_run_dirs(options.runs)) runs.push_back({dir, load_run_artifacts(dir)});
        ensure_dir(options.out_dir);

        switch (options.emit) {
        case ReportKind::Summary: {
            std::map<std::string, std::vector<double>> by_instance;
            for (const auto& r : runs) by_instance[r.artifacts.meta.evaluator.instance_id()].push_back(r.artifacts.meta.best_distance);

            std::string csv = "instance,runs,min,mean,std,table_row";
            if (options.baseline) csv += ",baseline,delta_percent";
            csv += '\n';
            for (const auto& [instance, values] : by_instance) {
                const DistanceSummary s = summarize_distances(values);
                csv += instance.find(',') != std::string::npos ? '"' + instance + '"' : instance;
                csv += ',' + std::to_string(values.size()) + ',' + format_double(s.min) + ',' + format_double(s.mean) +
                       ',' + format_double(s.std) + ',' + format_summary(s);
                if (options.baseline) {
                    const double delta = deception_delta(s.min, *options.baseline);
                    csv += ',' + format_double(*options.baseline) + ',' + format_double(delta);
                    out << instance << ": best " << format_double(s.min) << " vs baseline "
                        << format_double(*options.baseline) << " -> delta " << format_double(delta) << "%\n";
                }
                csv += '\n';
                out << instance << ": " << format_summary(s) << " (" << values.size() << " runs)\n";
            }
            write_text_file(options.out_dir / "summary.csv", csv);
            break;
        }
        case ReportKind::Diversity: {
            std::vector<Embedding> embeddings;
            std::string header;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                embeddings.push_back(runs[i].artifacts.best_embedding);
                header += (i ? "," : "") + run_label(runs[i].dir);
            }
            const DiversityMatrix m = diversity_matrix(embeddings);
            std::string csv = header + '\n';
            for (Eigen::Index r = 0; r < m.distances.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.distances.cols(); ++c) csv += (c ? "," : "") + format_double(m.distances(r, c));
                csv += '\n';
            }
            write_text_file(options.out_dir / "diversity.csv", csv);
            write_text_file(options.out_dir / "diversity_summary.csv",
                            "solutions,min,max,mean,std,table_row\n" + std::to_string(runs.size()) + ',' +
                                format_double(m.min) + ',' + format_double(m.max) + ',' + format_double(m.mean) + ',' +
                                format_double(m.std) + ',' + format_diversity(m) + '\n');
            out << "diversity over " << runs.size() << " solutions: " << format_diversity(m) << '\n';
            break;
        }
        case ReportKind::Curves: {
            std::vector<RunRecord> records;
            std::string mapping = "run_id,run\n";
            for (std::size_t i = 0; i < runs.size(); ++i) {
                RunRecord rec;
                rec.config = runs[i].artifacts.meta.config;
                rec.seed = runs[i].artifacts.meta.seed;
                rec.generations = runs[i].artifacts.stats;
                records.push_back(std::move(rec));
                mapping += std::to_string(i) + ',' + run_label(runs[i].dir) + '\n';
            }
            std::string csv = "generation,run_id,best_distance\n";
            for (const auto& p : convergence_curves(records))
                csv += std::to_string(p.generation) + ',' + std::to_string(p.run_id) + ',' + format_double(p.best_distance) + '\n';
            write_text_file(options.out_dir / "curves.csv", csv);
            write_text_file(options.out_dir / "curves_runs.csv", mapping);
            out << "curves: " << records.size() << " runs\n";
            break;
        }
        }
        return kOk;
    } catch (const ContractError& e) {
        // Inputs that load but cannot be combined (mismatched configs, too few runs).
        err << "error: report: " << one_line(e.what()) << '\n';
        return kConfigError;
    } catch (...) {
        return report_current_exception(err, "report");
    }
}

namespace {

std::optional<int> env_jobs() {
    const char* v = std::getenv("LATENT_EVOLVE_JOBS");
    if (!v || !*v) return std::nullopt;
    try {
        const int jobs = std::stoi(v);
        if (jobs >= 1) return jobs;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

void add_evaluator_flags(CLI::App& cmd, EvaluatorOptions& e) {
    cmd.add_option("--evaluator", e.kind, "synthetic or worker")->check(CLI::IsMember({"synthetic", "worker"}));
    cmd.add_option("--worker-cmd", e.worker_command, "shell command that starts a protocol worker");
    cmd.add_option("--target", e.target_path, "target image path passed to the worker");
    cmd.add_option("--world-seed", e.world_seed, "synthetic world seed");
    cmd.add_option("--proxy-dim", e.proxy_dim, "synthetic proxy image dimension");
    cmd.add_option("--grace-ms", e.shutdown_grace_ms, "worker shutdown grace period in milliseconds");
}

}  // namespace

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evolutionary latent-space search toward a target embedding", "latent_evolve"};
    app.require_subcommand(1);

    RunOptions run;
    std::string run_config, run_out;
    std::optional<std::uint64_t> run_seed;
    auto* run_cmd = app.add_subcommand("run", "run one evolution");
    run_cmd->add_option("--config", run_config, "JSON config file");
    add_evaluator_flags(*run_cmd, run.evaluator);
    run_cmd->add_option("--seed", run_seed, "RNG seed (defaults to the config's master_seed)");
    run_cmd->add_option("--out", run_out, "output run directory")->required();
    run_cmd->add_flag("--progress", run.progress, "log every generation to stderr");

    SweepOptions sweep;
    std::string sweep_config, sweep_out;
    std::optional<std::uint64_t> sweep_seed;
    std::optional<int> sweep_jobs;
    auto* sweep_cmd = app.add_subcommand("sweep", "run a (pR, pM) grid with repeats");
    sweep_cmd->add_option("--config", sweep_config, "JSON config file");
    add_evaluator_flags(*sweep_cmd, sweep.evaluator);
    sweep_cmd->add_option("--grid", sweep.grid, "grid, e.g. \"pR=0.6,0.75,0.9;pM=0.001,0.01,0.1\"");
    sweep_cmd->add_option("--repeats", sweep.repeats, "independent runs per cell");
    sweep_cmd->add_option("--seed", sweep_seed, "master seed (defaults to the config's master_seed)");
    sweep_cmd->add_option("--jobs", sweep_jobs, "parallel runs (default: $LATENT_EVOLVE_JOBS or 1)");
    sweep_cmd->add_option("--out", sweep_out, "output sweep directory")->required();

    ReportOptions report;
    std::vector<std::string> report_runs;
    std::string report_emit = "summary", report_out;
    std::optional<double> report_baseline;
    auto* report_cmd = app.add_subcommand("report", "summarize run directories");
    report_cmd->add_option("--runs", report_runs, "run directories (sweep directories expand to their runs)")
        ->required();
    report_cmd->add_option("--emit", report_emit, "summary, diversity or curves")
        ->check(CLI::IsMember({"summary", "diversity", "curves"}));
    report_cmd->add_option("--baseline", report_baseline, "baseline distance for the deception delta");
    report_cmd->add_option("--out", report_out, "output directory")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kConfigError;
    }

    if (*run_cmd) {
        if (!run_config.empty()) run.config_path = run_config;
        run.seed = run_seed;
        run.out_dir = run_out;
        return cmd_run(run, err);
    }
    if (*sweep_cmd) {
        if (!sweep_config.empty()) sweep.config_path = sweep_config;
        sweep.seed = sweep_seed;
        sweep.out_dir = sweep_out;
        sweep.jobs = sweep_jobs ? *sweep_jobs : env_jobs().value_or(1);
        return cmd_sweep(sweep, err);
    }
    for (const auto& r : report_runs) report.runs.emplace_back(r);
    report.emit = report_emit == "summary" ? ReportKind::Summary
                  : report_emit == "diversity" ? ReportKind::Diversity
                                               : ReportKind::Curves;
    report.baseline = report_baseline;
    report.out_dir = report_out;
    return cmd_report(report, out, err);
}

}  // namespace lve::cli
