#pragma once

#include "lve/artifacts.hpp"
#include "lve/core.hpp"
#include "lve/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lve::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kEvaluatorError = 2, kIoError = 3 };

struct EvaluatorOptions {
    std::string kind = "synthetic";
    std::string worker_command;
    std::string target_path;
    std::uint64_t world_seed = 0;
    int proxy_dim = 64;
    int shutdown_grace_ms = 5000;

    /// Throws ConfigError when worker flags and evaluator kind disagree.
    void validate() const;
    EvaluatorDescriptor descriptor() const;
};

struct RunOptions {
    std::optional<std::filesystem::path> config_path;
    EvaluatorOptions evaluator;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir;
    bool progress = false;
};

struct SweepGrid {
    std::vector<double> crossover_probs;
    std::vector<double> mutation_probs;

    std::size_t cells() const { return crossover_probs.size() * mutation_probs.size(); }
};

/// Parses "pR=0.6,0.75,0.9;pM=0.001,0.01,0.1". Both axes are required.
SweepGrid parse_grid(const std::string& text);

struct SweepOptions {
    std::optional<std::filesystem::path> config_path;
    EvaluatorOptions evaluator;
    std::string grid = "pR=0.6,0.75,0.9;pM=0.001,0.01,0.1";
    int repeats = 30;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir;
    int jobs = 1;
};

/// Run k of a sweep. Cells are enumerated crossover-major, then mutation,
/// then repeat: run_index = cell * repeats + repeat.
struct SweepRun {
    std::size_t run_index;
    std::size_t cell;
    int repeat;
    double crossover_prob;
    double mutation_prob;
    std::uint64_t seed;
    std::string dir_name;
};

std::vector<SweepRun> plan_sweep(const SweepGrid& grid, int repeats, std::uint64_t master_seed);

enum class ReportKind { Summary, Diversity, Curves };

struct ReportOptions {
    std::vector<std::filesystem::path> runs;
    ReportKind emit = ReportKind::Summary;
    std::optional<double> baseline;
    std::filesystem::path out_dir;
};

/// One evolution through the chosen evaluator; writes the run directory.
/// Throws ConfigError / EvaluatorError / IoError.
RunRecord execute_run(const EvolutionConfig& config, std::uint64_t seed, const EvaluatorOptions& evaluator,
                      const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

int cmd_run(const RunOptions& options, std::ostream& err);
int cmd_sweep(const SweepOptions& options, std::ostream& err);
int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

/// Maps the in-flight exception to an exit code and prints a one-line
/// diagnostic. Call only from a catch block.
int report_current_exception(std::ostream& err, const std::string& context);

/// Full command line: `latent_evolve {run|sweep|report} ...`.
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lve::cli
