#pragma once

#include "lve/core.hpp"
#include "lve/engine.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lve {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Identifies what produced the distances of a run. Two runs with the same
/// descriptor solved the same instance.
struct EvaluatorDescriptor {
    std::string kind;  // "synthetic" or "worker"
    std::uint64_t world_seed = 0;
    int proxy_dim = 0;
    std::string worker_command;
    std::string target_path;

    std::string instance_id() const;
    friend bool operator==(const EvaluatorDescriptor&, const EvaluatorDescriptor&) = default;
};

struct RunMeta {
    EvolutionConfig config;
    std::uint64_t seed = 0;
    EvaluatorDescriptor evaluator;
    double best_distance = 0.0;
    long long evaluations = 0;
    double wall_time_seconds = 0.0;
};

/// Files of one run directory:
///   meta.json           config echo, seed, evaluator, best distance, wall time
///   stats.csv           generation,best_distance,mean_distance,std_distance,best_so_far,evaluations
///   best_latent.json    JSON array of the best genotype
///   best_embedding.json JSON array of its embedding
///   hall_of_fame.json   [{"distance":d,"latent":[...],"embedding":[...]}, ...]
struct RunArtifacts {
    RunMeta meta;
    std::vector<GenerationStats> stats;
    LatentVector best_latent = LatentVector::zeros(1);
    Embedding best_embedding = Embedding::zeros(1);
    std::vector<HallOfFameEntry> hall_of_fame;
};

inline constexpr const char* kStatsHeader =
    "generation,best_distance,mean_distance,std_distance,best_so_far,evaluations";

std::string stats_row(const GenerationStats& s);

/// Streams stats.csv rows as generations complete.
class StatsCsvWriter {
public:
    explicit StatsCsvWriter(const std::filesystem::path& path);
    void append(const GenerationStats& s);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

/// Writes everything except stats.csv (streamed separately).
void write_run_outcome(const std::filesystem::path& dir, const RunRecord& record, const EvaluatorDescriptor& evaluator);
void write_stats_csv(const std::filesystem::path& path, const std::vector<GenerationStats>& stats);

/// Throws IoError naming the directory if anything is missing or corrupt.
RunArtifacts load_run_artifacts(const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lve
