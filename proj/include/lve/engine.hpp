#pragma once

#include "lve/core.hpp"
#include "lve/evaluator.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace lve {

/// Distance statistics of one generation's population. best_so_far is the
/// hall-of-fame minimum after the generation was folded in.
struct GenerationStats {
    int generation = 0;
    double best_distance = 0.0;
    double mean_distance = 0.0;
    double std_distance = 0.0;
    double best_so_far = 0.0;
    long long evaluations_so_far = 0;

    friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

struct HallOfFameEntry {
    LatentVector genotype;
    Embedding embedding;
    double distance;

    friend bool operator==(const HallOfFameEntry&, const HallOfFameEntry&) = default;
};

/// Best-first archive of distinct genotypes, bounded by capacity.
class HallOfFame {
public:
    explicit HallOfFame(std::size_t capacity);

    /// Inserts if the entry beats the worst member or there is room. Exact
    /// genotype duplicates are ignored. Equal distances keep insertion order.
    void offer(const LatentVector& genotype, const Embedding& embedding, double distance);

    const std::vector<HallOfFameEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::vector<HallOfFameEntry> entries_;
};

struct RunRecord {
    EvolutionConfig config;
    std::uint64_t seed = 0;
    std::vector<GenerationStats> generations;
    std::vector<HallOfFameEntry> hall_of_fame;
    long long evaluations = 0;
    double wall_time_seconds = 0.0;

    /// Equality over everything the run determines, i.e. excluding wall time.
    bool same_outcome(const RunRecord& other) const;
};

using ProgressSink = std::function<void(const GenerationStats&)>;

/// Thrown when the evaluator fails mid-run. Carries the generations completed
/// before the failure.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, RunRecord partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}

    const RunRecord& partial() const { return partial_; }

private:
    RunRecord partial_;
};

/// Generational EA with tournament selection, BLX-alpha crossover applied to
/// consecutive winner pairs with probability crossover_prob, and a
/// per-individual mutation gate mutation_prob (per_gene_mutation_rate inside).
/// The population is replaced wholesale each generation; only offspring whose
/// genotype changed are re-evaluated, in a single batch. A generation with no
/// changed genotypes makes no evaluator call.
RunRecord run_evolution(const EvolutionConfig& config, BatchEvaluator& evaluator, Rng& rng,
                        const ProgressSink& observer = {});

/// First hall-of-fame entry. Throws ContractError on an empty record.
const HallOfFameEntry& best_so_far(const RunRecord& record);

}  // namespace lve
