#include "lve/engine.hpp"

#include "lve/operators.hpp"

#include <algorithm>
#include <chrono>

namespace lve {

HallOfFame::HallOfFame(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractError("HallOfFame: capacity must be positive");
}

void HallOfFame::offer(const LatentVector& genotype, const Embedding& embedding, double distance) {
    if (entries_.size() == capacity_ && !(distance < entries_.back().distance)) return;
    for (const auto& e : entries_)
        if (e.distance == distance && e.genotype == genotype) return;

    auto pos = std::upper_bound(entries_.begin(), entries_.end(), distance,
                                [](double d, const HallOfFameEntry& e) { return d < e.distance; });
    entries_.insert(pos, HallOfFameEntry{genotype, embedding, distance});
    if (entries_.size() > capacity_) entries_.pop_back();
}

bool RunRecord::same_outcome(const RunRecord& other) const {
    return config == other.config && seed == other.seed && generations == other.generations &&
           hall_of_fame == other.hall_of_fame && evaluations == other.evaluations;
}

const HallOfFameEntry& best_so_far(const RunRecord& record) {
    if (record.hall_of_fame.empty()) throw ContractError("best_so_far: record has no evaluations");
    return record.hall_of_fame.front();
}

namespace {

class Run {
public:
    Run(const EvolutionConfig& config, BatchEvaluator& evaluator, Rng& rng, const ProgressSink& observer)
        : config_(config), evaluator_(evaluator), rng_(rng), observer_(observer),
          hof_(static_cast<std::size_t>(config.hall_of_fame_size)) {
        record_.config = config;
    }

    RunRecord execute() {
        const auto start = std::chrono::steady_clock::now();
        const auto n = static_cast<std::size_t>(config_.population_size);

        population_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) population_.emplace_back(init_individual(rng_, config_.latent_dim));
        evaluate_invalid();
        record_generation(0);

        for (int gen = 1; gen <= config_.generations; ++gen) {
            population_ = vary(tournament_select(rng_, population_, config_.tournament_size, n));
            evaluate_invalid();
            record_generation(gen);
        }

        record_.hall_of_fame = hof_.entries();
        record_.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return std::move(record_);
    }

private:
    std::vector<Individual> vary(std::vector<Individual> offspring) {
        const double alpha = config_.blx_alpha;
        for (std::size_t i = 0; i + 1 < offspring.size(); i += 2) {
            if (!rng_.bernoulli(config_.crossover_prob)) continue;
            auto [c1, c2] = blx_crossover(rng_, offspring[i].genotype(), offspring[i + 1].genotype(), alpha);
            replace_if_changed(offspring[i], std::move(c1));
            replace_if_changed(offspring[i + 1], std::move(c2));
        }
        for (auto& ind : offspring) {
            if (!rng_.bernoulli(config_.mutation_prob)) continue;
            replace_if_changed(ind, gaussian_mutate(rng_, ind.genotype(), config_.mutation_sigma,
                                                    config_.per_gene_mutation_rate));
        }
        return offspring;
    }

    static void replace_if_changed(Individual& ind, LatentVector genotype) {
        if (genotype == ind.genotype()) return;
        ind.set_genotype(std::move(genotype));
    }

    void evaluate_invalid() {
        std::vector<std::size_t> pending;
        std::vector<LatentVector> batch;
        for (std::size_t i = 0; i < population_.size(); ++i) {
            if (population_[i].evaluated()) continue;
            pending.push_back(i);
            batch.push_back(population_[i].genotype());
        }
        if (batch.empty()) return;

        std::vector<Evaluation> results;
        try {
            results = evaluator_.evaluate_batch(batch);
        } catch (const std::exception& e) {
            record_.hall_of_fame = hof_.entries();
            const auto done = record_.generations.size();
            throw RunAborted("evaluator failed after " + std::to_string(done) + " completed generation(s), " +
                                 std::to_string(record_.evaluations) + " evaluation(s): " + e.what(),
                             std::move(record_));
        }

        for (std::size_t j = 0; j < pending.size(); ++j) {
            auto& ind = population_[pending[j]];
            ind.set_distance(results[j].distance);
            hof_.offer(ind.genotype(), results[j].embedding, results[j].distance);
        }
        record_.evaluations += static_cast<long long>(batch.size());
    }

    void record_generation(int gen) {
        Eigen::ArrayXd d(static_cast<Eigen::Index>(population_.size()));
        for (std::size_t i = 0; i < population_.size(); ++i) d[static_cast<Eigen::Index>(i)] = *population_[i].distance();

        GenerationStats s;
        s.generation = gen;
        s.best_distance = d.minCoeff();
        s.mean_distance = d.mean();
        s.std_distance = std::sqrt((d - s.mean_distance).square().mean());
        s.best_so_far = hof_.entries().front().distance;
        s.evaluations_so_far = record_.evaluations;
        record_.generations.push_back(s);
        if (observer_) observer_(s);
    }

    const EvolutionConfig& config_;
    BatchEvaluator& evaluator_;
    Rng& rng_;
    const ProgressSink& observer_;
    HallOfFame hof_;
    std::vector<Individual> population_;
    RunRecord record_;
};

}  // namespace

RunRecord run_evolution(const EvolutionConfig& config, BatchEvaluator& evaluator, Rng& rng,
                        const ProgressSink& observer) {
    config.validate();
    if (evaluator.latent_dim() != config.latent_dim || evaluator.embedding_dim() != config.embedding_dim)
        throw ContractError("run_evolution: evaluator dimensions do not match config");
    if (!evaluator.has_target()) throw ContractError("run_evolution: evaluator has no target");
    return Run(config, evaluator, rng, observer).execute();
}

}  // namespace lve
