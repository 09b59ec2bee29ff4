#pragma once

#include "lve/core.hpp"

#include <span>
#include <utility>
#include <vector>

namespace lve {

struct OperatorParams {
    double blx_alpha = 0.2;
    int tournament_size = 3;
    double mutation_sigma = 1.0;
    double per_gene_mutation_rate = 0.05;

    void validate() const {
        if (!(blx_alpha >= 0.0)) throw ContractError("OperatorParams: blx_alpha must be non-negative");
        if (tournament_size < 1) throw ContractError("OperatorParams: tournament_size must be positive");
        if (!(mutation_sigma > 0.0)) throw ContractError("OperatorParams: mutation_sigma must be positive");
        if (!(per_gene_mutation_rate >= 0.0 && per_gene_mutation_rate <= 1.0))
            throw ContractError("OperatorParams: per_gene_mutation_rate must be in [0,1]");
    }
};

/// Each component i.i.d. N(0, 1).
template <typename Scalar = double>
BasicLatentVector<Scalar> init_individual(Rng& rng, Eigen::Index latent_dim) {
    if (latent_dim < 1) throw ContractError("init_individual: latent_dim must be positive");
    DenseVector<Scalar> z(latent_dim);
    for (Eigen::Index i = 0; i < latent_dim; ++i) z[i] = static_cast<Scalar>(rng.standard_normal());
    return BasicLatentVector<Scalar>(std::move(z));
}

/// Index of the winner of one k-way tournament. Competitors are drawn
/// uniformly with replacement; a later competitor must be strictly fitter to
/// displace the current leader, so ties go to the earliest draw.
inline std::size_t tournament_round(Rng& rng, std::span<const Individual> population, int k) {
    std::size_t best = rng.uniform_index(population.size());
    for (int draw = 1; draw < k; ++draw) {
        const std::size_t candidate = rng.uniform_index(population.size());
        if (*population[candidate].fitness() > *population[best].fitness()) best = candidate;
    }
    return best;
}

/// Indices of `count` tournament winners, in selection order.
inline std::vector<std::size_t> tournament_select_indices(Rng& rng, std::span<const Individual> population,
                                                          int k, std::size_t count) {
    if (population.empty()) throw ContractError("tournament_select: empty population");
    if (k < 1 || static_cast<std::size_t>(k) > population.size())
        throw ContractError("tournament_select: tournament size out of range");
    for (std::size_t i = 0; i < population.size(); ++i)
        if (!population[i].evaluated())
            throw ContractError("tournament_select: individual " + std::to_string(i) + " is not evaluated");

    std::vector<std::size_t> winners;
    winners.reserve(count);
    for (std::size_t n = 0; n < count; ++n) winners.push_back(tournament_round(rng, population, k));
    return winners;
}

inline std::vector<Individual> tournament_select(Rng& rng, std::span<const Individual> population, int k,
                                                 std::size_t count) {
    std::vector<Individual> out;
    out.reserve(count);
    for (std::size_t idx : tournament_select_indices(rng, population, k, count)) out.push_back(population[idx]);
    return out;
}

/// BLX-alpha: for each gene, with a = min, b = max and I = b - a of the
/// parents' genes, each child gene is uniform on [a - alpha*I, b + alpha*I].
/// The two children are sampled independently, gene by gene, first child first.
template <typename Scalar>
std::pair<BasicLatentVector<Scalar>, BasicLatentVector<Scalar>> blx_crossover(
    Rng& rng, const BasicLatentVector<Scalar>& parent1, const BasicLatentVector<Scalar>& parent2, Scalar alpha) {
    if (parent1.size() != parent2.size()) throw ContractError("blx_crossover: parent length mismatch");
    if (!(alpha >= Scalar(0))) throw ContractError("blx_crossover: alpha must be non-negative");

    const Eigen::Index n = parent1.size();
    const auto lo = parent1.values().cwiseMin(parent2.values()).eval();
    const auto hi = parent1.values().cwiseMax(parent2.values()).eval();
    const auto extent = (alpha * (hi - lo)).eval();

    DenseVector<Scalar> child1(n), child2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = static_cast<double>(lo[i] - extent[i]);
        const double b = static_cast<double>(hi[i] + extent[i]);
        child1[i] = static_cast<Scalar>(rng.uniform(a, b));
        child2[i] = static_cast<Scalar>(rng.uniform(a, b));
    }
    return {BasicLatentVector<Scalar>(std::move(child1)), BasicLatentVector<Scalar>(std::move(child2))};
}

/// Adds N(0, sigma^2) noise to each gene independently with probability
/// per_gene_rate. A Bernoulli draw is consumed for every gene; the normal draw
/// only for genes that mutate.
template <typename Scalar>
BasicLatentVector<Scalar> gaussian_mutate(Rng& rng, const BasicLatentVector<Scalar>& genotype, Scalar sigma,
                                          double per_gene_rate) {
    if (!(sigma > Scalar(0))) throw ContractError("gaussian_mutate: sigma must be positive");
    if (!(per_gene_rate >= 0.0 && per_gene_rate <= 1.0))
        throw ContractError("gaussian_mutate: per_gene_rate must be in [0,1]");
    if (per_gene_rate == 0.0) return genotype;

    DenseVector<Scalar> out = genotype.values();
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (rng.bernoulli(per_gene_rate)) out[i] += sigma * static_cast<Scalar>(rng.standard_normal());
    return BasicLatentVector<Scalar>(std::move(out));
}

}  // namespace lve
