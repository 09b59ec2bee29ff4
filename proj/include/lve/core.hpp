#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace lve {

class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Fixed-length vector of finite reals. The tag keeps latent points and
/// embeddings from being mixed up at call sites.
template <typename Scalar, typename Tag>
class FiniteVector {
public:
    using Storage = DenseVector<Scalar>;
    using scalar_type = Scalar;

    explicit FiniteVector(Storage values) : values_(std::move(values)) {
        if (values_.size() == 0)
            throw ContractError(std::string(Tag::name) + ": empty vector");
        if (!values_.allFinite())
            throw ContractError(std::string(Tag::name) + ": non-finite component");
    }

    FiniteVector(Storage values, Eigen::Index expected_dim) : FiniteVector(std::move(values)) {
        if (values_.size() != expected_dim)
            throw ContractError(std::string(Tag::name) + ": expected length " +
                                std::to_string(expected_dim) + ", got " +
                                std::to_string(values_.size()));
    }

    static FiniteVector zeros(Eigen::Index dim) { return FiniteVector(Storage::Zero(dim)); }

    Eigen::Index size() const { return values_.size(); }
    const Storage& values() const { return values_; }
    Scalar operator[](Eigen::Index i) const { return values_[i]; }

    friend bool operator==(const FiniteVector& a, const FiniteVector& b) {
        return a.values_.size() == b.values_.size() && a.values_ == b.values_;
    }

private:
    Storage values_;
};

struct LatentTag {
    static constexpr const char* name = "LatentVector";
};
struct EmbeddingTag {
    static constexpr const char* name = "Embedding";
};

template <typename Scalar>
using BasicLatentVector = FiniteVector<Scalar, LatentTag>;
template <typename Scalar>
using BasicEmbedding = FiniteVector<Scalar, EmbeddingTag>;

using LatentVector = BasicLatentVector<double>;
using Embedding = BasicEmbedding<double>;

/// Euclidean norm of the difference. Length mismatch is a contract error.
template <typename Scalar>
Scalar euclidean_distance(const BasicEmbedding<Scalar>& a, const BasicEmbedding<Scalar>& b) {
    if (a.size() != b.size())
        throw ContractError("euclidean_distance: length mismatch");
    return (a.values() - b.values()).norm();
}

/// Genotype with an optional cached evaluation. fitness == -distance whenever
/// an evaluation is present; both are cleared together.
class Individual {
public:
    explicit Individual(LatentVector genotype) : genotype_(std::move(genotype)) {}

    const LatentVector& genotype() const { return genotype_; }
    bool evaluated() const { return distance_.has_value(); }
    std::optional<double> distance() const { return distance_; }
    std::optional<double> fitness() const {
        if (!distance_) return std::nullopt;
        return -*distance_;
    }

    void set_distance(double distance);
    void set_genotype(LatentVector genotype) {
        genotype_ = std::move(genotype);
        distance_.reset();
    }
    void invalidate() { distance_.reset(); }

private:
    LatentVector genotype_;
    std::optional<double> distance_;
};

/// Deterministic pseudo-random source. Wraps mt19937_64 and derives every
/// variate from its raw 64-bit output with the transforms below, so the
/// sequence does not depend on the standard library's distribution classes.
///
///   uniform01:       top 53 bits scaled by 2^-53, range [0, 1)
///   uniform_index:   Lemire multiply-and-reject, unbiased on [0, n)
///   standard_normal: Box-Muller cosine branch, two uniforms per draw
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t uniform_index(std::size_t n);
    double standard_normal();
    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer applied to master_seed + run_index. The finalizer is
/// a bijection on 64-bit words, so distinct indices give distinct seeds.
constexpr std::uint64_t derive_child_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    std::uint64_t z = master_seed + run_index + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double sample_standard_normal(Rng& rng) { return rng.standard_normal(); }

struct EvolutionConfig {
    int latent_dim = 512;
    int embedding_dim = 128;
    int population_size = 200;
    int generations = 500;
    double crossover_prob = 0.75;
    double mutation_prob = 0.001;
    double blx_alpha = 0.2;
    int tournament_size = 3;
    double mutation_sigma = 1.0;
    double per_gene_mutation_rate = 0.05;
    int hall_of_fame_size = 10;
    std::uint64_t master_seed = 0;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

/// Same search settings apart from the seed.
bool same_search_settings(const EvolutionConfig& a, const EvolutionConfig& b);

/// Parses a flat JSON object whose keys are EvolutionConfig field names.
/// Missing keys keep their defaults; unknown keys and wrong types are errors.
EvolutionConfig parse_config(const std::string& json_text);
EvolutionConfig load_config(const std::string& path);
std::string config_to_json(const EvolutionConfig& config, int indent = 2);

}  // namespace lve
