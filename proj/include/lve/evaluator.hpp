#pragma once

#include "lve/core.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lve {

/// Raised when an evaluator cannot produce results (transport failure, worker
/// error, bad batch). The engine aborts the run on it.
class EvaluatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fitness is the negated Euclidean distance to the target embedding.
inline double distance_to_fitness(double distance) {
    if (!(distance >= 0.0)) throw ContractError("distance_to_fitness: distance must be non-negative");
    return -distance;
}

struct Evaluation {
    Embedding embedding;
    double distance;
};

/// Batch fitness contract. Subclasses map latents to embeddings; the distance
/// to the target is computed here so the fitness definition lives in one place.
/// Results are positionally aligned with the input batch.
class BatchEvaluator {
public:
    BatchEvaluator(int latent_dim, int embedding_dim);
    virtual ~BatchEvaluator() = default;

    int latent_dim() const { return latent_dim_; }
    int embedding_dim() const { return embedding_dim_; }

    void set_target(Embedding target);
    bool has_target() const { return target_.has_value(); }
    const Embedding& target() const;

    std::vector<Evaluation> evaluate_batch(std::span<const LatentVector> batch);

protected:
    virtual std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) = 0;

private:
    int latent_dim_;
    int embedding_dim_;
    std::optional<Embedding> target_;
};

/// Stand-in for a generator/embedder pair with a planted optimum:
///   generate(z) = tanh(A z),  embed(x) = B x / |B x|,  target = embed(generate(z_star)).
/// A is m x d with entries N(0,1)/sqrt(d); B is e x m with entries N(0,1)/sqrt(m).
/// A (row-major draw order), then B, then z_star are drawn from
/// Rng(derive_child_seed(seed, kWorldStreamTag)).
class SyntheticWorld {
public:
    static constexpr std::uint64_t kWorldStreamTag = 0x776F726C64ULL;

    SyntheticWorld(std::uint64_t seed, int latent_dim, int proxy_dim, int embedding_dim);

    std::uint64_t seed() const { return seed_; }
    int latent_dim() const { return static_cast<int>(generator_.cols()); }
    int proxy_dim() const { return static_cast<int>(generator_.rows()); }
    int embedding_dim() const { return static_cast<int>(embedder_.rows()); }

    const Eigen::MatrixXd& generator_matrix() const { return generator_; }
    const Eigen::MatrixXd& embedder_matrix() const { return embedder_; }
    const LatentVector& optimum() const { return optimum_; }
    const Embedding& target() const { return target_; }

    Eigen::VectorXd generate(const LatentVector& z) const;
    Embedding embed(const Eigen::VectorXd& proxy_image) const;

private:
    std::uint64_t seed_;
    Eigen::MatrixXd generator_;
    Eigen::MatrixXd embedder_;
    LatentVector optimum_;
    Embedding target_;
};

Eigen::VectorXd synthetic_generate(const SyntheticWorld& world, const LatentVector& z);
Embedding synthetic_embed(const SyntheticWorld& world, const Eigen::VectorXd& proxy_image);

/// Evaluates through a SyntheticWorld; the target defaults to the world's own.
/// Items are processed one matrix-vector product at a time so a batch result
/// is bit-identical to evaluating each item alone.
class SyntheticEvaluator : public BatchEvaluator {
public:
    explicit SyntheticEvaluator(const SyntheticWorld& world);

    const SyntheticWorld& world() const { return world_; }

protected:
    std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) override;

private:
    const SyntheticWorld& world_;
};

}  // namespace lve
