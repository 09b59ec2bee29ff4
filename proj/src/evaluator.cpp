#include "lve/evaluator.hpp"

#include "lve/operators.hpp"

namespace lve {

BatchEvaluator::BatchEvaluator(int latent_dim, int embedding_dim)
    : latent_dim_(latent_dim), embedding_dim_(embedding_dim) {
    if (latent_dim < 1 || embedding_dim < 1) throw ContractError("BatchEvaluator: dimensions must be positive");
}

void BatchEvaluator::set_target(Embedding target) {
    if (target.size() != embedding_dim_)
        throw ContractError("set_target: expected embedding of length " + std::to_string(embedding_dim_) +
                            ", got " + std::to_string(target.size()));
    target_ = std::move(target);
}

const Embedding& BatchEvaluator::target() const {
    if (!target_) throw ContractError("BatchEvaluator: target not set");
    return *target_;
}

std::vector<Evaluation> BatchEvaluator::evaluate_batch(std::span<const LatentVector> batch) {
    if (!target_) throw ContractError("evaluate_batch: target not set");
    if (batch.empty()) throw ContractError("evaluate_batch: empty batch");
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (batch[i].size() != latent_dim_)
            throw ContractError("evaluate_batch: item " + std::to_string(i) + " has length " +
                                std::to_string(batch[i].size()) + ", expected " + std::to_string(latent_dim_));

    std::vector<Embedding> embeddings = embed_batch(batch);
    if (embeddings.size() != batch.size())
        throw EvaluatorError("evaluate_batch: evaluator returned " + std::to_string(embeddings.size()) +
                             " embeddings for a batch of " + std::to_string(batch.size()));

    std::vector<Evaluation> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].size() != embedding_dim_)
            throw EvaluatorError("evaluate_batch: embedding " + std::to_string(i) + " has wrong length");
        const double d = euclidean_distance(embeddings[i], *target_);
        out.push_back({std::move(embeddings[i]), d});
    }
    return out;
}

SyntheticWorld::SyntheticWorld(std::uint64_t seed, int latent_dim, int proxy_dim, int embedding_dim)
    : seed_(seed),
      optimum_(LatentVector::zeros(std::max(latent_dim, 1))),
      target_(Embedding::zeros(std::max(embedding_dim, 1))) {
    if (latent_dim < 1 || proxy_dim < 1 || embedding_dim < 1)
        throw ContractError("SyntheticWorld: dimensions must be positive");

    // The world stream must not coincide with a search stream seeded with the same value.
    Rng rng(derive_child_seed(seed, kWorldStreamTag));
    generator_.resize(proxy_dim, latent_dim);
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
    for (int r = 0; r < proxy_dim; ++r)
        for (int c = 0; c < latent_dim; ++c) generator_(r, c) = rng.standard_normal() * a_scale;

    embedder_.resize(embedding_dim, proxy_dim);
    const double b_scale = 1.0 / std::sqrt(static_cast<double>(proxy_dim));
    for (int r = 0; r < embedding_dim; ++r)
        for (int c = 0; c < proxy_dim; ++c) embedder_(r, c) = rng.standard_normal() * b_scale;

    optimum_ = init_individual(rng, latent_dim);
    target_ = embed(generate(optimum_));
}

Eigen::VectorXd SyntheticWorld::generate(const LatentVector& z) const {
    if (z.size() != generator_.cols())
        throw ContractError("synthetic_generate: expected latent of length " + std::to_string(generator_.cols()));
    Eigen::VectorXd pre = generator_ * z.values();
    return pre.array().tanh().matrix();
}

Embedding SyntheticWorld::embed(const Eigen::VectorXd& proxy_image) const {
    if (proxy_image.size() != embedder_.cols())
        throw ContractError("synthetic_embed: expected proxy image of length " + std::to_string(embedder_.cols()));
    Eigen::VectorXd raw = embedder_ * proxy_image;
    const double norm = raw.norm();
    if (norm == 0.0) return Embedding(Eigen::VectorXd::Zero(raw.size()));
    return Embedding(raw / norm);
}

Eigen::VectorXd synthetic_generate(const SyntheticWorld& world, const LatentVector& z) { return world.generate(z); }

Embedding synthetic_embed(const SyntheticWorld& world, const Eigen::VectorXd& proxy_image) {
    return world.embed(proxy_image);
}

SyntheticEvaluator::SyntheticEvaluator(const SyntheticWorld& world)
    : BatchEvaluator(world.latent_dim(), world.embedding_dim()), world_(world) {
    set_target(world.target());
}

std::vector<Embedding> SyntheticEvaluator::embed_batch(std::span<const LatentVector> batch) {
    std::vector<Embedding> out;
    out.reserve(batch.size());
    for (const auto& z : batch) out.push_back(world_.embed(world_.generate(z)));
    return out;
}

}  // namespace lve
