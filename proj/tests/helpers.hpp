#pragma once

#include "lve/evaluator.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace lve::testing {

/// Wraps another evaluator and records every batch it sees.
class CountingEvaluator : public BatchEvaluator {
public:
    explicit CountingEvaluator(BatchEvaluator& inner) : BatchEvaluator(inner.latent_dim(), inner.embedding_dim()), inner_(inner) {
        set_target(inner.target());
    }

    std::vector<std::size_t> batch_sizes;
    std::vector<std::pair<LatentVector, double>> log;
    long long total = 0;

protected:
    std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) override {
        batch_sizes.push_back(batch.size());
        total += static_cast<long long>(batch.size());
        auto results = inner_.evaluate_batch(batch);
        std::vector<Embedding> out;
        for (std::size_t i = 0; i < results.size(); ++i) {
            log.emplace_back(batch[i], results[i].distance);
            out.push_back(results[i].embedding);
        }
        return out;
    }

private:
    BatchEvaluator& inner_;
};

/// Returns the identity of its input's first embedding_dim components.
class PassThroughEvaluator : public BatchEvaluator {
public:
    PassThroughEvaluator(int dim) : BatchEvaluator(dim, dim) {}

protected:
    std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) override {
        std::vector<Embedding> out;
        for (const auto& z : batch) out.emplace_back(z.values());
        return out;
    }
};

/// Fails on the n-th batch call (0-based).
class FailingEvaluator : public BatchEvaluator {
public:
    FailingEvaluator(BatchEvaluator& inner, int fail_at)
        : BatchEvaluator(inner.latent_dim(), inner.embedding_dim()), inner_(inner), fail_at_(fail_at) {
        set_target(inner.target());
    }

protected:
    std::vector<Embedding> embed_batch(std::span<const LatentVector> batch) override {
        if (calls_++ == fail_at_) throw EvaluatorError("injected failure");
        std::vector<Embedding> out;
        for (auto& r : inner_.evaluate_batch(batch)) out.push_back(std::move(r.embedding));
        return out;
    }

private:
    BatchEvaluator& inner_;
    int fail_at_;
    int calls_ = 0;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lve_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lve::testing
