#pragma once

#include "lve/core.hpp"
#include "lve/engine.hpp"

#include <span>
#include <string>
#include <vector>

namespace lve {

/// min and mean with sample (n - 1) standard deviation; std is 0 for one value.
struct DistanceSummary {
    double min = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

DistanceSummary summarize_distances(std::span<const double> values);

/// Relative reduction of `target_vs_fake` against `baseline`, in percent.
double deception_delta(double target_vs_fake, double baseline);

struct DiversityMatrix {
    Eigen::MatrixXd distances;
    /// Over the n(n-1)/2 unordered pairs; std uses the sample estimator.
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

DiversityMatrix diversity_matrix(std::span<const Embedding> embeddings);

struct CurvePoint {
    int generation;
    int run_id;
    double best_distance;
};

/// Long-format (generation, run_id, best_distance) rows, run-major. Runs must
/// share their search settings; run_id is the position in `records`.
std::vector<CurvePoint> convergence_curves(std::span<const RunRecord> records);

/// "0.350 & 0.453 ± 0.041" at three decimals, the layout of a table row.
std::string format_summary(const DistanceSummary& s, int precision = 3);
/// "0.482 & 0.865 & 0.645 ± 0.099".
std::string format_diversity(const DiversityMatrix& m, int precision = 3);

/// Inverses of the formatters; throw ContractError on malformed text.
DistanceSummary parse_summary(const std::string& text);
DiversityMatrix parse_diversity_summary(const std::string& text);

}  // namespace lve
