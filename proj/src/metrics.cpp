#include "lve/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lve {

DistanceSummary summarize_distances(std::span<const double> values) {
    if (values.empty()) throw ContractError("summarize_distances: empty input");
    const Eigen::Map<const Eigen::ArrayXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    DistanceSummary s;
    s.min = v.minCoeff();
    s.mean = v.mean();
    s.std = values.size() > 1 ? std::sqrt((v - s.mean).square().sum() / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
}

double deception_delta(double target_vs_fake, double baseline) {
    if (!(baseline > 0.0)) throw ContractError("deception_delta: baseline must be positive");
    if (!(target_vs_fake >= 0.0)) throw ContractError("deception_delta: distance must be non-negative");
    return 100.0 * (baseline - target_vs_fake) / baseline;
}

DiversityMatrix diversity_matrix(std::span<const Embedding> embeddings) {
    const auto n = static_cast<Eigen::Index>(embeddings.size());
    if (n < 2) throw ContractError("diversity_matrix: need at least two embeddings");
    for (const auto& e : embeddings)
        if (e.size() != embeddings.front().size()) throw ContractError("diversity_matrix: embedding length mismatch");

    DiversityMatrix m;
    m.distances = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> pairs;
    pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(embeddings[i], embeddings[j]);
            m.distances(i, j) = m.distances(j, i) = d;
            pairs.push_back(d);
        }

    const DistanceSummary s = summarize_distances(pairs);
    m.min = s.min;
    m.mean = s.mean;
    m.std = s.std;
    m.max = *std::max_element(pairs.begin(), pairs.end());
    return m;
}

std::vector<CurvePoint> convergence_curves(std::span<const RunRecord> records) {
    std::vector<CurvePoint> rows;
    if (records.empty()) return rows;
    for (const auto& r : records)
        if (!same_search_settings(r.config, records.front().config))
            throw ContractError("convergence_curves: runs do not share a configuration");
    for (std::size_t run = 0; run < records.size(); ++run)
        for (const auto& g : records[run].generations)
            rows.push_back({g.generation, static_cast<int>(run), g.best_distance});
    return rows;
}

namespace {

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

// Splits on '&' and "±", trimming whitespace.
std::vector<double> parse_fields(const std::string& text, std::size_t expected, const char* what) {
    std::string normalized = text;
    const std::string pm = "±";
    for (auto pos = normalized.find(pm); pos != std::string::npos; pos = normalized.find(pm))
        normalized.replace(pos, pm.size(), "&");

    std::vector<double> out;
    std::stringstream ss(normalized);
    std::string field;
    while (std::getline(ss, field, '&')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ContractError(std::string(what) + ": malformed field '" + field + "'");
        }
    }
    if (out.size() != expected) throw ContractError(std::string(what) + ": wrong number of fields");
    return out;
}

}  // namespace

std::string format_summary(const DistanceSummary& s, int precision) {
    return fixed(s.min, precision) + " & " + fixed(s.mean, precision) + " ± " + fixed(s.std, precision);
}

std::string format_diversity(const DiversityMatrix& m, int precision) {
    return fixed(m.min, precision) + " & " + fixed(m.max, precision) + " & " + fixed(m.mean, precision) + " ± " +
           fixed(m.std, precision);
}

DistanceSummary parse_summary(const std::string& text) {
    const auto f = parse_fields(text, 3, "parse_summary");
    return {f[0], f[1], f[2]};
}

DiversityMatrix parse_diversity_summary(const std::string& text) {
    const auto f = parse_fields(text, 4, "parse_diversity_summary");
    DiversityMatrix m;
    m.min = f[0];
    m.max = f[1];
    m.mean = f[2];
    m.std = f[3];
    return m;
}

}  // namespace lve
