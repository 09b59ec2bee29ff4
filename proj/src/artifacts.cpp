#include "lve/artifacts.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>

namespace lve {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string EvaluatorDescriptor::instance_id() const {
    if (kind == "synthetic")
        return "synthetic:world_seed=" + std::to_string(world_seed) + ",proxy_dim=" + std::to_string(proxy_dim);
    return "worker:target=" + target_path;
}

namespace {

template <typename Vec>
std::string json_array(const Vec& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    out += ']';
    return out;
}

Eigen::VectorXd to_vector(const json& arr, const std::string& what) {
    if (!arr.is_array() || arr.empty()) throw IoError(what + " is not a non-empty array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw IoError(what + " contains a non-number");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

json evaluator_to_json(const EvaluatorDescriptor& e) {
    json j = json::object();
    j["kind"] = e.kind;
    if (e.kind == "synthetic") {
        j["world_seed"] = e.world_seed;
        j["proxy_dim"] = e.proxy_dim;
    } else {
        j["worker_command"] = e.worker_command;
        j["target_path"] = e.target_path;
    }
    return j;
}

EvaluatorDescriptor evaluator_from_json(const json& j) {
    EvaluatorDescriptor e;
    e.kind = j.at("kind").get<std::string>();
    if (e.kind == "synthetic") {
        e.world_seed = j.at("world_seed").get<std::uint64_t>();
        e.proxy_dim = j.at("proxy_dim").get<int>();
    } else if (e.kind == "worker") {
        e.worker_command = j.at("worker_command").get<std::string>();
        e.target_path = j.at("target_path").get<std::string>();
    } else {
        throw IoError("unknown evaluator kind '" + e.kind + "'");
    }
    return e;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string stats_row(const GenerationStats& s) {
    return std::to_string(s.generation) + ',' + format_double(s.best_distance) + ',' + format_double(s.mean_distance) +
           ',' + format_double(s.std_distance) + ',' + format_double(s.best_so_far) + ',' +
           std::to_string(s.evaluations_so_far);
}

StatsCsvWriter::StatsCsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << kStatsHeader << '\n';
}

void StatsCsvWriter::append(const GenerationStats& s) {
    out_ << stats_row(s) << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
}

void write_stats_csv(const fs::path& path, const std::vector<GenerationStats>& stats) {
    std::string text = std::string(kStatsHeader) + '\n';
    for (const auto& s : stats) text += stats_row(s) + '\n';
    write_text_file(path, text);
}

void write_run_outcome(const fs::path& dir, const RunRecord& record, const EvaluatorDescriptor& evaluator) {
    const HallOfFameEntry& best = best_so_far(record);

    nlohmann::ordered_json meta;
    meta["config"] = nlohmann::ordered_json::parse(config_to_json(record.config));
    meta["seed"] = record.seed;
    meta["evaluator"] = evaluator_to_json(evaluator);
    meta["best_distance"] = best.distance;
    meta["evaluations"] = record.evaluations;
    meta["generations_completed"] = record.generations.empty() ? 0 : record.generations.back().generation;
    meta["wall_time_seconds"] = record.wall_time_seconds;
    write_text_file(dir / "meta.json", meta.dump(2) + '\n');

    write_text_file(dir / "best_latent.json", json_array(best.genotype.values()) + '\n');
    write_text_file(dir / "best_embedding.json", json_array(best.embedding.values()) + '\n');

    std::string hof = "[\n";
    for (std::size_t i = 0; i < record.hall_of_fame.size(); ++i) {
        const auto& e = record.hall_of_fame[i];
        hof += "  {\"distance\":" + format_double(e.distance) + ",\"latent\":" + json_array(e.genotype.values()) +
               ",\"embedding\":" + json_array(e.embedding.values()) + '}';
        hof += i + 1 < record.hall_of_fame.size() ? ",\n" : "\n";
    }
    hof += "]\n";
    write_text_file(dir / "hall_of_fame.json", hof);
}

namespace {

std::vector<GenerationStats> parse_stats_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kStatsHeader) throw IoError("stats.csv has an unexpected header");
    std::vector<GenerationStats> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (cells.size() != 6) throw IoError("stats.csv row has " + std::to_string(cells.size()) + " fields");
        try {
            GenerationStats s;
            s.generation = std::stoi(cells[0]);
            s.best_distance = std::stod(cells[1]);
            s.mean_distance = std::stod(cells[2]);
            s.std_distance = std::stod(cells[3]);
            s.best_so_far = std::stod(cells[4]);
            s.evaluations_so_far = std::stoll(cells[5]);
            out.push_back(s);
        } catch (const std::logic_error&) {
            throw IoError("stats.csv row is not numeric: " + line);
        }
    }
    return out;
}

}  // namespace

RunArtifacts load_run_artifacts(const fs::path& dir) {
    try {
        RunArtifacts a;
        const json meta = json::parse(read_text_file(dir / "meta.json"));
        a.meta.config = parse_config(meta.at("config").dump());
        a.meta.seed = meta.at("seed").get<std::uint64_t>();
        a.meta.evaluator = evaluator_from_json(meta.at("evaluator"));
        a.meta.best_distance = meta.at("best_distance").get<double>();
        a.meta.evaluations = meta.at("evaluations").get<long long>();
        a.meta.wall_time_seconds = meta.at("wall_time_seconds").get<double>();

        a.stats = parse_stats_csv(read_text_file(dir / "stats.csv"));
        a.best_latent = LatentVector(to_vector(json::parse(read_text_file(dir / "best_latent.json")), "best_latent"),
                                     a.meta.config.latent_dim);
        a.best_embedding = Embedding(
            to_vector(json::parse(read_text_file(dir / "best_embedding.json")), "best_embedding"),
            a.meta.config.embedding_dim);

        const json hof = json::parse(read_text_file(dir / "hall_of_fame.json"));
        if (!hof.is_array() || hof.empty()) throw IoError("hall_of_fame.json is not a non-empty array");
        for (const auto& e : hof)
            a.hall_of_fame.push_back(
                {LatentVector(to_vector(e.at("latent"), "hall_of_fame latent"), a.meta.config.latent_dim),
                 Embedding(to_vector(e.at("embedding"), "hall_of_fame embedding"), a.meta.config.embedding_dim),
                 e.at("distance").get<double>()});
        return a;
    } catch (const IoError& e) {
        throw IoError(dir.string() + ": " + e.what());
    } catch (const std::exception& e) {
        throw IoError(dir.string() + ": corrupt run artifacts: " + e.what());
    }
}

}  // namespace lve
