#include "lve/core.hpp"

#include <json.hpp>

#include <fstream>
#include <numbers>
#include <sstream>

namespace lve {

void Individual::set_distance(double distance) {
    if (!(distance >= 0.0) || !std::isfinite(distance))
        throw ContractError("Individual: distance must be finite and non-negative");
    distance_ = distance;
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw ContractError("Rng::uniform_index: empty range");
    const auto range = static_cast<std::uint64_t>(n);
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = (0 - range) % range;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(engine_()) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

double Rng::standard_normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void EvolutionConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
    if (latent_dim < 1) fail("latent_dim must be positive");
    if (embedding_dim < 1) fail("embedding_dim must be positive");
    if (population_size < 1) fail("population_size must be positive");
    if (generations < 0) fail("generations must be non-negative");
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) fail("crossover_prob must be in [0,1]");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail("mutation_prob must be in [0,1]");
    if (!(per_gene_mutation_rate >= 0.0 && per_gene_mutation_rate <= 1.0))
        fail("per_gene_mutation_rate must be in [0,1]");
    if (!(blx_alpha >= 0.0) || !std::isfinite(blx_alpha)) fail("blx_alpha must be non-negative");
    if (tournament_size < 1) fail("tournament_size must be positive");
    if (tournament_size > population_size) fail("tournament_size exceeds population_size");
    if (!(mutation_sigma > 0.0) || !std::isfinite(mutation_sigma)) fail("mutation_sigma must be positive");
    if (hall_of_fame_size < 1) fail("hall_of_fame_size must be positive");
}

bool same_search_settings(const EvolutionConfig& a, const EvolutionConfig& b) {
    EvolutionConfig lhs = a;
    lhs.master_seed = b.master_seed;
    return lhs == b;
}

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& value, const std::string& key, T& out) {
    if constexpr (std::is_same_v<T, double>) {
        if (!value.is_number()) throw ConfigError("config key '" + key + "' must be a number");
        out = value.get<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!value.is_number_unsigned())
            throw ConfigError("config key '" + key + "' must be a non-negative integer");
        out = value.get<std::uint64_t>();
    } else {
        if (!value.is_number_integer())
            throw ConfigError("config key '" + key + "' must be an integer");
        out = value.get<T>();
    }
}

}  // namespace

EvolutionConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    EvolutionConfig c;
    for (const auto& [key, value] : doc.items()) {
        if (key == "latent_dim") read_field(value, key, c.latent_dim);
        else if (key == "embedding_dim") read_field(value, key, c.embedding_dim);
        else if (key == "population_size") read_field(value, key, c.population_size);
        else if (key == "generations") read_field(value, key, c.generations);
        else if (key == "crossover_prob") read_field(value, key, c.crossover_prob);
        else if (key == "mutation_prob") read_field(value, key, c.mutation_prob);
        else if (key == "blx_alpha") read_field(value, key, c.blx_alpha);
        else if (key == "tournament_size") read_field(value, key, c.tournament_size);
        else if (key == "mutation_sigma") read_field(value, key, c.mutation_sigma);
        else if (key == "per_gene_mutation_rate") read_field(value, key, c.per_gene_mutation_rate);
        else if (key == "hall_of_fame_size") read_field(value, key, c.hall_of_fame_size);
        else if (key == "master_seed") read_field(value, key, c.master_seed);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

EvolutionConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const EvolutionConfig& c, int indent) {
    nlohmann::ordered_json doc;
    doc["latent_dim"] = c.latent_dim;
    doc["embedding_dim"] = c.embedding_dim;
    doc["population_size"] = c.population_size;
    doc["generations"] = c.generations;
    doc["crossover_prob"] = c.crossover_prob;
    doc["mutation_prob"] = c.mutation_prob;
    doc["blx_alpha"] = c.blx_alpha;
    doc["tournament_size"] = c.tournament_size;
    doc["mutation_sigma"] = c.mutation_sigma;
    doc["per_gene_mutation_rate"] = c.per_gene_mutation_rate;
    doc["hall_of_fame_size"] = c.hall_of_fame_size;
    doc["master_seed"] = c.master_seed;
    return doc.dump(indent);
}

}  // namespace lve
