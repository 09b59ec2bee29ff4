#include "lve/cli.hpp"
#include "lve/evaluator.hpp"
#include "lve/metrics.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace lve;
namespace fs = std::filesystem;
using testing::slurp;

namespace {

int run(std::vector<std::string> args, std::string* err_text = nullptr, std::string* out_text = nullptr) {
    args.insert(args.begin(), "latent_evolve");
    std::ostringstream out, err;
    const int code = cli::run_main(args, out, err);
    if (err_text) *err_text = err.str();
    if (out_text) *out_text = out.str();
    return code;
}

fs::path small_config(const fs::path& dir, int generations = 8) {
    const auto path = dir / "config.json";
    std::ofstream(path) << R"({"latent_dim":16,"embedding_dim":8,"population_size":24,"generations":)" << generations
                        << R"(,"hall_of_fame_size":4,"master_seed":5})";
    return path;
}

}  // namespace

TEST_CASE("run writes all artifacts and replays byte-identically") {
    const auto dir = testing::scratch_dir("cli_run");
    const auto cfg = small_config(dir);
    REQUIRE(run({"run", "--config", cfg.string(), "--seed", "7", "--out", (dir / "a").string()}) == 0);
    REQUIRE(run({"run", "--config", cfg.string(), "--seed", "7", "--out", (dir / "b").string()}) == 0);
    for (const char* f : {"meta.json", "stats.csv", "best_latent.json", "best_embedding.json", "hall_of_fame.json"})
        CHECK(fs::exists(dir / "a" / f));
    for (const char* f : {"stats.csv", "best_latent.json", "best_embedding.json", "hall_of_fame.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

    REQUIRE(run({"run", "--config", cfg.string(), "--seed", "8", "--out", (dir / "c").string()}) == 0);
    CHECK(slurp(dir / "a" / "stats.csv") != slurp(dir / "c" / "stats.csv"));

    const auto art = load_run_artifacts(dir / "a");
    CHECK(art.meta.seed == 7);
    CHECK(art.stats.size() == 9);
    CHECK(art.meta.evaluator.kind == "synthetic");
    CHECK(art.hall_of_fame.front().distance == art.meta.best_distance);

    // best_latent.json replays to the recorded best distance.
    const SyntheticWorld world(art.meta.evaluator.world_seed, art.meta.config.latent_dim, art.meta.evaluator.proxy_dim,
                               art.meta.config.embedding_dim);
    SyntheticEvaluator eval(world);
    const auto again = eval.evaluate_batch(std::vector<LatentVector>{art.best_latent});
    CHECK(std::abs(again[0].distance - art.meta.best_distance) <= 1e-6);
    CHECK(again[0].embedding == art.best_embedding);
}

TEST_CASE("run flag validation and exit codes") {
    const auto dir = testing::scratch_dir("cli_flags");
    const auto cfg = small_config(dir);
    std::string err;
    CHECK(run({"run", "--config", cfg.string(), "--evaluator", "worker", "--out", (dir / "x").string()}, &err) == 1);
    CHECK(err.find("--worker-cmd") != std::string::npos);
    CHECK(err.find('\n') == err.size() - 1);
    CHECK(run({"run", "--evaluator", "worker", "--worker-cmd", "true", "--out", (dir / "x").string()}, &err) == 1);
    CHECK(run({"run", "--target", "x.png", "--out", (dir / "x").string()}, &err) == 1);
    CHECK(run({"run", "--evaluator", "magic", "--out", (dir / "x").string()}, &err) == 1);
    CHECK(run({"run", "--config", (dir / "missing.json").string(), "--out", (dir / "x").string()}, &err) == 1);

    std::ofstream(dir / "unknown.json") << R"({"latent_dim":16,"popsize":3})";
    CHECK(run({"run", "--config", (dir / "unknown.json").string(), "--out", (dir / "x").string()}, &err) == 1);
    CHECK(err.find("popsize") != std::string::npos);

    std::ofstream(dir / "blocker") << "file";
    CHECK(run({"run", "--config", cfg.string(), "--out", (dir / "blocker" / "sub").string()}, &err) == 3);
    CHECK(run({"bogus"}, &err) == 1);
}

TEST_CASE("run through a worker process") {
    const auto dir = testing::scratch_dir("cli_worker");
    std::ofstream(dir / "config.json") << R"({"latent_dim":4,"embedding_dim":2,"population_size":10,"generations":3})";
    std::ofstream(dir / "target.png") << "portrait bytes";
    std::string err;
    const int code = run({"run", "--config", (dir / "config.json").string(), "--evaluator", "worker", "--worker-cmd",
                          LVE_MOCK_WORKER, "--target", (dir / "target.png").string(), "--seed", "3", "--out",
                          (dir / "run").string()},
                         &err);
    CHECK(err.empty());
    REQUIRE(code == 0);
    const auto art = load_run_artifacts(dir / "run");
    CHECK(art.meta.evaluator.kind == "worker");
    CHECK(art.best_embedding.size() == 2);

    CHECK(run({"run", "--config", (dir / "config.json").string(), "--evaluator", "worker", "--worker-cmd",
               std::string(LVE_MOCK_WORKER) + " --latent-dim 5", "--target", (dir / "target.png").string(), "--out",
               (dir / "bad").string()},
              &err) == 2);
    CHECK(err.find("dimension mismatch") != std::string::npos);

    CHECK(run({"run", "--config", (dir / "config.json").string(), "--evaluator", "worker", "--worker-cmd",
               LVE_MOCK_WORKER, "--target", (dir / "absent.png").string(), "--out", (dir / "bad2").string()},
              &err) == 2);
    CHECK(err.find("file not found") != std::string::npos);

    CHECK(run({"run", "--config", (dir / "config.json").string(), "--evaluator", "worker", "--worker-cmd",
               std::string(LVE_MOCK_WORKER) + " --fail-item 0", "--target", (dir / "target.png").string(), "--out",
               (dir / "bad3").string()},
              &err) == 2);
}

TEST_CASE("grid parsing and sweep planning") {
    const auto g = cli::parse_grid("pR=0.6,0.75,0.9;pM=0.001,0.01,0.1");
    CHECK(g.crossover_probs == std::vector<double>{0.6, 0.75, 0.9});
    CHECK(g.mutation_probs == std::vector<double>{0.001, 0.01, 0.1});
    CHECK(cli::plan_sweep(g, 30, 1).size() == 270);

    const auto plan = cli::plan_sweep(g, 2, 99);
    CHECK(plan[3].crossover_prob == 0.6);
    CHECK(plan[3].mutation_prob == 0.01);
    CHECK(plan[3].repeat == 1);
    CHECK(plan[3].seed == derive_child_seed(99, 3));
    CHECK(plan[6].crossover_prob == 0.75);

    CHECK_THROWS_AS(cli::parse_grid("pR=0.6"), ConfigError);
    CHECK_THROWS_AS(cli::parse_grid("pR=0.6;pM=abc"), ConfigError);
    CHECK_THROWS_AS(cli::parse_grid("pR=1.6;pM=0.1"), ConfigError);
    CHECK_THROWS_AS(cli::parse_grid("pX=0.6;pM=0.1"), ConfigError);
    CHECK_THROWS_AS(cli::plan_sweep(g, 0, 1), ConfigError);
}

TEST_CASE("degenerate sweep equals a single run with the derived seed") {
    const auto dir = testing::scratch_dir("cli_sweep1");
    const auto cfg = small_config(dir);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--grid", "pR=0.75;pM=0.001", "--repeats", "1", "--seed", "11",
                 "--out", (dir / "sweep").string()}) == 0);
    const std::string seed = std::to_string(derive_child_seed(11, 0));
    REQUIRE(run({"run", "--config", cfg.string(), "--seed", seed, "--out", (dir / "single").string()}) == 0);
    for (const char* f : {"stats.csv", "best_latent.json", "best_embedding.json", "hall_of_fame.json"})
        CHECK(slurp(dir / "sweep" / "run_0000" / f) == slurp(dir / "single" / f));
}

TEST_CASE("sweep replays identically modulo wall time, in parallel too") {
    const auto dir = testing::scratch_dir("cli_sweep");
    const auto cfg = small_config(dir, 5);
    const std::vector<std::string> base{"sweep", "--config", cfg.string(), "--grid", "pR=0.6,0.75,0.9;pM=0.001,0.01,0.1",
                                        "--repeats", "2", "--seed", "21"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    REQUIRE(run(with({"--out", (dir / "s1").string()})) == 0);
    REQUIRE(run(with({"--out", (dir / "s2").string(), "--jobs", "4"})) == 0);

    auto strip_wall = [](const std::string& csv) {
        std::stringstream in(csv), out;
        for (std::string line; std::getline(in, line);) {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
            REQUIRE(cells.size() == 9);
            cells[7] = "";
            for (auto& c : cells) out << c << ',';
            out << '\n';
        }
        return out.str();
    };
    const std::string s1 = slurp(dir / "s1" / "sweep_summary.csv");
    CHECK(strip_wall(s1) == strip_wall(slurp(dir / "s2" / "sweep_summary.csv")));
    CHECK(std::count(s1.begin(), s1.end(), '\n') == 19);
    for (int i = 0; i < 18; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "run_%04d", i);
        CHECK(slurp(dir / "s1" / name / "stats.csv") == slurp(dir / "s2" / name / "stats.csv"));
        CHECK(slurp(dir / "s1" / name / "hall_of_fame.json") == slurp(dir / "s2" / name / "hall_of_fame.json"));
    }
}

TEST_CASE("LATENT_EVOLVE_JOBS sets the default parallelism") {
    const auto dir = testing::scratch_dir("cli_env");
    const auto cfg = small_config(dir, 2);
    setenv("LATENT_EVOLVE_JOBS", "3", 1);
    CHECK(run({"sweep", "--config", cfg.string(), "--grid", "pR=0.75;pM=0.001", "--repeats", "3", "--out",
               (dir / "s").string()}) == 0);
    unsetenv("LATENT_EVOLVE_JOBS");
    CHECK(fs::exists(dir / "s" / "run_0002" / "meta.json"));
}

TEST_CASE("sweep records failed runs and continues") {
    const auto dir = testing::scratch_dir("cli_sweep_fail");
    std::ofstream(dir / "config.json") << R"({"latent_dim":4,"embedding_dim":2,"population_size":6,"generations":2})";
    std::ofstream(dir / "target.png") << "t";
    std::string err;
    // A worker that fails on every eval: each run fails, the summary is still written.
    const int code = run({"sweep", "--config", (dir / "config.json").string(), "--evaluator", "worker", "--worker-cmd",
                          std::string(LVE_MOCK_WORKER) + " --fail-item 0", "--target", (dir / "target.png").string(),
                          "--grid", "pR=0.75;pM=0.001", "--repeats", "2", "--out", (dir / "s").string()},
                         &err);
    CHECK(code == 2);
    const std::string summary = slurp(dir / "s" / "sweep_summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
    CHECK(summary.find("failed: ") != std::string::npos);
}

TEST_CASE("report: summary, diversity, curves") {
    const auto dir = testing::scratch_dir("cli_report");
    const auto cfg = small_config(dir, 4);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--grid", "pR=0.75;pM=0.001", "--repeats", "10", "--seed", "3",
                 "--out", (dir / "sweep").string()}) == 0);

    std::string out;
    REQUIRE(run({"report", "--runs", (dir / "sweep").string(), "--emit", "summary", "--baseline", "0.9", "--out",
                 (dir / "rs").string()},
                nullptr, &out) == 0);
    const std::string summary = slurp(dir / "rs" / "summary.csv");
    CHECK(summary.rfind("instance,runs,min,mean,std,table_row,baseline,delta_percent\n", 0) == 0);

    // The summary row agrees with a recomputation from the run directories.
    std::vector<double> best;
    for (int i = 0; i < 10; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "run_%04d", i);
        best.push_back(load_run_artifacts(dir / "sweep" / name).meta.best_distance);
    }
    const auto s = summarize_distances(best);
    CHECK(summary.find(format_double(s.min) + ',' + format_double(s.mean)) != std::string::npos);
    CHECK(summary.find(format_double(deception_delta(s.min, 0.9))) != std::string::npos);

    REQUIRE(run({"report", "--runs", (dir / "sweep").string(), "--emit", "diversity", "--out", (dir / "rd").string()}) == 0);
    const std::string div = slurp(dir / "rd" / "diversity.csv");
    CHECK(std::count(div.begin(), div.end(), '\n') == 11);
    CHECK(div.rfind("run_0000,run_0001,", 0) == 0);

    REQUIRE(run({"report", "--runs", (dir / "sweep").string(), "--emit", "curves", "--out", (dir / "rc").string()}) == 0);
    const std::string curves = slurp(dir / "rc" / "curves.csv");
    CHECK(curves.rfind("generation,run_id,best_distance\n", 0) == 0);
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 1 + 10 * 5);

    // Pure function of its inputs.
    REQUIRE(run({"report", "--runs", (dir / "sweep").string(), "--emit", "curves", "--out", (dir / "rc2").string()}) == 0);
    CHECK(slurp(dir / "rc2" / "curves.csv") == curves);
}

TEST_CASE("report error paths") {
    const auto dir = testing::scratch_dir("cli_report_err");
    const auto cfg = small_config(dir, 2);
    REQUIRE(run({"run", "--config", cfg.string(), "--out", (dir / "ok").string()}) == 0);
    fs::create_directories(dir / "empty");
    std::string err;
    CHECK(run({"report", "--runs", (dir / "ok").string(), (dir / "empty").string(), "--out", (dir / "r").string()}, &err) == 3);
    CHECK(err.find("empty") != std::string::npos);

    fs::copy(dir / "ok", dir / "corrupt", fs::copy_options::recursive);
    std::ofstream(dir / "corrupt" / "best_latent.json") << "[1, 2,";
    CHECK(run({"report", "--runs", (dir / "corrupt").string(), "--out", (dir / "r").string()}, &err) == 3);
    CHECK(err.find("corrupt") != std::string::npos);

    CHECK(run({"report", "--runs", (dir / "ok").string(), "--emit", "diversity", "--out", (dir / "r").string()}, &err) == 1);
    CHECK(run({"report", "--runs", (dir / "ok").string(), "--baseline", "0", "--out", (dir / "r").string()}, &err) == 1);
}

TEST_CASE("equal world and search seeds do not plant the optimum in the initial population") {
    const auto dir = testing::scratch_dir("cli_seed_collision");
    const auto cfg = small_config(dir, 3);
    REQUIRE(run({"run", "--config", cfg.string(), "--seed", "0", "--world-seed", "0", "--out", (dir / "r").string()}) == 0);
    const auto art = load_run_artifacts(dir / "r");
    CHECK(art.stats.front().best_distance > 1e-3);
}

TEST_CASE("default dimensions smoke run") {
    const auto dir = testing::scratch_dir("cli_default_dims");
    // Default search settings except for a short run.
    std::ofstream(dir / "config.json") << R"({"generations":3})";
    REQUIRE(run({"run", "--config", (dir / "config.json").string(), "--out", (dir / "r").string()}) == 0);
    const auto art = load_run_artifacts(dir / "r");
    CHECK(art.best_latent.size() == 512);
    CHECK(art.best_embedding.size() == 128);
    CHECK(art.stats.size() == 4);
    CHECK(art.stats.back().best_so_far <= art.stats.front().best_distance);
    CHECK(art.hall_of_fame.size() == 10);
}
