#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "celltune/harness.hpp"
#include "celltune/placement.hpp"

using namespace celltune;

namespace {
std::string temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("celltune_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}
}  // namespace

TEST_CASE("indoor placement follows the truncated PPP") {
    RngStream rng(1);
    SECTION("default intensity saturates the per-BS cap") {
        for (int i = 0; i < 200; ++i)
            CHECK(place_users_indoor(0.5, 10.0, 10, rng).size() == 10);
    }
    SECTION("cap of one forces exactly one user") {
        for (int i = 0; i < 50; ++i)
            CHECK(place_users_indoor(0.5, 10.0, 1, rng).size() == 1);
    }
    SECTION("at least one user even under a vanishing intensity") {
        for (int i = 0; i < 50; ++i)
            CHECK(place_users_indoor(1e-6, 10.0, 10, rng).size() == 1);
    }
    SECTION("mean position is the origin within CLT bounds") {
        double sx = 0.0, sy = 0.0;
        long n = 0;
        for (int i = 0; i < 20000; ++i) {
            for (const auto& p : place_users_indoor(0.5, 10.0, 10, rng)) {
                sx += p.x;
                sy += p.y;
                ++n;
            }
        }
        const double se = (10.0 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
        CHECK(std::fabs(sx / n) < 4.0 * se);
        CHECK(std::fabs(sy / n) < 4.0 * se);
    }
    SECTION("bad parameters rejected") {
        CHECK_THROWS_AS(place_users_indoor(0.0, 10.0, 10, rng), std::invalid_argument);
        CHECK_THROWS_AS(place_users_indoor(0.5, 10.0, 0, rng), std::invalid_argument);
    }
}

TEST_CASE("sector placement stays inside the wedge") {
    RngStream rng(2);
    const auto ues = place_users_hex_sector(200, 115.0, 10.0, 0.0, rng);
    CHECK(ues.size() == 200);
    for (const auto& p : ues) {
        const double r = std::hypot(p.x, p.y);
        CHECK(r >= 10.0 - 1e-9);
        CHECK(r <= 115.0 + 1e-9);
        const double ang = std::atan2(p.y, p.x) * 180.0 / 3.14159265358979323846;
        CHECK(std::fabs(ang) <= 60.0 + 1e-9);
    }
}

TEST_CASE("config serialization round-trips to the identical text") {
    const RunConfig a = RunConfig::volte_defaults();
    const std::string s1 = a.serialize();
    const RunConfig b = RunConfig::parse_text(s1);
    CHECK(b.serialize() == s1);

    const RunConfig c = RunConfig::son_defaults();
    const std::string s2 = c.serialize();
    CHECK(RunConfig::parse_text(s2).serialize() == s2);
}

TEST_CASE("config kind selects the matching default profile") {
    const RunConfig son = RunConfig::parse_text("q_ues = 25\nenv_kind = son\n");
    CHECK(son.max_bs_power_dbm == 46.0);  // outdoor defaults even with late env_kind
    CHECK(son.q_ues == 25);
    CHECK(son.epsilon_decay == 0.91);
}

TEST_CASE("evaluate rejects a checkpoint whose shape mismatches the environment") {
    QTable wrong(2, 4, 0.2, 0.9);
    const auto dir = temp_dir("shape");
    const std::string path = dir + "/qtable.csv";
    wrong.save_csv(path);
    RunConfig cfg = RunConfig::volte_defaults();
    cfg.eval_episodes = 2;
    CHECK_THROWS_AS(evaluate(cfg, path, dir + "/e"), std::invalid_argument);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    CHECK_THROWS_WITH(RunConfig::parse_text("not_a_key = 3\n"),
                      Catch::Matchers::ContainsSubstring("unknown key"));
    CHECK_THROWS_WITH(RunConfig::parse_text("alpha = banana\n"),
                      Catch::Matchers::ContainsSubstring("bad value"));
    CHECK_THROWS_AS(RunConfig::parse_text("alpha = 1.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::load("/definitely/not/here.cfg"), std::runtime_error);
}

TEST_CASE("config defaults carry the published table values") {
    const RunConfig v = RunConfig::volte_defaults();
    CHECK(v.max_bs_power_dbm == 33.0);
    CHECK(v.initial_tx_power_dbm == 13.0);
    CHECK(v.carrier_freq_mhz == 2600.0);
    CHECK(v.n_prb == 100);
    CHECK(v.alpha == 0.2);
    CHECK(v.discount == 0.995);
    CHECK(v.epsilon_decay == 0.99);
    CHECK(v.horizon_ttis == 20);
    CHECK(v.gamma0_db == 4.0);
    CHECK(v.target_db == 6.0);

    const RunConfig s = RunConfig::son_defaults();
    CHECK(s.max_bs_power_dbm == 46.0);
    CHECK(s.carrier_freq_mhz == 2100.0);
    CHECK(s.bs_height_m == 25.0);
    CHECK(s.horizon_ttis == 10);
    CHECK(s.epsilon_decay == 0.91);
    CHECK(s.hidden_width == 24);
    CHECK(s.batch_size == 32);
    CHECK(s.eta == 0.2);
    CHECK(s.n_tx_antennas == 4);
    CHECK(s.n_rx_antennas == 2);
    CHECK(s.shadow_sigma_db == 8.0);
}

TEST_CASE("zero training episodes persist the untouched zero table") {
    RunConfig cfg = RunConfig::volte_defaults();
    cfg.train_episodes = 0;
    const auto dir = temp_dir("zero_train");
    const RunResult r = train(cfg, dir);
    const QTable t = QTable::load_csv(r.checkpoint_path);
    for (int s = 0; s < t.n_states(); ++s)
        for (int a = 0; a < t.n_actions(); ++a) CHECK(t.at(s, a) == 0.0);
}

TEST_CASE("training twice with one seed reproduces the trace digest") {
    RunConfig cfg = RunConfig::volte_defaults();
    cfg.train_episodes = 40;
    const RunResult r1 = train(cfg, temp_dir("det_a"));
    const RunResult r2 = train(cfg, temp_dir("det_b"));
    CHECK(r1.trace_digest == r2.trace_digest);

    RunConfig other = cfg;
    other.seed = 2;
    const RunResult r3 = train(other, temp_dir("det_c"));
    CHECK(r3.trace_digest != r1.trace_digest);
}

TEST_CASE("evaluation leaves the checkpoint untouched and is repeatable") {
    RunConfig cfg = RunConfig::volte_defaults();
    cfg.train_episodes = 60;
    cfg.eval_episodes = 25;
    const auto dir = temp_dir("eval");
    const RunResult trained = train(cfg, dir);
    const std::string digest_before = fnv64_file(trained.checkpoint_path);

    const RunResult e1 = evaluate(cfg, trained.checkpoint_path, dir + "/e1");
    const RunResult e2 = evaluate(cfg, trained.checkpoint_path, dir + "/e2");
    CHECK(e1.trace_digest == e2.trace_digest);
    CHECK(fnv64_file(trained.checkpoint_path) == digest_before);
    CHECK(e1.metrics.retainability >= 0.0);
    CHECK(e1.metrics.retainability <= 1.0);
}

TEST_CASE("fpa evaluation issues no power commands") {
    RunConfig cfg = RunConfig::volte_defaults();
    cfg.algorithm = "fpa";
    cfg.eval_episodes = 30;
    const RunResult r = evaluate(cfg, "", temp_dir("fpa"));
    CHECK(r.metrics.power_commands == 0);
}

TEST_CASE("sweep emits exactly one row per algorithm, q and metric") {
    RunConfig cfg = RunConfig::son_defaults();
    cfg.train_episodes = 5;
    cfg.eval_episodes = 3;
    const auto dir = temp_dir("sweep");
    sweep_son(cfg, {5, 10}, {"proposed", "fifo", "random"}, dir);

    std::ifstream in(dir + "/sweep.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "algorithm,q,metric,value");
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const auto c3 = line.find(',', c2 + 1);
        REQUIRE(c3 != std::string::npos);
        seen[line.substr(0, c3)]++;
    }
    CHECK(seen.size() == 3u * 2u * 5u);
    for (const auto& [key, count] : seen) CHECK(count == 1);
}
