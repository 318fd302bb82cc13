#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "celltune/metrics.hpp"
#include "celltune/rng.hpp"

using namespace celltune;

TEST_CASE("retainability counts sub-threshold samples") {
    const std::vector<double> all_good{1.0, 5.0, 2.0, 0.001};
    CHECK(retainability(all_good, 0.0) == 1.0);
    const std::vector<double> all_bad{-1.0, 0.0, -5.0};
    CHECK(retainability(all_bad, 0.0) == 0.0);
    // brute-force half/half split
    std::vector<double> half;
    for (int i = 0; i < 50; ++i) half.push_back(-1.0);
    for (int i = 0; i < 50; ++i) half.push_back(+1.0);
    CHECK(retainability(half, 0.0) == 0.5);
    CHECK_THROWS_AS(retainability(std::vector<double>{}, 0.0), std::invalid_argument);
}

TEST_CASE("qpsk packet error rate") {
    SECTION("frozen Q-function oracle at 0 dB") {
        // p_s = 2 Q(1) (1 - Q(1)/2) with Q(1) = 0.15865525393145705
        CHECK_THAT(qpsk_packet_error_rate(1.0, 1),
                   Catch::Matchers::WithinAbs(0.29213901826285898, 1e-12));
    }
    SECTION("single symbol equals the symbol error") {
        const double g = 2.5;
        const double q = gaussian_q(std::sqrt(g));
        CHECK_THAT(qpsk_packet_error_rate(g, 1),
                   Catch::Matchers::WithinAbs(2.0 * q * (1.0 - 0.5 * q), 1e-15));
    }
    SECTION("vanishes at high SINR") {
        CHECK(qpsk_packet_error_rate(1e9, 100) < 1e-12);
    }
    SECTION("coding gain shifts the SINR before the mapping") {
        CHECK_THAT(qpsk_packet_error_rate(1.0, 7, 3.0),
                   Catch::Matchers::WithinAbs(
                       qpsk_packet_error_rate(db_to_linear(3.0), 7, 0.0), 1e-12));
    }
    SECTION("rejects bad inputs") {
        CHECK_THROWS_AS(qpsk_packet_error_rate(0.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(qpsk_packet_error_rate(1.0, 0), std::invalid_argument);
    }
}

TEST_CASE("mos mapping") {
    CHECK_THAT(mos(0.0, 0.7, 23.85), Catch::Matchers::WithinAbs(4.2, 1e-12));
    CHECK_THAT(mos(1.0, 0.7, 23.85), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THROWS_AS(mos(1.5, 0.7, 23.85), std::invalid_argument);
    CHECK_THROWS_AS(mos(0.5, 0.0, 23.85), std::invalid_argument);

    SECTION("monotone non-increasing over random PER pairs") {
        RngStream rng(31);
        for (int i = 0; i < 1000; ++i) {
            double a = rng.uniform();
            double b = rng.uniform();
            if (a > b) std::swap(a, b);
            CHECK(mos(a, 0.7, 23.85) >= mos(b, 0.7, 23.85));
        }
    }
    SECTION("custom tables validate monotonicity") {
        CHECK_THROWS_AS(MosTable({{0.0, 3.0}, {0.5, 3.5}}), std::invalid_argument);
        CHECK_THROWS_AS(MosTable({{0.0, 4.0}, {0.0, 3.0}}), std::invalid_argument);
    }
    SECTION("table file loader") {
        const std::string path = "mos_table_test.txt";
        {
            std::ofstream out(path);
            out << "0.0 4.4\n0.25 2.0\n0.5 1.0\n";
        }
        const MosTable t = MosTable::from_file(path);
        CHECK_THAT(t(0.0), Catch::Matchers::WithinAbs(4.4, 1e-12));
        CHECK_THAT(t(0.125), Catch::Matchers::WithinAbs(3.2, 1e-12));
        CHECK_THAT(t(0.9), Catch::Matchers::WithinAbs(1.0, 1e-12));
        std::remove(path.c_str());
        CHECK_THROWS_AS(MosTable::from_file("/no/such/mos.txt"), std::runtime_error);
    }
}

TEST_CASE("waterfilling satisfies the KKT conditions and exhausts the power") {
    RngStream rng(71);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(6));
        std::vector<double> gains(static_cast<std::size_t>(n));
        for (auto& g : gains) g = rng.uniform(0.05, 5.0);
        const double power = rng.uniform(0.1, 20.0);
        const double noise = rng.uniform(0.01, 2.0);
        const auto p = waterfill_powers(gains, power, noise);

        double total = 0.0;
        double level = -1.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            CHECK(p[k] >= -1e-12);
            total += p[k];
            if (p[k] > 1e-12) {
                const double lk = p[k] + noise / gains[k];
                if (level < 0.0) level = lk;
                CHECK_THAT(lk, Catch::Matchers::WithinAbs(level, 1e-9));
            }
        }
        CHECK_THAT(total, Catch::Matchers::WithinAbs(power, 1e-9));
        for (std::size_t k = 0; k < p.size(); ++k)
            if (p[k] <= 1e-12) CHECK(noise / gains[k] >= level - 1e-9);
    }
}

TEST_CASE("waterfilling never loses to equal power") {
    RngStream rng(72);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(4));
        std::vector<double> gains(static_cast<std::size_t>(n));
        for (auto& g : gains) g = rng.uniform(0.05, 5.0);
        const double power = rng.uniform(0.1, 20.0);
        const double noise = rng.uniform(0.01, 2.0);
        const double wf = waterfill_capacity_bits(gains, power, noise);
        double equal = 0.0;
        for (double g : gains) equal += std::log2(1.0 + (power / n) * g / noise);
        CHECK(wf >= equal - 1e-12);
    }
}

TEST_CASE("waterfilling matches a fine-grid search on two subchannels") {
    RngStream rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> gains{rng.uniform(0.1, 4.0), rng.uniform(0.1, 4.0)};
        const double power = rng.uniform(0.5, 10.0);
        const double noise = rng.uniform(0.05, 1.0);
        const double wf = waterfill_capacity_bits(gains, power, noise);
        double best = 0.0;
        const int grid = 20000;
        for (int i = 0; i <= grid; ++i) {
            const double p0 = power * i / grid;
            const double c = std::log2(1.0 + p0 * gains[0] / noise) +
                             std::log2(1.0 + (power - p0) * gains[1] / noise);
            best = std::max(best, c);
        }
        CHECK(wf >= best - 1e-9);
        CHECK_THAT(wf, Catch::Matchers::WithinAbs(best, 1e-3));
    }
}

TEST_CASE("waterfilling splits power equally over equal gains") {
    const std::vector<double> gains{1.7, 1.7};
    const auto p = waterfill_powers(gains, 4.0, 0.3);
    CHECK_THAT(p[0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(p[1], Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("spectral efficiency clamps at the modulation ceiling") {
    SECTION("single subchannel puts all power on it") {
        const std::vector<std::vector<double>> h{{2.0}};
        // post-ZF gain = h^2 = 4
        const double got = spectral_efficiency(h, 3.0, 1.0, 1 << 20);
        CHECK_THAT(got, Catch::Matchers::WithinAbs(std::log2(1.0 + 3.0 * 4.0), 1e-9));
    }
    SECTION("ceiling binds") {
        const std::vector<std::vector<double>> h{{2.0}};
        CHECK(spectral_efficiency(h, 1e9, 1.0, 64) == std::log2(64.0));
    }
    SECTION("random 2x4 channels stay below log2(M)") {
        RngStream rng(74);
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<std::vector<double>> h(2, std::vector<double>(4));
            for (auto& row : h)
                for (auto& x : row) x = rng.gaussian() * 0.5;
            const double se = spectral_efficiency(h, rng.uniform(0.1, 100.0), 1.0, 64);
            CHECK(se <= std::log2(64.0) + 1e-12);
            CHECK(se >= 0.0);
        }
    }
    SECTION("singular channel falls back to surviving streams") {
        const std::vector<std::vector<double>> h{{1.0, 0.0}, {1.0, 0.0}};  // rank 1
        CHECK_NOTHROW(spectral_efficiency(h, 2.0, 1.0, 64));
    }
}

TEST_CASE("zero-forcing gains on an orthogonal channel are the row energies") {
    const std::vector<std::vector<double>> h{{2.0, 0.0, 0.0}, {0.0, 3.0, 0.0}};
    const auto g = zero_forcing_gains(h);
    REQUIRE(g.size() == 2);
    CHECK_THAT(g[0], Catch::Matchers::WithinAbs(4.0, 1e-9));
    CHECK_THAT(g[1], Catch::Matchers::WithinAbs(9.0, 1e-9));
}

TEST_CASE("throughput percentiles use linear order-statistic interpolation") {
    SECTION("1..100 reference") {
        std::vector<double> xs(100);
        for (int i = 0; i < 100; ++i) xs[static_cast<std::size_t>(i)] = i + 1.0;
        const auto p = throughput_percentiles(xs);
        CHECK_THAT(p.peak_mbps, Catch::Matchers::WithinAbs(95.05, 1e-9));
        CHECK_THAT(p.avg_mbps, Catch::Matchers::WithinAbs(50.5, 1e-9));
        CHECK_THAT(p.edge_mbps, Catch::Matchers::WithinAbs(5.95, 1e-9));
    }
    SECTION("constant samples collapse") {
        const std::vector<double> xs(9, 3.25);
        const auto p = throughput_percentiles(xs);
        CHECK(p.peak_mbps == 3.25);
        CHECK(p.avg_mbps == 3.25);
        CHECK(p.edge_mbps == 3.25);
    }
    SECTION("singleton") {
        const auto p = throughput_percentiles(std::vector<double>{7.0});
        CHECK(p.peak_mbps == 7.0);
        CHECK(p.avg_mbps == 7.0);
        CHECK(p.edge_mbps == 7.0);
    }
    SECTION("empty rejected") {
        CHECK_THROWS_AS(throughput_percentiles(std::vector<double>{}), std::invalid_argument);
    }
}

TEST_CASE("metrics report invariants") {
    MetricsReport ok;
    ok.ue_throughput_peak_mbps = 3.0;
    ok.ue_throughput_avg_mbps = 2.0;
    ok.ue_throughput_edge_mbps = 1.0;
    ok.avg_spectral_efficiency = 2.0;
    CHECK_NOTHROW(ok.validate(64));
    MetricsReport bad = ok;
    bad.ue_throughput_edge_mbps = 5.0;
    CHECK_THROWS_AS(bad.validate(64), std::logic_error);
    bad = ok;
    bad.avg_spectral_efficiency = 7.0;
    CHECK_THROWS_AS(bad.validate(64), std::logic_error);
}
