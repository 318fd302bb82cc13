#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "celltune/events.hpp"
#include "celltune/rng.hpp"

using namespace celltune;

namespace {
EventContext basic_ctx(const RadioConfig& radio) {
    EventContext ctx;
    ctx.gamma_eff_lag_db = 4.0;
    ctx.serving_rx_power_mw = dbm_to_mw(-40.0);
    ctx.noise_mw = dbm_to_mw(-101.0);
    ctx.n_cells = 5;
    ctx.radio = &radio;
    ctx.vswr_nominal = 1.5;
    ctx.vswr_drawn = 2.0;
    return ctx;
}
}  // namespace

TEST_CASE("catalog shapes follow the event tables") {
    const auto indoor = EventCatalog::indoor();
    const auto outdoor = EventCatalog::outdoor();
    CHECK(indoor.size() == 7);
    CHECK(outdoor.size() == 9);
    CHECK(indoor.fault_count() == 3);
    CHECK(indoor.clearing_count() == 3);
    CHECK(outdoor.fault_count() == 4);
    CHECK(outdoor.clearing_count() == 4);
    for (const auto& e : indoor.events)
        if (e.is_clearing) CHECK(indoor.by_id(e.paired_fault_id).is_fault());
    for (const auto& e : outdoor.events)
        if (e.is_clearing) CHECK(outdoor.by_id(e.paired_fault_id).is_fault());
    CHECK(indoor.by_id(0).is_normal());
    CHECK_THROWS_AS(indoor.by_id(7), std::invalid_argument);
}

TEST_CASE("default rates reproduce the per-environment masses") {
    const auto indoor = EventCatalog::indoor();
    const auto outdoor = EventCatalog::outdoor();
    CHECK_THAT(EventRates::indoor_default().p_normal(indoor),
               Catch::Matchers::WithinAbs(5.0 / 11.0, 1e-12));
    CHECK_THAT(EventRates::outdoor_default().p_normal(outdoor),
               Catch::Matchers::WithinAbs(5.0 / 9.0, 1e-12));
    EventRates bad{0.2, 0.2};  // indoor would leave no mass for normal
    CHECK_THROWS_AS(bad.validate(indoor), std::invalid_argument);
}

TEST_CASE("sampler honors eligibility") {
    const auto catalog = EventCatalog::indoor();
    const auto rates = EventRates::indoor_default();
    RngStream rng(11);

    SECTION("empty register never yields clearing events") {
        FaultRegister reg(catalog.size());
        for (int i = 0; i < 20000; ++i) {
            const auto& e = sample_event(catalog, rates, reg, rng);
            CHECK_FALSE(e.is_clearing);
        }
    }
    SECTION("zero fault rate always yields normal") {
        FaultRegister reg(catalog.size());
        EventRates degenerate{0.0, 0.0};
        for (int i = 0; i < 1000; ++i)
            CHECK(sample_event(catalog, degenerate, reg, rng).is_normal());
    }
}

TEST_CASE("sampler rates match the uniform-event law within 3 sigma") {
    const auto catalog = EventCatalog::indoor();
    const auto rates = EventRates::indoor_default();
    FaultRegister reg(catalog.size());
    for (int f = 1; f <= 3; ++f) reg.set(f);  // all faults active: ids 1..6 all eligible
    RngStream rng(123);

    const int n = 1'000'000;
    std::array<long, 7> counts{};
    for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(
        sample_event(catalog, rates, reg, rng).event_id)]++;

    const double p = 1.0 / 11.0;
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    for (int id = 1; id <= 6; ++id) {
        const double phat = static_cast<double>(counts[static_cast<std::size_t>(id)]) / n;
        CHECK(std::fabs(phat - p) <= 3.0 * sigma);
    }
    const double p0 = 5.0 / 11.0;
    const double sigma0 = std::sqrt(p0 * (1.0 - p0) / n);
    CHECK(std::fabs(static_cast<double>(counts[0]) / n - p0) <= 3.0 * sigma0);
}

TEST_CASE("apply_event register transitions") {
    const auto catalog = EventCatalog::indoor();
    FaultRegister reg(catalog.size());

    SECTION("fault then paired clear is an involution") {
        auto r1 = apply_event(reg, catalog.by_id(1));
        CHECK(r1.popcount() == 1);
        auto r2 = apply_event(r1, catalog.by_id(4));
        CHECK(r2 == reg);
    }
    SECTION("normal is the identity") {
        CHECK(apply_event(reg, catalog.by_id(0)) == reg);
    }
    SECTION("three faults give popcount three") {
        auto r = reg;
        for (int f = 1; f <= 3; ++f) r = apply_event(r, catalog.by_id(f));
        CHECK(r.popcount() == 3);
    }
    SECTION("clearing an inactive fault is rejected") {
        CHECK_THROWS_AS(apply_event(reg, catalog.by_id(4)), std::logic_error);
    }
}

TEST_CASE("event deltas match their formulas") {
    RadioConfig radio;
    const auto ctx = basic_ctx(radio);
    const auto indoor = EventCatalog::indoor();
    const auto outdoor = EventCatalog::outdoor();

    CHECK(event_sinr_delta_db(indoor.by_id(1), ctx) == -3.0);
    CHECK_THAT(event_sinr_delta_db(indoor.by_id(3), ctx),
               Catch::Matchers::WithinAbs(-4.436974992327127, 1e-12));
    CHECK(event_sinr_delta_db(outdoor.by_id(4), ctx) == -6.0);

    SECTION("neighbor-down applies the exact interference-removal gain") {
        EventContext nctx = ctx;
        nctx.neighbor_removal_gain_db = 1.375;
        CHECK_THAT(event_sinr_delta_db(indoor.by_id(2), nctx),
                   Catch::Matchers::WithinAbs(1.375, 1e-15));
    }
    SECTION("azimuth change uses the sector pattern") {
        AntennaPattern pat{65.0, 20.0, 0.0};
        EventContext octx = ctx;
        octx.pattern = &pat;
        octx.azimuth_theta_deg = 30.0;
        const double expected = azimuth_gain_db(pat, 30.0);
        CHECK_THAT(event_sinr_delta_db(outdoor.by_id(1), octx),
                   Catch::Matchers::WithinAbs(expected, 1e-12));
    }
    SECTION("rank loss uses the diversity ratio") {
        EventContext octx = ctx;
        octx.n_tx_full = 4;
        octx.n_tx_reduced = 2;
        CHECK_THAT(event_sinr_delta_db(outdoor.by_id(3), octx),
                   Catch::Matchers::WithinAbs(-10.0 * std::log10(2.0), 1e-12));
    }
}

TEST_CASE("engine ledger reverses fault contributions exactly") {
    RadioConfig radio;
    EventEngine engine(EventCatalog::indoor(), EventRates::indoor_default());
    auto ctx = basic_ctx(radio);

    SECTION("single pair cancels to zero") {
        RngStream rng(1);
        for (int trial = 0; trial < 300; ++trial) {
            ctx.vswr_drawn = 1.5 + rng.uniform() * 1.5;
            const double d_fault = engine.apply(engine.catalog().by_id(3), ctx);
            const double d_clear = engine.apply(engine.catalog().by_id(6), ctx);
            CHECK(std::fabs(d_fault + d_clear) < 1e-9);
            CHECK(engine.popcount() == 0);
        }
    }
    SECTION("random event soup keeps the shift equal to the ledger sum") {
        RngStream rng(99);
        double shift = 0.0;
        for (int i = 0; i < 5000; ++i) {
            ctx.vswr_drawn = 1.5 + rng.uniform() * 1.5;
            ctx.gamma_eff_lag_db = 4.0 + shift;
            const auto& e = engine.sample(rng);
            shift += engine.apply(e, ctx);
            double active_sum = 0.0;
            for (int f = 1; f <= 3; ++f)
                active_sum += engine.stored_contribution_db(f);
            CHECK(std::fabs(shift - active_sum) < 1e-9);
        }
    }
    SECTION("re-raising an active alarm is a no-op") {
        const double d1 = engine.apply(engine.catalog().by_id(1), ctx);
        CHECK(d1 == -3.0);
        CHECK(engine.apply(engine.catalog().by_id(1), ctx) == 0.0);
        CHECK(engine.popcount() == 1);
    }
    SECTION("clearing an inactive fault is a logic error") {
        CHECK_THROWS_AS(engine.clear_fault(2), std::logic_error);
    }
}

TEST_CASE("sampler never emits an ineligible clearing event over one million draws") {
    const auto catalog = EventCatalog::indoor();
    const auto rates = EventRates::indoor_default();
    RadioConfig radio;
    EventEngine engine(catalog, rates);
    auto ctx = basic_ctx(radio);
    RngStream rng(2024);
    for (int i = 0; i < 1'000'000; ++i) {
        const auto& e = engine.sample(rng);
        if (e.is_clearing) REQUIRE(engine.fault_active(e.paired_fault_id));
        ctx.gamma_eff_lag_db = 4.0;
        engine.apply(e, ctx);
    }
}
