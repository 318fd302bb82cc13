#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "celltune/config.hpp"
#include "celltune/env.hpp"

using namespace celltune;

namespace {
VolteParams volte_defaults() { return RunConfig::volte_defaults().to_volte_params(); }

VolteParams volte_no_events() {
    auto p = volte_defaults();
    p.rates = EventRates{0.0, 0.0};
    return p;
}

SonParams son_defaults() { return RunConfig::son_defaults().to_son_params(); }
}  // namespace

TEST_CASE("volte reset matches the initial operating point") {
    VolteEnv env(volte_defaults(), 1);
    const int s = env.reset(0);
    CHECK(s == 0);
    CHECK_THAT(env.gamma_eff_db(), Catch::Matchers::WithinAbs(4.0, 1e-9));
    for (int i = 0; i < env.n_ues(); ++i) CHECK(env.tx_power_dbm(i) == 13.0);
    CHECK(env.tti() == 0);
    CHECK_FALSE(env.terminal());
}

TEST_CASE("volte resets with equal seeds replay identical traces") {
    VolteEnv a(volte_defaults(), 7);
    VolteEnv b(volte_defaults(), 7);
    a.reset(3);
    b.reset(3);
    const std::vector<int> actions{4, 1, 0, 3, 2, 4, 4, 0, 1, 3};
    for (int act : actions) {
        if (a.terminal()) break;
        const auto oa = a.step(act);
        const auto ob = b.step(act);
        CHECK(oa.gamma_eff_db == ob.gamma_eff_db);
        CHECK(oa.reward == ob.reward);
        CHECK(oa.event_id == ob.event_id);
        CHECK(oa.state == ob.state);
    }
}

TEST_CASE("volte power command clamps at the maximum BS power") {
    VolteEnv env(volte_no_events(), 1);
    env.reset(0);
    env.override_tx_power_dbm(0, 32.0);
    const auto out = env.step(4);  // kappa 3, +1 on UE 0
    (void)out;
    CHECK(env.tx_power_dbm(0) == 33.0);
}

TEST_CASE("volte a0 in a fault-free TTI keeps state s0 with zero reward") {
    VolteEnv env(volte_no_events(), 1);
    env.reset(0);
    const auto out = env.step(0);
    CHECK(out.state == 0);
    CHECK(out.reward == 0.0);
    CHECK(out.event_id == 0);
}

TEST_CASE("volte reaching the target pays r_max and terminates") {
    auto params = volte_no_events();
    VolteEnv env(params, 1);
    env.reset(0);
    // shift every user up by the missing margin; the effective SINR moves 1:1
    for (int i = 0; i < env.n_ues(); ++i)
        env.override_tx_power_dbm(i, params.radio.initial_tx_power_dbm + 2.0);
    const auto out = env.step(0);
    CHECK(out.reward == params.r_max);
    CHECK(out.terminal);
    CHECK(out.target_met);
    CHECK(env.target_met());
}

TEST_CASE("volte state labels follow the executed action group") {
    VolteEnv env(volte_defaults(), 5);
    RngStream rng(17);
    for (std::uint64_t ep = 0; ep < 30; ++ep) {
        env.reset(ep);
        while (!env.terminal()) {
            const int action = static_cast<int>(rng.uniform_index(5));
            const auto out = env.step(action);
            if (action == 0) CHECK(out.state == 0);
            if (action == 1 || action == 2) CHECK(out.state == 2);
            if (action == 3 || action == 4) CHECK(out.state == 1);
        }
    }
}

TEST_CASE("volte transmit power never exceeds the cap under any action sequence") {
    VolteEnv env(volte_defaults(), 9);
    RngStream rng(23);
    for (std::uint64_t ep = 0; ep < 50; ++ep) {
        env.reset(ep);
        while (!env.terminal()) {
            env.step(static_cast<int>(rng.uniform_index(5)));
            for (int i = 0; i < env.n_ues(); ++i)
                CHECK(env.tx_power_dbm(i) <= env.params().radio.max_bs_power_dbm + 1e-12);
        }
    }
}

TEST_CASE("volte terminal guard matches the repeat-until conditions") {
    VolteEnv env(volte_defaults(), 2);
    for (std::uint64_t ep = 0; ep < 40; ++ep) {
        env.reset(ep);
        while (!env.terminal()) env.step(0);
        const bool by_target = env.target_met();
        const bool by_horizon = env.tti() >= env.params().horizon;
        CHECK((by_target || by_horizon));
        CHECK_THROWS_AS(env.step(0), std::logic_error);
    }
}

TEST_CASE("volte effective SINR equals the start plus the applied event deltas") {
    VolteEnv env(volte_defaults(), 11);
    for (std::uint64_t ep = 0; ep < 25; ++ep) {
        env.reset(ep);
        const double start = env.gamma_eff_db();
        while (!env.terminal()) {
            env.step(0);  // no power changes, so only events move the SINR
            CHECK_THAT(env.gamma_eff_db(),
                       Catch::Matchers::WithinAbs(start + env.event_shift_db(), 1e-9));
        }
    }
}

TEST_CASE("volte rejects invalid actions") {
    VolteEnv env(volte_defaults(), 1);
    env.reset(0);
    CHECK_THROWS_AS(env.step(5), std::invalid_argument);
    CHECK_THROWS_AS(env.step(-1), std::invalid_argument);
}

TEST_CASE("son reset seeds one fault and exposes the register") {
    SonEnv env(son_defaults(), 1);
    const int s = env.reset(0);
    CHECK(s == 0);
    CHECK(env.popcount() == 1);
    CHECK(env.tti() == 0);
}

TEST_CASE("son clearing the last alarm pays r_max and terminates") {
    auto params = son_defaults();
    params.rates = EventRates{0.0, 0.0};  // no background arrivals
    SonEnv env(params, 3);
    env.reset(0);
    REQUIRE(env.popcount() == 1);
    const int fault = env.fault_register().active_ids().front();
    const auto out = env.step(son_actions::action_for_fault(fault));
    CHECK(out.reward == params.r_max);
    CHECK(out.terminal);
    CHECK(env.popcount() == 0);
    CHECK_THAT(env.event_shift_db(), Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("son wasted corrective action earns the non-decrease penalty") {
    auto params = son_defaults();
    params.rates = EventRates{0.0, 0.0};
    // find an episode whose seeded fault is not the neighbor outage
    for (std::uint64_t ep = 0; ep < 20; ++ep) {
        SonEnv env(params, 5);
        env.reset(ep);
        if (env.events().fault_active(2)) continue;
        const auto out = env.step(1);  // neighbor-up command with no such alarm
        CHECK(out.reward == -1.0);
        CHECK(out.state == 1);
        CHECK(env.popcount() == 1);
        return;
    }
    FAIL("no suitable episode found");
}

TEST_CASE("son reward sign tracks the alarm count change") {
    SonEnv env(son_defaults(), 13);
    RngStream rng(3);
    for (std::uint64_t ep = 0; ep < 60; ++ep) {
        env.reset(ep);
        int prev = env.popcount();
        while (!env.terminal()) {
            const auto out = env.step(static_cast<int>(rng.uniform_index(5)));
            if (out.popcount == 0) {
                CHECK(out.reward == env.params().r_max);
            } else if (out.popcount < prev) {
                CHECK(out.reward == 1.0);
                CHECK(out.state == 2);
            } else {
                CHECK(out.reward == -1.0);
                CHECK(out.state == 1);
            }
            prev = out.popcount;
        }
    }
}

TEST_CASE("son clearing one of two alarms with a quiet background earns plus one") {
    auto params = son_defaults();
    SonEnv env(params, 21);
    // search deterministically for a two-alarm situation followed by a quiet TTI
    for (std::uint64_t ep = 0; ep < 400; ++ep) {
        env.reset(ep);
        while (!env.terminal()) {
            if (env.popcount() >= 2) {
                const int fault = env.fault_register().active_ids().front();
                const auto out = env.step(son_actions::action_for_fault(fault));
                if (out.event_id == 0 && out.popcount >= 1) {
                    CHECK(out.reward == 1.0);
                    CHECK(out.state == 2);
                    return;
                }
                break;
            }
            env.step(0);
        }
    }
    FAIL("no two-alarm episode found");
}

TEST_CASE("son fault and clear leave the SINR ledger balanced") {
    auto params = son_defaults();
    params.rates = EventRates{0.0, 0.0};
    SonEnv env(params, 8);
    for (std::uint64_t ep = 0; ep < 30; ++ep) {
        env.reset(ep);
        const double with_fault = env.event_shift_db();
        CHECK(std::fabs(with_fault) > 0.0);
        const int fault = env.fault_register().active_ids().front();
        env.step(son_actions::action_for_fault(fault));
        CHECK_THAT(env.event_shift_db(), Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("son per-ue sinr moves uniformly with the event shift") {
    SonEnv env(son_defaults(), 30);
    env.reset(2);
    const auto before = env.per_ue_sinr_db();
    const double shift_before = env.event_shift_db();
    while (!env.terminal()) {
        env.step(0);
        const auto now = env.per_ue_sinr_db();
        const double ds = env.event_shift_db() - shift_before;
        for (std::size_t i = 0; i < now.size(); ++i)
            CHECK_THAT(now[i] - before[i], Catch::Matchers::WithinAbs(ds, 1e-9));
    }
}

TEST_CASE("son episodes are deterministic under a fixed seed") {
    SonEnv a(son_defaults(), 77);
    SonEnv b(son_defaults(), 77);
    for (std::uint64_t ep = 0; ep < 10; ++ep) {
        a.reset(ep);
        b.reset(ep);
        while (!a.terminal() && !b.terminal()) {
            const auto oa = a.step(2);
            const auto ob = b.step(2);
            CHECK(oa.event_id == ob.event_id);
            CHECK(oa.popcount == ob.popcount);
            CHECK(oa.gamma_eff_db == ob.gamma_eff_db);
        }
        CHECK(a.terminal() == b.terminal());
    }
}
