#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "celltune/radio.hpp"
#include "celltune/rng.hpp"

namespace celltune {

enum class EnvKind { Indoor, Outdoor };

// One entry of the network event catalog. Event id 0 is "cluster is normal";
// clearing events reverse a specific fault event of the same catalog.
struct NetworkEvent {
    EnvKind env_kind = EnvKind::Indoor;
    int event_id = 0;
    std::string description;
    bool is_clearing = false;
    int paired_fault_id = -1;

    bool is_normal() const { return event_id == 0; }
    bool is_fault() const { return event_id != 0 && !is_clearing; }
};

struct EventCatalog {
    EnvKind kind = EnvKind::Indoor;
    std::vector<NetworkEvent> events;  // indexed by event_id

    static EventCatalog indoor() {
        EventCatalog c;
        c.kind = EnvKind::Indoor;
        c.events = {
            {EnvKind::Indoor, 0, "cluster is normal", false, -1},
            {EnvKind::Indoor, 1, "feeder fault alarm (3 dB loss of signal)", false, -1},
            {EnvKind::Indoor, 2, "neighboring base station down", false, -1},
            {EnvKind::Indoor, 3, "VSWR out of range alarm", false, -1},
            {EnvKind::Indoor, 4, "feeder fault alarm cleared", true, 1},
            {EnvKind::Indoor, 5, "neighboring base station up again", true, 2},
            {EnvKind::Indoor, 6, "VSWR back in range", true, 3},
        };
        return c;
    }

    static EventCatalog outdoor() {
        EventCatalog c;
        c.kind = EnvKind::Outdoor;
        c.events = {
            {EnvKind::Outdoor, 0, "cluster is normal", false, -1},
            {EnvKind::Outdoor, 1, "changed antenna azimuth clockwise", false, -1},
            {EnvKind::Outdoor, 2, "neighboring base station is down", false, -1},
            {EnvKind::Outdoor, 3, "transmit diversity failed", false, -1},
            {EnvKind::Outdoor, 4, "feeder fault alarm (6 dB loss of signal)", false, -1},
            {EnvKind::Outdoor, 5, "reset antenna azimuth", true, 1},
            {EnvKind::Outdoor, 6, "neighboring base station is up again", true, 2},
            {EnvKind::Outdoor, 7, "transmit diversity is normal", true, 3},
            {EnvKind::Outdoor, 8, "feeder fault alarm cleared", true, 4},
        };
        return c;
    }

    const NetworkEvent& by_id(int id) const {
        if (id < 0 || id >= static_cast<int>(events.size()))
            throw std::invalid_argument("EventCatalog: unknown event id " + std::to_string(id));
        return events[static_cast<std::size_t>(id)];
    }

    int size() const { return static_cast<int>(events.size()); }

    int fault_count() const {
        int k = 0;
        for (const auto& e : events) k += e.is_fault() ? 1 : 0;
        return k;
    }
    int clearing_count() const {
        int k = 0;
        for (const auto& e : events) k += e.is_clearing ? 1 : 0;
        return k;
    }
};

// Occurrence rates per TTI. All fault events share one rate; clearing events
// share another (zero disables spontaneous clears, leaving them to corrective
// actions). The remaining mass is the "cluster is normal" rate.
struct EventRates {
    double p_fault = 1.0 / 11.0;
    double p_clear = 1.0 / 11.0;

    static EventRates indoor_default() { return {1.0 / 11.0, 1.0 / 11.0}; }
    static EventRates outdoor_default() { return {1.0 / 9.0, 0.0}; }

    double p_normal(const EventCatalog& catalog) const {
        return 1.0 - catalog.fault_count() * p_fault - catalog.clearing_count() * p_clear;
    }

    void validate(const EventCatalog& catalog) const {
        if (p_fault < 0.0 || p_fault >= 1.0 || p_clear < 0.0 || p_clear >= 1.0)
            throw std::invalid_argument("EventRates: probabilities must lie in [0, 1)");
        const double pn = p_normal(catalog);
        if (pn <= 0.0 || pn > 1.0)
            throw std::invalid_argument("EventRates: normal-event mass must lie in (0, 1]");
    }
};

// Binary alarm state, one slot per catalog event id (only fault ids are set).
class FaultRegister {
  public:
    FaultRegister() = default;
    explicit FaultRegister(int n_slots) : bits_(static_cast<std::size_t>(n_slots), 0) {}

    bool test(int id) const { return bits_.at(static_cast<std::size_t>(id)) != 0; }
    void set(int id) { bits_.at(static_cast<std::size_t>(id)) = 1; }
    void unset(int id) { bits_.at(static_cast<std::size_t>(id)) = 0; }

    int popcount() const {
        int k = 0;
        for (auto b : bits_) k += b ? 1 : 0;
        return k;
    }

    int size() const { return static_cast<int>(bits_.size()); }

    std::vector<int> active_ids() const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (bits_[static_cast<std::size_t>(i)]) out.push_back(i);
        return out;
    }

    bool operator==(const FaultRegister& o) const { return bits_ == o.bits_; }

  private:
    std::vector<std::uint8_t> bits_;
};

// Draws one event per TTI. Clearing events whose paired fault is inactive are
// ineligible; their probability mass falls through to "normal".
inline const NetworkEvent& sample_event(const EventCatalog& catalog, const EventRates& rates,
                                        const FaultRegister& reg, RngStream& rng) {
    rates.validate(catalog);
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& e : catalog.events) {
        if (e.is_normal()) continue;
        double w = 0.0;
        if (e.is_fault()) {
            w = rates.p_fault;
        } else if (reg.test(e.paired_fault_id)) {
            w = rates.p_clear;
        }
        acc += w;
        if (u < acc) return e;
    }
    return catalog.by_id(0);
}

// Register transition for one event: faults set their bit, clearing events
// unset the paired bit, "normal" is the identity. Clearing an inactive fault
// signals a sampler bug and is rejected.
inline FaultRegister apply_event(FaultRegister reg, const NetworkEvent& event) {
    if (event.is_normal()) return reg;
    if (event.is_clearing) {
        if (!reg.test(event.paired_fault_id))
            throw std::logic_error("apply_event: clearing event for inactive fault " +
                                   std::to_string(event.paired_fault_id));
        reg.unset(event.paired_fault_id);
        return reg;
    }
    reg.set(event.event_id);
    return reg;
}

// Quantities an event's SINR contribution may need. The environment fills in
// the radio state and the random draws for the event being applied; clearing
// events carry the stored contribution of their paired fault.
struct EventContext {
    double gamma_eff_lag_db = 0.0;     // reference effective SINR (N TTIs back)
    double serving_rx_power_mw = 1.0;  // cluster-mean serving received power
    double noise_mw = 1.0;
    int n_cells = 2;
    const RadioConfig* radio = nullptr;

    // effective-SINR gain from removing the downed neighbor's interference,
    // computed by the environment from its exact geometry
    double neighbor_removal_gain_db = 0.0;

    double vswr_nominal = 1.5;
    double vswr_drawn = 2.0;

    const AntennaPattern* pattern = nullptr;
    double azimuth_theta_deg = 0.0;

    int n_tx_full = 4;
    int n_tx_reduced = 2;

    double stored_contribution_db = 0.0;
};

// The additive change of the effective downlink SINR caused by one event.
// Clearing events return the exact negation of the stored fault contribution.
inline double event_sinr_delta_db(const NetworkEvent& event, const EventContext& ctx) {
    if (event.is_normal()) return 0.0;
    if (event.is_clearing) return -ctx.stored_contribution_db;

    const bool indoor = event.env_kind == EnvKind::Indoor;
    switch (event.event_id) {
        case 1:
            if (indoor) return -3.0;  // feeder fault, fixed return-loss delta
            if (ctx.pattern == nullptr)
                throw std::invalid_argument("event_sinr_delta_db: azimuth event needs a pattern");
            return azimuth_gain_delta_db(*ctx.pattern, ctx.pattern->boresight_deg,
                                         ctx.azimuth_theta_deg);
        case 2:
            // the downed neighbor stops interfering; its exact contribution
            // comes out of the SINR until the base station is up again
            return ctx.neighbor_removal_gain_db;
        case 3:
            if (indoor) return -std::fabs(vswr_delta_loss_db(ctx.vswr_nominal, ctx.vswr_drawn));
            return -10.0 * std::log10(static_cast<double>(ctx.n_tx_full) /
                                      static_cast<double>(ctx.n_tx_reduced));
        case 4:
            if (!indoor) return -6.0;  // outdoor feeder fault
            [[fallthrough]];
        default:
            throw std::invalid_argument("event_sinr_delta_db: unknown fault id " +
                                        std::to_string(event.event_id));
    }
}

// Owns the register plus the per-fault contribution ledger of one episode.
// A fault stores its realized delta when it fires so the matching clear can
// negate it bit-exactly; re-raising an already active alarm is a no-op.
class EventEngine {
  public:
    EventEngine(EventCatalog catalog, EventRates rates)
        : catalog_(std::move(catalog)),
          rates_(rates),
          register_(catalog_.size()),
          ledger_(static_cast<std::size_t>(catalog_.size()), 0.0) {
        rates_.validate(catalog_);
    }

    const NetworkEvent& sample(RngStream& rng) const {
        return sample_event(catalog_, rates_, register_, rng);
    }

    // Applies the event and returns its realized SINR delta in dB.
    double apply(const NetworkEvent& event, const EventContext& ctx) {
        if (event.is_normal()) return 0.0;
        if (event.is_clearing) return clear_fault(event.paired_fault_id);
        if (register_.test(event.event_id)) return 0.0;  // alarm already raised
        const double delta = event_sinr_delta_db(event, ctx);
        register_.set(event.event_id);
        ledger_[static_cast<std::size_t>(event.event_id)] = delta;
        return delta;
    }

    // Clears one active fault (corrective action path); returns the negated
    // stored contribution. Throws if the fault is not active.
    double clear_fault(int fault_id) {
        if (!register_.test(fault_id))
            throw std::logic_error("EventEngine: clearing inactive fault " +
                                   std::to_string(fault_id));
        const double delta = -ledger_[static_cast<std::size_t>(fault_id)];
        ledger_[static_cast<std::size_t>(fault_id)] = 0.0;
        register_.unset(fault_id);
        return delta;
    }

    bool fault_active(int fault_id) const { return register_.test(fault_id); }
    double stored_contribution_db(int fault_id) const {
        return ledger_[static_cast<std::size_t>(fault_id)];
    }

    const FaultRegister& fault_register() const { return register_; }
    const EventCatalog& catalog() const { return catalog_; }
    const EventRates& rates() const { return rates_; }
    int popcount() const { return register_.popcount(); }

  private:
    EventCatalog catalog_;
    EventRates rates_;
    FaultRegister register_;
    std::vector<double> ledger_;
};

}  // namespace celltune
