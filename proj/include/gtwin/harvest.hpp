#pragma once

// RF energy harvester: rectifier efficiency curve, storage capacitor with a
// three-state power FSM (Cold / Charging / Active), and an exact energy
// ledger. Stored energy E = C V^2 / 2 is the canonical state; voltage is
// derived.

#include <algorithm>
#include <cmath>

#include "gtwin/errors.hpp"

namespace gtwin {

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

enum class NodeFsm { Cold, Charging, Active };

inline const char* fsm_name(NodeFsm s) {
    switch (s) {
        case NodeFsm::Cold: return "cold";
        case NodeFsm::Charging: return "charging";
        default: return "active";
    }
}

// Rectifier conversion efficiency versus input power: zero below the
// sensitivity floor, linear up to eta_max at eta_max_at_dbm, flat above.
struct RectifierCurve {
    double sensitivity_dbm = -17;
    double eta_max = 0.3;
    double eta_max_at_dbm = 0;

    double eta(double p_in_dbm) const {
        if (p_in_dbm < sensitivity_dbm) return 0.0;
        if (p_in_dbm >= eta_max_at_dbm) return eta_max;
        return eta_max * (p_in_dbm - sensitivity_dbm) / (eta_max_at_dbm - sensitivity_dbm);
    }
};

struct NodePowerModel {
    RectifierCurve rectifier;
    double p_sleep = 3e-6;               // W, Cold and Charging draw
    double p_active = 22e-6;             // W, Active draw
    double e_reply = 2e-6;               // J per transmitted reply
    double demod_sensitivity_dbm = -14;  // minimum power to decode a command
};

struct HarvesterState {
    double capacitance = 100e-6;  // F
    double v_on = 2.8;            // Charging -> Active threshold
    double v_off = 1.8;           // Active -> Charging threshold
    double v_max = 5.5;           // storage clamp
    double energy = 0;            // J, canonical state
    NodeFsm fsm = NodeFsm::Cold;

    double energy_at(double v) const { return 0.5 * capacitance * v * v; }
    double voltage() const { return std::sqrt(2.0 * energy / capacitance); }
    double e_on() const { return energy_at(v_on); }
    double e_off() const { return energy_at(v_off); }
    double e_max() const { return energy_at(v_max); }
};

// Every joule is accounted for: harvested in, consumed by draw or replies,
// discarded when the capacitor clamps. The balance invariant is
// harvested - consumed - discarded == energy (starting from zero).
struct EnergyLedger {
    double harvested = 0;
    double consumed = 0;
    double discarded = 0;
};

// Advance the harvester by dt with p_in_dbm incident at the rectifier.
// Ordering inside the step: harvest, then draw (bounded by what is
// available), then clamp, then FSM transitions on the new level.
inline void harvest_step(HarvesterState& h, const NodePowerModel& pm, double p_in_dbm,
                         double dt, EnergyLedger& ledger) {
    if (!(dt > 0.0)) throw SimulationFault("harvest step needs positive dt");
    double in = pm.rectifier.eta(p_in_dbm) * dbm_to_watts(p_in_dbm) * dt;
    if (h.fsm == NodeFsm::Cold && in > 0.0) h.fsm = NodeFsm::Charging;

    double draw = (h.fsm == NodeFsm::Active ? pm.p_active : pm.p_sleep) * dt;
    double avail = h.energy + in;
    double draw_eff = std::min(draw, avail);
    double after = avail - draw_eff;
    double spill = std::max(0.0, after - h.e_max());

    h.energy = after - spill;
    ledger.harvested += in;
    ledger.consumed += draw_eff;
    ledger.discarded += spill;

    if (h.fsm == NodeFsm::Active && h.energy < h.e_off()) h.fsm = NodeFsm::Charging;
    else if (h.fsm == NodeFsm::Charging && h.energy >= h.e_on()) h.fsm = NodeFsm::Active;
}

// Spend `e` joules on a reply. Only an Active node with the energy in hand
// may spend; the node falls back to Charging if the spend crosses the
// turn-off threshold. Returns false (state untouched) otherwise.
inline bool try_spend(HarvesterState& h, double e, EnergyLedger& ledger) {
    if (h.fsm != NodeFsm::Active || h.energy < e) return false;
    h.energy -= e;
    ledger.consumed += e;
    if (h.energy < h.e_off()) h.fsm = NodeFsm::Charging;
    return true;
}

}  // namespace gtwin
