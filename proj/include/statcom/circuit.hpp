#pragma once

#include "statcom/types.hpp"

namespace statcom::circuit {

/// Insertion sign of a module: +1 SeriesPlus, -1 SeriesMinus, 0 for bypass
/// and parallel states. Passive resolves through passive_polarity.
int series_sign(ModuleState s, double i_o);

/// Polarity a passive (all transistors off) module presents so that its
/// capacitor absorbs power through the diode bridge. Tie-break at zero
/// current is +1.
int passive_polarity(double i_o);

/// Arm terminal voltage for a fixed state vector: sum of inserted capacitor
/// voltages minus conduction drops. Every module carries the load current in
/// any state; Series states run it through two parallel transistor-diode
/// branches, modeled as one path with half the device resistance.
double arm_voltage(const std::vector<ModuleState>& states, const PlantState& plant,
                   const ModuleParams& params);

/// Differential link currents between adjacent modules, length N-1, in the
/// direction each active link permits (always >= 0). Links are recovered
/// from the state vector by greedy left-to-right pairing of equal Parallel
/// states, which matches the disjoint pairing assign_states produces. A link
/// conducts only once the source-destination voltage difference exceeds the
/// two diode drops of the loop.
std::vector<double> parallel_link_currents(const std::vector<ModuleState>& states,
                                           const std::vector<double>& cap_voltages,
                                           const ModuleParams& params);

/// Advance the plant one fixed step with the module states frozen:
/// semi-implicit Euler, current first against the old arm voltage, then the
/// capacitors against the updated current. Accumulates the energy ledger
/// when one is supplied.
PlantState step(PlantState plant, const std::vector<ModuleState>& states,
                const GridParams& grid, const ModuleParams& params, double dt,
                EnergyLedger* ledger = nullptr);

/// Grid source voltage at time t (amplitude scale applied by the caller for
/// sag/swell events).
double grid_voltage(const GridParams& grid, double t);

/// Stored energy of the plant: capacitors plus grid inductor.
double stored_energy(const PlantState& plant, const GridParams& grid,
                     const ModuleParams& params);

}  // namespace statcom::circuit
