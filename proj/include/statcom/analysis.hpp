#pragma once

#include "statcom/types.hpp"

#include <optional>
#include <span>
#include <utility>

namespace statcom::analysis {

/// Single-bin Fourier amplitudes of harmonics 0..n_harmonics of f0 over an
/// integer-cycle rectangular window. Throws WindowError when the window does
/// not hold a whole number of cycles (no silent tapering) or fewer than
/// min_cycles of them.
std::vector<double> harmonic_amplitudes(std::span<const double> samples, double fs,
                                        double f0, std::size_t n_harmonics,
                                        std::size_t min_cycles = 1);

/// Total harmonic distortion sqrt(sum A_h^2, h=2..H) / A_1 over an
/// integer-cycle window of at least 10 cycles.
double thd(std::span<const double> samples, double fs, double f0,
           std::size_t n_harmonics = 50);

/// Fundamental amplitude and phase (cosine reference, window start) from a
/// single-bin correlation over integer cycles.
std::pair<double, double> fundamental_phasor(std::span<const double> samples,
                                             double fs, double f0);

/// sqrt(2) times the trailing one-cycle RMS: amplitude envelope of an
/// oscillatory channel. The first cycle of output holds the first complete
/// value.
std::vector<double> amplitude_envelope(std::span<const double> samples, double fs,
                                       double f0);

/// First duration after t_event from which the channel stays within
/// +/- band_abs of target until the end of the record; nullopt when it never
/// settles. With envelope set, the cycle-RMS amplitude envelope is tracked
/// instead of the raw samples (f0 required).
std::optional<double> settling_time(std::span<const double> times,
                                    std::span<const double> values, double t_event,
                                    double target, double band_abs,
                                    bool envelope = false, double f0 = 0.0);

/// Convenience wrapper: band as a fraction of |target|.
std::optional<double> settling_time_fraction(std::span<const double> times,
                                             std::span<const double> values,
                                             double t_event, double target,
                                             double band_fraction = 0.05,
                                             bool envelope = false, double f0 = 0.0);

struct SpreadStats {
    double max_minus_min = 0.0;  ///< extrema across modules and time
    double mean = 0.0;           ///< average across modules and time
};

/// Spread statistics over a set of per-module channels restricted to sample
/// range [first, last).
SpreadStats spread(const std::vector<std::span<const double>>& channels,
                   std::size_t first, std::size_t last);

/// Number of distinct voltage plateaus: samples are quantized to multiples
/// of level_step and bins holding at least occupancy_fraction of the window
/// are counted.
std::size_t level_count(std::span<const double> samples, double level_step,
                        double occupancy_fraction = 0.002);

}  // namespace statcom::analysis
