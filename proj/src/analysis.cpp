#include "statcom/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace statcom::analysis {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t check_window(std::span<const double> samples, double fs, double f0,
                         std::size_t min_cycles) {
    if (samples.empty()) throw WindowError("empty analysis window");
    if (!(fs > 0.0) || !(f0 > 0.0)) throw WindowError("fs and f0 must be positive");
    const double cycles = static_cast<double>(samples.size()) * f0 / fs;
    const double rounded = std::round(cycles);
    if (std::abs(cycles - rounded) > 1e-6 * cycles + 1e-9) {
        throw WindowError("window holds " + std::to_string(cycles) +
                          " cycles of f0; an integer count is required");
    }
    if (rounded < static_cast<double>(min_cycles)) {
        throw WindowError("window holds " + std::to_string(cycles) + " cycles; >= " +
                          std::to_string(min_cycles) + " required");
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

std::vector<double> harmonic_amplitudes(std::span<const double> samples, double fs,
                                        double f0, std::size_t n_harmonics,
                                        std::size_t min_cycles) {
    check_window(samples, fs, f0, min_cycles);
    const std::size_t n = samples.size();
    std::vector<double> amps(n_harmonics + 1, 0.0);
    double mean = 0.0;
    for (double x : samples) mean += x;
    amps[0] = std::abs(mean / static_cast<double>(n));
    for (std::size_t h = 1; h <= n_harmonics; ++h) {
        const double w = kTwoPi * static_cast<double>(h) * f0 / fs;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = w * static_cast<double>(k);
            re += samples[k] * std::cos(ang);
            im -= samples[k] * std::sin(ang);
        }
        amps[h] = 2.0 * std::hypot(re, im) / static_cast<double>(n);
    }
    return amps;
}

double thd(std::span<const double> samples, double fs, double f0,
           std::size_t n_harmonics) {
    check_window(samples, fs, f0, 10);
    const auto amps = harmonic_amplitudes(samples, fs, f0, n_harmonics, 10);
    double sum_sq = 0.0;
    for (std::size_t h = 2; h <= n_harmonics; ++h) sum_sq += amps[h] * amps[h];
    if (amps[1] == 0.0) throw WindowError("thd: fundamental amplitude is zero");
    return std::sqrt(sum_sq) / amps[1];
}

std::pair<double, double> fundamental_phasor(std::span<const double> samples,
                                             double fs, double f0) {
    check_window(samples, fs, f0, 1);
    const std::size_t n = samples.size();
    const double w = kTwoPi * f0 / fs;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = w * static_cast<double>(k);
        re += samples[k] * std::cos(ang);
        im -= samples[k] * std::sin(ang);
    }
    re *= 2.0 / static_cast<double>(n);
    im *= 2.0 / static_cast<double>(n);
    return {std::hypot(re, im), std::atan2(im, re)};
}

std::vector<double> amplitude_envelope(std::span<const double> samples, double fs,
                                       double f0) {
    if (!(fs > 0.0) || !(f0 > 0.0)) throw WindowError("fs and f0 must be positive");
    const std::size_t period = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(fs / f0)));
    std::vector<double> env(samples.size(), 0.0);
    if (samples.size() < period) return env;
    double acc = 0.0;
    for (std::size_t k = 0; k < period; ++k) acc += samples[k] * samples[k];
    const double scale = 2.0 / static_cast<double>(period);
    const double first = std::sqrt(acc * scale);
    for (std::size_t k = 0; k < period; ++k) env[k] = first;
    for (std::size_t k = period; k < samples.size(); ++k) {
        acc += samples[k] * samples[k] - samples[k - period] * samples[k - period];
        env[k] = std::sqrt(std::max(0.0, acc) * scale);
    }
    return env;
}

std::optional<double> settling_time(std::span<const double> times,
                                    std::span<const double> values, double t_event,
                                    double target, double band_abs, bool envelope,
                                    double f0) {
    if (times.size() != values.size() || times.empty()) {
        throw WindowError("settling_time: time/value size mismatch");
    }
    std::vector<double> env;
    std::span<const double> track = values;
    if (envelope) {
        const double fs =
            static_cast<double>(times.size() - 1) / (times.back() - times.front());
        env = amplitude_envelope(values, fs, f0);
        track = env;
    }
    // Last violation at or after the event decides the settling instant.
    std::ptrdiff_t last_violation = -1;
    std::size_t first_after = times.size();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_event) continue;
        if (first_after == times.size()) first_after = k;
        if (std::abs(track[k] - target) > band_abs) last_violation = static_cast<std::ptrdiff_t>(k);
    }
    if (first_after == times.size()) throw WindowError("settling_time: t_event beyond record");
    if (last_violation < 0) return times[first_after] - t_event;
    const std::size_t settle_idx = static_cast<std::size_t>(last_violation) + 1;
    if (settle_idx >= times.size()) return std::nullopt;
    return times[settle_idx] - t_event;
}

std::optional<double> settling_time_fraction(std::span<const double> times,
                                             std::span<const double> values,
                                             double t_event, double target,
                                             double band_fraction, bool envelope,
                                             double f0) {
    return settling_time(times, values, t_event, target,
                         band_fraction * std::abs(target), envelope, f0);
}

SpreadStats spread(const std::vector<std::span<const double>>& channels,
                   std::size_t first, std::size_t last) {
    SpreadStats st;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ch : channels) {
        for (std::size_t k = first; k < std::min(last, ch.size()); ++k) {
            lo = std::min(lo, ch[k]);
            hi = std::max(hi, ch[k]);
            sum += ch[k];
            ++count;
        }
    }
    if (count == 0) return st;
    st.max_minus_min = hi - lo;
    st.mean = sum / static_cast<double>(count);
    return st;
}

std::size_t level_count(std::span<const double> samples, double level_step,
                        double occupancy_fraction) {
    if (!(level_step > 0.0)) throw WindowError("level_count: step must be positive");
    std::map<long, std::size_t> bins;
    for (double x : samples) {
        bins[static_cast<long>(std::llround(x / level_step))]++;
    }
    const auto min_count = static_cast<std::size_t>(
        occupancy_fraction * static_cast<double>(samples.size()));
    std::size_t levels = 0;
    for (const auto& [level, count] : bins) {
        if (count >= std::max<std::size_t>(1, min_count)) ++levels;
    }
    return levels;
}

}  // namespace statcom::analysis
