#pragma once

#include "statcom/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>

namespace statcom {

struct EventMarker {
    double time = 0.0;
    std::string label;
};

/// Decimated waveform store for one simulation run: named channels of equal
/// length on a uniform time base.
class TimeSeriesRecord {
public:
    TimeSeriesRecord() = default;
    TimeSeriesRecord(double sample_rate, std::vector<std::string> channel_names);

    double sample_rate() const { return sample_rate_; }
    std::size_t size() const { return data_.empty() ? 0 : data_.front().size(); }
    std::size_t channel_count() const { return names_.size(); }

    const std::vector<std::string>& channel_names() const { return names_; }
    bool has_channel(const std::string& name) const;
    std::span<const double> channel(const std::string& name) const;
    std::span<const double> channel(std::size_t idx) const { return data_.at(idx); }

    /// Append one sample row; length must equal channel_count.
    void append(std::span<const double> row);

    std::vector<double> times() const;
    double time_at(std::size_t k) const { return static_cast<double>(k) / sample_rate_; }
    std::size_t index_at(double t) const;

    void add_event(double time, std::string label);
    const std::vector<EventMarker>& events() const { return events_; }

    /// FNV-1a over channel names and raw sample bits; identical runs yield
    /// identical digests.
    std::uint64_t digest() const;

private:
    double sample_rate_ = 0.0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_;
    std::vector<EventMarker> events_;
};

/// CSV export: header row of channel names with units, one row per sample,
/// full double precision so analyze-after-export reproduces inline metrics
/// exactly.
void write_csv(const TimeSeriesRecord& record, std::ostream& out);
void write_csv_file(const TimeSeriesRecord& record, const std::string& path);

/// CSV import. Malformed content reports the offending line number.
TimeSeriesRecord read_csv(std::istream& in);
TimeSeriesRecord read_csv_file(const std::string& path);

}  // namespace statcom
