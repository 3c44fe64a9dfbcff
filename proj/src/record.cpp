#include "statcom/record.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace statcom {

TimeSeriesRecord::TimeSeriesRecord(double sample_rate, std::vector<std::string> channel_names)
    : sample_rate_(sample_rate), names_(std::move(channel_names)), data_(names_.size()) {
    if (!(sample_rate_ > 0.0)) throw ConfigError("record: sample rate must be positive");
}

bool TimeSeriesRecord::has_channel(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> TimeSeriesRecord::channel(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw WindowError("channel not found: " + name);
    return data_[static_cast<std::size_t>(it - names_.begin())];
}

void TimeSeriesRecord::append(std::span<const double> row) {
    if (row.size() != names_.size()) throw ConfigError("record: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) data_[c].push_back(row[c]);
}

std::vector<double> TimeSeriesRecord::times() const {
    std::vector<double> t(size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time_at(k);
    return t;
}

std::size_t TimeSeriesRecord::index_at(double t) const {
    const auto idx = static_cast<std::ptrdiff_t>(std::floor(t * sample_rate_ + 1e-9));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        idx, 0, static_cast<std::ptrdiff_t>(size()) - 1));
}

void TimeSeriesRecord::add_event(double time, std::string label) {
    events_.push_back({time, std::move(label)});
}

std::uint64_t TimeSeriesRecord::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& name : names_) mix(name.data(), name.size());
    for (const auto& col : data_) {
        if (!col.empty()) mix(col.data(), col.size() * sizeof(double));
    }
    return h;
}

namespace {

/// RFC 4180 quoting for header fields.
std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw WindowError("csv line " + std::to_string(line_no) + ": unterminated quote");
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_csv(const TimeSeriesRecord& record, std::ostream& out) {
    out << "t_s";
    for (const auto& name : record.channel_names()) out << ',' << csv_quote(name);
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t k = 0; k < record.size(); ++k) {
        out << record.time_at(k);
        for (std::size_t c = 0; c < record.channel_count(); ++c) {
            out << ',' << record.channel(c)[k];
        }
        out << '\n';
    }
}

void write_csv_file(const TimeSeriesRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    write_csv(record, out);
}

TimeSeriesRecord read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw WindowError("csv line 1: missing header");
    auto header = split_csv_line(line, 1);
    if (header.size() < 2 || header[0] != "t_s") {
        throw WindowError("csv line 1: expected header starting with t_s");
    }
    std::vector<std::string> names(header.begin() + 1, header.end());
    std::vector<std::vector<double>> cols(names.size());
    std::vector<double> times;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (fields.size() != header.size()) {
            throw WindowError("csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double value = 0.0;
            try {
                std::size_t pos = 0;
                value = std::stod(fields[c], &pos);
                if (pos != fields[c].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw WindowError("csv line " + std::to_string(line_no) +
                                  ": not a number: '" + fields[c] + "'");
            }
            if (c == 0) {
                times.push_back(value);
            } else {
                cols[c - 1].push_back(value);
            }
        }
    }
    if (times.size() < 2) throw WindowError("csv: need at least two samples");
    const double rate = 1.0 / (times[1] - times[0]);
    TimeSeriesRecord record(rate, names);
    std::vector<double> row(names.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t c = 0; c < names.size(); ++c) row[c] = cols[c][k];
        record.append(row);
    }
    return record;
}

TimeSeriesRecord read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    return read_csv(in);
}

}  // namespace statcom
