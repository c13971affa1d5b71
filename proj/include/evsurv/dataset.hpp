#pragma once

// Right-censored survival records and their CSV form.
//
// CSV schema: f0,...,f{p-1},duration,event[,true_duration]. Feature columns
// are every column other than duration/event/true_duration, in file order.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evsurv {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SurvivalRecord {
    std::vector<double> x;
    double t_star = 1.0;  // observed duration
    int event = 1;        // 1 = event observed, 0 = right-censored
    std::optional<double> t_true;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<SurvivalRecord> records;

    std::size_t size() const { return records.size(); }
    std::size_t dim() const { return feature_names.size(); }
    bool empty() const { return records.empty(); }

    std::vector<double> durations() const {
        std::vector<double> out;
        out.reserve(size());
        for (const auto& r : records) out.push_back(r.t_star);
        return out;
    }
    std::vector<int> events() const {
        std::vector<int> out;
        out.reserve(size());
        for (const auto& r : records) out.push_back(r.event);
        return out;
    }
    double censoring_rate() const {
        if (empty()) return 0.0;
        std::size_t c = 0;
        for (const auto& r : records) c += r.event == 0;
        return static_cast<double>(c) / static_cast<double>(size());
    }
    bool has_true_durations() const {
        for (const auto& r : records)
            if (!r.t_true) return false;
        return !empty();
    }

    Dataset subset(std::span<const std::size_t> idx) const {
        Dataset out{feature_names, {}};
        out.records.reserve(idx.size());
        for (auto i : idx) out.records.push_back(records.at(i));
        return out;
    }

    /// Throws DataError unless every record is well formed.
    void validate() const {
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            const std::string where = "record " + std::to_string(i) + ": ";
            if (r.x.size() != dim()) throw DataError(where + "feature count does not match header");
            if (!(r.t_star > 0.0) || !std::isfinite(r.t_star)) throw DataError(where + "duration must be positive");
            if (r.event != 0 && r.event != 1) throw DataError(where + "event flag must be 0 or 1");
            for (double v : r.x)
                if (!std::isfinite(v)) throw DataError(where + "non-finite covariate");
        }
    }
};

inline std::vector<std::string> default_feature_names(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
    return names;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

inline void write_csv(const Dataset& data, std::ostream& os) {
    const bool with_truth = data.has_true_durations();
    for (const auto& name : data.feature_names) os << name << ',';
    os << "duration,event" << (with_truth ? ",true_duration" : "") << '\n';
    for (const auto& r : data.records) {
        for (double v : r.x) os << detail::format_double(v) << ',';
        os << detail::format_double(r.t_star) << ',' << r.event;
        if (with_truth) os << ',' << detail::format_double(*r.t_true);
        os << '\n';
    }
}

inline void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    write_csv(data, os);
    if (!os) throw DataError("write to '" + path + "' failed");
}

inline Dataset read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty CSV input");
    const auto header = detail::split_csv(line);
    std::optional<std::size_t> dur_col, evt_col, true_col;
    std::vector<std::size_t> feat_cols;
    Dataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "duration") dur_col = c;
        else if (header[c] == "event") evt_col = c;
        else if (header[c] == "true_duration") true_col = c;
        else {
            feat_cols.push_back(c);
            data.feature_names.emplace_back(header[c]);
        }
    }
    if (!dur_col) throw DataError("missing column 'duration'");
    if (!evt_col) throw DataError("missing column 'event'");

    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
        SurvivalRecord r;
        r.x.reserve(feat_cols.size());
        for (auto c : feat_cols) r.x.push_back(detail::parse_double(cells[c], line_no));
        r.t_star = detail::parse_double(cells[*dur_col], line_no);
        if (!(r.t_star > 0.0)) throw DataError("line " + std::to_string(line_no) + ": duration must be positive");
        const double ev = detail::parse_double(cells[*evt_col], line_no);
        if (ev != 0.0 && ev != 1.0)
            throw DataError("line " + std::to_string(line_no) + ": event flag must be 0 or 1");
        r.event = static_cast<int>(ev);
        if (true_col) r.t_true = detail::parse_double(cells[*true_col], line_no);
        data.records.push_back(std::move(r));
    }
    if (data.empty()) throw DataError("CSV has no records");
    data.validate();
    return data;
}

inline Dataset read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open '" + path + "'");
    return read_csv(is);
}

}  // namespace evsurv
