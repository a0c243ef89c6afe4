// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tailcast/error.hpp"
#include "tailcast/format.hpp"

namespace tailcast {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerWeek = 7.0 * kSecondsPerDay;

/// One observation: epoch-seconds (UTC) and a nonnegative magnitude.
struct EventRecord {
  double timestamp{0};
  double magnitude{0};

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Nonempty, time-ordered, immutable sequence of events.
class EventSeries {
 public:
  explicit EventSeries(std::vector<EventRecord> records) : records_(std::move(records)) {
    if (records_.empty()) throw EmptySeriesError("event series is empty");
    for (const auto& r : records_) {
      if (!std::isfinite(r.timestamp)) throw InputError("event timestamp must be finite");
      if (!std::isfinite(r.magnitude) || r.magnitude < 0)
        throw InputError("event magnitude must be finite and >= 0");
    }
    std::stable_sort(records_.begin(), records_.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.timestamp < b.timestamp; });
  }

  const std::vector<EventRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  double origin() const noexcept { return records_.front().timestamp; }
  double last_timestamp() const noexcept { return records_.back().timestamp; }
  const EventRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const noexcept { return records_.begin(); }
  auto end() const noexcept { return records_.end(); }

  std::vector<double> magnitudes() const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.magnitude);
    return out;
  }

  std::vector<double> timestamps() const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.timestamp);
    return out;
  }

  friend bool operator==(const EventSeries&, const EventSeries&) = default;

 private:
  std::vector<EventRecord> records_;
};

//------------------------------------------------------------------------
// Parsing
//------------------------------------------------------------------------

enum class InputFormat { csv, jsonl };

inline InputFormat parse_input_format(std::string_view s) {
  if (s == "csv") return InputFormat::csv;
  if (s == "jsonl") return InputFormat::jsonl;
  throw InputError("unknown input format '" + std::string(s) + "' (expected csv or jsonl)");
}

/// A rejected input row.
struct RowIssue {
  std::size_t line;
  std::string message;
};

struct ParsedEvents {
  EventSeries series;
  std::vector<RowIssue> malformed;
  std::size_t rows_read = 0;  // data rows, valid or not
};

inline constexpr double kMaxMalformedFraction = 0.10;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return trim(s);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return true;
}

inline std::optional<double> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0;
  if (!parse_fixed_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !parse_fixed_int(s, 5, 2, mo) ||
      s[7] != '-' || !parse_fixed_int(s, 8, 2, d))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  double secs = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * kSecondsPerDay;
  std::string_view rest = s.substr(10);
  if (rest.empty()) return secs;
  if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
  rest.remove_prefix(1);
  int hh = 0, mm = 0;
  if (!parse_fixed_int(rest, 0, 2, hh) || rest.size() < 5 || rest[2] != ':' || !parse_fixed_int(rest, 3, 2, mm))
    return std::nullopt;
  if (hh > 23 || mm > 59) return std::nullopt;
  rest.remove_prefix(5);
  double ss = 0;
  if (!rest.empty() && rest.front() == ':') {
    std::size_t n = 1;
    while (n < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[n])) || rest[n] == '.')) ++n;
    const auto v = parse_double(rest.substr(1, n - 1));
    if (!v || *v < 0 || *v >= 61) return std::nullopt;
    ss = *v;
    rest.remove_prefix(n);
  }
  secs += hh * 3600.0 + mm * 60.0 + ss;
  if (rest.empty() || rest == "Z" || rest == "z") return secs;
  if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
    int oh = 0, om = 0;
    if (!parse_fixed_int(rest, 1, 2, oh) || !parse_fixed_int(rest, 4, 2, om)) return std::nullopt;
    const double offset = oh * 3600.0 + om * 60.0;
    return rest.front() == '+' ? secs - offset : secs + offset;
  }
  return std::nullopt;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == ',' && !quoted) {
      fields.push_back(unquote(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  fields.push_back(unquote(line.substr(start)));
  return fields;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Returns an error message, or nullopt on success.
inline std::optional<std::string> check_magnitude(std::optional<double> m, double& out) {
  if (!m) return "unparseable magnitude";
  if (!std::isfinite(*m)) return "non-finite magnitude";
  if (*m < 0) return "negative magnitude";
  out = *m;
  return std::nullopt;
}

}  // namespace detail

/// Epoch seconds from either a number (epoch seconds) or an ISO-8601 UTC
/// date / date-time (`YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]][Z|+HH:MM]`).
inline std::optional<double> parse_timestamp(std::string_view s) {
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;
  if (s.size() >= 10 && s[4] == '-') return detail::parse_iso8601(s);
  auto v = detail::parse_double(s);
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

/// Parses timestamped events from CSV or JSON lines.
///
/// CSV: optional header naming `timestamp` and `shares` (or `magnitude`);
/// without a header the first two columns are used. JSONL: one object per
/// line with the same keys. Blank lines and `#` comment lines are ignored.
/// Bad rows are collected in `malformed`; if they exceed 10% of the data rows
/// the parse fails with a RowError for the first bad line.
inline ParsedEvents parse_events(std::istream& in, InputFormat format,
                                 double max_malformed_fraction = kMaxMalformedFraction) {
  std::vector<EventRecord> records;
  std::vector<RowIssue> malformed;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t ts_col = 0, mag_col = 1;
  bool header_checked = format != InputFormat::csv;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;

    if (!header_checked) {
      header_checked = true;
      const auto fields = detail::split_csv(view);
      std::optional<std::size_t> t, m;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = detail::lower(fields[i]);
        if (name == "timestamp") t = i;
        if (name == "shares" || name == "magnitude") m = i;
      }
      if (t || m) {
        if (!t || !m) throw InputError("CSV header must name both 'timestamp' and 'shares' columns");
        ts_col = *t;
        mag_col = *m;
        continue;
      }
    }

    ++rows;
    auto reject = [&](std::string msg) { malformed.push_back({line_no, std::move(msg)}); };

    if (format == InputFormat::csv) {
      const auto fields = detail::split_csv(view);
      if (fields.size() <= std::max(ts_col, mag_col)) {
        reject("expected at least " + std::to_string(std::max(ts_col, mag_col) + 1) + " fields");
        continue;
      }
      const auto ts = parse_timestamp(fields[ts_col]);
      if (!ts) {
        reject("unparseable timestamp '" + std::string(fields[ts_col]) + "'");
        continue;
      }
      double mag = 0;
      if (auto err = detail::check_magnitude(detail::parse_double(fields[mag_col]), mag)) {
        reject(*err + " '" + std::string(fields[mag_col]) + "'");
        continue;
      }
      records.push_back({*ts, mag});
    } else {
      nlohmann::json obj = nlohmann::json::parse(view, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) {
        reject("not a JSON object");
        continue;
      }
      std::optional<double> ts;
      if (auto it = obj.find("timestamp"); it != obj.end()) {
        if (it->is_number()) ts = it->get<double>();
        if (it->is_string()) ts = parse_timestamp(it->get<std::string>());
      }
      if (!ts || !std::isfinite(*ts)) {
        reject("missing or unparseable timestamp");
        continue;
      }
      auto it = obj.find("shares");
      if (it == obj.end()) it = obj.find("magnitude");
      std::optional<double> raw;
      if (it != obj.end()) {
        if (it->is_number()) raw = it->get<double>();
        if (it->is_string()) raw = detail::parse_double(it->get<std::string>());
      }
      double mag = 0;
      if (auto err = detail::check_magnitude(raw, mag)) {
        reject(*err);
        continue;
      }
      records.push_back({*ts, mag});
    }
  }

  if (rows == 0) throw EmptySeriesError("input contains no data rows");
  if (static_cast<double>(malformed.size()) > max_malformed_fraction * static_cast<double>(rows)) {
    std::ostringstream msg;
    msg << malformed.front().message << " (" << malformed.size() << " of " << rows
        << " rows malformed, limit " << max_malformed_fraction * 100 << "%)";
    throw RowError(malformed.front().line, msg.str());
  }
  if (records.empty()) throw EmptySeriesError("input contains no valid events");
  return {EventSeries(std::move(records)), std::move(malformed), rows};
}

inline ParsedEvents parse_events(std::string_view text, InputFormat format,
                                 double max_malformed_fraction = kMaxMalformedFraction) {
  std::istringstream in{std::string(text)};
  return parse_events(in, format, max_malformed_fraction);
}

/// CSV `timestamp,magnitude` with 17 significant digits; parse_events reads it back exactly.
inline void write_events_csv(std::ostream& os, const EventSeries& s) {
  os << "timestamp,magnitude\n";
  for (const auto& r : s) os << format_number(r.timestamp) << ',' << format_number(r.magnitude) << '\n';
}

//------------------------------------------------------------------------
// Weekly activity and rescaling
//------------------------------------------------------------------------

struct WeeklyActivity {
  std::size_t week_index;  // 1-based
  std::size_t count;

  friend bool operator==(const WeeklyActivity&, const WeeklyActivity&) = default;
};

/// 0-based index of the fixed 7-day window containing `timestamp`.
inline std::size_t week_offset(double origin, double timestamp) {
  return static_cast<std::size_t>(std::floor((timestamp - origin) / kSecondsPerWeek));
}

/// Posts per week. Week i covers [origin + (i-1) w, origin + i w) with w = 7 days;
/// empty interior weeks are emitted with count 0.
inline std::vector<WeeklyActivity> bucket_weekly(const EventSeries& s) {
  const std::size_t n_weeks = week_offset(s.origin(), s.last_timestamp()) + 1;
  std::vector<WeeklyActivity> weeks(n_weeks);
  for (std::size_t i = 0; i < n_weeks; ++i) weeks[i] = {i + 1, 0};
  for (const auto& r : s) ++weeks[week_offset(s.origin(), r.timestamp)].count;
  return weeks;
}

inline std::vector<std::pair<std::size_t, std::size_t>> cumulative_weekly(const std::vector<WeeklyActivity>& weeks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(weeks.size());
  std::size_t total = 0;
  for (const auto& w : weeks) {
    total += w.count;
    out.emplace_back(w.week_index, total);
  }
  return out;
}

enum class RescaleMode { max, mean, median };

inline RescaleMode parse_rescale_mode(std::string_view s) {
  if (s == "max") return RescaleMode::max;
  if (s == "mean") return RescaleMode::mean;
  if (s == "median") return RescaleMode::median;
  throw InputError("unknown rescale mode '" + std::string(s) + "' (expected max, mean or median)");
}

inline const char* to_string(RescaleMode m) {
  switch (m) {
    case RescaleMode::max: return "max";
    case RescaleMode::mean: return "mean";
    case RescaleMode::median: return "median";
  }
  return "?";
}

/// Per-week activity factors R_i = w_i / ref(w). factors[i] belongs to week i + 1.
struct RescalePlan {
  std::vector<double> factors;
  RescaleMode mode = RescaleMode::max;

  static RescalePlan identity(std::size_t n_weeks) { return {std::vector<double>(n_weeks, 1.0), RescaleMode::max}; }
};

inline RescalePlan rescale_factors(const std::vector<WeeklyActivity>& weeks, RescaleMode mode) {
  std::vector<double> w;
  w.reserve(weeks.size());
  for (const auto& a : weeks) w.push_back(static_cast<double>(a.count));
  if (std::none_of(w.begin(), w.end(), [](double c) { return c > 0; }))
    throw DegenerateInputError("all weeks are empty; rescale factors undefined");

  double ref = 0;
  switch (mode) {
    case RescaleMode::max:
      ref = *std::max_element(w.begin(), w.end());
      break;
    case RescaleMode::mean: {
      double sum = 0;
      for (double c : w) sum += c;
      ref = sum / static_cast<double>(w.size());
      break;
    }
    case RescaleMode::median: {
      std::vector<double> sorted = w;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      ref = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      if (ref == 0) throw DegenerateInputError("median weekly count is zero; use max or mean rescaling");
      break;
    }
  }

  RescalePlan plan{std::vector<double>(w.size()), mode};
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0) {
      // exact 1 for the reference week under max
      plan.factors[i] = w[i] == ref ? 1.0 : w[i] / ref;
      smallest = std::min(smallest, plan.factors[i]);
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] == 0) plan.factors[i] = smallest;
  return plan;
}

/// Divides each magnitude by its week's factor; timestamps and order unchanged.
inline EventSeries apply_rescale(const EventSeries& s, const RescalePlan& plan) {
  std::vector<EventRecord> out;
  out.reserve(s.size());
  for (const auto& r : s) {
    const std::size_t week = week_offset(s.origin(), r.timestamp);
    if (week >= plan.factors.size())
      throw CoverageError("rescale plan has no factor for week " + std::to_string(week + 1));
    const double f = plan.factors[week];
    if (!(f > 0)) throw InputError("rescale factor for week " + std::to_string(week + 1) + " is not positive");
    out.push_back({r.timestamp, r.magnitude / f});
  }
  return EventSeries(std::move(out));
}

/// Maximum magnitude of each nonempty block of `block_days` days, blocks aligned to the origin.
inline std::vector<double> block_maxima(const EventSeries& s, double block_days) {
  if (!(block_days > 0) || !std::isfinite(block_days)) throw InputError("block length must be > 0");
  const double width = block_days * kSecondsPerDay;
  std::vector<double> out;
  std::size_t current = 0;
  bool open = false;
  for (const auto& r : s) {
    const auto block = static_cast<std::size_t>(std::floor((r.timestamp - s.origin()) / width));
    if (!open || block != current) {
      out.push_back(r.magnitude);
      current = block;
      open = true;
    } else {
      out.back() = std::max(out.back(), r.magnitude);
    }
  }
  return out;
}

}  // namespace tailcast
