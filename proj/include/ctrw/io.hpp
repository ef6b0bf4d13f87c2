#ifndef CTRW_IO_HPP
#define CTRW_IO_HPP

// File formats: return-series and numeric CSV input with line-numbered
// diagnostics, JSON encodings of the library's records, CSV writers for
// histograms and R_Q curves, and the run manifest written next to outputs.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrw/checks.hpp"
#include "ctrw/estimation.hpp"
#include "ctrw/events.hpp"
#include "ctrw/mc_sim.hpp"
#include "ctrw/superstat.hpp"

namespace ctrw {

inline constexpr std::string_view kVersion = "0.1.0";

using json = nlohmann::json;

/// Malformed input; `line` is 1-based, 0 when not tied to a line.
class InputError : public std::runtime_error {
 public:
  InputError(std::string source, std::size_t line, const std::string& what)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                           what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline bool is_blank_or_comment(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV input

struct ReadOptions {
  /// Convert simple returns to log returns after parsing.
  bool log_returns = false;
};

/// Two columns `t,r`: integer tick and return. An optional header line is
/// skipped; blank lines and `#` comments are ignored.
inline ReturnSeries read_return_csv(std::istream& in, const std::string& source = "<input>",
                                    const ReadOptions& opts = {}) {
  ReturnSeries s;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    const auto fields = detail::split_csv(line);
    if (header_allowed) {
      header_allowed = false;
      if (fields.size() == 2 && !detail::parse_double(fields[0]) && !detail::parse_double(fields[1])) {
        continue;
      }
    }
    if (fields.size() != 2) {
      throw InputError(source, line_no,
                       "expected 2 columns (t,r), got " + std::to_string(fields.size()));
    }
    const auto t = detail::parse_int(fields[0]);
    if (!t) throw InputError(source, line_no, "timestamp '" + std::string(fields[0]) + "' is not an integer");
    const auto r = detail::parse_double(fields[1]);
    if (!r) throw InputError(source, line_no, "return '" + std::string(fields[1]) + "' is not a number");
    if (!std::isfinite(*r)) throw InputError(source, line_no, "return is not finite");
    if (!s.timestamps.empty()) {
      if (*t == s.timestamps.back()) {
        throw InputError(source, line_no, "duplicate timestamp " + std::to_string(*t));
      }
      if (*t < s.timestamps.back()) {
        throw InputError(source, line_no, "timestamp " + std::to_string(*t) + " is out of order");
      }
    }
    if (opts.log_returns && !(*r > -1.0)) {
      throw InputError(source, line_no, "return <= -1 has no log return");
    }
    s.timestamps.push_back(*t);
    s.returns.push_back(opts.log_returns ? std::log1p(*r) : *r);
  }
  if (s.returns.empty()) throw InputError(source, 0, "no data rows");
  return s;
}

inline ReturnSeries read_return_csv(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open file");
  return read_return_csv(in, path.string(), opts);
}

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column, or `fallback` when there is no header.
  std::size_t column(const std::string& name, std::size_t fallback) const {
    if (header.empty()) return fallback;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw InputError("<table>", 0, "missing column '" + name + "'");
  }
};

/// Rectangular numeric CSV with an optional header row. Cells must be finite
/// numbers or `true`/`false` (read as 1/0); `nan` is accepted only when
/// `allow_nan` is set.
inline NumericTable read_numeric_csv(std::istream& in, const std::string& source = "<input>",
                                     std::size_t min_columns = 1, bool allow_nan = false) {
  NumericTable t;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    const auto fields = detail::split_csv(line);
    if (first) {
      first = false;
      if (!detail::parse_double(fields[0])) {
        for (auto f : fields) t.header.emplace_back(f);
        width = fields.size();
        continue;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw InputError(source, line_no,
                       "expected " + std::to_string(width) + " columns, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto v = detail::parse_double(fields[i]);
      if (fields[i] == "true") v = 1.0;
      if (fields[i] == "false") v = 0.0;
      if (!v) {
        throw InputError(source, line_no,
                         "column " + std::to_string(i + 1) + ": '" + std::string(fields[i]) + "' is not a number");
      }
      if (!std::isfinite(*v) && !(allow_nan && std::isnan(*v))) {
        throw InputError(source, line_no, "column " + std::to_string(i + 1) + " is not finite");
      }
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw InputError(source, 0, "no data rows");
  if (width < min_columns) {
    throw InputError(source, 0, "need at least " + std::to_string(min_columns) + " columns");
  }
  return t;
}

inline NumericTable read_numeric_csv(const std::filesystem::path& path, std::size_t min_columns = 1,
                                     bool allow_nan = false) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open file");
  return read_numeric_csv(in, path.string(), min_columns, allow_nan);
}

// ---------------------------------------------------------------------------
// JSON encodings

inline json to_json(const InterEventSample& s) {
  json j;
  j["mode"] = to_string(s.mode);
  j["q"] = s.q;
  j["event_times"] = s.event_times;
  j["deltas"] = s.deltas;
  j["r_q_empirical"] = s.r_q_empirical ? json(*s.r_q_empirical) : json(nullptr);
  j["n_events"] = s.n_events;
  j["reliable"] = s.reliable;
  return j;
}

inline InterEventSample sample_from_json(const json& j) {
  InterEventSample s;
  s.mode = mode_from_string(j.at("mode").get<std::string>());
  s.q = j.at("q").get<double>();
  if (j.contains("event_times")) s.event_times = j["event_times"].get<std::vector<std::int64_t>>();
  s.deltas = j.at("deltas").get<std::vector<double>>();
  if (j.contains("r_q_empirical") && !j["r_q_empirical"].is_null()) {
    s.r_q_empirical = j["r_q_empirical"].get<double>();
  }
  s.n_events = j.value("n_events", s.event_times.size());
  s.reliable = j.value("reliable", false);
  return s;
}

inline json to_json(const WeibullParams& p) {
  return {{"eta", p.eta}, {"eps_bar", p.eps_bar}, {"calib", p.calib}};
}

inline WeibullParams weibull_from_json(const json& j) {
  WeibullParams p;
  p.eta = j.at("eta").get<double>();
  p.eps_bar = j.at("eps_bar").get<double>();
  p.calib = j.value("calib", 1.0);
  return p;
}

inline json to_json(const RelaxationSpec& r) {
  return {{"tau0", r.tau0}, {"b_q", r.b_q}, {"eta", r.eta}, {"direction", to_string(r.direction)}};
}

/// `eta` defaults to `default_eta` (the Weibull exponent).
inline RelaxationSpec relaxation_from_json(const json& j, double default_eta) {
  RelaxationSpec r;
  r.tau0 = j.at("tau0").get<double>();
  r.b_q = j.at("b_q").get<double>();
  r.eta = j.value("eta", default_eta);
  r.direction = direction_from_string(j.value("direction", std::string("expanding")));
  return r;
}

inline json to_json(const SimConfig& c) {
  return {{"weibull", to_json(c.weibull)}, {"relaxation", to_json(c.relaxation)},
          {"q", c.q},                      {"n_samples", c.n_samples},
          {"seed", c.seed},                {"n_workers", c.n_workers}};
}

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.weibull = weibull_from_json(j.at("weibull"));
  c.relaxation = relaxation_from_json(j.at("relaxation"), c.weibull.eta);
  c.q = j.at("q").get<double>();
  c.n_samples = j.at("n_samples").get<std::size_t>();
  c.seed = j.value("seed", std::uint64_t{0});
  c.n_workers = j.value("n_workers", std::size_t{1});
  return c;
}

inline json to_json(const SuperstatParams& sp) {
  return {{"alpha", sp.alpha}, {"tau_q", sp.tau_q}, {"direction", to_string(sp.direction)}};
}

inline json params_json(const WeibullParams& p) { return to_json(p); }
inline json params_json(const SuperstatParams& p) { return to_json(p); }
inline json params_json(const ScalingLaw& p) { return {{"b", p.b}, {"zeta", p.zeta}}; }
inline json params_json(const PiecewiseLinear& p) {
  return {{"a_l", p.a_l},
          {"b_l", p.b_l},
          {"a_r", p.a_r},
          {"b_r", p.b_r},
          {"breakpoint", p.breakpoint},
          {"tau0_at_zero", p.tau_at_zero_threshold()}};
}

template <class P>
json to_json(const FitReport<P>& r) {
  json stderr_obj = json::object();
  for (std::size_t i = 0; i < r.names.size() && i < r.stderrs.size(); ++i) {
    stderr_obj[r.names[i]] = r.stderrs[i];
  }
  json j;
  j["params"] = params_json(r.params);
  j["stderr"] = stderr_obj;
  j["objective"] = r.objective;
  j["n_points"] = r.n_points;
  j["converged"] = r.converged;
  j["notes"] = r.notes;
  j["flags"] = {{"under_determined", r.under_determined},
                {"degenerate", r.degenerate},
                {"alpha_clamped", r.alpha_clamped}};
  j["covariance"] = r.covariance;
  return j;
}

inline json to_json(const CheckReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"max_error", c.max_error},
                      {"tolerance", c.tolerance},
                      {"n_cases", c.n_cases},
                      {"detail", c.detail}});
  }
  return {{"passed", r.all_passed()}, {"checks", checks}};
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_lo,bin_hi,count,density\n";
  for (std::size_t i = 0; i < h.n_bins(); ++i) {
    out << detail::format_double(h.edges[i]) << ',' << detail::format_double(h.edges[i + 1]) << ','
        << h.counts[i] << ',' << detail::format_double(h.densities[i]) << '\n';
  }
}

/// Reads the format written by write_histogram_csv.
inline Histogram histogram_from_table(const NumericTable& t, const std::string& source = "<histogram>") {
  const std::size_t lo = t.column("bin_lo", 0);
  const std::size_t hi = t.column("bin_hi", 1);
  const std::size_t count = t.column("count", 2);
  Histogram h;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() < 3) throw InputError(source, 0, "histogram rows need bin_lo,bin_hi,count");
    if (i == 0) {
      h.edges.push_back(row[lo]);
    } else if (row[lo] != h.edges.back()) {
      throw InputError(source, i + 1, "bins are not contiguous");
    }
    if (!(row[hi] > row[lo])) throw InputError(source, i + 1, "bin_hi must exceed bin_lo");
    if (!(row[count] >= 0.0) || row[count] != std::floor(row[count])) {
      throw InputError(source, i + 1, "count must be a non-negative integer");
    }
    h.edges.push_back(row[hi]);
    h.counts.push_back(static_cast<std::uint64_t>(row[count]));
    total += h.counts.back();
  }
  if (total == 0) throw InputError(source, 0, "histogram is empty");
  for (std::size_t i = 0; i < h.n_bins(); ++i) {
    h.densities.push_back(static_cast<double>(h.counts[i]) / (static_cast<double>(total) * h.width(i)));
  }
  return h;
}

inline void write_rq_curve_csv(std::ostream& out, const std::vector<RqCurvePoint>& curve) {
  out << "q,r_q,n_events,reliable\n";
  for (const auto& p : curve) {
    out << detail::format_double(p.q) << ',' << detail::format_double(p.r_q) << ',' << p.n_events
        << ',' << (p.reliable ? "true" : "false") << '\n';
  }
}

inline void write_series_csv(std::ostream& out, const ReturnSeries& s) {
  out << "t,r\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.timestamps[i] << ',' << detail::format_double(s.returns[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Run manifest

/// FNV-1a 64-bit digest, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string(), 0, "cannot open file");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

struct RunManifest {
  std::string command;
  json config = json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::optional<std::uint64_t> seed;
  std::string version{kVersion};
  std::vector<std::string> outputs;
  /// Run-specific facts that are not configuration (e.g. dropped draws).
  json results = json::object();

  void add_input(const std::filesystem::path& p) { inputs.emplace_back(p.string(), file_digest(p)); }

  json to_json() const {
    json in = json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"fnv1a64", digest}});
    return {{"command", command},
            {"config", config},
            {"inputs", in},
            {"seed", seed ? json(*seed) : json(nullptr)},
            {"version", version},
            {"outputs", outputs},
            {"results", results}};
  }
};

/// Output directory: CTRW_OUT_DIR when set, else the working directory.
inline std::filesystem::path output_dir() {
  if (const char* env = std::getenv("CTRW_OUT_DIR"); env && *env) return env;
  return std::filesystem::current_path();
}

}  // namespace ctrw

#endif  // CTRW_IO_HPP
