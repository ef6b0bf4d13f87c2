// ctrw: command-line front end.
//
//   ctrw extract   --input series.csv (--q Q | --grid lo:hi:n[log|lin])
//   ctrw eval      --alpha A --tau T [--grid ...] [--moments 0,1,2]
//   ctrw fit       rq|psi|superscaling|tau-linear --input FILE
//   ctrw simulate  --config sim.json [--seed S] [--workers W]
//   ctrw check     [--tol X] [--perturb NAME]
//
// Outputs go to $CTRW_OUT_DIR (default: working directory) as <prefix>_*.
// Exit codes: 0 ok, 1 check failure, 2 input error, 3 parameter error.

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctrw/ctrw.hpp"
#include "ctrw/io.hpp"

namespace fs = std::filesystem;
using namespace ctrw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInput = 2;
constexpr int kExitParams = 3;

/// Library exceptions raised while validating parameters rather than input.
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Grid {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  bool log = true;

  std::vector<double> points() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out[i] = log ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    if (n > 1) out.back() = hi;
    return out;
  }

  std::string str() const {
    return detail::format_double(lo) + ":" + detail::format_double(hi) + ":" + std::to_string(n) +
           (log ? "log" : "lin");
  }
};

Grid parse_grid(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw ParameterError("--grid must look like lo:hi:n(log|lin), got '" + spec + "'");
  }
  Grid g;
  std::string count = spec.substr(b + 1);
  if (count.size() > 3 && (count.ends_with("log") || count.ends_with("lin"))) {
    g.log = count.ends_with("log");
    count.resize(count.size() - 3);
  }
  const auto lo = detail::parse_double(spec.substr(0, a));
  const auto hi = detail::parse_double(spec.substr(a + 1, b - a - 1));
  const auto n = detail::parse_int(count);
  if (!lo || !hi || !n || *n < 1) throw ParameterError("--grid: cannot parse '" + spec + "'");
  g.lo = *lo;
  g.hi = *hi;
  g.n = static_cast<std::size_t>(*n);
  if (!(g.hi >= g.lo) || (g.n > 1 && !(g.hi > g.lo))) {
    throw ParameterError("--grid: need lo < hi");
  }
  if (g.log && !(g.lo > 0.0)) throw ParameterError("--grid: log grids need lo > 0");
  return g;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string(), 0, e.what());
  }
}

class Outputs {
 public:
  Outputs(std::string command, std::string prefix) : prefix_(std::move(prefix)) {
    manifest_.command = std::move(command);
  }

  RunManifest& manifest() { return manifest_; }

  fs::path path(const std::string& suffix) const {
    return output_dir() / (prefix_ + "_" + suffix);
  }

  void write(const std::string& suffix, const std::string& content) {
    const auto p = path(suffix);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    manifest_.outputs.push_back(p.filename().string());
  }

  void finish() {
    const auto p = path("manifest.json");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << manifest_.to_json().dump(2) << '\n';
  }

 private:
  std::string prefix_;
  RunManifest manifest_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string input;
  std::string mode = "loss";
  std::optional<double> q;
  std::string grid;
  std::string rule = "closed";
  std::size_t min_events = 10;
  bool log_returns = false;
  std::size_t detrend_window = 0;
  std::string prefix = "extract";
};

int run_extract(const ExtractArgs& a) {
  if (!a.q && a.grid.empty()) throw ParameterError("extract: give --q and/or --grid");
  Outputs out("extract", a.prefix);
  out.manifest().add_input(a.input);
  ReturnSeries series = read_return_csv(fs::path(a.input), {a.log_returns});
  if (a.detrend_window > 0) series = detrend(series, a.detrend_window).detrended;
  const Mode mode = mode_from_string(a.mode);
  ExtractOptions opts;
  opts.rule = a.rule == "open" ? ThresholdRule::open : ThresholdRule::closed;
  if (a.rule != "open" && a.rule != "closed") throw ParameterError("--rule must be open or closed");
  opts.min_events = a.min_events;

  json cfg = {{"input", a.input},       {"mode", a.mode},
              {"rule", a.rule},         {"min_events", a.min_events},
              {"log_returns", a.log_returns}, {"detrend_window", a.detrend_window}};
  if (a.q) {
    cfg["q"] = *a.q;
    out.write("sample.json", dump(to_json(extract_events(series, mode, *a.q, opts))));
  }
  if (!a.grid.empty()) {
    const Grid g = parse_grid(a.grid);
    cfg["grid"] = g.str();
    const auto q = g.points();
    std::ostringstream csv;
    write_rq_curve_csv(csv, rq_curve(series, mode, q, opts));
    out.write("rq_curve.csv", csv.str());
  }
  out.manifest().config = cfg;
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string params_file;
  std::optional<double> alpha;
  std::optional<double> tau;
  std::optional<std::string> direction;
  std::optional<double> r_q;
  std::optional<double> clustering_alpha;
  std::optional<double> clustering_tau;
  std::optional<double> weight;
  std::string grid = "1e-3:1e3:61log";
  std::string moments = "0,1,2";
  std::string convention = "with_rq";
  bool printed_form = false;
  std::string prefix = "eval";
};

std::string cell(const std::function<double()>& f) {
  try {
    return detail::format_double(f());
  } catch (const std::domain_error&) {
    return "nan";
  } catch (const std::overflow_error&) {
    return "inf";
  }
}

int run_eval(EvalArgs a) {
  Outputs out("eval", a.prefix);
  // Precedence: flags > params file > defaults.
  json file = json::object();
  if (!a.params_file.empty()) {
    out.manifest().add_input(a.params_file);
    file = read_json_file(a.params_file);
  }
  auto pick = [&](const std::optional<double>& flag, const char* key,
                  std::optional<double> fallback) -> std::optional<double> {
    if (flag) return flag;
    if (file.contains(key)) return file[key].get<double>();
    return fallback;
  };
  SuperstatParams sp;
  const auto alpha = pick(a.alpha, "alpha", std::nullopt);
  const auto tau = pick(a.tau, "tau_q", std::nullopt);
  if (!alpha || !tau) throw ParameterError("eval: alpha and tau_q are required");
  sp.alpha = *alpha;
  sp.tau_q = *tau;
  sp.direction = direction_from_string(
      a.direction.value_or(file.value("direction", std::string("expanding"))));
  sp.validate();
  const double r_q = pick(a.r_q, "r_q", 1.0).value();
  const auto c_alpha = pick(a.clustering_alpha, "clustering_alpha", std::nullopt);
  const auto c_tau = pick(a.clustering_tau, "clustering_tau_q", std::nullopt);
  const auto weight = pick(a.weight, "weight", std::nullopt);
  const ClusteringForm form = a.printed_form ? ClusteringForm::printed : ClusteringForm::superposition;
  std::optional<SuperstatParams> clu;
  if (sp.direction == Direction::clustering) {
    clu = sp;
  } else if (c_alpha) {
    clu = SuperstatParams{*c_alpha, c_tau.value_or(sp.tau_q), Direction::clustering};
    clu->validate();
  }
  if (weight && !(*weight >= 0.0 && *weight <= 1.0)) throw ParameterError("weight must lie in [0, 1]");
  const Grid g = parse_grid(a.grid);
  if (!(g.lo >= 0.0)) throw ParameterError("--grid: dt must be >= 0");
  const auto conv = a.convention == "conditional" ? MomentConvention::conditional
                                                  : MomentConvention::with_rq;
  if (a.convention != "conditional" && a.convention != "with_rq") {
    throw ParameterError("--convention must be with_rq or conditional");
  }
  std::vector<int> orders;
  {
    std::stringstream ss(a.moments);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto m = detail::parse_int(detail::trim(tok));
      if (!m || *m < 0) throw ParameterError("--moments: bad order '" + tok + "'");
      orders.push_back(static_cast<int>(*m));
    }
  }

  const bool expanding = sp.direction == Direction::expanding;
  const bool mixture = expanding && clu && weight;
  std::ostringstream csv;
  csv << "dt";
  if (expanding) csv << ",psi,psi_tail,psi_initial";
  if (clu) csv << ",psi_clustering";
  if (mixture) csv << ",psi_mixture";
  csv << '\n';
  for (double dt : g.points()) {
    csv << detail::format_double(dt);
    if (expanding) {
      csv << ',' << cell([&] { return psi(sp, dt); }) << ',' << cell([&] { return psi_tail(sp, dt); })
          << ',' << cell([&] { return psi_initial(sp, dt); });
    }
    if (clu) csv << ',' << cell([&] { return psi_clustering(*clu, dt, form); });
    if (mixture) csv << ',' << cell([&] { return psi_mixture(sp, *clu, *weight, dt, form); });
    csv << '\n';
  }
  out.write("psi.csv", csv.str());

  std::ostringstream mcsv;
  mcsv << "m,value,finite\n";
  for (int m : orders) {
    const auto v = moment(sp, r_q, m, conv);
    mcsv << m << ',' << (v ? detail::format_double(*v) : std::string("inf")) << ','
         << (v ? "true" : "false") << '\n';
  }
  out.write("moments.csv", mcsv.str());

  json cfg = {{"alpha", sp.alpha},   {"tau_q", sp.tau_q},       {"direction", to_string(sp.direction)},
              {"r_q", r_q},          {"grid", g.str()},         {"moments", a.moments},
              {"convention", a.convention}, {"printed_clustering_form", a.printed_form}};
  if (clu && expanding) cfg["clustering"] = to_json(*clu);
  if (weight) cfg["weight"] = *weight;
  out.manifest().config = cfg;
  out.finish();
  return kExitOk;
}



// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string prefix = "fit";
  // rq
  bool fix_calib = false;
  double calib = 1.0;
  // psi
  std::string direction = "expanding";
  std::size_t bins = 40;
  std::string binning = "log";
  double alpha_cap = 1000.0;
  bool printed_form = false;
  // superscaling
  std::string objective = "inverse_alpha";
};

std::string residual_csv(const std::vector<double>& x, const std::vector<double>& observed,
                         const std::vector<double>& model) {
  std::ostringstream csv;
  csv << "x,observed,model,residual\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    csv << detail::format_double(x[i]) << ',' << detail::format_double(observed[i]) << ','
        << detail::format_double(model[i]) << ',' << detail::format_double(observed[i] - model[i])
        << '\n';
  }
  return csv.str();
}

int run_fit_rq(const FitArgs& a, Outputs& out, json& cfg) {
  const auto t = read_numeric_csv(fs::path(a.input), 2, true);
  const std::size_t qc = t.column("q", 0);
  const std::size_t rc = t.column("r_q", 1);
  const bool has_rel = std::find(t.header.begin(), t.header.end(), "reliable") != t.header.end();
  const bool has_w = std::find(t.header.begin(), t.header.end(), "weight") != t.header.end();
  std::vector<ThresholdPoint> pts;
  std::vector<double> w;
  for (const auto& row : t.rows) {
    if (has_rel && row[t.column("reliable", 3)] == 0.0) continue;
    if (std::isnan(row[rc]) || std::isnan(row[qc])) continue;
    pts.push_back({row[qc], row[rc]});
    if (has_w) w.push_back(row[t.column("weight", 2)]);
  }
  RqFitOptions opts;
  opts.fit_calib = !a.fix_calib;
  opts.calib = a.calib;
  cfg["fit_calib"] = opts.fit_calib;
  cfg["calib"] = opts.calib;
  const auto rep = fit_rq_curve(pts, w, opts);
  out.write("fit.json", dump(to_json(rep)));
  std::vector<double> x;
  std::vector<double> obs;
  std::vector<double> model;
  for (const auto& p : pts) {
    x.push_back(p.q);
    obs.push_back(std::log(p.r_q));
    model.push_back(log_rq_of_q(rep.params, p.q));
  }
  out.write("residuals.csv", residual_csv(x, obs, model));
  return kExitOk;
}

int run_fit_psi(const FitArgs& a, Outputs& out, json& cfg) {
  Histogram h;
  if (fs::path(a.input).extension() == ".json") {
    const auto sample = sample_from_json(read_json_file(a.input));
    if (sample.deltas.empty()) throw InputError(a.input, 0, "sample has no interevent times");
    h = histogram(sample, binning_from_string(a.binning), a.bins);
    cfg["bins"] = a.bins;
    cfg["binning"] = a.binning;
  } else {
    h = histogram_from_table(read_numeric_csv(fs::path(a.input), 3), a.input);
  }
  PsiFitOptions opts;
  opts.alpha_cap = a.alpha_cap;
  opts.form = a.printed_form ? ClusteringForm::printed : ClusteringForm::superposition;
  const Direction dir = direction_from_string(a.direction);
  cfg["direction"] = a.direction;
  cfg["alpha_cap"] = a.alpha_cap;
  const auto rep = fit_psi(h, dir, opts);
  out.write("fit.json", dump(to_json(rep)));
  std::vector<double> x;
  std::vector<double> obs;
  std::vector<double> model;
  for (std::size_t i = 0; i < h.n_bins(); ++i) {
    x.push_back(h.centre(i));
    obs.push_back(h.densities[i]);
    model.push_back(dir == Direction::expanding ? psi(rep.params, x.back())
                                                : psi_clustering(rep.params, x.back()));
  }
  out.write("residuals.csv", residual_csv(x, obs, model));
  return kExitOk;
}

int run_fit_superscaling(const FitArgs& a, Outputs& out, json& cfg) {
  const auto t = read_numeric_csv(fs::path(a.input), 2);
  const std::size_t rc = t.column("r_q", 0);
  const std::size_t ac = t.column("alpha", 1);
  std::vector<ScalingPoint> pts;
  for (const auto& row : t.rows) pts.push_back({row[rc], row[ac]});
  SuperscalingOptions opts;
  if (a.objective == "log_log") {
    opts.objective = SuperscalingObjective::log_log;
  } else if (a.objective != "inverse_alpha") {
    throw ParameterError("--objective must be inverse_alpha or log_log");
  }
  cfg["objective"] = a.objective;
  const auto rep = fit_superscaling(pts, opts);
  out.write("fit.json", dump(to_json(rep)));
  std::vector<double> x;
  std::vector<double> obs;
  std::vector<double> model;
  for (const auto& p : pts) {
    if (p.alpha >= opts.sentinel_alpha) continue;
    x.push_back(p.r_q);
    obs.push_back(1.0 / p.alpha);
    model.push_back(1.0 / alpha_from_scaling(rep.params, p.r_q));
  }
  out.write("residuals.csv", residual_csv(x, obs, model));
  return kExitOk;
}

int run_fit_tau(const FitArgs& a, Outputs& out, json&) {
  const auto t = read_numeric_csv(fs::path(a.input), 2);
  const std::size_t rc = t.column("r_q", 0);
  const std::size_t tc = t.column("tau_q", 1);
  std::vector<TauPoint> pts;
  for (const auto& row : t.rows) pts.push_back({row[rc], row[tc]});
  const auto rep = fit_piecewise_tau(pts);
  out.write("fit.json", dump(to_json(rep)));
  std::vector<double> x;
  std::vector<double> obs;
  std::vector<double> model;
  for (const auto& p : pts) {
    x.push_back(p.r_q);
    obs.push_back(p.tau_q);
    model.push_back(rep.params(p.r_q));
  }
  out.write("residuals.csv", residual_csv(x, obs, model));
  return kExitOk;
}

int run_fit(const std::string& which, const FitArgs& a) {
  Outputs out("fit " + which, a.prefix);
  out.manifest().add_input(a.input);
  json cfg = {{"fitter", which}, {"input", a.input}};
  int code = kExitOk;
  try {
    if (which == "rq") code = run_fit_rq(a, out, cfg);
    if (which == "psi") code = run_fit_psi(a, out, cfg);
    if (which == "superscaling") code = run_fit_superscaling(a, out, cfg);
    if (which == "tau-linear") code = run_fit_tau(a, out, cfg);
  } catch (const std::invalid_argument& e) {
    // Too few or unusable points is a property of the input data.
    throw InputError(a.input, 0, e.what());
  } catch (const std::domain_error& e) {
    throw InputError(a.input, 0, e.what());
  }
  out.manifest().config = cfg;
  out.finish();
  return code;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::size_t> workers;
  std::size_t bins = 40;
  std::string binning = "log";
  std::size_t series_length = 0;
  double sign_prob = 0.5;
  std::string prefix = "simulate";
};

int run_simulate(const SimulateArgs& a) {
  Outputs out("simulate", a.prefix);
  out.manifest().add_input(a.config);
  const json raw = read_json_file(a.config);
  SimConfig c;
  try {
    c = sim_config_from_json(raw);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("invalid simulation config: ") + e.what());
  }
  if (a.seed) c.seed = *a.seed;
  if (a.n) c.n_samples = *a.n;
  if (a.workers) c.n_workers = *a.workers;
  c.validate();
  const Binning binning = binning_from_string(a.binning);
  if (a.bins < 1) throw ParameterError("--bins must be >= 1");

  const auto res = sample_interevents(c);
  out.write("sample.json", dump(to_json(res.sample)));
  if (!res.sample.deltas.empty()) {
    std::ostringstream hist;
    write_histogram_csv(hist, histogram(res.sample, binning, a.bins));
    out.write("hist.csv", hist.str());
  }
  json cfg = to_json(c);
  // The worker count does not affect outputs; keep it out of the manifest
  // config so manifests from different machines compare equal.
  cfg.erase("n_workers");
  cfg["bins"] = a.bins;
  cfg["binning"] = a.binning;
  if (a.series_length > 0) {
    if (!(a.sign_prob >= 0.0 && a.sign_prob <= 1.0)) throw ParameterError("--sign-prob must lie in [0, 1]");
    const auto series = generate_series(c.weibull, a.series_length, a.sign_prob, c.seed, c.n_workers);
    std::ostringstream csv;
    write_series_csv(csv, series);
    out.write("series.csv", csv.str());
    cfg["series_length"] = a.series_length;
    cfg["sign_prob"] = a.sign_prob;
  }
  out.manifest().config = cfg;
  out.manifest().seed = c.seed;
  out.manifest().results = {{"n_aborted", res.n_aborted},
                            {"n_samples", res.sample.deltas.size()},
                            {"closed_form", to_json(c.superstat())}};
  if (res.n_aborted > 0) {
    std::cerr << "simulate: " << res.n_aborted << " draw(s) aborted (relaxation time overflow)\n";
  }
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::optional<double> tol;
  std::string perturb;
  std::size_t n_random = 1000;
  std::uint64_t seed = CheckOptions{}.seed;
  bool no_quadrature = false;
  std::string prefix = "check";
};

int run_check(const CheckArgs& a) {
  Outputs out("check", a.prefix);
  CheckOptions opts;
  if (a.tol) {
    if (!(*a.tol > 0.0)) throw ParameterError("--tol must be > 0");
    opts.identity_tol = *a.tol;
  }
  opts.perturb = a.perturb;
  opts.n_random = a.n_random;
  opts.seed = a.seed;
  opts.include_quadrature = !a.no_quadrature;
  if (!a.perturb.empty()) {
    const auto& ids = identity_check_names();
    const bool known = std::find(ids.begin(), ids.end(), a.perturb) != ids.end() ||
                       a.perturb == "normalization" || a.perturb == "moments" ||
                       a.perturb == "superposition";
    if (!known) throw ParameterError("--perturb: unknown check '" + a.perturb + "'");
  }
  const auto report = run_checks(opts);
  const json j = to_json(report);
  out.write("check.json", dump(j));
  std::cout << j.dump(2) << '\n';
  out.manifest().config = {{"identity_tol", opts.identity_tol},
                           {"normalization_tol", opts.normalization_tol},
                           {"superposition_tol", opts.superposition_tol},
                           {"moment_tol", opts.moment_tol},
                           {"n_random", opts.n_random},
                           {"perturb", opts.perturb},
                           {"include_quadrature", opts.include_quadrature}};
  out.manifest().seed = opts.seed;
  out.finish();
  return report.all_passed() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interevent-time superstatistics: extraction, evaluation, fitting, simulation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract threshold events from a t,r CSV");
  extract->add_option("--input,-i", ex.input, "Return series CSV (t,r)")->required();
  extract->add_option("--mode", ex.mode, "loss or profit")->check(CLI::IsMember({"loss", "profit"}));
  extract->add_option("--q", ex.q, "Single threshold; writes <prefix>_sample.json");
  extract->add_option("--grid", ex.grid, "Threshold grid lo:hi:n(log|lin); writes <prefix>_rq_curve.csv");
  extract->add_option("--rule", ex.rule, "closed (|r| >= Q) or open (|r| > Q)");
  extract->add_option("--min-events", ex.min_events, "Fewer interevent times than this is unreliable");
  extract->add_flag("--log-returns", ex.log_returns, "Convert simple returns with log1p");
  extract->add_option("--detrend", ex.detrend_window, "Subtract a centered moving average of this window");
  extract->add_option("--prefix", ex.prefix, "Output file prefix");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Tabulate interevent densities and moments");
  eval->add_option("--params", ev.params_file, "JSON with alpha, tau_q, direction, r_q, ...");
  eval->add_option("--alpha", ev.alpha, "Shape exponent alpha_Q");
  eval->add_option("--tau", ev.tau, "Relaxation time tau_Q(Q)");
  eval->add_option("--direction", ev.direction, "expanding or clustering");
  eval->add_option("--r-q", ev.r_q, "Mean interevent time, used by the with_rq moment convention");
  eval->add_option("--clustering-alpha", ev.clustering_alpha, "Adds a psi_clustering column");
  eval->add_option("--clustering-tau", ev.clustering_tau, "tau for the clustering column");
  eval->add_option("--weight", ev.weight, "Expanding weight; adds a psi_mixture column");
  eval->add_option("--grid", ev.grid, "dt grid lo:hi:n(log|lin)")->capture_default_str();
  eval->add_option("--moments", ev.moments, "Comma-separated moment orders")->capture_default_str();
  eval->add_option("--convention", ev.convention, "with_rq or conditional")->capture_default_str();
  eval->add_flag("--paper-eq19-compat", ev.printed_form,
                 "Use the printed complementary formula for psi_clustering");
  eval->add_option("--prefix", ev.prefix, "Output file prefix");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit model parameters");
  fit->require_subcommand(1);
  std::string fitter;
  for (const char* name : {"rq", "psi", "superscaling", "tau-linear"}) {
    auto* sub = fit->add_subcommand(name);
    sub->add_option("--input,-i", fa.input, "Input data file")->required();
    sub->add_option("--prefix", fa.prefix, "Output file prefix");
    sub->final_callback([&fitter, name] { fitter = name; });
    const std::string n = name;
    if (n == "rq") {
      sub->description("Fit eta, eps_bar, calib to a q,r_q CSV");
      sub->add_flag("--fix-calib", fa.fix_calib, "Hold calib at --calib");
      sub->add_option("--calib", fa.calib, "Calibration constant (seed or fixed value)");
    } else if (n == "psi") {
      sub->description("Fit alpha, tau_q to a histogram CSV or sample JSON");
      sub->add_option("--direction", fa.direction, "expanding or clustering");
      sub->add_option("--bins", fa.bins, "Bins when histogramming a sample JSON");
      sub->add_option("--binning", fa.binning, "log or lin");
      sub->add_option("--alpha-cap", fa.alpha_cap, "Reported alpha in the exponential regime");
      sub->add_flag("--paper-eq19-compat", fa.printed_form, "Printed complementary formula");
    } else if (n == "superscaling") {
      sub->description("Fit B, zeta to an r_q,alpha CSV");
      sub->add_option("--objective", fa.objective, "inverse_alpha or log_log");
    } else {
      sub->description("Fit two lines to an r_q,tau_q CSV");
    }
  }

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo interevent sample from a SimConfig JSON");
  simulate->add_option("--config,-c", sa.config, "SimConfig JSON")->required();
  simulate->add_option("--seed", sa.seed, "Overrides the config seed");
  simulate->add_option("--n", sa.n, "Overrides n_samples");
  simulate->add_option("--workers", sa.workers, "Overrides n_workers (does not change output)");
  simulate->add_option("--bins", sa.bins, "Histogram bins");
  simulate->add_option("--binning", sa.binning, "log or lin");
  simulate->add_option("--series-length", sa.series_length, "Also write a synthetic t,r series");
  simulate->add_option("--sign-prob", sa.sign_prob, "Probability of a negative return in the series");
  simulate->add_option("--prefix", sa.prefix, "Output file prefix");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Run the identity and consistency suite");
  check->add_option("--tol", ca.tol, "Tolerance for the algebraic identities (default 1e-10)");
  check->add_option("--perturb", ca.perturb, "Deliberately break the named check (test hook)");
  check->add_option("--n-random", ca.n_random, "Random parameter sets per identity");
  check->add_option("--seed", ca.seed, "Seed for the random parameter sets");
  check->add_flag("--no-quadrature", ca.no_quadrature, "Skip normalization, moments, superposition");
  check->add_option("--prefix", ca.prefix, "Output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*eval) return run_eval(ev);
    if (*fit) return run_fit(fitter, fa);
    if (*simulate) return run_simulate(sa);
    if (*check) return run_check(ca);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitParams;
  } catch (const json::exception& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitParams;
  } catch (const std::logic_error& e) {
    // domain_error / invalid_argument from parameter validation
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitParams;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParams;
  }
  return kExitOk;
}
