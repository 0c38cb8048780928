// SPDX-License-Identifier: Apache-2.0
#include "rdsw/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "rdsw/acceptance.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/io.hpp"
#include "rdsw/limit_laws.hpp"
#include "rdsw/lyapunov.hpp"
#include "rdsw/measures.hpp"
#include "rdsw/operator_analysis.hpp"
#include "rdsw/synchronization.hpp"

namespace rdsw::cli {

using nlohmann::json;

namespace {

std::string short_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return buf;
}

// ---------------------------------------------------------------------------
// Strict reader over one JSON object.

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where(""), "expected an object");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(where(key), "missing required field");
    return obj_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) throw ConfigError(where(key), "missing required field");
      return *def;
    }
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(where(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key), "expected a finite number");
    return d;
  }

  std::uint64_t unsigned_int(const std::string& key, std::optional<std::uint64_t> def = std::nullopt,
                             std::uint64_t min = 0) {
    if (!has(key)) {
      if (!def) throw ConfigError(where(key), "missing required field");
      return *def;
    }
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(where(key), "expected a nonnegative integer");
    }
    const auto u = v.get<std::uint64_t>();
    if (u < min) throw ConfigError(where(key), "must be at least " + std::to_string(min));
    return u;
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (!def) throw ConfigError(where(key), "missing required field");
      return *def;
    }
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    return number_list(obj_.at(key), where(key));
  }

  std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(where(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1) {
        throw ConfigError(where(key) + "[" + std::to_string(i) + "]", "expected a positive integer");
      }
      out.push_back(v[i].get<std::size_t>());
    }
    return out;
  }

  /// Rejects any key that no accessor asked about.
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) {
        std::string known;
        for (const auto& k : seen_) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError(where(key), "unknown key (expected one of: " + known + ")");
      }
    }
  }

  static std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        throw ConfigError(where + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Square matrix from nested rows or a flat row-major list of d * d entries.
Matrix parse_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a matrix");
  std::vector<double> flat;
  std::size_t d = 0;
  if (v[0].is_array()) {
    d = v.size();
    for (std::size_t r = 0; r < d; ++r) {
      const auto row = Reader::number_list(v[r], where + "[" + std::to_string(r) + "]");
      if (row.size() != d) {
        throw ConfigError(where + "[" + std::to_string(r) + "]",
                          "matrix rows must have " + std::to_string(d) + " entries");
      }
      flat.insert(flat.end(), row.begin(), row.end());
    }
  } else {
    flat = Reader::number_list(v, where);
    d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (d * d != flat.size()) {
      throw ConfigError(where, "a flat matrix needs a square number of entries");
    }
  }
  return Matrix(d, d, std::move(flat));
}

/// Library validation inside config parsing reports against the field path.
template <typename F>
auto guarded(const std::string& where, F&& build) {
  try {
    return build();
  } catch (const Error& e) {
    throw ConfigError(where, e.what());
  }
}

MapSpec parse_map(const json& v, const std::string& where) {
  Reader r(v, where);
  const std::string type = r.string("type");
  MapSpec m = guarded(where, [&]() -> MapSpec {
    if (type == "affine") return MapSpec::affine(r.number("a"), r.number("b"));
    if (type == "rotation") return MapSpec::rotation(r.number("c"));
    if (type == "moebius") return MapSpec::moebius(parse_matrix(r.at("matrix"), r.where("matrix")));
    if (type == "moebius_chart") {
      return MapSpec::moebius_chart(parse_matrix(r.at("matrix"), r.where("matrix")));
    }
    if (type == "projective") {
      return MapSpec::projective(parse_matrix(r.at("matrix"), r.where("matrix")));
    }
    if (type == "perturbed_rotation") {
      const double c = r.number("c", 0.0);
      const double amp = r.number("amp");
      const auto harmonic = r.unsigned_int("harmonic", 1, 1);
      return MapSpec::perturbed_rotation(c, amp, static_cast<int>(harmonic), r.number("shift", 0.0));
    }
    if (type == "tabulated") {
      KnotTable t;
      t.x = r.numbers("x", {});
      t.y = r.numbers("y", {});
      t.slopes = r.numbers("slopes", {});
      return MapSpec::tabulated(std::move(t));
    }
    throw ConfigError(r.where("type"), "unknown map type '" + type +
                                           "' (expected affine, rotation, moebius, moebius_chart, "
                                           "projective, perturbed_rotation, tabulated)");
  });
  r.finish();
  return m;
}

SystemSpec parse_system(const json& v) {
  if (v.is_string()) {
    const auto id = v.get<std::string>();
    if (!gallery::has_system(id)) {
      throw ConfigError("system", "unknown gallery system '" + id + "'");
    }
    return gallery::system(id);
  }
  Reader r(v, "system");
  const std::string name = r.string("name", "custom");
  const json& maps = r.at("maps");
  if (!maps.is_array() || maps.empty()) throw ConfigError("system.maps", "expected a nonempty array");
  std::vector<MapSpec> specs;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    specs.push_back(parse_map(maps[i], "system.maps[" + std::to_string(i) + "]"));
  }
  auto probs = Reader::number_list(r.at("probs"), "system.probs");
  r.finish();
  if (probs.size() != specs.size()) {
    throw ConfigError("system.probs", "expected " + std::to_string(specs.size()) +
                                          " probabilities, one per map");
  }
  const std::string where = "system.probs";
  guarded(where, [&] {
    validate_probs(probs);
    return 0;
  });
  return guarded("system", [&] { return SystemSpec(std::move(specs), std::move(probs), name); });
}

CocycleSpec parse_cocycle(const json& v) {
  if (v.is_string()) {
    const auto id = v.get<std::string>();
    if (!gallery::has_cocycle(id)) {
      throw ConfigError("cocycle", "unknown gallery cocycle '" + id + "'");
    }
    return gallery::cocycle(id);
  }
  Reader r(v, "cocycle");
  const std::string name = r.string("name", "custom");
  const json& mats = r.at("matrices");
  if (!mats.is_array() || mats.empty()) {
    throw ConfigError("cocycle.matrices", "expected a nonempty array");
  }
  std::vector<Matrix> ms;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    ms.push_back(parse_matrix(mats[i], "cocycle.matrices[" + std::to_string(i) + "]"));
  }
  auto probs = Reader::number_list(r.at("probs"), "cocycle.probs");
  r.finish();
  guarded("cocycle.probs", [&] {
    validate_probs(probs);
    return 0;
  });
  return guarded("cocycle", [&] { return CocycleSpec(std::move(ms), std::move(probs), name); });
}

/// Reads the command parameters, fills defaults, and returns the resolved object.
json parse_params(const std::string& command, const json& v, bool has_system, bool has_cocycle) {
  Reader r(v, "params");
  json out = json::object();
  auto num = [&](const char* k, double d) { out[k] = r.number(k, d); };
  auto cnt = [&](const char* k, std::uint64_t d, std::uint64_t min = 1) {
    out[k] = r.unsigned_int(k, d, min);
  };
  auto flag = [&](const char* k, bool d) { out[k] = r.boolean(k, d); };
  auto point = [&](const char* k, double d) {
    if (r.has(k) && v.at(k).is_array()) {
      Reader::number_list(v.at(k), r.where(k));
      out[k] = v.at(k);
    } else {
      out[k] = r.number(k, d);
    }
  };

  auto need_system = [&] {
    if (!has_system) throw ConfigError("system", "command '" + command + "' needs a system");
  };
  if (command == "stationary") {
    need_system();
    cnt("burn_in", 1000, 0);
    cnt("samples", 100000);
    cnt("shards", 1);
  } else if (command == "sync") {
    need_system();
    point("x", 0.2);
    point("y", 0.7);
    cnt("n", 100);
    cnt("words", 8);
    num("alpha", 1.0);
    cnt("average_n", 60);
    cnt("average_replicas", 0, 0);
  } else if (command == "limits") {
    need_system();
    out["observable"] = r.string("observable", "coordinate");
    num("x0", 0.0);
    cnt("n", 10000);
    cnt("replicas", 1000, 30);
    cnt("slln_n", 100000);
    cnt("lil_n_max", 0, 0);
    cnt("lil_replicas", 64);
  } else if (command == "lyapunov") {
    need_system();
    cnt("n", 10000);
    cnt("replicas", 30, 30);
    num("x0", 0.3);
    flag("distortion", false);
    num("x", 0.1);
    num("y", 0.6);
    cnt("distortion_n", 1000);
    cnt("distortion_replicas", 64);
  } else if (command == "ld") {
    need_system();
    num("x0", 0.3);
    out["epsilons"] = r.numbers("epsilons", {});
    out["horizons"] = r.sizes("horizons", {8, 12, 16, 20, 24});
    cnt("replicas", 100000);
    flag("force_monte_carlo", false);
    flag("sync", false);
    point("x", 0.2);
    point("y", 0.6);
    if (r.has("gamma")) out["gamma"] = r.number("gamma");
    cnt("gamma_n", 100000);
  } else if (command == "cocycle") {
    if (!has_cocycle) throw ConfigError("cocycle", "command 'cocycle' needs a cocycle");
    cnt("n", 10000, 1000);
    cnt("replicas", 16);
    flag("lc", true);
    out["lc_x"] = r.numbers("lc_x", {});
    num("radius", 1e-3);
    cnt("lc_n", 200);
    cnt("lc_replicas", 1000);
    num("q_target", 0.0);
  } else if (command == "ulam") {
    need_system();
    cnt("k_cells", 256, 2);
    out["operator"] = r.string("operator", "transfer");
    if (out["operator"] != "transfer" && out["operator"] != "laplace_markov") {
      throw ConfigError("params.operator", "expected transfer or laplace_markov");
    }
    cnt("eigs", 6);
    cnt("decay_steps", 20, 0);
    flag("export", false);
  } else if (command == "verify") {
    out["cases"] = r.sizes("cases", {});
    for (auto c : out["cases"]) {
      if (c.get<int>() > acceptance::kCaseCount) {
        throw ConfigError("params.cases", "case ids run 1.." + std::to_string(acceptance::kCaseCount));
      }
    }
    flag("probe", true);
  }
  r.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Result tables in either output format.

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  template <typename... Cells>
  void add(const Cells&... cells) {
    rows_.push_back(json::array({json(cells)...}));
  }

  std::string render(Format f) const {
    if (f == Format::json) {
      json arr = json::array();
      for (const auto& row : rows_) {
        json obj = json::object();
        for (std::size_t c = 0; c < header_.size(); ++c) {
          const json& cell = row[c];
          obj[header_[c]] = cell.is_number_float() && !std::isfinite(cell.get<double>())
                                ? json(format_real(cell.get<double>()))
                                : cell;
        }
        arr.push_back(std::move(obj));
      }
      return arr.dump(2) + "\n";
    }
    CsvTable t(header_);
    for (const auto& row : rows_) {
      std::vector<std::string> cells;
      for (const auto& cell : row) {
        if (cell.is_string()) {
          cells.push_back(cell.get<std::string>());
        } else if (cell.is_boolean()) {
          cells.push_back(cell.get<bool>() ? "true" : "false");
        } else if (cell.is_number_float()) {
          cells.push_back(format_real(cell.get<double>()));
        } else {
          cells.push_back(cell.dump());
        }
      }
      t.add_row(std::move(cells));
    }
    return t.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<json> rows_;
};

void emit(RunOutput& out, const ExperimentConfig& cfg, const std::string& stem, const Table& t) {
  out.files[stem + (cfg.format == Format::json ? ".json" : ".csv")] = t.render(cfg.format);
}

PhasePoint to_point(const SystemSpec& sys, const json& v) {
  if (v.is_array()) {
    return ProjectivePoint(v.get<std::vector<double>>());
  }
  const double c = v.get<double>();
  if (sys.space() == PhaseSpace::circle) return CirclePoint(c);
  if (sys.space() == PhaseSpace::interval) return IntervalPoint(c);
  fail(ErrorKind::phase_space_mismatch, "projective systems need points given as arrays");
}

std::size_t sz(const json& v) { return v.get<std::size_t>(); }

// ---------------------------------------------------------------------------
// Commands.

void run_stationary(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const auto m = estimate_stationary_sharded(sys, sz(p["burn_in"]), sz(p["samples"]), cfg.seed,
                                             sz(p["shards"]), cfg.threads);
  std::ostringstream atoms;
  write_measure_csv(atoms, m);
  out.files["measure.csv"] = atoms.str();
  Table s({"quantity", "value"});
  std::ostringstream summary;
  if (sys.space() != PhaseSpace::projective) {
    const double w = wasserstein1_to_uniform(m);
    const auto diag = atom_diagnostic(sys, m);
    s.add("w1_to_uniform", w);
    s.add("atom_verdict", std::string(to_string(diag.verdict)));
    s.add("max_ball_mass", diag.max_ball_mass);
    s.add("ball_mass_threshold", diag.threshold);
    summary << "W1 to uniform " << format_real(w) << ", atoms: " << to_string(diag.verdict) << "\n";
  }
  s.add("samples", m.size());
  emit(out, cfg, "summary", s);
  out.summary = "stationary: " + std::to_string(m.size()) + " atoms\n" + summary.str();
}

void run_sync(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const auto x = to_point(sys, p["x"]);
  const auto y = to_point(sys, p["y"]);
  const std::size_t n = sz(p["n"]);
  Table traces({"word", "k", "distance"});
  Table rates({"word", "rate", "intercept", "r2", "used", "censored_at"});
  std::ostringstream summary;
  for (std::size_t w = 0; w < sz(p["words"]); ++w) {
    WordStream word(cfg.seed, streams::kReplica + w, sys.probs());
    const auto trace = paired_orbit(sys, x, y, word, n);
    for (std::size_t k = 0; k < trace.distances.size(); ++k) traces.add(w, k, trace.distances[k]);
    try {
      const auto fit = fit_sync_rate(trace);
      rates.add(w, fit.rate, fit.intercept, fit.r2, fit.used,
                fit.censored_at ? static_cast<std::int64_t>(*fit.censored_at) : -1);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient_data) throw;
      rates.add(w, NAN, NAN, NAN, 0, -1);
    }
  }
  emit(out, cfg, "traces", traces);
  emit(out, cfg, "rates", rates);
  if (sz(p["average_replicas"]) > 0) {
    const auto avg = average_sync_sum(sys, x, y, p["alpha"].get<double>(), sz(p["average_n"]),
                                      sz(p["average_replicas"]), cfg.seed, cfg.threads);
    Table a({"m", "partial_sum"});
    for (std::size_t m = 0; m < avg.partial_sums.size(); ++m) a.add(m, avg.partial_sums[m]);
    emit(out, cfg, "average_sums", a);
    summary << "average sum " << format_real(avg.partial_sums.back())
            << (avg.bounded ? " (bounded)" : " (unbounded)") << "\n";
  }
  out.summary = "sync: " + std::to_string(sz(p["words"])) + " paired orbits of length " +
                std::to_string(n) + "\n" + summary.str();
}

void run_limits(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const auto h = observable_from_string(p["observable"].get<std::string>());
  const double x0 = p["x0"].get<double>();
  const auto est = estimate_sigma2(sys, h, sz(p["n"]), sz(p["replicas"]), cfg.seed, cfg.threads);
  Table s({"nu_hat", "sigma2", "stderr", "batch_sigma2", "batch_stderr", "disagreement"});
  s.add(est.nu_hat, est.sigma2, est.stderr_, est.batch_sigma2, est.batch_stderr, est.disagreement);
  emit(out, cfg, "sigma2", s);

  const auto clt = clt_test(sys, h, x0, sz(p["n"]), sz(p["replicas"]), cfg.seed + 1, cfg.threads,
                            est.nu_hat, est.sigma2);
  Table c({"ks_stat", "threshold", "degenerate", "pass"});
  c.add(clt.ks_stat, clt.threshold, clt.degenerate, clt.pass);
  emit(out, cfg, "clt", c);

  const auto slln = slln_check(sys, h, x0, sz(p["slln_n"]), cfg.seed + 2, cfg.seed + 3);
  Table l({"n", "average", "gap"});
  for (const auto& pt : slln.points) l.add(pt.n, pt.average, pt.gap);
  emit(out, cfg, "slln", l);

  std::ostringstream summary;
  summary << "limits: sigma2 " << format_real(est.sigma2) << ", KS " << format_real(clt.ks_stat)
          << (clt.pass ? " pass" : " fail") << ", SLLN " << (slln.pass ? "pass" : "fail") << "\n";
  if (sz(p["lil_n_max"]) > 0) {
    const auto lil = lil_statistic(sys, h, x0, sz(p["lil_n_max"]), sz(p["lil_replicas"]),
                                   cfg.seed + 4, cfg.threads, est.nu_hat, est.sigma2);
    Table t({"replica", "statistic"});
    for (std::size_t i = 0; i < lil.statistics.size(); ++i) t.add(i, lil.statistics[i]);
    emit(out, cfg, "lil", t);
    summary << "LIL median " << format_real(lil.median) << "\n";
  }
  out.summary = summary.str();
}

void run_lyapunov(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const auto g = estimate_gamma(sys, sz(p["n"]), sz(p["replicas"]), p["x0"].get<double>(),
                                cfg.seed, cfg.threads);
  Table t({"gamma", "stderr", "one_step", "one_step_stderr", "consistent"});
  t.add(g.gamma, g.stderr_, g.one_step, g.one_step_stderr, g.consistent);
  emit(out, cfg, "gamma", t);
  out.summary = "gamma " + format_real(g.gamma) + " +- " + format_real(g.stderr_) + "\n";
  if (p["distortion"].get<bool>()) {
    const auto d = distortion_report(sys, p["x"].get<double>(), p["y"].get<double>(),
                                     sz(p["distortion_n"]), sz(p["distortion_replicas"]),
                                     {1e-4, 1e-3, 1e-2, 1e-1}, cfg.seed + 1, cfg.threads);
    Table r({"n", "mean_max_ratio", "max_max_ratio"});
    for (std::size_t c = 0; c < d.checkpoints.size(); ++c) {
      r.add(d.checkpoints[c], d.mean_max_ratio[c], d.max_max_ratio[c]);
    }
    Table w({"delta", "omega"});
    for (std::size_t i = 0; i < d.deltas.size(); ++i) w.add(d.deltas[i], d.omega[i]);
    emit(out, cfg, "distortion", r);
    emit(out, cfg, "omega", w);
    out.summary += std::string("distortion ") + (d.tempered ? "tempered" : "not tempered") +
                   " (statistic " + format_real(d.tempered_statistic) + ")\n";
  }
}

void run_ld(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const double gamma =
      p.contains("gamma")
          ? p["gamma"].get<double>()
          : estimate_gamma(sys, sz(p["gamma_n"]), 30, p["x0"].get<double>(), cfg.seed ^ 0x9e37,
                           cfg.threads)
                .gamma;
  auto eps = p["epsilons"].get<std::vector<double>>();
  if (eps.empty()) eps = default_epsilons(gamma);
  const auto horizons = p["horizons"].get<std::vector<std::size_t>>();
  LDOptions opts;
  opts.replicas = sz(p["replicas"]);
  opts.force_monte_carlo = p["force_monte_carlo"].get<bool>();
  opts.threads = cfg.threads;
  const LDCurve c =
      p["sync"].get<bool>()
          ? sync_ld_curve(sys, to_point(sys, p["x"]), to_point(sys, p["y"]), gamma, eps, horizons,
                          cfg.seed, opts)
          : ld_curve(sys, p["x0"].get<double>(), gamma, eps, horizons, cfg.seed, opts);
  Table t({"epsilon", "n", "prob", "ci_low", "ci_high", "fitted_rate"});
  for (std::size_t e = 0; e < c.epsilons.size(); ++e) {
    for (std::size_t h = 0; h < c.horizons.size(); ++h) {
      t.add(c.epsilons[e], c.horizons[h], c.probs[e][h], c.ci_low[e][h], c.ci_high[e][h],
            c.fitted_rates[e]);
    }
  }
  emit(out, cfg, "ld", t);
  Table f({"gamma", "h_hat", "r2", "rate_points"});
  f.add(c.gamma, c.h_hat, c.r2, c.rate_points);
  emit(out, cfg, "ld_fit", f);
  out.summary = "ld: gamma " + format_real(gamma) + ", h_hat " + format_real(c.h_hat) + ", r2 " +
                format_real(c.r2) + "\n";
}

void run_cocycle(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& c = *cfg.cocycle;
  const auto& p = cfg.params;
  const auto s = estimate_spectrum(c, sz(p["n"]), sz(p["replicas"]), cfg.seed, cfg.threads);
  Table t({"index", "chi", "stderr"});
  for (std::size_t k = 0; k < s.chis.size(); ++k) t.add(k, s.chis[k], s.stderrs[k]);
  emit(out, cfg, "spectrum", t);
  Table g({"gap_top", "gap_stderr", "q_lc", "gap_positive", "mean_log_det"});
  g.add(s.gap_top, s.gap_stderr, s.q_lc, s.gap_positive, c.mean_log_det());
  emit(out, cfg, "gap", g);
  out.summary = "cocycle: chi_top " + format_real(s.chis.back()) + ", gap " +
                format_real(s.gap_top) + "\n";
  if (p["lc"].get<bool>()) {
    auto xv = p["lc_x"].get<std::vector<double>>();
    if (xv.empty()) {
      xv.assign(c.dim(), 0.0);
      xv[0] = 1.0;
    }
    const auto lc = verify_lc_rate(c, ProjectivePoint(xv), p["radius"].get<double>(),
                                   sz(p["lc_n"]), sz(p["lc_replicas"]), cfg.seed + 1, cfg.threads,
                                   p["q_target"].get<double>(), sz(p["n"]), sz(p["replicas"]));
    Table l({"fraction", "stderr", "q_lc", "q_target"});
    l.add(lc.fraction, lc.stderr_, lc.q_lc, lc.q_target);
    emit(out, cfg, "lc", l);
    out.summary += "LC fraction " + format_real(lc.fraction) + "\n";
  }
}

void run_ulam(const ExperimentConfig& cfg, RunOutput& out) {
  const auto& sys = *cfg.system;
  const auto& p = cfg.params;
  const std::size_t k = sz(p["k_cells"]);
  const bool transfer = p["operator"] == "transfer";
  const auto op = transfer ? build_transfer_ulam(sys, k, cfg.threads)
                           : build_laplace_markov(sys, k, cfg.threads);
  const auto lead = leading_eigen(op);
  Table v({"index", "mass"});
  for (std::size_t i = 0; i < lead.vector.size(); ++i) v.add(i, lead.vector[i]);
  emit(out, cfg, "stationary", v);
  const auto spec = spectral_gap(op, sz(p["eigs"]));
  Table s({"index", "re", "im", "modulus"});
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    s.add(i, spec.values[i].real(), spec.values[i].imag(), spec.moduli[i]);
  }
  emit(out, cfg, "spectrum", s);
  std::ostringstream summary;
  summary << "ulam: size " << op.size() << ", gap " << format_real(spec.gap)
          << (spec.dense ? "" : " (subspace estimate)")
          << (op.quadrature_fallback() ? ", quadrature fallback used" : "") << "\n";
  if (transfer && sz(p["decay_steps"]) > 0) {
    std::vector<double> f(k);
    for (std::size_t a = 0; a < k; ++a) f[a] = (static_cast<double>(a) + 0.5) / static_cast<double>(k);
    const auto decay = decay_profile(op, lead.vector, f, sz(p["decay_steps"]));
    Table d({"n", "sup_norm"});
    for (std::size_t n = 0; n < decay.size(); ++n) d.add(n, decay[n]);
    emit(out, cfg, "decay", d);
    summary << "gamma from operator " << format_real(ulam_gamma(sys, op, lead.vector)) << "\n";
  }
  if (p["export"].get<bool>()) {
    std::ostringstream coo;
    write_coo(coo, op);
    out.files["operator.coo"] = coo.str();
  }
  out.summary = summary.str();
}

void run_gallery(const ExperimentConfig& cfg, RunOutput& out) {
  Table t({"id", "kind", "space", "facts"});
  std::ostringstream summary;
  for (const auto& e : gallery::list()) {
    t.add(e.id, e.kind, e.space, e.facts);
    summary << e.id << "  [" << e.kind << ", " << e.space << "]  " << e.facts << "\n";
  }
  emit(out, cfg, "gallery", t);
  out.summary = summary.str();
}

void run_verify(const ExperimentConfig& cfg, RunOutput& out, std::ostream* live) {
  acceptance::Battery battery(cfg.threads);
  if (cfg.params["probe"].get<bool>()) battery.set_cli_probe(rerun_probe);
  auto ids = cfg.params["cases"].get<std::vector<int>>();
  if (ids.empty()) {
    for (int i = 1; i <= acceptance::kCaseCount; ++i) ids.push_back(i);
  }
  CsvTable t({"criterion", "pass", "digest"});
  std::ostringstream summary;
  for (int id : ids) {
    const auto r = battery.run(id);
    summary << acceptance::format_line(r) << "  [" << short_seconds(r.seconds) << " s]\n";
    if (live) *live << acceptance::format_line(r) << std::endl;
    char dir[16];
    std::snprintf(dir, sizeof dir, "case_%02d/", id);
    for (const auto& [name, bytes] : r.files) out.files[dir + name] = bytes;
    t.add(id, r.pass, acceptance::digest(r));
    out.ok = out.ok && r.pass;
  }
  out.files["verify.csv"] = t.str();
  out.summary = summary.str();
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  Reader r(doc, "");
  ExperimentConfig cfg;
  cfg.command = r.string("command");
  if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end()) {
    std::string all;
    for (const auto& c : commands()) all += (all.empty() ? "" : ", ") + c;
    throw ConfigError("command", "unknown command '" + cfg.command + "' (expected " + all + ")");
  }
  json echo = json::object();
  echo["command"] = cfg.command;
  if (r.has("system")) {
    cfg.system = parse_system(doc.at("system"));
    echo["system"] = doc.at("system");
  }
  if (r.has("cocycle")) {
    cfg.cocycle = parse_cocycle(doc.at("cocycle"));
    echo["cocycle"] = doc.at("cocycle");
  }
  cfg.seed = r.unsigned_int("seed", 42);
  cfg.output = r.string("output", "out");
  const std::string fmt = r.string("format", "csv");
  if (fmt != "csv" && fmt != "json") throw ConfigError("format", "expected csv or json");
  cfg.format = fmt == "csv" ? Format::csv : Format::json;
  cfg.threads = static_cast<int>(r.unsigned_int("threads", 1, 1));
  if (cfg.threads > 256) throw ConfigError("threads", "at most 256 threads");
  const json params = r.has("params") ? doc.at("params") : json::object();
  r.finish();
  cfg.params = parse_params(cfg.command, params, cfg.system.has_value(), cfg.cocycle.has_value());
  echo["seed"] = cfg.seed;
  echo["output"] = cfg.output;
  echo["format"] = fmt;
  echo["threads"] = cfg.threads;
  echo["params"] = cfg.params;
  cfg.echo = std::move(echo);
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const json& overrides) {
  json doc = json::object();
  if (!text.empty()) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(line_column(text, e.byte), "malformed JSON: " + std::string(e.what()));
    }
  }
  if (!doc.is_object()) throw ConfigError("<root>", "the config must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "params" && doc.contains("params") && doc["params"].is_object()) {
      for (const auto& [pk, pv] : value.items()) doc["params"][pk] = pv;
    } else {
      doc[key] = value;
    }
  }
  return config_from_json(doc);
}

RunOutput execute(const ExperimentConfig& cfg, std::ostream* live) {
  RunOutput out;
  const auto& c = cfg.command;
  if (c == "stationary") run_stationary(cfg, out);
  else if (c == "sync") run_sync(cfg, out);
  else if (c == "limits") run_limits(cfg, out);
  else if (c == "lyapunov") run_lyapunov(cfg, out);
  else if (c == "ld") run_ld(cfg, out);
  else if (c == "cocycle") run_cocycle(cfg, out);
  else if (c == "ulam") run_ulam(cfg, out);
  else if (c == "gallery") run_gallery(cfg, out);
  else if (c == "verify") run_verify(cfg, out, live);
  else fail(ErrorKind::config, "unknown command '" + c + "'");
  return out;
}

void write_run(const ExperimentConfig& cfg, const RunOutput& out, const std::filesystem::path& dir,
               double wall_time_seconds) {
  namespace fs = std::filesystem;
  json files = json::object();
  for (const auto& [name, bytes] : out.files) {
    const fs::path path = dir / name;
    fs::create_directories(path.parent_path());
    write_text(path, bytes);
    files[name] = {{"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}};
  }
  json manifest = {
      {"command", cfg.command},
      {"config", cfg.echo},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"files", files},
      {"versions",
       {{"rdsw", kVersion},
        {"compiler", __VERSION__},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"wall_time_seconds", wall_time_seconds}};
  fs::create_directories(dir);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string bytes = read_text(e.path());
    const auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") {
      json m = json::parse(bytes);
      m.erase("wall_time_seconds");
      bytes = m.dump(2);
    }
    files[rel] = std::move(bytes);
  }
  return files;
}

}  // namespace

bool rerun_probe(std::string& detail) {
  namespace fs = std::filesystem;
  const std::vector<json> configs{
      {{"command", "stationary"}, {"system", "binary_affine"}, {"params", {{"samples", 20000}}}},
      {{"command", "sync"},
       {"system", "anton"},
       {"threads", 2},
       {"params", {{"x", 0.3}, {"y", 0.8}, {"n", 200}, {"average_replicas", 200}}}},
      {{"command", "limits"},
       {"system", "binary_affine"},
       {"threads", 2},
       {"params", {{"n", 1000}, {"replicas", 200}, {"slln_n", 10000}}}},
      {{"command", "lyapunov"}, {"system", "moebius_pair"}, {"params", {{"n", 2000}}}},
      {{"command", "ld"},
       {"system", "slope_pair"},
       {"format", "json"},
       {"params", {{"horizons", {8, 12, 16}}, {"replicas", 20000}, {"gamma_n", 10000}}}},
      {{"command", "cocycle"},
       {"cocycle", "diag_rot"},
       {"params", {{"n", 2000}, {"replicas", 8}, {"lc_replicas", 200}}}},
      {{"command", "ulam"}, {"system", "anton"}, {"params", {{"k_cells", 128}}}}};
  const fs::path root = fs::temp_directory_path() / ("rdsw-rerun-" + std::to_string(::getpid()));
  bool ok = true;
  std::size_t compared = 0;
  std::string bad;
  try {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      json doc = configs[i];
      doc["output"] = (root / std::to_string(i)).string();
      const auto cfg = config_from_json(doc);
      std::map<std::string, std::string> first;
      for (int pass = 0; pass < 2; ++pass) {
        fs::remove_all(cfg.output);
        write_run(cfg, execute(cfg), cfg.output, 0.0 + pass);
        auto files = snapshot(cfg.output);
        if (pass == 0) {
          first = std::move(files);
        } else if (files != first) {
          ok = false;
          bad += (bad.empty() ? "" : ",") + cfg.command;
        } else {
          compared += files.size();
        }
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    bad = std::string("probe error: ") + e.what();
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  detail = ok ? "CLI reruns byte-identical over " + std::to_string(compared) + " files"
              : "CLI rerun mismatch: " + bad;
  return ok;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random dynamical systems toolkit: stationary measures, synchronization, limit "
               "laws, Lyapunov exponents, cocycles, and Ulam operators."};
  std::string command, config_path, output, format, system, cocycle;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<int> cases;
  std::vector<std::string> names = commands();
  names.push_back("run");
  app.add_option("command", command, "run | " + [] {
    std::string s;
    for (const auto& c : commands()) s += (s.empty() ? "" : " | ") + c;
    return s;
  }())->required()->check(CLI::IsMember(names));
  app.add_option("--config,-c", config_path, "JSON experiment config");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit master seed");
  auto* out_opt = app.add_option("--out,-o", output, "output directory");
  auto* threads_opt = app.add_option("--threads,-j", threads, "worker threads")->check(CLI::Range(1, 256));
  auto* format_opt = app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* system_opt = app.add_option("--system", system, "gallery system id");
  auto* cocycle_opt = app.add_option("--cocycle", cocycle, "gallery cocycle id");
  auto* case_opt = app.add_option("--case", cases, "verify: criterion ids to run");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string text;
  if (!config_path.empty()) {
    try {
      text = read_text(config_path);
    } catch (const std::exception& e) {
      err << "config error: cannot read '" << config_path << "': " << e.what() << "\n";
      return kExitConfig;
    }
  } else if (command == "run") {
    err << "config error: 'run' needs --config\n";
    return kExitConfig;
  }
  json overrides = json::object();
  if (command != "run") overrides["command"] = command;
  if (*seed_opt) overrides["seed"] = seed;
  if (*out_opt) overrides["output"] = output;
  if (*threads_opt) overrides["threads"] = threads;
  if (*format_opt) overrides["format"] = format;
  if (*system_opt) overrides["system"] = system;
  if (*cocycle_opt) overrides["cocycle"] = cocycle;
  if (*case_opt) overrides["params"] = {{"cases", cases}};

  ExperimentConfig cfg;
  try {
    cfg = parse_config(text, overrides);
  } catch (const ConfigError& e) {
    err << "config error at " << e.where() << ": " << e.what() << "\n";
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  RunOutput result;
  try {
    result = execute(cfg, &out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return e.kind() == ErrorKind::config ? kExitConfig : kExitLibrary;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_run(cfg, result, cfg.output, wall);
  } catch (const std::exception& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  if (cfg.command != "verify") out << result.summary;
  out << "wrote " << result.files.size() + 1 << " files to " << cfg.output << "\n";
  return result.ok ? kExitOk : kExitFailed;
}

}  // namespace rdsw::cli
