#include "logcorr/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "logcorr/clt.hpp"
#include "logcorr/dbm.hpp"
#include "logcorr/io.hpp"
#include "logcorr/qve.hpp"
#include "logcorr/rng.hpp"
#include "logcorr/spectral.hpp"

namespace logcorr {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kInf = 1e300;
constexpr const char* kVersion = "logcorr 0.1.0";

using Row = std::vector<double>;

std::vector<double> get_doubles(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  if (j.at(key).is_number()) return {j.at(key).get<double>()};
  return j.at(key).get<std::vector<double>>();
}

// Bands from the config, falling back to the experiment defaults.
class Checker {
 public:
  explicit Checker(const nlohmann::json& bands) : bands_(bands) {}

  void check(const std::string& name, double value, double lo, double hi) {
    if (bands_.contains(name)) {
      const auto& b = bands_.at(name);
      if (b.contains("lo")) lo = b.at("lo").get<double>();
      if (b.contains("hi")) hi = b.at("hi").get<double>();
    }
    out_.push_back({name, value, lo, hi, std::isfinite(value) && value >= lo && value <= hi});
  }

  std::vector<CriterionResult> take() { return std::move(out_); }

 private:
  nlohmann::json bands_;
  std::vector<CriterionResult> out_;
};

SymmetryClass class_for(int beta) { return beta == 2 ? SymmetryClass::complex : SymmetryClass::real; }

bool tridiagonal_ok(const ExperimentConfig& c) {
  if (!c.tridiagonal || c.law != LawKind::gaussian) return false;
  return (c.profile == ProfileKind::goe && c.beta == 1) ||
         (c.profile == ProfileKind::gue && c.beta == 2);
}

// One random matrix, either as a tridiagonal model or as a dense sample.
struct Draw {
  bool tri = false;
  TridiagonalSample t;
  MatrixSample dense;
  Spectrum spec;
  bool have_spec = false;

  const Spectrum& spectrum() {
    if (!have_spec) {
      spec = tri ? eigenvalues(t) : eigenvalues(dense);
      have_spec = true;
    }
    return spec;
  }
  cplx log_char(cplx z) { return tri ? log_char_poly(t, z) : log_char_poly(spectrum(), z); }
  // any eigenvalue in [a, b]
  bool hits(double a, double b) {
    if (tri) return count_above(t, a) != count_above(t, b);
    const auto& l = spectrum().lambdas;
    auto it = std::lower_bound(l.begin(), l.end(), a);
    return it != l.end() && *it <= b;
  }
};

class Sampler {
 public:
  Sampler(const ExperimentConfig& c, const std::vector<std::size_t>& ns) : c_(c), tri_(tridiagonal_ok(c)) {
    if (!tri_)
      for (std::size_t n : ns) profiles_.emplace(n, make_profile(c.profile, n));
  }

  bool tridiagonal() const { return tri_; }

  Draw draw(std::size_t n, std::uint64_t key) const {
    Draw d;
    d.tri = tri_;
    if (tri_)
      d.t = sample_gaussian_tridiagonal(n, c_.beta, key);
    else
      d.dense = sample_matrix(profiles_.at(n), EntryLaw{c_.law}, class_for(c_.beta), key);
    return d;
  }

  const VarianceProfile& profile(std::size_t n) const { return profiles_.at(n); }

 private:
  const ExperimentConfig& c_;
  bool tri_;
  std::map<std::size_t, VarianceProfile> profiles_;
};

std::uint64_t master_seed(const ExperimentConfig& c) {
  if (!c.seed) throw std::invalid_argument("a seed is required");
  return *c.seed;
}

// Runs fn for every replica and keeps the rows in replica order. fn returns
// an empty row to discard the replica.
struct Replicas {
  std::vector<Row> rows;
  std::size_t discarded = 0;
};

Replicas run_replicas(std::size_t count, std::size_t threads,
                      const std::function<Row(std::size_t)>& fn) {
  std::vector<Row> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = fn(i); });
  Replicas r;
  for (auto& row : out) {
    if (row.empty())
      ++r.discarded;
    else
      r.rows.push_back(std::move(row));
  }
  return r;
}

std::vector<double> column(const std::vector<Row>& rows, std::size_t j) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r[j]);
  return v;
}

std::vector<double> column_where(const std::vector<Row>& rows, std::size_t j, std::size_t key_col,
                                 double key) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r[key_col] == key) v.push_back(r[j]);
  return v;
}

double variance_of(const std::vector<double>& x) { return summarize_column(x).variance; }
double mean_of(const std::vector<double>& x) { return compensated_sum(x) / static_cast<double>(x.size()); }

// standard error of the unbiased sample variance
double variance_se(const std::vector<double>& x) {
  const double M = static_cast<double>(x.size());
  const double mu = mean_of(x);
  std::vector<double> d2, d4;
  for (double v : x) {
    const double d = (v - mu) * (v - mu);
    d2.push_back(d);
    d4.push_back(d * d);
  }
  const double m2 = compensated_sum(d2) / M, m4 = compensated_sum(d4) / M;
  return std::sqrt(std::max(0.0, m4 - m2 * m2 * (M - 3.0) / (M - 1.0)) / M);
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

double eta_bulk(double E, std::size_t n) {
  return std::exp(std::pow(std::log(static_cast<double>(n)), 0.25)) * scale_params(E, n).ell;
}

bool in_good_set(double E, std::size_t n) {
  const double k = kappa(E);
  return k < std::pow(static_cast<double>(n), -1.0 / 3.0) || k >= 0.5;
}

RunResult start(const ExperimentConfig& c, std::vector<std::string> columns) {
  validate(c);
  RunResult r;
  r.config = to_json(c);
  r.config_hash = content_hash(r.config.dump());
  r.columns = std::move(columns);
  return r;
}

void finish(RunResult& r, Replicas&& reps, std::size_t requested) {
  r.raw = std::move(reps.rows);
  r.discarded = reps.discarded;
  r.used = r.raw.size();
  if (r.used + r.discarded != requested)
    throw std::logic_error("replica accounting mismatch");
  if (r.raw.empty()) throw std::runtime_error("every replica was discarded");
  r.summary = summarize(r.raw, r.columns);
  if (r.discarded > 0)
    r.warnings.push_back(std::to_string(r.discarded) + " replicas discarded (rate " +
                         fmt(static_cast<double>(r.discarded) / requested) + ")");
}

std::vector<double> default_energies(const ExperimentConfig& c, std::vector<double> fallback) {
  return c.energies.empty() ? fallback : c.energies;
}

}  // namespace

std::vector<std::string> experiment_tags() {
  return {"logfield_clt", "logfield_growth", "eigenvalue_clt", "wegner",       "local_law",
          "coupling",     "advection",       "smoothing",      "variance_match"};
}

std::vector<std::size_t> ExperimentConfig::ladder() const {
  return n_ladder.empty() ? std::vector<std::size_t>{n} : n_ladder;
}

void validate(const ExperimentConfig& c) {
  const auto tags = experiment_tags();
  if (std::find(tags.begin(), tags.end(), c.experiment) == tags.end())
    throw std::invalid_argument("unknown experiment '" + c.experiment + "'");
  if (!c.seed) throw std::invalid_argument("a seed is required (seeds are never generated)");
  if (c.M < 1) throw std::invalid_argument("M must be at least 1");
  for (std::size_t n : c.ladder())
    if (n < 8) throw std::invalid_argument("n must be at least 8");
  if (c.beta != 1 && c.beta != 2) throw std::invalid_argument("beta must be 1 or 2");
  if (c.profile == ProfileKind::goe && c.beta != 1)
    throw std::invalid_argument("the goe profile needs beta = 1");
  if (c.profile == ProfileKind::gue && c.beta != 2)
    throw std::invalid_argument("the gue profile needs beta = 2");
  if (c.profile == ProfileKind::custom) throw std::invalid_argument("custom profiles are not supported by experiments");
  for (double E : c.energies)
    if (!(E >= -2.0 && E <= 2.0)) throw std::invalid_argument("energies must lie in [-2,2]");
  for (std::size_t n : c.ladder())
    for (std::size_t k : c.indices)
      if (k < 1 || k > n) throw std::invalid_argument("index " + std::to_string(k) + " outside 1..n");
  if (!(c.t >= 0.0 && c.t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (!c.criteria.is_object()) throw std::invalid_argument("criteria must be an object");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "experiment", "n",    "n_ladder", "M",      "beta",     "profile", "law",     "energies",
      "indices",    "t",    "gamma",    "seed",   "out_dir",  "criteria", "threads", "tridiagonal"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown config key '" + it.key() + "'");
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("n_ladder")) c.n_ladder = j.at("n_ladder").get<std::vector<std::size_t>>();
    if (j.contains("M")) c.M = j.at("M").get<std::size_t>();
    if (j.contains("beta")) c.beta = j.at("beta").get<int>();
    if (j.contains("profile")) c.profile = profile_kind_from(j.at("profile").get<std::string>());
    if (j.contains("law")) c.law = law_kind_from(j.at("law").get<std::string>());
    c.energies = get_doubles(j, "energies");
    if (j.contains("indices")) c.indices = j.at("indices").get<std::vector<std::size_t>>();
    if (j.contains("t")) c.t = j.at("t").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("criteria")) c.criteria = j.at("criteria");
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
    if (j.contains("tridiagonal")) c.tridiagonal = j.at("tridiagonal").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = c.experiment;
  j["n"] = c.n;
  j["n_ladder"] = c.n_ladder;
  j["M"] = c.M;
  j["beta"] = c.beta;
  j["profile"] = to_string(c.profile);
  j["law"] = to_string(c.law);
  j["energies"] = c.energies;
  j["indices"] = c.indices;
  j["t"] = c.t;
  j["gamma"] = c.gamma;
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  j["out_dir"] = c.out_dir;
  j["criteria"] = c.criteria;
  j["threads"] = c.threads;
  j["tridiagonal"] = c.tridiagonal;
  return j;
}

bool RunResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

RunResult run_logfield_clt(const ExperimentConfig& c) {
  const std::vector<double> Es = default_energies(c, {0.0});
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < Es.size(); ++i) {
    cols.push_back("re_" + std::to_string(i));
    cols.push_back("im_" + std::to_string(i));
  }
  RunResult r = start(c, cols);
  const std::size_t n = c.n;
  const Sampler sampler(c, {n});
  const std::uint64_t tag = hash_tag(c.experiment);
  const double scale = std::sqrt(c.beta / std::log(static_cast<double>(n)));
  std::vector<cplx> zs;
  std::vector<double> deltas;
  for (double E : Es) {
    zs.emplace_back(E, eta_bulk(E, n));
    deltas.push_back(delta_shift(E, n, c.beta));
  }
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    Draw d = sampler.draw(n, derive(master_seed(c), tag, rep));
    Row row;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const cplx L = d.log_char(zs[i]);
      row.push_back(scale * (L.real() - deltas[i]));
      row.push_back(scale * L.imag());
    }
    return row;
  });
  finish(r, std::move(reps), c.M);

  const CovarianceExponents ce = covariance_exponents(Es, n, c.beta);
  nlohmann::json flags = nlohmann::json::array();
  for (double E : Es) flags.push_back(!in_good_set(E, n));
  r.derived["beyond_proved_regime"] = flags;
  r.derived["eta"] = nlohmann::json::array();
  for (const auto& z : zs) r.derived["eta"].push_back(z.imag());
  r.derived["delta"] = deltas;
  std::vector<std::vector<double>> a(Es.size(), std::vector<double>(Es.size()));
  for (std::size_t i = 0; i < Es.size(); ++i)
    for (std::size_t j = 0; j < Es.size(); ++j) a[i][j] = ce.a(i, j);
  r.derived["a"] = a;

  Checker chk(c.criteria);
  for (std::size_t i = 0; i < Es.size(); ++i)
    chk.check("var_re_ratio_" + std::to_string(i), r.summary.columns[2 * i].variance / ce.a(i, i), 0.8,
              1.25);
  for (std::size_t i = 0; i < Es.size(); ++i)
    for (std::size_t j = i + 1; j < Es.size(); ++j) {
      const double emp = correlation(column(r.raw, 2 * i), column(r.raw, 2 * j));
      const double pred = ce.a(i, j) / std::sqrt(ce.a(i, i) * ce.a(j, j));
      chk.check("corr_re_" + std::to_string(i) + "_" + std::to_string(j), emp - pred, -0.2, 0.2);
    }
  r.criteria = chk.take();
  return r;
}

RunResult run_logfield_growth(const ExperimentConfig& c) {
  RunResult r = start(c, {"n", "re_bulk", "re_edge"});
  const auto ns = c.ladder();
  if (ns.size() < 2) throw std::invalid_argument("logfield_growth needs an n_ladder with two or more sizes");
  const Sampler sampler(c, ns);
  const std::uint64_t tag = hash_tag(c.experiment);
  Replicas reps = run_replicas(c.M * ns.size(), c.threads, [&](std::size_t i) {
    const std::size_t n = ns[i / c.M], rep = i % c.M;
    Draw d = sampler.draw(n, derive(master_seed(c), tag, n, rep));
    // the real-axis evaluation is unusable if an eigenvalue sits on E = 2
    if (d.hits(2.0 - 1e-12, 2.0 + 1e-12)) return Row{};
    const double bulk = d.log_char(cplx(0.0, eta_bulk(0.0, n))).real();
    const double edge = d.log_char(cplx(2.0, 0.0)).real();
    return Row{static_cast<double>(n), bulk, edge};
  });
  finish(r, std::move(reps), c.M * ns.size());

  std::vector<double> logn, var, var_w, mean, mean_w, var_pred;
  nlohmann::json per_n = nlohmann::json::array();
  for (std::size_t n : ns) {
    var_pred.push_back(covariance_exponents({0.0}, n, c.beta).a(0, 0) * std::log(static_cast<double>(n)) / c.beta);
    const auto b = column_where(r.raw, 1, 0, static_cast<double>(n));
    const auto e = column_where(r.raw, 2, 0, static_cast<double>(n));
    const double v = variance_of(b), vse = variance_se(b);
    const double m = mean_of(e), mse = std::sqrt(variance_of(e) / e.size());
    logn.push_back(std::log(static_cast<double>(n)));
    var.push_back(v);
    var_w.push_back(1.0 / (vse * vse));
    mean.push_back(m);
    mean_w.push_back(1.0 / (mse * mse));
    per_n.push_back({{"n", n}, {"var_re_bulk", v}, {"var_se", vse}, {"mean_re_edge", m}, {"mean_se", mse}});
  }
  const LinearFit fv = linear_fit(logn, var, var_w);
  const LinearFit fm = linear_fit(logn, mean, mean_w);
  // slope of a_11(n) log n / beta over the ladder
  const double pred_var = linear_fit(logn, var_pred).slope;
  const double pred_mean = -0.25 * (2.0 / c.beta - 1.0) * (2.0 / 3.0);
  r.derived["per_n"] = per_n;
  r.derived["var_slope"] = {{"slope", fv.slope}, {"se", fv.slope_se}, {"predicted", pred_var}};
  r.derived["edge_mean_slope"] = {{"slope", fm.slope}, {"se", fm.slope_se}, {"predicted", pred_mean}};

  Checker chk(c.criteria);
  chk.check("var_slope_ratio", fv.slope / pred_var, 0.8, 1.2);
  if (c.beta == 1)
    chk.check("edge_mean_slope", fm.slope, pred_mean - 0.25 * std::abs(pred_mean),
              pred_mean + 0.25 * std::abs(pred_mean));
  else
    chk.check("edge_mean_slope", fm.slope, -0.05, 0.05);
  r.criteria = chk.take();
  return r;
}

RunResult run_eigenvalue_clt(const ExperimentConfig& c) {
  const std::size_t n = c.n;
  std::vector<std::size_t> ks = c.indices;
  if (ks.empty()) ks = {n / 2};
  std::vector<std::string> cols;
  for (std::size_t k : ks) cols.push_back("y_" + std::to_string(k));
  RunResult r = start(c, cols);
  const Sampler sampler(c, {n});
  const std::uint64_t tag = hash_tag(c.experiment);
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    Draw d = sampler.draw(n, derive(master_seed(c), tag, rep));
    Row row;
    for (std::size_t k : ks) row.push_back(normalized_fluct(d.spectrum(), k, c.beta));
    return row;
  });
  finish(r, std::move(reps), c.M);

  const CovarianceExponents ce = covariance_exponents({}, n, c.beta, ks);
  Checker chk(c.criteria);
  nlohmann::json ckk = nlohmann::json::array();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::size_t k = ks[i];
    const ColumnStats& s = r.summary.columns[i];
    ckk.push_back(ce.c(i, i));
    const bool bulk = k >= n / 10 && k <= n - n / 10;
    if (bulk) {
      chk.check("var_y_" + std::to_string(k), s.variance, 0.7, 1.3);
      chk.check("ks_y_" + std::to_string(k), s.ks, 0.0, 0.08);
    } else {
      chk.check("var_ratio_y_" + std::to_string(k), s.variance / ce.c(i, i), 0.45, 0.95);
    }
  }
  r.derived["c_kk"] = ckk;
  r.criteria = chk.take();
  return r;
}

RunResult run_wegner(const ExperimentConfig& c) {
  const std::size_t n = c.n;
  const std::vector<double> Es = default_energies(c, {0.0});
  const std::vector<double> deltas = {0.2, 0.1, 0.05};
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < Es.size(); ++i)
    for (double dl : deltas) cols.push_back("hit_" + std::to_string(i) + "_" + fmt(dl));
  RunResult r = start(c, cols);
  const Sampler sampler(c, {n});
  const std::uint64_t tag = hash_tag(c.experiment);
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    Draw d = sampler.draw(n, derive(master_seed(c), tag, rep));
    Row row;
    for (double E : Es) {
      const double ell = scale_params(E, n).ell;
      for (double dl : deltas) row.push_back(d.hits(E - dl * ell, E + dl * ell) ? 1.0 : 0.0);
    }
    return row;
  });
  finish(r, std::move(reps), c.M);

  Checker chk(c.criteria);
  nlohmann::json probs = nlohmann::json::array();
  for (std::size_t i = 0; i < Es.size(); ++i) {
    std::vector<double> p;
    for (std::size_t j = 0; j < deltas.size(); ++j) p.push_back(r.summary.columns[i * deltas.size() + j].mean);
    bool mono = true;
    nlohmann::json ratios = nlohmann::json::array(), to_len = nlohmann::json::array();
    for (std::size_t j = 0; j < deltas.size(); ++j) to_len.push_back(p[j] / (2.0 * deltas[j]));
    for (std::size_t j = 0; j + 1 < deltas.size(); ++j) {
      mono = mono && p[j + 1] < p[j];
      const double ratio = p[j] > 0.0 ? p[j + 1] / p[j] : std::numeric_limits<double>::quiet_NaN();
      ratios.push_back(ratio);
      chk.check("halving_ratio_" + std::to_string(i) + "_" + std::to_string(j), ratio, 0.3, 0.7);
    }
    chk.check("monotone_" + std::to_string(i), mono ? 1.0 : 0.0, 1.0, 1.0);
    probs.push_back({{"E", Es[i]}, {"delta", deltas}, {"p", p}, {"halving_ratios", ratios},
                     {"p_over_2delta", to_len}, {"beyond_proved_regime", !in_good_set(Es[i], n)}});
  }
  r.derived["probabilities"] = probs;
  r.criteria = chk.take();
  return r;
}

RunResult run_local_law(const ExperimentConfig& c) {
  std::vector<std::size_t> ns = c.n_ladder.empty() ? std::vector<std::size_t>{c.n, 2 * c.n} : c.n_ladder;
  const std::size_t n0 = *std::min_element(ns.begin(), ns.end());
  const std::vector<double> Es =
      default_energies(c, {0.0, 2.0 - std::pow(static_cast<double>(c.n), -0.3)});
  // eta = 2^j / n for j = 0, 2, 4, ... while eta <= 1, plus eta = 1
  std::vector<double> js;
  for (double j = 0; std::pow(2.0, j) <= static_cast<double>(n0); j += 2) js.push_back(j);
  std::vector<std::string> cols{"n"};
  for (std::size_t i = 0; i < Es.size(); ++i) {
    for (double j : js) cols.push_back("d_" + std::to_string(i) + "_j" + fmt(j));
    cols.push_back("d_" + std::to_string(i) + "_eta1");
  }
  RunResult r = start(c, cols);
  const Sampler sampler(c, ns);
  const std::uint64_t tag = hash_tag(c.experiment);
  auto eta_for = [&](std::size_t n, std::size_t slot) {
    return slot < js.size() ? std::pow(2.0, js[slot]) / static_cast<double>(n) : 1.0;
  };
  // deterministic m(z): average of the QVE solution for the sampled profile
  std::map<std::pair<std::size_t, std::size_t>, cplx> mref;
  for (std::size_t n : ns) {
    const VarianceProfile S = make_profile(c.profile, n);
    for (std::size_t i = 0; i < Es.size(); ++i)
      for (std::size_t s = 0; s <= js.size(); ++s) {
        const QveSolution sol = solve(S, cplx(Es[i], eta_for(n, s)));
        mref[{n, i * (js.size() + 1) + s}] = sol.m.mean();
      }
  }
  Replicas reps = run_replicas(c.M * ns.size(), c.threads, [&](std::size_t idx) {
    const std::size_t n = ns[idx / c.M], rep = idx % c.M;
    Draw d = sampler.draw(n, derive(master_seed(c), tag, n, rep));
    Row row{static_cast<double>(n)};
    for (std::size_t i = 0; i < Es.size(); ++i)
      for (std::size_t s = 0; s <= js.size(); ++s) {
        const double eta = eta_for(n, s);
        const cplx sz = stieltjes(d.spectrum(), cplx(Es[i], eta));
        row.push_back(static_cast<double>(n) * eta * std::abs(sz - mref.at({n, i * (js.size() + 1) + s})));
      }
    return row;
  });
  finish(r, std::move(reps), c.M * ns.size());

  // (n eta)^{2p} E|s - m|^{2p} per n and column
  auto moment = [&](std::size_t n, std::size_t col, int p) {
    std::vector<double> v;
    for (double x : column_where(r.raw, col, 0, static_cast<double>(n))) v.push_back(std::pow(x, 2 * p));
    return mean_of(v);
  };
  nlohmann::json table = nlohmann::json::array();
  double worst1 = 0.0, worst2 = 0.0, eta1 = 0.0;
  for (std::size_t col = 1; col < cols.size(); ++col) {
    nlohmann::json entry{{"column", cols[col]}};
    for (std::size_t a = 0; a < ns.size(); ++a) {
      entry["p1"].push_back(moment(ns[a], col, 1));
      entry["p2"].push_back(moment(ns[a], col, 2));
      if (a > 0 && ns[a] == 2 * ns[a - 1]) {
        worst1 = std::max(worst1, moment(ns[a], col, 1) / moment(ns[a - 1], col, 1));
        worst2 = std::max(worst2, moment(ns[a], col, 2) / moment(ns[a - 1], col, 2));
      }
    }
    if (cols[col].find("eta1") != std::string::npos)
      for (std::size_t n : ns) eta1 = std::max(eta1, moment(n, col, 1));
    table.push_back(entry);
  }
  r.derived["energies"] = Es;
  r.derived["moments"] = table;
  r.derived["max_doubling_ratio_p2"] = worst2;
  Checker chk(c.criteria);
  chk.check("max_doubling_ratio_p1", worst1, 0.0, 1.5);
  chk.check("eta1_statistic_p1", eta1, 0.0, 10.0);
  r.criteria = chk.take();
  return r;
}

namespace {

// GOE/GUE spectrum and an independent Wigner spectrum with the configured law
std::pair<std::vector<double>, std::vector<double>> coupled_initials(const ExperimentConfig& c, std::size_t n,
                                                                     std::uint64_t key) {
  ExperimentConfig g = c;
  g.profile = c.beta == 1 ? ProfileKind::goe : ProfileKind::gue;
  g.law = LawKind::gaussian;
  const Sampler gs(g, {n});
  Draw gd = gs.draw(n, derive(key, 1));
  ExperimentConfig w = c;
  if (w.profile == ProfileKind::goe || w.profile == ProfileKind::gue) w.profile = ProfileKind::uniform;
  w.tridiagonal = false;
  const Sampler ws(w, {n});
  Draw wd = ws.draw(n, derive(key, 2));
  return {wd.spectrum().lambdas, gd.spectrum().lambdas};
}

}  // namespace

RunResult run_coupling(const ExperimentConfig& c) {
  RunResult r = start(c, {"distance", "ubar_corr", "rigidity"});
  const std::size_t n = c.n;
  const std::uint64_t tag = hash_tag(c.experiment);
  if (c.t <= 0.0) throw std::invalid_argument("coupling needs t > 0");
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    const std::uint64_t key = derive(master_seed(c), tag, rep);
    auto [a0, b0] = coupled_initials(c, n, key);
    DtPolicy pol;
    pol.store_stride = 1000000;
    auto [pa, pb] = run_coupled(a0, b0, c.beta, c.t, pol, derive(key, 3));
    const auto& a = pa.particles.back();
    const auto& b = pb.particles.back();
    double dist = 0.0;
    for (std::size_t k = 0; k < n; ++k) dist = std::max(dist, std::abs(a[k] - b[k]));
    std::vector<double> gap, pred;
    for (std::size_t k = (n + 9) / 10; k <= (9 * n) / 10; ++k) {
      gap.push_back(a[k - 1] - b[k - 1]);
      pred.push_back(ubar(a0, b0, c.t, k));
    }
    return Row{static_cast<double>(n) * c.t * dist, correlation(gap, pred), rigidity_report(pb)};
  });
  finish(r, std::move(reps), c.M);
  const double bound = std::pow(static_cast<double>(n), 0.2);
  const auto d = column(r.raw, 0);
  const double frac =
      static_cast<double>(std::count_if(d.begin(), d.end(), [&](double x) { return x <= bound; })) / d.size();
  r.derived["bound"] = bound;
  r.derived["fraction_within_bound"] = frac;
  r.derived["ubar_corr_median"] = median(column(r.raw, 1));
  r.derived["rigidity_reference"] = std::pow(std::log(static_cast<double>(n)), 2.0);
  Checker chk(c.criteria);
  chk.check("fraction_within_bound", frac, 0.9, 1.0);
  r.criteria = chk.take();
  return r;
}

RunResult run_advection(const ExperimentConfig& c) {
  RunResult r = start(c, {"median_residual", "max_residual"});
  const std::size_t n = c.n;
  const std::uint64_t tag = hash_tag(c.experiment);
  if (c.t <= 0.0) throw std::invalid_argument("advection needs t > 0");
  const double nd = static_cast<double>(n);
  const double phi = std::min(std::exp(std::pow(std::log(std::log(nd)), 2.0)), std::pow(nd, 0.1));
  std::vector<cplx> zs;
  for (std::size_t q = 1; q <= 32; ++q) {
    const double E = quantile(std::max<std::size_t>(1, (q * n) / 33), n);
    zs.emplace_back(E, phi * phi * scale_params(E, n).ell);
  }
  std::vector<cplx> zts;
  for (const cplx& z : zs) zts.push_back(characteristic(z, c.t));
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    const std::uint64_t key = derive(master_seed(c), tag, rep);
    auto [mu0, lam0] = coupled_initials(c, n, key);
    const DbmPath path = run_dbm(lam0, c.beta, c.t, DtPolicy{}, derive(key, 3));
    std::vector<double> u0(n);
    for (std::size_t k = 0; k < n; ++k) u0[k] = mu0[k] - path.particles.front()[k];
    const auto kernel = evolve_kernel(u0, path, path.times.size());
    const double tend = path.times.back();
    std::vector<double> res;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const cplx ft = observable_f(path, kernel, zs[i], tend);
      const cplx f0 = observable_f(path, kernel, zts[i], 0.0);
      res.push_back(std::abs(ft - f0) / (1.0 + std::abs(f0)));
    }
    return Row{median(res), *std::max_element(res.begin(), res.end())};
  });
  finish(r, std::move(reps), c.M);
  r.derived["phi"] = phi;
  const double med = median(column(r.raw, 0));
  r.derived["median_relative_residual"] = med;
  Checker chk(c.criteria);
  chk.check("median_relative_residual", med, 0.0, 0.1);
  r.criteria = chk.take();
  return r;
}

RunResult run_smoothing(const ExperimentConfig& c) {
  RunResult r = start(c, {"statistic"});
  const std::size_t n = c.n;
  const double E = c.energies.empty() ? 0.0 : c.energies.front();
  const Sampler sampler(c, {n});
  const std::uint64_t tag = hash_tag(c.experiment);
  const double eta = eta_bulk(E, n);
  const double norm = 1.0 / std::sqrt(std::log(static_cast<double>(n)));
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    Draw d = sampler.draw(n, derive(master_seed(c), tag, rep));
    if (d.hits(E - 1e-12, E + 1e-12)) return Row{};
    return Row{norm * std::abs(d.log_char(cplx(E, eta)) - d.log_char(cplx(E, 0.0)))};
  });
  finish(r, std::move(reps), c.M);
  const double med = median(column(r.raw, 0));
  r.derived["eta"] = eta;
  r.derived["median"] = med;
  r.derived["discard_rate"] = static_cast<double>(r.discarded) / c.M;
  Checker chk(c.criteria);
  chk.check("median_statistic", med, 0.0, 0.5);
  r.criteria = chk.take();
  return r;
}

RunResult run_variance_match(const ExperimentConfig& c) {
  const bool paired = c.law != LawKind::gaussian;
  std::vector<std::string> cols{"tr_x", "tr_x2", "tr_f"};
  if (paired) cols.push_back("tr_x2_gaussian");
  RunResult r = start(c, cols);
  const std::size_t n = c.n;
  const Sampler sampler(c, {n});
  const std::uint64_t tag = hash_tag(c.experiment);
  const double width = std::pow(static_cast<double>(n), -c.gamma);
  const TestFunction f = bump(0.0, width);
  const VarianceProfile S = sampler.tridiagonal() ? make_profile(c.profile, n) : sampler.profile(n);
  Replicas reps = run_replicas(c.M, c.threads, [&](std::size_t rep) {
    const std::uint64_t key = derive(master_seed(c), tag, rep);
    Draw d = sampler.draw(n, key);
    double tr = 0.0, tr2 = 0.0, trf = 0.0;
    if (d.tri) {
      for (double x : d.t.diag) {
        tr += x;
        tr2 += x * x;
      }
      for (double x : d.t.off) tr2 += 2.0 * x * x;
    } else {
      tr = d.dense.re.trace();
      tr2 = d.dense.re.squaredNorm() + (d.dense.is_complex() ? d.dense.im.squaredNorm() : 0.0);
    }
    for (double l : d.spectrum().lambdas) trf += f.f(l);
    Row row{tr, tr2, trf};
    if (paired) {
      const MatrixSample g = sample_matrix(S, EntryLaw{LawKind::gaussian}, class_for(c.beta), derive(key, 7));
      row.push_back(g.re.squaredNorm() + (g.is_complex() ? g.im.squaredNorm() : 0.0));
    }
    return row;
  });
  finish(r, std::move(reps), c.M);

  Checker chk(c.criteria);
  const auto trx = column(r.raw, 0);
  const double diag_sum = S.trace();
  const double vse = variance_se(trx);
  r.derived["sum_sigma2_ii"] = diag_sum;
  chk.check("var_tr_x_z", (variance_of(trx) - diag_sum) / vse, -3.0, 3.0);

  if (paired) {
    const auto a = column(r.raw, 1), b = column(r.raw, 3);
    const double shift = variance_of(a) - variance_of(b);
    const double se = std::hypot(variance_se(a), variance_se(b));
    const double k4 = entry_cumulants(EntryLaw{c.law}).s4;
    const VarianceBreakdown vb = variance_gw(polynomial({0.0, 0.0, 1.0}), S, EntryLaw{c.law}, c.beta);
    r.derived["quartic_shift"] = {{"empirical", shift}, {"se", se}, {"predicted", vb.quartic_term}};
    // shift must carry the sign of the fourth cumulant at 3 SE
    const double signed_z = (k4 < 0 ? -1.0 : 1.0) * shift / se;
    chk.check("quartic_shift_signed_z", signed_z, 3.0, kInf);
  }

  const VarianceBreakdown vb = variance_gw(f, S, EntryLaw{c.law}, c.beta);
  const double V = vb.total();
  const auto trf = column(r.raw, 2);
  const double mu = mean_of(trf);
  std::vector<double> lambdas, emp, pred;
  for (int i = 0; i <= 8; ++i) lambdas.push_back(0.25 * i);
  pred = char_curve(std::max(V, 0.0), lambdas);
  double worst = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<double> cs;
    for (double x : trf) cs.push_back(std::cos(lambdas[i] * (x - mu)));
    emp.push_back(mean_of(cs));
    worst = std::max(worst, std::abs(emp.back() - pred[i]));
  }
  r.derived["test_function_width"] = width;
  r.derived["V"] = {{"main", vb.main},         {"trace_s_term", vb.trace_s_term},
                    {"quartic_term", vb.quartic_term}, {"total", V},
                    {"beta_halved", vb.beta_halved}, {"empirical_variance", variance_of(trf)}};
  r.derived["char_curve"] = {{"lambda", lambdas}, {"empirical", emp}, {"predicted", pred}};
  chk.check("char_curve_max_deviation", worst, 0.0, 0.1);
  if (c.M < 100) r.warnings.push_back("M below 100: standard errors are unreliable");
  r.criteria = chk.take();
  return r;
}

RunResult run_experiment(const ExperimentConfig& c) {
  validate(c);
  using Fn = RunResult (*)(const ExperimentConfig&);
  static const std::map<std::string, Fn> table = {
      {"logfield_clt", run_logfield_clt}, {"logfield_growth", run_logfield_growth},
      {"eigenvalue_clt", run_eigenvalue_clt}, {"wegner", run_wegner},
      {"local_law", run_local_law},         {"coupling", run_coupling},
      {"advection", run_advection},         {"smoothing", run_smoothing},
      {"variance_match", run_variance_match}};
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r = table.at(c.experiment)(c);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string raw_csv(const RunResult& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "replica";
  for (const auto& c : r.columns) os << "," << c;
  os << "\n";
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    os << i;
    for (double x : r.raw[i]) os << "," << x;
    os << "\n";
  }
  return os.str();
}

nlohmann::json summary_json(const RunResult& r) {
  nlohmann::json j;
  j["experiment"] = r.config.value("experiment", "");
  j["config_hash"] = r.config_hash;
  j["stats"] = to_json(r.summary);
  j["derived"] = r.derived;
  j["replicas_used"] = r.used;
  j["replicas_discarded"] = r.discarded;
  j["warnings"] = r.warnings;
  nlohmann::json cr = nlohmann::json::array();
  for (const auto& c : r.criteria)
    cr.push_back({{"name", c.name}, {"value", c.value}, {"lo", c.lo}, {"hi", c.hi}, {"passed", c.passed}});
  j["criteria"] = cr;
  j["passed"] = r.passed();
  return j;
}

nlohmann::json manifest_json(const RunResult& r) {
  return {{"config", r.config},
          {"config_hash", r.config_hash},
          {"raw_hash", content_hash(raw_csv(r))},
          {"version", kVersion},
          {"wall_seconds", r.wall_seconds}};
}

void write_result(const RunResult& r, const std::string& dir) {
  ensure_dir(dir);
  const std::string base = dir.empty() ? "" : dir + "/";
  write_file(base + "manifest.json", manifest_json(r).dump(2) + "\n");
  write_file(base + "raw.csv", raw_csv(r));
  write_file(base + "summary.json", summary_json(r).dump(2) + "\n");
}

namespace {

// NaN statistics are stored as null
double num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

}  // namespace

std::string render_report(const nlohmann::json& s) {
  std::ostringstream os;
  os << "experiment: " << s.value("experiment", "?") << "\n";
  os << "replicas:   " << s.value("replicas_used", 0) << " used, " << s.value("replicas_discarded", 0)
     << " discarded\n\n";
  os << std::left << std::setw(22) << "column" << std::right << std::setw(14) << "mean" << std::setw(14)
     << "variance" << std::setw(10) << "skew" << std::setw(10) << "kurt" << std::setw(10) << "ks" << "\n";
  if (s.contains("stats"))
    for (const auto& c : s.at("stats").at("columns")) {
      os << std::left << std::setw(22) << c.value("name", "") << std::right << std::setprecision(6)
         << std::setw(14) << num(c, "mean") << std::setw(14) << num(c, "variance")
         << std::setprecision(3) << std::setw(10) << num(c, "skewness") << std::setw(10)
         << num(c, "kurtosis") << std::setw(10) << num(c, "ks") << "\n";
    }
  os << "\n" << std::left << std::setw(32) << "criterion" << std::right << std::setw(14) << "value"
     << std::setw(14) << "lo" << std::setw(14) << "hi" << "  result\n";
  if (s.contains("criteria"))
    for (const auto& c : s.at("criteria")) {
      os << std::left << std::setw(32) << c.value("name", "") << std::right << std::setprecision(6)
         << std::setw(14) << num(c, "value") << std::setw(14) << num(c, "lo") << std::setw(14)
         << num(c, "hi") << "  " << (c.value("passed", false) ? "pass" : "FAIL") << "\n";
    }
  if (s.contains("warnings"))
    for (const auto& w : s.at("warnings")) os << "warning: " << w.get<std::string>() << "\n";
  os << "\noverall: " << (s.value("passed", false) ? "pass" : "FAIL") << "\n";
  return os.str();
}

}  // namespace logcorr
