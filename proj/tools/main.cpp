#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "logcorr/clt.hpp"
#include "logcorr/dbm.hpp"
#include "logcorr/ensemble.hpp"
#include "logcorr/experiments.hpp"
#include "logcorr/io.hpp"
#include "logcorr/qve.hpp"
#include "logcorr/rng.hpp"
#include "logcorr/spectral.hpp"

using namespace logcorr;
using nlohmann::json;

namespace {

struct Flags {
  std::size_t n = 256;
  std::size_t samples = 100;
  int beta = 1;
  std::string profile = "goe";
  std::string law = "gaussian";
  std::vector<double> energies;
  std::vector<std::size_t> indices;
  double t = 0.1;
  double gamma = 0.3;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::size_t threads = 0;
  double eta = 1e-3;
  std::string mode;
  std::string path;
};

struct Options {
  CLI::Option *n = nullptr, *samples = nullptr, *beta = nullptr, *profile = nullptr, *law = nullptr,
              *energy = nullptr, *index = nullptr, *t = nullptr, *gamma = nullptr, *seed = nullptr,
              *out = nullptr, *config = nullptr, *threads = nullptr;
};

bool given(CLI::Option* o) { return o && o->count() > 0; }

void add_model(CLI::App* sub, Flags& f, Options& o) {
  o.n = sub->add_option("--n", f.n, "matrix dimension")->check(CLI::Range(1, 1 << 20));
  o.beta = sub->add_option("--beta", f.beta, "symmetry class: 1 real, 2 complex")->check(CLI::IsMember({1, 2}));
  o.profile = sub->add_option("--profile", f.profile, "variance profile: goe, gue, uniform, circulant")
                  ->check(CLI::IsMember({"goe", "gue", "uniform", "circulant"}));
  o.law = sub->add_option("--law", f.law, "entry law: gaussian, rademacher, uniform")
              ->check(CLI::IsMember({"gaussian", "rademacher", "uniform"}));
}

void add_seed(CLI::App* sub, Flags& f, Options& o) {
  o.seed = sub->add_option("--seed", f.seed, "master seed (required)");
}

void add_out(CLI::App* sub, Flags& f, Options& o) {
  o.out = sub->add_option("--out", f.out, "directory for machine-readable artifacts");
}

std::uint64_t require_seed(const Options& o, const Flags& f) {
  if (!given(o.seed)) throw CLI::ValidationError("--seed", "a seed is required (seeds are never generated)");
  return f.seed;
}

void echo(const json& j) { std::cout << "resolved config: " << j.dump() << "\n"; }

SymmetryClass cls_of(int beta) { return beta == 2 ? SymmetryClass::complex : SymmetryClass::real; }

void check_profile_beta(const Flags& f) {
  if (f.profile == "goe" && f.beta != 1) throw std::invalid_argument("the goe profile needs --beta 1");
  if (f.profile == "gue" && f.beta != 2) throw std::invalid_argument("the gue profile needs --beta 2");
}

MatrixSample draw_matrix(const Flags& f, std::uint64_t seed) {
  check_profile_beta(f);
  const VarianceProfile S = make_profile(profile_kind_from(f.profile), f.n);
  return sample_matrix(S, EntryLaw{law_kind_from(f.law)}, cls_of(f.beta), seed);
}

json model_json(const Flags& f) {
  return {{"n", f.n}, {"beta", f.beta}, {"profile", f.profile}, {"law", f.law}};
}

void print_spectrum_table(const Spectrum& s) {
  std::cout << std::setprecision(10);
  std::cout << "n        " << s.n << "\n";
  std::cout << "min      " << s.lambdas.front() << "\n";
  std::cout << "max      " << s.lambdas.back() << "\n";
  double tr = 0.0;
  for (double l : s.lambdas) tr += l;
  std::cout << "trace    " << tr << "\n";
}

int cmd_sample(const Flags& f, const Options& o) {
  const std::uint64_t seed = require_seed(o, f);
  json cfg = model_json(f);
  cfg["seed"] = seed;
  cfg["out"] = f.out;
  echo(cfg);
  const MatrixSample m = draw_matrix(f, seed);
  std::cout << std::setprecision(10) << "n        " << m.n << "\ntrace    " << m.trace()
            << "\nfrobenius2 " << m.re.squaredNorm() + (m.is_complex() ? m.im.squaredNorm() : 0.0) << "\n";
  if (!f.out.empty()) {
    ensure_dir(f.out);
    write_file(f.out + "/sample.json", to_json(m).dump() + "\n");
  }
  return 0;
}

int cmd_spectrum(const Flags& f, const Options& o) {
  const std::uint64_t seed = require_seed(o, f);
  json cfg = model_json(f);
  cfg["seed"] = seed;
  cfg["out"] = f.out;
  echo(cfg);
  const Spectrum s = eigenvalues(draw_matrix(f, seed));
  print_spectrum_table(s);
  if (!f.out.empty()) {
    ensure_dir(f.out);
    write_file(f.out + "/spectrum.csv", to_csv(s));
    write_file(f.out + "/spectrum.json", to_json(s).dump() + "\n");
  }
  return 0;
}

int cmd_dbm(const Flags& f, const Options& o) {
  const std::uint64_t seed = require_seed(o, f);
  json cfg = model_json(f);
  cfg["seed"] = seed;
  cfg["t"] = f.t;
  cfg["out"] = f.out;
  echo(cfg);
  const Spectrum s = eigenvalues(draw_matrix(f, derive(seed, 1)));
  DtPolicy pol;
  pol.record_noise = !f.out.empty();
  const DbmPath p = run_dbm(s.lambdas, f.beta, f.t, pol, derive(seed, 2));
  std::cout << std::setprecision(10) << "steps    " << p.steps << "\nt_end    " << p.times.back()
            << "\nmin      " << p.particles.back().front() << "\nmax      " << p.particles.back().back()
            << "\nrigidity " << rigidity_report(p) << "\n";
  if (!f.out.empty()) {
    ensure_dir(f.out);
    write_file(f.out + "/path.csv", path_to_csv(p));
    write_file(f.out + "/noise.json", noise_to_json(p.noise).dump() + "\n");
  }
  return 0;
}

int cmd_qve(const Flags& f, const Options&) {
  json cfg = {{"mode", f.mode}, {"profile", f.profile}, {"n", f.n}, {"energies", f.energies}};
  if (f.mode == "solve") cfg["eta"] = f.eta;
  echo(cfg);
  const VarianceProfile S = make_profile(profile_kind_from(f.profile), f.n);
  const std::vector<double> Es = f.energies.empty() ? std::vector<double>{0.0} : f.energies;
  std::cout << std::setprecision(8);
  if (f.mode == "density") {
    std::cout << std::setw(12) << "energy" << std::setw(16) << "density" << "\n";
    for (double E : Es) {
      const DensityEstimate d = density(S, E);
      std::cout << std::setw(12) << E << std::setw(16) << d.value << (d.warning ? "  (non-monotone tail)" : "")
                << "\n";
    }
  } else {
    std::cout << std::setw(12) << "energy" << std::setw(16) << "re <m>" << std::setw(16) << "im <m>"
              << std::setw(14) << "residual" << "\n";
    for (double E : Es) {
      const QveSolution sol = solve(S, cplx(E, f.eta));
      const cplx m = sol.m.mean();
      std::cout << std::setw(12) << E << std::setw(16) << m.real() << std::setw(16) << m.imag() << std::setw(14)
                << sol.residual << "\n";
    }
  }
  return 0;
}

int cmd_predict(const Flags& f, const Options&) {
  json cfg = {{"quantity", f.mode}, {"n", f.n}, {"beta", f.beta}, {"energies", f.energies},
              {"indices", f.indices}, {"profile", f.profile}, {"law", f.law}, {"gamma", f.gamma}};
  echo(cfg);
  const std::vector<double> Es = f.energies.empty() ? std::vector<double>{0.0} : f.energies;
  std::cout << std::setprecision(6) << std::fixed;
  if (f.mode == "delta") {
    for (double E : Es) std::cout << delta_shift(E, f.n, f.beta) << "\n";
  } else if (f.mode == "exponents") {
    const CovarianceExponents ce = covariance_exponents(Es, f.n, f.beta, f.indices);
    std::cout << "a =\n" << ce.a << "\nb =\n" << ce.b << "\n";
    if (!f.indices.empty()) std::cout << "c =\n" << ce.c << "\n";
  } else {
    check_profile_beta(f);
    const VarianceProfile S = make_profile(profile_kind_from(f.profile), f.n);
    const TestFunction tf = bump(Es.front(), std::pow(static_cast<double>(f.n), -f.gamma));
    if (f.mode == "variance") {
      const VarianceBreakdown v = variance_gw(tf, S, EntryLaw{law_kind_from(f.law)}, f.beta);
      std::cout << "main           " << v.main << "\ntrace_s_term   " << v.trace_s_term
                << "\nquartic_term   " << v.quartic_term << "\ntotal          " << v.total()
                << "\nepsilon_band   " << v.epsilon_band << "\n";
    } else {
      const ExpectationTerms e = expectation_terms(tf, S, EntryLaw{law_kind_from(f.law)});
      std::cout << "leading        " << e.leading << "\nboundary       " << e.boundary << "\ns_ii_term      "
                << e.s_ii_term << "\nquartic_term   " << e.quartic_term << "\ntotal          " << e.total()
                << "  (O(1) ambiguous)\n";
    }
  }
  return 0;
}

int cmd_experiment(Flags& f, const Options& o) {
  json j = json::object();
  if (!f.config.empty()) j = json::parse(read_file(f.config));
  ExperimentConfig c = config_from_json(j);
  if (!f.mode.empty()) c.experiment = f.mode;
  if (given(o.n)) c.n = f.n;
  if (given(o.samples)) c.M = f.samples;
  if (given(o.beta)) c.beta = f.beta;
  if (given(o.profile)) c.profile = profile_kind_from(f.profile);
  if (given(o.law)) c.law = law_kind_from(f.law);
  if (given(o.energy)) c.energies = f.energies;
  if (given(o.index)) c.indices = f.indices;
  if (given(o.t)) c.t = f.t;
  if (given(o.gamma)) c.gamma = f.gamma;
  if (given(o.seed)) c.seed = f.seed;
  if (given(o.out)) c.out_dir = f.out;
  if (given(o.threads)) c.threads = f.threads;
  if (!c.seed) throw CLI::ValidationError("--seed", "a seed is required (seeds are never generated)");
  validate(c);
  echo(to_json(c));
  const RunResult r = run_experiment(c);
  const json s = summary_json(r);
  std::cout << render_report(s);
  if (!c.out_dir.empty()) write_result(r, c.out_dir);
  return r.passed() ? 0 : 2;
}

int cmd_report(const Flags& f) {
  std::string p = f.path;
  if (std::filesystem::is_directory(p)) p += "/summary.json";
  const json s = json::parse(read_file(p));
  std::cout << render_report(s);
  return s.value("passed", false) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-correlated fields of Wigner matrices: sampling, predictions and Monte Carlo experiments",
               "logcorr"};
  app.require_subcommand(1);
  Flags f;
  Options o;

  auto* sample = app.add_subcommand("sample", "draw one matrix and print its trace");
  add_model(sample, f, o);
  add_seed(sample, f, o);
  add_out(sample, f, o);

  Options os;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of one sampled matrix");
  add_model(spectrum, f, os);
  add_seed(spectrum, f, os);
  add_out(spectrum, f, os);

  Options od;
  auto* dbm = app.add_subcommand("dbm", "Dyson Brownian motion from a sampled spectrum");
  add_model(dbm, f, od);
  od.t = dbm->add_option("--t", f.t, "end time, at most 1");
  add_seed(dbm, f, od);
  add_out(dbm, f, od);

  Options oq;
  auto* qve = app.add_subcommand("qve", "solve the quadratic vector equation");
  qve->add_option("mode", f.mode, "density or solve")->required()->check(CLI::IsMember({"density", "solve"}));
  oq.n = qve->add_option("--n", f.n, "matrix dimension");
  oq.profile = qve->add_option("--profile", f.profile, "variance profile: goe, gue, uniform, circulant")
                   ->check(CLI::IsMember({"goe", "gue", "uniform", "circulant"}));
  oq.energy = qve->add_option("--energy", f.energies, "spectral parameter (repeatable)")->take_all();
  qve->add_option("--eta", f.eta, "imaginary part for solve");

  Options op;
  auto* predict = app.add_subcommand("predict", "analytic predictions");
  predict->add_option("quantity", f.mode, "delta, exponents, variance or expectation")
      ->required()
      ->check(CLI::IsMember({"delta", "exponents", "variance", "expectation"}));
  add_model(predict, f, op);
  op.energy = predict->add_option("--energy", f.energies, "energy (repeatable)")->take_all();
  op.index = predict->add_option("--index", f.indices, "eigenvalue index, one-based (repeatable)")->take_all();
  op.gamma = predict->add_option("--gamma", f.gamma, "test function width exponent: width n^-gamma");

  Options oe;
  auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo experiment");
  experiment->add_option("tag", f.mode, "experiment tag (overrides the config)");
  oe.config = experiment->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  add_model(experiment, f, oe);
  oe.samples = experiment->add_option("--samples", f.samples, "replicas M");
  oe.energy = experiment->add_option("--energy", f.energies, "energy (repeatable)")->take_all();
  oe.index = experiment->add_option("--index", f.indices, "eigenvalue index, one-based (repeatable)")->take_all();
  oe.t = experiment->add_option("--t", f.t, "time parameter");
  oe.gamma = experiment->add_option("--gamma", f.gamma, "mesoscopic exponent");
  add_seed(experiment, f, oe);
  add_out(experiment, f, oe);
  oe.threads = experiment->add_option("--threads", f.threads, "worker cap (default: available parallelism)");

  auto* report = app.add_subcommand("report", "render a summary.json as a table");
  report->add_option("path", f.path, "summary.json or a result directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (sample->parsed()) return cmd_sample(f, o);
    if (spectrum->parsed()) return cmd_spectrum(f, os);
    if (dbm->parsed()) return cmd_dbm(f, od);
    if (qve->parsed()) return cmd_qve(f, oq);
    if (predict->parsed()) return cmd_predict(f, op);
    if (experiment->parsed()) return cmd_experiment(f, oe);
    if (report->parsed()) return cmd_report(f);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
