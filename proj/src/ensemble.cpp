#include "logcorr/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "logcorr/rng.hpp"

namespace logcorr {

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::goe: return "goe";
    case ProfileKind::gue: return "gue";
    case ProfileKind::uniform: return "uniform";
    case ProfileKind::circulant: return "circulant";
    case ProfileKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(LawKind k) {
  switch (k) {
    case LawKind::gaussian: return "gaussian";
    case LawKind::rademacher: return "rademacher";
    case LawKind::uniform: return "uniform";
  }
  return "?";
}

std::string to_string(SymmetryClass c) {
  return c == SymmetryClass::real ? "real" : "complex";
}

ProfileKind profile_kind_from(const std::string& s) {
  if (s == "goe") return ProfileKind::goe;
  if (s == "gue") return ProfileKind::gue;
  if (s == "uniform") return ProfileKind::uniform;
  if (s == "circulant") return ProfileKind::circulant;
  if (s == "custom") return ProfileKind::custom;
  throw std::invalid_argument("unknown profile kind: " + s);
}

LawKind law_kind_from(const std::string& s) {
  if (s == "gaussian") return LawKind::gaussian;
  if (s == "rademacher") return LawKind::rademacher;
  if (s == "uniform" || s == "uniform-symmetric") return LawKind::uniform;
  throw std::invalid_argument("unknown entry law: " + s);
}

namespace {

void finish(VarianceProfile& p) {
  const double nd = static_cast<double>(p.n);
  p.lower = nd * p.sigma2.minCoeff();
  p.upper = nd * p.sigma2.maxCoeff();
  bool exact = true;
  for (std::size_t i = 0; i < p.n; ++i)
    if (std::abs(p.sigma2.row(i).sum() - 1.0) > 1e-12) exact = false;
  p.exact_gw = exact;
}

}  // namespace

VarianceProfile make_profile(ProfileKind kind, std::size_t n,
                             const ProfileParams& params) {
  if (n == 0) throw std::invalid_argument("profile dimension must be positive");
  VarianceProfile p;
  p.n = n;
  p.kind = kind;
  const double nd = static_cast<double>(n);
  switch (kind) {
    case ProfileKind::goe:
      p.sigma2 = Eigen::MatrixXd::Constant(n, n, 1.0 / nd);
      p.sigma2.diagonal().array() = 2.0 / nd;
      break;
    case ProfileKind::gue:
    case ProfileKind::uniform:
      p.sigma2 = Eigen::MatrixXd::Constant(n, n, 1.0 / nd);
      break;
    case ProfileKind::circulant: {
      const std::size_t b = params.bandwidth;
      if (b >= n) throw std::invalid_argument("circulant bandwidth must be < n");
      p.bandwidth = b;
      // cyclic weights around the diagonal, accumulated if they wrap
      std::vector<double> w(n, 0.0);
      const double c = 1.0 / static_cast<double>(b + 1);
      w[0] += c;
      for (std::size_t d = 1; d <= b; ++d) {
        w[d % n] += 0.5 * c;
        w[(n - d % n) % n] += 0.5 * c;
      }
      p.sigma2.resize(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p.sigma2(i, j) = w[(j + n - i) % n];
      break;
    }
    case ProfileKind::custom: {
      const auto& m = params.custom;
      if (static_cast<std::size_t>(m.rows()) != n ||
          static_cast<std::size_t>(m.cols()) != n)
        throw std::invalid_argument("custom profile has wrong shape");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          if (!(m(i, j) >= 0.0) || !std::isfinite(m(i, j)))
            throw std::invalid_argument("custom profile entries must be nonnegative");
          if (m(i, j) != m(j, i))
            throw std::invalid_argument("custom profile must be symmetric");
        }
      p.sigma2 = m;
      break;
    }
  }
  finish(p);
  return p;
}

VarianceProfile make_two_block(std::size_t n, double within, double between) {
  if (n < 2) throw std::invalid_argument("two-block profile needs n >= 2");
  ProfileParams pp;
  pp.custom.resize(n, n);
  const std::size_t h = n / 2;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      pp.custom(i, j) = ((i < h) == (j < h) ? within : between) / static_cast<double>(n);
  return make_profile(ProfileKind::custom, n, pp);
}

Cumulants entry_cumulants(EntryLaw law) {
  switch (law.kind) {
    case LawKind::gaussian: return {0.0, 1.0, 0.0, 0.0};
    case LawKind::rademacher: return {0.0, 1.0, 0.0, -2.0};
    case LawKind::uniform: return {0.0, 1.0, 0.0, -6.0 / 5.0};
  }
  return {0.0, 1.0, 0.0, 0.0};
}

namespace {

double draw(CounterStream& g, LawKind k) {
  switch (k) {
    case LawKind::gaussian: return g.normal();
    case LawKind::rademacher: return g.sign();
    case LawKind::uniform: return std::sqrt(3.0) * (2.0 * g.uniform() - 1.0);
  }
  return 0.0;
}

}  // namespace

MatrixSample sample_matrix(const VarianceProfile& profile, EntryLaw law,
                           SymmetryClass cls, std::uint64_t seed) {
  if (profile.kind == ProfileKind::goe && cls == SymmetryClass::complex)
    throw std::invalid_argument("goe profile requires the real class");
  if (profile.kind == ProfileKind::gue && cls == SymmetryClass::real)
    throw std::invalid_argument("gue profile requires the complex class");
  const std::size_t n = profile.n;
  MatrixSample s;
  s.n = n;
  s.cls = cls;
  s.seed = {seed, "sample/" + to_string(profile.kind) + "/" + to_string(law.kind)};
  s.re.resize(n, n);
  const bool cplx = cls == SymmetryClass::complex;
  if (cplx) s.im.setZero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      CounterStream g(derive(seed, i, j));
      const double sd = std::sqrt(profile.sigma2(i, j));
      if (!cplx || i == j) {
        const double x = sd * draw(g, law.kind);
        s.re(i, j) = x;
        s.re(j, i) = x;
      } else {
        const double a = sd * M_SQRT1_2 * draw(g, law.kind);
        const double b = sd * M_SQRT1_2 * draw(g, law.kind);
        s.re(i, j) = a;
        s.re(j, i) = a;
        s.im(i, j) = b;
        s.im(j, i) = -b;
      }
    }
  }
  return s;
}

MatrixSample ou_interpolate(const MatrixSample& h0, double t, std::uint64_t seed) {
  if (!(t >= 0.0)) throw std::invalid_argument("ou_interpolate: negative time");
  const ProfileKind k = h0.is_complex() ? ProfileKind::gue : ProfileKind::goe;
  const MatrixSample u =
      sample_matrix(make_profile(k, h0.n), {LawKind::gaussian}, h0.cls, seed);
  const double a = std::exp(-0.5 * t);
  const double b = std::sqrt(-std::expm1(-t));
  MatrixSample out = h0;
  out.re = a * h0.re + b * u.re;
  if (h0.is_complex()) out.im = a * h0.im + b * u.im;
  out.seed.stream = h0.seed.stream + "+ou";
  return out;
}

TridiagonalSample sample_gaussian_tridiagonal(std::size_t n, int beta,
                                              std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("dimension must be positive");
  if (beta != 1 && beta != 2) throw std::invalid_argument("beta must be 1 or 2");
  TridiagonalSample t;
  t.n = n;
  t.beta = beta;
  t.seed = {seed, beta == 1 ? "tridiag/goe" : "tridiag/gue"};
  const double bn = beta * static_cast<double>(n);
  t.diag.resize(n);
  t.off.resize(n - 1);
  const double sd = std::sqrt(2.0 / bn);
  for (std::size_t k = 0; k < n; ++k) {
    CounterStream g(derive(seed, 0, k));
    t.diag[k] = sd * g.normal();
  }
  for (std::size_t k = 1; k < n; ++k) {
    CounterStream g(derive(seed, 1, k));
    t.off[k - 1] = g.chi(beta * static_cast<double>(n - k)) / std::sqrt(bn);
  }
  return t;
}

namespace {

nlohmann::json flat(const Eigen::MatrixXd& m) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

Eigen::MatrixXd unflat(const nlohmann::json& a, std::size_t n) {
  if (a.size() != n * n) throw std::invalid_argument("grid has wrong length");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i * n + j].get<double>();
  return m;
}

}  // namespace

nlohmann::json to_json(const VarianceProfile& p) {
  return {{"n", p.n},          {"kind", to_string(p.kind)}, {"bandwidth", p.bandwidth},
          {"lower", p.lower},  {"upper", p.upper},          {"exact_gw", p.exact_gw},
          {"sigma2", flat(p.sigma2)}};
}

VarianceProfile profile_from_json(const nlohmann::json& j) {
  const auto n = j.at("n").get<std::size_t>();
  const ProfileKind k = profile_kind_from(j.at("kind").get<std::string>());
  ProfileParams pp;
  if (k == ProfileKind::circulant) pp.bandwidth = j.at("bandwidth").get<std::size_t>();
  if (k == ProfileKind::custom) pp.custom = unflat(j.at("sigma2"), n);
  return make_profile(k, n, pp);
}

nlohmann::json to_json(const MatrixSample& s) {
  nlohmann::json j = {{"n", s.n},
                      {"class", to_string(s.cls)},
                      {"re", flat(s.re)},
                      {"seed", {{"seed", s.seed.seed}, {"stream", s.seed.stream}}}};
  if (s.is_complex()) j["im"] = flat(s.im);
  return j;
}

MatrixSample sample_from_json(const nlohmann::json& j) {
  MatrixSample s;
  s.n = j.at("n").get<std::size_t>();
  s.cls = j.at("class").get<std::string>() == "complex" ? SymmetryClass::complex
                                                        : SymmetryClass::real;
  s.re = unflat(j.at("re"), s.n);
  if (s.is_complex()) s.im = unflat(j.at("im"), s.n);
  s.seed.seed = j.at("seed").at("seed").get<std::uint64_t>();
  s.seed.stream = j.at("seed").at("stream").get<std::string>();
  return s;
}

}  // namespace logcorr
