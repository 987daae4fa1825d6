#include "logcorr/qve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "logcorr/spectral.hpp"

namespace logcorr {

Eigen::MatrixXd BlockReduction::reduced() const {
  Eigen::MatrixXd r = s * sizes.asDiagonal();
  r.diagonal() += d;
  return r;
}

namespace {

BlockReduction trivial(const VarianceProfile& S) {
  BlockReduction r;
  const auto n = static_cast<Eigen::Index>(S.n);
  r.cls.resize(S.n);
  for (std::size_t i = 0; i < S.n; ++i) r.cls[i] = i;
  r.sizes = Eigen::VectorXd::Ones(n);
  r.s = S.sigma2;
  r.d = Eigen::VectorXd::Zero(n);
  return r;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

BlockReduction reduce_profile(const VarianceProfile& S, std::size_t max_classes) {
  const std::size_t n = S.n;
  const auto& s2 = S.sigma2;
  std::vector<std::size_t> reps;
  std::vector<std::size_t> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool found = false;
    for (std::size_t c = 0; c < reps.size() && !found; ++c) {
      const std::size_t r = reps[c];
      if (!close(s2(i, i), s2(r, r))) continue;
      bool same = true;
      for (std::size_t j = 0; j < n && same; ++j)
        if (j != i && j != r && !close(s2(i, j), s2(r, j))) same = false;
      if (same) {
        cls[i] = c;
        found = true;
      }
    }
    if (!found) {
      if (reps.size() == max_classes) return trivial(S);
      cls[i] = reps.size();
      reps.push_back(i);
    }
  }
  const std::size_t k = reps.size();
  BlockReduction r;
  r.cls = cls;
  r.sizes = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < n; ++i) r.sizes(cls[i]) += 1.0;
  r.s = Eigen::MatrixXd::Constant(k, k, -1.0);
  r.d = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double& v = r.s(cls[i], cls[j]);
      if (v < 0.0)
        v = s2(i, j);
      else if (!close(v, s2(i, j)))
        return trivial(S);
    }
  for (std::size_t c = 0; c < k; ++c) {
    const double diag = s2(reps[c], reps[c]);
    if (r.s(c, c) < 0.0) r.s(c, c) = diag;  // singleton class
    r.d(c) = diag - r.s(c, c);
  }
  return r;
}

Eigen::VectorXcd expand(const BlockReduction& r, const Eigen::VectorXcd& mc) {
  Eigen::VectorXcd m(r.cls.size());
  for (std::size_t i = 0; i < r.cls.size(); ++i) m(i) = mc(r.cls[i]);
  return m;
}

namespace {

double residual_of(const Eigen::MatrixXd& R, cplx z, const Eigen::VectorXcd& m) {
  const Eigen::VectorXcd Sm = R.cast<cplx>() * m;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    worst = std::max(worst, std::abs(1.0 / m(i) + z + Sm(i)));
  return worst;
}

bool upper(const Eigen::VectorXcd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!(m(i).imag() > 0.0)) return false;
  return true;
}

}  // namespace

double qve_residual(const Eigen::MatrixXd& sigma2, cplx z, const Eigen::VectorXcd& m) {
  return residual_of(sigma2, z, m);
}

QveSolution solve_reduced(const BlockReduction& r, cplx z, const QveOptions& opt,
                          const Eigen::VectorXcd* warm) {
  if (!(z.imag() > 0.0)) throw std::domain_error("QVE solve needs Im z > 0");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("QVE tolerance must be positive");
  const Eigen::MatrixXd R = r.reduced();
  const Eigen::MatrixXcd Rc = R.cast<cplx>();
  const auto k = static_cast<Eigen::Index>(r.k());
  Eigen::VectorXcd m = warm ? *warm : Eigen::VectorXcd::Constant(k, m_sc(z));
  double res = residual_of(R, z, m);
  double omega = opt.omega;
  std::size_t it = 0;
  // Newton step (I - diag(m^2) S) dm = m^2 (1/m + z + S m), halved until the
  // residual drops and Im m stays positive
  auto newton = [&] {
    const Eigen::VectorXcd F = m.cwiseInverse() + Eigen::VectorXcd::Constant(k, z) + Rc * m;
    const Eigen::VectorXcd m2 = m.cwiseProduct(m);
    Eigen::MatrixXcd J = (-m2).asDiagonal() * Rc;
    J.diagonal().array() += 1.0;
    const Eigen::VectorXcd dm = J.partialPivLu().solve(m2.cwiseProduct(F));
    double step = 1.0;
    for (int h = 0; h < 30; ++h, step *= 0.5) {
      const Eigen::VectorXcd trial = m + step * dm;
      if (!upper(trial)) continue;
      const double tr = residual_of(R, z, trial);
      if (tr < res) {
        m = trial;
        res = tr;
        return true;
      }
    }
    return false;
  };
  // Newton is retried once the fixed point has halved the residual it failed at
  double newton_below = std::numeric_limits<double>::infinity();
  while (res > opt.tol && it < opt.max_iter) {
    ++it;
    if (res < newton_below) {
      if (!newton()) newton_below = 0.5 * res;
      continue;
    }
    const Eigen::VectorXcd Sm = Rc * m;
    Eigen::VectorXcd target(k);
    for (Eigen::Index i = 0; i < k; ++i) target(i) = -1.0 / (z + Sm(i));
    const Eigen::VectorXcd trial = (1.0 - omega) * m + omega * target;
    const double tr = residual_of(R, z, trial);
    if (tr > res && omega > 1e-3) {
      omega *= 0.5;
      continue;
    }
    m = trial;
    res = tr;
  }
  if (res <= opt.tol) newton();
  if (res > opt.tol)
    throw std::runtime_error("QVE did not converge, last residual " + std::to_string(res));
  return {z, m, res, it};
}

QveSolution solve(const VarianceProfile& S, cplx z, const QveOptions& opt) {
  const BlockReduction r = reduce_profile(S);
  QveSolution red = solve_reduced(r, z, opt);
  QveSolution out{z, expand(r, red.m), 0.0, red.iterations};
  out.residual = qve_residual(S.sigma2, z, out.m);
  return out;
}

std::vector<double> default_eta_sequence() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

DensityEstimate density(const VarianceProfile& S, double E, const std::vector<double>& etas) {
  if (etas.size() < 3) throw std::invalid_argument("density needs at least three eta values");
  for (std::size_t i = 1; i < etas.size(); ++i)
    if (!(etas[i] < etas[i - 1]) || !(etas[i] > 0.0))
      throw std::invalid_argument("eta sequence must decrease and stay positive");
  const BlockReduction r = reduce_profile(S);
  DensityEstimate out;
  out.etas = etas;
  Eigen::VectorXcd warm;
  const double nd = static_cast<double>(S.n);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    QveOptions opt;
    opt.max_iter = 200000;
    const QveSolution sol =
        solve_reduced(r, cplx(E, etas[i]), opt, i == 0 ? nullptr : &warm);
    warm = sol.m;
    double v = 0.0;
    for (Eigen::Index c = 0; c < sol.m.size(); ++c) v += r.sizes(c) * sol.m(c).imag();
    out.values.push_back(v / (std::numbers::pi * nd));
  }
  // Neville extrapolation to eta = 0 through the last three points
  const std::size_t L = etas.size();
  const double x0 = etas[L - 3], x1 = etas[L - 2], x2 = etas[L - 1];
  const double y0 = out.values[L - 3], y1 = out.values[L - 2], y2 = out.values[L - 1];
  const double p01 = (x1 * y0 - x0 * y1) / (x1 - x0);
  const double p12 = (x2 * y1 - x1 * y2) / (x2 - x1);
  out.value = (x2 * p01 - x0 * p12) / (x2 - x0);
  const double d1 = y1 - y0, d2 = y2 - y1;
  if (d1 * d2 < 0.0) out.warning = true;
  if (out.value < 0.0) {
    out.value = 0.0;
    out.warning = out.warning || y2 > 1e-12;
  }
  return out;
}

Derivative m_derivative(const QveSolution& sol, const VarianceProfile& S) {
  const BlockReduction r = reduce_profile(S);
  const auto k = static_cast<Eigen::Index>(r.k());
  Eigen::VectorXcd mc(k);
  for (std::size_t i = r.cls.size(); i-- > 0;) mc(r.cls[i]) = sol.m(i);
  const Eigen::VectorXcd m2 = mc.cwiseProduct(mc);
  Eigen::MatrixXcd J = (-m2).asDiagonal() * r.reduced().cast<cplx>();
  J.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(J);
  Derivative d;
  d.m_prime = expand(r, lu.solve(m2));
  d.rcond = lu.rcond();
  d.ill_conditioned = d.rcond < 1e-10;
  return d;
}

FDecomposition f_operator(const VarianceProfile& S, cplx z, cplx w) {
  const Eigen::VectorXcd mz = solve(S, z).m;
  const Eigen::VectorXcd mw = solve(S, w).m;
  const auto n = static_cast<Eigen::Index>(S.n);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = std::sqrt(std::abs(mz(i) * mw(i)));
  FDecomposition f;
  f.F = q.asDiagonal() * S.sigma2 * q.asDiagonal();
  auto power = [&](const Eigen::MatrixXd& M, Eigen::VectorXd v, double& lam) {
    v.normalize();
    lam = 0.0;
    for (int it = 0; it < 200000; ++it) {
      Eigen::VectorXd u = M * v;
      const double nu = u.norm();
      if (nu == 0.0) {
        lam = 0.0;
        return v;
      }
      u /= nu;
      const double diff = (u - v).norm();
      v = u;
      lam = v.dot(M * v);
      if (diff < 1e-15) break;
    }
    return v;
  };
  f.v = power(f.F, Eigen::VectorXd::Ones(n), f.lambda1);
  if (f.v.sum() < 0.0) f.v = -f.v;
  f.A = f.F - f.lambda1 * f.v * f.v.transpose();
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = (i % 2 ? -1.0 : 1.0) + 0.01 * i / double(n);
  double lam2 = 0.0;
  power(f.A, start, lam2);
  f.gap = f.lambda1 - std::abs(lam2);
  if (f.gap < 1e-10)
    throw std::runtime_error("F(z,w) power iteration stagnated: no spectral gap above 1e-10");
  return f;
}

Eigen::MatrixXcd stability_inverse(const VarianceProfile& S, cplx z, cplx w, bool transposed) {
  const Eigen::VectorXcd mz = solve(S, z).m;
  const Eigen::VectorXcd mw = solve(S, w).m;
  const Eigen::VectorXcd mm = mz.cwiseProduct(mw);
  const Eigen::MatrixXcd Sc = S.sigma2.cast<cplx>();
  Eigen::MatrixXcd B = transposed ? Eigen::MatrixXcd(-Sc * mm.asDiagonal())
                                  : Eigen::MatrixXcd((-mm).asDiagonal() * Sc);
  B.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(B);
  if (lu.rcond() < 1e-14) throw std::runtime_error("stability operator is numerically singular");
  return lu.inverse();
}

Eigen::VectorXcd stability_solve(const VarianceProfile& S, cplx z, cplx w,
                                 const Eigen::VectorXcd& rhs, bool transposed) {
  if (!(z.imag() > 0.0) || !(w.imag() > 0.0))
    throw std::domain_error("stability_solve needs Im z, Im w > 0");
  const Eigen::VectorXcd mz = solve(S, z).m;
  const Eigen::VectorXcd mw = solve(S, w).m;
  const Eigen::VectorXcd mm = mz.cwiseProduct(mw);
  const Eigen::MatrixXcd Sc = S.sigma2.cast<cplx>();
  Eigen::MatrixXcd B = transposed ? Eigen::MatrixXcd(-Sc * mm.asDiagonal())
                                  : Eigen::MatrixXcd((-mm).asDiagonal() * Sc);
  B.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(B);
  if (lu.rcond() < 1e-14) throw std::runtime_error("stability operator is numerically singular");
  return lu.solve(rhs);
}

TComparison t_operator(const VarianceProfile& S, cplx z, cplx w, const MatrixSample& sample) {
  if (sample.n != S.n) throw std::invalid_argument("t_operator: dimension mismatch");
  if (!(z.imag() > 0.0) || !(w.imag() > 0.0))
    throw std::domain_error("t_operator needs Im z, Im w > 0");
  const Eigen::MatrixXcd Gz = resolvent(sample, z);
  const Eigen::MatrixXcd Gw = resolvent(sample, w);
  const auto n = static_cast<Eigen::Index>(S.n);
  // P_iy = G_iy(z) G_yi(w); T = S^T P since T_xy = sum_i sigma2_ix P_iy
  const Eigen::MatrixXcd P = Gz.cwiseProduct(Gw.transpose());
  TComparison t;
  t.empirical = S.sigma2.transpose().cast<cplx>() * P;
  const Eigen::VectorXcd mm = solve(S, z).m.cwiseProduct(solve(S, w).m);
  const Eigen::MatrixXcd SM = S.sigma2.cast<cplx>() * mm.asDiagonal();
  Eigen::MatrixXcd B = -SM;
  B.diagonal().array() += 1.0;
  t.predicted = B.partialPivLu().solve(SM);
  t.max_deviation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      t.max_deviation = std::max(t.max_deviation, std::abs(t.empirical(i, j) - t.predicted(i, j)));
  return t;
}

}  // namespace logcorr
