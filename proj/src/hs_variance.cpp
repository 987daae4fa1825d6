// Contour-integral evaluation of the linear-statistic variance for
// block-reducible variance profiles.
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "logcorr/clt.hpp"
#include "logcorr/qve.hpp"
#include "logcorr/quadrature.hpp"
#include "logcorr/spectral.hpp"

namespace logcorr {

namespace {

constexpr double pi = std::numbers::pi;

// Elements b + diag(d) of the algebra of block-constant matrices plus a
// class-constant diagonal; products of block parts carry the class sizes.
template <int K>
struct Pair {
  using Mat = Eigen::Matrix<cplx, K, K, 0, (K > 0 ? K : 8), (K > 0 ? K : 8)>;
  using Vec = Eigen::Matrix<cplx, K, 1, 0, (K > 0 ? K : 8), 1>;
  Mat b;
  Vec d;
};

template <int K>
struct Algebra {
  using P = Pair<K>;
  using Mat = typename P::Mat;
  using Vec = typename P::Vec;
  Eigen::Matrix<double, K, 1, 0, (K > 0 ? K : 8), 1> n;

  P mul(const P& x, const P& y) const {
    P r;
    r.b = x.b * n.template cast<cplx>().asDiagonal() * y.b + x.b * y.d.asDiagonal() +
          x.d.asDiagonal() * y.b;
    r.d = x.d.cwiseProduct(y.d);
    return r;
  }
  P inv(const P& x) const {
    P r;
    r.d = x.d.cwiseInverse();
    Mat lhs = x.b * n.template cast<cplx>().asDiagonal();
    lhs.diagonal() += x.d;
    r.b = -lhs.partialPivLu().solve(Mat(x.b * r.d.asDiagonal()));
    return r;
  }
  // x * diag(v) and diag(v) * x
  P right(const P& x, const Vec& v) const { return {x.b * v.asDiagonal(), x.d.cwiseProduct(v)}; }
};

struct Node {
  double x, y;
  cplx a;                 // quadrature weight times dbar of the extension
  Eigen::VectorXcd m;     // per class
  Eigen::VectorXcd mp;    // m'
  Eigen::VectorXcd c;     // column sums of (1 - m^2 S)^{-1}
};

template <int K>
double evaluate(const std::vector<Node>& nodes, const BlockReduction& r, double k4) {
  using A = Algebra<K>;
  using P = typename A::P;
  using Vec = typename P::Vec;
  const auto k = static_cast<Eigen::Index>(r.k());
  A alg;
  alg.n = r.sizes;
  P S;
  S.b = r.s.cast<cplx>();
  S.d = r.d.cast<cplx>();
  Eigen::VectorXd sjj(k);
  for (Eigen::Index c = 0; c < k; ++c) sjj(c) = r.s(c, c) + r.d(c);

  auto kernel = [&](const Node& z, const Vec& mw, const Vec& mpw) {
    const Vec mz = z.m;
    const Vec p = mz.cwiseProduct(mw);
    const Vec pp = mz.cwiseProduct(mpw);
    P X = alg.right(S, p);
    X.b = -X.b;
    X.d = Vec::Ones(k) - X.d;
    const P W = alg.mul(alg.inv(X), S);
    const P WPp = alg.right(W, pp);
    const P WP = alg.right(W, p);
    const P Rp = alg.mul(WPp, WP);
    cplx t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const cplx diag = WPp.b(c, c) + WPp.d(c) + Rp.b(c, c) + Rp.d(c);
      t1 += r.sizes(c) * z.c(c) * mz(c) * diag;
      t2 -= r.sizes(c) * z.c(c) * sjj(c) * mpw(c) * mz(c) * mz(c);
    }
    if (k4 != 0.0) {
      for (Eigen::Index c = 0; c < k; ++c) {
        for (Eigen::Index e = 0; e < k; ++e) {
          const double w = r.sizes(c) * r.sizes(e) * r.s(c, e) * r.s(c, e);
          t3 += w * z.c(c) * mz(e) * mz(c) * mz(c) * (mpw(e) * mw(c) + mw(e) * mpw(c));
        }
        const double corr = r.sizes(c) * (sjj(c) * sjj(c) - r.s(c, c) * r.s(c, c));
        t3 += corr * z.c(c) * mz(c) * mz(c) * mz(c) * 2.0 * mw(c) * mpw(c);
      }
      t3 *= k4;
    }
    return 2.0 * t1 + t2 + t3;
  };

  double total = 0.0;
  for (const Node& zp : nodes) {
    for (const Node& wq : nodes) {
      const Vec mw = wq.m, mpw = wq.mp;
      const cplx same = zp.a * wq.a * kernel(zp, mw, mpw);
      const cplx cross =
          zp.a * std::conj(wq.a) * kernel(zp, Vec(mw.conjugate()), Vec(mpw.conjugate()));
      total += 2.0 * (same.real() + cross.real());
    }
  }
  return total / (pi * pi);
}

double run_mesh(const TestFunction& f, const BlockReduction& r, double k4, double y_min,
                std::size_t x_panels, std::size_t x_per_panel, std::size_t y_nodes) {
  std::vector<double> xb;
  for (std::size_t i = 0; i <= x_panels; ++i)
    xb.push_back(f.lo + (f.hi - f.lo) * static_cast<double>(i) / x_panels);
  const Rule rx = composite(xb, x_per_panel);
  // y in [y_min, 1] uniform in log y, then [1, 2] where the y-cutoff varies
  Rule ry;
  if (y_min < 1.0) {
    const Rule t = gauss_legendre(y_nodes, std::log(y_min), 0.0);
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      ry.x.push_back(std::exp(t.x[i]));
      ry.w.push_back(t.w[i] * std::exp(t.x[i]));
    }
  }
  const Rule t2 = gauss_legendre(std::max<std::size_t>(y_nodes / 2, 6), std::max(1.0, y_min), 2.0);
  ry.x.insert(ry.x.end(), t2.x.begin(), t2.x.end());
  ry.w.insert(ry.w.end(), t2.w.begin(), t2.w.end());

  const Eigen::MatrixXd R = r.reduced();
  std::vector<Node> nodes;
  for (std::size_t j = 0; j < ry.x.size(); ++j) {
    const double y = ry.x[j];
    const double chi = smooth_cutoff(y, 1.0, 2.0), dchi = smooth_cutoff_d1(y, 1.0, 2.0);
    Eigen::VectorXcd warm;
    for (std::size_t i = 0; i < rx.x.size(); ++i) {
      const double x = rx.x[i];
      const cplx g = y * f.d2f(x) * chi + cplx(f.f(x), y * f.df(x)) * dchi;
      const cplx a = cplx(0.0, 0.5) * g * rx.w[i] * ry.w[j];
      if (a == 0.0) continue;
      QveOptions opt;
      opt.max_iter = 100000;
      const QveSolution sol = solve_reduced(r, cplx(x, y), opt);
      Node nd{x, y, a, sol.m, {}, {}};
      const Eigen::VectorXcd m2 = sol.m.cwiseProduct(sol.m);
      Eigen::MatrixXcd J = (-m2).asDiagonal() * R.cast<cplx>();
      J.diagonal().array() += 1.0;
      nd.mp = J.partialPivLu().solve(m2);
      Eigen::MatrixXcd Jc = -R.cast<cplx>() * m2.asDiagonal();
      Jc.diagonal().array() += 1.0;
      nd.c = Jc.partialPivLu().solve(Eigen::VectorXcd::Ones(sol.m.size()));
      nodes.push_back(std::move(nd));
    }
  }
  switch (r.k()) {
    case 1: return evaluate<1>(nodes, r, k4);
    case 2: return evaluate<2>(nodes, r, k4);
    case 3: return evaluate<3>(nodes, r, k4);
    default: return evaluate<Eigen::Dynamic>(nodes, r, k4);
  }
}

}  // namespace

double variance_wigner_type(const TestFunction& f, const VarianceProfile& S, EntryLaw law,
                            const HsMesh& mesh) {
  const BlockReduction r = reduce_profile(S, 8);
  if (r.k() > 8)
    throw std::invalid_argument(
        "variance_wigner_type needs a profile reducible to at most 8 classes");
  const double n_eff = mesh.n_eff > 0.0 ? mesh.n_eff : static_cast<double>(S.n);
  const double y_min = mesh.y_min > 0.0 ? mesh.y_min : std::pow(n_eff, -1.0 + mesh.a);
  const double k4 = entry_cumulants(law).s4;
  const double coarse =
      run_mesh(f, r, k4, y_min, mesh.x_panels, mesh.x_per_panel, mesh.y_nodes);
  if (!mesh.check_refinement) return coarse;
  const double fine = run_mesh(f, r, k4, y_min, mesh.x_panels, mesh.x_per_panel + 2,
                               mesh.y_nodes + mesh.y_nodes / 2);
  // the quartic part can cancel the rest; judge the change against the larger part
  double scale = std::abs(fine);
  if (k4 != 0.0)
    scale = std::max(scale, std::abs(run_mesh(f, r, 0.0, y_min, mesh.x_panels, mesh.x_per_panel + 2,
                                              mesh.y_nodes + mesh.y_nodes / 2)));
  if (std::abs(fine - coarse) > 5e-2 * scale + 1e-8)
    throw std::runtime_error("variance_wigner_type: mesh too coarse (refinement changed the value from " +
                             std::to_string(coarse) + " to " + std::to_string(fine) + ")");
  return fine;
}

}  // namespace logcorr
