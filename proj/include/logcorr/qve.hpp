#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "logcorr/ensemble.hpp"

namespace logcorr {

using cplx = std::complex<double>;

struct QveOptions {
  double tol = 1e-12;
  std::size_t max_iter = 20000;
  double omega = 0.5;
};

struct QveSolution {
  cplx z;
  Eigen::VectorXcd m;
  double residual = 0.0;
  std::size_t iterations = 0;
};

// Index classes of a block-constant profile, up to a class-constant diagonal
// correction: sigma2_ij = s(c_i, c_j) + [i == j] d(c_i). Every profile has the
// trivial reduction into singletons.
struct BlockReduction {
  std::vector<std::size_t> cls;  // class of each index
  Eigen::VectorXd sizes;         // n_c
  Eigen::MatrixXd s;             // s(c, e)
  Eigen::VectorXd d;             // diagonal correction per class
  std::size_t k() const { return static_cast<std::size_t>(sizes.size()); }
  // (S x)_c for class-constant x: sum_e s(c,e) n_e x_e + d_c x_c
  Eigen::MatrixXd reduced() const;
};

BlockReduction reduce_profile(const VarianceProfile& S, std::size_t max_classes = 64);

QveSolution solve(const VarianceProfile& S, cplx z, const QveOptions& opt = {});
// Solve on the reduced system; m has one entry per class. warm may be null.
QveSolution solve_reduced(const BlockReduction& r, cplx z, const QveOptions& opt = {},
                          const Eigen::VectorXcd* warm = nullptr);
Eigen::VectorXcd expand(const BlockReduction& r, const Eigen::VectorXcd& mc);

double qve_residual(const Eigen::MatrixXd& sigma2, cplx z, const Eigen::VectorXcd& m);

struct DensityEstimate {
  double value = 0.0;
  bool warning = false;
  std::vector<double> etas;
  std::vector<double> values;
};

std::vector<double> default_eta_sequence();
DensityEstimate density(const VarianceProfile& S, double E,
                        const std::vector<double>& etas = default_eta_sequence());

struct Derivative {
  Eigen::VectorXcd m_prime;
  double rcond = 1.0;
  bool ill_conditioned = false;
};

Derivative m_derivative(const QveSolution& sol, const VarianceProfile& S);

struct FDecomposition {
  double lambda1 = 0.0;
  Eigen::VectorXd v;
  Eigen::MatrixXd A;
  double gap = 0.0;
  Eigen::MatrixXd F;
};

FDecomposition f_operator(const VarianceProfile& S, cplx z, cplx w);

// (I - diag(m(z)m(w)) S) x = rhs, or (I - S diag(m(z)m(w))) x = rhs when transposed
Eigen::VectorXcd stability_solve(const VarianceProfile& S, cplx z, cplx w,
                                 const Eigen::VectorXcd& rhs, bool transposed = false);
Eigen::MatrixXcd stability_inverse(const VarianceProfile& S, cplx z, cplx w,
                                   bool transposed = false);

struct TComparison {
  Eigen::MatrixXcd empirical;
  Eigen::MatrixXcd predicted;
  double max_deviation = 0.0;
};

TComparison t_operator(const VarianceProfile& S, cplx z, cplx w, const MatrixSample& sample);

}  // namespace logcorr
