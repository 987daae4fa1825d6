#include "logcorr/dbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "logcorr/rng.hpp"
#include "logcorr/spectral.hpp"

namespace logcorr {

namespace {

void drift(const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t n = x.size();
  const double inv = 1.0 / static_cast<double>(n);
  out.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      if (l != k) s += 1.0 / (x[k] - x[l]);
    out[k] = s * inv - 0.5 * x[k];
  }
}

void euler(const std::vector<double>& x, const std::vector<double>& dr, double dt,
           const std::vector<double>& db, double sig, std::vector<double>& out) {
  out.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + dr[k] * dt + sig * db[k];
}

bool ordered(const std::vector<double>& x) {
  for (std::size_t k = 1; k < x.size(); ++k)
    if (!(x[k] > x[k - 1])) return false;
  return true;
}

double min_gap(const std::vector<double>& x) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < x.size(); ++k) g = std::min(g, x[k] - x[k - 1]);
  return g;
}

std::vector<double> prepare(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("DBM needs at least one particle");
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (x[k] < x[k - 1]) throw std::invalid_argument("DBM initial condition must be sorted");
    if (x[k] == x[k - 1]) x[k] = x[k - 1] + 1e-12;
  }
  return x;
}

double sigma(int beta, std::size_t n) {
  if (beta != 1 && beta != 2) throw std::invalid_argument("beta must be 1 or 2");
  return std::sqrt(2.0 / (beta * static_cast<double>(n)));
}

bool done(double t, double t_end) { return t_end - t <= 1e-12 * std::max(1.0, t_end); }

// Lockstep Euler-Maruyama for one or more paths sharing the noise.
class Integrator {
 public:
  Integrator(std::vector<DbmPath*> paths, std::vector<std::vector<double>> x0, int beta,
             const DtPolicy& pol, std::uint64_t seed)
      : paths_(std::move(paths)), x_(std::move(x0)), pol_(pol),
        rng_(derive(seed, hash_tag("dbm"))) {
    n_ = x_[0].size();
    sig_ = sigma(beta, n_);
    dr_.resize(x_.size());
    valid_.assign(x_.size(), false);
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      DbmPath& path = *paths_[p];
      path.beta = beta;
      path.n = n_;
      path.policy = pol;
      path.times = {0.0};
      path.particles = {x_[p]};
    }
  }

  void run(double t_end) {
    if (t_end < 0.0) throw std::invalid_argument("DBM end time must be nonnegative");
    if (t_end > 1.0) throw std::invalid_argument("DBM end time must be at most 1");
    std::vector<double> db(n_);
    while (!done(t_, t_end)) {
      double dt = std::min({pol_.dt_max, limit(), t_end - t_});
      ++outer_;
      // on a crossing, halve dt and redraw
      for (int halvings = 0;; ++halvings) {
        const double sq = std::sqrt(dt);
        for (std::size_t k = 0; k < n_; ++k) db[k] = sq * rng_.normal();
        if (attempt(dt, db)) break;
        if (halvings == pol_.max_halvings)
          throw std::runtime_error("DBM particle collision not resolved by substepping at step " +
                                   std::to_string(outer_) + " (t=" + std::to_string(t_) + ")");
        dt *= 0.5;
      }
    }
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      DbmPath& path = *paths_[p];
      if (pending_ > 0.0) {
        path.times.push_back(t_);
        path.particles.push_back(x_[p]);
        path.durations.push_back(pending_);
      }
    }
  }

 private:
  double limit() const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& x : x_) g = std::min(g, min_gap(x));
    return pol_.c * static_cast<double>(n_) * g * g;
  }

  bool attempt(double dt, const std::vector<double>& db) {
    trial_.resize(x_.size());
    for (std::size_t p = 0; p < x_.size(); ++p) {
      if (!valid_[p]) {
        drift(x_[p], dr_[p]);
        valid_[p] = true;
      }
      euler(x_[p], dr_[p], dt, db, sig_, trial_[p]);
      if (!ordered(trial_[p])) return false;
    }
    for (std::size_t p = 0; p < x_.size(); ++p) {
      x_[p].swap(trial_[p]);
      valid_[p] = false;
    }
    t_ += dt;
    pending_ += dt;
    ++steps_;
    const bool store = steps_ % pol_.store_stride == 0;
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      DbmPath& path = *paths_[p];
      path.steps = steps_;
      if (pol_.record_noise) path.noise.push_back({dt, db});
      if (store) {
        path.times.push_back(t_);
        path.particles.push_back(x_[p]);
        path.durations.push_back(pending_);
      }
    }
    if (store) pending_ = 0.0;
    return true;
  }

  std::vector<DbmPath*> paths_;
  std::vector<std::vector<double>> x_, dr_, trial_;
  std::vector<bool> valid_;
  DtPolicy pol_;
  CounterStream rng_;
  std::size_t n_ = 0, steps_ = 0, outer_ = 0;
  double sig_ = 0.0, t_ = 0.0, pending_ = 0.0;
};

}  // namespace

DbmPath run_dbm(std::vector<double> initial, int beta, double t_end, const DtPolicy& policy,
                std::uint64_t seed) {
  if (policy.store_stride == 0) throw std::invalid_argument("store_stride must be >= 1");
  DbmPath path;
  Integrator it({&path}, {prepare(std::move(initial))}, beta, policy, seed);
  it.run(t_end);
  return path;
}

std::pair<DbmPath, DbmPath> run_coupled(std::vector<double> init_a, std::vector<double> init_b,
                                        int beta, double t_end, const DtPolicy& policy,
                                        std::uint64_t seed) {
  if (init_a.size() != init_b.size())
    throw std::invalid_argument("coupled DBM needs equal dimensions");
  if (policy.store_stride == 0) throw std::invalid_argument("store_stride must be >= 1");
  DbmPath a, b;
  Integrator it({&a, &b}, {prepare(std::move(init_a)), prepare(std::move(init_b))}, beta, policy,
                seed);
  it.run(t_end);
  return {std::move(a), std::move(b)};
}

DbmPath replay_dbm(std::vector<double> initial, int beta, const std::vector<NoiseStep>& noise,
                   std::size_t store_stride) {
  std::vector<double> x = prepare(std::move(initial));
  const std::size_t n = x.size();
  const double sig = sigma(beta, n);
  DbmPath path;
  path.beta = beta;
  path.n = n;
  path.policy.store_stride = store_stride;
  path.times = {0.0};
  path.particles = {x};
  std::vector<double> dr, next;
  double t = 0.0, pending = 0.0;
  for (std::size_t s = 0; s < noise.size(); ++s) {
    if (noise[s].db.size() != n) throw std::invalid_argument("noise record has wrong width");
    drift(x, dr);
    euler(x, dr, noise[s].dt, noise[s].db, sig, next);
    if (!ordered(next))
      throw std::runtime_error("replayed DBM lost ordering at step " + std::to_string(s));
    x.swap(next);
    t += noise[s].dt;
    pending += noise[s].dt;
    if ((s + 1) % store_stride == 0) {
      path.times.push_back(t);
      path.particles.push_back(x);
      path.durations.push_back(pending);
      pending = 0.0;
    }
  }
  if (pending > 0.0) {
    path.times.push_back(t);
    path.particles.push_back(x);
    path.durations.push_back(pending);
  }
  path.steps = noise.size();
  path.noise = noise;
  return path;
}

std::vector<KernelState> evolve_kernel(const std::vector<double>& u0, const DbmPath& path,
                                       std::size_t keep_every) {
  const std::size_t n = path.n;
  if (u0.size() != n) throw std::invalid_argument("kernel initial data has wrong length");
  if (keep_every == 0) keep_every = 1;
  KernelState s;
  s.u = u0;
  s.v.resize(n);
  for (std::size_t k = 0; k < n; ++k) s.v[k] = std::abs(u0[k]);
  s.time = path.times.front();
  std::vector<KernelState> out{s};
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<double> du(n), dv(n);
  for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
    const double dt = path.durations.size() + 1 == path.times.size() ? path.durations[i]
                                                                     : path.times[i + 1] - path.times[i];
    const std::vector<double>& x = path.particles[i];
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double row = 0.0, a = 0.0, b = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        if (l == k) continue;
        const double d = x[k] - x[l];
        const double w = inv / (d * d);
        row += w;
        a += w * (s.u[l] - s.u[k]);
        b += w * (s.v[l] - s.v[k]);
      }
      worst = std::max(worst, row);
      du[k] = a;
      dv[k] = b;
    }
    if (dt * worst > 1.0)
      throw std::runtime_error("kernel Euler step unstable (dt * rate = " +
                               std::to_string(dt * worst) +
                               "); store the path with a smaller stride or lower dt");
    for (std::size_t k = 0; k < n; ++k) {
      s.u[k] += dt * du[k];
      s.v[k] += dt * dv[k];
    }
    s.time = path.times[i + 1];
    if ((i + 1) % keep_every == 0 || i + 2 == path.times.size()) out.push_back(s);
  }
  return out;
}

namespace {

cplx observable(const DbmPath& path, const std::vector<KernelState>& kernel, cplx z, double t,
                bool tilde) {
  if (z.imag() == 0.0) throw std::domain_error("observable_f needs Im z != 0");
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  std::size_t ip = path.times.size();
  for (std::size_t i = 0; i < path.times.size(); ++i)
    if (std::abs(path.times[i] - t) <= tol) ip = i;
  const KernelState* ks = nullptr;
  for (const auto& k : kernel)
    if (std::abs(k.time - t) <= tol) ks = &k;
  if (ip == path.times.size() || !ks)
    throw std::invalid_argument("observable_f: t is not on the stored grid");
  const std::vector<double>& x = path.particles[ip];
  const std::vector<double>& u = tilde ? ks->v : ks->u;
  cplx s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += u[k] / (x[k] - z);
  return std::exp(-0.5 * t) * s;
}

}  // namespace

cplx observable_f(const DbmPath& path, const std::vector<KernelState>& kernel, cplx z, double t) {
  return observable(path, kernel, z, t, false);
}

cplx observable_f_tilde(const DbmPath& path, const std::vector<KernelState>& kernel, cplx z,
                        double t) {
  return observable(path, kernel, z, t, true);
}

double rigidity_report(const DbmPath& path) {
  const std::size_t n = path.n;
  const std::vector<double> g = quantiles(n);
  const double base = std::pow(static_cast<double>(n), -2.0 / 3.0);
  double worst = 0.0;
  for (const auto& x : path.particles)
    for (std::size_t k = 1; k <= n; ++k) {
      const double kh = static_cast<double>(std::min(k, n + 1 - k));
      worst = std::max(worst, std::abs(x[k - 1] - g[k - 1]) / (base * std::pow(kh, -1.0 / 3.0)));
    }
  return worst;
}

double ubar(const std::vector<double>& a, const std::vector<double>& b, double t, std::size_t k,
            double alpha) {
  const std::size_t n = a.size();
  if (b.size() != n || n == 0) throw std::invalid_argument("ubar needs equal nonempty spectra");
  if (!(t > 0.0)) throw std::invalid_argument("ubar needs t > 0");
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  if (kd < alpha * nd || kd > (1.0 - alpha) * nd || k < 1)
    throw std::out_of_range("ubar: index outside the bulk");
  const std::vector<double> g = quantiles(n);
  const double gk = g[k - 1];
  // weights Im 1/(gamma_j - gamma_k - i t), normalized by their own sum
  double wsum = 0.0, acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = g[j] - gk;
    const double w = t / (d * d + t * t);
    wsum += w;
    acc += w * (a[j] - b[j]);
  }
  return acc / wsum;
}

nlohmann::json noise_to_json(const std::vector<NoiseStep>& noise) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : noise) j.push_back({{"dt", s.dt}, {"db", s.db}});
  return j;
}

std::vector<NoiseStep> noise_from_json(const nlohmann::json& j) {
  std::vector<NoiseStep> out;
  for (const auto& s : j) out.push_back({s.at("dt").get<double>(), s.at("db").get<std::vector<double>>()});
  return out;
}

std::string path_to_csv(const DbmPath& p) {
  std::ostringstream os;
  os.precision(17);
  os << "time,k,x\n";
  for (std::size_t i = 0; i < p.times.size(); ++i)
    for (std::size_t k = 0; k < p.n; ++k) os << p.times[i] << "," << k + 1 << "," << p.particles[i][k] << "\n";
  return os.str();
}

}  // namespace logcorr
