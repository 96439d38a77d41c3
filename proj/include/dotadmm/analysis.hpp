#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dotadmm/engine.hpp"
#include "dotadmm/errors.hpp"
#include "dotadmm/rng.hpp"
#include "dotadmm/topology.hpp"

namespace dotadmm {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Parameters of the linear convergence rate
//   mu = sqrt(1 - (1 - alpha) p_min / (alpha lambda)).
// gamma is the metric subregularity constant of the synchronous operator,
// lambda the proof parameter, nu_e the per-tick mean bound on the stacked
// update error, sigma the per-tick drift bound of the solution path.
struct RateParameters {
  double alpha = 0.5;
  double p_min = 1.0;
  double p_max = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;
  double mu = 0.0;
  double nu_e = 0.0;
  double sigma = 0.0;
};

// Fills alpha, p_min, gamma, lambda, mu. lambda must strictly exceed
// (1 - alpha) p_min / alpha for mu to be a real number in (0, 1); when
// gamma^2 already does, lambda = gamma^2, otherwise the floor is inflated
// by a relative 1e-9. p_max defaults to p_min; callers set p_max, nu_e and
// sigma from the scenario.
inline RateParameters compute_mu(double alpha, double p_min, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidParams("compute_mu: alpha must lie in (0, 1)");
  if (!(p_min > 0.0 && p_min <= 1.0))
    throw InvalidParams("compute_mu: p_min must lie in (0, 1]");
  if (!(gamma > 0.0)) throw InvalidParams("compute_mu: gamma must be > 0");
  RateParameters rp;
  rp.alpha = alpha;
  rp.p_min = p_min;
  rp.p_max = p_min;
  rp.gamma = gamma;
  const double floor = (1.0 - alpha) * p_min / alpha;
  rp.lambda = std::max(gamma * gamma, floor * (1.0 + 1e-9));
  rp.mu = std::sqrt(1.0 - floor / rp.lambda);
  return rp;
}

// Mean-error convergence bound after k ticks:
//   B(k) = sqrt(p_max / p_min) *
//          [mu^k d0 + sum_{h=1..k} mu^(k-h) (err_mean[h-1] + mu sigma)].
// Accumulated recursively; never forms mu^(k-h) for large exponents.
class EnvelopeAccumulator {
 public:
  EnvelopeAccumulator(const RateParameters& rp, double d0)
      : rp_(rp), pow_mu_(1.0), tail_(0.0), d0_(d0) {
    if (!(rp.mu >= 0.0 && rp.mu < 1.0))
      throw InvalidParams("bound: mu must lie in [0, 1)");
    if (!(rp.p_min > 0.0 && rp.p_max >= rp.p_min))
      throw InvalidParams("bound: need 0 < p_min <= p_max");
    if (d0 < 0.0) throw InvalidParams("bound: d0 must be >= 0");
  }

  // Advances one tick with the given mean error bound and returns B(k).
  double advance(double err_mean) {
    pow_mu_ *= rp_.mu;
    tail_ = rp_.mu * tail_ + err_mean + rp_.mu * rp_.sigma;
    return value();
  }

  // B at the current tick (B(0) = sqrt(p_max/p_min) d0 before any advance).
  double value() const {
    return std::sqrt(rp_.p_max / rp_.p_min) * (pow_mu_ * d0_ + tail_);
  }

 private:
  RateParameters rp_;
  double pow_mu_;
  double tail_;
  double d0_;
};

inline double envelope_mean_bound(const RateParameters& rp, double d0,
                                  std::span<const double> err_means, int k) {
  if (k < 0) throw InvalidParams("bound: k must be >= 0");
  if (static_cast<int>(err_means.size()) < k)
    throw InvalidParams("bound: need an error mean per tick");
  EnvelopeAccumulator acc(rp, d0);
  double b = acc.value();
  for (int h = 0; h < k; ++h) b = acc.advance(err_means[h]);
  return b;
}

// Activation-weighted norm |||z|||^2 = sum_l ||z_l||^2 / p_l, with one
// probability per block of size z.size() / probs.size(). It sandwiches the
// Euclidean norm: p_min |||z|||^2 <= ||z||^2 <= p_max |||z|||^2.
inline double weighted_norm(const Eigen::VectorXd& z,
                            const Eigen::VectorXd& probs) {
  if (probs.size() == 0 || z.size() % probs.size() != 0)
    throw DimensionMismatch("weighted_norm: block count mismatch");
  const Eigen::Index bs = z.size() / probs.size();
  double sq = 0.0;
  for (Eigen::Index l = 0; l < probs.size(); ++l) {
    if (!(probs[l] > 0.0))
      throw InvalidParams("weighted_norm: probabilities must be positive");
    sq += z.segment(l * bs, bs).squaredNorm() / probs[l];
  }
  return std::sqrt(sq);
}

struct GammaOptions {
  double base_residual = 1e-9;   // accept z_star only below this residual
  double limit_residual = 1e-10; // stop the limit iteration here
  double skip_residual = 1e-12;  // samples this close to fixed are skipped
  int max_iterations = 200000;
};

// Samples an over-estimate of the metric subregularity constant of an
// operator T around a fixed point z_star: for random z near z_star,
//   gamma_hat = max ||z - limit(z)|| / ||z - T(z)||,
// where limit(z) follows the exact iteration from z down to a tiny residual.
// ||z - limit(z)|| upper-bounds the true distance to the fixed set, so the
// estimate errs on the conservative side.
template <class Op>
double estimate_gamma(Op&& T, const Eigen::VectorXd& z_star, int samples,
                      double radius, RngStream& rng,
                      const GammaOptions& opt = {}) {
  if (samples <= 0) throw InvalidParams("estimate_gamma: samples must be > 0");
  if (!(radius > 0.0)) throw InvalidParams("estimate_gamma: radius must be > 0");
  {
    const Eigen::VectorXd tz = T(z_star);
    if ((z_star - tz).norm() > opt.base_residual)
      throw NonConvergent("estimate_gamma: z_star is not near-fixed");
  }
  double gamma_hat = 0.0;
  int used = 0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd dir = rng.gaussian_vector(z_star.size());
    const double nrm = dir.norm();
    if (nrm == 0.0) continue;
    const Eigen::VectorXd z = z_star + (radius * rng.uniform01() / nrm) * dir;
    Eigen::VectorXd cur = z;
    Eigen::VectorXd next = T(cur);
    const double res = (cur - next).norm();
    if (res < opt.skip_residual) continue;
    int it = 0;
    while ((cur - next).norm() > opt.limit_residual) {
      cur = std::move(next);
      next = T(cur);
      if (++it > opt.max_iterations)
        throw NonConvergent("estimate_gamma: limit iteration did not settle");
    }
    gamma_hat = std::max(gamma_hat, (z - next).norm() / res);
    ++used;
  }
  if (used == 0)
    throw NonConvergent("estimate_gamma: every sample was already fixed");
  return gamma_hat;
}

// Iterates an operator until its fixed-point residual drops below tol.
// Returns the final iterate. The companion of estimate_gamma: it produces
// the reference fixed point and initial-distance over-estimates.
template <class Op>
Eigen::VectorXd iterate_to_fixed_point(Op&& T, Eigen::VectorXd z, double tol,
                                       int max_iterations = 200000) {
  Eigen::VectorXd next = T(z);
  int it = 0;
  while ((z - next).norm() > tol) {
    z = std::move(next);
    next = T(z);
    if (++it > max_iterations)
      throw NonConvergent("fixed-point iteration did not reach tolerance");
  }
  return next;
}

// Per-tick diagnostics of a run.
struct TickMetrics {
  int k = 0;
  double tracking_error = 0.0;       // sqrt(sum_i ||x_i - x_star||^2)
  double consensus_error = 0.0;      // max_{i,j} ||x_i - x_j||
  double fixed_point_residual = 0.0; // ||z - T_k(z)||
  double theory_bound = kNaN;        // B(k); NaN when no rate is configured
};

inline TickMetrics compute_tick_metrics(const AgentSystem& sys,
                                        const Eigen::VectorXd& x_star,
                                        const ExactOperator& T,
                                        double theory_bound = kNaN) {
  const Topology& g = *sys.topology;
  const int p = sys.p;
  if (x_star.size() != p)
    throw DimensionMismatch("tick metrics: x_star must be a p-vector");
  TickMetrics m;
  m.k = sys.k;
  double tsq = 0.0;
  for (int i = 0; i < g.n; ++i)
    tsq += (sys.x.segment(static_cast<Eigen::Index>(i) * p, p) - x_star)
               .squaredNorm();
  m.tracking_error = std::sqrt(tsq);
  double cons = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      cons = std::max(
          cons, (sys.x.segment(static_cast<Eigen::Index>(i) * p, p) -
                 sys.x.segment(static_cast<Eigen::Index>(j) * p, p))
                    .norm());
  m.consensus_error = cons;
  m.fixed_point_residual = T.residual(sys.z);
  m.theory_bound = theory_bound;
  return m;
}

// Exact Euclidean distance from z to the fixed-point set of the synchronous
// operator for differentiable local costs. The set is affine:
//   z_ij + z_ji = 2 rho x_star            for every edge,
//   sum_{j in N(i)} z_ij = rho eta_i x_star + grad f_i(x_star)  for every i.
// Splitting z into symmetric and antisymmetric edge parts decouples the
// projection; the antisymmetric part reduces to one graph-Laplacian solve
// per evaluation. Thread-safe after construction.
class FixedSetDistance {
 public:
  FixedSetDistance(std::shared_ptr<const Topology> g, int p, double rho,
                   Eigen::VectorXd x_star,
                   std::vector<Eigen::VectorXd> gradients)
      : g_(std::move(g)),
        p_(p),
        rho_(rho),
        x_star_(std::move(x_star)),
        grads_(std::move(gradients)) {
    const Topology& gg = *g_;
    if (static_cast<int>(grads_.size()) != gg.n)
      throw DimensionMismatch("fixed set: one gradient per agent");
    if (x_star_.size() != p_)
      throw DimensionMismatch("fixed set: x_star must be a p-vector");
    for (const auto& gr : grads_)
      if (gr.size() != p_)
        throw DimensionMismatch("fixed set: gradient dimension");
    for (int ell = 0; ell < gg.xi; ++ell) {
      const auto [i, j] = gg.edges[ell];
      if (i < j) pairs_.emplace_back(i, j);
    }
    // Laplacian of the non-self graph, regularized on the all-ones
    // direction; right-hand sides are orthogonal to it, so solutions match
    // the pseudo-inverse.
    Eigen::MatrixXd lap = Eigen::MatrixXd::Constant(
        gg.n, gg.n, 1.0 / static_cast<double>(gg.n));
    for (const auto& [i, j] : pairs_) {
      lap(i, i) += 1.0;
      lap(j, j) += 1.0;
      lap(i, j) -= 1.0;
      lap(j, i) -= 1.0;
    }
    lap_.compute(lap);
    if (lap_.info() != Eigen::Success)
      throw SingularSystem("fixed set: Laplacian factorization failed");
  }

  double distance(const Eigen::VectorXd& z) const {
    const Topology& g = *g_;
    if (z.size() != static_cast<Eigen::Index>(g.xi) * p_)
      throw DimensionMismatch("fixed set: state size mismatch");
    const double s2 = std::sqrt(2.0);
    double sq = 0.0;
    Eigen::MatrixXd r(g.n, p_);
    for (int i = 0; i < g.n; ++i)
      r.row(i) = -s2 * grads_[i].transpose();
    for (const auto& [i, j] : pairs_) {
      const Eigen::VectorXd zij =
          z.segment(static_cast<Eigen::Index>(g.index_of(i, j)) * p_, p_);
      const Eigen::VectorXd zji =
          z.segment(static_cast<Eigen::Index>(g.index_of(j, i)) * p_, p_);
      sq += (zij + zji - 2.0 * rho_ * x_star_).squaredNorm() / 2.0;
      const Eigen::VectorXd a = (zij - zji) / s2;
      r.row(i) += a.transpose();
      r.row(j) -= a.transpose();
    }
    for (int i = 0; i < g.n; ++i)
      sq += (z.segment(static_cast<Eigen::Index>(g.index_of(i, i)) * p_, p_) -
             rho_ * x_star_)
                .squaredNorm();
    // Deflate the numerically nonzero mean so the regularized solve equals
    // the pseudo-inverse solve.
    r.rowwise() -= r.colwise().mean();
    const Eigen::MatrixXd y = lap_.solve(r);
    for (const auto& [i, j] : pairs_)
      sq += (y.row(i) - y.row(j)).squaredNorm();
    return std::sqrt(sq);
  }

 private:
  std::shared_ptr<const Topology> g_;
  int p_;
  double rho_;
  Eigen::VectorXd x_star_;
  std::vector<Eigen::VectorXd> grads_;
  std::vector<std::pair<int, int>> pairs_;
  Eigen::LLT<Eigen::MatrixXd> lap_;
};

// Least-squares slope of log(err) over the transient, reported as the
// per-tick contraction factor exp(slope). The window ends where the curve
// first dips within a factor of 10 of its tail plateau (mean of the last
// tenth); flat curves fall back to the full horizon.
inline double estimate_linear_rate(std::span<const double> errors) {
  const int K = static_cast<int>(errors.size());
  if (K < 4) throw InvalidParams("rate estimate: need at least 4 ticks");
  const int tail = std::max(1, K / 10);
  double floor = 0.0;
  for (int k = K - tail; k < K; ++k) floor += errors[k];
  floor /= tail;
  int end = K;
  for (int k = 0; k < K; ++k) {
    if (errors[k] <= 10.0 * floor) {
      end = k + 1;
      break;
    }
  }
  if (end < 4) end = std::min(K, 4);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (int k = 0; k < end; ++k) {
    const double y = std::log(std::max(errors[k], 1e-300));
    sx += k;
    sy += y;
    sxx += static_cast<double>(k) * k;
    sxy += k * y;
    ++cnt;
  }
  const double denom = cnt * sxx - sx * sx;
  if (denom == 0.0) return 1.0;
  const double slope = (cnt * sxy - sx * sy) / denom;
  return std::exp(slope);
}

}  // namespace dotadmm
