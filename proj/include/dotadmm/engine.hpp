#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dotadmm/costs.hpp"
#include "dotadmm/errors.hpp"
#include "dotadmm/rng.hpp"
#include "dotadmm/topology.hpp"

namespace dotadmm {

// Relaxation and penalty parameters of the iteration. alpha must lie in
// (0, 1), rho must be positive.
struct AlgorithmParams {
  double alpha = 0.5;
  double rho = 1.0;
  ProxConfig prox;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw InvalidParams("params: alpha must lie in (0, 1)");
    if (!(rho > 0.0)) throw InvalidParams("params: rho must be positive");
    if (!(prox.threshold > 0.0))
      throw InvalidParams("params: prox threshold must be positive");
    if (prox.max_inner_iterations < 1)
      throw InvalidParams("params: inner iteration cap must be >= 1");
  }
};

// Uniform mid-tread-style quantizer with saturation:
//   q(x) = q_max            for x > q_max
//   q(x) = -q_max           for x < -q_max
//   q(x) = delta * floor(x / delta) otherwise.
// The floor is computed against the representable grid {fl(k * delta)} so
// that q(q(x)) == q(x) holds exactly in floating point.
struct Quantizer {
  double delta = 0.1;
  double q_max = 10.0;

  void validate() const {
    if (!(delta > 0.0)) throw InvalidParams("quantizer: delta must be > 0");
    if (!(q_max > 0.0)) throw InvalidParams("quantizer: q_max must be > 0");
  }

  double apply(double x) const {
    if (x < -q_max) return -q_max;
    if (x > q_max) return q_max;
    double r = std::floor(x / delta);
    double y = r * delta;
    // Guard against the division landing one grid cell off.
    if (y > x) {
      r -= 1.0;
      y = r * delta;
    } else if ((r + 1.0) * delta <= x) {
      r += 1.0;
      y = r * delta;
    }
    return y;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = apply(x[i]);
    return out;
  }
};

inline Eigen::VectorXd quantize(const Quantizer& q, const Eigen::VectorXd& x) {
  return q.apply(x);
}

// Stochastic channel acting on every directed edge. activation_prob[ell] is
// the probability that edge ell updates at a tick, i.e. that its sender has
// finished computing AND the packet arrived. One independent Bernoulli draw
// per directed edge per tick.
//
// noise_u bounds the per-component computation error added to a freshly
// computed state; noise_v bounds the per-component channel noise added to a
// delivered packet. Both are uniform on the L-infinity ball; 0 disables the
// source (and consumes no randomness).
//
// Self-loop edges carry an agent's packet to itself. By default they skip
// the quantizer and the channel noise (there is no physical transmission)
// while still inheriting the sender's computation error and activation;
// lossy_self_loops treats them like any other edge.
struct ChannelModel {
  Eigen::VectorXd activation_prob;
  double noise_v = 0.0;
  double noise_u = 0.0;
  std::optional<Quantizer> quantizer;
  bool lossy_self_loops = false;

  static ChannelModel synchronous(const Topology& g) {
    ChannelModel ch;
    ch.activation_prob = Eigen::VectorXd::Ones(g.xi);
    return ch;
  }

  void validate(const Topology& g) const {
    if (activation_prob.size() != g.xi)
      throw DimensionMismatch("channel: one activation probability per edge");
    for (Eigen::Index l = 0; l < activation_prob.size(); ++l)
      if (!(activation_prob[l] > 0.0 && activation_prob[l] <= 1.0))
        throw InvalidParams("channel: activation probabilities in (0, 1]");
    if (noise_v < 0.0 || noise_u < 0.0)
      throw InvalidParams("channel: noise bounds must be >= 0");
    if (quantizer) quantizer->validate();
  }

  double p_min() const { return activation_prob.minCoeff(); }
  double p_max() const { return activation_prob.maxCoeff(); }

  // Deterministic upper bound on the norm of the stacked per-tick update
  // error e(k): each delivered packet deviates from its noiseless value by
  // at most quantization + channel noise + 2 rho * computation error,
  // componentwise. Used when evaluating the mean-error term of the
  // convergence bound.
  double error_mean_bound(const Topology& g, int p, double rho) const {
    const double dq = quantizer ? quantizer->delta : 0.0;
    double sq = 0.0;
    for (int ell = 0; ell < g.xi; ++ell) {
      const auto [i, j] = g.edges[ell];
      const bool on_channel = (i != j) || lossy_self_loops;
      const double per_comp =
          2.0 * rho * noise_u + (on_channel ? noise_v + dq : 0.0);
      sq += static_cast<double>(p) * per_comp * per_comp;
    }
    return std::sqrt(sq);
  }
};

// Joint state of the network: stacked local states x (n blocks of size p,
// each agent's most recently computed value, stale if the agent has not
// activated) and stacked edge variables z (xi blocks of size p).
struct AgentSystem {
  std::shared_ptr<const Topology> topology;
  int p = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  int k = 0;

  static AgentSystem zero(std::shared_ptr<const Topology> g, int p) {
    if (!g) throw InvalidParams("agent system: null topology");
    if (p <= 0) throw InvalidParams("agent system: p must be positive");
    AgentSystem s;
    s.topology = std::move(g);
    s.p = p;
    s.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.topology->n) * p);
    s.z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.topology->xi) * p);
    return s;
  }
};

// Per-tick record of what the randomness did: which edges activated, which
// agents computed, inner iteration counts, and the realized norm of the
// injected error on each delivered packet (quantization + channel noise +
// 2 rho * computation noise; zero for silent edges).
struct StepTrace {
  std::vector<std::uint8_t> activated;
  std::vector<std::uint8_t> computed;
  std::vector<int> inner_iterations;
  std::vector<double> error_norm;

  double mean_inner_iterations() const {
    long total = 0;
    int count = 0;
    for (std::size_t i = 0; i < computed.size(); ++i) {
      if (computed[i]) {
        total += inner_iterations[i];
        ++count;
      }
    }
    return count == 0 ? 0.0 : static_cast<double>(total) / count;
  }
};

// One tick of the iteration under the channel model.
//
// Draw order is fixed for reproducibility: activations in edge order, then
// computation noise in agent order (only for agents with at least one
// activated outgoing edge), then channel noise in edge order (activated,
// channel-borne edges only).
//
// For each activated edge (i, j): sender j forms the packet
//   y = 2 rho x_j - z_ji(k-1)
// from its freshly computed (and u-perturbed) state and its own edge
// variable, the channel quantizes and perturbs it, and receiver i applies
//   z_ij(k) = (1 - alpha) z_ij(k-1) + alpha y.
// Silent edges keep z_ij unchanged; agents that compute nothing keep their
// stale x. All reads use the previous state, so updates commute within a
// tick.
inline StepTrace step(AgentSystem& sys, const AlgorithmParams& params,
                      const std::vector<Cost>& costs, const ChannelModel& ch,
                      RngStream& rng) {
  params.validate();
  const Topology& g = *sys.topology;
  const int p = sys.p;
  if (static_cast<int>(costs.size()) != g.n)
    throw DimensionMismatch("step: one cost per agent required");
  ch.validate(g);
  if (sys.x.size() != static_cast<Eigen::Index>(g.n) * p ||
      sys.z.size() != static_cast<Eigen::Index>(g.xi) * p)
    throw DimensionMismatch("step: state size does not match topology");

  StepTrace tr;
  tr.activated.assign(g.xi, 0);
  tr.computed.assign(g.n, 0);
  tr.inner_iterations.assign(g.n, 0);
  tr.error_norm.assign(g.xi, 0.0);

  for (int ell = 0; ell < g.xi; ++ell)
    tr.activated[ell] = rng.bernoulli(ch.activation_prob[ell]) ? 1 : 0;
  for (int ell = 0; ell < g.xi; ++ell)
    if (tr.activated[ell]) tr.computed[g.edges[ell].second] = 1;

  const double rho = params.rho;
  const double alpha = params.alpha;

  // Freshly computed states: clean prox output and u-perturbed value.
  std::vector<Eigen::VectorXd> x_clean(g.n), x_noisy(g.n);
  Eigen::VectorXd x_new = sys.x;
  for (int j = 0; j < g.n; ++j) {
    if (!tr.computed[j]) continue;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    for (int j2 : g.neighbors[j])
      w += sys.z.segment(static_cast<Eigen::Index>(g.index_of(j, j2)) * p, p);
    w /= rho * g.eta[j];
    ProxResult pr = prox(costs[j], w, rho * g.eta[j], params.prox);
    tr.inner_iterations[j] = pr.inner_iterations;
    x_clean[j] = std::move(pr.x);
    x_noisy[j] = x_clean[j];
    if (ch.noise_u > 0.0) x_noisy[j] += rng.symmetric_vector(p, ch.noise_u);
    x_new.segment(static_cast<Eigen::Index>(j) * p, p) = x_noisy[j];
  }

  Eigen::VectorXd z_new = sys.z;
  for (int ell = 0; ell < g.xi; ++ell) {
    if (!tr.activated[ell]) continue;
    const auto [i, j] = g.edges[ell];
    const Eigen::VectorXd z_rev =
        sys.z.segment(static_cast<Eigen::Index>(g.reverse[ell]) * p, p);
    const Eigen::VectorXd y_clean = 2.0 * rho * x_clean[j] - z_rev;
    Eigen::VectorXd y = 2.0 * rho * x_noisy[j] - z_rev;
    const bool on_channel = (i != j) || ch.lossy_self_loops;
    if (on_channel && ch.quantizer) y = ch.quantizer->apply(y);
    if (on_channel && ch.noise_v > 0.0)
      y += rng.symmetric_vector(p, ch.noise_v);
    tr.error_norm[ell] = (y - y_clean).norm();
    z_new.segment(static_cast<Eigen::Index>(ell) * p, p) =
        (1.0 - alpha) *
            sys.z.segment(static_cast<Eigen::Index>(ell) * p, p) +
        alpha * y;
  }

  sys.z = std::move(z_new);
  sys.x = std::move(x_new);
  ++sys.k;
  return tr;
}

// Noise-free synchronous operator in compact form:
//   T(z) = [(1 - alpha) I - alpha P] z
//          + 2 alpha rho P A prox_f^{1/(rho eta)}(D A' z),
// with the prox evaluated blockwise at a tight tolerance. One application
// equals one engine tick with every edge active and every perturbation
// source disabled. Iterating it reproduces the ideal algorithm; its fixed
// points are the targets the stochastic iteration tracks.
//
// Instances cache the previous blockwise prox solutions as warm starts, so
// repeated applications along a trajectory are cheap. Not safe for
// concurrent use; give each execution thread its own instance.
class ExactOperator {
 public:
  ExactOperator(std::shared_ptr<const Topology> g, int p,
                const AlgorithmParams& params, std::vector<Cost> costs,
                double threshold = 1e-14, bool warm_start = true)
      : g_(std::move(g)),
        p_(p),
        alpha_(params.alpha),
        rho_(params.rho),
        costs_(std::move(costs)),
        warm_start_(warm_start) {
    params.validate();
    if (static_cast<int>(costs_.size()) != g_->n)
      throw DimensionMismatch("exact operator: one cost per agent");
    cfg_.threshold = threshold;
    cfg_.max_inner_iterations = 2000000;
    warm_.resize(g_->n);
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const {
    const Topology& g = *g_;
    if (z.size() != static_cast<Eigen::Index>(g.xi) * p_)
      throw DimensionMismatch("exact operator: state size mismatch");
    const Eigen::VectorXd w = apply_D(g, p_, rho_, apply_At(g, p_, z));
    Eigen::VectorXd x(static_cast<Eigen::Index>(g.n) * p_);
    for (int i = 0; i < g.n; ++i) {
      const Eigen::VectorXd* ws =
          (warm_start_ && warm_[i].size() == p_) ? &warm_[i] : nullptr;
      ProxResult pr =
          prox(costs_[i], w.segment(static_cast<Eigen::Index>(i) * p_, p_),
               rho_ * g.eta[i], cfg_, ws);
      warm_[i] = pr.x;
      x.segment(static_cast<Eigen::Index>(i) * p_, p_) = std::move(pr.x);
    }
    return (1.0 - alpha_) * z - alpha_ * apply_P(g, p_, z) +
           2.0 * alpha_ * rho_ * apply_P(g, p_, apply_A(g, p_, x));
  }

  double residual(const Eigen::VectorXd& z) const {
    return (z - (*this)(z)).norm();
  }

  const Topology& topology() const { return *g_; }
  int block_size() const { return p_; }

 private:
  std::shared_ptr<const Topology> g_;
  int p_;
  double alpha_;
  double rho_;
  std::vector<Cost> costs_;
  ProxConfig cfg_;
  bool warm_start_;
  mutable std::vector<Eigen::VectorXd> warm_;
};

inline Eigen::VectorXd exact_operator_apply(
    const std::shared_ptr<const Topology>& g, int p,
    const AlgorithmParams& params, const std::vector<Cost>& costs,
    const Eigen::VectorXd& z, double threshold = 1e-14) {
  return ExactOperator(g, p, params, costs, threshold, false)(z);
}

}  // namespace dotadmm
