#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dotadmm/errors.hpp"
#include "dotadmm/rng.hpp"

namespace dotadmm {

// Local least-squares cost f(x) = ||A x - b||^2 (no 1/2 in front; the prox
// below is consistent with this normalization).
struct LinearRegressionCost {
  Eigen::MatrixXd features;  // m x p
  Eigen::VectorXd targets;   // m
};

// Local logistic cost
//   f(x) = sum_h log(1 + exp(-b_h * a_h' x)) + (reg_weight / 2) ||x||^2
// with labels b_h in {-1, +1} and feature rows a_h.
struct LogisticRegressionCost {
  Eigen::MatrixXd features;  // m x p
  Eigen::VectorXd labels;    // m, entries +-1
  double reg_weight = 0.0;
};

using Cost = std::variant<LinearRegressionCost, LogisticRegressionCost>;

// Inner-solver settings for iterative prox evaluations. Hitting the
// iteration cap is flagged, not fatal: inexact prox output is part of the
// perturbation model under study.
struct ProxConfig {
  double threshold = 1e-8;
  int max_inner_iterations = 10000;
};

struct ProxResult {
  Eigen::VectorXd x;
  int inner_iterations = 0;
  bool converged = true;
};

namespace detail {

// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

inline void check_cost_dims(const Eigen::MatrixXd& features,
                            const Eigen::VectorXd& rhs, const char* what) {
  if (features.rows() != rhs.size())
    throw DimensionMismatch(std::string(what) +
                            ": feature rows and label count differ");
}

// Gradient of the data term of the logistic cost (regularizer excluded):
// sum_h -b_h a_h sigma(-b_h a_h' x).
inline Eigen::VectorXd logistic_data_gradient(const LogisticRegressionCost& c,
                                              const Eigen::VectorXd& x) {
  const Eigen::ArrayXd margins = (c.features * x).array() * c.labels.array();
  // sigma(-t) = 1 / (1 + exp(t)); exp overflow saturates harmlessly to 0.
  const Eigen::ArrayXd s = 1.0 / (1.0 + margins.exp());
  return c.features.transpose() * (-c.labels.array() * s).matrix();
}

}  // namespace detail

inline double eval_cost(const LinearRegressionCost& c,
                        const Eigen::VectorXd& x) {
  detail::check_cost_dims(c.features, c.targets, "linear cost");
  if (c.features.cols() != x.size())
    throw DimensionMismatch("linear cost: x has wrong dimension");
  return (c.features * x - c.targets).squaredNorm();
}

inline double eval_cost(const LogisticRegressionCost& c,
                        const Eigen::VectorXd& x) {
  detail::check_cost_dims(c.features, c.labels, "logistic cost");
  if (c.features.cols() != x.size())
    throw DimensionMismatch("logistic cost: x has wrong dimension");
  const Eigen::ArrayXd margins = (c.features * x).array() * c.labels.array();
  double total = 0.0;
  for (Eigen::Index h = 0; h < margins.size(); ++h)
    total += detail::log1pexp(-margins[h]);
  return total + 0.5 * c.reg_weight * x.squaredNorm();
}

inline Eigen::VectorXd eval_gradient(const LinearRegressionCost& c,
                                     const Eigen::VectorXd& x) {
  detail::check_cost_dims(c.features, c.targets, "linear cost");
  if (c.features.cols() != x.size())
    throw DimensionMismatch("linear cost: x has wrong dimension");
  return 2.0 * (c.features.transpose() * (c.features * x - c.targets));
}

inline Eigen::VectorXd eval_gradient(const LogisticRegressionCost& c,
                                     const Eigen::VectorXd& x) {
  detail::check_cost_dims(c.features, c.labels, "logistic cost");
  if (c.features.cols() != x.size())
    throw DimensionMismatch("logistic cost: x has wrong dimension");
  return detail::logistic_data_gradient(c, x) + c.reg_weight * x;
}

inline double eval_cost(const Cost& c, const Eigen::VectorXd& x) {
  return std::visit([&x](const auto& cc) { return eval_cost(cc, x); }, c);
}

inline Eigen::VectorXd eval_gradient(const Cost& c, const Eigen::VectorXd& x) {
  return std::visit([&x](const auto& cc) { return eval_gradient(cc, x); }, c);
}

// Exact prox of the least-squares cost:
//   argmin_x ||A x - b||^2 + (penalty / 2) ||x - w||^2
// solved through the normal equations (2 A'A + penalty I) x = penalty w +
// 2 A'b. The system matrix is positive definite for penalty > 0.
inline Eigen::VectorXd prox_linear(const LinearRegressionCost& c,
                                   const Eigen::VectorXd& w, double penalty) {
  if (penalty <= 0.0) throw InvalidParams("prox_linear: penalty must be > 0");
  detail::check_cost_dims(c.features, c.targets, "prox_linear");
  if (c.features.cols() != w.size())
    throw DimensionMismatch("prox_linear: w has wrong dimension");
  Eigen::MatrixXd H = 2.0 * (c.features.transpose() * c.features);
  H.diagonal().array() += penalty;
  const Eigen::VectorXd rhs =
      penalty * w + 2.0 * (c.features.transpose() * c.targets);
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("prox_linear: normal equations not positive definite");
  return llt.solve(rhs);
}

// Inexact prox of the logistic cost via Nesterov accelerated gradient
// descent with fixed step 1/L. The ridge term is folded into the quadratic
// through the scaling identity
//   prox_{f + (eps/2)||.||^2}^{1/penalty}(w)
//     = prox_f^{1/(penalty+eps)}((penalty / (penalty+eps)) w),
// so the inner solve always targets the pure logistic data term. Iterations
// stop when consecutive iterates are closer than cfg.threshold; reaching the
// cap flags converged = false.
inline ProxResult prox_logistic(const LogisticRegressionCost& c,
                                const Eigen::VectorXd& w, double penalty,
                                const ProxConfig& cfg,
                                const Eigen::VectorXd* warm_start = nullptr) {
  if (penalty <= 0.0)
    throw InvalidParams("prox_logistic: penalty must be > 0");
  if (cfg.threshold <= 0.0)
    throw InvalidParams("prox_logistic: threshold must be > 0");
  detail::check_cost_dims(c.features, c.labels, "prox_logistic");
  if (c.features.cols() != w.size())
    throw DimensionMismatch("prox_logistic: w has wrong dimension");

  const double q = penalty + c.reg_weight;
  const Eigen::VectorXd center = (penalty / q) * w;
  const double lips = q + 0.25 * c.features.squaredNorm();

  Eigen::VectorXd x = warm_start ? *warm_start : center;
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd y = x;
  double t = 1.0;
  int iters = 0;
  bool converged = false;
  while (iters < cfg.max_inner_iterations) {
    const Eigen::VectorXd grad =
        detail::logistic_data_gradient(c, y) + q * (y - center);
    x_prev.swap(x);
    x = y - grad / lips;
    ++iters;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    if ((x - x_prev).norm() < cfg.threshold) {
      converged = true;
      break;
    }
  }
  return ProxResult{std::move(x), iters, converged};
}

// Dispatch over the cost variant. The least-squares branch is a direct
// solve; it reports one inner iteration per call.
inline ProxResult prox(const Cost& c, const Eigen::VectorXd& w, double penalty,
                       const ProxConfig& cfg,
                       const Eigen::VectorXd* warm_start = nullptr) {
  if (const auto* lin = std::get_if<LinearRegressionCost>(&c))
    return ProxResult{prox_linear(*lin, w, penalty), 1, true};
  return prox_logistic(std::get<LogisticRegressionCost>(c), w, penalty, cfg,
                       warm_start);
}

// ---------------------------------------------------------------------------
// Centralized reference solver: minimizes sum_i f_i(x) over all agents.
// Least-squares sums solve in closed form; anything involving a logistic
// term runs damped Newton to gradient norm <= grad_tol. Throws
// NoUniqueMinimizer when the summed cost has no attained, unique minimum
// (rank-deficient least squares, or logistic failing to converge, which
// happens for separable data without a ridge term).
// ---------------------------------------------------------------------------
inline Eigen::VectorXd centralized_oracle(const std::vector<Cost>& costs,
                                          const Eigen::VectorXd* warm_start,
                                          double grad_tol = 1e-12) {
  if (costs.empty()) throw InvalidParams("centralized_oracle: no costs");
  const Eigen::Index p = std::visit(
      [](const auto& c) { return c.features.cols(); }, costs.front());
  for (const auto& c : costs) {
    const Eigen::Index pc =
        std::visit([](const auto& cc) { return cc.features.cols(); }, c);
    if (pc != p)
      throw DimensionMismatch("centralized_oracle: mixed dimensions");
  }

  const bool all_linear =
      std::all_of(costs.begin(), costs.end(), [](const Cost& c) {
        return std::holds_alternative<LinearRegressionCost>(c);
      });
  if (all_linear) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (const auto& c : costs) {
      const auto& lc = std::get<LinearRegressionCost>(c);
      H += 2.0 * (lc.features.transpose() * lc.features);
      rhs += 2.0 * (lc.features.transpose() * lc.targets);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 1e-12 * std::max(hi, 1.0))
      throw NoUniqueMinimizer(
          "centralized_oracle: summed least-squares system is singular");
    return eig.eigenvectors() *
           (eig.eigenvalues().cwiseInverse().asDiagonal() *
            (eig.eigenvectors().transpose() * rhs));
  }

  auto total_cost = [&costs](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& c : costs) v += eval_cost(c, x);
    return v;
  };
  auto total_gradient = [&costs, p](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (const auto& c : costs) g += eval_gradient(c, x);
    return g;
  };
  auto total_hessian = [&costs, p](const Eigen::VectorXd& x) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    for (const auto& c : costs) {
      if (const auto* lin = std::get_if<LinearRegressionCost>(&c)) {
        H += 2.0 * (lin->features.transpose() * lin->features);
      } else {
        const auto& lc = std::get<LogisticRegressionCost>(c);
        const Eigen::ArrayXd margins =
            (lc.features * x).array() * lc.labels.array();
        // sigma(t)(1 - sigma(t)) with t = margin; labels square to 1.
        const Eigen::ArrayXd s = 1.0 / (1.0 + (-margins).exp());
        const Eigen::ArrayXd wgt = s * (1.0 - s);
        H += lc.features.transpose() * wgt.matrix().asDiagonal() * lc.features;
        H.diagonal().array() += lc.reg_weight;
      }
    }
    return H;
  };

  Eigen::VectorXd x =
      warm_start ? *warm_start : Eigen::VectorXd::Zero(p).eval();
  const int max_newton = 200;
  for (int it = 0; it < max_newton; ++it) {
    const Eigen::VectorXd g = total_gradient(x);
    if (g.norm() <= grad_tol) {
      // Flat directions at the stationary point mean the minimizer is not
      // unique (separable logistic data drifts here with a vanishing
      // gradient, so the gradient test alone cannot tell).
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(total_hessian(x));
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (lo <= 1e-12 * std::max(hi, 1.0))
        throw NoUniqueMinimizer(
            "centralized_oracle: curvature vanishes at the stationary point");
      return x;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(total_hessian(x));
    if (llt.info() != Eigen::Success)
      throw NoUniqueMinimizer(
          "centralized_oracle: Hessian not positive definite");
    const Eigen::VectorXd dir = llt.solve(g);
    // Backtracking: plain Newton steps can overshoot on flat logistic
    // tails. The acceptance slack covers the floating-point floor, where a
    // genuine Newton contraction no longer changes the objective value.
    const double f0 = total_cost(x);
    const double slack =
        16.0 * std::numeric_limits<double>::epsilon() * (std::abs(f0) + 1.0);
    double s = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      if (total_cost(x - s * dir) <= f0 + slack) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted)
      throw NoUniqueMinimizer("centralized_oracle: line search stalled");
    x -= s * dir;
  }
  throw NoUniqueMinimizer(
      "centralized_oracle: Newton failed to reach the gradient tolerance");
}

inline Eigen::VectorXd centralized_oracle(const std::vector<Cost>& costs) {
  return centralized_oracle(costs, nullptr);
}

// ---------------------------------------------------------------------------
// Piecewise-constant cost stream: one segment of per-agent costs at a time,
// all agents switching together. Segment s is active for ticks k in
// [starts[s], starts[s+1]).
// ---------------------------------------------------------------------------
struct CostStream {
  // starts[0] == 0; strictly increasing.
  std::vector<int> starts;
  // segments[s][i]: cost of agent i during segment s.
  std::vector<std::vector<Cost>> segments;
  // sigma: bound on the distance between consecutive segment optima
  // (measured during generation; 0 for a static stream).
  double drift_bound = 0.0;

  int agents() const {
    return segments.empty() ? 0 : static_cast<int>(segments.front().size());
  }

  int segment_count() const { return static_cast<int>(segments.size()); }

  int segment_at(int k) const {
    if (segments.empty()) throw InvalidParams("cost stream is empty");
    int s = static_cast<int>(
        std::upper_bound(starts.begin(), starts.end(), k) - starts.begin());
    return std::min(std::max(s - 1, 0), segment_count() - 1);
  }

  const std::vector<Cost>& costs_at(int k) const {
    return segments[segment_at(k)];
  }

  void validate() const {
    if (segments.empty() || starts.size() != segments.size())
      throw InvalidParams("cost stream: starts/segments size mismatch");
    if (starts.front() != 0)
      throw InvalidParams("cost stream: first segment must start at 0");
    for (std::size_t s = 1; s < starts.size(); ++s)
      if (starts[s] <= starts[s - 1])
        throw InvalidParams("cost stream: switch times must increase");
    const std::size_t n = segments.front().size();
    for (const auto& seg : segments)
      if (seg.size() != n)
        throw InvalidParams("cost stream: agent count changes across segments");
  }
};

inline CostStream make_static_stream(std::vector<Cost> costs) {
  CostStream s;
  s.starts = {0};
  s.segments.push_back(std::move(costs));
  s.drift_bound = 0.0;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic dataset generation. Features are standard normal (scaled);
// linear targets are a'x_planted + noise, logistic labels are
// sign(a'x_planted + noise).
// ---------------------------------------------------------------------------
struct DatasetParams {
  bool logistic = true;
  int agents = 10;
  int dimension = 16;
  int samples_per_agent = 20;
  double reg_weight = 0.0;     // logistic ridge term
  double feature_scale = 1.0;
  double label_noise = 0.1;
};

inline std::vector<Cost> generate_datasets(const DatasetParams& dp,
                                           const Eigen::VectorXd& planted,
                                           RngStream& rng) {
  if (planted.size() != dp.dimension)
    throw DimensionMismatch("generate_datasets: planted vector dimension");
  if (dp.agents <= 0 || dp.dimension <= 0 || dp.samples_per_agent <= 0)
    throw InvalidParams("generate_datasets: sizes must be positive");
  std::vector<Cost> costs;
  costs.reserve(dp.agents);
  for (int i = 0; i < dp.agents; ++i) {
    Eigen::MatrixXd feats(dp.samples_per_agent, dp.dimension);
    for (Eigen::Index r = 0; r < feats.rows(); ++r)
      for (Eigen::Index c = 0; c < feats.cols(); ++c)
        feats(r, c) = dp.feature_scale * rng.gaussian();
    Eigen::VectorXd raw(dp.samples_per_agent);
    for (Eigen::Index r = 0; r < raw.size(); ++r)
      raw[r] = feats.row(r).dot(planted) + dp.label_noise * rng.gaussian();
    if (dp.logistic) {
      Eigen::VectorXd labels(dp.samples_per_agent);
      for (Eigen::Index r = 0; r < labels.size(); ++r)
        labels[r] = raw[r] >= 0.0 ? 1.0 : -1.0;
      costs.emplace_back(
          LogisticRegressionCost{std::move(feats), std::move(labels),
                                 dp.reg_weight});
    } else {
      costs.emplace_back(
          LinearRegressionCost{std::move(feats), std::move(raw)});
    }
  }
  return costs;
}

// Regenerates only the labels of existing datasets from a new planted
// vector, keeping every feature matrix. Used by drifting streams so that
// consecutive segments differ in labels alone.
inline std::vector<Cost> relabel_datasets(const std::vector<Cost>& base,
                                          const DatasetParams& dp,
                                          const Eigen::VectorXd& planted,
                                          const Eigen::VectorXd& label_noise) {
  std::vector<Cost> out;
  out.reserve(base.size());
  Eigen::Index row = 0;
  for (const auto& c : base) {
    if (dp.logistic) {
      const auto& lc = std::get<LogisticRegressionCost>(c);
      Eigen::VectorXd labels(lc.features.rows());
      for (Eigen::Index r = 0; r < labels.size(); ++r, ++row)
        labels[r] = lc.features.row(r).dot(planted) + label_noise[row] >= 0.0
                        ? 1.0
                        : -1.0;
      out.emplace_back(LogisticRegressionCost{lc.features, std::move(labels),
                                              dp.reg_weight});
    } else {
      const auto& lc = std::get<LinearRegressionCost>(c);
      Eigen::VectorXd targets(lc.features.rows());
      for (Eigen::Index r = 0; r < targets.size(); ++r, ++row)
        targets[r] = lc.features.row(r).dot(planted) + label_noise[row];
      out.emplace_back(LinearRegressionCost{lc.features, std::move(targets)});
    }
  }
  return out;
}

// Loads per-agent datasets from CSV rows "agent,sample,f0,...,f{p-1},label".
// Agents must be 0..n-1; the feature dimension is inferred from the first
// row. Logistic labels must be +-1.
inline std::vector<Cost> load_costs_csv(const std::string& path, bool logistic,
                                        double reg_weight = 0.0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  struct Row {
    int agent;
    std::vector<double> features;
    double label;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  Eigen::Index p = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_not_of(
                           "0123456789+-.,eE \t\r") != std::string::npos)
      continue;  // header row
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ','))
      vals.push_back(std::stod(field));
    if (vals.size() < 4)
      throw ConfigError("dataset file " + path + ": line " +
                        std::to_string(lineno) + " has too few columns");
    if (p < 0) p = static_cast<Eigen::Index>(vals.size()) - 3;
    if (static_cast<Eigen::Index>(vals.size()) != p + 3)
      throw ConfigError("dataset file " + path + ": line " +
                        std::to_string(lineno) +
                        " has an inconsistent column count");
    Row r;
    r.agent = static_cast<int>(vals[0]);
    r.features.assign(vals.begin() + 2, vals.end() - 1);
    r.label = vals.back();
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("dataset file " + path + " is empty");
  int n = 0;
  for (const auto& r : rows) n = std::max(n, r.agent + 1);
  std::vector<std::vector<const Row*>> by_agent(n);
  for (const auto& r : rows) {
    if (r.agent < 0) throw ConfigError("dataset file: negative agent id");
    by_agent[r.agent].push_back(&r);
  }
  std::vector<Cost> costs;
  costs.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (by_agent[i].empty())
      throw ConfigError("dataset file: agent " + std::to_string(i) +
                        " has no samples");
    const Eigen::Index m = static_cast<Eigen::Index>(by_agent[i].size());
    Eigen::MatrixXd feats(m, p);
    Eigen::VectorXd lab(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < p; ++c)
        feats(r, c) = by_agent[i][r]->features[c];
      lab[r] = by_agent[i][r]->label;
    }
    if (logistic) {
      for (Eigen::Index r = 0; r < m; ++r)
        if (lab[r] != 1.0 && lab[r] != -1.0)
          throw ConfigError("dataset file: logistic labels must be +-1");
      costs.emplace_back(
          LogisticRegressionCost{std::move(feats), std::move(lab), reg_weight});
    } else {
      costs.emplace_back(LinearRegressionCost{std::move(feats), std::move(lab)});
    }
  }
  return costs;
}

}  // namespace dotadmm
