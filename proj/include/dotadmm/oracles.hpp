#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "dotadmm/costs.hpp"
#include "dotadmm/errors.hpp"
#include "dotadmm/topology.hpp"

namespace dotadmm {

// Slow reference implementations. Tests and the validation suite compare the
// production code paths against these; nothing here is used by the solver
// itself.

using ScalarFn = std::function<double(double)>;
using VectorFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Armijo gradient descent to a gradient-norm tolerance.
inline Eigen::VectorXd oracle_gradient_descent(const VectorFn& f,
                                               const GradientFn& grad,
                                               Eigen::VectorXd x,
                                               double tol = 1e-12,
                                               long max_iterations = 2000000) {
  // Progress is judged on the gradient norm, not the objective: near the
  // minimizer objective differences underflow (f is O(1), the decrease is
  // O(gnorm^2)) while the gradient itself is still far above its own
  // evaluation noise. For the smooth strongly convex objectives this oracle
  // serves, a small enough step contracts the gradient norm, so strict
  // decrease is achievable until machine precision.
  double step = 1.0;
  Eigen::VectorXd g = grad(x);
  double gn = g.norm();
  if (!std::isfinite(gn))
    throw NonConvergent("oracle_gradient_descent: non-finite gradient");
  double best = gn;
  long since_best = 0;
  const double floor_ok = std::max(tol, 1e-9);
  for (long it = 0; it < max_iterations; ++it) {
    if (gn <= tol) return x;
    if (!std::isfinite(f(x)))
      throw NonConvergent("oracle_gradient_descent: non-finite objective");
    bool moved = false;
    for (int back = 0; back < 120 && !moved; ++back) {
      const Eigen::VectorXd cand = x - step * g;
      const Eigen::VectorXd gc = grad(cand);
      const double gcn = gc.norm();
      if (std::isfinite(gcn) && gcn < gn) {
        x = cand;
        g = gc;
        gn = gcn;
        step *= 1.5;
        moved = true;
      } else {
        step *= 0.5;
      }
    }
    if (gn < best * (1.0 - 1e-3)) {
      best = gn;
      since_best = 0;
    } else {
      ++since_best;
    }
    // Stalls only happen at the floating-point floor; accept the point if
    // it is already deep below any accuracy a caller compares against.
    if (!moved || since_best > 400) {
      if (gn <= floor_ok) return x;
      throw NonConvergent("oracle_gradient_descent: stalled above tolerance");
    }
  }
  if (gn <= floor_ok) return x;
  throw NonConvergent("oracle_gradient_descent: iteration cap reached");
}

// Proximal point of a cost via gradient descent on the penalized objective.
inline Eigen::VectorXd oracle_prox(const Cost& cost, const Eigen::VectorXd& w,
                                   double penalty, double tol = 1e-12) {
  VectorFn f = [&](const Eigen::VectorXd& x) {
    return eval_cost(cost, x) + 0.5 * penalty * (x - w).squaredNorm();
  };
  GradientFn grad = [&](const Eigen::VectorXd& x) {
    return (eval_gradient(cost, x) + penalty * (x - w)).eval();
  };
  return oracle_gradient_descent(f, grad, w, tol);
}

// Root of a continuous function with a sign change on [lo, hi].
inline double oracle_bisection(const ScalarFn& f, double lo, double hi,
                               double tol = 1e-15, int max_iterations = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw InvalidParams("oracle_bisection: no sign change on interval");
  for (int it = 0; it < max_iterations && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Minimizer of a unimodal scalar function on [lo, hi].
inline double oracle_golden_section(const ScalarFn& f, double lo, double hi,
                                    double tol = 1e-12) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline Eigen::VectorXd oracle_fd_gradient(const VectorFn& f,
                                          const Eigen::VectorXd& x,
                                          double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const double fp = f(xp);
    xp(i) = xi - h;
    const double fm = f(xp);
    xp(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Dense counterparts of the block operators, for small instances only.

inline Eigen::MatrixXd dense_A(const Topology& g, int p) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.xi * p, g.n * p);
  for (int ell = 0; ell < g.xi; ++ell) {
    const int i = g.edges[static_cast<std::size_t>(ell)].first;
    A.block(ell * p, i * p, p, p).setIdentity();
  }
  return A;
}

inline Eigen::MatrixXd dense_P(const Topology& g, int p) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(g.xi * p, g.xi * p);
  for (int ell = 0; ell < g.xi; ++ell) {
    const int rev = g.reverse[static_cast<std::size_t>(ell)];
    P.block(ell * p, rev * p, p, p).setIdentity();
  }
  return P;
}

inline Eigen::MatrixXd dense_D(const Topology& g, int p, double rho) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(g.n * p, g.n * p);
  for (int i = 0; i < g.n; ++i) {
    const double w = 1.0 / (rho * g.eta[static_cast<std::size_t>(i)]);
    D.block(i * p, i * p, p, p) =
        Eigen::MatrixXd::Identity(p, p) * w;
  }
  return D;
}

// Dense application of the fixed-point map, with the per-agent prox solved by
// the gradient-descent oracle. Cross-checks both the sparse wiring and the
// production prox solvers at once.
inline Eigen::VectorXd oracle_operator_apply(
    const Topology& g, int p, double alpha, double rho,
    const std::vector<Cost>& costs, const Eigen::VectorXd& z,
    double prox_tol = 1e-13) {
  const Eigen::MatrixXd A = dense_A(g, p);
  const Eigen::MatrixXd P = dense_P(g, p);
  const Eigen::MatrixXd D = dense_D(g, p, rho);
  const Eigen::VectorXd w = D * (A.transpose() * z);
  Eigen::VectorXd xs(g.n * p);
  for (int i = 0; i < g.n; ++i) {
    const double penalty = rho * g.eta[static_cast<std::size_t>(i)];
    xs.segment(i * p, p) = oracle_prox(costs[static_cast<std::size_t>(i)],
                                       w.segment(i * p, p), penalty,
                                       prox_tol);
  }
  return (1.0 - alpha) * z - alpha * (P * z) +
         2.0 * alpha * rho * (P * (A * xs));
}

// Euclidean distance from z to the affine set described by the fixed-point
// characterization, via a dense least-norm KKT solve.
inline double oracle_fixed_set_distance(
    const Topology& g, int p, double rho, const Eigen::VectorXd& x_star,
    const std::vector<Eigen::VectorXd>& gradients, const Eigen::VectorXd& z) {
  // Constraint rows: for every unordered pair {i, j}, z_ij + z_ji = 2 rho x*;
  // for every self loop, z_ii = rho x*; for every agent, the incoming sum
  // equals rho eta_i x* + grad_i(x*). Redundancy is fine: the least-squares
  // solve below only needs the row space.
  std::vector<std::pair<int, int>> pair_rows;
  for (int ell = 0; ell < g.xi; ++ell) {
    const auto [i, j] = g.edges[static_cast<std::size_t>(ell)];
    if (i <= j) pair_rows.emplace_back(i, j);
  }
  const int rows = static_cast<int>(pair_rows.size()) + g.n;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(rows * p, g.xi * p);
  Eigen::VectorXd d(rows * p);
  int r = 0;
  for (const auto& [i, j] : pair_rows) {
    const int fwd = g.index_of(i, j);
    C.block(r * p, fwd * p, p, p).setIdentity();
    if (i != j) {
      const int bwd = g.index_of(j, i);
      C.block(r * p, bwd * p, p, p).setIdentity();
      d.segment(r * p, p) = 2.0 * rho * x_star;
    } else {
      d.segment(r * p, p) = rho * x_star;
    }
    ++r;
  }
  for (int i = 0; i < g.n; ++i) {
    for (const int j : g.neighbors[static_cast<std::size_t>(i)]) {
      const int ell = g.index_of(i, j);
      C.block(r * p, ell * p, p, p).setIdentity();
    }
    d.segment(r * p, p) = rho * g.eta[static_cast<std::size_t>(i)] * x_star +
                          gradients[static_cast<std::size_t>(i)];
    ++r;
  }
  // Least-norm correction dz with C (z + dz) = d.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
  const Eigen::VectorXd dz = cod.solve(d - C * z);
  return dz.norm();
}

}  // namespace dotadmm
