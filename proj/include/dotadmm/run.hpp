#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dotadmm/analysis.hpp"
#include "dotadmm/engine.hpp"

namespace dotadmm {

// Outcome of one trial: per-tick diagnostics plus inner-solver effort.
struct RunRecord {
  std::vector<TickMetrics> ticks;
  std::vector<double> mean_inner_per_tick;
  // Mean inner iterations per prox computation over the whole run.
  double mean_inner_iterations = 0.0;
  long total_inner_iterations = 0;
  long total_computations = 0;
};

struct RunOptions {
  // When set, the theory_bound column is filled from this rate together
  // with initial_distance (an upper estimate of the distance from z(0) to
  // the fixed set of the first segment's operator).
  const RateParameters* rate = nullptr;
  double initial_distance = 0.0;
  // Invoked after every tick; sees the post-step state.
  std::function<void(const AgentSystem&, const StepTrace&)> observer;
  // Tolerance of the exact operator used for the residual metric.
  double residual_threshold = 1e-14;
};

// Runs the stochastic iteration for `horizon` ticks, recording metrics at
// every tick. The centralized optimum and the exact operator are rebuilt
// once per cost segment (warm-started from the previous segment), so the
// tracking error is always measured against the current segment's solution.
inline RunRecord run(AgentSystem& sys, const AlgorithmParams& params,
                     const CostStream& stream, const ChannelModel& ch,
                     int horizon, RngStream& rng, const RunOptions& opt = {}) {
  if (horizon < 0) throw InvalidParams("run: horizon must be >= 0");
  stream.validate();
  if (stream.agents() != sys.topology->n)
    throw DimensionMismatch("run: stream agent count does not match topology");

  RunRecord rec;
  rec.ticks.reserve(horizon);
  rec.mean_inner_per_tick.reserve(horizon);

  std::optional<EnvelopeAccumulator> bound;
  double err_mean = 0.0;
  if (opt.rate) {
    bound.emplace(*opt.rate, opt.initial_distance);
    err_mean = opt.rate->nu_e;
  }

  int segment = -1;
  Eigen::VectorXd x_star;
  std::optional<ExactOperator> exact;
  for (int k = 1; k <= horizon; ++k) {
    const int seg = stream.segment_at(k);
    if (seg != segment) {
      const auto& costs = stream.segments[seg];
      x_star = centralized_oracle(costs, segment < 0 ? nullptr : &x_star);
      exact.emplace(sys.topology, sys.p, params, costs,
                    opt.residual_threshold);
      segment = seg;
    }
    const StepTrace tr = step(sys, params, stream.segments[segment], ch, rng);
    const double b = bound ? bound->advance(err_mean) : kNaN;
    rec.ticks.push_back(compute_tick_metrics(sys, x_star, *exact, b));
    rec.mean_inner_per_tick.push_back(tr.mean_inner_iterations());
    for (int i = 0; i < sys.topology->n; ++i) {
      if (tr.computed[i]) {
        rec.total_inner_iterations += tr.inner_iterations[i];
        ++rec.total_computations;
      }
    }
    if (opt.observer) opt.observer(sys, tr);
  }
  rec.mean_inner_iterations =
      rec.total_computations == 0
          ? 0.0
          : static_cast<double>(rec.total_inner_iterations) /
                static_cast<double>(rec.total_computations);
  return rec;
}

}  // namespace dotadmm
