#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dotadmm/analysis.hpp"
#include "dotadmm/costs.hpp"
#include "dotadmm/engine.hpp"
#include "dotadmm/errors.hpp"
#include "dotadmm/rng.hpp"
#include "dotadmm/run.hpp"
#include "dotadmm/topology.hpp"

namespace dotadmm {

// ---------------------------------------------------------------------------
// Declarative scenario description. Everything an experiment needs is in
// here; a scenario plus nothing else reproduces a result bit for bit.
// ---------------------------------------------------------------------------

struct TopologySpec {
  int n = 10;
  int edges = 20;               // used when edge_list is empty
  std::uint64_t seed = 0;       // 0 -> derived from master_seed
  std::vector<std::pair<int, int>> edge_list;
};

struct CostSpec {
  bool logistic = true;
  int dimension = 16;
  int samples_per_agent = 20;
  double reg_weight = 0.0;
  double feature_scale = 1.0;
  double label_noise = 0.1;
  std::uint64_t seed = 0;       // 0 -> derived from master_seed
  int switches = 0;             // piecewise-constant stream when > 0
  double drift_target = 2.5;    // aimed distance between segment optima
  std::string csv_path;         // load datasets instead of generating
};

struct ChannelSpec {
  double p_fast = 1.0;
  double p_slow = 1.0;
  int slow_nodes = 0;           // agents 0..slow_nodes-1 send at p_slow
  double noise_v = 0.0;
  double noise_u = 0.0;
  double quantizer_delta = 0.0; // 0 disables the quantizer
  double quantizer_max = 10.0;
  bool lossy_self_loops = false;
};

enum class GammaMode { automatic, fixed, none };

struct Scenario {
  std::string name = "scenario";
  TopologySpec topology;
  CostSpec cost;
  AlgorithmParams params;
  ChannelSpec channel;
  int horizon = 1000;
  int trials = 1;
  std::uint64_t master_seed = 1;
  GammaMode gamma_mode = GammaMode::automatic;
  double gamma_value = 0.0;     // used by GammaMode::fixed
  int gamma_samples = 50;
  double gamma_radius = 0.0;    // 0 -> max(1, distance of z(0) to the target)
};

// Instantiated scenario: concrete graph, datasets and channel.
struct Problem {
  std::shared_ptr<const Topology> topology;
  int p = 0;
  CostStream stream;
  ChannelModel channel;
  AlgorithmParams params;
};

// Theory-side quantities derived once per problem. z_star is a fixed point
// of the first segment's synchronous operator; initial_distance
// over-estimates the distance of z(0) = 0 from the fixed set.
struct RateSetup {
  std::optional<RateParameters> rate;
  double gamma_hat = kNaN;
  double initial_distance = 0.0;
  Eigen::VectorXd z_star;
};

namespace detail {

// Stream indices for derived seeds; trial t uses kTrialBase + t.
constexpr std::uint64_t kTopologyStream = 1;
constexpr std::uint64_t kDataStream = 2;
constexpr std::uint64_t kGammaStream = 3;
constexpr std::uint64_t kTrialBase = 1000;

inline std::uint64_t pick_seed(std::uint64_t explicit_seed,
                               std::uint64_t master, std::uint64_t stream) {
  return explicit_seed != 0 ? explicit_seed
                            : RngStream::derive(master, stream);
}

inline int total_samples(const std::vector<Cost>& costs) {
  int total = 0;
  for (const auto& c : costs)
    total += static_cast<int>(std::visit(
        [](const auto& cc) { return cc.features.rows(); }, c));
  return total;
}

}  // namespace detail

inline std::shared_ptr<const Topology> build_topology_from_spec(
    const TopologySpec& ts, std::uint64_t master_seed) {
  if (!ts.edge_list.empty())
    return std::make_shared<const Topology>(
        build_topology(ts.n, ts.edge_list));
  return std::make_shared<const Topology>(random_connected_graph(
      ts.n, ts.edges,
      detail::pick_seed(ts.seed, master_seed, detail::kTopologyStream)));
}

// Builds the cost stream. A static spec yields one segment. A drifting spec
// keeps every feature matrix fixed and regenerates labels per segment from
// a shifted planted parameter; after generating a segment the shift length
// is rescaled once against the measured optimum displacement so consecutive
// optima end up near drift_target apart. The realized maximum displacement
// is recorded as the stream's drift bound.
inline CostStream build_stream(const CostSpec& cs, int n, int horizon,
                               std::uint64_t master_seed) {
  if (!cs.csv_path.empty()) {
    auto costs = load_costs_csv(cs.csv_path, cs.logistic, cs.reg_weight);
    if (static_cast<int>(costs.size()) != n)
      throw ConfigError("dataset file provides " +
                        std::to_string(costs.size()) + " agents, topology has " +
                        std::to_string(n));
    return make_static_stream(std::move(costs));
  }

  DatasetParams dp;
  dp.logistic = cs.logistic;
  dp.agents = n;
  dp.dimension = cs.dimension;
  dp.samples_per_agent = cs.samples_per_agent;
  dp.reg_weight = cs.reg_weight;
  dp.feature_scale = cs.feature_scale;
  dp.label_noise = cs.label_noise;

  RngStream rng(detail::pick_seed(cs.seed, master_seed, detail::kDataStream));
  Eigen::VectorXd planted = rng.gaussian_vector(cs.dimension);
  std::vector<Cost> base = generate_datasets(dp, planted, rng);
  if (cs.switches <= 0) return make_static_stream(std::move(base));

  if (horizon < cs.switches + 1)
    throw InvalidParams("stream: horizon too short for the switch count");
  CostStream stream;
  stream.starts.reserve(cs.switches + 1);
  stream.segments.reserve(cs.switches + 1);
  stream.starts.push_back(0);
  for (int s = 1; s <= cs.switches; ++s)
    stream.starts.push_back(1 + static_cast<int>(
        (static_cast<long>(horizon) * s) / (cs.switches + 1)));
  stream.segments.push_back(base);

  Eigen::VectorXd x_prev = centralized_oracle(base);
  const int samples = detail::total_samples(base);
  double sigma = 0.0;
  for (int s = 1; s <= cs.switches; ++s) {
    Eigen::VectorXd dir = rng.gaussian_vector(cs.dimension);
    dir.normalize();
    const Eigen::VectorXd noise =
        cs.label_noise * rng.gaussian_vector(samples);
    double shift = cs.drift_target;
    Eigen::VectorXd planted_next;
    std::vector<Cost> seg;
    Eigen::VectorXd x_next;
    double dist = 0.0;
    for (int round = 0; round < 2; ++round) {
      planted_next = planted + shift * dir;
      seg = relabel_datasets(base, dp, planted_next, noise);
      x_next = centralized_oracle(seg, &x_prev);
      dist = (x_next - x_prev).norm();
      if (round == 1 || dist < 1e-9 ||
          (dist > 0.7 * cs.drift_target && dist < 1.3 * cs.drift_target))
        break;
      shift = std::clamp(shift * cs.drift_target / dist,
                         cs.drift_target / 20.0, cs.drift_target * 50.0);
    }
    stream.segments.push_back(std::move(seg));
    planted = planted_next;
    sigma = std::max(sigma, dist);
    x_prev = std::move(x_next);
  }
  stream.drift_bound = sigma;
  stream.validate();
  return stream;
}

inline ChannelModel build_channel(const ChannelSpec& cs, const Topology& g) {
  if (cs.slow_nodes < 0 || cs.slow_nodes > g.n)
    throw InvalidParams("channel: slow_nodes must lie in [0, n]");
  if (!(cs.p_fast > 0.0 && cs.p_fast <= 1.0) ||
      !(cs.p_slow > 0.0 && cs.p_slow <= 1.0))
    throw InvalidParams("channel: probabilities must lie in (0, 1]");
  ChannelModel ch;
  ch.activation_prob.resize(g.xi);
  for (int ell = 0; ell < g.xi; ++ell) {
    const int sender = g.edges[ell].second;
    ch.activation_prob[ell] = sender < cs.slow_nodes ? cs.p_slow : cs.p_fast;
  }
  ch.noise_v = cs.noise_v;
  ch.noise_u = cs.noise_u;
  if (cs.quantizer_delta > 0.0)
    ch.quantizer = Quantizer{cs.quantizer_delta, cs.quantizer_max};
  ch.lossy_self_loops = cs.lossy_self_loops;
  ch.validate(g);
  return ch;
}

inline Problem build_problem(const Scenario& s) {
  if (s.horizon < 1) throw InvalidParams("scenario: horizon must be >= 1");
  if (s.trials < 1) throw InvalidParams("scenario: trials must be >= 1");
  s.params.validate();
  Problem prob;
  prob.topology = build_topology_from_spec(s.topology, s.master_seed);
  if (!s.cost.csv_path.empty()) {
    prob.stream = build_stream(s.cost, prob.topology->n, s.horizon,
                               s.master_seed);
    prob.p = static_cast<int>(std::visit(
        [](const auto& c) { return c.features.cols(); },
        prob.stream.segments.front().front()));
  } else {
    prob.p = s.cost.dimension;
    prob.stream = build_stream(s.cost, prob.topology->n, s.horizon,
                               s.master_seed);
  }
  prob.channel = build_channel(s.channel, *prob.topology);
  prob.params = s.params;
  return prob;
}

// Computes z_star, the initial distance and the rate parameters. The
// subregularity constant comes from sampling around z_star unless the
// scenario pins a value. gamma_mode none skips all of it (the theory_bound
// column then stays NaN).
inline RateSetup setup_rate(const Scenario& s, const Problem& prob) {
  RateSetup rs;
  if (s.gamma_mode == GammaMode::none) return rs;
  ExactOperator T(prob.topology, prob.p, prob.params,
                  prob.stream.segments.front());
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(prob.topology->xi) * prob.p);
  rs.z_star = iterate_to_fixed_point(T, z0, 1e-10);
  rs.initial_distance = rs.z_star.norm();
  if (s.gamma_mode == GammaMode::fixed) {
    if (!(s.gamma_value > 0.0))
      throw InvalidParams("scenario: fixed gamma must be positive");
    rs.gamma_hat = s.gamma_value;
  } else {
    const double radius = s.gamma_radius > 0.0
                              ? s.gamma_radius
                              : std::max(1.0, rs.initial_distance);
    RngStream rng(RngStream::derive(s.master_seed, detail::kGammaStream));
    rs.gamma_hat = estimate_gamma(T, rs.z_star, s.gamma_samples, radius, rng);
  }
  RateParameters rp =
      compute_mu(s.params.alpha, prob.channel.p_min(), rs.gamma_hat);
  rp.p_max = prob.channel.p_max();
  rp.nu_e = prob.channel.error_mean_bound(*prob.topology, prob.p,
                                          s.params.rho);
  rp.sigma = prob.stream.drift_bound;
  rs.rate = rp;
  return rs;
}

// Aggregated outcome of a scenario.
struct ScenarioResult {
  std::vector<RunRecord> trials;
  RunRecord mean;
  std::optional<RateParameters> rate;
  double gamma_hat = kNaN;
  double initial_distance = kNaN;
  double sigma = 0.0;
  // Mean tracking error over the final tenth of the mean curve.
  double asymptotic_error = kNaN;
  // Contraction factor fitted to the transient of the mean curve.
  double empirical_rate = kNaN;
  double mean_inner_iterations = 0.0;
};

using TrialObserver =
    std::function<void(const AgentSystem&, const StepTrace&)>;
using TrialObserverFactory = std::function<TrialObserver(int trial)>;

// Executes one trial. Trial randomness is derived from
// (master_seed, trial index) only, so trials can run in any order.
inline RunRecord run_trial(const Problem& prob, const RateSetup& rs,
                           std::uint64_t master_seed, int horizon, int trial,
                           const TrialObserver& observer = {}) {
  AgentSystem sys = AgentSystem::zero(prob.topology, prob.p);
  RngStream rng(RngStream::derive(master_seed, detail::kTrialBase +
                                                   static_cast<std::uint64_t>(
                                                       trial)));
  RunOptions opt;
  opt.rate = rs.rate ? &*rs.rate : nullptr;
  opt.initial_distance = rs.initial_distance;
  opt.observer = observer;
  return run(sys, prob.params, prob.stream, prob.channel, horizon, rng, opt);
}

inline ScenarioResult run_scenario(const Scenario& s, const Problem& prob,
                                   const RateSetup& rs,
                                   const TrialObserverFactory& factory = {}) {
  ScenarioResult res;
  res.rate = rs.rate;
  res.gamma_hat = rs.gamma_hat;
  res.initial_distance = rs.initial_distance;
  res.sigma = prob.stream.drift_bound;
  res.trials.resize(s.trials);
  for (int t = 0; t < s.trials; ++t)
    res.trials[t] = run_trial(prob, rs, s.master_seed, s.horizon, t,
                              factory ? factory(t) : TrialObserver{});

  // Tick-wise mean, reduced in trial order regardless of execution order.
  const int K = s.horizon;
  res.mean.ticks.resize(K);
  res.mean.mean_inner_per_tick.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    TickMetrics m;
    m.k = res.trials.front().ticks[k].k;
    m.theory_bound = res.trials.front().ticks[k].theory_bound;
    double tr = 0.0, co = 0.0, fp = 0.0, mi = 0.0;
    for (int t = 0; t < s.trials; ++t) {
      tr += res.trials[t].ticks[k].tracking_error;
      co += res.trials[t].ticks[k].consensus_error;
      fp += res.trials[t].ticks[k].fixed_point_residual;
      mi += res.trials[t].mean_inner_per_tick[k];
    }
    m.tracking_error = tr / s.trials;
    m.consensus_error = co / s.trials;
    m.fixed_point_residual = fp / s.trials;
    res.mean.ticks[k] = m;
    res.mean.mean_inner_per_tick[k] = mi / s.trials;
  }
  long ti = 0, tc = 0;
  for (const auto& rec : res.trials) {
    ti += rec.total_inner_iterations;
    tc += rec.total_computations;
  }
  res.mean.total_inner_iterations = ti;
  res.mean.total_computations = tc;
  res.mean.mean_inner_iterations =
      tc == 0 ? 0.0 : static_cast<double>(ti) / static_cast<double>(tc);
  res.mean_inner_iterations = res.mean.mean_inner_iterations;

  const int tail = std::max(1, K / 10);
  double asym = 0.0;
  for (int k = K - tail; k < K; ++k)
    asym += res.mean.ticks[k].tracking_error;
  res.asymptotic_error = asym / tail;
  std::vector<double> curve(K);
  for (int k = 0; k < K; ++k) curve[k] = res.mean.ticks[k].tracking_error;
  if (K >= 4) res.empirical_rate = estimate_linear_rate(curve);
  return res;
}

inline ScenarioResult run_scenario(const Scenario& s) {
  const Problem prob = build_problem(s);
  const RateSetup rs = setup_rate(s, prob);
  return run_scenario(s, prob, rs);
}

// ---------------------------------------------------------------------------
// Sweeps. Each sweep instantiates the base problem once; axis values only
// change the swept knob, so every value sees the same topology, datasets
// and trial seeds.
// ---------------------------------------------------------------------------

struct SweepResult {
  std::vector<double> axis_values;
  std::vector<double> asymptotic_error;
  std::vector<double> mean_inner_iters;
  std::vector<double> empirical_rate;
};

namespace detail {

// Refreshes channel-dependent rate fields (p bounds, error budget) after a
// sweep modified the channel; gamma is a property of the synchronous
// operator and carries over.
inline RateSetup adjust_rate(const Scenario& s, const Problem& prob,
                             const RateSetup& base) {
  if (!base.rate) return base;
  RateSetup rs = base;
  RateParameters rp =
      compute_mu(s.params.alpha, prob.channel.p_min(), base.gamma_hat);
  rp.p_max = prob.channel.p_max();
  rp.nu_e =
      prob.channel.error_mean_bound(*prob.topology, prob.p, s.params.rho);
  rp.sigma = prob.stream.drift_bound;
  rs.rate = rp;
  return rs;
}

}  // namespace detail

inline SweepResult threshold_sweep(const Scenario& base,
                                   std::span<const double> thetas) {
  if (thetas.empty()) throw InvalidParams("threshold sweep: no axis values");
  const Problem prob = build_problem(base);
  const RateSetup rs = setup_rate(base, prob);
  SweepResult out;
  for (const double theta : thetas) {
    Scenario s = base;
    s.params.prox.threshold = theta;
    Problem variant = prob;
    variant.params = s.params;
    const ScenarioResult r = run_scenario(s, variant, rs);
    out.axis_values.push_back(theta);
    out.asymptotic_error.push_back(r.asymptotic_error);
    out.mean_inner_iters.push_back(r.mean_inner_iterations);
    out.empirical_rate.push_back(r.empirical_rate);
  }
  return out;
}

inline SweepResult quantization_sweep(const Scenario& base,
                                      std::span<const double> deltas) {
  if (deltas.empty()) throw InvalidParams("quantization sweep: no axis values");
  const Problem prob = build_problem(base);
  const RateSetup rs = setup_rate(base, prob);
  SweepResult out;
  for (const double delta : deltas) {
    Scenario s = base;
    s.channel.quantizer_delta = delta;
    Problem variant = prob;
    variant.channel = build_channel(s.channel, *prob.topology);
    const ScenarioResult r =
        run_scenario(s, variant, detail::adjust_rate(s, variant, rs));
    out.axis_values.push_back(delta);
    out.asymptotic_error.push_back(r.asymptotic_error);
    out.mean_inner_iters.push_back(r.mean_inner_iterations);
    out.empirical_rate.push_back(r.empirical_rate);
  }
  return out;
}

inline SweepResult asynchrony_experiment(const Scenario& base,
                                         std::span<const int> slow_counts,
                                         double p_slow, double p_fast) {
  if (slow_counts.empty())
    throw InvalidParams("asynchrony experiment: no axis values");
  const Problem prob = build_problem(base);
  const RateSetup rs = setup_rate(base, prob);
  SweepResult out;
  for (const int ns : slow_counts) {
    Scenario s = base;
    s.channel.slow_nodes = ns;
    s.channel.p_slow = p_slow;
    s.channel.p_fast = p_fast;
    Problem variant = prob;
    variant.channel = build_channel(s.channel, *prob.topology);
    const ScenarioResult r =
        run_scenario(s, variant, detail::adjust_rate(s, variant, rs));
    out.axis_values.push_back(static_cast<double>(ns));
    out.asymptotic_error.push_back(r.asymptotic_error);
    out.mean_inner_iters.push_back(r.mean_inner_iterations);
    out.empirical_rate.push_back(r.empirical_rate);
  }
  return out;
}

// Runs the base scenario once per switch count. The topology and the data
// seed are shared, so segment 0 is identical across cases; only the switch
// schedule (and the segments it induces) differs.
inline std::vector<ScenarioResult> online_experiment(
    const Scenario& base, std::span<const int> switch_counts) {
  if (switch_counts.empty())
    throw InvalidParams("online experiment: no switch counts");
  std::vector<ScenarioResult> out;
  out.reserve(switch_counts.size());
  const auto topo = build_topology_from_spec(base.topology, base.master_seed);
  for (const int sw : switch_counts) {
    Scenario s = base;
    s.cost.switches = sw;
    Problem prob;
    prob.topology = topo;
    prob.p = s.cost.dimension;
    prob.stream = build_stream(s.cost, topo->n, s.horizon, s.master_seed);
    prob.channel = build_channel(s.channel, *topo);
    prob.params = s.params;
    const RateSetup rs = setup_rate(s, prob);
    out.push_back(run_scenario(s, prob, rs));
  }
  return out;
}

}  // namespace dotadmm
