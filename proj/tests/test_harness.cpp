#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "dotadmm/csv.hpp"
#include "dotadmm/harness.hpp"

using namespace dotadmm;

namespace {

// Small, fast, fully deterministic scenario used across the cases below.
Scenario tiny_linear_scenario() {
  Scenario s;
  s.name = "tiny";
  s.topology.n = 5;
  s.topology.edges = 7;
  s.cost.logistic = false;
  s.cost.dimension = 2;
  s.cost.samples_per_agent = 4;
  s.cost.label_noise = 0.1;
  s.horizon = 60;
  s.trials = 3;
  s.master_seed = 11;
  s.gamma_mode = GammaMode::automatic;
  s.gamma_samples = 10;
  return s;
}

}  // namespace

TEST_CASE("explicit edge lists override random topologies") {
  TopologySpec ts;
  ts.n = 3;
  ts.edge_list = {{0, 1}, {1, 2}};
  const auto g = build_topology_from_spec(ts, 5);
  REQUIRE(g->xi == 7);
  REQUIRE(g->eta == std::vector<int>{2, 3, 2});
}

TEST_CASE("topology seed defaults to a master-derived stream") {
  TopologySpec ts;
  ts.n = 8;
  ts.edges = 12;
  const auto a = build_topology_from_spec(ts, 5);
  const auto b = build_topology_from_spec(ts, 5);
  const auto c = build_topology_from_spec(ts, 6);
  REQUIRE(a->edges == b->edges);
  REQUIRE(a->edges != c->edges);
  ts.seed = 123;
  const auto d = build_topology_from_spec(ts, 5);
  const auto e = build_topology_from_spec(ts, 999);
  REQUIRE(d->edges == e->edges);
}

TEST_CASE("static stream equals direct generation") {
  CostSpec cs;
  cs.logistic = true;
  cs.dimension = 3;
  cs.samples_per_agent = 5;
  cs.seed = 42;
  const CostStream stream = build_stream(cs, 4, 100, 7);
  REQUIRE(stream.segment_count() == 1);
  REQUIRE(stream.drift_bound == 0.0);

  DatasetParams dp;
  dp.logistic = true;
  dp.agents = 4;
  dp.dimension = 3;
  dp.samples_per_agent = 5;
  dp.reg_weight = 0.0;
  dp.feature_scale = 1.0;
  dp.label_noise = cs.label_noise;
  RngStream rng(42);
  const Eigen::VectorXd planted = rng.gaussian_vector(3);
  const auto direct = generate_datasets(dp, planted, rng);
  for (int i = 0; i < 4; ++i) {
    const auto& a = std::get<LogisticRegressionCost>(stream.segments[0][i]);
    const auto& b = std::get<LogisticRegressionCost>(direct[i]);
    REQUIRE(a.features == b.features);
    REQUIRE(a.labels == b.labels);
  }
}

TEST_CASE("piecewise streams share features and land near the drift target") {
  CostSpec cs;
  cs.logistic = false;
  cs.dimension = 4;
  cs.samples_per_agent = 8;
  cs.seed = 9;
  cs.switches = 3;
  cs.drift_target = 2.0;
  const int horizon = 100;
  const CostStream stream = build_stream(cs, 5, horizon, 7);
  REQUIRE(stream.segment_count() == 4);
  REQUIRE(stream.starts == std::vector<int>{0, 26, 51, 76});
  for (int s = 1; s < 4; ++s)
    for (int i = 0; i < 5; ++i)
      REQUIRE(std::get<LinearRegressionCost>(stream.segments[s][i]).features ==
              std::get<LinearRegressionCost>(stream.segments[0][i]).features);
  REQUIRE(stream.drift_bound > 0.0);
  REQUIRE(stream.drift_bound <= 3.0 * cs.drift_target);
  // Consecutive optima really are drift_bound or less apart.
  Eigen::VectorXd prev = centralized_oracle(stream.segments[0]);
  for (int s = 1; s < 4; ++s) {
    const Eigen::VectorXd cur = centralized_oracle(stream.segments[s]);
    REQUIRE((cur - prev).norm() <= stream.drift_bound * (1.0 + 1e-12));
    prev = cur;
  }
  // Deterministic regeneration.
  const CostStream again = build_stream(cs, 5, horizon, 7);
  REQUIRE(again.drift_bound == stream.drift_bound);
}

TEST_CASE("stream rejects a horizon shorter than the switch count") {
  CostSpec cs;
  cs.switches = 10;
  REQUIRE_THROWS_AS(build_stream(cs, 3, 5, 1), InvalidParams);
}

TEST_CASE("channel spec maps slow senders onto every outgoing edge") {
  const Topology g = build_topology(3, {{0, 1}, {1, 2}, {0, 2}});
  ChannelSpec cs;
  cs.p_fast = 0.9;
  cs.p_slow = 0.4;
  cs.slow_nodes = 1;
  const ChannelModel ch = build_channel(cs, g);
  for (int ell = 0; ell < g.xi; ++ell) {
    const double expect = g.edges[ell].second == 0 ? 0.4 : 0.9;
    REQUIRE(ch.activation_prob[ell] == expect);
  }
  REQUIRE(ch.p_min() == 0.4);
  REQUIRE(ch.p_max() == 0.9);
  cs.slow_nodes = 4;
  REQUIRE_THROWS_AS(build_channel(cs, g), InvalidParams);
  cs.slow_nodes = 0;
  cs.p_fast = 0.0;
  REQUIRE_THROWS_AS(build_channel(cs, g), InvalidParams);
}

TEST_CASE("quantizer only appears for positive delta") {
  const Topology g = build_topology(2, {{0, 1}});
  ChannelSpec cs;
  REQUIRE_FALSE(build_channel(cs, g).quantizer.has_value());
  cs.quantizer_delta = 0.25;
  cs.quantizer_max = 5.0;
  const ChannelModel ch = build_channel(cs, g);
  REQUIRE(ch.quantizer.has_value());
  REQUIRE(ch.quantizer->delta == 0.25);
  REQUIRE(ch.quantizer->q_max == 5.0);
}

TEST_CASE("problems built from csv datasets infer the dimension") {
  const auto path =
      std::filesystem::temp_directory_path() / "dotadmm_harness_data.csv";
  {
    std::ofstream out(path);
    out << "agent,sample,f0,f1,f2,label\n";
    for (int i = 0; i < 3; ++i)
      for (int s = 0; s < 2; ++s)
        out << i << "," << s << "," << 0.5 + i << "," << 0.25 * s << ",1.0,"
            << ((i + s) % 2 == 0 ? 1 : -1) << "\n";
  }
  Scenario s;
  s.topology.n = 3;
  s.topology.edge_list = {{0, 1}, {1, 2}};
  s.cost.logistic = true;
  s.cost.reg_weight = 1.0;
  s.cost.csv_path = path.string();
  s.cost.dimension = 99;  // must be ignored
  const Problem prob = build_problem(s);
  REQUIRE(prob.p == 3);
  REQUIRE(prob.stream.agents() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("rate setup modes") {
  Scenario s = tiny_linear_scenario();
  const Problem prob = build_problem(s);

  SECTION("none skips the analysis") {
    s.gamma_mode = GammaMode::none;
    const RateSetup rs = setup_rate(s, prob);
    REQUIRE_FALSE(rs.rate.has_value());
  }

  SECTION("fixed pins gamma") {
    s.gamma_mode = GammaMode::fixed;
    s.gamma_value = 3.5;
    const RateSetup rs = setup_rate(s, prob);
    REQUIRE(rs.gamma_hat == 3.5);
    REQUIRE(rs.rate.has_value());
    REQUIRE(rs.rate->gamma == 3.5);
    REQUIRE(rs.rate->p_min == 1.0);
    REQUIRE(rs.initial_distance > 0.0);
    s.gamma_value = -1.0;
    REQUIRE_THROWS_AS(setup_rate(s, prob), InvalidParams);
  }

  SECTION("automatic estimates are reproducible") {
    const RateSetup a = setup_rate(s, prob);
    const RateSetup b = setup_rate(s, prob);
    REQUIRE(a.gamma_hat == b.gamma_hat);
    REQUIRE(a.rate->mu == b.rate->mu);
    REQUIRE(a.rate->nu_e == 0.0);
  }
}

TEST_CASE("scenario runs are deterministic end to end") {
  const Scenario s = tiny_linear_scenario();
  const ScenarioResult a = run_scenario(s);
  const ScenarioResult b = run_scenario(s);
  REQUIRE(render_curve_csv(a) == render_curve_csv(b));
  REQUIRE(a.gamma_hat == b.gamma_hat);
  REQUIRE(a.asymptotic_error == b.asymptotic_error);
  REQUIRE(a.trials.size() == 3);
  REQUIRE(a.mean.ticks.size() == 60);
  // Different master seed, different realization.
  Scenario other = s;
  other.master_seed = 12;
  const ScenarioResult c = run_scenario(other);
  REQUIRE(render_curve_csv(a) != render_curve_csv(c));
}

TEST_CASE("a zero quantizer delta is bit-identical to no quantizer") {
  Scenario s = tiny_linear_scenario();
  s.channel.p_fast = 0.8;
  s.channel.noise_v = 0.01;
  s.channel.noise_u = 0.01;
  s.channel.quantizer_delta = 0.0;
  const ScenarioResult a = run_scenario(s);
  Scenario t = s;
  t.channel.quantizer_delta = 0.0;
  t.channel.quantizer_max = 99.0;  // irrelevant without a quantizer
  const ScenarioResult b = run_scenario(t);
  REQUIRE(render_curve_csv(a) == render_curve_csv(b));
}

TEST_CASE("trial curves converge on the tiny problem") {
  Scenario s = tiny_linear_scenario();
  s.horizon = 300;
  const ScenarioResult res = run_scenario(s);
  REQUIRE(res.rate.has_value());
  REQUIRE(res.rate->mu > 0.0);
  REQUIRE(res.rate->mu < 1.0);
  REQUIRE(res.asymptotic_error <= 1e-8);
  REQUIRE(res.empirical_rate > 0.0);
  REQUIRE(res.empirical_rate < 1.0);
  // Synchronous noise-free: every trial is the same deterministic curve.
  REQUIRE(res.trials[0].ticks.back().tracking_error ==
          res.trials[1].ticks.back().tracking_error);
}

TEST_CASE("observers see every tick") {
  Scenario s = tiny_linear_scenario();
  s.trials = 2;
  s.horizon = 10;
  s.gamma_mode = GammaMode::none;
  const Problem prob = build_problem(s);
  const RateSetup rs = setup_rate(s, prob);
  std::vector<int> ticks_seen(s.trials, 0);
  const ScenarioResult res = run_scenario(
      s, prob, rs, [&](int trial) -> TrialObserver {
        return [&ticks_seen, trial](const AgentSystem& sys, const StepTrace&) {
          REQUIRE(sys.k == ticks_seen[trial] + 1);
          ++ticks_seen[trial];
        };
      });
  REQUIRE(ticks_seen == std::vector<int>{10, 10});
  REQUIRE(std::isnan(res.mean.ticks.front().theory_bound));
}

TEST_CASE("threshold sweep reuses one problem instance") {
  Scenario s = tiny_linear_scenario();
  s.cost.logistic = true;
  s.cost.reg_weight = 2.0;
  s.trials = 1;
  s.horizon = 40;
  const std::vector<double> thetas{1e-3, 1e-6, 1e-9};
  const SweepResult sw = threshold_sweep(s, thetas);
  REQUIRE(sw.axis_values == thetas);
  REQUIRE(sw.asymptotic_error.size() == 3);
  REQUIRE(sw.mean_inner_iters.size() == 3);
  // Looser thresholds stop the inner solver earlier.
  REQUIRE(sw.mean_inner_iters[0] <= sw.mean_inner_iters[1]);
  REQUIRE(sw.mean_inner_iters[1] <= sw.mean_inner_iters[2]);
}

TEST_CASE("quantization sweep monotone on the tiny problem") {
  Scenario s = tiny_linear_scenario();
  s.trials = 2;
  s.horizon = 80;
  const std::vector<double> deltas{1e-3, 1e-1};
  const SweepResult sw = quantization_sweep(s, deltas);
  REQUIRE(sw.asymptotic_error[0] < sw.asymptotic_error[1]);
  REQUIRE(sw.asymptotic_error[0] > 0.0);
}

TEST_CASE("asynchrony experiment slows down with more slow nodes") {
  Scenario s = tiny_linear_scenario();
  s.trials = 8;
  s.horizon = 120;
  const std::vector<int> counts{0, 3};
  const SweepResult sw = asynchrony_experiment(s, counts, 0.3, 1.0);
  REQUIRE(sw.axis_values == std::vector<double>{0.0, 3.0});
  REQUIRE(sw.empirical_rate[0] < sw.empirical_rate[1]);
}

TEST_CASE("online experiment shares segment zero across switch counts") {
  Scenario s = tiny_linear_scenario();
  s.trials = 1;
  s.horizon = 80;
  s.gamma_mode = GammaMode::none;
  const std::vector<int> counts{2, 5};
  const auto results = online_experiment(s, counts);
  REQUIRE(results.size() == 2);
  // More switches leave less settling time per segment.
  REQUIRE(results[1].asymptotic_error >= 0.0);

  Scenario s2 = s;
  s2.cost.switches = 2;
  const Problem p2 = build_problem(s2);
  Scenario s5 = s;
  s5.cost.switches = 5;
  const Problem p5 = build_problem(s5);
  const auto& a = std::get<LinearRegressionCost>(p2.stream.segments[0][0]);
  const auto& b = std::get<LinearRegressionCost>(p5.stream.segments[0][0]);
  REQUIRE(a.features == b.features);
  REQUIRE(a.targets == b.targets);
}

TEST_CASE("scenario validation failures") {
  Scenario s = tiny_linear_scenario();
  s.horizon = 0;
  REQUIRE_THROWS_AS(build_problem(s), InvalidParams);
  s = tiny_linear_scenario();
  s.trials = 0;
  REQUIRE_THROWS_AS(build_problem(s), InvalidParams);
  s = tiny_linear_scenario();
  s.params.alpha = 1.5;
  REQUIRE_THROWS_AS(build_problem(s), InvalidParams);
}
