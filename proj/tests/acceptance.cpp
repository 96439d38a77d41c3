// Acceptance gate: one check per release criterion, each printing a single
// PASS/FAIL line. Invoke with the criterion number (1..10) or "all".
//
// Every tolerance is pinned here, not derived at runtime, so a regression
// anywhere in the stack turns exactly one of these lines red.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "dotadmm/dotadmm.hpp"

namespace {

using namespace dotadmm;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Least-squares slope of log10(err) against the tick index.
double log_slope(const std::vector<double>& err, int from, int len) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int i = from; i < from + len && i < static_cast<int>(err.size()); ++i) {
    const double y = std::log10(std::max(err[i], 1e-300));
    sx += m;
    sy += y;
    sxx += static_cast<double>(m) * m;
    sxy += m * y;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Exact regime: synchronous, noise free, tight prox -> linear convergence
//    to the centralized optimum.
// --------------------------------------------------------------------------
Outcome criterion1() {
  Scenario s;
  s.name = "c1-exact-regime";
  s.horizon = 1000;
  s.trials = 1;
  s.master_seed = 301;
  s.gamma_mode = GammaMode::none;
  s.topology.n = 10;
  s.topology.edges = 20;
  s.cost.logistic = false;
  s.cost.dimension = 4;
  s.cost.samples_per_agent = 10;
  s.params.alpha = 0.5;
  s.params.rho = 4.0;
  s.params.prox.threshold = 1e-14;

  const ScenarioResult res = run_scenario(s);
  const auto& ticks = res.trials[0].ticks;

  int hit = -1;
  for (std::size_t k = 0; k < ticks.size(); ++k)
    if (ticks[k].tracking_error <= 1e-10) {
      hit = static_cast<int>(k) + 1;
      break;
    }

  // Trailing window of the transient: the last 50 ticks with residual still
  // above 1e-12 must each contract.
  std::vector<int> transient;
  for (std::size_t k = 0; k < ticks.size(); ++k)
    if (ticks[k].fixed_point_residual > 1e-12)
      transient.push_back(static_cast<int>(k));
  int ratio_violations = 0;
  int window = 0;
  const int lo = std::max(1, static_cast<int>(transient.size()) - 50);
  for (int i = lo; i < static_cast<int>(transient.size()); ++i) {
    const int k = transient[i];
    if (k == 0) continue;
    ++window;
    if (!(ticks[k].fixed_point_residual < ticks[k - 1].fixed_point_residual))
      ++ratio_violations;
  }

  Outcome o;
  o.pass = hit > 0 && window >= 20 && ratio_violations == 0;
  o.detail = fmt("tracking<=1e-10 at tick %d; %d residual ratio violations "
                 "in a %d-tick trailing window",
                 hit, ratio_violations, window);
  return o;
}

// --------------------------------------------------------------------------
// 2. Prox solvers against independent oracles.
// --------------------------------------------------------------------------
Outcome criterion2() {
  const PropertyResult lin = check_prox_linear_oracle(2024);
  const PropertyResult log = check_prox_logistic_bisection(2024);
  Outcome o;
  o.pass = lin.passed && log.passed;
  o.detail = fmt("linear-vs-descent worst %.3e (tol 1e-8), "
                 "logistic-vs-bisection worst %.3e (tol 1e-6)",
                 lin.worst, log.worst);
  return o;
}

// --------------------------------------------------------------------------
// 3. Operator property suite, zero failures.
// --------------------------------------------------------------------------
Outcome criterion3() {
  const auto results = run_validation(false, 2024);
  int failed = 0;
  std::string names;
  for (const auto& r : results)
    if (!r.passed) {
      ++failed;
      names += " " + r.name;
    }
  Outcome o;
  o.pass = failed == 0;
  o.detail = fmt("%zu properties, %d failed%s", results.size(), failed,
                 names.c_str());
  return o;
}

// --------------------------------------------------------------------------
// 4. Closed-form rate value and monotonicity in the activation floor.
// --------------------------------------------------------------------------
Outcome criterion4() {
  const RateParameters rp = compute_mu(0.5, 1.0, 2.0);
  const double expect = std::sqrt(3.0) / 2.0;
  const double err = std::abs(rp.mu - expect);

  int violations = 0;
  for (int j = 0; j < 10; ++j) {
    const double gamma = 0.3 * std::pow(6.0 / 0.3, j / 9.0);
    double prev = 2.0;
    for (int i = 0; i < 10; ++i) {
      const double p_min = 0.05 + 0.1 * i;
      const double mu = compute_mu(0.5, p_min, gamma).mu;
      if (mu > prev + 1e-15) ++violations;
      prev = mu;
    }
  }

  Outcome o;
  o.pass = err <= 1e-12 && violations == 0;
  o.detail = fmt("|mu - sqrt(3)/2| = %.3e (tol 1e-12); %d monotonicity "
                 "violations on the 10x10 grid",
                 err, violations);
  return o;
}

// --------------------------------------------------------------------------
// 5. Mean curves stay under the rate bound built from the estimated
//    subregularity constant.
// --------------------------------------------------------------------------
Outcome criterion5() {
  Scenario s;
  s.name = "c5-bound";
  s.horizon = 400;
  s.trials = 100;
  s.master_seed = 505;
  s.gamma_mode = GammaMode::automatic;
  s.gamma_samples = 25;
  s.topology.n = 10;
  s.topology.edges = 20;
  s.cost.logistic = true;
  s.cost.dimension = 4;
  s.cost.samples_per_agent = 10;
  s.cost.reg_weight = 5.0;
  s.params.alpha = 0.5;
  s.params.rho = 1.0;
  s.params.prox.threshold = 1e-12;
  s.channel.p_fast = 1.0;
  s.channel.p_slow = 0.5;
  s.channel.slow_nodes = 5;
  s.channel.noise_v = 0.01;
  s.channel.noise_u = 0.01;

  const ScenarioResult res = run_scenario(s);
  Outcome o;
  if (!res.rate) {
    o.detail = "rate parameters missing";
    return o;
  }
  int tracking_viol = 0, residual_viol = 0;
  for (const auto& m : res.mean.ticks) {
    if (!(m.tracking_error <= m.theory_bound)) ++tracking_viol;
    if (!(m.fixed_point_residual <= m.theory_bound)) ++residual_viol;
  }
  o.pass = tracking_viol == 0 && residual_viol == 0;
  o.detail = fmt("gamma_hat=%.4g mu=%.6g nu_e=%.3g; violations over %zu "
                 "mean ticks: tracking %d, residual %d",
                 res.gamma_hat, res.rate->mu, res.rate->nu_e,
                 res.mean.ticks.size(), tracking_viol, residual_viol);
  return o;
}

Scenario table_scenario(std::uint64_t seed) {
  Scenario s;
  s.horizon = 300;
  s.trials = 1;
  s.master_seed = seed;
  s.gamma_mode = GammaMode::none;
  s.topology.n = 10;
  s.topology.edges = 20;
  s.cost.logistic = true;
  s.cost.dimension = 16;
  s.cost.samples_per_agent = 20;
  s.cost.reg_weight = 5.0;
  s.params.alpha = 0.5;
  s.params.rho = 1.0;
  return s;
}

// --------------------------------------------------------------------------
// 6. Inexactness sweep: asymptotic error tracks the prox threshold.
// --------------------------------------------------------------------------
Outcome criterion6() {
  Scenario s = table_scenario(606);
  s.name = "c6-threshold";
  const std::vector<double> thetas{1e-14, 1e-10, 1e-6, 1e-2};
  const SweepResult sw = threshold_sweep(s, thetas);
  const auto& e = sw.asymptotic_error;
  const bool monotone = e[0] < e[1] && e[1] < e[2] && e[2] < e[3];
  const bool tight_ok = e[0] <= 1e-8;
  const bool loose_ok = e[3] >= 1e-3 && e[3] <= 1.0;
  Outcome o;
  o.pass = monotone && tight_ok && loose_ok;
  o.detail = fmt("err = {%.3e, %.3e, %.3e, %.3e}; strictly monotone %s; "
                 "anchors %s/%s",
                 e[0], e[1], e[2], e[3], monotone ? "yes" : "NO",
                 tight_ok ? "ok" : "LOW FAIL", loose_ok ? "ok" : "HIGH FAIL");
  return o;
}

// --------------------------------------------------------------------------
// 7. Quantization sweep: error monotone and proportional to the grid step.
// --------------------------------------------------------------------------
Outcome criterion7() {
  Scenario s = table_scenario(707);
  s.name = "c7-quantization";
  s.params.prox.threshold = 1e-10;
  const std::vector<double> deltas{1e-4, 1e-2, 1e-1};
  const SweepResult sw = quantization_sweep(s, deltas);
  const auto& e = sw.asymptotic_error;
  const bool monotone = e[0] < e[1] && e[1] < e[2];
  double rmin = 1e300, rmax = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double r = e[i] / deltas[i];
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  Outcome o;
  o.pass = monotone && rmax <= 50.0 * rmin;
  o.detail = fmt("err = {%.3e, %.3e, %.3e}; err/delta in [%.3g, %.3g] "
                 "(spread %.3g, limit 50)",
                 e[0], e[1], e[2], rmin, rmax, rmax / rmin);
  return o;
}

// --------------------------------------------------------------------------
// 8. Asynchrony ordering: more slow senders, slower empirical rate.
// --------------------------------------------------------------------------
Outcome criterion8() {
  Scenario s;
  s.name = "c8-asynchrony";
  s.horizon = 250;
  s.trials = 100;
  s.master_seed = 808;
  s.gamma_mode = GammaMode::none;
  s.topology.n = 10;
  s.topology.edges = 20;
  s.cost.logistic = false;
  s.cost.dimension = 4;
  s.cost.samples_per_agent = 10;
  s.params.alpha = 0.5;
  s.params.rho = 4.0;
  s.params.prox.threshold = 1e-12;

  const std::vector<int> counts{0, 5, 10};
  const SweepResult sw = asynchrony_experiment(s, counts, 0.5, 1.0);
  const auto& r = sw.empirical_rate;
  Outcome o;
  bool sane = true;
  for (const double v : r) sane = sane && v > 0.0 && v < 1.0;
  o.pass = sane && r[0] < r[1] && r[1] < r[2];
  o.detail = fmt("empirical rates: N_s=0 -> %.4f, N_s=5 -> %.4f, "
                 "N_s=10 -> %.4f",
                 r[0], r[1], r[2]);
  return o;
}

// --------------------------------------------------------------------------
// 9. Online streams: switch frequency degrades time-averaged tracking;
//    every segment transient decays linearly in the log.
// --------------------------------------------------------------------------
Outcome criterion9() {
  Scenario base;
  base.name = "c9-online";
  base.horizon = 5000;
  base.trials = 1;
  base.master_seed = 909;
  base.gamma_mode = GammaMode::none;
  base.topology.n = 10;
  base.topology.edges = 20;
  base.cost.logistic = false;
  base.cost.dimension = 4;
  base.cost.samples_per_agent = 10;
  base.params.alpha = 0.5;
  base.params.rho = 1.0;
  base.params.prox.threshold = 1e-12;

  struct Case {
    double time_avg = 0.0;
    std::vector<double> slopes;
  };
  auto run_case = [&base](int switches) {
    Scenario s = base;
    s.cost.switches = switches;
    const Problem prob = build_problem(s);
    const RateSetup rs = setup_rate(s, prob);
    const ScenarioResult res = run_scenario(s, prob, rs);
    Case c;
    std::vector<double> err;
    err.reserve(res.mean.ticks.size());
    for (const auto& m : res.mean.ticks) {
      c.time_avg += m.tracking_error;
      err.push_back(m.tracking_error);
    }
    c.time_avg /= static_cast<double>(res.mean.ticks.size());
    const auto& starts = prob.stream.starts;
    for (std::size_t seg = 0; seg < starts.size(); ++seg) {
      const int first_tick = std::max(starts[seg], 1);
      const int last_tick = seg + 1 < starts.size() ? starts[seg + 1] - 1
                                                    : base.horizon;
      const int len = std::min(30, last_tick - first_tick + 1);
      if (len < 5) continue;
      c.slopes.push_back(log_slope(err, first_tick - 1, len));
    }
    return c;
  };

  const Case few = run_case(10);
  const Case many = run_case(100);

  int few_bad = 0;
  for (const double sl : few.slopes)
    if (!(sl <= -0.01)) ++few_bad;
  int many_neg = 0;
  for (const double sl : many.slopes)
    if (sl < 0.0) ++many_neg;
  const double many_frac =
      many.slopes.empty()
          ? 0.0
          : static_cast<double>(many_neg) / static_cast<double>(many.slopes.size());

  Outcome o;
  o.pass = many.time_avg > few.time_avg && few_bad == 0 && many_frac >= 0.95;
  o.detail = fmt("time-avg error: 10 switches %.3e vs 100 switches %.3e; "
                 "segment slopes: %zu/%zu <= -0.01 (few), %.0f%% negative "
                 "(many)",
                 few.time_avg, many.time_avg, few.slopes.size() - few_bad,
                 few.slopes.size(), 100.0 * many_frac);
  return o;
}

// --------------------------------------------------------------------------
// 10. Determinism: same master seed, byte-identical CSV.
// --------------------------------------------------------------------------
Outcome criterion10() {
  Scenario s;
  s.name = "c10-determinism";
  s.horizon = 80;
  s.trials = 3;
  s.master_seed = 1010;
  s.gamma_mode = GammaMode::automatic;
  s.gamma_samples = 10;
  s.topology.n = 6;
  s.topology.edges = 9;
  s.cost.logistic = true;
  s.cost.dimension = 3;
  s.cost.samples_per_agent = 6;
  s.cost.reg_weight = 2.0;
  s.params.alpha = 0.4;
  s.params.rho = 1.5;
  s.params.prox.threshold = 1e-10;
  s.channel.p_fast = 0.8;
  s.channel.p_slow = 0.5;
  s.channel.slow_nodes = 2;
  s.channel.noise_v = 0.01;
  s.channel.noise_u = 0.01;
  s.channel.quantizer_delta = 0.01;

  const std::string a = render_curve_csv(run_scenario(s));
  const std::string b = render_curve_csv(run_scenario(s));
  Outcome o;
  o.pass = !a.empty() && a == b;
  o.detail = fmt("%zu bytes, reruns %s", a.size(),
                 o.pass ? "identical" : "DIFFER");
  return o;
}

Outcome dispatch(int n) {
  switch (n) {
    case 1: return criterion1();
    case 2: return criterion2();
    case 3: return criterion3();
    case 4: return criterion4();
    case 5: return criterion5();
    case 6: return criterion6();
    case 7: return criterion7();
    case 8: return criterion8();
    case 9: return criterion9();
    case 10: return criterion10();
    default: return {false, "unknown criterion"};
  }
}

const char* kTitles[11] = {
    "",
    "exact-regime linear convergence",
    "prox oracle equivalence",
    "operator property suite",
    "rate formula and monotonicity",
    "mean bound consistency",
    "threshold sweep trend",
    "quantization sweep trend",
    "asynchrony rate ordering",
    "online switching trend",
    "seed determinism",
};

int run_one(int n) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = dispatch(n);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = fmt("exception: %s", e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL",
              n, kTitles[n], o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::strcmp(argv[1], "all") != 0) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "usage: %s <1..10|all>\n", argv[0]);
      return 1;
    }
    return run_one(n);
  }
  int failures = 0;
  for (int n = 1; n <= 10; ++n) failures += run_one(n);
  return failures == 0 ? 0 : 1;
}
