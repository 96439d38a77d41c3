// Command-line front end: run a scenario, sweep one knob, or self-check.
//
// Exit codes: 0 success, 1 failed validation, 2 configuration problem
// (bad flags or a bad config file; the message names the offending key),
// 3 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dotadmm/dotadmm.hpp"

namespace {

int classify(const std::exception& e) {
  using namespace dotadmm;
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const InvalidParams*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) ||
      dynamic_cast<const InfeasibleEdgeCount*>(&e) ||
      dynamic_cast<const DuplicateEdge*>(&e) ||
      dynamic_cast<const IndexOutOfRange*>(&e) ||
      dynamic_cast<const DisconnectedGraph*>(&e))
    return 2;
  return 3;
}

std::string output_path(const std::string& dir, const char* file) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / file).string();
}

void print_rate(const dotadmm::ScenarioResult& res) {
  if (res.rate) {
    const auto& rp = *res.rate;
    std::printf("gamma_hat          : %.10g\n", res.gamma_hat);
    std::printf("mu                 : %.10g\n", rp.mu);
    std::printf("initial distance   : %.10g\n", res.initial_distance);
    const double asym = std::sqrt(rp.p_max / rp.p_min) *
                        (rp.nu_e + rp.mu * rp.sigma) / (1.0 - rp.mu);
    std::printf("theory asymptote   : %.10g\n", asym);
  } else {
    std::printf("rate parameters    : n/a (gamma = none)\n");
  }
}

int cmd_run(const std::string& cfg_path, const std::string& out_dir,
            bool seed_set, std::uint64_t seed) {
  dotadmm::Scenario s = dotadmm::load_scenario(cfg_path);
  if (seed_set) s.master_seed = seed;
  const dotadmm::ScenarioResult res = dotadmm::run_scenario(s);

  std::printf("scenario           : %s\n", s.name.c_str());
  std::printf("trials x horizon   : %d x %d\n", s.trials, s.horizon);
  print_rate(res);
  const auto& mean = res.mean.ticks;
  std::printf("final mean error   : %.10g\n", mean.back().tracking_error);
  std::printf("asymptotic error   : %.10g\n", res.asymptotic_error);
  std::printf("empirical rate     : %.10g\n", res.empirical_rate);
  std::printf("mean inner iters   : %.10g\n", res.mean_inner_iterations);
  if (res.rate) {
    int violations = 0;
    for (const auto& m : mean)
      if (m.tracking_error > m.theory_bound) ++violations;
    std::printf("bound violations   : %d of %d mean ticks\n", violations,
                static_cast<int>(mean.size()));
  }
  const std::string path = output_path(out_dir, "curve.csv");
  dotadmm::write_curve_csv(path, res);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_sweep(const std::string& cfg_path, const std::string& out_dir,
              bool seed_set, std::uint64_t seed, const std::string& axis,
              const std::vector<double>& values) {
  dotadmm::Scenario s = dotadmm::load_scenario(cfg_path);
  if (seed_set) s.master_seed = seed;

  dotadmm::SweepResult sw;
  if (axis == "theta") {
    sw = dotadmm::threshold_sweep(s, values);
  } else if (axis == "delta") {
    sw = dotadmm::quantization_sweep(s, values);
  } else {
    std::vector<int> counts;
    counts.reserve(values.size());
    for (const double v : values) counts.push_back(static_cast<int>(v));
    sw = dotadmm::asynchrony_experiment(s, counts, s.channel.p_slow,
                                        s.channel.p_fast);
  }

  std::printf("scenario           : %s\n", s.name.c_str());
  std::printf("axis               : %s\n", axis.c_str());
  std::printf("%-14s %-22s %-18s %s\n", "axis_value", "asymptotic_error",
              "mean_inner_iters", "empirical_rate");
  for (std::size_t i = 0; i < sw.axis_values.size(); ++i)
    std::printf("%-14.6g %-22.12g %-18.6g %.6g\n", sw.axis_values[i],
                sw.asymptotic_error[i], sw.mean_inner_iters[i],
                sw.empirical_rate[i]);
  bool monotone = true;
  for (std::size_t i = 1; i < sw.asymptotic_error.size(); ++i)
    monotone = monotone && sw.asymptotic_error[i] >= sw.asymptotic_error[i - 1];
  std::printf("asymptotic error monotone along axis: %s\n",
              monotone ? "yes" : "no");
  const std::string path = output_path(out_dir, "sweep.csv");
  dotadmm::write_sweep_csv(path, sw);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_validate(bool full, std::uint64_t seed) {
  const auto results = dotadmm::run_validation(full, seed);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %-28s worst %.3e  (%s)\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.worst, r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%d of %zu properties passed\n",
              static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed online ADMM simulator"};
  app.require_subcommand(1);

  std::string cfg_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string axis;
  std::vector<double> values;
  bool full = false;
  std::uint64_t validate_seed = 2024;

  auto* run_cmd = app.add_subcommand("run", "Run one scenario, write curve.csv");
  run_cmd->add_option("config", cfg_path, "Scenario config file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  auto* run_seed = run_cmd->add_option("--seed", seed, "Master seed override");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "Sweep one knob, write sweep.csv");
  sweep_cmd->add_option("config", cfg_path, "Scenario config file")->required();
  sweep_cmd->add_option("--axis", axis, "theta | delta | slow_nodes")
      ->required()
      ->check(CLI::IsMember({"theta", "delta", "slow_nodes"}));
  sweep_cmd->add_option("--values", values, "Comma-separated axis values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "Output directory");
  auto* sweep_seed =
      sweep_cmd->add_option("--seed", seed, "Master seed override");

  auto* val_cmd = app.add_subcommand("validate", "Run the property suite");
  val_cmd->add_flag("--full", full, "Include the slow checks");
  val_cmd->add_option("--seed", validate_seed, "Property suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed())
      return cmd_run(cfg_path, out_dir, run_seed->count() > 0, seed);
    if (sweep_cmd->parsed())
      return cmd_sweep(cfg_path, out_dir, sweep_seed->count() > 0, seed, axis,
                       values);
    return cmd_validate(full, validate_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  }
}
