#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dotadmm/errors.hpp"
#include "dotadmm/harness.hpp"

namespace dotadmm {

// CSV output. Numbers are written with %.17g so, together with fixed seeds,
// repeated runs produce byte-identical files.

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string render_curve_csv(const ScenarioResult& result) {
  std::string out = "k,trial,tracking_error,consensus_error,residual,theory_bound\n";
  auto emit = [&out](const RunRecord& rec, int trial) {
    for (const auto& m : rec.ticks) {
      out += std::to_string(m.k);
      out += ',';
      out += std::to_string(trial);
      out += ',';
      out += detail::csv_num(m.tracking_error);
      out += ',';
      out += detail::csv_num(m.consensus_error);
      out += ',';
      out += detail::csv_num(m.fixed_point_residual);
      out += ',';
      out += detail::csv_num(m.theory_bound);
      out += '\n';
    }
  };
  for (std::size_t t = 0; t < result.trials.size(); ++t)
    emit(result.trials[t], static_cast<int>(t));
  emit(result.mean, -1);
  return out;
}

inline std::string render_sweep_csv(const SweepResult& result) {
  std::string out = "axis_value,asymptotic_error,mean_inner_iters\n";
  for (std::size_t i = 0; i < result.axis_values.size(); ++i) {
    out += detail::csv_num(result.axis_values[i]);
    out += ',';
    out += detail::csv_num(result.asymptotic_error[i]);
    out += ',';
    out += detail::csv_num(result.mean_inner_iters[i]);
    out += '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing output file: " + path);
}

inline void write_curve_csv(const std::string& path,
                            const ScenarioResult& result) {
  write_file(path, render_curve_csv(result));
}

inline void write_sweep_csv(const std::string& path,
                            const SweepResult& result) {
  write_file(path, render_sweep_csv(result));
}

}  // namespace dotadmm
