#include "dkmpc/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace dkmpc::harness {

ErrorSummary summarize(const std::vector<double>& values)
{
  if (values.empty())
    throw std::invalid_argument("cannot summarize an empty series");
  ErrorSummary s;
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    const double a = std::abs(v);
    s.max = std::max(s.max, a);
    sum += a;
    sq += a * a;
  }
  const double n = static_cast<double>(values.size());
  s.avg = sum / n;
  s.rmse = std::sqrt(sq / n);
  return s;
}

MetricsRow compute_metrics(const RunTrace& trace)
{
  if (trace.rows.empty())
    throw std::invalid_argument("cannot compute metrics of an empty trace");
  std::vector<double> ey;
  std::vector<double> dphi;
  double ms = 0.0;
  for (const auto& r : trace.rows) {
    ey.push_back(r.ey);
    dphi.push_back(r.dphi);
    ms += r.solve_ms;
  }
  MetricsRow m;
  m.controller = trace.controller;
  m.ey = summarize(ey);
  m.dphi = summarize(dphi);
  m.solve_ms_avg = ms / static_cast<double>(trace.rows.size());
  m.diverged = trace.diverged;
  return m;
}

std::vector<MetricsRow> compare(const Scenario& scenario, const std::vector<ControllerSetup>& setups,
                                std::uint64_t seed, std::vector<RunTrace>* traces)
{
  std::vector<MetricsRow> rows;
  for (const auto& setup : setups) {
    RunTrace t = run_closed_loop(scenario, setup, seed);
    rows.push_back(compute_metrics(t));
    if (traces)
      traces->push_back(std::move(t));
  }
  return rows;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows)
{
  os << "controller,eY_max,eY_avg,eY_rmse,dphi_max,dphi_avg,dphi_rmse,solve_ms_avg,diverged\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f,%d\n", r.controller.c_str(), r.ey.max,
                  r.ey.avg, r.ey.rmse, r.dphi.max, r.dphi.avg, r.dphi.rmse, r.solve_ms_avg, r.diverged ? 1 : 0);
    os << buf;
  }
}

}  // namespace dkmpc::harness
