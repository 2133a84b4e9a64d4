#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dkmpc/harness/closed_loop.hpp"

namespace dkmpc::harness {

struct ErrorSummary
{
  double max = 0.0;
  double avg = 0.0;
  double rmse = 0.0;
};

/// Max / mean / RMS of |v|. Throws std::invalid_argument when empty.
ErrorSummary summarize(const std::vector<double>& values);

struct MetricsRow
{
  std::string controller;
  ErrorSummary ey;
  ErrorSummary dphi;
  double solve_ms_avg = 0.0;
  bool diverged = false;
};

MetricsRow compute_metrics(const RunTrace& trace);

/// Runs every setup on the scenario, in order. Divergence is recorded in the row.
std::vector<MetricsRow> compare(const Scenario& scenario, const std::vector<ControllerSetup>& setups,
                                std::uint64_t seed, std::vector<RunTrace>* traces = nullptr);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);

}  // namespace dkmpc::harness
