#pragma once

#include <cstddef>
#include <vector>

#include "dkmpc/control/mpc.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::harness {

/// Double-lane-change layout along X; lane changes are half-cosine blends.
struct DlcGeometry
{
  double offset = 3.5;
  double entry = 15.0;
  double change_out = 30.0;
  double plateau = 25.0;
  double change_back = 25.0;
  double exit = 15.0;
  double trailing = 100.0;  // extra straight so the look-ahead never runs off the end
  double spacing = 0.05;    // sample spacing in X
  bool mirror = false;      // negate Y (and heading)

  void validate() const;
  double length() const { return entry + change_out + plateau + change_back + exit + trailing; }
  double lateral(double x) const;
  double slope(double x) const;  // dY/dX
  double max_slope() const;
};

struct Projection
{
  double s = 0.0;        // arc length of the foot point
  double lateral = 0.0;  // signed distance, left positive
  vehicle::Pose foot;    // foot point with interpolated heading
};

class ReferencePath
{
public:
  ReferencePath() = default;
  explicit ReferencePath(std::vector<vehicle::Pose> samples);

  const std::vector<vehicle::Pose>& samples() const { return samples_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }

  /// Nearest-point projection onto the polyline (global search).
  Projection project(double x, double y) const;
  /// Pose at arc length s (clamped to the path), heading interpolated.
  vehicle::Pose at(double s) const;

private:
  std::vector<vehicle::Pose> samples_;
  std::vector<double> arc_;
};

ReferencePath gen_dlc_reference(const DlcGeometry& geometry);

/// N_p poses spaced by vx * ts in arc length ahead of the vehicle's foot point.
control::ReferenceWindow reference_window(const ReferencePath& path, const vehicle::Pose& pose, double vx,
                                          double vx_ref, int np, double ts = vehicle::kSampleTime);

}  // namespace dkmpc::harness
