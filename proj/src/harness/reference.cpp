#include "dkmpc/harness/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dkmpc::harness {

void DlcGeometry::validate() const
{
  for (double v : {entry, change_out, plateau, change_back, exit, trailing})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("section lengths must be finite and non-negative");
  if (!(change_out > 0.0) || !(change_back > 0.0))
    throw std::invalid_argument("lane-change sections must have positive length");
  if (!std::isfinite(offset))
    throw std::invalid_argument("lateral offset must be finite");
  if (!(spacing > 0.0) || spacing > 1.0)
    throw std::invalid_argument("sample spacing must lie in (0, 1] m");
}

namespace {

double blend(double u)
{
  return 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

double blend_slope(double u)
{
  return 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u);
}

}  // namespace

double DlcGeometry::lateral(double x) const
{
  const double sign = mirror ? -1.0 : 1.0;
  const double a = entry;
  const double b = a + change_out;
  const double c = b + plateau;
  const double d = c + change_back;
  double y = 0.0;
  if (x <= a)
    y = 0.0;
  else if (x < b)
    y = offset * blend((x - a) / change_out);
  else if (x <= c)
    y = offset;
  else if (x < d)
    y = offset * (1.0 - blend((x - c) / change_back));
  return sign * y;
}

double DlcGeometry::slope(double x) const
{
  const double sign = mirror ? -1.0 : 1.0;
  const double a = entry;
  const double b = a + change_out;
  const double c = b + plateau;
  const double d = c + change_back;
  double m = 0.0;
  if (x > a && x < b)
    m = offset * blend_slope((x - a) / change_out) / change_out;
  else if (x > c && x < d)
    m = -offset * blend_slope((x - c) / change_back) / change_back;
  return sign * m;
}

double DlcGeometry::max_slope() const
{
  return 0.5 * std::numbers::pi * std::abs(offset) / std::min(change_out, change_back);
}

ReferencePath gen_dlc_reference(const DlcGeometry& g)
{
  g.validate();
  const auto n = static_cast<std::size_t>(std::ceil(g.length() / g.spacing));
  std::vector<vehicle::Pose> samples;
  samples.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = std::min(g.length(), static_cast<double>(i) * g.spacing);
    samples.push_back({x, g.lateral(x), std::atan(g.slope(x))});
  }
  return ReferencePath(std::move(samples));
}

ReferencePath::ReferencePath(std::vector<vehicle::Pose> samples) : samples_(std::move(samples))
{
  if (samples_.size() < 2)
    throw std::invalid_argument("reference path needs at least two samples");
  arc_.resize(samples_.size());
  arc_[0] = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const double ds = std::hypot(samples_[i].x - samples_[i - 1].x, samples_[i].y - samples_[i - 1].y);
    if (!(ds > 0.0))
      throw std::invalid_argument("reference samples must be distinct");
    arc_[i] = arc_[i - 1] + ds;
  }
}

Projection ReferencePath::project(double x, double y) const
{
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    const auto& p0 = samples_[i];
    const auto& p1 = samples_[i + 1];
    const double dx = p1.x - p0.x;
    const double dy = p1.y - p0.y;
    const double len2 = dx * dx + dy * dy;
    const double t = std::clamp(((x - p0.x) * dx + (y - p0.y) * dy) / len2, 0.0, 1.0);
    const double fx = p0.x + t * dx;
    const double fy = p0.y + t * dy;
    const double d2 = (x - fx) * (x - fx) + (y - fy) * (y - fy);
    if (d2 < best_d2) {
      best_d2 = d2;
      const double cross = dx * (y - fy) - dy * (x - fx);
      best.s = arc_[i] + t * (arc_[i + 1] - arc_[i]);
      best.lateral = std::copysign(std::sqrt(d2), cross);
      if (cross == 0.0)
        best.lateral = 0.0;
      best.foot = {fx, fy, p0.theta + t * (p1.theta - p0.theta)};
    }
  }
  return best;
}

vehicle::Pose ReferencePath::at(double s) const
{
  if (s <= 0.0)
    return samples_.front();
  if (s >= arc_.back())
    return samples_.back();
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - arc_.begin()) - 1;
  const double t = (s - arc_[i]) / (arc_[i + 1] - arc_[i]);
  const auto& p0 = samples_[i];
  const auto& p1 = samples_[i + 1];
  return {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y), p0.theta + t * (p1.theta - p0.theta)};
}

control::ReferenceWindow reference_window(const ReferencePath& path, const vehicle::Pose& pose, double vx,
                                          double vx_ref, int np, double ts)
{
  const Projection proj = path.project(pose.x, pose.y);
  control::ReferenceWindow w;
  w.vx_ref = vx_ref;
  const double step = std::max(vx, 0.0) * ts;
  for (int i = 1; i <= np; ++i)
    w.poses.push_back(path.at(proj.s + i * step));
  return w;
}

}  // namespace dkmpc::harness
