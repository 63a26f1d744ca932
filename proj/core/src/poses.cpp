#include "rodspec/poses.hpp"

#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {

void PoseSeries::validate() const {
  if (frames.empty()) throw ValidationError("poses: no frames");
  if (!(lambda_s > 0.0) || !(sample_time > 0.0)) {
    throw ValidationError("poses: lambda_s and T_s must be > 0");
  }
  const std::size_t n = frames.front().size();
  if (n < 2) throw ValidationError("poses: need at least two markers");
  for (const auto& f : frames) {
    if (f.size() != n) throw LengthMismatch("poses: frames have different marker counts");
  }
}

PoseSeries project_poses(const PoseSeries& raw, double tolerance) {
  PoseSeries out = raw;
  for (auto& frame : out.frames) {
    for (Pose& g : frame) g = Pose::nearest(g.rotation(), g.position(), tolerance);
  }
  return out;
}

PoseSeries normalize_poses(const PoseSeries& raw, double tolerance) {
  raw.validate();
  PoseSeries out;
  out.lambda_s = raw.lambda_s;
  out.sample_time = raw.sample_time;
  out.frames.reserve(raw.frames.size());
  for (const auto& frame : raw.frames) {
    const Pose base = Pose::nearest(frame.front().rotation(), frame.front().position(), tolerance);
    const Pose base_inv = base.inverse();
    std::vector<Pose> f;
    f.reserve(frame.size());
    for (const Pose& g : frame) {
      const Pose rel = base_inv * Pose::nearest(g.rotation(), g.position(), tolerance);
      f.push_back(Pose::nearest(rel.rotation(), rel.position(), tolerance));
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

StrainGrid extract_strain(const PoseSeries& poses, double length) {
  poses.validate();
  const int markers = poses.markers();
  const double l = length > 0.0 ? length : (markers - 1) * poses.lambda_s;
  StrainGrid grid(poses.frame_count(), markers - 1, poses.lambda_s, poses.sample_time, l,
                  0.5 * poses.lambda_s);
  for (int m = 0; m < poses.frame_count(); ++m) {
    const auto& f = poses.frames[static_cast<std::size_t>(m)];
    for (int n = 0; n + 1 < markers; ++n) {
      const Pose rel = f[static_cast<std::size_t>(n)].inverse() * f[static_cast<std::size_t>(n + 1)];
      try {
        grid.set_sample(m, n, log_se3(rel) / poses.lambda_s);
      } catch (const SingularRotation& e) {
        throw SingularRotation("extract_strain: marker " + std::to_string(n) + ", frame " +
                               std::to_string(m) + ": " + e.what());
      }
    }
  }
  return grid;
}

std::vector<Pose> reconstruct_backbone(const VectorXd& q, const BasisDictionary& dict,
                                       const RodProperties& rod, std::span<const double> s_grid) {
  return forward_kinematics(dict, q, rod, s_grid);
}

}  // namespace rodspec
