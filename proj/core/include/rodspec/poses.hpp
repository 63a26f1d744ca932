#pragma once

// Marker pose series, strain extraction and backbone reconstruction.

#include <span>
#include <vector>

#include "rodspec/basis.hpp"
#include "rodspec/gvs.hpp"
#include "rodspec/liealg.hpp"
#include "rodspec/spectra.hpp"

namespace rodspec {

/// g(n lambda_s, m T_s): frames[m][n], marker 0 is the base.
struct PoseSeries {
  std::vector<std::vector<Pose>> frames;
  double lambda_s = 0.0;
  double sample_time = 0.0;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int markers() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }
  void validate() const;
};

/// Projects every rotation onto SO(3); this is what reading a pose CSV applies.
PoseSeries project_poses(const PoseSeries& raw, double tolerance = 1e-6);

/// Expresses every frame in its base marker frame and projects rotations onto SO(3)
/// (rejecting matrices further than `tolerance` from orthonormal).
PoseSeries normalize_poses(const PoseSeries& raw, double tolerance = 1e-6);

/// xi at s = (n + 1/2) lambda_s from the relative log of markers n and n + 1, divided
/// by lambda_s. The grid length defaults to (N - 1) lambda_s. Throws SingularRotation
/// naming (n, m) when a relative rotation reaches pi.
StrainGrid extract_strain(const PoseSeries& poses, double length = 0.0);

/// Forward kinematics of B_q q + xi* on s_grid.
std::vector<Pose> reconstruct_backbone(const VectorXd& q, const BasisDictionary& dict,
                                       const RodProperties& rod, std::span<const double> s_grid);

}  // namespace rodspec
