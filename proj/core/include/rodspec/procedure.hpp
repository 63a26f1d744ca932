#pragma once

// End-to-end data-driven procedure: babble, simulate or ingest, extract strain,
// compute spectra, fit, truncate and compare reconstructed backbones.

#include <filesystem>
#include <string>
#include <vector>

#include "rodspec/config.hpp"
#include "rodspec/fitting.hpp"
#include "rodspec/poses.hpp"
#include "rodspec/spectra.hpp"

namespace rodspec {

/// m T_s for m in [0, frames).
std::vector<double> time_grid(const ExperimentConfig& experiment);
/// Marker abscissae n lambda_s, n in [0, markers).
std::vector<double> marker_grid(const RobotConfig& robot, const ExperimentConfig& experiment);

Eigen::MatrixXd babble(const ExperimentConfig& experiment);

struct SimulationRun {
  std::vector<VectorXd> q;  // per frame
  PoseSeries poses;         // marker poses per frame, as simulated
};

/// RK4 from rest under the babbling input (zero-order hold per sample), then forward
/// kinematics at the markers for every frame.
SimulationRun simulate_markers(const RobotConfig& robot, const ExperimentConfig& experiment);

/// Simulated or ingested poses, projected and rebased exactly as a pose CSV would be.
PoseSeries acquire_poses(const RobotConfig& robot, const ExperimentConfig& experiment);

struct ThresholdSummary {
  double threshold = 0.0;
  int kept = 0;
  double max_position_error = 0.0;     // over frames and markers
  double max_orientation_error = 0.0;
  double tip_position_error = 0.0;     // max over frames at the last marker
};

struct AnalysisReport {
  std::vector<std::string> artifacts;  // file names written, in order
  int dofs = 0;
  CutoffRecommendation cutoff;
  double parseval_defect = 0.0;
  double symmetry_defect = 0.0;
  bool fit_converged = true;
  double max_kkt_violation = 0.0;
  std::vector<ThresholdSummary> thresholds;  // first entry is the untruncated fit
};

/// Runs every stage and writes the artifacts into `out_dir` (created if missing).
/// Errors keep their category and carry the stage name.
AnalysisReport run_procedure(const Config& config, const std::filesystem::path& out_dir);

}  // namespace rodspec
