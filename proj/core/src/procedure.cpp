#include "rodspec/procedure.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "rodspec/errors.hpp"
#include "rodspec/io.hpp"

namespace rodspec {
namespace {

// Re-raises with the stage name while keeping the error category.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::vector<std::string>& names)
      : dir_(std::move(dir)), names_(names) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir_ / name).string());
    body(out);
    if (!out) throw ValidationError("write failed for " + (dir_ / name).string());
    names_.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string>& names_;
};

std::string threshold_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

}  // namespace

std::vector<double> time_grid(const ExperimentConfig& e) {
  std::vector<double> t(static_cast<std::size_t>(e.frames));
  for (int m = 0; m < e.frames; ++m) t[static_cast<std::size_t>(m)] = m * e.sample_time;
  return t;
}

std::vector<double> marker_grid(const RobotConfig& robot, const ExperimentConfig& e) {
  auto g = uniform_grid(0.0, robot.rod.length, e.markers - 1);
  return g;
}

Eigen::MatrixXd babble(const ExperimentConfig& e) {
  InputSignalSpec spec = e.signal;
  spec.seed = e.seed;
  const auto t = time_grid(e);
  return generate_input(spec, t);
}

SimulationRun simulate_markers(const RobotConfig& robot, const ExperimentConfig& e) {
  const GvsModel model = robot.model();
  const GvsDynamics dynamics(model);
  const Eigen::MatrixXd u = babble(e);
  const auto last = static_cast<Eigen::Index>(u.cols() - 1);
  const InputSignal input = [&](double t) -> VectorXd {
    const auto m = std::min(static_cast<Eigen::Index>(std::llround(t / e.sample_time)), last);
    return u.col(m);
  };
  const VectorXd zero = VectorXd::Zero(dynamics.dofs());
  const auto traj = simulate(dynamics, zero, zero, input, (e.frames - 1) * e.sample_time,
                             e.sample_time, e.substeps);
  SimulationRun run;
  run.poses.lambda_s = e.lambda_s(robot.rod.length);
  run.poses.sample_time = e.sample_time;
  const auto s = marker_grid(robot, e);
  for (const auto& sample : traj) {
    run.q.push_back(sample.q);
    run.poses.frames.push_back(forward_kinematics(model.basis, sample.q, model.rod, s));
  }
  return run;
}

PoseSeries acquire_poses(const RobotConfig& robot, const ExperimentConfig& e) {
  PoseSeries raw;
  if (e.pose_csv) {
    std::ifstream in(*e.pose_csv);
    if (!in) throw ValidationError("cannot open pose CSV '" + *e.pose_csv + "'");
    raw = read_pose_csv(in, e.lambda_s(robot.rod.length), e.sample_time);
    if (raw.markers() != e.markers) {
      throw LengthMismatch("pose CSV has " + std::to_string(raw.markers()) +
                           " markers, config expects " + std::to_string(e.markers));
    }
  } else {
    raw = project_poses(simulate_markers(robot, e).poses);
  }
  return normalize_poses(raw);
}

AnalysisReport run_procedure(const Config& config, const std::filesystem::path& out_dir) {
  const RobotConfig& robot = config.robot;
  const ExperimentConfig& e = config.experiment;
  robot.validate();
  e.validate(static_cast<int>(robot.actuators.size()));
  std::filesystem::create_directories(out_dir);

  AnalysisReport report;
  ArtifactWriter writer(out_dir, report.artifacts);
  const GvsModel model = robot.model();
  const BasisDictionary& dict = model.basis;
  report.dofs = dict.size();

  writer.write("config.json", [&](std::ostream& o) { o << config_to_json(config); });

  const auto t = time_grid(e);
  const Eigen::MatrixXd u = stage("babble", [&] { return babble(e); });
  writer.write("input.csv", [&](std::ostream& o) { write_input_csv(o, t, u); });

  const PoseSeries poses = stage("acquire", [&] { return acquire_poses(robot, e); });
  writer.write("poses.csv", [&](std::ostream& o) { write_pose_csv(o, poses); });

  const StrainGrid strain =
      stage("extract-strain", [&] { return extract_strain(poses, robot.rod.length); });
  writer.write("strain.csv", [&](std::ostream& o) { write_strain_csv(o, strain); });

  // Spectra of the last frame and, with more than one frame, of the whole record.
  stage("spectrum", [&] {
    const int last = strain.frames() - 1;
    const Spectrum plain = dsft(strain, last, 1);
    report.parseval_defect = parseval_defect(strain, plain, last);
    const Spectrum sft = dsft(strain, last, e.zero_pad);
    report.symmetry_defect = conjugate_symmetry_defect(sft);
    if (report.parseval_defect > 1e-10 || report.symmetry_defect > 1e-12 * (1.0 + strain.points())) {
      throw NumericalError("spectrum invariants violated (Parseval " +
                           std::to_string(report.parseval_defect) + ", symmetry " +
                           std::to_string(report.symmetry_defect) + ")");
    }
    const SpectrumCsvOptions opts{e.normalize_db};
    writer.write("spectrum_sft.csv", [&](std::ostream& o) { write_spectrum_csv(o, sft, opts); });
    if (strain.frames() >= 2) {
      const Spectrum stft = dstft(strain, e.zero_pad, e.time_zero_pad);
      if (parseval_defect(strain, stft) > 1e-10) {
        throw NumericalError("STFT Parseval invariant violated");
      }
      writer.write("spectrum_stft.csv", [&](std::ostream& o) { write_spectrum_csv(o, stft, opts); });
    }

    // Truncation indices and the cutoff act on the deformation xi - xi*.
    StrainGrid deformation = strain;
    for (int m = 0; m < strain.frames(); ++m) {
      for (int n = 0; n < strain.points(); ++n) {
        deformation.set_sample(m, n, strain.sample(m, n) - robot.stress_free);
      }
    }
    const Spectrum dev = dsft(deformation, last, 1);
    const int all_modes[] = {0, 1, 2, 3, 4, 5};
    try {
      report.cutoff = recommend_cutoff(dev, all_modes, e.energy_fraction, robot.rod.length);
    } catch (const ZeroEnergy&) {
      report.cutoff = CutoffRecommendation{};  // undeformed: DC only
    }
    writer.write("truncation.csv", [&](std::ostream& o) {
      o << "mode,N_max,index,exceeds_one\n";
      char buf[128];
      const Screw weights = mean_stiffness_diagonal(model.rod);
      for (int mode = 0; mode <= 6; ++mode) {
        for (int n_max = 1; n_max < dev.points(); ++n_max) {
          double idx = 0.0;
          try {
            idx = mode < 6 ? truncation_index(dev, mode, n_max)
                           : stiffness_weighted_truncation(dev, weights, n_max);
          } catch (const ZeroEnergy&) {
            break;  // mode carries no deformation
          }
          std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%d\n",
                        mode < 6 ? kModeNames[static_cast<std::size_t>(mode)] : "weighted", n_max,
                        idx, idx > 1.0 ? 1 : 0);
          o << buf;
        }
      }
    });
    return 0;
  });

  const SeriesFit fit = stage("fit", [&] {
    return bpd_fit_series(strain, dict, model.rod, e.fit, e.fit_block);
  });
  for (const auto& f : fit.frames) {
    report.fit_converged = report.fit_converged && f.converged;
    report.max_kkt_violation = std::max(report.max_kkt_violation, f.kkt_violation);
  }
  writer.write("fit.csv", [&](std::ostream& o) { write_fit_csv(o, fit, dict); });

  // Backbone errors for the full fit and every truncation threshold.
  const auto s = marker_grid(robot, e);
  std::ostringstream errors;
  errors << "threshold,t,s,position_error,orientation_error\n";
  const auto audit = [&](double threshold, const SeriesFit& sf) {
    ThresholdSummary sum;
    sum.threshold = threshold;
    sum.kept = static_cast<int>(std::count(sf.kept.begin(), sf.kept.end(), true));
    char buf[160];
    for (std::size_t m = 0; m < sf.frames.size(); ++m) {
      const auto rec = reconstruct_backbone(sf.frames[m].q, dict, model.rod, s);
      const auto err = backbone_errors(rec, poses.frames[m]);
      for (std::size_t n = 0; n < s.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", threshold, t[m], s[n],
                      err.position[n], err.orientation[n]);
        errors << buf;
      }
      sum.max_position_error = std::max(sum.max_position_error, err.max_position());
      sum.max_orientation_error = std::max(sum.max_orientation_error, err.max_orientation());
      sum.tip_position_error = std::max(sum.tip_position_error, err.position.back());
    }
    report.thresholds.push_back(sum);
  };
  stage("reconstruct", [&] {
    audit(0.0, fit);
    for (double th : e.thresholds) {
      const SeriesFit cut = truncate_bases(fit, strain, dict, model.rod, th);
      writer.write("fit_truncated_" + threshold_tag(th) + ".csv",
                   [&](std::ostream& o) { write_fit_csv(o, cut, dict); });
      audit(th, cut);
    }
    return 0;
  });
  writer.write("errors.csv", [&](std::ostream& o) { o << errors.str(); });

  nlohmann::json summary;
  summary["dofs"] = report.dofs;
  summary["frames"] = e.frames;
  summary["markers"] = e.markers;
  summary["lambda_s"] = e.lambda_s(robot.rod.length);
  summary["sample_time"] = e.sample_time;
  summary["parseval_defect"] = report.parseval_defect;
  summary["symmetry_defect"] = report.symmetry_defect;
  summary["cutoff"] = {{"bin", report.cutoff.bin},
                       {"k_max", report.cutoff.k_max},
                       {"lambda_max", std::isfinite(report.cutoff.lambda_max)
                                          ? nlohmann::json(report.cutoff.lambda_max)
                                          : nlohmann::json(nullptr)},
                       {"min_segments", report.cutoff.segments},
                       {"captured", report.cutoff.captured}};
  summary["fit_converged"] = report.fit_converged;
  summary["max_kkt_violation"] = report.max_kkt_violation;
  summary["thresholds"] = nlohmann::json::array();
  for (const auto& th : report.thresholds) {
    summary["thresholds"].push_back({{"threshold", th.threshold},
                                     {"kept", th.kept},
                                     {"max_position_error", th.max_position_error},
                                     {"max_orientation_error", th.max_orientation_error},
                                     {"tip_position_error", th.tip_position_error}});
  }
  writer.write("summary.json", [&](std::ostream& o) { o << summary.dump(2) << "\n"; });
  return report;
}

}  // namespace rodspec
