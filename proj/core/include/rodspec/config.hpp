#pragma once

// Robot and experiment configuration, read from JSON with top-level keys
// "robot" and "experiment". Unknown keys are rejected.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rodspec/fitting.hpp"
#include "rodspec/gvs.hpp"
#include "rodspec/signals.hpp"

namespace rodspec {

enum class BasisFamily { polynomial, fourier, gaussian };

struct BasisSpec {
  BasisFamily family = BasisFamily::polynomial;
  int order = 2;
  std::array<bool, kStrainModes> modes = BasisDictionary::all_modes();
};

struct RobotConfig {
  RodProperties rod;
  Screw stress_free = RodProperties::default_stress_free();
  std::vector<ActuatorRouting> actuators;
  Screw gravity = Screw::Zero();
  std::vector<BasisSpec> basis{BasisSpec{}};
  int quadrature_points = 200;

  BasisDictionary dictionary() const;
  GvsModel model() const;
  void validate() const;
};

struct ExperimentConfig {
  int markers = 33;            // lambda_s = L / (markers - 1)
  double sample_time = 0.01;   // T_s
  int frames = 50;             // M
  int substeps = 30;           // RK4 steps per sample interval (keeps h below the stiff-mode limit)
  InputSignalSpec signal;
  std::optional<std::string> pose_csv;  // ingest poses instead of simulating
  BPDConfig fit;
  int fit_block = 0;
  std::vector<double> thresholds{0.01, 0.05};
  int zero_pad = 4;
  int time_zero_pad = 1;
  double energy_fraction = 0.99;  // for the cutoff recommendation
  bool normalize_db = true;
  std::uint64_t seed = 1;

  double lambda_s(double length) const { return length / (markers - 1); }
  void validate(int actuators) const;
};

struct Config {
  RobotConfig robot;
  ExperimentConfig experiment;
};

/// Desk robot: the default cylinder, three longitudinal chambers and four
/// single-turn helicoidal tendons, second-order polynomial bases on all modes.
RobotConfig desk_robot();
/// Step babbling on the first actuator with a mild fit penalty.
ExperimentConfig desk_experiment();
Config default_config();

Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);
/// Canonical JSON rendering (stable key order, round-trip doubles).
std::string config_to_json(const Config& config);

}  // namespace rodspec
