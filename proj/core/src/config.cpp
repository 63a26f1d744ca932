#include "rodspec/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config: bad value for " + where + "." + key + ": " + e.what());
  }
}

Screw read_screw(const json& j, const std::string& where) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError("config: " + where + " must be a list of numbers");
  }
  if (v.size() != 6) throw ValidationError("config: " + where + " needs 6 entries");
  return Eigen::Map<const Screw>(v.data());
}

std::vector<double> screw_list(const Screw& s) { return {s.data(), s.data() + 6}; }

int mode_index(const std::string& name) {
  for (int i = 0; i < kStrainModes; ++i) {
    if (name == kModeNames[static_cast<std::size_t>(i)]) return i;
  }
  throw ValidationError("config: unknown strain mode '" + name + "'");
}

const char* family_name(BasisFamily f) {
  switch (f) {
    case BasisFamily::polynomial: return "polynomial";
    case BasisFamily::fourier: return "fourier";
    case BasisFamily::gaussian: return "gaussian";
  }
  return "?";
}

const char* signal_name(SignalKind k) {
  switch (k) {
    case SignalKind::step: return "step";
    case SignalKind::chirp: return "chirp";
    case SignalKind::white_noise: return "white_noise";
  }
  return "?";
}

RobotConfig parse_robot(const json& j) {
  check_keys(j, {"rod", "actuators", "gravity", "basis", "quadrature_points"}, "robot");
  RobotConfig r = desk_robot();
  if (j.contains("rod")) {
    const json& rod = j.at("rod");
    check_keys(rod, {"preset", "length", "radius", "taper", "density", "young_modulus",
                     "poisson_ratio", "damping", "stress_free"}, "robot.rod");
    std::string preset = "cylinder";
    read(rod, "preset", preset, "robot.rod");
    if (preset == "cylinder") {
      r.rod = RodProperties::cylinder();
    } else if (preset == "cone") {
      r.rod = RodProperties::cone();
    } else {
      throw ValidationError("config: unknown rod preset '" + preset + "'");
    }
    read(rod, "length", r.rod.length, "robot.rod");
    read(rod, "radius", r.rod.base_radius, "robot.rod");
    read(rod, "taper", r.rod.taper, "robot.rod");
    read(rod, "density", r.rod.density, "robot.rod");
    read(rod, "young_modulus", r.rod.young_modulus, "robot.rod");
    read(rod, "poisson_ratio", r.rod.poisson_ratio, "robot.rod");
    read(rod, "damping", r.rod.damping, "robot.rod");
    if (rod.contains("stress_free")) r.stress_free = read_screw(rod.at("stress_free"), "robot.rod.stress_free");
  }
  if (j.contains("actuators")) {
    r.actuators.clear();
    for (const json& a : j.at("actuators")) {
      check_keys(a, {"kind", "offset_radius", "phase", "turns"}, "robot.actuators[]");
      ActuatorRouting act;
      std::string kind = "longitudinal";
      read(a, "kind", kind, "robot.actuators[]");
      if (kind == "longitudinal") {
        act.kind = RoutingKind::longitudinal;
      } else if (kind == "helicoidal") {
        act.kind = RoutingKind::helicoidal;
      } else {
        throw ValidationError("config: unknown actuator kind '" + kind + "'");
      }
      read(a, "offset_radius", act.offset_radius, "robot.actuators[]");
      read(a, "phase", act.phase, "robot.actuators[]");
      read(a, "turns", act.turns, "robot.actuators[]");
      r.actuators.push_back(act);
    }
  }
  if (j.contains("gravity")) r.gravity = read_screw(j.at("gravity"), "robot.gravity");
  if (j.contains("basis")) {
    r.basis.clear();
    for (const json& b : j.at("basis")) {
      check_keys(b, {"family", "order", "modes"}, "robot.basis[]");
      BasisSpec spec;
      std::string family = "polynomial";
      read(b, "family", family, "robot.basis[]");
      if (family == "polynomial") {
        spec.family = BasisFamily::polynomial;
      } else if (family == "fourier") {
        spec.family = BasisFamily::fourier;
      } else if (family == "gaussian") {
        spec.family = BasisFamily::gaussian;
      } else {
        throw ValidationError("config: unknown basis family '" + family + "'");
      }
      read(b, "order", spec.order, "robot.basis[]");
      if (b.contains("modes")) {
        spec.modes.fill(false);
        for (const json& m : b.at("modes")) spec.modes[static_cast<std::size_t>(mode_index(m.get<std::string>()))] = true;
      }
      r.basis.push_back(spec);
    }
  }
  read(j, "quadrature_points", r.quadrature_points, "robot");
  r.validate();
  return r;
}

ExperimentConfig parse_experiment(const json& j, int actuators) {
  check_keys(j, {"markers", "sample_time", "frames", "substeps", "signal", "pose_csv", "fit",
                 "thresholds", "zero_pad", "time_zero_pad", "energy_fraction", "normalize_db",
                 "seed"}, "experiment");
  ExperimentConfig e = desk_experiment();
  read(j, "markers", e.markers, "experiment");
  read(j, "sample_time", e.sample_time, "experiment");
  read(j, "frames", e.frames, "experiment");
  read(j, "substeps", e.substeps, "experiment");
  if (j.contains("signal")) {
    const json& s = j.at("signal");
    check_keys(s, {"kind", "amplitude", "f0", "f1", "duration", "stddev", "rectify"},
               "experiment.signal");
    std::string kind = signal_name(e.signal.kind);
    read(s, "kind", kind, "experiment.signal");
    if (kind == "step") {
      e.signal.kind = SignalKind::step;
    } else if (kind == "chirp") {
      e.signal.kind = SignalKind::chirp;
    } else if (kind == "white_noise") {
      e.signal.kind = SignalKind::white_noise;
    } else {
      throw ValidationError("config: unknown signal kind '" + kind + "'");
    }
    read(s, "amplitude", e.signal.amplitude, "experiment.signal");
    read(s, "f0", e.signal.f0, "experiment.signal");
    read(s, "f1", e.signal.f1, "experiment.signal");
    read(s, "duration", e.signal.duration, "experiment.signal");
    read(s, "stddev", e.signal.stddev, "experiment.signal");
    read(s, "rectify", e.signal.rectify, "experiment.signal");
  }
  if (j.contains("pose_csv")) e.pose_csv = j.at("pose_csv").get<std::string>();
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, {"gamma", "atom_gamma", "max_iterations", "tolerance", "block_size"},
               "experiment.fit");
    if (f.contains("gamma")) e.fit.gamma = read_screw(f.at("gamma"), "experiment.fit.gamma");
    read(f, "atom_gamma", e.fit.atom_gamma, "experiment.fit");
    read(f, "max_iterations", e.fit.max_iterations, "experiment.fit");
    read(f, "tolerance", e.fit.tolerance, "experiment.fit");
    read(f, "block_size", e.fit_block, "experiment.fit");
  }
  read(j, "thresholds", e.thresholds, "experiment");
  read(j, "zero_pad", e.zero_pad, "experiment");
  read(j, "time_zero_pad", e.time_zero_pad, "experiment");
  read(j, "energy_fraction", e.energy_fraction, "experiment");
  read(j, "normalize_db", e.normalize_db, "experiment");
  read(j, "seed", e.seed, "experiment");
  e.signal.seed = e.seed;
  e.validate(actuators);
  return e;
}

}  // namespace

BasisDictionary RobotConfig::dictionary() const {
  BasisDictionary d(rod.length);
  for (const BasisSpec& b : basis) {
    for (int m = 0; m < kStrainModes; ++m) {
      if (!b.modes[static_cast<std::size_t>(m)]) continue;
      switch (b.family) {
        case BasisFamily::polynomial: d.add_polynomial(m, b.order); break;
        case BasisFamily::fourier: d.add_fourier(m, b.order); break;
        case BasisFamily::gaussian: d.add_gaussian(m, b.order); break;
      }
    }
  }
  return d;
}

GvsModel RobotConfig::model() const {
  GvsModel m;
  m.rod = rod;
  m.rod.stress_free = RodProperties::constant_strain(stress_free);
  m.basis = dictionary();
  m.actuators = actuators;
  m.gravity = gravity;
  m.quadrature_points = quadrature_points;
  return m;
}

void RobotConfig::validate() const {
  rod.validate();
  for (const auto& a : actuators) a.validate(rod);
  if (basis.empty()) throw EmptyDictionary("config: robot.basis is empty");
  for (const auto& b : basis) {
    if (b.order < 0) throw ValidationError("config: basis order must be >= 0");
  }
  if (quadrature_points < 1) throw ValidationError("config: quadrature_points must be >= 1");
  if (dictionary().empty()) throw EmptyDictionary("config: basis selects no modes");
}

void ExperimentConfig::validate(int actuators) const {
  if (markers < 3) throw ValidationError("config: need at least 3 markers");
  if (!(sample_time > 0.0)) throw ValidationError("config: sample_time must be > 0");
  if (frames < 1) throw ValidationError("config: frames must be >= 1");
  if (substeps < 1) throw ValidationError("config: substeps must be >= 1");
  signal.validate();
  if (signal.actuators() != actuators) {
    throw LengthMismatch("config: signal amplitude count differs from the actuator count");
  }
  fit.validate(fit.atom_gamma.empty() ? 0 : static_cast<int>(fit.atom_gamma.size()));
  if (fit_block < 0) throw ValidationError("config: fit block size must be >= 0");
  for (double t : thresholds) {
    if (!(t >= 0.0 && t < 1.0)) throw ValidationError("config: thresholds must lie in [0, 1)");
  }
  if (zero_pad < 1 || time_zero_pad < 1) throw ValidationError("config: zero-pad factors must be >= 1");
  if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
    throw ValidationError("config: energy_fraction must lie in (0, 1]");
  }
}

RobotConfig desk_robot() {
  RobotConfig r;
  r.rod = RodProperties::cylinder();
  const double pi = std::numbers::pi;
  for (int a = 0; a < 3; ++a) {
    r.actuators.push_back({RoutingKind::longitudinal, 0.05, 2.0 * pi * a / 3.0, 0.0});
  }
  for (int a = 0; a < 4; ++a) {
    r.actuators.push_back({RoutingKind::helicoidal, 0.08, 0.5 * pi * a, 1.0});
  }
  return r;
}

ExperimentConfig desk_experiment() {
  ExperimentConfig e;
  e.signal.kind = SignalKind::step;
  e.signal.amplitude = {2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  e.fit.gamma = Screw::Constant(1e-4);
  return e;
}

Config default_config() { return {desk_robot(), desk_experiment()}; }

Config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, {"robot", "experiment"}, "top level");
  Config c;
  c.robot = j.contains("robot") ? parse_robot(j.at("robot")) : desk_robot();
  c.experiment = j.contains("experiment")
                     ? parse_experiment(j.at("experiment"), static_cast<int>(c.robot.actuators.size()))
                     : desk_experiment();
  c.experiment.validate(static_cast<int>(c.robot.actuators.size()));
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const Config& c) {
  json robot;
  const auto& rod = c.robot.rod;
  robot["rod"] = {{"length", rod.length},
                  {"radius", rod.base_radius},
                  {"taper", rod.taper},
                  {"density", rod.density},
                  {"young_modulus", rod.young_modulus},
                  {"poisson_ratio", rod.poisson_ratio},
                  {"damping", rod.damping},
                  {"stress_free", screw_list(c.robot.stress_free)}};
  robot["actuators"] = json::array();
  for (const auto& a : c.robot.actuators) {
    robot["actuators"].push_back(
        {{"kind", a.kind == RoutingKind::longitudinal ? "longitudinal" : "helicoidal"},
         {"offset_radius", a.offset_radius},
         {"phase", a.phase},
         {"turns", a.turns}});
  }
  robot["gravity"] = screw_list(c.robot.gravity);
  robot["basis"] = json::array();
  for (const auto& b : c.robot.basis) {
    json modes = json::array();
    for (int m = 0; m < kStrainModes; ++m) {
      if (b.modes[static_cast<std::size_t>(m)]) modes.push_back(kModeNames[static_cast<std::size_t>(m)]);
    }
    robot["basis"].push_back({{"family", family_name(b.family)}, {"order", b.order}, {"modes", modes}});
  }
  robot["quadrature_points"] = c.robot.quadrature_points;

  const auto& e = c.experiment;
  json exp;
  exp["markers"] = e.markers;
  exp["sample_time"] = e.sample_time;
  exp["frames"] = e.frames;
  exp["substeps"] = e.substeps;
  exp["signal"] = {{"kind", signal_name(e.signal.kind)},
                   {"amplitude", e.signal.amplitude},
                   {"f0", e.signal.f0},
                   {"f1", e.signal.f1},
                   {"duration", e.signal.duration},
                   {"stddev", e.signal.stddev},
                   {"rectify", e.signal.rectify}};
  if (e.pose_csv) exp["pose_csv"] = *e.pose_csv;
  exp["fit"] = {{"gamma", screw_list(e.fit.gamma)},
                {"atom_gamma", e.fit.atom_gamma},
                {"max_iterations", e.fit.max_iterations},
                {"tolerance", e.fit.tolerance},
                {"block_size", e.fit_block}};
  exp["thresholds"] = e.thresholds;
  exp["zero_pad"] = e.zero_pad;
  exp["time_zero_pad"] = e.time_zero_pad;
  exp["energy_fraction"] = e.energy_fraction;
  exp["normalize_db"] = e.normalize_db;
  exp["seed"] = e.seed;
  return json{{"robot", robot}, {"experiment", exp}}.dump(2) + "\n";
}

}  // namespace rodspec
