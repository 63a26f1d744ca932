#pragma once

// Actuation signals for motor babbling.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rodspec {

enum class SignalKind { step, chirp, white_noise };

struct InputSignalSpec {
  SignalKind kind = SignalKind::step;
  std::vector<double> amplitude;  // per actuator; gain for chirp and noise
  double f0 = 0.0;                // chirp start frequency, Hz
  double f1 = 1.0;                // chirp end frequency, Hz
  double duration = 1.0;          // chirp sweep length, s (zero afterwards)
  std::uint64_t seed = 0;
  double stddev = 1.0;            // white noise sigma, clipped at +/- 4 sigma
  /// Per actuator: +1 keeps |x|, -1 keeps -|x|, 0 leaves the signal as is.
  /// Empty means no rectification.
  std::vector<int> rectify;

  int actuators() const { return static_cast<int>(amplitude.size()); }
  void validate() const;
};

/// n_a x M samples at the given ascending times. Deterministic for a given seed.
Eigen::MatrixXd generate_input(const InputSignalSpec& spec, std::span<const double> t_grid);

/// Sign changes of x - mean(x), ignoring exact zeros.
int zero_crossings(std::span<const double> x);

}  // namespace rodspec
