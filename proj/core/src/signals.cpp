#include "rodspec/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "rodspec/errors.hpp"

namespace rodspec {

void InputSignalSpec::validate() const {
  if (amplitude.empty()) throw ValidationError("signal: need at least one actuator amplitude");
  for (double a : amplitude) {
    if (!std::isfinite(a)) throw ValidationError("signal: amplitudes must be finite");
  }
  if (!(duration > 0.0)) throw ValidationError("signal: duration must be > 0");
  if (!(f0 >= 0.0 && f1 >= f0)) throw ValidationError("signal: need f1 >= f0 >= 0");
  if (!(stddev >= 0.0)) throw ValidationError("signal: stddev must be >= 0");
  if (!rectify.empty()) {
    if (rectify.size() != amplitude.size()) {
      throw LengthMismatch("signal: rectify mask size differs from the actuator count");
    }
    for (int r : rectify) {
      if (r < -1 || r > 1) throw ValidationError("signal: rectify entries must be -1, 0 or 1");
    }
  }
}

Eigen::MatrixXd generate_input(const InputSignalSpec& spec, std::span<const double> t_grid) {
  spec.validate();
  for (std::size_t m = 1; m < t_grid.size(); ++m) {
    if (!(t_grid[m] > t_grid[m - 1])) throw ValidationError("signal: time grid must ascend");
  }
  const int na = spec.actuators();
  Eigen::MatrixXd u(na, static_cast<Eigen::Index>(t_grid.size()));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t m = 0; m < t_grid.size(); ++m) {
    const double t = t_grid[m];
    for (int a = 0; a < na; ++a) {
      const double amp = spec.amplitude[static_cast<std::size_t>(a)];
      double v = 0.0;
      switch (spec.kind) {
        case SignalKind::step:
          v = t >= 0.0 ? amp : 0.0;
          break;
        case SignalKind::chirp:
          if (t >= 0.0 && t <= spec.duration) {
            const double rate = (spec.f1 - spec.f0) / spec.duration;
            v = amp * std::sin(2.0 * std::numbers::pi * (spec.f0 * t + 0.5 * rate * t * t));
          }
          break;
        case SignalKind::white_noise: {
          const double bound = 4.0 * spec.stddev;
          v = amp * std::clamp(spec.stddev * normal(rng), -bound, bound);
          break;
        }
      }
      if (!spec.rectify.empty()) {
        const int r = spec.rectify[static_cast<std::size_t>(a)];
        if (r != 0) v = r * std::abs(v);
      }
      u(a, static_cast<Eigen::Index>(m)) = v;
    }
  }
  return u;
}

int zero_crossings(std::span<const double> x) {
  if (x.empty()) return 0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  int count = 0;
  int last = 0;
  for (double v : x) {
    const double d = v - mean;
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++count;
    last = sign;
  }
  return count;
}

}  // namespace rodspec
