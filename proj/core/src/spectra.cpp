#include "rodspec/spectra.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>

#include "rodspec/basis.hpp"
#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

// The FFTW planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  // Forward, unnormalized, in place on `data` with the given row-major shape.
  FftPlan(std::vector<Complex>& data, int rows, int cols) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    std::lock_guard lock(planner_mutex());
    plan_ = rows == 1 ? fftw_plan_dft_1d(cols, p, p, FFTW_FORWARD, FFTW_ESTIMATE)
                      : fftw_plan_dft_2d(rows, cols, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw NumericalError("fft: planner failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

void check_pad(int pad, const char* who) {
  if (pad < 1) throw ValidationError(std::string(who) + ": zero-pad factor must be >= 1");
}

void check_mode(int mode) {
  if (mode < 0 || mode >= 6) throw IndexOutOfRange("spectra: mode index outside [0, 6)");
}

}  // namespace

// ---------------------------------------------------------------------------

StrainGrid::StrainGrid(int frames, int points, double lambda_s, double sample_time,
                       double length, double s_offset)
    : frames_(frames), points_(points), lambda_s_(lambda_s), sample_time_(sample_time),
      length_(length), s_offset_(s_offset) {
  if (frames < 1) throw ValidationError("strain grid: need M >= 1 frames");
  if (points < 2) throw ValidationError("strain grid: need N >= 2 points");
  if (!(lambda_s > 0.0) || !(sample_time > 0.0) || !(length > 0.0)) {
    throw ValidationError("strain grid: lambda_s, T_s and L must be > 0");
  }
  if (points * lambda_s > length + lambda_s + 1e-12 * length) {
    throw ValidationError("strain grid: N lambda_s exceeds L + lambda_s");
  }
  data_.assign(static_cast<std::size_t>(frames) * static_cast<std::size_t>(points) * 6, 0.0);
}

StrainGrid StrainGrid::from_frames(const std::vector<std::vector<Screw>>& frames,
                                   double lambda_s, double sample_time, double length,
                                   double s_offset) {
  if (frames.empty()) throw ValidationError("strain grid: no frames");
  const auto n = frames.front().size();
  StrainGrid g(static_cast<int>(frames.size()), static_cast<int>(n), lambda_s, sample_time,
               length, s_offset);
  for (std::size_t m = 0; m < frames.size(); ++m) {
    if (frames[m].size() != n) throw LengthMismatch("strain grid: ragged frames");
    for (std::size_t k = 0; k < n; ++k) {
      g.set_sample(static_cast<int>(m), static_cast<int>(k), frames[m][k]);
    }
  }
  return g;
}

double StrainGrid::sampling_wavenumber() const { return 2.0 * std::numbers::pi / lambda_s_; }

std::size_t StrainGrid::index(int m, int n, int mode) const {
  if (m < 0 || m >= frames_ || n < 0 || n >= points_ || mode < 0 || mode >= 6) {
    throw IndexOutOfRange("strain grid: index (" + std::to_string(m) + ", " + std::to_string(n) +
                          ", " + std::to_string(mode) + ") out of range");
  }
  return (static_cast<std::size_t>(m) * static_cast<std::size_t>(points_) +
          static_cast<std::size_t>(n)) * 6 + static_cast<std::size_t>(mode);
}

double& StrainGrid::operator()(int m, int n, int mode) { return data_[index(m, n, mode)]; }
double StrainGrid::operator()(int m, int n, int mode) const { return data_[index(m, n, mode)]; }

Screw StrainGrid::sample(int m, int n) const {
  const std::size_t i = index(m, n, 0);
  return Eigen::Map<const Screw>(data_.data() + i);
}

void StrainGrid::set_sample(int m, int n, const Screw& xi) {
  const std::size_t i = index(m, n, 0);
  Eigen::Map<Screw>(data_.data() + i) = xi;
}

std::vector<Screw> StrainGrid::frame(int m) const {
  std::vector<Screw> out;
  out.reserve(static_cast<std::size_t>(points_));
  for (int n = 0; n < points_; ++n) out.push_back(sample(m, n));
  return out;
}

// ---------------------------------------------------------------------------

Spectrum::Spectrum(int space_bins, int time_bins, int points, int frames, double lambda_s,
                   double sample_time, int space_pad, int time_pad,
                   std::array<std::vector<Complex>, 6> values)
    : stft_(time_bins > 1 || frames > 1), space_bins_(space_bins), time_bins_(time_bins),
      points_(points), frames_(frames), lambda_s_(lambda_s), sample_time_(sample_time),
      space_pad_(space_pad), time_pad_(time_pad), values_(std::move(values)) {
  for (const auto& v : values_) {
    if (v.size() != static_cast<std::size_t>(space_bins) * static_cast<std::size_t>(time_bins)) {
      throw LengthMismatch("spectrum: value array does not match the bin layout");
    }
  }
}

double Spectrum::wavenumber(int i) const {
  return 2.0 * std::numbers::pi * i / (space_bins_ * lambda_s_);
}

double Spectrum::frequency(int j) const {
  return 2.0 * std::numbers::pi * j / (time_bins_ * sample_time_);
}

std::vector<double> Spectrum::wavenumber_axis() const {
  std::vector<double> k(static_cast<std::size_t>(space_bins_));
  for (int i = 0; i < space_bins_; ++i) k[static_cast<std::size_t>(i)] = wavenumber(i);
  return k;
}

std::vector<double> Spectrum::frequency_axis() const {
  if (!stft_) return {};
  std::vector<double> w(static_cast<std::size_t>(time_bins_));
  for (int j = 0; j < time_bins_; ++j) w[static_cast<std::size_t>(j)] = frequency(j);
  return w;
}

Complex Spectrum::operator()(int mode, int j, int i) const {
  check_mode(mode);
  if (i < 0 || i >= space_bins_ || j < 0 || j >= time_bins_) {
    throw IndexOutOfRange("spectrum: bin out of range");
  }
  return values_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(j) *
                                                     static_cast<std::size_t>(space_bins_) +
                                                 static_cast<std::size_t>(i)];
}

std::span<const Complex> Spectrum::values(int mode) const {
  check_mode(mode);
  return values_[static_cast<std::size_t>(mode)];
}

// ---------------------------------------------------------------------------

Spectrum dsft(const StrainGrid& grid, int m, int zero_pad) {
  if (m < 0 || m >= grid.frames()) {
    throw IndexOutOfRange("dsft: time index " + std::to_string(m) + " outside [0, M)");
  }
  check_pad(zero_pad, "dsft");
  const int n = grid.points();
  const int bins = n * zero_pad;
  std::array<std::vector<Complex>, 6> values;
  std::vector<Complex> buffer(static_cast<std::size_t>(bins));
  FftPlan plan(buffer, 1, bins);
  for (int mode = 0; mode < 6; ++mode) {
    std::fill(buffer.begin(), buffer.end(), Complex(0.0, 0.0));
    for (int k = 0; k < n; ++k) buffer[static_cast<std::size_t>(k)] = grid(m, k, mode);
    plan.execute();
    values[static_cast<std::size_t>(mode)] = buffer;
  }
  return Spectrum(bins, 1, n, 1, grid.lambda_s(), grid.sample_time(), zero_pad, 1,
                  std::move(values));
}

Spectrum dstft(const StrainGrid& grid, int space_pad, int time_pad) {
  if (grid.frames() < 2) throw ValidationError("dstft: need M >= 2 frames");
  check_pad(space_pad, "dstft");
  check_pad(time_pad, "dstft");
  const int n = grid.points();
  const int frames = grid.frames();
  const int cols = n * space_pad;
  const int rows = frames * time_pad;
  std::array<std::vector<Complex>, 6> values;
  std::vector<Complex> buffer(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  FftPlan plan(buffer, rows, cols);
  for (int mode = 0; mode < 6; ++mode) {
    std::fill(buffer.begin(), buffer.end(), Complex(0.0, 0.0));
    for (int m = 0; m < frames; ++m) {
      for (int k = 0; k < n; ++k) {
        buffer[static_cast<std::size_t>(m) * static_cast<std::size_t>(cols) +
               static_cast<std::size_t>(k)] = grid(m, k, mode);
      }
    }
    plan.execute();
    values[static_cast<std::size_t>(mode)] = buffer;
  }
  return Spectrum(cols, rows, n, frames, grid.lambda_s(), grid.sample_time(), space_pad,
                  time_pad, std::move(values));
}

ComplexScrew replica_spectrum(const ContinuousSpectrum& continuous, double lambda_s,
                              int n_replicas, double k) {
  if (n_replicas < 1) throw ValidationError("replica_spectrum: need n_replicas >= 1");
  if (!(lambda_s > 0.0)) throw ValidationError("replica_spectrum: lambda_s must be > 0");
  const double ks = 2.0 * std::numbers::pi / lambda_s;
  ComplexScrew sum = ComplexScrew::Zero();
  for (int r = -n_replicas; r <= n_replicas; ++r) sum += continuous(k - r * ks);
  return sum / lambda_s;
}

int min_segments(double lambda_max, double length) {
  if (!(lambda_max > 0.0) || !(length > 0.0)) {
    throw ValidationError("min_segments: lambda_max and L must be > 0");
  }
  double ratio = 2.0 * length / lambda_max;
  // Ratios that are integers up to rounding must still trigger the strict inequality.
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) ratio = nearest;
  return static_cast<int>(std::floor(ratio)) + 1;
}

namespace {

// Partial and total energy over the unpadded bins, with per-mode weights.
double weighted_truncation(const Spectrum& spectrum, const Screw& weights, int n_max,
                           const char* who) {
  if (spectrum.is_stft()) throw ValidationError(std::string(who) + ": expects an SFT");
  const int n = spectrum.points();
  if (n_max < 1 || n_max >= n) {
    throw ValidationError(std::string(who) + ": need 1 <= N_max < N");
  }
  const int p = spectrum.zero_pad_factor();
  double partial = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = 0.0;
    for (int mode = 0; mode < 6; ++mode) {
      if (weights(mode) != 0.0) e += weights(mode) * std::norm(spectrum(mode, i * p));
    }
    total += e;
    if (i < n_max) partial += e;
  }
  if (!(total >= 1e-300)) throw ZeroEnergy(std::string(who) + ": spectrum carries no energy");
  return static_cast<double>(n) / n_max * (partial / total);
}

}  // namespace

double truncation_index(const Spectrum& spectrum, int mode, int n_max) {
  check_mode(mode);
  Screw w = Screw::Zero();
  w(mode) = 1.0;
  return weighted_truncation(spectrum, w, n_max, "truncation_index");
}

double stiffness_weighted_truncation(const Spectrum& spectrum, const Screw& weights, int n_max) {
  if ((weights.array() < 0.0).any()) {
    throw ValidationError("stiffness_weighted_truncation: weights must be >= 0");
  }
  return weighted_truncation(spectrum, weights, n_max, "stiffness_weighted_truncation");
}

double stiffness_weighted_truncation(const Spectrum& spectrum, const RodProperties& rod,
                                     int n_max) {
  return stiffness_weighted_truncation(spectrum, mean_stiffness_diagonal(rod), n_max);
}

Screw mean_stiffness_diagonal(const RodProperties& rod, int samples) {
  if (samples < 1) throw ValidationError("mean_stiffness_diagonal: need >= 1 sample");
  Screw sum = Screw::Zero();
  for (int i = 0; i < samples; ++i) {
    sum += stiffness_matrix(rod, (i + 0.5) * rod.length / samples).diagonal();
  }
  return sum / samples;
}

CutoffRecommendation recommend_cutoff(const Spectrum& spectrum, std::span<const int> modes,
                                      double fraction, double length) {
  if (spectrum.is_stft()) throw ValidationError("recommend_cutoff: expects an SFT");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("recommend_cutoff: fraction must lie in (0, 1]");
  }
  const int n = spectrum.points();
  const int p = spectrum.zero_pad_factor();
  std::vector<double> energy(static_cast<std::size_t>(n), 0.0);
  for (int mode : modes) {
    check_mode(mode);
    for (int i = 0; i < n; ++i) energy[static_cast<std::size_t>(i)] += std::norm(spectrum(mode, i * p));
  }
  double total = 0.0;
  for (double e : energy) total += e;
  if (!(total >= 1e-300)) throw ZeroEnergy("recommend_cutoff: spectrum carries no energy");

  CutoffRecommendation r;
  double captured = energy[0];
  int bin = 0;
  // Grow the symmetric band |i| <= K until it holds the requested fraction.
  while (captured < fraction * total * (1.0 - 1e-12) && bin < n / 2) {
    ++bin;
    captured += energy[static_cast<std::size_t>(bin)];
    if (n - bin != bin) captured += energy[static_cast<std::size_t>(n - bin)];
  }
  r.bin = bin;
  r.captured = captured / total;
  r.k_max = 2.0 * std::numbers::pi * bin / (n * spectrum.lambda_s());
  if (bin == 0) {
    r.lambda_max = std::numeric_limits<double>::infinity();
    r.segments = 1;
  } else {
    r.lambda_max = 2.0 * std::numbers::pi / r.k_max;
    r.segments = min_segments(r.lambda_max, length);
  }
  return r;
}

// ---------------------------------------------------------------------------

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

Complex zoh_transfer(double k, double lambda_p) {
  if (!(lambda_p > 0.0)) throw ValidationError("zoh_transfer: lambda_p must be > 0");
  const double half = 0.5 * k * lambda_p;
  return lambda_p * sinc(half) * std::polar(1.0, -half);
}

Complex foh_transfer(double k, double lambda_p) {
  if (!(lambda_p > 0.0)) throw ValidationError("foh_transfer: lambda_p must be > 0");
  const double half = 0.5 * k * lambda_p;
  const double s = sinc(half);
  return lambda_p * s * s * Complex(1.0, k * lambda_p) * std::polar(1.0, -half);
}

namespace {

void check_reconstruction(std::span<const Screw> samples, double lambda_p, double length,
                          double s, const char* who) {
  if (samples.empty()) throw ValidationError(std::string(who) + ": no samples");
  if (!(lambda_p > 0.0)) throw ValidationError(std::string(who) + ": lambda_p must be > 0");
  if (!(s >= 0.0 && s <= length)) {
    throw OutOfDomain(std::string(who) + ": s = " + std::to_string(s) + " outside [0, L]");
  }
}

}  // namespace

Screw reconstruct_pcs(std::span<const Screw> samples, double lambda_p, double length, double s) {
  check_reconstruction(samples, lambda_p, length, s, "reconstruct_pcs");
  const auto last = static_cast<double>(samples.size() - 1);
  const auto n = static_cast<std::size_t>(std::min(std::floor(s / lambda_p), last));
  return samples[n];
}

Screw reconstruct_pls(std::span<const Screw> samples, double lambda_p, double length, double s) {
  check_reconstruction(samples, lambda_p, length, s, "reconstruct_pls");
  if (samples.size() == 1) return samples[0];
  const double pos = s / lambda_p;
  const auto n = static_cast<std::size_t>(
      std::min(std::floor(pos), static_cast<double>(samples.size() - 2)));
  const double f = std::min(pos - static_cast<double>(n), 1.0);
  return (1.0 - f) * samples[n] + f * samples[n + 1];
}

std::vector<double> hold_upsample(std::span<const double> samples, int factor) {
  if (factor < 1) throw ValidationError("hold_upsample: factor must be >= 1");
  std::vector<double> out;
  out.reserve(samples.size() * static_cast<std::size_t>(factor));
  for (double v : samples) out.insert(out.end(), static_cast<std::size_t>(factor), v);
  return out;
}

double parseval_defect(const StrainGrid& grid, const Spectrum& spectrum, int m) {
  double space = 0.0;
  double freq = 0.0;
  for (int mode = 0; mode < 6; ++mode) {
    if (spectrum.is_stft()) {
      for (int t = 0; t < grid.frames(); ++t) {
        for (int n = 0; n < grid.points(); ++n) space += grid(t, n, mode) * grid(t, n, mode);
      }
    } else {
      for (int n = 0; n < grid.points(); ++n) space += grid(m, n, mode) * grid(m, n, mode);
    }
    for (const Complex& v : spectrum.values(mode)) freq += std::norm(v);
  }
  freq /= static_cast<double>(spectrum.space_bins()) * spectrum.time_bins();
  if (space == 0.0) return freq;
  return std::abs(space - freq) / space;
}

double conjugate_symmetry_defect(const Spectrum& spectrum) {
  const int nb = spectrum.space_bins();
  const int mb = spectrum.time_bins();
  double worst = 0.0;
  for (int mode = 0; mode < 6; ++mode) {
    for (int j = 0; j < mb; ++j) {
      for (int i = 0; i < nb; ++i) {
        const Complex a = spectrum(mode, j, i);
        const Complex b = spectrum(mode, (mb - j) % mb, (nb - i) % nb);
        worst = std::max(worst, std::abs(a - std::conj(b)));
      }
    }
  }
  return worst;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        const SpectrumCsvOptions& options) {
  const bool stft = spectrum.is_stft();
  out << "mode,k_rad_per_m,nu_per_m," << (stft ? "f_Hz," : "")
      << "real,imag,magnitude_dB,phase_rad\n";
  char buf[512];
  for (int mode = 0; mode < 6; ++mode) {
    double ref = 1.0;
    if (options.normalize_db) {
      ref = std::abs(spectrum(mode, 0, 0));
      // A mode with no DC content is reported against unit reference.
      if (!(ref > 1e-300)) ref = 1.0;
    }
    for (int j = 0; j < spectrum.time_bins(); ++j) {
      for (int i = 0; i < spectrum.space_bins(); ++i) {
        const Complex v = spectrum(mode, j, i);
        const double k = spectrum.wavenumber(i);
        const double db = 20.0 * std::log10(std::max(std::abs(v), 1e-300) / ref);
        const double nu = k / (2.0 * std::numbers::pi);
        if (stft) {
          const double f = spectrum.frequency(j) / (2.0 * std::numbers::pi);
          std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                        kModeNames[static_cast<std::size_t>(mode)], k, nu, f, v.real(), v.imag(),
                        db, std::arg(v));
        } else {
          std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                        kModeNames[static_cast<std::size_t>(mode)], k, nu, v.real(), v.imag(), db,
                        std::arg(v));
        }
        out << buf;
      }
    }
  }
}

}  // namespace rodspec
