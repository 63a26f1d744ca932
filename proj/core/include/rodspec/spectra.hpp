#pragma once

// Spatial (SFT) and space-time (STFT) Fourier analysis of sampled strain fields.
//
// Transforms are non-normalized: Xi(k_i) = sum_n xi(n) exp(-j k_i n lambda_s) with
// k_i = 2 pi i / (N' lambda_s), i in [0, N'), N' = N * zero_pad. Bins above N'/2
// are the negative wavenumbers k_i - k_s.

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rodspec/liealg.hpp"
#include "rodspec/rodmodel.hpp"

namespace rodspec {

using Complex = std::complex<double>;
using ComplexScrew = Eigen::Matrix<Complex, 6, 1>;

/// xi(s_offset + n lambda_s, m T_s) for n in [0, N), m in [0, M).
class StrainGrid {
 public:
  StrainGrid(int frames, int points, double lambda_s, double sample_time, double length,
             double s_offset = 0.0);
  /// One frame per entry, each holding N strain samples.
  static StrainGrid from_frames(const std::vector<std::vector<Screw>>& frames, double lambda_s,
                                double sample_time, double length, double s_offset = 0.0);

  int frames() const { return frames_; }
  int points() const { return points_; }
  double lambda_s() const { return lambda_s_; }
  double sample_time() const { return sample_time_; }
  double length() const { return length_; }
  double s_offset() const { return s_offset_; }
  double abscissa(int n) const { return s_offset_ + n * lambda_s_; }
  double sampling_wavenumber() const;  // k_s = 2 pi / lambda_s

  double& operator()(int m, int n, int mode);
  double operator()(int m, int n, int mode) const;
  Screw sample(int m, int n) const;
  void set_sample(int m, int n, const Screw& xi);
  std::vector<Screw> frame(int m) const;

 private:
  std::size_t index(int m, int n, int mode) const;

  int frames_;
  int points_;
  double lambda_s_;
  double sample_time_;
  double length_;
  double s_offset_;
  std::vector<double> data_;
};

/// Immutable spectrum of the six strain modes. For an SFT, time_bins() == 1.
class Spectrum {
 public:
  Spectrum(int space_bins, int time_bins, int points, int frames, double lambda_s,
           double sample_time, int space_pad, int time_pad,
           std::array<std::vector<Complex>, 6> values);

  bool is_stft() const { return stft_; }
  int space_bins() const { return space_bins_; }  // N'
  int time_bins() const { return time_bins_; }    // M'
  int points() const { return points_; }          // N (unpadded)
  int frames() const { return frames_; }          // M (unpadded)
  int zero_pad_factor() const { return space_pad_; }
  int time_zero_pad_factor() const { return time_pad_; }
  double lambda_s() const { return lambda_s_; }
  double sample_time() const { return sample_time_; }

  /// k_i = 2 pi i / (N' lambda_s), rad/m.
  double wavenumber(int i) const;
  /// omega_j = 2 pi j / (M' T_s), rad/s.
  double frequency(int j) const;
  std::vector<double> wavenumber_axis() const;
  std::vector<double> frequency_axis() const;

  Complex operator()(int mode, int i) const { return (*this)(mode, 0, i); }
  Complex operator()(int mode, int j, int i) const;
  std::span<const Complex> values(int mode) const;  // row-major (time bin, space bin)

 private:
  bool stft_;
  int space_bins_, time_bins_, points_, frames_;
  double lambda_s_, sample_time_;
  int space_pad_, time_pad_;
  std::array<std::vector<Complex>, 6> values_;
};

/// SFT of frame m, zero-padded to N * zero_pad bins. Throws IndexOutOfRange.
Spectrum dsft(const StrainGrid& grid, int m, int zero_pad = 4);
/// 2-D transform over (s, t); requires M >= 2.
Spectrum dstft(const StrainGrid& grid, int space_pad = 4, int time_pad = 1);

using ContinuousSpectrum = std::function<ComplexScrew(double)>;

/// (1 / lambda_s) sum_{n=-R}^{R} Xi(k - n k_s), the sampled-signal spectrum as a sum
/// of shifted replicas of the continuous SFT, truncated symmetrically at R.
ComplexScrew replica_spectrum(const ContinuousSpectrum& continuous, double lambda_s,
                              int n_replicas, double k);

/// Smallest integer strictly greater than 2 L / lambda_max.
int min_segments(double lambda_max, double length);

/// Energy ratio up to bin n_max times N / n_max, over the unpadded bins i * p, i < N.
/// Values above 1 are possible by construction. Throws ZeroEnergy.
double truncation_index(const Spectrum& spectrum, int mode, int n_max);
/// Same ratio with |Xi_i|^2 weighted by the stiffness diagonal and summed over modes.
double stiffness_weighted_truncation(const Spectrum& spectrum, const Screw& weights, int n_max);
/// Weights are the stiffness diagonal averaged over s.
double stiffness_weighted_truncation(const Spectrum& spectrum, const RodProperties& rod,
                                     int n_max);
Screw mean_stiffness_diagonal(const RodProperties& rod, int samples = 1001);

struct CutoffRecommendation {
  int bin = 0;              // highest kept unpadded bin K (two-sided: |i| <= K)
  double k_max = 0.0;       // rad/m
  double lambda_max = 0.0;  // shortest kept wavelength, m (infinite for DC only)
  int segments = 1;         // min_segments(lambda_max, L)
  double captured = 0.0;    // energy fraction actually captured
};

/// Smallest two-sided band holding `fraction` of the energy of the given modes.
CutoffRecommendation recommend_cutoff(const Spectrum& spectrum, std::span<const int> modes,
                                      double fraction, double length);

double sinc(double x);
/// Zero-order hold: lambda_p sinc(k lambda_p / 2) exp(-j k lambda_p / 2).
Complex zoh_transfer(double k, double lambda_p);
/// First-order hold: lambda_p sinc^2(k lambda_p / 2) (1 + j k lambda_p) exp(-j k lambda_p / 2).
Complex foh_transfer(double k, double lambda_p);

/// Piecewise-constant reconstruction: sample n holds on [n lambda_p, (n+1) lambda_p).
Screw reconstruct_pcs(std::span<const Screw> samples, double lambda_p, double length, double s);
/// Piecewise-linear reconstruction between consecutive samples; the last sample is held.
Screw reconstruct_pls(std::span<const Screw> samples, double lambda_p, double length, double s);
/// Each sample repeated `factor` times (PCS on a grid `factor` times finer).
std::vector<double> hold_upsample(std::span<const double> samples, int factor);

/// Relative Parseval defect |sum |x|^2 - (1/N) sum |X|^2| / sum |x|^2 over all modes of an
/// unpadded SFT (or STFT, with 1/(N M)).
double parseval_defect(const StrainGrid& grid, const Spectrum& spectrum, int m = 0);
/// max |X(-k) - conj(X(k))| over all bins and modes.
double conjugate_symmetry_defect(const Spectrum& spectrum);

struct SpectrumCsvOptions {
  bool normalize_db = false;  // dB relative to |Xi_i(0[, 0])| per mode
};

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        const SpectrumCsvOptions& options = {});

}  // namespace rodspec
