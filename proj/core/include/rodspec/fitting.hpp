#pragma once

// Basis pursuit denoising of sampled strain over a basis dictionary:
//   argmin_q 1/2 |xi - xi* - B_q q|_2^2 + |gamma (.) q|_1
// solved per strain mode (the dictionary is block diagonal across modes).

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "rodspec/basis.hpp"
#include "rodspec/gvs.hpp"
#include "rodspec/spectra.hpp"

namespace rodspec {

struct BPDConfig {
  /// Sparsity weight per strain mode, broadcast to that mode's atoms. The penalty
  /// acts on coefficients of atoms scaled to unit L2([0, L]) norm.
  Screw gamma = Screw::Zero();
  /// Optional per-atom override (size n_q); empty means use `gamma`.
  std::vector<double> atom_gamma;
  int max_iterations = 20000;
  double tolerance = 1e-12;  // relative objective change

  void validate(int dofs) const;
};

struct FitResult {
  VectorXd q;
  double residual_norm = 0.0;
  VectorXd energy_fraction;               // per atom; sums to 1 within each mode with energy
  std::array<bool, kStrainModes> mode_has_energy{};
  std::vector<bool> kept;                 // all true before truncation
  bool converged = true;
  int iterations = 0;                     // summed over modes
  double kkt_violation = 0.0;             // worst KKT defect over modes, in units of Lambda
};

/// Reusable solver for a fixed sample abscissa set and dictionary.
class BpdSolver {
 public:
  BpdSolver(std::vector<double> s_grid, const BasisDictionary& dict, const RodProperties& rod,
            BPDConfig config);

  /// Samples are full strains at the solver's abscissae; warm start in original units.
  FitResult fit(std::span<const Screw> samples, const VectorXd* warm_start = nullptr) const;
  /// Least squares restricted to the columns where keep[j] is true.
  FitResult refit(std::span<const Screw> samples, const std::vector<bool>& keep) const;

  std::span<const double> s_grid() const { return s_grid_; }
  const BasisDictionary& dictionary() const { return dict_; }
  double lipschitz(int mode) const { return modes_[static_cast<std::size_t>(mode)].lipschitz; }
  /// Largest per-mode |A^T y|_inf (normalized atoms); gamma above it zeroes the fit.
  double gamma_ceiling(std::span<const Screw> samples, int mode) const;

 private:
  struct ModeBlock {
    int first = 0;
    int size = 0;
    MatrixXd design;  // N x size, normalized columns
    MatrixXd gram;
    VectorXd norms;   // L2([0, L]) norms of the raw atoms
    VectorXd gamma;
    double lipschitz = 0.0;
  };

  VectorXd target(std::span<const Screw> samples, int mode) const;
  void finish(FitResult& r, std::span<const Screw> samples) const;

  std::vector<double> s_grid_;
  BasisDictionary dict_;
  RodProperties rod_;
  BPDConfig config_;
  std::array<ModeBlock, kStrainModes> modes_;
};

FitResult bpd_fit(std::span<const double> s_grid, std::span<const Screw> samples,
                  const BasisDictionary& dict, const RodProperties& rod, const BPDConfig& config);

/// q_i^2 * integral of b_i^2 over [0, L].
double basis_energy(double q, const Atom& atom, double length);
/// Per-atom energy fractions within each mode; modes without energy get zeros and
/// are flagged false in `has_energy`.
VectorXd energy_fractions(const VectorXd& q, const BasisDictionary& dict,
                          std::array<bool, kStrainModes>* has_energy = nullptr);

struct SeriesFit {
  std::vector<double> times;
  std::vector<FitResult> frames;
  VectorXd mean_fraction;  // per atom, averaged over frames where the mode has energy
  std::vector<bool> kept;
};

/// Fits every frame of the grid. Frames are split into blocks of `block_size`
/// (0 = one block); each block is a warm-start chain and blocks run concurrently.
/// Results do not depend on the number of threads.
SeriesFit bpd_fit_series(const StrainGrid& grid, const BasisDictionary& dict,
                         const RodProperties& rod, const BPDConfig& config, int block_size = 0,
                         int threads = 1);

/// Drops atoms whose time-averaged energy fraction is below `threshold` and refits
/// each frame by least squares on the kept support.
SeriesFit truncate_bases(const SeriesFit& fit, const StrainGrid& grid,
                         const BasisDictionary& dict, const RodProperties& rod, double threshold);

/// Abscissae of the grid samples, s_offset + n lambda_s.
std::vector<double> grid_abscissae(const StrainGrid& grid);

struct BackboneErrors {
  std::vector<double> position;     // m
  std::vector<double> orientation;  // rad
  double max_position() const;
  double max_orientation() const;
};

BackboneErrors backbone_errors(std::span<const Pose> reconstructed, std::span<const Pose> measured);

void write_fit_csv(std::ostream& out, const SeriesFit& fit, const BasisDictionary& dict);

}  // namespace rodspec
