#include "rodspec/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

constexpr double kCertificate = 1e-6;  // KKT tolerance in units of Lambda

double largest_eigenvalue(const MatrixXd& gram) {
  if (gram.rows() == 0) return 0.0;
  VectorXd v = VectorXd::Constant(gram.rows(), 1.0 / std::sqrt(static_cast<double>(gram.rows())));
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const VectorXd w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-8 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

VectorXd soft_threshold(const VectorXd& v, const VectorXd& t) {
  return v.cwiseSign().cwiseProduct((v.cwiseAbs() - t).cwiseMax(0.0));
}

double kkt_defect(const VectorXd& x, const VectorXd& grad, const VectorXd& gamma) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) != 0.0 ? std::abs(grad(i) + gamma(i) * (x(i) > 0.0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad(i)) - gamma(i));
    worst = std::max(worst, d);
  }
  return worst;
}

struct ModeSolution {
  VectorXd x;
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;  // in units of Lambda
};

// Solves the optimality system exactly on the support and sign pattern of a certified
// iterate. The result replaces the iterate only if it keeps the signs, satisfies the
// inactive conditions and does not raise the objective.
template <typename Objective>
void polish(ModeSolution& sol, const MatrixXd& gram, const VectorXd& c, const VectorXd& gamma,
            double lipschitz, double f, const Objective& objective) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < sol.x.size(); ++i) {
    if (sol.x(i) != 0.0) support.push_back(i);
  }
  if (support.empty()) return;
  const auto n = static_cast<Eigen::Index>(support.size());
  MatrixXd g(n, n);
  VectorXd rhs(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const double sign = sol.x(support[static_cast<std::size_t>(a)]) > 0.0 ? 1.0 : -1.0;
    rhs(a) = c(support[static_cast<std::size_t>(a)]) - gamma(support[static_cast<std::size_t>(a)]) * sign;
    for (Eigen::Index b = 0; b < n; ++b) {
      g(a, b) = gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    }
  }
  const Eigen::LDLT<MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-12)) return;
  const VectorXd xs = ldlt.solve(rhs);
  VectorXd x = VectorXd::Zero(sol.x.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index i = support[static_cast<std::size_t>(a)];
    if (xs(a) * sol.x(i) <= 0.0) return;
    x(i) = xs(a);
  }
  const VectorXd grad = gram * x - c;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) == 0.0 && std::abs(grad(i)) > gamma(i) + kCertificate * lipschitz) return;
  }
  if (objective(x) > f) return;
  sol.x = std::move(x);
}

// Accelerated proximal gradient with restart on objective increase. On a restart
// the step is a plain proximal-gradient step from the last accepted iterate, so the
// accepted objective never increases.
ModeSolution fista(const MatrixXd& gram, const VectorXd& c, double yy, const VectorXd& gamma,
                   double lipschitz, VectorXd x0, int max_iterations, double tolerance) {
  ModeSolution out;
  out.x = std::move(x0);
  if (c.size() == 0) {
    out.converged = true;
    return out;
  }
  if (lipschitz <= 0.0) {
    // All atoms vanish on the samples: the zero vector is optimal.
    out.x.setZero();
    out.converged = true;
    return out;
  }
  const auto objective = [&](const VectorXd& x) {
    return 0.5 * x.dot(gram * x) - c.dot(x) + 0.5 * yy + gamma.dot(x.cwiseAbs());
  };
  const VectorXd thresh = gamma / lipschitz;
  const double floor = std::numeric_limits<double>::epsilon() * (0.5 * yy + 1e-300);
  VectorXd x = out.x;
  VectorXd z = x;
  double t = 1.0;
  double f = objective(x);
  for (int it = 1; it <= max_iterations; ++it) {
    VectorXd next = soft_threshold(z - (gram * z - c) / lipschitz, thresh);
    double fn = objective(next);
    if (fn > f) {
      next = soft_threshold(x - (gram * x - c) / lipschitz, thresh);
      fn = objective(next);
      z = next;
      t = 1.0;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = next + ((t - 1.0) / tn) * (next - x);
      t = tn;
    }
    const double change = std::abs(f - fn) / std::max(std::abs(f), floor);
    x = std::move(next);
    f = std::min(f, fn);
    out.iterations = it;
    if (change < tolerance) {
      out.kkt = kkt_defect(x, gram * x - c, gamma) / lipschitz;
      if (out.kkt < kCertificate) {
        out.converged = true;
        break;
      }
    }
  }
  out.x = x;
  if (out.converged) polish(out, gram, c, gamma, lipschitz, f, objective);
  out.kkt = kkt_defect(out.x, gram * out.x - c, gamma) / lipschitz;
  return out;
}

}  // namespace

void BPDConfig::validate(int dofs) const {
  if ((gamma.array() < 0.0).any() || !gamma.allFinite()) {
    throw ValidationError("bpd: gamma entries must be finite and >= 0");
  }
  if (!atom_gamma.empty()) {
    if (static_cast<int>(atom_gamma.size()) != dofs) {
      throw LengthMismatch("bpd: per-atom gamma size differs from the dictionary size");
    }
    for (double g : atom_gamma) {
      if (!(g >= 0.0) || !std::isfinite(g)) throw ValidationError("bpd: gamma must be >= 0");
    }
  }
  if (!(tolerance > 0.0)) throw ValidationError("bpd: tolerance must be > 0");
  if (max_iterations < 1) throw ValidationError("bpd: max_iterations must be >= 1");
}

BpdSolver::BpdSolver(std::vector<double> s_grid, const BasisDictionary& dict,
                     const RodProperties& rod, BPDConfig config)
    : s_grid_(std::move(s_grid)), dict_(dict), rod_(rod), config_(std::move(config)) {
  if (dict_.empty()) throw EmptyDictionary("bpd: basis dictionary is empty");
  if (s_grid_.empty()) throw ValidationError("bpd: no sample abscissae");
  config_.validate(dict_.size());
  const auto n = static_cast<Eigen::Index>(s_grid_.size());
  std::vector<Matrix6X> rows;
  rows.reserve(s_grid_.size());
  for (double s : s_grid_) rows.push_back(dict_.basis_matrix(s));
  for (int mode = 0; mode < kStrainModes; ++mode) {
    ModeBlock& b = modes_[static_cast<std::size_t>(mode)];
    b.first = dict_.first_column(mode);
    b.size = static_cast<int>(dict_.atoms(mode).size());
    b.norms.resize(b.size);
    b.gamma.resize(b.size);
    b.design.resize(n, b.size);
    for (int j = 0; j < b.size; ++j) {
      const int col = b.first + j;
      b.norms(j) = std::sqrt(dict_.atom(col).square_integral(dict_.length()));
      if (!(b.norms(j) > 0.0)) throw ValidationError("bpd: atom with zero L2 norm");
      b.gamma(j) = config_.atom_gamma.empty() ? config_.gamma(mode)
                                              : config_.atom_gamma[static_cast<std::size_t>(col)];
      for (Eigen::Index k = 0; k < n; ++k) {
        b.design(k, j) = rows[static_cast<std::size_t>(k)](mode, col) / b.norms(j);
      }
    }
    b.gram = b.design.transpose() * b.design;
    b.lipschitz = largest_eigenvalue(b.gram) * (1.0 + 1e-6);
  }
}

VectorXd BpdSolver::target(std::span<const Screw> samples, int mode) const {
  if (samples.size() != s_grid_.size()) {
    throw LengthMismatch("bpd: " + std::to_string(samples.size()) + " samples for " +
                         std::to_string(s_grid_.size()) + " abscissae");
  }
  VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    y(static_cast<Eigen::Index>(k)) = samples[k](mode) - rod_.stress_free(s_grid_[k])(mode);
  }
  return y;
}

double BpdSolver::gamma_ceiling(std::span<const Screw> samples, int mode) const {
  const ModeBlock& b = modes_[static_cast<std::size_t>(mode)];
  if (b.size == 0) return 0.0;
  return (b.design.transpose() * target(samples, mode)).cwiseAbs().maxCoeff();
}

FitResult BpdSolver::fit(std::span<const Screw> samples, const VectorXd* warm_start) const {
  if (warm_start != nullptr && warm_start->size() != dict_.size()) {
    throw LengthMismatch("bpd: warm start size differs from the dictionary size");
  }
  FitResult r;
  r.q = VectorXd::Zero(dict_.size());
  for (int mode = 0; mode < kStrainModes; ++mode) {
    const ModeBlock& b = modes_[static_cast<std::size_t>(mode)];
    if (b.size == 0) continue;
    const VectorXd y = target(samples, mode);
    VectorXd x0 = VectorXd::Zero(b.size);
    if (warm_start != nullptr) x0 = warm_start->segment(b.first, b.size).cwiseProduct(b.norms);
    const ModeSolution sol = fista(b.gram, b.design.transpose() * y, y.squaredNorm(), b.gamma,
                                   b.lipschitz, x0, config_.max_iterations, config_.tolerance);
    r.q.segment(b.first, b.size) = sol.x.cwiseQuotient(b.norms);
    r.iterations += sol.iterations;
    r.converged = r.converged && sol.converged;
    r.kkt_violation = std::max(r.kkt_violation, sol.kkt);
  }
  r.kept.assign(static_cast<std::size_t>(dict_.size()), true);
  finish(r, samples);
  return r;
}

FitResult BpdSolver::refit(std::span<const Screw> samples, const std::vector<bool>& keep) const {
  if (keep.size() != static_cast<std::size_t>(dict_.size())) {
    throw LengthMismatch("bpd: keep mask size differs from the dictionary size");
  }
  FitResult r;
  r.q = VectorXd::Zero(dict_.size());
  for (int mode = 0; mode < kStrainModes; ++mode) {
    const ModeBlock& b = modes_[static_cast<std::size_t>(mode)];
    std::vector<int> cols;
    for (int j = 0; j < b.size; ++j) {
      if (keep[static_cast<std::size_t>(b.first + j)]) cols.push_back(j);
    }
    if (cols.empty()) continue;
    MatrixXd a(b.design.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      a.col(static_cast<Eigen::Index>(j)) = b.design.col(cols[j]);
    }
    const VectorXd x = a.colPivHouseholderQr().solve(target(samples, mode));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      r.q(b.first + cols[j]) = x(static_cast<Eigen::Index>(j)) / b.norms(cols[j]);
    }
  }
  r.kept = keep;
  finish(r, samples);
  return r;
}

void BpdSolver::finish(FitResult& r, std::span<const Screw> samples) const {
  double sq = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Screw model = dict_.basis_matrix(s_grid_[k]) * r.q + rod_.stress_free(s_grid_[k]);
    sq += (samples[k] - model).squaredNorm();
  }
  r.residual_norm = std::sqrt(sq);
  r.energy_fraction = energy_fractions(r.q, dict_, &r.mode_has_energy);
}

FitResult bpd_fit(std::span<const double> s_grid, std::span<const Screw> samples,
                  const BasisDictionary& dict, const RodProperties& rod, const BPDConfig& config) {
  return BpdSolver({s_grid.begin(), s_grid.end()}, dict, rod, config).fit(samples);
}

double basis_energy(double q, const Atom& atom, double length) {
  return q * q * atom.square_integral(length);
}

VectorXd energy_fractions(const VectorXd& q, const BasisDictionary& dict,
                          std::array<bool, kStrainModes>* has_energy) {
  if (q.size() != dict.size()) throw LengthMismatch("energy_fractions: q size mismatch");
  VectorXd f = VectorXd::Zero(q.size());
  for (int mode = 0; mode < kStrainModes; ++mode) {
    const int first = dict.first_column(mode);
    const auto atoms = dict.atoms(mode);
    double total = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const int col = first + static_cast<int>(j);
      f(col) = basis_energy(q(col), atoms[j], dict.length());
      total += f(col);
    }
    const bool ok = total > 1e-300;
    if (ok) {
      f.segment(first, static_cast<Eigen::Index>(atoms.size())) /= total;
    } else {
      f.segment(first, static_cast<Eigen::Index>(atoms.size())).setZero();
    }
    if (has_energy != nullptr) (*has_energy)[static_cast<std::size_t>(mode)] = ok;
  }
  return f;
}

std::vector<double> grid_abscissae(const StrainGrid& grid) {
  std::vector<double> s(static_cast<std::size_t>(grid.points()));
  for (int n = 0; n < grid.points(); ++n) s[static_cast<std::size_t>(n)] = grid.abscissa(n);
  return s;
}

namespace {

VectorXd average_fractions(const std::vector<FitResult>& frames, const BasisDictionary& dict) {
  VectorXd sum = VectorXd::Zero(dict.size());
  VectorXd count = VectorXd::Zero(dict.size());
  for (const FitResult& r : frames) {
    for (int col = 0; col < dict.size(); ++col) {
      if (r.mode_has_energy[static_cast<std::size_t>(dict.mode_of(col))]) {
        sum(col) += r.energy_fraction(col);
        count(col) += 1.0;
      }
    }
  }
  for (int col = 0; col < dict.size(); ++col) {
    if (count(col) > 0.0) sum(col) /= count(col);
  }
  return sum;
}

std::vector<double> frame_times(const StrainGrid& grid) {
  std::vector<double> t(static_cast<std::size_t>(grid.frames()));
  for (int m = 0; m < grid.frames(); ++m) t[static_cast<std::size_t>(m)] = m * grid.sample_time();
  return t;
}

}  // namespace

SeriesFit bpd_fit_series(const StrainGrid& grid, const BasisDictionary& dict,
                         const RodProperties& rod, const BPDConfig& config, int block_size,
                         int threads) {
  if (block_size < 0) throw ValidationError("bpd: block size must be >= 0");
  const BpdSolver solver(grid_abscissae(grid), dict, rod, config);
  const int frames = grid.frames();
  const int block = block_size == 0 ? frames : block_size;
  const int blocks = (frames + block - 1) / block;
  SeriesFit out;
  out.times = frame_times(grid);
  out.frames.resize(static_cast<std::size_t>(frames));

  const auto run_block = [&](int b) {
    const VectorXd* warm = nullptr;
    for (int m = b * block; m < std::min(frames, (b + 1) * block); ++m) {
      const auto samples = grid.frame(m);
      out.frames[static_cast<std::size_t>(m)] = solver.fit(samples, warm);
      warm = &out.frames[static_cast<std::size_t>(m)].q;
    }
  };
  const int workers = std::max(1, std::min(threads, blocks));
  if (workers == 1) {
    for (int b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int b = w; b < blocks; b += workers) run_block(b);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  out.mean_fraction = average_fractions(out.frames, dict);
  out.kept.assign(static_cast<std::size_t>(dict.size()), true);
  return out;
}

SeriesFit truncate_bases(const SeriesFit& fit, const StrainGrid& grid,
                         const BasisDictionary& dict, const RodProperties& rod, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw ValidationError("truncate_bases: threshold must lie in [0, 1)");
  }
  if (fit.frames.size() != static_cast<std::size_t>(grid.frames())) {
    throw LengthMismatch("truncate_bases: fit and grid frame counts differ");
  }
  std::vector<bool> keep(static_cast<std::size_t>(dict.size()));
  for (int col = 0; col < dict.size(); ++col) {
    keep[static_cast<std::size_t>(col)] = fit.mean_fraction(col) >= threshold;
  }
  const BpdSolver solver(grid_abscissae(grid), dict, rod, BPDConfig{});
  SeriesFit out;
  out.times = fit.times;
  out.kept = keep;
  out.frames.reserve(fit.frames.size());
  for (int m = 0; m < grid.frames(); ++m) out.frames.push_back(solver.refit(grid.frame(m), keep));
  out.mean_fraction = average_fractions(out.frames, dict);
  return out;
}

double BackboneErrors::max_position() const {
  return position.empty() ? 0.0 : *std::max_element(position.begin(), position.end());
}

double BackboneErrors::max_orientation() const {
  return orientation.empty() ? 0.0 : *std::max_element(orientation.begin(), orientation.end());
}

BackboneErrors backbone_errors(std::span<const Pose> reconstructed, std::span<const Pose> measured) {
  if (reconstructed.size() != measured.size()) {
    throw LengthMismatch("backbone_errors: pose lists differ in length");
  }
  BackboneErrors e;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    e.position.push_back((reconstructed[i].position() - measured[i].position()).norm());
    e.orientation.push_back(dist_so3(reconstructed[i].rotation(), measured[i].rotation()));
  }
  return e;
}

void write_fit_csv(std::ostream& out, const SeriesFit& fit, const BasisDictionary& dict) {
  out << "t,atom_id,mode,coefficient,energy_fraction,kept\n";
  char buf[256];
  for (std::size_t m = 0; m < fit.frames.size(); ++m) {
    const FitResult& r = fit.frames[m];
    for (int col = 0; col < dict.size(); ++col) {
      std::snprintf(buf, sizeof buf, "%.17g,%d,%s,%.17g,%.17g,%d\n", fit.times[m], col,
                    kModeNames[static_cast<std::size_t>(dict.mode_of(col))], r.q(col),
                    r.energy_fraction(col), fit.kept[static_cast<std::size_t>(col)] ? 1 : 0);
      out << buf;
    }
  }
}

}  // namespace rodspec
