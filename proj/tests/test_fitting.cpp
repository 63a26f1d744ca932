#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rodspec/errors.hpp"
#include "rodspec/fitting.hpp"
#include "rodspec/io.hpp"

namespace rodspec {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> abscissae(int n, double length = 1.0) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = (k + 0.5) * length / n;
  return s;
}

// Samples of xi* + B_q q plus optional Gaussian noise.
std::vector<Screw> synthesize(const BasisDictionary& dict, const RodProperties& rod, const VectorXd& q,
                              std::span<const double> s, double sigma = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sigma > 0.0 ? sigma : 1.0);
  std::vector<Screw> out;
  for (double x : s) {
    Screw v = dict.basis_matrix(x) * q + rod.stress_free(x);
    if (sigma > 0.0) {
      for (int i = 0; i < 6; ++i) v(i) += z(rng);
    }
    out.push_back(v);
  }
  return out;
}

// Design matrix of one mode with atoms scaled to unit L2([0, L]) norm (Simpson norms).
struct ModeProblem {
  MatrixXd a;
  VectorXd y;
  VectorXd norms;
};

ModeProblem mode_problem(const BasisDictionary& dict, const RodProperties& rod, int mode,
                         std::span<const double> s, std::span<const Screw> samples) {
  const auto atoms = dict.atoms(mode);
  ModeProblem p;
  p.a.resize(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(atoms.size()));
  p.y.resize(static_cast<Eigen::Index>(s.size()));
  p.norms.resize(static_cast<Eigen::Index>(atoms.size()));
  const int quad = 20000;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    double sum = 0.0;
    for (int i = 0; i <= quad; ++i) {
      const double w = (i == 0 || i == quad) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double v = atoms[j].value(static_cast<double>(i) / quad);
      sum += w * v * v;
    }
    p.norms(static_cast<Eigen::Index>(j)) = std::sqrt(sum * dict.length() / (3.0 * quad));
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double x = s[k] / dict.length();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      p.a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          atoms[j].value(x) / p.norms(static_cast<Eigen::Index>(j));
    }
    p.y(static_cast<Eigen::Index>(k)) = samples[k](mode) - rod.stress_free(s[k])(mode);
  }
  return p;
}

// Cyclic coordinate descent on 1/2 |y - A x|^2 + gamma |x|_1, run to a 1e-13 sweep change.
VectorXd coordinate_descent(const MatrixXd& a, const VectorXd& y, double gamma) {
  const MatrixXd g = a.transpose() * a;
  const VectorXd c = a.transpose() * y;
  VectorXd x = VectorXd::Zero(a.cols());
  for (int sweep = 0; sweep < 2000000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double rho = c(i) - g.row(i).dot(x) + g(i, i) * x(i);
      const double next = std::copysign(std::max(0.0, std::abs(rho) - gamma), rho) / g(i, i);
      change = std::max(change, std::abs(next - x(i)));
      x(i) = next;
    }
    if (change < 1e-13) break;
  }
  return x;
}

BasisDictionary mixed_dictionary() {
  BasisDictionary d(1.0);
  d.add_fourier(1, 4);     // kappa_y: cos0..cos4, sin1..sin4
  d.add_polynomial(3, 3);  // sigma_x
  d.add_gaussian(5, 3);    // sigma_z
  return d;
}

TEST(Bpd, ZeroGammaIsLeastSquares) {
  const BasisDictionary dict = BasisDictionary::polynomial(1.0, 3);
  const RodProperties rod;
  const auto s = abscissae(60);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  VectorXd q(dict.size());
  for (auto& v : q) v = z(rng);
  const auto samples = synthesize(dict, rod, q, s, 0.05, 2);
  const FitResult r = bpd_fit(s, samples, dict, rod, BPDConfig{});
  EXPECT_TRUE(r.converged);
  for (int mode = 0; mode < 6; ++mode) {
    const ModeProblem p = mode_problem(dict, rod, mode, s, samples);
    // Normal equations in raw units.
    MatrixXd raw = p.a * p.norms.asDiagonal();
    const VectorXd oracle = (raw.transpose() * raw).ldlt().solve(raw.transpose() * p.y);
    const VectorXd got = r.q.segment(dict.first_column(mode), oracle.size());
    EXPECT_LT((got - oracle).cwiseAbs().maxCoeff(), 1e-6) << "mode " << mode;
  }
}

TEST(Bpd, LargeGammaGivesZero) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(50);
  VectorXd q = VectorXd::Zero(dict.size());
  q(2) = 1.0;
  q(9) = -0.3;
  q(12) = 0.7;
  const auto samples = synthesize(dict, rod, q, s);
  const BpdSolver probe(s, dict, rod, BPDConfig{});
  BPDConfig cfg;
  for (int mode = 0; mode < 6; ++mode) cfg.gamma(mode) = 1.0001 * probe.gamma_ceiling(samples, mode) + 1e-12;
  const FitResult r = BpdSolver(s, dict, rod, cfg).fit(samples);
  EXPECT_TRUE(r.q.isZero(0.0));
  EXPECT_TRUE(r.converged);
}

TEST(Bpd, NoiselessSparseRecovery) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(200);
  VectorXd q = VectorXd::Zero(dict.size());
  q(3) = 2.0;
  q(7) = 0.5;
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-3);
  const FitResult r = bpd_fit(s, synthesize(dict, rod, q, s), dict, rod, cfg);
  for (int j = 0; j < dict.size(); ++j) {
    if (j == 3 || j == 7) continue;
    EXPECT_EQ(r.q(j), 0.0) << j;
  }
  EXPECT_NEAR(r.q(3), 2.0, 5e-2);
  EXPECT_NEAR(r.q(7), 0.5, 5e-2);
}

TEST(Bpd, NoisySparseRecovery) {
  // Universal threshold: 2 sigma sqrt(2 ln p) times the discrete norm sqrt(N / L) of a unit atom.
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const int n = 200;
  const auto s = abscissae(n);
  VectorXd q = VectorXd::Zero(dict.size());
  q(3) = 2.0;
  q(7) = 0.5;
  const double sigma = 1e-3;
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(2.0 * sigma * std::sqrt(2.0 * std::log(9.0)) * std::sqrt(n));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FitResult r = bpd_fit(s, synthesize(dict, rod, q, s, sigma, seed), dict, rod, cfg);
    for (int j = dict.first_column(1); j < dict.first_column(2); ++j) {
      EXPECT_EQ(r.q(j) != 0.0, j == 3 || j == 7) << "seed " << seed << " atom " << j;
    }
    EXPECT_NEAR(r.q(3), 2.0, 5e-2);
    EXPECT_NEAR(r.q(7), 0.5, 5e-2);
  }
}

TEST(Bpd, MatchesCoordinateDescentOracle) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(40);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd q(dict.size());
    for (auto& v : q) v = z(rng);
    const auto samples = synthesize(dict, rod, q, s, 0.2, 10 + trial);
    BPDConfig cfg;
    cfg.gamma << 0.0, 0.3, 0.0, 0.5, 0.0, 0.2;
    const FitResult r = bpd_fit(s, samples, dict, rod, cfg);
    ASSERT_TRUE(r.converged);
    for (int mode : {1, 3, 5}) {
      const ModeProblem p = mode_problem(dict, rod, mode, s, samples);
      const VectorXd oracle = coordinate_descent(p.a, p.y, cfg.gamma(mode));
      const VectorXd got = r.q.segment(dict.first_column(mode), oracle.size()).cwiseProduct(p.norms);
      EXPECT_LT((got - oracle).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Bpd, KktCertificateHolds) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(80);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  VectorXd q(dict.size());
  for (auto& v : q) v = z(rng);
  const auto samples = synthesize(dict, rod, q, s, 0.1, 7);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(0.4);
  const FitResult r = bpd_fit(s, samples, dict, rod, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.kkt_violation, 1e-6);
  for (int mode : {1, 3, 5}) {
    const ModeProblem p = mode_problem(dict, rod, mode, s, samples);
    const VectorXd x = r.q.segment(dict.first_column(mode), p.norms.size()).cwiseProduct(p.norms);
    const MatrixXd g = p.a.transpose() * p.a;
    const double lambda = Eigen::SelfAdjointEigenSolver<MatrixXd>(g).eigenvalues().maxCoeff();
    const VectorXd grad = g * x - p.a.transpose() * p.y;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) != 0.0) {
        EXPECT_LT(std::abs(grad(i) + 0.4 * (x(i) > 0 ? 1.0 : -1.0)), 2e-6 * lambda);
      } else {
        EXPECT_LE(std::abs(grad(i)), 0.4 + 2e-6 * lambda);
      }
    }
  }
}

TEST(Bpd, ObjectiveIsNonIncreasing) {
  // The solver is deterministic, so capping the iteration count exposes each accepted iterate.
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(50);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  VectorXd q(dict.size());
  for (auto& v : q) v = z(rng);
  const auto samples = synthesize(dict, rod, q, s, 0.3, 8);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(0.5);
  const auto objective = [&](const VectorXd& coeffs) {
    double f = 0.0;
    for (int mode : {1, 3, 5}) {
      const ModeProblem p = mode_problem(dict, rod, mode, s, samples);
      const VectorXd x = coeffs.segment(dict.first_column(mode), p.norms.size()).cwiseProduct(p.norms);
      f += 0.5 * (p.y - p.a * x).squaredNorm() + 0.5 * x.lpNorm<1>();
    }
    return f;
  };
  double previous = objective(VectorXd::Zero(dict.size()));
  for (int it = 1; it <= 120; ++it) {
    cfg.max_iterations = it;
    const double f = objective(bpd_fit(s, samples, dict, rod, cfg).q);
    EXPECT_LE(f, previous * (1.0 + 1e-14)) << "iteration " << it;
    previous = f;
  }
}

TEST(Bpd, WarmStartReachesSameSolution) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const auto s = abscissae(50);
  VectorXd q = VectorXd::Zero(dict.size());
  q(1) = 0.8;
  q(10) = -0.2;
  const auto samples = synthesize(dict, rod, q, s, 0.01, 9);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(0.05);
  const BpdSolver solver(s, dict, rod, cfg);
  const FitResult cold = solver.fit(samples);
  const VectorXd warm_q = cold.q * 0.9;
  const FitResult warm = solver.fit(samples, &warm_q);
  EXPECT_LT((cold.q - warm.q).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Bpd, Validation) {
  const RodProperties rod;
  const auto s = abscissae(10);
  EXPECT_THROW(BpdSolver(s, BasisDictionary(1.0), rod, BPDConfig{}), EmptyDictionary);
  BPDConfig bad;
  bad.gamma(2) = -1.0;
  EXPECT_THROW(BpdSolver(s, mixed_dictionary(), rod, bad), ValidationError);
  BPDConfig wrong_atoms;
  wrong_atoms.atom_gamma = {1.0, 2.0};
  EXPECT_THROW(BpdSolver(s, mixed_dictionary(), rod, wrong_atoms), LengthMismatch);
  const BpdSolver solver(s, mixed_dictionary(), rod, BPDConfig{});
  EXPECT_THROW(solver.fit(std::vector<Screw>(9, Screw::Zero())), LengthMismatch);
}

TEST(Bpd, NonConvergenceIsFlagged) {
  const BasisDictionary dict = BasisDictionary::polynomial(1.0, 5, {true, false, false, false, false, false});
  const RodProperties rod;
  const auto s = abscissae(30);
  VectorXd q = VectorXd::Zero(dict.size());
  q(5) = 1.0;
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-4);
  cfg.max_iterations = 3;
  const FitResult r = bpd_fit(s, synthesize(dict, rod, q, s), dict, rod, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.kkt_violation, 1e-6);
  EXPECT_TRUE(r.q.allFinite());
}

TEST(Energy, BasisEnergyExamples) {
  EXPECT_EQ(basis_energy(0.0, Atom::cosine(0), 1.0), 0.0);
  EXPECT_EQ(basis_energy(2.0, Atom::polynomial(0), 1.0), 4.0);
  EXPECT_NEAR(basis_energy(1.0, Atom::sine(1), 1.0), 0.5, 1e-15);
}

TEST(Energy, FractionsSumToOnePerMode) {
  const BasisDictionary dict = mixed_dictionary();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  VectorXd q(dict.size());
  for (auto& v : q) v = z(rng);
  std::array<bool, kStrainModes> has{};
  const VectorXd f = energy_fractions(q, dict, &has);
  for (int mode : {1, 3, 5}) {
    EXPECT_TRUE(has[static_cast<std::size_t>(mode)]);
    EXPECT_NEAR(f.segment(dict.first_column(mode), static_cast<Eigen::Index>(dict.atoms(mode).size())).sum(),
                1.0, 1e-9);
  }
  EXPECT_FALSE(has[0]);
  // Invariant to scaling within a mode.
  VectorXd scaled = q;
  scaled.segment(dict.first_column(3), 4) *= -7.5;
  EXPECT_LT((energy_fractions(scaled, dict) - f).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Energy, SingleAndEqualAtoms) {
  BasisDictionary dict(1.0);
  dict.add(2, Atom::sine(1));
  dict.add(2, Atom::cosine(2));
  dict.add(4, Atom::polynomial(0));
  VectorXd q(3);
  q << 1.0, -1.0, 3.0;  // equal energies in mode 2
  const VectorXd f = energy_fractions(q, dict);
  EXPECT_NEAR(f(0), 0.5, 1e-15);
  EXPECT_NEAR(f(1), 0.5, 1e-15);
  EXPECT_EQ(f(2), 1.0);
}

StrainGrid synthetic_series(const BasisDictionary& dict, const RodProperties& rod, int frames, int points) {
  const double lambda_s = 1.0 / points;
  StrainGrid g(frames, points, lambda_s, 0.01, 1.0, 0.5 * lambda_s);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(0.0, 1e-4);
  for (int m = 0; m < frames; ++m) {
    VectorXd q = VectorXd::Zero(dict.size());
    const double t = 0.01 * m;
    q(0) = 1.0 + 0.2 * std::sin(3.0 * t);  // dominant
    q(3) = 0.2 * std::cos(2.0 * t);
    q(7) = 0.02;                           // minor
    q(11) = 0.1;
    for (int n = 0; n < points; ++n) {
      Screw v = dict.basis_matrix(g.abscissa(n)) * q + rod.stress_free(g.abscissa(n));
      for (int i = 0; i < 6; ++i) v(i) += z(rng);
      g.set_sample(m, n, v);
    }
  }
  return g;
}

TEST(Series, BlocksAndThreadsAreDeterministic) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const StrainGrid g = synthetic_series(dict, rod, 12, 40);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-3);
  const SeriesFit one = bpd_fit_series(g, dict, rod, cfg, 4, 1);
  const SeriesFit three = bpd_fit_series(g, dict, rod, cfg, 4, 3);
  for (std::size_t m = 0; m < one.frames.size(); ++m) EXPECT_EQ(one.frames[m].q, three.frames[m].q);
  EXPECT_EQ(one.mean_fraction, three.mean_fraction);
  const SeriesFit chained = bpd_fit_series(g, dict, rod, cfg);
  for (std::size_t m = 0; m < one.frames.size(); ++m) {
    EXPECT_LT((chained.frames[m].q - one.frames[m].q).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Series, TruncationDropsLowEnergyAtomsAndDebiases) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const StrainGrid g = synthetic_series(dict, rod, 6, 60);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-3);
  const SeriesFit fit = bpd_fit_series(g, dict, rod, cfg);
  const SeriesFit none = truncate_bases(fit, g, dict, rod, 0.0);
  EXPECT_TRUE(std::all_of(none.kept.begin(), none.kept.end(), [](bool k) { return k; }));
  const SeriesFit one = truncate_bases(fit, g, dict, rod, 0.01);
  const SeriesFit five = truncate_bases(fit, g, dict, rod, 0.05);
  const auto kept = [](const SeriesFit& f) { return std::count(f.kept.begin(), f.kept.end(), true); };
  EXPECT_LE(kept(five), kept(one));
  EXPECT_LT(kept(one), dict.size());
  EXPECT_TRUE(one.kept[3]);

  // Debiased residual never exceeds that of zeroing the dropped coefficients.
  const BpdSolver solver(grid_abscissae(g), dict, rod, BPDConfig{});
  for (int m = 0; m < g.frames(); ++m) {
    VectorXd zeroed = fit.frames[static_cast<std::size_t>(m)].q;
    for (int j = 0; j < dict.size(); ++j) {
      if (!five.kept[static_cast<std::size_t>(j)]) zeroed(j) = 0.0;
    }
    double sq = 0.0;
    const auto s = grid_abscissae(g);
    for (int n = 0; n < g.points(); ++n) {
      sq += (g.sample(m, n) - dict.basis_matrix(s[static_cast<std::size_t>(n)]) * zeroed -
             rod.stress_free(s[static_cast<std::size_t>(n)]))
                .squaredNorm();
    }
    EXPECT_LE(five.frames[static_cast<std::size_t>(m)].residual_norm, std::sqrt(sq) * (1.0 + 1e-12));
  }

  // A threshold just below one keeps only atoms that dominate their mode.
  const SeriesFit top = truncate_bases(fit, g, dict, rod, 0.999);
  EXPECT_LE(kept(top), 3);
  EXPECT_THROW(truncate_bases(fit, g, dict, rod, 1.0), ValidationError);
}

TEST(Errors, BackboneErrors) {
  std::vector<Pose> a, b;
  for (int i = 0; i < 5; ++i) {
    const Pose g = exp_se3(make_screw(Vector3(0.1 * i, 0.0, 0.2), Vector3(1.0, 0.0, 0.0)), 0.2 * i);
    a.push_back(g);
    b.push_back(Pose::translation(Vector3(0.0, 0.003, 0.004)) * g);
  }
  const auto same = backbone_errors(a, a);
  EXPECT_EQ(same.max_position(), 0.0);
  EXPECT_LT(same.max_orientation(), 1e-7);
  const auto shifted = backbone_errors(b, a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(shifted.position[i], 0.005, 1e-15);
    EXPECT_LT(shifted.orientation[i], 1e-7);
  }
  a.pop_back();
  EXPECT_THROW(backbone_errors(a, b), LengthMismatch);
}

TEST(Export, FitCsvRoundTrip) {
  const BasisDictionary dict = mixed_dictionary();
  const RodProperties rod;
  const StrainGrid g = synthetic_series(dict, rod, 3, 30);
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-3);
  const SeriesFit fit = truncate_bases(bpd_fit_series(g, dict, rod, cfg), g, dict, rod, 0.05);
  std::stringstream csv;
  write_fit_csv(csv, fit, dict);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "t,atom_id,mode,coefficient,energy_fraction,kept");
  const FitTable table = read_fit_csv(csv, dict.size());
  ASSERT_EQ(table.q.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(table.q[m], fit.frames[m].q);
    EXPECT_EQ(table.times[m], fit.times[m]);
  }
  EXPECT_EQ(table.kept, fit.kept);
}

}  // namespace
}  // namespace rodspec
