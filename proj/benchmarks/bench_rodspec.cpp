#include <benchmark/benchmark.h>

#include <random>

#include "rodspec/config.hpp"
#include "rodspec/fitting.hpp"
#include "rodspec/gvs.hpp"
#include "rodspec/liealg.hpp"
#include "rodspec/spectra.hpp"

namespace {

using namespace rodspec;

Screw random_screw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return make_screw(Vector3(u(rng), u(rng), u(rng)), Vector3(u(rng), u(rng), u(rng)));
}

void BM_ExpSe3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Screw xi = random_screw(rng);
  for (auto _ : state) benchmark::DoNotOptimize(exp_se3(xi));
}
BENCHMARK(BM_ExpSe3);

void BM_LogSe3(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Pose g = exp_se3(random_screw(rng));
  for (auto _ : state) benchmark::DoNotOptimize(log_se3(g));
}
BENCHMARK(BM_LogSe3);

void BM_ForwardKinematics(benchmark::State& state) {
  const RobotConfig robot = desk_robot();
  const GvsModel model = robot.model();
  const VectorXd q = VectorXd::Constant(model.basis.size(), 0.1);
  const auto grid = uniform_grid(0.0, 1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(model.basis, q, model.rod, grid));
}
BENCHMARK(BM_ForwardKinematics)->Arg(32)->Arg(200);

void BM_Jacobian(benchmark::State& state) {
  const GvsModel model = desk_robot().model();
  const VectorXd q = VectorXd::Constant(model.basis.size(), 0.1);
  const auto grid = uniform_grid(0.0, 1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kinematics_with_jacobian(model.basis, q, model.rod, grid));
}
BENCHMARK(BM_Jacobian)->Arg(32)->Arg(200);

void BM_Acceleration(benchmark::State& state) {
  RobotConfig robot = desk_robot();
  robot.quadrature_points = static_cast<int>(state.range(0));
  const GvsDynamics dynamics(robot.model());
  const VectorXd q = VectorXd::Constant(dynamics.dofs(), 0.1);
  const VectorXd qdot = VectorXd::Constant(dynamics.dofs(), 0.01);
  const VectorXd tau = VectorXd::Ones(static_cast<Eigen::Index>(robot.actuators.size()));
  for (auto _ : state) benchmark::DoNotOptimize(dynamics.acceleration(q, qdot, tau));
}
BENCHMARK(BM_Acceleration)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

StrainGrid random_grid(int frames, int points) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  StrainGrid g(frames, points, 1.0 / points, 0.01, 1.0, 0.5 / points);
  for (int m = 0; m < frames; ++m) {
    for (int n = 0; n < points; ++n) {
      for (int mode = 0; mode < 6; ++mode) g(m, n, mode) = z(rng);
    }
  }
  return g;
}

void BM_Dsft(benchmark::State& state) {
  const StrainGrid g = random_grid(1, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dsft(g, 0, 4));
}
BENCHMARK(BM_Dsft)->Arg(32)->Arg(1024);

void BM_Dstft(benchmark::State& state) {
  const StrainGrid g = random_grid(static_cast<int>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(dstft(g, 4, 1));
}
BENCHMARK(BM_Dstft)->Arg(50)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BpdFrame(benchmark::State& state) {
  const BasisDictionary dict = BasisDictionary::polynomial(1.0, 4);
  const RodProperties rod;
  std::vector<double> s;
  for (int k = 0; k < 32; ++k) s.push_back((k + 0.5) / 32.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  VectorXd q(dict.size());
  for (auto& v : q) v = z(rng);
  std::vector<Screw> samples;
  for (double x : s) samples.push_back(dict.basis_matrix(x) * q + rod.stress_free(x));
  BPDConfig cfg;
  cfg.gamma = Screw::Constant(1e-3);
  const BpdSolver solver(s, dict, rod, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solver.fit(samples));
}
BENCHMARK(BM_BpdFrame)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
