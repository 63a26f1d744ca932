#pragma once

// CSV artifacts. Numbers are written with 17 significant digits so that a
// write/read round trip is exact.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rodspec/poses.hpp"
#include "rodspec/spectra.hpp"

namespace rodspec {

/// Header `t,n,R00,R01,...,R22,px,py,pz`, one row per (frame, marker).
void write_pose_csv(std::ostream& out, const PoseSeries& poses);
/// Rows are grouped into frames by their t value. Rotations are projected onto SO(3)
/// (rejecting matrices further than 1e-6 from orthonormal); run normalize_poses
/// afterwards to rebase.
PoseSeries read_pose_csv(std::istream& in, double lambda_s, double sample_time);

/// Header `t,s,kx,ky,kz,sx,sy,sz`.
void write_strain_csv(std::ostream& out, const StrainGrid& grid);
/// lambda_s and the offset come from the s column; T_s from the t column unless a
/// positive `sample_time` is given (needed for single-frame files).
StrainGrid read_strain_csv(std::istream& in, double length, double sample_time = 0.0);

/// Header `t,u0,u1,...`, one row per time sample.
void write_input_csv(std::ostream& out, std::span<const double> t_grid, const Eigen::MatrixXd& u);

struct FitTable {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> q;  // per frame
  std::vector<bool> kept;
};
/// Reads the `t,atom_id,mode,coefficient,energy_fraction,kept` export.
FitTable read_fit_csv(std::istream& in, int dofs);

/// Comma-separated fields of one line (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& field);

}  // namespace rodspec
