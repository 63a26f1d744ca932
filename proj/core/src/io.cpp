#include "rodspec/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "rodspec/basis.hpp"
#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

std::string format_row(std::span<const double> values) {
  std::string row;
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i > 0) row += ',';
    row += buf;
  }
  row += '\n';
  return row;
}

std::vector<std::vector<double>> read_rows(std::istream& in, std::size_t columns,
                                           const char* who) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(std::string(who) + ": empty file");
  if (split_csv_line(line).size() != columns) {
    throw ValidationError(std::string(who) + ": header has the wrong number of columns");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      throw ValidationError(std::string(who) + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(columns));
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto& f : fields) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_double(const std::string& field) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ValidationError("csv: not a number: '" + field + "'");
  return v;
}

void write_pose_csv(std::ostream& out, const PoseSeries& poses) {
  out << "t,n,R00,R01,R02,R10,R11,R12,R20,R21,R22,px,py,pz\n";
  for (int m = 0; m < poses.frame_count(); ++m) {
    const auto& f = poses.frames[static_cast<std::size_t>(m)];
    for (std::size_t n = 0; n < f.size(); ++n) {
      const Matrix3& r = f[n].rotation();
      const Vector3& p = f[n].position();
      const double row[] = {m * poses.sample_time, static_cast<double>(n),
                            r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2),
                            r(2, 0), r(2, 1), r(2, 2), p(0), p(1), p(2)};
      out << format_row(row);
    }
  }
}

PoseSeries read_pose_csv(std::istream& in, double lambda_s, double sample_time) {
  const auto rows = read_rows(in, 14, "pose csv");
  PoseSeries ps;
  ps.lambda_s = lambda_s;
  ps.sample_time = sample_time;
  double current_t = std::nan("");
  for (const auto& row : rows) {
    if (ps.frames.empty() || row[0] != current_t) {
      ps.frames.emplace_back();
      current_t = row[0];
    }
    auto& frame = ps.frames.back();
    if (row[1] != static_cast<double>(frame.size())) {
      throw ValidationError("pose csv: marker indices must run 0, 1, ... within each frame");
    }
    Matrix3 r;
    r << row[2], row[3], row[4], row[5], row[6], row[7], row[8], row[9], row[10];
    // Measured rotations may be slightly off SO(3).
    frame.push_back(Pose::nearest(r, Vector3(row[11], row[12], row[13])));
  }
  ps.validate();
  return ps;
}

void write_strain_csv(std::ostream& out, const StrainGrid& grid) {
  out << "t,s,kx,ky,kz,sx,sy,sz\n";
  for (int m = 0; m < grid.frames(); ++m) {
    for (int n = 0; n < grid.points(); ++n) {
      const Screw xi = grid.sample(m, n);
      const double row[] = {m * grid.sample_time(), grid.abscissa(n), xi(0), xi(1), xi(2),
                            xi(3), xi(4), xi(5)};
      out << format_row(row);
    }
  }
}

StrainGrid read_strain_csv(std::istream& in, double length, double sample_time) {
  const auto rows = read_rows(in, 8, "strain csv");
  std::vector<std::vector<Screw>> frames;
  std::vector<double> times;
  std::vector<double> s;
  for (const auto& row : rows) {
    if (times.empty() || row[0] != times.back()) {
      times.push_back(row[0]);
      frames.emplace_back();
    }
    if (frames.size() == 1) s.push_back(row[1]);
    Screw xi;
    xi << row[2], row[3], row[4], row[5], row[6], row[7];
    frames.back().push_back(xi);
  }
  if (s.size() < 2) throw ValidationError("strain csv: need at least two samples per frame");
  const double lambda = (s.back() - s.front()) / static_cast<double>(s.size() - 1);
  double ts = sample_time;
  if (!(ts > 0.0)) {
    if (times.size() < 2) throw ValidationError("strain csv: single frame needs T_s");
    ts = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  }
  return StrainGrid::from_frames(frames, lambda, ts, length, s.front());
}

void write_input_csv(std::ostream& out, std::span<const double> t_grid, const Eigen::MatrixXd& u) {
  if (u.cols() != static_cast<Eigen::Index>(t_grid.size())) {
    throw LengthMismatch("input csv: sample count differs from the time grid");
  }
  out << 't';
  for (Eigen::Index a = 0; a < u.rows(); ++a) out << ",u" << a;
  out << '\n';
  std::vector<double> row(static_cast<std::size_t>(u.rows()) + 1);
  for (std::size_t m = 0; m < t_grid.size(); ++m) {
    row[0] = t_grid[m];
    for (Eigen::Index a = 0; a < u.rows(); ++a) {
      row[static_cast<std::size_t>(a) + 1] = u(a, static_cast<Eigen::Index>(m));
    }
    out << format_row(row);
  }
}

FitTable read_fit_csv(std::istream& in, int dofs) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("fit csv: empty file");
  FitTable table;
  table.kept.assign(static_cast<std::size_t>(dofs), true);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw ValidationError("fit csv: line " + std::to_string(line_no) + " needs 6 fields");
    }
    const double t = parse_double(f[0]);
    const int atom = static_cast<int>(parse_double(f[1]));
    if (atom < 0 || atom >= dofs) throw IndexOutOfRange("fit csv: atom id outside dictionary");
    if (table.times.empty() || t != table.times.back()) {
      table.times.push_back(t);
      table.q.push_back(Eigen::VectorXd::Zero(dofs));
    }
    table.q.back()(atom) = parse_double(f[3]);
    table.kept[static_cast<std::size_t>(atom)] = parse_double(f[5]) != 0.0;
  }
  return table;
}

}  // namespace rodspec
