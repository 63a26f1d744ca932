// rodspec: command-line front end for the spectral strain-analysis pipeline.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "rodspec/config.hpp"
#include "rodspec/errors.hpp"
#include "rodspec/fitting.hpp"
#include "rodspec/io.hpp"
#include "rodspec/poses.hpp"
#include "rodspec/procedure.hpp"
#include "rodspec/spectra.hpp"

namespace {

using namespace rodspec;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

Config load(const Globals& g) {
  Config c = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed) {
    c.experiment.seed = *g.seed;
    c.experiment.signal.seed = *g.seed;
  }
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

StrainGrid load_strain(const std::string& path, const Config& c) {
  auto in = open_in(path);
  return read_strain_csv(in, c.robot.rod.length, c.experiment.sample_time);
}

Screw parse_gamma(const std::string& text) {
  std::vector<double> v;
  for (const auto& f : split_csv_line(text)) v.push_back(parse_double(f));
  if (v.size() == 1) return Screw::Constant(v[0]);
  if (v.size() != 6) throw ValidationError("--gamma needs 1 or 6 comma-separated values");
  return Eigen::Map<const Screw>(v.data());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral analysis and sparse strain-basis identification for soft rods"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON file with 'robot' and 'experiment' sections");
  app.add_option("--seed", g.seed, "Override the experiment seed");

  std::string out_path;
  std::string in_path;

  auto* babble_cmd = app.add_subcommand("babble", "Write the babbling input signal as CSV");
  babble_cmd->add_option("-o,--out", out_path, "Output CSV")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate and write marker poses as CSV");
  simulate_cmd->add_option("-o,--out", out_path, "Output pose CSV")->required();

  auto* extract_cmd = app.add_subcommand("extract-strain", "Pose CSV to strain CSV");
  extract_cmd->add_option("-i,--poses", in_path, "Input pose CSV")->required();
  extract_cmd->add_option("-o,--out", out_path, "Output strain CSV")->required();

  bool stft = false;
  bool normalize_db = false;
  int zero_pad = 4;
  int frame = -1;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Strain CSV to spectrum CSV");
  spectrum_cmd->add_option("-i,--strain", in_path, "Input strain CSV")->required();
  spectrum_cmd->add_option("-o,--out", out_path, "Output spectrum CSV")->required();
  spectrum_cmd->add_flag("--stft", stft, "Space-time transform over all frames");
  spectrum_cmd->add_option("--zero-pad", zero_pad, "Spatial zero-pad factor")->check(CLI::PositiveNumber);
  spectrum_cmd->add_flag("--normalize-db", normalize_db, "dB relative to the DC bin of each mode");
  spectrum_cmd->add_option("--frame", frame, "Frame for the spatial transform (default: last)");

  std::string gamma_text;
  auto* fit_cmd = app.add_subcommand("fit", "Sparse basis fit of a strain CSV");
  fit_cmd->add_option("-i,--strain", in_path, "Input strain CSV")->required();
  fit_cmd->add_option("-o,--out", out_path, "Output fit CSV")->required();
  fit_cmd->add_option("--gamma", gamma_text, "Sparsity weight: one value or six per-mode values");

  double threshold = 0.01;
  auto* truncate_cmd = app.add_subcommand("truncate", "Fit, drop low-energy atoms, refit");
  truncate_cmd->add_option("-i,--strain", in_path, "Input strain CSV")->required();
  truncate_cmd->add_option("-o,--out", out_path, "Output fit CSV")->required();
  truncate_cmd->add_option("--threshold", threshold, "Time-averaged energy fraction threshold")
      ->check(CLI::Range(0.0, 1.0));
  truncate_cmd->add_option("--gamma", gamma_text, "Sparsity weight: one value or six per-mode values");

  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Fit CSV to backbone pose CSV");
  reconstruct_cmd->add_option("-i,--fit", in_path, "Input fit CSV")->required();
  reconstruct_cmd->add_option("-o,--out", out_path, "Output pose CSV")->required();

  auto* report_cmd = app.add_subcommand("report", "Run the full procedure into a directory");
  report_cmd->add_option("-o,--out", out_path, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Config c = load(g);
    const auto& e = c.experiment;
    if (babble_cmd->parsed()) {
      auto out = open_out(out_path);
      const auto t = time_grid(e);
      write_input_csv(out, t, babble(e));
    } else if (simulate_cmd->parsed()) {
      auto out = open_out(out_path);
      write_pose_csv(out, simulate_markers(c.robot, e).poses);
    } else if (extract_cmd->parsed()) {
      auto in = open_in(in_path);
      const PoseSeries poses =
          normalize_poses(read_pose_csv(in, e.lambda_s(c.robot.rod.length), e.sample_time));
      auto out = open_out(out_path);
      write_strain_csv(out, extract_strain(poses, c.robot.rod.length));
    } else if (spectrum_cmd->parsed()) {
      const StrainGrid grid = load_strain(in_path, c);
      const SpectrumCsvOptions opts{normalize_db};
      auto out = open_out(out_path);
      if (stft) {
        write_spectrum_csv(out, dstft(grid, zero_pad, e.time_zero_pad), opts);
      } else {
        write_spectrum_csv(out, dsft(grid, frame < 0 ? grid.frames() - 1 : frame, zero_pad), opts);
      }
    } else if (fit_cmd->parsed() || truncate_cmd->parsed()) {
      const StrainGrid grid = load_strain(in_path, c);
      BPDConfig cfg = e.fit;
      if (!gamma_text.empty()) cfg.gamma = parse_gamma(gamma_text);
      const GvsModel model = c.robot.model();
      SeriesFit fit = bpd_fit_series(grid, model.basis, model.rod, cfg, e.fit_block);
      if (truncate_cmd->parsed()) {
        fit = truncate_bases(fit, grid, model.basis, model.rod, threshold);
      }
      auto out = open_out(out_path);
      write_fit_csv(out, fit, model.basis);
    } else if (reconstruct_cmd->parsed()) {
      const GvsModel model = c.robot.model();
      auto in = open_in(in_path);
      const FitTable table = read_fit_csv(in, model.basis.size());
      PoseSeries poses;
      poses.lambda_s = e.lambda_s(c.robot.rod.length);
      poses.sample_time = table.times.size() > 1 ? table.times[1] - table.times[0] : e.sample_time;
      const auto s = marker_grid(c.robot, e);
      for (const auto& q : table.q) {
        poses.frames.push_back(reconstruct_backbone(q, model.basis, model.rod, s));
      }
      auto out = open_out(out_path);
      write_pose_csv(out, poses);
    } else if (report_cmd->parsed()) {
      const AnalysisReport r = run_procedure(c, out_path);
      std::cout << "wrote " << r.artifacts.size() << " artifacts to " << out_path << "\n";
      std::cout << "dofs " << r.dofs << ", cutoff bin " << r.cutoff.bin << ", min segments "
                << r.cutoff.segments << "\n";
      for (const auto& th : r.thresholds) {
        std::cout << "threshold " << th.threshold << ": kept " << th.kept << ", max position error "
                  << th.max_position_error << " m\n";
      }
    }
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical failure: " << ex.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
