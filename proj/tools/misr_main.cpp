// Command-line front end for multi-image super-resolution experiments on
// synthetic volumes: simulate degradations, run solvers, ablate noise
// weighting, export slice images, and summarize metrics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "misr/config.hpp"
#include "misr/harness.hpp"
#include "misr/version.hpp"

namespace {

misr::RunConfig load_with_overrides(const std::string& config_path, const std::string& out_override,
                                    bool has_seed, std::uint64_t seed_override, int jobs_override) {
  misr::RunConfig rc = misr::load_run_config(config_path);
  if (!out_override.empty()) rc.out_dir = out_override;
  if (has_seed) rc.base_seed = seed_override;
  if (jobs_override > 0) rc.jobs = jobs_override;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"misr: diffusion-style posterior solvers for single- and multi-image "
               "super-resolution of anisotropic volumes"};
  app.set_version_flag("--version", std::string(misr::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  int jobs_override = 0;
  std::vector<std::string> solver_filter;

  auto add_run_flags = [&](CLI::App* cmd, bool with_solvers) {
    cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--out", out_override, "override the output directory");
    cmd->add_option("--seed", seed_override, "override the base seed")
        ->each([&](const std::string&) { has_seed = true; });
    cmd->add_option("--jobs", jobs_override, "worker threads for subject cells");
    if (with_solvers) {
      cmd->add_option("--solver", solver_filter, "restrict to named solvers")->delimiter(',');
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate phantoms and degraded measurements");
  add_run_flags(sim, false);

  CLI::App* slv = app.add_subcommand("solve", "run solvers over simulated measurements");
  add_run_flags(slv, true);

  CLI::App* abl = app.add_subcommand("ablate-weights",
                                     "paired weighted-vs-uniform runs on two mixed-k views");
  add_run_flags(abl, true);

  std::string volume_path, plane = "axial", slices_out = ".";
  std::vector<int> positions;
  CLI::App* exp = app.add_subcommand("export-slices", "write PGM slice images from an MVOL1 file");
  exp->add_option("volume", volume_path, "MVOL1 volume file")->required();
  exp->add_option("--plane", plane, "axial, coronal, sagittal (or z/y/x)");
  exp->add_option("--positions", positions, "slice indices along the plane axis")
      ->required()
      ->delimiter(',');
  exp->add_option("--out", slices_out, "output directory");

  std::string csv_path, report_out;
  CLI::App* rep = app.add_subcommand("report", "aggregate a metrics CSV into a Markdown table");
  rep->add_option("csv", csv_path, "metrics CSV produced by solve or ablate-weights")->required();
  rep->add_option("--out", report_out, "write the Markdown here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      misr::cmd_simulate(
          load_with_overrides(config_path, out_override, has_seed, seed_override, jobs_override));
    } else if (slv->parsed()) {
      misr::cmd_solve(
          load_with_overrides(config_path, out_override, has_seed, seed_override, jobs_override),
          solver_filter);
    } else if (abl->parsed()) {
      misr::cmd_ablate_weights(
          load_with_overrides(config_path, out_override, has_seed, seed_override, jobs_override),
          solver_filter);
    } else if (exp->parsed()) {
      misr::cmd_export_slices(volume_path, plane, positions, slices_out);
    } else if (rep->parsed()) {
      const std::string md = misr::make_report_markdown(csv_path);
      if (report_out.empty()) {
        std::cout << md;
      } else {
        std::ofstream os(report_out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open '" + report_out + "' for writing");
        os << md;
      }
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
