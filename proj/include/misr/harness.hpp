#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "misr/config.hpp"
#include "misr/priors.hpp"

namespace misr {

struct MeasurementRecord {
  std::string file;
  Axis axis = Axis::Z;
  int k = 0;
  double sigma = 0.0;
};

struct SubjectRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::string hr_file;
  std::vector<MeasurementRecord> measurements;
};

struct SimulateManifest {
  std::string config_hash;
  std::string version;
  std::string experiment;
  double sigma_base = 0.0;
  std::vector<AcquisitionView> views;
  std::vector<SubjectRecord> subjects;
};

/// Deterministic seed chain: every per-subject stream hangs off this value,
/// which the manifest records verbatim.
std::uint64_t subject_seed(std::uint64_t base_seed, int subject_index);

std::unique_ptr<Prior> build_prior(const RunConfig& rc, Dims dims, Spacing spacing);

void cmd_simulate(const RunConfig& rc);
void cmd_solve(const RunConfig& rc, const std::vector<std::string>& solver_filter = {});
void cmd_ablate_weights(const RunConfig& rc, const std::vector<std::string>& solver_filter = {});
void cmd_export_slices(const std::filesystem::path& volume_path, const std::string& plane,
                       const std::vector<int>& positions, const std::filesystem::path& out_dir);
std::string make_report_markdown(const std::filesystem::path& csv_path);

SimulateManifest read_manifest(const std::filesystem::path& out_dir);

/// Exact header string of the metrics CSV; columns are never reordered
/// within a major version.
extern const char* kMetricsCsvHeader;

/// Trailing integrity line appended to a finished CSV.
std::string checksum_line(const std::string& body);

/// Checks the trailing checksum; returns false (with a reason) for truncated
/// or tampered files.
bool verify_metrics_csv(const std::string& bytes, std::string* error);

Axis plane_axis_from_name(const std::string& plane);

/// 8-bit P5 slice, min-max normalized over the whole volume; a flat volume
/// maps to mid-gray.
std::string render_pgm_slice(const Volume& v, Axis plane_axis, int position);

}  // namespace misr
