#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "misr/phantom.hpp"
#include "misr/samplers.hpp"
#include "misr/volume.hpp"

namespace misr {

/// Raised for malformed run configurations; the message carries the file,
/// line, and key involved.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` file with `[section]` or `[section arg]`
/// headers and `#` comments. Parsed shape, before interpretation.
struct ConfigFile {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string name;
    std::string arg;
    int line = 0;
    std::vector<Entry> entries;
  };
  std::string origin;
  std::vector<Section> sections;
};

ConfigFile parse_config_text(const std::string& text, const std::string& origin);

struct AcquisitionView {
  Axis axis;
  int k = 0;
};

struct PriorConfig {
  enum class Type { Gaussian, Mixture };
  Type type = Type::Mixture;
  int components = 16;
  double tau = 0.05;
  std::uint64_t exemplar_seed = 1000;
  std::vector<std::string> mean_files;  // overrides generated exemplars
  bool mean_from_exemplars = false;     // gaussian: average the exemplar phantoms
};

struct SolverEntry {
  std::string name;  // section argument; doubles as the CSV label
  SolverConfig config;
};

/// Everything a run needs: experiment identity, subjects, the degradation
/// protocol, the prior, and one or more solver configurations.
struct RunConfig {
  std::string name = "run";
  std::filesystem::path out_dir;
  int subjects = 1;
  std::uint64_t base_seed = 0;
  int jobs = 1;

  PhantomSpec phantom;                     // per-subject seed filled in later
  std::vector<std::string> input_volumes;  // when set, used instead of phantoms

  std::vector<AcquisitionView> views;
  double sigma_base = 0.1;

  PriorConfig prior;
  std::vector<SolverEntry> solvers;

  std::string source_text;  // raw config bytes, hashed into the manifest
};

RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a64_hex(const std::string& bytes);

/// "%.6g" with the C locale; the one float format used in CSV and reports.
std::string format_g6(double v);

}  // namespace misr
