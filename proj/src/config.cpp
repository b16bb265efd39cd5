#include "misr/config.hpp"

#include <cinttypes>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace misr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const ConfigFile::Entry& e, const std::string& origin) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    fail(origin, e.line, "key '" + e.key + "': expected a number, got '" + e.value + "'");
  }
}

long long parse_int(const ConfigFile::Entry& e, const std::string& origin) {
  long long v = 0;
  const auto* b = e.value.data();
  const auto* end = b + e.value.size();
  const auto res = std::from_chars(b, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    fail(origin, e.line, "key '" + e.key + "': expected an integer, got '" + e.value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const ConfigFile::Entry& e, const std::string& origin) {
  std::uint64_t v = 0;
  const auto* b = e.value.data();
  const auto* end = b + e.value.size();
  const auto res = std::from_chars(b, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    fail(origin, e.line, "key '" + e.key + "': expected an unsigned integer, got '" + e.value + "'");
  }
  return v;
}

bool parse_bool(const ConfigFile::Entry& e, const std::string& origin) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(origin, e.line, "key '" + e.key + "': expected a boolean, got '" + e.value + "'");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
  ConfigFile cf;
  cf.origin = origin;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header: '" + s + "'");
      const std::string inner = trim(s.substr(1, s.size() - 2));
      if (inner.empty()) fail(origin, line, "empty section header");
      ConfigFile::Section sec;
      sec.line = line;
      const auto sp = inner.find_first_of(" \t");
      if (sp == std::string::npos) {
        sec.name = inner;
      } else {
        sec.name = inner.substr(0, sp);
        sec.arg = trim(inner.substr(sp + 1));
      }
      cf.sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      fail(origin, line, "expected 'key = value', got '" + s + "'");
    }
    if (cf.sections.empty()) {
      fail(origin, line, "key outside any [section]");
    }
    ConfigFile::Entry e;
    e.key = trim(s.substr(0, eq));
    e.value = trim(s.substr(eq + 1));
    e.line = line;
    if (e.key.empty()) fail(origin, line, "empty key");
    cf.sections.back().entries.push_back(std::move(e));
  }
  return cf;
}

namespace {

void apply_solver_key(SolverConfig& sc, const ConfigFile::Entry& e, const std::string& origin) {
  if (e.key == "steps") sc.steps = static_cast<int>(parse_int(e, origin));
  else if (e.key == "zeta") sc.zeta = parse_double(e, origin);
  else if (e.key == "sigma_floor") sc.sigma_floor = parse_double(e, origin);
  else if (e.key == "dmap_inner") sc.dmap_inner = static_cast<int>(parse_int(e, origin));
  else if (e.key == "dmap_d") sc.dmap_d = parse_double(e, origin);
  else if (e.key == "dmap_literal_update") sc.dmap_literal_update = parse_bool(e, origin);
  else if (e.key == "candidates") sc.candidates = static_cast<int>(parse_int(e, origin));
  else if (e.key == "rho") sc.rho = parse_double(e, origin);
  else if (e.key == "admm_iters") sc.admm_iters = static_cast<int>(parse_int(e, origin));
  else if (e.key == "cg_iters") sc.cg_iters = static_cast<int>(parse_int(e, origin));
  else if (e.key == "cg_tol") sc.cg_tol = parse_double(e, origin);
  else if (e.key == "diffpir_lambda_scale") sc.diffpir_lambda_scale = parse_double(e, origin);
  else if (e.key == "diffpir_lambda_override") sc.diffpir_lambda_override = parse_double(e, origin);
  else if (e.key == "unsquared_gradient") sc.unsquared_gradient = parse_bool(e, origin);
  else fail(origin, e.line, "unknown [solver] key '" + e.key + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const ConfigFile cf = parse_config_text(text, origin);
  RunConfig rc;
  rc.source_text = text;
  bool phantom_dims_set = false;

  for (const auto& sec : cf.sections) {
    if (sec.name == "experiment") {
      for (const auto& e : sec.entries) {
        if (e.key == "name") rc.name = e.value;
        else if (e.key == "out") rc.out_dir = e.value;
        else if (e.key == "subjects") rc.subjects = static_cast<int>(parse_int(e, origin));
        else if (e.key == "seed") rc.base_seed = parse_u64(e, origin);
        else if (e.key == "jobs") rc.jobs = static_cast<int>(parse_int(e, origin));
        else fail(origin, e.line, "unknown [experiment] key '" + e.key + "'");
      }
    } else if (sec.name == "phantom") {
      for (const auto& e : sec.entries) {
        if (e.key == "dims") {
          const auto toks = split_ws(e.value);
          if (toks.size() != 3) fail(origin, e.line, "dims needs three integers");
          rc.phantom.dims = {std::stoi(toks[0]), std::stoi(toks[1]), std::stoi(toks[2])};
          phantom_dims_set = true;
        } else if (e.key == "spacing") {
          const auto toks = split_ws(e.value);
          if (toks.size() != 3) fail(origin, e.line, "spacing needs three numbers");
          rc.phantom.spacing = {std::stod(toks[0]), std::stod(toks[1]), std::stod(toks[2])};
        } else if (e.key == "ellipsoids") {
          const auto toks = split_ws(e.value);
          if (toks.size() != 2) fail(origin, e.line, "ellipsoids needs 'min max'");
          rc.phantom.min_ellipsoids = std::stoi(toks[0]);
          rc.phantom.max_ellipsoids = std::stoi(toks[1]);
        } else if (e.key == "bias_amplitude") {
          rc.phantom.bias_amplitude = parse_double(e, origin);
        } else if (e.key == "input") {
          rc.input_volumes.push_back(e.value);
        } else {
          fail(origin, e.line, "unknown [phantom] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "acquisition") {
      for (const auto& e : sec.entries) {
        if (e.key == "view") {
          const auto toks = split_ws(e.value);
          if (toks.size() != 2) fail(origin, e.line, "view needs 'axis k', e.g. 'z 4'");
          AcquisitionView v;
          try {
            v.axis = axis_from_name(toks[0]);
          } catch (const std::exception& ex) {
            fail(origin, e.line, ex.what());
          }
          v.k = std::stoi(toks[1]);
          if (v.k < 2) fail(origin, e.line, "view scale factor must be >= 2");
          rc.views.push_back(v);
        } else if (e.key == "sigma_base") {
          rc.sigma_base = parse_double(e, origin);
        } else {
          fail(origin, e.line, "unknown [acquisition] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "prior") {
      for (const auto& e : sec.entries) {
        if (e.key == "type") {
          if (e.value == "gaussian") rc.prior.type = PriorConfig::Type::Gaussian;
          else if (e.value == "mixture") rc.prior.type = PriorConfig::Type::Mixture;
          else fail(origin, e.line, "prior type must be 'gaussian' or 'mixture'");
        } else if (e.key == "components") {
          rc.prior.components = static_cast<int>(parse_int(e, origin));
        } else if (e.key == "tau") {
          rc.prior.tau = parse_double(e, origin);
        } else if (e.key == "exemplar_seed") {
          rc.prior.exemplar_seed = parse_u64(e, origin);
        } else if (e.key == "mean") {
          rc.prior.mean_files.push_back(e.value);
        } else if (e.key == "mean_from_exemplars") {
          rc.prior.mean_from_exemplars = parse_bool(e, origin);
        } else {
          fail(origin, e.line, "unknown [prior] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "solver") {
      SolverEntry entry;
      entry.name = sec.arg.empty() ? "dps" : sec.arg;
      try {
        entry.config.solver = solver_from_name(entry.name);
      } catch (const std::exception& ex) {
        fail(origin, sec.line, ex.what());
      }
      for (const auto& e : sec.entries) apply_solver_key(entry.config, e, origin);
      rc.solvers.push_back(std::move(entry));
    } else {
      fail(origin, sec.line, "unknown section [" + sec.name + "]");
    }
  }

  if (rc.out_dir.empty()) throw ConfigError(origin + ": [experiment] out is required");
  if (rc.subjects < 1) throw ConfigError(origin + ": subjects must be >= 1");
  if (rc.jobs < 1) throw ConfigError(origin + ": jobs must be >= 1");
  if (rc.views.empty()) throw ConfigError(origin + ": at least one [acquisition] view is required");
  if (rc.input_volumes.empty() && !phantom_dims_set) {
    throw ConfigError(origin + ": [phantom] dims is required unless input volumes are given");
  }
  if (!(rc.sigma_base >= 0.0)) throw ConfigError(origin + ": sigma_base must be >= 0");
  if (!(rc.prior.tau > 0.0)) throw ConfigError(origin + ": prior tau must be positive");
  if (rc.prior.components < 1) throw ConfigError(origin + ": prior components must be >= 1");
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(bytes.data(), bytes.size()));
  return buf;
}

std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace misr
