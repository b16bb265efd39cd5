#include "misr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "misr/log.hpp"
#include "misr/metrics.hpp"
#include "misr/mvol_io.hpp"
#include "misr/phantom.hpp"
#include "misr/samplers.hpp"
#include "misr/version.hpp"

namespace misr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char* kMetricsCsvHeader = "subject,solver,views,n_views,weighting,psnr,ssim,seed,status";

std::uint64_t subject_seed(std::uint64_t base_seed, int subject_index) {
  return SeededRng(base_seed).derive(static_cast<std::uint64_t>(subject_index) + 1).seed();
}

namespace {

// Fixed substreams hanging off a subject seed.
constexpr std::uint64_t kPhantomStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kSolverStream = 3;

std::string subject_dirname(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subject_%03d", index);
  return buf;
}

std::string views_label(const std::vector<AcquisitionView>& views, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += "+";
    out += axis_name(views[i].axis);
    out += std::to_string(views[i].k);
  }
  return out;
}

std::string read_file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed for '" + p.string() + "'");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

/// Runs `count` independent jobs on up to `jobs` threads; results land in
/// caller-owned slots so output order never depends on scheduling.
void run_cells(std::size_t count, int jobs, const std::function<void(std::size_t)>& work) {
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<Measurement> load_measurements(const fs::path& out_dir, const SubjectRecord& subject,
                                           const Volume& hr, std::size_t n_views) {
  std::vector<Measurement> ms;
  ms.reserve(n_views);
  for (std::size_t i = 0; i < n_views; ++i) {
    const auto& rec = subject.measurements.at(i);
    Volume y = read_mvol(out_dir / rec.file);
    SliceProfileOperator op(rec.axis, rec.k, hr.dims(), hr.spacing());
    ms.emplace_back(std::move(y), std::move(op), rec.sigma);
  }
  return ms;
}

struct CsvRow {
  int subject = 0;
  std::string solver;
  std::string views;
  int n_views = 0;
  std::string weighting = "weighted";
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;

  std::string to_line() const {
    std::ostringstream os;
    os << subject << ',' << solver << ',' << views << ',' << n_views << ',' << weighting << ',';
    if (failed) {
      os << "nan,nan";
    } else {
      os << format_g6(psnr_db) << ',' << format_g6(ssim);
    }
    os << ',' << seed << ',' << (failed ? "FAILED" : "ok");
    return os.str();
  }
};

void write_metrics_csv(const fs::path& path, const std::vector<CsvRow>& rows) {
  std::string body = std::string(kMetricsCsvHeader) + "\n";
  for (const auto& r : rows) body += r.to_line() + "\n";
  write_file_bytes(path, body + checksum_line(body));
}

ordered_json views_to_json(const std::vector<AcquisitionView>& views) {
  ordered_json arr = ordered_json::array();
  for (const auto& v : views) arr.push_back({{"axis", axis_name(v.axis)}, {"k", v.k}});
  return arr;
}

}  // namespace

std::string checksum_line(const std::string& body) {
  return "#checksum,fnv1a:" + fnv1a64_hex(body) + "\n";
}

bool verify_metrics_csv(const std::string& bytes, std::string* error) {
  const auto pos = bytes.rfind("#checksum,");
  if (pos == std::string::npos) {
    if (error) *error = "no trailing checksum line (interrupted run?)";
    return false;
  }
  const std::string body = bytes.substr(0, pos);
  const std::string expect = checksum_line(body);
  if (bytes.substr(pos) != expect) {
    if (error) *error = "checksum mismatch";
    return false;
  }
  return true;
}

std::unique_ptr<Prior> build_prior(const RunConfig& rc, Dims dims, Spacing spacing) {
  const double tau2 = rc.prior.tau * rc.prior.tau;
  const auto exemplar = [&](int i) {
    PhantomSpec spec = rc.phantom;
    spec.dims = dims;
    spec.spacing = spacing;
    spec.seed = SeededRng(rc.prior.exemplar_seed).derive(static_cast<std::uint64_t>(i) + 1).seed();
    return generate_phantom(spec);
  };

  if (rc.prior.type == PriorConfig::Type::Gaussian) {
    Volume mean(dims, spacing, 0.0);
    if (!rc.prior.mean_files.empty()) {
      mean = read_mvol(rc.prior.mean_files.front());
    } else if (rc.prior.mean_from_exemplars) {
      for (int i = 0; i < rc.prior.components; ++i) {
        mean.add_scaled(1.0 / rc.prior.components, exemplar(i));
      }
    }
    if (!(mean.dims() == dims)) {
      throw ConfigError("prior mean dims " + mean.dims().str() + " do not match volume dims " +
                        dims.str());
    }
    return std::make_unique<GaussianPrior>(std::move(mean), tau2);
  }

  std::vector<MixturePrior::Component> comps;
  if (!rc.prior.mean_files.empty()) {
    for (const auto& f : rc.prior.mean_files) {
      Volume mean = read_mvol(f);
      if (!(mean.dims() == dims)) {
        throw ConfigError("mixture mean '" + f + "' dims " + mean.dims().str() +
                          " do not match volume dims " + dims.str());
      }
      comps.push_back({1.0, std::move(mean), tau2});
    }
  } else {
    for (int i = 0; i < rc.prior.components; ++i) {
      comps.push_back({1.0, exemplar(i), tau2});
    }
  }
  return std::make_unique<MixturePrior>(std::move(comps));
}

void cmd_simulate(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(rc.out_dir);

  const int n_subjects =
      rc.input_volumes.empty() ? rc.subjects : static_cast<int>(rc.input_volumes.size());
  if (!rc.input_volumes.empty() && rc.subjects != n_subjects) {
    log_info("simulate: using one subject per input volume (" + std::to_string(n_subjects) + ")");
  }

  std::vector<Axis> axes;
  std::vector<int> ks;
  for (const auto& v : rc.views) {
    axes.push_back(v.axis);
    ks.push_back(v.k);
  }

  ordered_json manifest;
  manifest["format"] = "misr-manifest-v1";
  manifest["version"] = kVersion;
  manifest["experiment"] = rc.name;
  manifest["config_hash"] = "fnv1a:" + fnv1a64_hex(rc.source_text);
  manifest["base_seed"] = rc.base_seed;
  manifest["sigma_base"] = rc.sigma_base;
  manifest["views"] = views_to_json(rc.views);
  manifest["subjects"] = ordered_json::array();

  for (int s = 0; s < n_subjects; ++s) {
    const std::uint64_t sseed = subject_seed(rc.base_seed, s);
    const std::string sdir = subject_dirname(s);
    fs::create_directories(rc.out_dir / sdir);

    Volume hr;
    if (!rc.input_volumes.empty()) {
      hr = read_mvol(rc.input_volumes[static_cast<std::size_t>(s)]);
    } else {
      PhantomSpec spec = rc.phantom;
      spec.seed = SeededRng(sseed).derive(kPhantomStream).seed();
      hr = generate_phantom(spec);
    }
    const std::string hr_file = sdir + "/hr.mvol";
    write_mvol(rc.out_dir / hr_file, hr);

    for (std::size_t i = 0; i < ks.size(); ++i) {
      const int lr_n = hr.dims().along(axes[i]) / ks[i];
      if (lr_n * ks[i] != hr.dims().along(axes[i])) {
        log_info("simulate: k=" + std::to_string(ks[i]) + " does not divide " +
                 std::to_string(hr.dims().along(axes[i])) + " along " + axis_name(axes[i]) +
                 "; LR extent floors to " + std::to_string(lr_n));
      }
    }
    const SeededRng noise_base = SeededRng(sseed).derive(kNoiseStream);
    std::vector<Measurement> ms = degrade(hr, axes, ks, rc.sigma_base, noise_base);

    ordered_json sj;
    sj["index"] = s;
    sj["seed"] = sseed;
    sj["hr"] = hr_file;
    sj["measurements"] = ordered_json::array();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s/lr%zu_%s%d.mvol", sdir.c_str(), i,
                    axis_name(axes[i]), ks[i]);
      write_mvol(rc.out_dir / name, ms[i].y);
      sj["measurements"].push_back({{"file", name},
                                    {"axis", axis_name(axes[i])},
                                    {"k", ks[i]},
                                    {"sigma", ms[i].sigma}});
    }
    manifest["subjects"].push_back(std::move(sj));
  }

  manifest["timings_ms"] = {{"simulate", elapsed_ms(t0)}};
  write_file_bytes(rc.out_dir / "manifest.json", manifest.dump(2) + "\n");
  log_info("simulate: wrote " + std::to_string(n_subjects) + " subjects to " +
           rc.out_dir.string());
}

SimulateManifest read_manifest(const fs::path& out_dir) {
  const fs::path p = out_dir / "manifest.json";
  ordered_json j;
  try {
    j = ordered_json::parse(read_file_bytes(p));
  } catch (const std::exception& ex) {
    throw std::runtime_error("cannot read manifest '" + p.string() + "': " + ex.what());
  }
  if (j.value("format", "") != "misr-manifest-v1") {
    throw std::runtime_error("'" + p.string() + "' is not a misr-manifest-v1 file");
  }
  SimulateManifest m;
  m.config_hash = j.value("config_hash", "");
  m.version = j.value("version", "");
  m.experiment = j.value("experiment", "");
  m.sigma_base = j.value("sigma_base", 0.0);
  for (const auto& v : j.at("views")) {
    m.views.push_back({axis_from_name(v.at("axis").get<std::string>()), v.at("k").get<int>()});
  }
  for (const auto& sj : j.at("subjects")) {
    SubjectRecord rec;
    rec.index = sj.at("index").get<int>();
    rec.seed = sj.at("seed").get<std::uint64_t>();
    rec.hr_file = sj.at("hr").get<std::string>();
    for (const auto& mj : sj.at("measurements")) {
      MeasurementRecord mr;
      mr.file = mj.at("file").get<std::string>();
      mr.axis = axis_from_name(mj.at("axis").get<std::string>());
      mr.k = mj.at("k").get<int>();
      mr.sigma = mj.at("sigma").get<double>();
      rec.measurements.push_back(std::move(mr));
    }
    m.subjects.push_back(std::move(rec));
  }
  return m;
}

namespace {

std::vector<SolverEntry> filter_solvers(const RunConfig& rc,
                                        const std::vector<std::string>& filter) {
  if (rc.solvers.empty()) throw ConfigError("config declares no [solver] sections");
  if (filter.empty()) return rc.solvers;
  std::vector<SolverEntry> out;
  for (const auto& name : filter) {
    bool found = false;
    for (const auto& s : rc.solvers) {
      if (s.name == name) {
        out.push_back(s);
        found = true;
      }
    }
    if (!found) throw ConfigError("solver '" + name + "' is not declared in the config");
  }
  return out;
}

struct SolveJob {
  int subject = 0;
  int solver = 0;
  int n_views = 0;    // measurement-subset size
  bool uniform = false;
};

}  // namespace

void cmd_solve(const RunConfig& rc, const std::vector<std::string>& solver_filter) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimulateManifest manifest = read_manifest(rc.out_dir);
  const std::vector<SolverEntry> solvers = filter_solvers(rc, solver_filter);
  if (manifest.views.empty()) throw ConfigError("manifest lists no acquisition views");
  if (manifest.subjects.empty()) throw ConfigError("manifest lists no subjects");

  const Volume first_hr = read_mvol(rc.out_dir / manifest.subjects.front().hr_file);
  const std::unique_ptr<Prior> prior = build_prior(rc, first_hr.dims(), first_hr.spacing());

  std::vector<SolveJob> jobs;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    for (std::size_t v = 1; v <= manifest.views.size(); ++v) {
      for (std::size_t k = 0; k < solvers.size(); ++k) {
        jobs.push_back({static_cast<int>(s), static_cast<int>(k), static_cast<int>(v), false});
      }
    }
  }

  std::vector<CsvRow> rows(jobs.size());
  std::vector<double> cell_ms(jobs.size(), 0.0);

  run_cells(jobs.size(), rc.jobs, [&](std::size_t i) {
    const SolveJob& job = jobs[i];
    const SubjectRecord& subject = manifest.subjects[static_cast<std::size_t>(job.subject)];
    const auto cell_start = std::chrono::steady_clock::now();

    const Volume hr = read_mvol(rc.out_dir / subject.hr_file);
    const std::vector<Measurement> ms =
        load_measurements(rc.out_dir, subject, hr, static_cast<std::size_t>(job.n_views));

    SolverConfig cfg = solvers[static_cast<std::size_t>(job.solver)].config;
    cfg.seed = SeededRng(subject.seed).derive(kSolverStream).seed();

    CsvRow& row = rows[i];
    row.subject = subject.index;
    row.solver = solvers[static_cast<std::size_t>(job.solver)].name;
    row.views = views_label(manifest.views, static_cast<std::size_t>(job.n_views));
    row.n_views = job.n_views;
    row.seed = cfg.seed;

    try {
      const Volume sr = solve(*prior, ms, cfg);
      char name[96];
      std::snprintf(name, sizeof(name), "%s/sr_%s_v%d.mvol", subject_dirname(subject.index).c_str(),
                    row.solver.c_str(), job.n_views);
      write_mvol(rc.out_dir / name, sr);
      row.psnr_db = psnr(sr, hr);
      row.ssim = ssim3d(sr, hr);
    } catch (const SolverDivergence& ex) {
      row.failed = true;
      log_warn("solve: " + row.solver + " subject " + std::to_string(subject.index) + ": " +
               ex.what());
    }
    cell_ms[i] = elapsed_ms(cell_start);
  });

  write_metrics_csv(rc.out_dir / "metrics.csv", rows);

  ordered_json sm;
  sm["format"] = "misr-solve-manifest-v1";
  sm["version"] = kVersion;
  sm["config_hash"] = "fnv1a:" + fnv1a64_hex(rc.source_text);
  sm["cells"] = ordered_json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    sm["cells"].push_back({{"subject", rows[i].subject},
                           {"solver", rows[i].solver},
                           {"views", rows[i].views},
                           {"weighting", rows[i].weighting},
                           {"seed", rows[i].seed},
                           {"wall_ms", cell_ms[i]}});
  }
  sm["timings_ms"] = {{"solve", elapsed_ms(t0)}};
  write_file_bytes(rc.out_dir / "solve_manifest.json", sm.dump(2) + "\n");
  log_info("solve: wrote " + std::to_string(rows.size()) + " rows to metrics.csv");
}

void cmd_ablate_weights(const RunConfig& rc, const std::vector<std::string>& solver_filter) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimulateManifest manifest = read_manifest(rc.out_dir);
  const std::vector<SolverEntry> solvers = filter_solvers(rc, solver_filter);
  if (manifest.views.size() != 2 || manifest.views[0].k == manifest.views[1].k) {
    throw ConfigError("ablate-weights needs exactly two acquisitions with distinct scale factors");
  }

  const Volume first_hr = read_mvol(rc.out_dir / manifest.subjects.front().hr_file);
  const std::unique_ptr<Prior> prior = build_prior(rc, first_hr.dims(), first_hr.spacing());

  std::vector<SolveJob> jobs;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    for (std::size_t k = 0; k < solvers.size(); ++k) {
      for (int uniform = 0; uniform < 2; ++uniform) {
        jobs.push_back({static_cast<int>(s), static_cast<int>(k), 2, uniform == 1});
      }
    }
  }

  std::vector<CsvRow> rows(jobs.size());
  std::vector<double> cell_ms(jobs.size(), 0.0);

  run_cells(jobs.size(), rc.jobs, [&](std::size_t i) {
    const SolveJob& job = jobs[i];
    const SubjectRecord& subject = manifest.subjects[static_cast<std::size_t>(job.subject)];
    const auto cell_start = std::chrono::steady_clock::now();

    const Volume hr = read_mvol(rc.out_dir / subject.hr_file);
    const std::vector<Measurement> ms = load_measurements(rc.out_dir, subject, hr, 2);

    SolverConfig cfg = solvers[static_cast<std::size_t>(job.solver)].config;
    cfg.seed = SeededRng(subject.seed).derive(kSolverStream).seed();  // identical across the pair
    cfg.uniform_weights = job.uniform;

    CsvRow& row = rows[i];
    row.subject = subject.index;
    row.solver = solvers[static_cast<std::size_t>(job.solver)].name;
    row.views = views_label(manifest.views, 2);
    row.n_views = 2;
    row.weighting = job.uniform ? "uniform" : "weighted";
    row.seed = cfg.seed;

    try {
      const Volume sr = solve(*prior, ms, cfg);
      row.psnr_db = psnr(sr, hr);
      row.ssim = ssim3d(sr, hr);
    } catch (const SolverDivergence& ex) {
      row.failed = true;
      log_warn("ablate-weights: " + row.solver + " subject " + std::to_string(subject.index) +
               ": " + ex.what());
    }
    cell_ms[i] = elapsed_ms(cell_start);
  });

  write_metrics_csv(rc.out_dir / "metrics_ablation.csv", rows);

  ordered_json sm;
  sm["format"] = "misr-solve-manifest-v1";
  sm["version"] = kVersion;
  sm["config_hash"] = "fnv1a:" + fnv1a64_hex(rc.source_text);
  sm["cells"] = ordered_json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    sm["cells"].push_back({{"subject", rows[i].subject},
                           {"solver", rows[i].solver},
                           {"weighting", rows[i].weighting},
                           {"seed", rows[i].seed},
                           {"wall_ms", cell_ms[i]}});
  }
  sm["timings_ms"] = {{"ablate-weights", elapsed_ms(t0)}};
  write_file_bytes(rc.out_dir / "ablation_manifest.json", sm.dump(2) + "\n");
  log_info("ablate-weights: wrote " + std::to_string(rows.size()) + " rows");
}

Axis plane_axis_from_name(const std::string& plane) {
  if (plane == "axial") return Axis::Z;
  if (plane == "coronal") return Axis::Y;
  if (plane == "sagittal") return Axis::X;
  if (plane == "x" || plane == "y" || plane == "z") return axis_from_name(plane);
  throw std::invalid_argument("unknown plane '" + plane +
                              "' (expected axial, coronal, sagittal, or x/y/z)");
}

std::string render_pgm_slice(const Volume& v, Axis plane_axis, int position) {
  const int n_axis = v.dims().along(plane_axis);
  if (position < 0 || position >= n_axis) {
    throw std::invalid_argument("slice position " + std::to_string(position) +
                                " out of range [0, " + std::to_string(n_axis) + ") along " +
                                axis_name(plane_axis));
  }
  double lo = v[0], hi = v[0];
  for (std::size_t i = 0; i < v.size(); ++i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  const bool degenerate = !(hi > lo);

  // axial: cols=x rows=y; coronal: cols=x rows=z; sagittal: cols=y rows=z.
  int w = 0, h = 0;
  switch (plane_axis) {
    case Axis::Z: w = v.dims().nx; h = v.dims().ny; break;
    case Axis::Y: w = v.dims().nx; h = v.dims().nz; break;
    case Axis::X: w = v.dims().ny; h = v.dims().nz; break;
  }
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double val = 0.0;
      switch (plane_axis) {
        case Axis::Z: val = v.at(c, r, position); break;
        case Axis::Y: val = v.at(c, position, r); break;
        case Axis::X: val = v.at(position, c, r); break;
      }
      unsigned char g = 127;
      if (!degenerate) {
        const double u = 255.0 * (val - lo) / (hi - lo);
        g = static_cast<unsigned char>(std::clamp(std::lround(u), 0L, 255L));
      }
      out.push_back(static_cast<char>(g));
    }
  }
  return out;
}

void cmd_export_slices(const fs::path& volume_path, const std::string& plane,
                       const std::vector<int>& positions, const fs::path& out_dir) {
  const Volume v = read_mvol(volume_path);
  const Axis axis = plane_axis_from_name(plane);
  fs::create_directories(out_dir);
  const std::string stem = volume_path.stem().string();
  for (int pos : positions) {
    const std::string img = render_pgm_slice(v, axis, pos);
    char name[160];
    std::snprintf(name, sizeof(name), "%s_%s_%03d.pgm", stem.c_str(), plane.c_str(), pos);
    write_file_bytes(out_dir / name, img);
  }
  log_info("export-slices: wrote " + std::to_string(positions.size()) + " images to " +
           out_dir.string());
}

namespace {

struct ParsedRow {
  int subject;
  std::string solver;
  std::string views;
  int n_views;
  std::string weighting;
  double psnr_db;
  double ssim;
  bool ok;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string make_report_markdown(const fs::path& csv_path) {
  const std::string bytes = read_file_bytes(csv_path);
  std::string err;
  if (!verify_metrics_csv(bytes, &err)) {
    log_warn("report: " + csv_path.string() + ": " + err);
  }

  std::vector<ParsedRow> rows;
  std::istringstream is(bytes);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first) {
      first = false;
      if (line != kMetricsCsvHeader) {
        throw std::runtime_error("report: unexpected CSV header in " + csv_path.string());
      }
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::runtime_error("report: malformed CSV row: '" + line + "'");
    ParsedRow r;
    r.subject = std::stoi(f[0]);
    r.solver = f[1];
    r.views = f[2];
    r.n_views = std::stoi(f[3]);
    r.weighting = f[4];
    r.ok = f[8] == "ok";
    r.psnr_db = r.ok ? std::stod(f[5]) : 0.0;
    r.ssim = r.ok ? std::stod(f[6]) : 0.0;
    rows.push_back(std::move(r));
  }

  // group: weighting -> column key (n_views, views) -> solver -> values
  std::set<std::string> weightings;
  for (const auto& r : rows) weightings.insert(r.weighting);

  std::ostringstream md;
  md << "# Metrics report\n\nSource: `" << csv_path.filename().string() << "`\n";
  for (const auto& weighting : weightings) {
    std::set<std::pair<int, std::string>> col_keys;
    std::set<std::string> solvers;
    for (const auto& r : rows) {
      if (r.weighting != weighting) continue;
      col_keys.insert({r.n_views, r.views});
      solvers.insert(r.solver);
    }
    if (weightings.size() > 1) {
      md << "\n## Weighting: " << weighting << "\n";
    }
    md << "\n| Method |";
    for (const auto& ck : col_keys) md << " " << ck.second << " PSNR | " << ck.second << " SSIM |";
    md << "\n|---|";
    for (std::size_t i = 0; i < col_keys.size(); ++i) md << "---|---|";
    md << "\n";
    for (const auto& solver : solvers) {
      md << "| " << solver << " |";
      for (const auto& ck : col_keys) {
        std::vector<double> ps, ss;
        int failed = 0;
        for (const auto& r : rows) {
          if (r.weighting != weighting || r.solver != solver || r.n_views != ck.first ||
              r.views != ck.second) {
            continue;
          }
          if (!r.ok) {
            ++failed;
            continue;
          }
          ps.push_back(r.psnr_db);
          ss.push_back(r.ssim);
        }
        if (ps.empty()) {
          md << " - | - |";
          continue;
        }
        const MetricStats p = aggregate(ps);
        const MetricStats s = aggregate(ss);
        md << " " << format_g6(p.mean) << " ± " << format_g6(p.stddev) << " | "
           << format_g6(s.mean) << " ± " << format_g6(s.stddev) << " |";
        if (failed > 0) md << " (" << failed << " failed)";
      }
      md << "\n";
    }
  }
  return md.str();
}

}  // namespace misr
