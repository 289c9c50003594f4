// modal: compute ideal modal clusterings of Gaussian mixture densities and
// distances between whole-space clusterings.
//
// Subcommands:
//   critical-points  locate and classify all critical points of a model
//   partition        modal partition (1D breakpoints or labeled grid) and,
//                    for d = 2, traced cluster boundaries
//   distance         distances between two clustering files (dP, dH, dp:p, dinf)
//   consistency      Monte Carlo consistency experiment for KDE clusterings
//   sample           draw a reproducible sample from a model
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 partial success.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "modal/consistency.hpp"
#include "modal/distances.hpp"
#include "modal/flow.hpp"
#include "modal/io.hpp"
#include "modal/kde.hpp"
#include "modal/mixture.hpp"
#include "modal/morse.hpp"
#include "modal/parallel.hpp"
#include "modal/partition.hpp"
#include "modal/version.hpp"

namespace fs = std::filesystem;
using namespace modal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartial = 4;

struct CommonOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = hardware_threads();
};

void write_manifest(const CommonOpts& opts, const std::string& command,
                    const std::vector<std::string>& input_files,
                    const std::vector<std::string>& flags) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config_digest = config_digest(input_files, flags);
  manifest.seed = opts.seed;
  manifest.timestamp = RunManifest::utc_now();
  write_text_file(fs::path(opts.out_dir) / (command + "_manifest.json"),
                  manifest.to_json().dump(2) + "\n");
}

void ensure_out_dir(const CommonOpts& opts) {
  fs::create_directories(opts.out_dir);
}

bool parse_grid_spec(const std::string& spec, int& w, int& h) {
  auto x = spec.find('x');
  if (x == std::string::npos) return false;
  try {
    w = std::stoi(spec.substr(0, x));
    h = std::stoi(spec.substr(x + 1));
  } catch (...) {
    return false;
  }
  return w > 0 && h > 0;
}

bool parse_bbox_spec(const std::string& spec, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      vals.push_back(std::stod(field));
    } catch (...) {
      return false;
    }
  }
  if (vals.size() % 2 != 0 || vals.empty()) return false;
  const int d = static_cast<int>(vals.size() / 2);
  lo.resize(d);
  hi.resize(d);
  for (int i = 0; i < d; ++i) {
    lo(i) = vals[i];
    hi(i) = vals[d + i];
  }
  return (lo.array() < hi.array()).all();
}

int cmd_critical_points(const std::string& model_file, const CommonOpts& opts,
                        double tol, int grid_seeds) {
  MixtureModel model = load_model(model_file);
  SearchConfig config;
  config.tol = tol;
  config.grid_seeds_per_axis = grid_seeds;
  config.threads = opts.threads;
  CriticalSet set = find_critical_points(model, config);

  ensure_out_dir(opts);
  std::ostringstream csv;
  save_critical_set_csv(set, model.dimension(), csv);
  write_text_file(fs::path(opts.out_dir) / "critical_points.csv", csv.str());
  write_manifest(opts, "critical-points", {model_file},
                 {"tol=" + format_double(tol), "grid=" + std::to_string(grid_seeds)});
  std::cout << set.n_max() << " maxima, " << set.n_saddle() << " saddles, "
            << set.n_min() << " minima -> "
            << (fs::path(opts.out_dir) / "critical_points.csv").string() << "\n";
  return kExitOk;
}

int cmd_partition(const std::string& model_file, const CommonOpts& opts,
                  const std::string& grid_spec, bool oned, const std::string& bbox_spec,
                  bool no_boundaries) {
  MixtureModel model = load_model(model_file);
  ensure_out_dir(opts);
  std::vector<std::string> flags = {"grid=" + grid_spec, oned ? "oned" : "",
                                    "bbox=" + bbox_spec};

  if (oned || model.dimension() == 1) {
    if (model.dimension() != 1)
      throw std::invalid_argument("--oned requires a 1-dimensional model");
    Clustering1D c = bbox_spec.empty()
                         ? modal_partition_1d(model)
                         : [&] {
                             Eigen::VectorXd lo, hi;
                             if (!parse_bbox_spec(bbox_spec, lo, hi))
                               throw std::invalid_argument("bad --bbox");
                             return modal_partition_1d(model, lo(0), hi(0));
                           }();
    write_text_file(fs::path(opts.out_dir) / "clustering1d.json",
                    clustering1d_to_json(c).dump(2) + "\n");
    write_manifest(opts, "partition", {model_file}, flags);
    std::cout << c.cluster_count() << " clusters -> "
              << (fs::path(opts.out_dir) / "clustering1d.json").string() << "\n";
    return kExitOk;
  }

  int w = 128, h = 128;
  if (!grid_spec.empty() && !parse_grid_spec(grid_spec, w, h))
    throw std::invalid_argument("bad --grid, expected WxH");
  std::pair<Eigen::VectorXd, Eigen::VectorXd> box = bounding_box(model);
  if (!bbox_spec.empty() && !parse_bbox_spec(bbox_spec, box.first, box.second))
    throw std::invalid_argument("bad --bbox, expected x0,y0,...,x1,y1,...");

  SearchConfig search;
  search.threads = opts.threads;
  CriticalSet set = find_critical_points(model, search);
  FlowConfig flow;
  std::vector<int> resolution = {w, h};
  if (model.dimension() > 2) {
    resolution.assign(model.dimension(), w);
  }
  GridClustering grid =
      modal_partition_grid(model, set, box, resolution, flow, opts.threads);
  std::ostringstream grid_text;
  save_grid_clustering(grid, grid_text);
  write_text_file(fs::path(opts.out_dir) / "partition.grid", grid_text.str());

  int exit_code = kExitOk;
  if (!no_boundaries) {
    if (model.dimension() == 2) {
      std::vector<Trajectory> branches;
      for (const auto& p : set.points) {
        if (p.kind != CriticalKind::Saddle) continue;
        auto [a, b] = trace_boundary(model, p, box, flow);
        branches.push_back(std::move(a));
        branches.push_back(std::move(b));
      }
      std::ostringstream sep;
      save_polylines_csv(branches, sep);
      write_text_file(fs::path(opts.out_dir) / "separatrix.csv", sep.str());
    } else {
      std::cerr << "boundary tracing is only available for d = 2; partition written\n";
      exit_code = kExitPartial;
    }
  }
  write_manifest(opts, "partition", {model_file}, flags);
  std::cout << grid.cluster_count() << " clusters on " << w << "x" << h << " grid -> "
            << (fs::path(opts.out_dir) / "partition.grid").string() << "\n";
  return exit_code;
}

// A clustering file is one of: {"breakpoints": ...}, {"atom_masses": ...},
// or a grid file (JSON header line + label matrix).
struct LoadedClustering {
  std::optional<Clustering1D> oned;
  std::optional<AtomicClustering> atomic;
  std::optional<GridClustering> grid;

  int cluster_count() const {
    if (oned) return oned->cluster_count();
    if (atomic) return atomic->cluster_count();
    return grid->cluster_count();
  }
};

LoadedClustering load_clustering(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  LoadedClustering out;

  // Grid files carry a single-line JSON header followed by a CSV matrix;
  // plain clustering files are ordinary (possibly multi-line) JSON.
  std::string first_line;
  std::getline(in, first_line);
  json j;
  bool single_line = false;
  try {
    j = json::parse(first_line);
    single_line = true;
  } catch (const json::parse_error&) {
    try {
      j = load_json_file(path);
    } catch (const std::exception& e) {
      throw std::invalid_argument("unrecognized clustering file " + path + ": " +
                                  e.what());
    }
  }
  if (single_line && j.contains("resolution")) {
    std::ifstream again(path);
    out.grid = load_grid_clustering(again);
  } else if (j.contains("breakpoints")) {
    out.oned = clustering1d_from_json(j);
  } else if (j.contains("atom_masses")) {
    out.atomic = atomic_from_json(j);
  } else {
    throw std::invalid_argument("unrecognized clustering file: " + path);
  }
  return out;
}

int cmd_distance(const std::string& file_a, const std::string& file_b,
                 const std::string& model_file, const CommonOpts& opts,
                 const std::string& metric, double lambda, long empirical_n,
                 long mc_n) {
  LoadedClustering a = load_clustering(file_a);
  LoadedClustering b = load_clustering(file_b);
  std::optional<MixtureModel> model;
  if (!model_file.empty()) model = load_model(model_file);

  MassMatrix m;
  if (a.atomic && b.atomic) {
    m = mass_matrix(*a.atomic, *b.atomic);
  } else if (a.atomic || b.atomic) {
    throw std::invalid_argument(
        "atomic clusterings can only be compared with each other");
  } else {
    if (!model)
      throw std::invalid_argument("--model is required for non-atomic clusterings");
    auto label_of = [](const LoadedClustering& c) {
      return c.oned ? labeler(*c.oned) : labeler(*c.grid);
    };
    if (a.oned && b.oned && empirical_n == 0) {
      m = mass_matrix(*a.oned, *b.oned, *model);
    } else {
      long n = empirical_n > 0 ? empirical_n : mc_n;
      m = mass_matrix_mc(label_of(a), a.cluster_count(), label_of(b), b.cluster_count(),
                         *model, n, opts.seed);
    }
  }

  DistanceReport report;
  std::string metric_name = metric;
  if (metric == "dP") {
    report = distance_dP(m, lambda);
  } else if (metric == "dH") {
    report = distance_dH(m);
  } else if (metric == "dinf") {
    report = distance_dp(m, std::numeric_limits<double>::infinity());
  } else if (metric.rfind("dp", 0) == 0) {
    double p = 1.0;
    if (metric.size() > 2) {
      if (metric[2] != ':') throw std::invalid_argument("bad --metric, use dp:<p>");
      p = std::stod(metric.substr(3));
    }
    report = distance_dp(m, p);
  } else {
    throw std::invalid_argument("unknown metric '" + metric + "'");
  }

  json out = distance_report_to_json(report, metric_name);
  std::cout << out.dump(2) << "\n";
  if (opts.out_dir != ".") {
    ensure_out_dir(opts);
    write_text_file(fs::path(opts.out_dir) / "distance.json", out.dump(2) + "\n");
    std::vector<std::string> inputs = {file_a, file_b};
    if (!model_file.empty()) inputs.push_back(model_file);
    write_manifest(opts, "distance", inputs,
                   {metric, "lambda=" + format_double(lambda),
                    "empirical=" + std::to_string(empirical_n)});
  }
  return kExitOk;
}

int cmd_consistency(const std::string& config_file, const CommonOpts& opts,
                    std::optional<std::uint64_t> seed_override) {
  ExperimentFile exp = load_experiment(config_file);
  if (seed_override) exp.config.base_seed = *seed_override;
  ExperimentResult result = run_consistency(exp.model, exp.config, opts.threads);

  ensure_out_dir(opts);
  std::ostringstream records, summary;
  save_records_csv(result, records);
  save_summary_csv(result, summary);
  write_text_file(fs::path(opts.out_dir) / "records.csv", records.str());
  write_text_file(fs::path(opts.out_dir) / "summary.csv", summary.str());
  CommonOpts manifest_opts = opts;
  manifest_opts.seed = exp.config.base_seed;
  write_manifest(manifest_opts, "consistency", {config_file}, {});
  std::cout << result.records.size() << " records -> "
            << (fs::path(opts.out_dir) / "records.csv").string() << "\n";
  for (const auto& row : result.summary)
    std::cout << "  n=" << row.n << " frac_correct=" << row.frac_correct_count
              << " mean_dP=" << row.mean_dP << " mean_dH=" << row.mean_dH << "\n";
  return kExitOk;
}

int cmd_sample(const std::string& model_file, const CommonOpts& opts, long n) {
  MixtureModel model = load_model(model_file);
  SampleSet s = model.sample(n, opts.seed);
  ensure_out_dir(opts);
  std::ostringstream csv;
  save_samples_csv(s, csv);
  write_text_file(fs::path(opts.out_dir) / "samples.csv", csv.str());
  write_manifest(opts, "sample", {model_file}, {"n=" + std::to_string(n)});
  std::cout << n << " points -> " << (fs::path(opts.out_dir) / "samples.csv").string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modal clustering of Gaussian mixtures and clustering distances"};
  app.set_version_flag("--version", MODAL_VERSION_STRING);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonOpts opts;
  app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", opts.seed, "seed for all randomness")->capture_default_str();
  app.add_option("--threads", opts.threads, "worker threads")->capture_default_str();

  auto* cp = app.add_subcommand("critical-points", "locate and classify critical points");
  std::string cp_model;
  double cp_tol = 1e-10;
  int cp_grid = 8;
  cp->add_option("model", cp_model, "mixture model JSON")->required();
  cp->add_option("--tol", cp_tol, "gradient-norm tolerance")->capture_default_str();
  cp->add_option("--grid-seeds", cp_grid, "fallback grid seeds per axis")
      ->capture_default_str();

  auto* pt = app.add_subcommand("partition", "ideal modal partition");
  std::string pt_model, pt_grid, pt_bbox;
  bool pt_oned = false, pt_nob = false;
  pt->add_option("model", pt_model, "mixture model JSON")->required();
  pt->add_option("--grid", pt_grid, "grid resolution WxH (d >= 2)");
  pt->add_flag("--oned", pt_oned, "1D breakpoint partition");
  pt->add_option("--bbox", pt_bbox, "box as x0,y0,...,x1,y1,...");
  pt->add_flag("--no-boundaries", pt_nob, "skip separatrix tracing");

  auto* di = app.add_subcommand("distance", "distance between two clusterings");
  std::string di_a, di_b, di_model, di_metric = "dP";
  double di_lambda = 1.0;
  long di_empirical = 0, di_mc = 100000;
  di->add_option("clustering_a", di_a, "first clustering file")->required();
  di->add_option("clustering_b", di_b, "second clustering file")->required();
  di->add_option("--model", di_model, "mixture model JSON");
  di->add_option("--metric", di_metric, "dP | dH | dp:<p> | dinf")
      ->capture_default_str();
  di->add_option("--lambda", di_lambda, "unmatched-mass penalty weight (dP)")
      ->capture_default_str();
  di->add_option("--empirical", di_empirical,
                 "use an empirical estimate on n model samples");
  di->add_option("--mc-n", di_mc, "Monte Carlo sample size for grid clusterings")
      ->capture_default_str();

  auto* co = app.add_subcommand("consistency", "KDE clustering consistency experiment");
  std::string co_config;
  std::optional<std::uint64_t> co_seed;
  co->add_option("config", co_config, "experiment config JSON")->required();
  co->add_option("--base-seed", co_seed, "override the config base seed");

  auto* sa = app.add_subcommand("sample", "draw a reproducible sample");
  std::string sa_model;
  long sa_n = 1000;
  sa->add_option("model", sa_model, "mixture model JSON")->required();
  sa->add_option("-n,--n", sa_n, "number of points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (cp->parsed()) return cmd_critical_points(cp_model, opts, cp_tol, cp_grid);
    if (pt->parsed())
      return cmd_partition(pt_model, opts, pt_grid, pt_oned, pt_bbox, pt_nob);
    if (di->parsed())
      return cmd_distance(di_a, di_b, di_model, opts, di_metric, di_lambda,
                          di_empirical, di_mc);
    if (co->parsed()) return cmd_consistency(co_config, opts, co_seed);
    if (sa->parsed()) return cmd_sample(sa_model, opts, sa_n);
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
