#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modal/consistency.hpp"
#include "modal/distances.hpp"
#include "modal/mixture.hpp"
#include "modal/morse.hpp"
#include "modal/partition.hpp"
#include "modal/version.hpp"

namespace modal {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// number formatting: shortest round-trip representation, locale-free
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// mixture model JSON
// ---------------------------------------------------------------------------

//! Parse {"dimension": d, "components": [{"weight", "mean", "covariance"}]}.
//! Weights must sum to 1 within 1e-9 and are renormalized exactly on load.
inline MixtureModel model_from_json(const json& j) {
  if (!j.contains("dimension") || !j.contains("components"))
    throw std::invalid_argument("model: missing 'dimension' or 'components'");
  const int d = j.at("dimension").get<int>();
  std::vector<GaussianComponent> comps;
  double wsum = 0.0;
  for (const auto& cj : j.at("components")) {
    GaussianComponent c;
    c.weight = cj.at("weight").get<double>();
    auto mean = cj.at("mean").get<std::vector<double>>();
    if (static_cast<int>(mean.size()) != d)
      throw std::invalid_argument("model: mean length differs from dimension");
    c.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), d);
    auto cov = cj.at("covariance").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(cov.size()) != d)
      throw std::invalid_argument("model: covariance shape mismatch");
    c.covariance.resize(d, d);
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(cov[r].size()) != d)
        throw std::invalid_argument("model: covariance shape mismatch");
      for (int col = 0; col < d; ++col) c.covariance(r, col) = cov[r][col];
    }
    wsum += c.weight;
    comps.push_back(std::move(c));
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("model: weights sum to " + format_double(wsum) +
                                ", expected 1 within 1e-9");
  return MixtureModel(std::move(comps), /*normalize_weights=*/true);
}

inline json model_to_json(const MixtureModel& model) {
  json j;
  j["dimension"] = model.dimension();
  j["components"] = json::array();
  for (int k = 0; k < model.component_count(); ++k) {
    const auto& c = model.component(k);
    json cj;
    cj["weight"] = c.weight;
    cj["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    std::vector<std::vector<double>> cov(model.dimension(),
                                         std::vector<double>(model.dimension()));
    for (int r = 0; r < model.dimension(); ++r)
      for (int col = 0; col < model.dimension(); ++col) cov[r][col] = c.covariance(r, col);
    cj["covariance"] = cov;
    j["components"].push_back(cj);
  }
  return j;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline MixtureModel load_model(const std::string& path) {
  return model_from_json(load_json_file(path));
}

// ---------------------------------------------------------------------------
// sample sets: headerless CSV, one point per row
// ---------------------------------------------------------------------------

inline void save_samples_csv(const SampleSet& s, std::ostream& out) {
  for (long i = 0; i < s.points.rows(); ++i) {
    for (int j = 0; j < s.points.cols(); ++j) {
      if (j) out << ',';
      out << format_double(s.points(i, j));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("ragged CSV in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty CSV: " + path);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
  return m;
}

// ---------------------------------------------------------------------------
// critical sets: CSV with x1..xd, value, morse_index, kind, gradient_norm,
// min_abs_eigenvalue
// ---------------------------------------------------------------------------

inline void save_critical_set_csv(const CriticalSet& set, int dimension,
                                  std::ostream& out) {
  for (int i = 0; i < dimension; ++i) out << 'x' << (i + 1) << ',';
  out << "value,morse_index,kind,gradient_norm,min_abs_eigenvalue\n";
  for (const auto& p : set.points) {
    for (int i = 0; i < dimension; ++i) out << format_double(p.location(i)) << ',';
    out << format_double(p.value) << ',' << p.morse_index << ',' << to_string(p.kind)
        << ',' << format_double(p.gradient_norm) << ','
        << format_double(p.min_abs_eigenvalue()) << '\n';
  }
}

// ---------------------------------------------------------------------------
// trajectories: CSV polylines, blank line between branches
// ---------------------------------------------------------------------------

inline void save_polylines_csv(const std::vector<Trajectory>& branches,
                               std::ostream& out) {
  bool first = true;
  for (const auto& t : branches) {
    if (!first) out << '\n';
    first = false;
    for (const auto& p : t.points) {
      for (int i = 0; i < p.size(); ++i) {
        if (i) out << ',';
        out << format_double(p(i));
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// clusterings
// ---------------------------------------------------------------------------

inline json clustering1d_to_json(const Clustering1D& c) {
  return json{{"breakpoints", c.breakpoints}};
}

inline Clustering1D clustering1d_from_json(const json& j) {
  Clustering1D c;
  c.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  for (std::size_t i = 1; i < c.breakpoints.size(); ++i)
    if (c.breakpoints[i] <= c.breakpoints[i - 1])
      throw std::invalid_argument("clustering: breakpoints must be strictly increasing");
  return c;
}

inline AtomicClustering atomic_from_json(const json& j) {
  AtomicClustering a;
  a.atom_masses = j.at("atom_masses").get<std::vector<double>>();
  a.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
  std::vector<char> seen(a.atom_masses.size(), 0);
  for (const auto& cl : a.clusters)
    for (int atom : cl) {
      if (atom < 0 || atom >= static_cast<int>(a.atom_masses.size()) || seen[atom])
        throw std::invalid_argument("clustering: atoms must partition the atom list");
      seen[atom] = 1;
    }
  for (char s : seen)
    if (!s) throw std::invalid_argument("clustering: atoms must partition the atom list");
  return a;
}

//! Grid clustering file: one JSON header line (box, resolution, mode
//! locations), then the label matrix as CSV, axis-0 fastest, one line per
//! axis-1 index block. Labels are written 1-based with 0 for Boundary.
inline void save_grid_clustering(const GridClustering& g, std::ostream& out) {
  json header;
  header["lo"] = std::vector<double>(g.lo.data(), g.lo.data() + g.lo.size());
  header["hi"] = std::vector<double>(g.hi.data(), g.hi.data() + g.hi.size());
  header["resolution"] = g.resolution;
  header["mode_locations"] = json::array();
  for (const auto& m : g.mode_locations)
    header["mode_locations"].push_back(
        std::vector<double>(m.data(), m.data() + m.size()));
  out << header.dump() << '\n';
  const long row_len = g.resolution[0];
  for (long start = 0; start < g.cell_count(); start += row_len) {
    for (long i = 0; i < row_len; ++i) {
      if (i) out << ',';
      int label = g.labels[start + i];
      out << (label == kBoundaryLabel ? 0 : label + 1);
    }
    out << '\n';
  }
}

inline GridClustering load_grid_clustering(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::invalid_argument("grid clustering: missing header line");
  json header = json::parse(header_line);
  GridClustering g;
  auto lo = header.at("lo").get<std::vector<double>>();
  auto hi = header.at("hi").get<std::vector<double>>();
  g.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), lo.size());
  g.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), hi.size());
  g.resolution = header.at("resolution").get<std::vector<int>>();
  for (const auto& mj : header.at("mode_locations")) {
    auto m = mj.get<std::vector<double>>();
    g.mode_locations.push_back(Eigen::Map<Eigen::VectorXd>(m.data(), m.size()));
  }
  g.labels.reserve(g.cell_count());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      int stored = std::stoi(field);
      g.labels.push_back(stored == 0 ? kBoundaryLabel : stored - 1);
    }
  }
  if (static_cast<long>(g.labels.size()) != g.cell_count())
    throw std::invalid_argument("grid clustering: label count mismatch");
  return g;
}

// ---------------------------------------------------------------------------
// distance reports
// ---------------------------------------------------------------------------

inline json distance_report_to_json(const DistanceReport& r, const std::string& metric) {
  json j;
  j["metric"] = metric;
  j["value"] = r.value;
  if (!r.assignment.empty()) j["assignment"] = r.assignment;
  j["padded"] = r.padded;
  if (metric == "dP") j["lambda"] = r.lambda;
  j["method"] = r.method == MassMethod::ExactCdf ? "exact" : "monte-carlo";
  if (r.standard_error) j["standard_error"] = *r.standard_error;
  j["same_clustering"] = r.identifies_same_clustering();
  return j;
}

// ---------------------------------------------------------------------------
// consistency experiment: config JSON, records CSV, summary CSV
// ---------------------------------------------------------------------------

struct ExperimentFile {
  MixtureModel model;
  ExperimentConfig config;
};

inline ExperimentFile load_experiment(const std::string& path) {
  json j = load_json_file(path);
  std::optional<MixtureModel> model;
  if (j.contains("model")) {
    model = model_from_json(j.at("model"));
  } else if (j.contains("model_file")) {
    auto base = std::filesystem::path(path).parent_path();
    model = load_model((base / j.at("model_file").get<std::string>()).string());
  } else {
    throw std::invalid_argument("experiment: needs 'model' or 'model_file'");
  }

  ExperimentConfig config;
  config.sample_sizes = j.at("sample_sizes").get<std::vector<long>>();
  config.replicates = j.at("replicates").get<int>();
  config.base_seed = j.value("base_seed", 0ULL);
  if (j.contains("bandwidth")) {
    const auto& b = j.at("bandwidth");
    std::string rule = b.value("rule", "power_law");
    if (rule == "fixed") {
      config.bandwidth.kind = BandwidthRule::Kind::Fixed;
      config.bandwidth.fixed_h = b.at("h").get<double>();
    } else if (rule == "power_law") {
      config.bandwidth.kind = BandwidthRule::Kind::PowerLaw;
      if (b.contains("c")) config.bandwidth.c = b.at("c").get<double>();
      config.bandwidth.exponent = b.value("exponent", -1.0 / 7.0);
    } else {
      throw std::invalid_argument("experiment: unknown bandwidth rule '" + rule + "'");
    }
  }
  if (j.contains("search_box")) {
    auto box = j.at("search_box").get<std::vector<double>>();
    if (box.size() != 2) throw std::invalid_argument("experiment: search_box needs 2 values");
    config.search_box = {box[0], box[1]};
  }
  return ExperimentFile{std::move(*model), std::move(config)};
}

inline void save_records_csv(const ExperimentResult& result, std::ostream& out) {
  std::size_t max_minima = 0;
  for (const auto& rec : result.records)
    max_minima = std::max(max_minima, rec.est_minima.size());
  out << "n,replicate,seed,cluster_count,count_match,d_P,d_H";
  for (std::size_t j = 0; j < max_minima; ++j) {
    out << ",est_min_" << (j + 1);
  }
  std::size_t truth_minima = result.truth.breakpoints.size();
  for (std::size_t j = 0; j < truth_minima; ++j)
    out << ",loss_exact_" << (j + 1) << ",loss_linear_" << (j + 1) << ",loss_deriv_"
        << (j + 1);
  out << '\n';
  for (const auto& rec : result.records) {
    out << rec.n << ',' << rec.replicate << ',' << rec.seed << ',' << rec.cluster_count
        << ',' << (rec.count_match ? 1 : 0) << ',' << format_double(rec.d_P) << ','
        << format_double(rec.d_H);
    for (std::size_t j = 0; j < max_minima; ++j)
      out << ',' << (j < rec.est_minima.size() ? format_double(rec.est_minima[j]) : "");
    for (std::size_t j = 0; j < truth_minima; ++j) {
      if (j < rec.approx.size()) {
        out << ',' << format_double(rec.approx[j].exact) << ','
            << format_double(rec.approx[j].linearized) << ','
            << format_double(rec.approx[j].derivative);
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
}

inline void save_summary_csv(const ExperimentResult& result, std::ostream& out) {
  out << "n,frac_correct_count,mean_dP,mean_dH,median_dP,median_dH\n";
  for (const auto& row : result.summary) {
    out << row.n << ',' << format_double(row.frac_correct_count) << ','
        << format_double(row.mean_dP) << ',' << format_double(row.mean_dH) << ','
        << format_double(row.median_dP) << ',' << format_double(row.median_dH) << '\n';
  }
}

// ---------------------------------------------------------------------------
// run manifest
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

//! Content digest over input files and flag strings, independent of paths.
inline std::string config_digest(const std::vector<std::string>& input_files,
                                 const std::vector<std::string>& flags) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& path : input_files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    h = fnv1a64(buf.str(), h);
  }
  for (const auto& f : flags) h = fnv1a64(f, h);
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

//! Provenance record written alongside every CLI output. The timestamp
//! honors SOURCE_DATE_EPOCH so that reruns can be byte-identical.
struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string tool_version = MODAL_VERSION_STRING;
  std::string timestamp;

  static std::string utc_now() {
    std::time_t t;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
      t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
      t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
  }

  json to_json() const {
    return json{{"command", command},
                {"config_digest", config_digest},
                {"seed", seed},
                {"tool_version", tool_version},
                {"timestamp", timestamp}};
  }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

}  // namespace modal
