#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "modal/io.hpp"
#include "test_util.hpp"

using Catch::Approx;
using namespace modal;

#ifndef MODAL_FIXTURE_DIR
#define MODAL_FIXTURE_DIR "fixtures"
#endif

namespace {
std::string fixture_path(const std::string& name) {
  return std::string(MODAL_FIXTURE_DIR) + "/" + name;
}
}  // namespace

TEST_CASE("model JSON round trip") {
  MixtureModel m = load_model(fixture_path("figure3.json"));
  REQUIRE(m.dimension() == 2);
  REQUIRE(m.component_count() == 2);
  REQUIRE(m.component(0).weight == Approx(0.5));

  json j = model_to_json(m);
  MixtureModel again = model_from_json(j);
  Eigen::VectorXd x(2);
  x << 0.3, -0.7;
  REQUIRE(m.density(x) == again.density(x));
}

TEST_CASE("model loading validates weights and shapes") {
  json bad = json::parse(R"({"dimension": 1, "components": [
    {"weight": 0.8, "mean": [0.0], "covariance": [[1.0]]}]})");
  REQUIRE_THROWS_AS(model_from_json(bad), std::invalid_argument);

  json near = json::parse(R"({"dimension": 1, "components": [
    {"weight": 0.5000000001, "mean": [0.0], "covariance": [[1.0]]},
    {"weight": 0.4999999999, "mean": [2.0], "covariance": [[1.0]]}]})");
  REQUIRE_NOTHROW(model_from_json(near));  // within 1e-9, renormalized

  json shape = json::parse(R"({"dimension": 2, "components": [
    {"weight": 1.0, "mean": [0.0], "covariance": [[1.0]]}]})");
  REQUIRE_THROWS_AS(model_from_json(shape), std::invalid_argument);
}

TEST_CASE("sample CSV round trip") {
  MixtureModel m = load_model(fixture_path("trimodal1d.json"));
  SampleSet s = m.sample(50, 7);
  std::ostringstream out;
  save_samples_csv(s, out);

  auto tmp = std::filesystem::temp_directory_path() / "modal_test_samples.csv";
  write_text_file(tmp, out.str());
  Eigen::MatrixXd again = load_points_csv(tmp.string());
  REQUIRE(again.rows() == 50);
  REQUIRE((again.array() == s.points.array()).all());  // shortest round trip
  std::filesystem::remove(tmp);
}

TEST_CASE("clustering JSON forms") {
  Clustering1D c;
  c.breakpoints = {-1.25, 0.5};
  json j = clustering1d_to_json(c);
  Clustering1D again = clustering1d_from_json(j);
  REQUIRE(again.breakpoints == c.breakpoints);

  json bad = json::parse(R"({"breakpoints": [1.0, 0.0]})");
  REQUIRE_THROWS_AS(clustering1d_from_json(bad), std::invalid_argument);

  json atoms = json::parse(R"({"atom_masses": [0.5, 0.5], "clusters": [[0],[1]]})");
  REQUIRE(atomic_from_json(atoms).cluster_count() == 2);
  json overlap = json::parse(R"({"atom_masses": [0.5, 0.5], "clusters": [[0],[0,1]]})");
  REQUIRE_THROWS_AS(atomic_from_json(overlap), std::invalid_argument);
}

TEST_CASE("grid clustering file round trip") {
  GridClustering g;
  g.lo = Eigen::VectorXd::Constant(2, -1.0);
  g.hi = Eigen::VectorXd::Constant(2, 1.0);
  g.resolution = {3, 2};
  g.labels = {0, 0, 1, 1, kBoundaryLabel, 1};
  Eigen::VectorXd m0(2), m1(2);
  m0 << -0.5, 0.0;
  m1 << 0.5, 0.0;
  g.mode_locations = {m0, m1};

  std::ostringstream out;
  save_grid_clustering(g, out);
  std::istringstream in(out.str());
  GridClustering again = load_grid_clustering(in);
  REQUIRE(again.labels == g.labels);
  REQUIRE(again.resolution == g.resolution);
  REQUIRE(again.cluster_count() == 2);
  Eigen::VectorXd q(2);
  q << 0.9, 0.9;
  REQUIRE(again.label(q) == g.label(q));
}

TEST_CASE("critical set CSV has one row per point") {
  MixtureModel m = load_model(fixture_path("figure3.json"));
  CriticalSet set = find_critical_points(m);
  std::ostringstream out;
  save_critical_set_csv(set, m.dimension(), out);
  std::string text = out.str();
  long lines = std::count(text.begin(), text.end(), '\n');
  REQUIRE(lines == 1 + static_cast<long>(set.points.size()));
  REQUIRE(text.rfind("x1,x2,value,morse_index,kind,", 0) == 0);
}

TEST_CASE("experiment file parsing") {
  ExperimentFile exp = load_experiment(fixture_path("trimodal1d_experiment.json"));
  REQUIRE(exp.model.dimension() == 1);
  REQUIRE(exp.config.sample_sizes == std::vector<long>{200, 1000, 5000, 20000});
  REQUIRE(exp.config.replicates == 200);
  REQUIRE(exp.config.bandwidth.kind == BandwidthRule::Kind::PowerLaw);
  REQUIRE(exp.config.bandwidth.c.has_value());
  REQUIRE(*exp.config.bandwidth.c == Approx(1.9411723107421366));
}

TEST_CASE("records and summary CSV shapes") {
  MixtureModel model = load_model(fixture_path("trimodal1d.json"));
  ExperimentConfig config;
  config.sample_sizes = {200};
  config.replicates = 3;
  config.base_seed = 1;
  ExperimentResult result = run_consistency(model, config, 1);

  std::ostringstream records, summary;
  save_records_csv(result, records);
  save_summary_csv(result, summary);
  std::string rec_text = records.str(), sum_text = summary.str();
  REQUIRE(std::count(rec_text.begin(), rec_text.end(), '\n') == 4);
  REQUIRE(std::count(sum_text.begin(), sum_text.end(), '\n') == 2);
  REQUIRE(sum_text.rfind("n,frac_correct_count,mean_dP,mean_dH", 0) == 0);
}

TEST_CASE("digest is content-based and deterministic") {
  auto a = config_digest({fixture_path("figure3.json")}, {"x=1"});
  auto b = config_digest({fixture_path("figure3.json")}, {"x=1"});
  auto c = config_digest({fixture_path("figure3.json")}, {"x=2"});
  auto d = config_digest({fixture_path("trimodal1d.json")}, {"x=1"});
  REQUIRE(a == b);
  REQUIRE(a != c);
  REQUIRE(a != d);
  REQUIRE(a.size() == 16);
}

TEST_CASE("format_double round-trips exactly") {
  Rng rng(12345);
  for (int i = 0; i < 1000; ++i) {
    double v = (rng.uniform() - 0.5) * std::pow(10.0, 300.0 * (rng.uniform() - 0.5));
    REQUIRE(std::stod(format_double(v)) == v);
  }
}
