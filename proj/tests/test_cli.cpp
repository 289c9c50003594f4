#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

// End-to-end checks of the command-line surface: exit codes, output files,
// and the worked-example values through the distance subcommand.

#ifndef MODAL_FIXTURE_DIR
#define MODAL_FIXTURE_DIR "fixtures"
#endif
#ifndef MODAL_CLI_PATH
#define MODAL_CLI_PATH "modal"
#endif

namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
  return std::string(MODAL_FIXTURE_DIR) + "/" + name;
}

struct CliResult {
  int exit_code;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  fs::path out = fs::temp_directory_path() / "modal_cli_stdout.txt";
  std::string cmd =
      std::string(MODAL_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::ostringstream text;
  text << in.rdbuf();
  fs::remove(out);
  return {WEXITSTATUS(status), text.str()};
}

}  // namespace

TEST_CASE("critical-points on figure 3 writes three rows and a manifest") {
  fs::path dir = fs::temp_directory_path() / "modal_cli_cp";
  fs::remove_all(dir);
  CliResult r = run_cli("critical-points " + fixture("figure3.json") + " --out " +
                        dir.string());
  REQUIRE(r.exit_code == 0);
  std::ifstream csv(dir / "critical_points.csv");
  REQUIRE(csv.good());
  std::string line;
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == 4);  // header + 2 maxima + 1 saddle
  REQUIRE(fs::exists(dir / "critical-points_manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("malformed model JSON exits 2 and writes nothing") {
  fs::path dir = fs::temp_directory_path() / "modal_cli_bad";
  fs::remove_all(dir);
  fs::path broken = fs::temp_directory_path() / "modal_cli_broken.json";
  std::ofstream(broken) << "{\"dimension\": 2, \"compo";
  CliResult r =
      run_cli("critical-points " + broken.string() + " --out " + dir.string());
  REQUIRE(r.exit_code == 2);
  REQUIRE(!fs::exists(dir));
  fs::remove(broken);
}

TEST_CASE("distance subcommand reproduces the worked-example values") {
  CliResult dp = run_cli("distance " + fixture("figure7_C.json") + " " +
                         fixture("figure7_D.json") + " --metric dP");
  REQUIRE(dp.exit_code == 0);
  auto jp = nlohmann::json::parse(dp.stdout_text);
  REQUIRE(std::abs(jp["value"].get<double>() - 0.05) <= 1e-12);
  REQUIRE(jp["padded"].get<int>() == 1);

  CliResult dh = run_cli("distance " + fixture("figure7_C.json") + " " +
                         fixture("figure7_D.json") + " --metric dH");
  auto jh = nlohmann::json::parse(dh.stdout_text);
  REQUIRE(std::abs(jh["value"].get<double>() - 0.45) <= 1e-12);

  CliResult same = run_cli("distance " + fixture("figure7_C.json") + " " +
                           fixture("figure7_C.json") + " --metric dP");
  REQUIRE(nlohmann::json::parse(same.stdout_text)["value"].get<double>() == 0.0);
}

TEST_CASE("distance with incompatible inputs exits 2") {
  CliResult r = run_cli("distance " + fixture("figure7_C.json") + " " +
                        fixture("trimodal1d.json") + " --metric dP");
  REQUIRE(r.exit_code == 2);
  CliResult no_model = run_cli("distance " + fixture("figure7_C.json") + " " +
                               fixture("figure7_C.json") + " --metric bogus");
  REQUIRE(no_model.exit_code == 2);
}

TEST_CASE("partition --oned writes the symmetric bimodal breakpoint") {
  fs::path dir = fs::temp_directory_path() / "modal_cli_1d";
  fs::remove_all(dir);
  fs::path model = fs::temp_directory_path() / "modal_cli_bimodal.json";
  std::ofstream(model) << R"({"dimension": 1, "components": [
    {"weight": 0.5, "mean": [-1.5], "covariance": [[1.0]]},
    {"weight": 0.5, "mean": [1.5], "covariance": [[1.0]]}]})";
  CliResult r =
      run_cli("partition " + model.string() + " --oned --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  std::ifstream in(dir / "clustering1d.json");
  auto j = nlohmann::json::parse(in);
  auto bps = j["breakpoints"].get<std::vector<double>>();
  REQUIRE(bps.size() == 1);
  REQUIRE(std::abs(bps[0]) <= 1e-9);
  fs::remove_all(dir);
  fs::remove(model);
}

TEST_CASE("boundary tracing above d = 2 exits 4 but writes the partition") {
  fs::path dir = fs::temp_directory_path() / "modal_cli_3d";
  fs::remove_all(dir);
  fs::path model = fs::temp_directory_path() / "modal_cli_3d.json";
  std::ofstream(model) << R"({"dimension": 3, "components": [
    {"weight": 0.5, "mean": [-1.5, 0.0, 0.0],
     "covariance": [[1,0,0],[0,1,0],[0,0,1]]},
    {"weight": 0.5, "mean": [1.5, 0.0, 0.0],
     "covariance": [[1,0,0],[0,1,0],[0,0,1]]}]})";
  CliResult r = run_cli("partition " + model.string() + " --grid 6x6 --out " +
                        dir.string());
  REQUIRE(r.exit_code == 4);
  REQUIRE(fs::exists(dir / "partition.grid"));
  REQUIRE(!fs::exists(dir / "separatrix.csv"));
  fs::remove_all(dir);
  fs::remove(model);
}

TEST_CASE("sample subcommand is seed-deterministic") {
  fs::path d1 = fs::temp_directory_path() / "modal_cli_s1";
  fs::path d2 = fs::temp_directory_path() / "modal_cli_s2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  REQUIRE(run_cli("--seed 31 sample " + fixture("trimodal1d.json") + " -n 100 --out " +
                  d1.string())
              .exit_code == 0);
  REQUIRE(run_cli("sample " + fixture("trimodal1d.json") + " -n 100 --seed 31 --out " +
                  d2.string())
              .exit_code == 0);
  std::ifstream a(d1 / "samples.csv"), b(d2 / "samples.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  std::string text_a = sa.str();
  REQUIRE(text_a == sb.str());
  REQUIRE(std::count(text_a.begin(), text_a.end(), '\n') == 100);
  fs::remove_all(d1);
  fs::remove_all(d2);
}