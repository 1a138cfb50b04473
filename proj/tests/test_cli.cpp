#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pxpdyn/cli.hpp"

using namespace pxpdyn;

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  // Slurp the raw bytes once more to assert unix newlines.
  std::ifstream raw(p, std::ios::binary);
  std::stringstream buf;
  buf << raw.rdbuf();
  CHECK(buf.str().find('\r') == std::string::npos);
  return out;
}

std::filesystem::path temp_artifact(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

RunConfig parse_text(const std::string& text, const std::string& mode = "") {
  std::istringstream in(text);
  return parse_run_config(in, mode);
}

double row_value(const std::vector<std::string>& rows, const std::string& key) {
  for (const auto& r : rows) {
    if (r.rfind(key + ",", 0) == 0) return std::stod(r.substr(key.size() + 1));
  }
  FAIL("row not found: " << key);
  return 0.0;
}

}  // namespace

TEST_CASE("key-value parser: diagnostics and literal forms") {
  CHECK_THROWS_AS(parse_text("run.mode = leakage\nmodel.K\n"), config_error);
  CHECK_THROWS_WITH(parse_text("a = 1\n\na = 2\n", "leakage"),
                    Catch::Matchers::ContainsSubstring("line 3") &&
                        Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(
      parse_text("run.mode = leakage\nmodel.K = 1\nmodel.J = 0.5\n"
                  "model.Omega = 1\nstate.theta = pi/2\nbogus.key = 7\n"),
      Catch::Matchers::ContainsSubstring("bogus.key"));

  // pi-literal tokens in any real-valued field.
  const RunConfig cfg = parse_text(
      "run.mode = leakage\n"
      "model.K = 4\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1, 1, 1\n"
      "state.theta = pi/2, 3*pi/4, -pi, pi\n"
      "state.phi = pi, 0, -pi/2, 2\n");
  CHECK(cfg.state.theta[0] == Catch::Approx(pi / 2).margin(1e-15));
  CHECK(cfg.state.theta[1] == Catch::Approx(3 * pi / 4).margin(1e-15));
  CHECK(cfg.state.theta[2] == Catch::Approx(-pi).margin(1e-15));
  CHECK(cfg.state.phi[0] == Catch::Approx(pi).margin(1e-15));
  CHECK(cfg.state.phi[2] == Catch::Approx(-pi / 2).margin(1e-15));
  CHECK(cfg.state.phi[3] == 2.0);

  CHECK_THROWS_AS(parse_text("run.mode = leakage\nmodel.K = 1\nmodel.J = 0.5\n"
                              "model.Omega = 1\nstate.theta = two\n"),
                  config_error);
}

TEST_CASE("config semantics: broadcast, defaults, conflicts") {
  const RunConfig cfg = parse_text(
      "run.mode = leakage\n"
      "model.K = 3\n"
      "model.J = 1\n"
      "model.Omega = 0.9\n"  // scalar broadcasts across the cell
      "state.theta = 1.0, 1.1, 1.2\n");
  REQUIRE(cfg.params.Omega.size() == 3);
  CHECK(cfg.params.Omega[1] == 0.9);
  REQUIRE(cfg.params.Delta.size() == 3);  // defaults to zeros
  CHECK(cfg.params.Delta[2] == 0.0);
  REQUIRE(cfg.state.phi.size() == 3);
  CHECK(cfg.state.phi[0] == 0.0);

  // Subcommand mode and run.mode must agree when both are present.
  CHECK_THROWS_AS(parse_text("run.mode = evolve\nmodel.K = 1\nmodel.J = 0.5\n"
                              "model.Omega = 1\nstate.theta = 1\nrun.t_end = 1\n",
                              "leakage"),
                  config_error);
  CHECK_THROWS_AS(parse_text("run.mode = leakage\nmodel.K = 1\nmodel.J = 0.5\n"
                              "model.Omega = 1\nstate.theta = 1\nrun.rhs = magic\n"),
                  config_error);
  // Semantic validation runs at parse time.
  CHECK_THROWS_AS(parse_text("run.mode = leakage\nmodel.K = 1\nmodel.J = 0.3\n"
                              "model.Omega = 1\nstate.theta = 1\n"),
                  config_error);
}

TEST_CASE("seventeen significant digits round-trip") {
  CHECK(fmt17(0.1) == "0.10000000000000001");
  CHECK(fmt17(1.0) == "1");
}

TEST_CASE("leakage run writes the worked-example report") {
  const auto path = temp_artifact("pxp_cli_leakage.csv");
  RunConfig cfg = parse_text(
      "run.mode = leakage\n"
      "model.K = 2\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1\n"
      "model.Delta = 0, 0\n"
      "state.theta = pi/2, pi/2\n");
  cfg.output_path = path.string();
  CHECK(run_config(cfg, std::cerr) == 0);
  const auto rows = lines_of(path);
  CHECK(row_value(rows, "gamma2") == Catch::Approx(1.0 / 12.0).margin(1e-6));
  CHECK(row_value(rows, "gamma") == Catch::Approx(std::sqrt(1.0 / 12.0)).margin(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("evolve run: schema, config echo, termination note") {
  const auto path = temp_artifact("pxp_cli_evolve.csv");
  RunConfig cfg = parse_text(
      "run.mode = evolve\n"
      "run.t_end = 0\n"
      "model.K = 2\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1\n"
      "state.theta = 1.2, 1.9\n"
      "state.phi = 0.3, -0.2\n");
  cfg.output_path = path.string();
  CHECK(run_config(cfg, std::cerr) == 0);
  const auto rows = lines_of(path);

  bool saw_echo = false, saw_term = false;
  std::size_t header_at = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == "# model.K = 2") saw_echo = true;
    if (rows[i] == "# termination = completed") saw_term = true;
    if (rows[i].rfind("t,", 0) == 0) header_at = i;
  }
  CHECK(saw_echo);
  CHECK(saw_term);
  REQUIRE(header_at > 0);
  CHECK(rows[header_at] ==
        "t,theta_1,theta_2,phi_1,phi_2,energy,gamma2,accumulated_leakage");
  REQUIRE(rows.size() == header_at + 2);  // exactly one record for t_end = 0
  CHECK(rows[header_at + 1].rfind("0,", 0) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("sweep run: grid order, schema, and axis validation") {
  const auto path = temp_artifact("pxp_cli_sweep.csv");
  RunConfig cfg = parse_text(
      "run.mode = sweep\n"
      "model.K = 2\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1\n"
      "state.theta = 1.2, 1.9\n"
      "sweep.axis1.name = model.Delta_1\n"
      "sweep.axis1.min = -0.5\n"
      "sweep.axis1.max = 0.5\n"
      "sweep.axis1.count = 3\n");
  cfg.output_path = path.string();
  cfg.threads = 2;
  CHECK(run_config(cfg, std::cerr) == 0);
  const auto rows = lines_of(path);

  std::vector<std::string> data;
  std::size_t header_at = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].rfind("model.Delta_1,", 0) == 0) header_at = i;
  CHECK(rows[header_at] == "model.Delta_1,energy,gamma2,termination");
  for (std::size_t i = header_at + 1; i < rows.size(); ++i) data.push_back(rows[i]);
  REQUIRE(data.size() == 3);
  CHECK(data[0].rfind("-0.5", 0) == 0);
  CHECK(data[1].rfind("0,", 0) == 0);
  CHECK(data[2].rfind("0.5", 0) == 0);
  for (const auto& d : data)
    CHECK(d.substr(d.rfind(',') + 1) == "completed");
  // gamma2 is independent of Delta: all three rows agree in that column.
  const auto field = [](const std::string& s, int k) {
    std::size_t pos = 0;
    for (int i = 0; i < k; ++i) pos = s.find(',', pos) + 1;
    return s.substr(pos, s.find(',', pos) - pos);
  };
  CHECK(field(data[0], 2) == field(data[1], 2));
  CHECK(field(data[1], 2) == field(data[2], 2));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_text("run.mode = sweep\nmodel.K = 2\nmodel.J = 0.5\n"
                              "model.Omega = 1, 1\nstate.theta = 1.2, 1.9\n"
                              "sweep.axis1.name = model.J_1\nsweep.axis1.min = 0\n"
                              "sweep.axis1.max = 1\nsweep.axis1.count = 2\n"),
                  config_error);
}

TEST_CASE("exit codes: numeric events and config rejections") {
  // A polar starting angle cannot be driven: numeric-event exit.
  RunConfig polar = parse_text(
      "run.mode = leakage\n"
      "model.K = 2\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1\n"
      "state.theta = 1e-12, 1.0\n");
  std::ostringstream diag;
  CHECK(run_config(polar, diag) == 3);
  CHECK(diag.str().find("pole") != std::string::npos);

  // Config errors from a full parse surface as exit 2 through run_config's
  // own guard when raised during execution (axis list emptied by hand).
  RunConfig broken = parse_text(
      "run.mode = sweep\nmodel.K = 2\nmodel.J = 0.5\nmodel.Omega = 1, 1\n"
      "state.theta = 1.2, 1.9\nsweep.axis1.name = model.Delta_1\n"
      "sweep.axis1.min = 0\nsweep.axis1.max = 1\nsweep.axis1.count = 2\n");
  broken.axes.clear();
  std::ostringstream diag2;
  CHECK(run_config(broken, diag2) == 2);
}

TEST_CASE("json artifacts embed the resolved configuration") {
  const auto path = temp_artifact("pxp_cli_leakage.json");
  RunConfig cfg = parse_text(
      "run.mode = leakage\n"
      "run.format = json\n"
      "model.K = 2\n"
      "model.J = 0.5\n"
      "model.Omega = 1, 1\n"
      "state.theta = pi/2, pi/2\n");
  cfg.output_path = path.string();
  CHECK(run_config(cfg, std::cerr) == 0);
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.contains("config"));
  CHECK(doc["config"]["model.K"] == "2");
  CHECK(doc["report"]["gamma2"].get<double>() ==
        Catch::Approx(1.0 / 12.0).margin(1e-6));
  std::filesystem::remove(path);
}
