#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "diagcoag/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using diagcoag::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "diagcoag_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, MuReportsRoot) {
  const auto r = call({"mu", "--gamma", "0", "--beta", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("mu").get<double>(), 1.0, 1e-12);
  EXPECT_LE(j.at("residual").get<double>(), 1e-13);
  const auto rho = call({"mu", "--gamma", "0", "--rho", "0.5"});
  EXPECT_EQ(rho.out, r.out);
}

TEST(Cli, MuRejectsGamma) {
  const auto r = call({"mu", "--gamma", "1.5", "--beta", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("gamma must be < 1"), std::string::npos);
  EXPECT_EQ(call({"mu", "--gamma", "0", "--beta", "2", "--rho", "0.5"}).code, 2);
  EXPECT_EQ(call({"mu", "--gamma", "0"}).code, 2);
}

TEST(Cli, ConfigMergedUnderFlags) {
  const auto cfg = scratch("cfg.json");
  std::ofstream(cfg) << R"({"gamma": 0.0, "beta": 4.0})";
  const auto from_cfg = call({"mu", "--config", cfg.string()});
  ASSERT_EQ(from_cfg.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(from_cfg.out).at("mu").get<double>(), 0.36057219342349532,
              1e-12);
  const auto flag_wins = call({"mu", "--config", cfg.string(), "--beta", "2"});
  EXPECT_NEAR(nlohmann::json::parse(flag_wins.out).at("mu").get<double>(), 1.0, 1e-12);
}

TEST(Cli, ProfileVerifyRoundTrip) {
  const auto csv = scratch("ref.csv");
  const auto r = call({"profile", "--gamma", "0", "--rho", "0.5", "--out", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_GE(summary.at("decades").get<double>(), 12.0);
  EXPECT_TRUE(fs::exists(diagcoag::io::sidecar_path(csv)));
  EXPECT_EQ(slurp(csv).substr(0, 17), "x,h,g,dhdx,dev,p\n");

  const auto v = call({"verify", csv.string()});
  ASSERT_EQ(v.code, 0) << v.err;
  const auto rep = nlohmann::json::parse(v.out);
  EXPECT_NEAR(rep.at("slope_fit").get<double>(), -0.5, 0.005);

  // Reading back reproduces the stored profile.
  const auto pr = diagcoag::io::read_profile(csv);
  EXPECT_TRUE(pr.normalized);
  EXPECT_NEAR(pr.value(1.0), 0.5, 1e-12);

  // Determinism: same command, identical bytes.
  const auto csv2 = scratch("ref2.csv");
  ASSERT_EQ(call({"profile", "--gamma", "0", "--rho", "0.5", "--out", csv2.string()}).code, 0);
  EXPECT_EQ(slurp(csv), slurp(csv2));
}

TEST(Cli, VerifyFlagsCorruptedTable) {
  const auto csv = scratch("bad.csv");
  ASSERT_EQ(call({"profile", "--gamma", "0", "--beta", "2", "--out", csv.string()}).code, 0);
  std::vector<std::string> lines;
  {
    std::ifstream is(csv);
    for (std::string l; std::getline(is, l);) lines.push_back(l);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double x = std::stod(lines[i].substr(0, lines[i].find(',')));
    if (x > 10.0) {
      std::stringstream ss(lines[i]);
      std::vector<std::string> cells;
      for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
      cells[1] = diagcoag::io::fmt(std::stod(cells[1]) * 1.001);
      lines[i] = cells[0];
      for (std::size_t c = 1; c < cells.size(); ++c) lines[i] += "," + cells[c];
      break;
    }
  }
  {
    std::ofstream os(csv);
    for (const auto& l : lines) os << l << '\n';
  }
  const auto v = call({"verify", csv.string()});
  EXPECT_EQ(v.code, 4);
  EXPECT_NE(v.err.find("integral_residual"), std::string::npos);
}

TEST(Cli, ProfileGates) {
  EXPECT_EQ(call({"profile", "--gamma", "0", "--beta", "1", "--out", scratch("d.csv").string()})
                .code,
            2);
  EXPECT_EQ(call({"profile", "--gamma", "0", "--beta", "1", "--allow-degenerate", "--out",
                  scratch("d.csv").string()})
                .code,
            0);
  const auto csv = scratch("const.csv");
  const auto r = call({"profile", "--gamma", "0", "--beta", "2", "--c", "0", "--out", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pr = diagcoag::io::read_profile(csv);
  for (double h : pr.h) EXPECT_EQ(h, 2.0);
  EXPECT_EQ(call({"verify", csv.string()}).code, 2);
}

TEST(Cli, ProfileSolverFailureNamesStage) {
  const auto r = call({"profile", "--gamma", "0", "--beta", "2", "--z", "64", "--out",
                       scratch("fail.csv").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("expansion"), std::string::npos);
}

TEST(Cli, SweepRowsAndErrors) {
  const auto r = call({"sweep", "--gamma=0", "--rho", "0,0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",invalid,"), std::string::npos);
  EXPECT_NE(r.out.find(",ok,"), std::string::npos);
  EXPECT_EQ(call({"sweep", "--rho", ""}).code, 2);
}

TEST(Cli, SimulateOracles) {
  const auto dir = scratch("sim_pl");
  const auto r = call({"simulate", "--gamma", "0", "--init", "power-law", "--t-end", "2",
                       "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j.at("max_interior_rhs_relative").get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(dir / "snapshot_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "collapse_report.json"));

  const auto pulse = call({"simulate", "--gamma", "0", "--init", "pulse", "--k0", "100",
                           "--out", scratch("sim_pulse").string()});
  ASSERT_EQ(pulse.code, 0) << pulse.err;
  const auto pj = nlohmann::json::parse(pulse.out);
  EXPECT_LE(pj.at("mass_balance_per_time").get<double>(), 1e-8);
  EXPECT_TRUE(pj.at("number_nonincreasing").get<bool>());

  const auto prof = call({"simulate", "--gamma", "0", "--beta", "2", "--out",
                          scratch("sim_prof").string()});
  ASSERT_EQ(prof.code, 0) << prof.err;
  EXPECT_LT(nlohmann::json::parse(prof.out).at("collapse").at("max_distance").get<double>(),
            0.05);
}

TEST(Cli, SimulateStepCollapse) {
  const auto r = call({"simulate", "--gamma", "0", "--init", "pulse", "--amplitude", "1e300",
                       "--eta", "1e300", "--out", scratch("sim_bad").string()});
  EXPECT_EQ(r.code, 5);
}
