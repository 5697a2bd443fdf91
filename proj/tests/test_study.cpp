#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "fourfield/study.hpp"

using namespace fourfield;

TEST(Study, ConvergenceRowsAndRates) {
  auto rows = run_convergence<2>(ElementQuartet::parse("L1N11R2D0"), {2, 4}, 1.0, 1e-9, 25, "y0");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(std::isnan(rows[0].r_U));
  EXPECT_TRUE(rows[0].newton_converged);
  EXPECT_TRUE(rows[1].newton_converged);
  EXPECT_GT(rows[1].h, 0.0);
  EXPECT_LT(rows[1].h, rows[0].h);
  EXPECT_GT(rows[1].r_U, 1.0);
  // rate definition: r = log(e_coarse/e_fine) / log(h_coarse/h_fine)
  double expect = std::log(rows[0].E_U / rows[1].E_U) / std::log(rows[0].h / rows[1].h);
  EXPECT_DOUBLE_EQ(rows[1].r_U, expect);
}

TEST(Study, ConvergenceCsvDeterministicByteIdentical) {
  auto rows = run_convergence<2>(ElementQuartet::parse("L1N11R2D0"), {2, 4}, 1.0, 1e-9, 25, "y0");
  std::ostringstream a, b;
  write_convergence_csv(a, rows);
  auto rows2 = run_convergence<2>(ElementQuartet::parse("L1N11R2D0"), {2, 4}, 1.0, 1e-9, 25, "y0");
  write_convergence_csv(b, rows2);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "quartet,dim,level,h,dof,newton_iterations,newton_converged,E_U,E_K,E_P,E_p,r_U,r_K,r_P,r_p,poor");
}

TEST(Study, InfsupReportRows) {
  ScanOptions opt;
  auto rows = run_infsup_report<2>({ElementQuartet::parse("L1N11R2D0"), ElementQuartet::parse("L2N11R1D0")},
                                   {2, 4}, opt);
  ASSERT_EQ(rows.size(), 2u * 2u * 6u);
  double prev_h = 1e9;
  for (const auto& r : rows) {
    if (r.quartet == "L1N11R2D0") {
      EXPECT_DOUBLE_EQ(r.fr_rows, 1.0) << r.kind << " level " << r.level;
      EXPECT_GT(r.alpha, 0.0);
    }
    if (r.quartet == "L2N11R1D0" && r.kind == "S1d") EXPECT_LT(r.fr, 1.0);
    if (r.quartet == rows[0].quartet && r.kind == "S1d") {
      EXPECT_LT(r.h, prev_h);
      prev_h = r.h;
    }
  }
  std::ostringstream os;
  write_infsup_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "quartet,dim,level,h,kind,FR,FR_rows,alpha");
}

TEST(Study, PoorApproximationFlagMatchesItsDefinition) {
  // a well-behaved quartet is not marked poor; wherever the flag appears it
  // must coincide with a stalled stress error (r_P < 0.5 or E_P not
  // decreasing)
  auto good = run_convergence<2>(ElementQuartet::parse("L1N11R2D0"), {4, 8}, 1.0, 1e-9, 25, "y0");
  ASSERT_TRUE(good[1].newton_converged);
  EXPECT_FALSE(good[1].poor);
  EXPECT_GT(good[1].r_P, 0.5);
  for (const auto& rows :
       {good, run_convergence<2>(ElementQuartet::parse("L2N21R2D1"), {2, 4}, 1.0, 1e-9, 25, "y0")}) {
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i].newton_converged && rows[i - 1].newton_converged)
        EXPECT_EQ(rows[i].poor, rows[i].r_P < 0.5 || rows[i].E_P >= rows[i - 1].E_P);
  }
}

TEST(Study, FailedLevelsAreRecordedAndRunContinues) {
  // this poor-approximation quartet overshoots at some levels; the failure is
  // recorded per row and the remaining levels still run
  auto rows = run_convergence<2>(ElementQuartet::parse("L1N11R1D0"), {2, 4}, 1.0, 1e-9, 25, "y0");
  ASSERT_EQ(rows.size(), 2u);
  int recorded = 0;
  for (const auto& r : rows)
    if (!r.newton_converged || !r.newton_note.empty()) ++recorded;
  EXPECT_TRUE(rows[1].newton_converged || rows[0].newton_converged);
  SUCCEED() << recorded << " failed level(s) recorded";
}

#ifdef CLI_BIN

namespace {

std::string run_cli(const std::string& args) {
  std::string cmd = std::string(CLI_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  pclose(pipe);
  return out;
}

int run_cli_status(const std::string& args) {
  std::string cmd = std::string(CLI_BIN) + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

} // namespace

TEST(Cli, ConvergenceCsvToStdout) {
  std::string out = run_cli("convergence --dim 2 --quartet L1N11R2D0 --levels 2,4");
  EXPECT_EQ(out.substr(0, 7), "quartet");
  EXPECT_NE(out.find("L1N11R2D0,2,4"), std::string::npos);
  // byte-identical rerun
  EXPECT_EQ(out, run_cli("convergence --dim 2 --quartet L1N11R2D0 --levels 2,4"));
}

TEST(Cli, UnstableQuartetRejectedWithoutForce) {
  EXPECT_NE(run_cli_status("convergence --dim 2 --quartet L2N11R1D0 --levels 2"), 0);
  EXPECT_EQ(run_cli_status("convergence --dim 2 --quartet L2N11R1D0 --levels 2,4 --force"), 0);
}

TEST(Cli, ConfigFileParsedAndFlagsOverride) {
  std::string dir = ::testing::TempDir();
  std::string cfg = dir + "/study.cfg";
  {
    std::ofstream os(cfg);
    os << "dim=2\nquartet=L1N11R2D0\nlevels=2,4\nmu=1.0\n";
  }
  std::string a = run_cli("convergence --config " + cfg);
  EXPECT_NE(a.find("L1N11R2D0"), std::string::npos);
  // flags override the config file
  std::string b = run_cli("convergence --config " + cfg + " --levels 2");
  EXPECT_EQ(b.find("L1N11R2D0,2,4"), std::string::npos);
  // unknown keys rejected
  std::string bad = dir + "/bad.cfg";
  {
    std::ofstream os(bad);
    os << "dim=2\nnot_a_key=1\n";
  }
  EXPECT_NE(run_cli_status("convergence --config " + bad), 0);
}

TEST(Cli, InfsupReportCsv) {
  std::string out = run_cli("infsup-report --dim 2 --quartet L2N11R1D0 --levels 2");
  EXPECT_EQ(out.substr(0, out.find('\n')), "quartet,dim,level,h,kind,FR,FR_rows,alpha");
  EXPECT_NE(out.find("S1d"), std::string::npos);
}

TEST(Cli, DumpMeshWritesLoadableJson) {
  std::string dir = ::testing::TempDir();
  std::string base = dir + "/mesh";
  run_cli("convergence --dim 2 --quartet L1N11R2D0 --levels 2 --dump-mesh " + base);
  std::ifstream is(base + ".2.json");
  ASSERT_TRUE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  auto mesh = mesh_from_json<2>(nlohmann::ordered_json::parse(ss.str()));
  EXPECT_EQ(mesh.num_cells(), 8);
  int gamma1 = 0;
  for (const auto& [f, tag] : mesh.boundary_tags)
    if (tag == BoundaryTag::Gamma1) ++gamma1;
  EXPECT_EQ(gamma1, 2); // the y = 0 side at level 2
}

#endif // CLI_BIN
