#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "qhahn/report.hpp"

using namespace qhahn;
using namespace qhahn::report;

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate(RunConfig{})); }

TEST(Config, RejectsSharedParameterMismatch) {
  RunConfig c;
  c.B.a2 = 0.5;
  try {
    validate(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a1 = b2"), std::string::npos);
  }
}

TEST(Config, RejectsBadValues) {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    EXPECT_THROW(validate(c), ConfigError);
  };
  bad([](RunConfig& c) { c.q = 1.0; });
  bad([](RunConfig& c) { c.q = -0.3; });
  bad([](RunConfig& c) { c.sectors = {4}, c.dim = 5; });
  bad([](RunConfig& c) { c.sectors = {-1}; });
  bad([](RunConfig& c) { c.A.mu = 0; });
  bad([](RunConfig& c) { c.tolerances.relation = 0; });
  bad([](RunConfig& c) { c.outputs.format = "xml"; });
}

TEST(Config, ParseOverridesOnlyGivenFields) {
  const auto j = json::parse(R"({"q": 1.25, "algebraB": {"mu": 0.75}, "sectors": [0, 3],
                                 "tolerances": {"spectrum": 1e-7}, "mode": "raw"})");
  const auto c = parse_config(j);
  EXPECT_EQ(c.q, 1.25);
  EXPECT_EQ(c.B.mu, 0.75);
  EXPECT_EQ(c.B.a2, 1.0);
  EXPECT_EQ(c.A.mu, 1.0);
  EXPECT_EQ(c.sectors, (std::vector<int>{0, 3}));
  EXPECT_EQ(c.tolerances.spectrum, 1e-7);
  EXPECT_EQ(c.tolerances.relation, 1e-9);
  EXPECT_EQ(c.mode, LadderMode::raw);
  EXPECT_THROW(parse_config(json::parse(R"({"q": "fast"})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"mode": "fancy"})")), ConfigError);
  EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig c;
  c.q = 2.0;
  c.A = {0.5, -1.0, 0.3};
  c.B = {-1.0, 2.0, 1.7};
  c.sectors = {1, 2};
  c.mode = LadderMode::unitary;
  const auto back = parse_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Verify, DefaultConfigurationPasses) {
  RunConfig c;
  c.sectors = {0, 1, 2, 5, 10};
  const auto r = run_verify(c);
  EXPECT_TRUE(r.pass) << r.report.at("failures").dump(2);
  EXPECT_EQ(r.report.at("schema"), kSchema);
  EXPECT_EQ(r.report.at("sectors").size(), 5u);
  for (const char* k : {"coupled_relations", "casimir_factored", "aw_relations", "aw_fit", "aw_casimir", "spectrum",
                        "cg_crossmethod", "cg_orthogonality"})
    EXPECT_TRUE(r.report.at("worst").contains(k)) << k;
}

TEST(Verify, TightToleranceFails) {
  RunConfig c;
  c.sectors = {6};
  c.tolerances.relation = 1e-18;
  const auto r = run_verify(c);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.report.at("failures").empty());
}

TEST(Verify, ForcedUnitaryOnNonUnitaryFactorIsRecorded) {
  RunConfig c;
  c.q = 1.25;
  c.A = {0.0, 1.0, 0.5};
  c.B = {1.0, 0.0, 1.0};
  c.dim = 8;
  c.mode = LadderMode::unitary;
  const auto r = run_verify(c);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.report.at("failures").at(0).at("check"), "representation");
}

TEST(Verify, RawModeSkipsOverlapChecks) {
  RunConfig c;
  c.q = 1.25;
  c.A = {0.0, 1.0, 0.5};
  c.B = {1.0, 0.0, 1.0};
  c.dim = 10;
  c.mode = LadderMode::raw;
  const auto r = run_verify(c);
  EXPECT_TRUE(r.pass) << r.report.at("failures").dump(2);
  EXPECT_FALSE(r.report.at("worst").contains("cg_crossmethod"));
}

TEST(CGTable, CsvLayout) {
  RunConfig c;
  const auto t = run_cg_table(c, 2);
  EXPECT_TRUE(t.pass);
  const auto csv = t.csv();
  std::istringstream in(csv);
  std::string line;
  int header_line = -1, data = 0, i = 0;
  while (std::getline(in, line)) {
    if (line.rfind("n,x,", 0) == 0) header_line = i;
    else if (header_line >= 0) ++data;
    else EXPECT_EQ(line.rfind("# ", 0), 0u) << line;
    ++i;
  }
  EXPECT_GE(header_line, 1);
  EXPECT_EQ(data, 9);
  EXPECT_EQ(t.rows.size(), 9u);
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_THROW(run_cg_table(c, 30), ConfigError);
}

TEST(CGTable, GroundSector) {
  const auto t = run_cg_table(RunConfig{}, 0);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].at("C_diag"), 1.0);
  EXPECT_EQ(t.rows[0].at("C_recur"), 1.0);
  EXPECT_EQ(t.rows[0].at("C_qhahn"), 1.0);
}

TEST(Sweep, GridOrderAndSize) {
  SweepGrid g;
  const auto cells = grid_cells(g);
  EXPECT_EQ(cells.size(), 4u * 4u * 16u);
  EXPECT_EQ(cells.front().composition, "sl+sl");
  EXPECT_EQ(cells[1].mu_b, 0.5);
  EXPECT_THROW(parse_grid(json::parse(R"({"compositions": ["su2+su2"]})")), ConfigError);
  EXPECT_THROW(parse_grid(json::parse(R"({"q_values": []})")), ConfigError);
}

TEST(Sweep, SingleCellMatchesVerify) {
  SweepGrid g;
  g.q_values = {0.8};
  g.mu_values = {0.5};
  g.compositions = {"mixed"};
  g.dim = 10;
  g.max_sector = 8;
  const auto s = run_sweep(g, 1);
  ASSERT_EQ(s.report.at("cells").size(), 1u);
  const auto direct = run_verify(grid_cells(g).front().config);
  EXPECT_EQ(s.report.at("cells").at(0).at("report"), direct.report);
  EXPECT_EQ(s.pass, direct.pass);
}

TEST(Sweep, ThreadCountDoesNotChangeReport) {
  SweepGrid g;
  g.q_values = {0.5, 2.0};
  g.mu_values = {0.3, 1.7};
  g.dim = 8;
  g.max_sector = 6;
  const auto one = run_sweep(g, 1);
  const auto four = run_sweep(g, 4);
  EXPECT_EQ(one.report.dump(), four.report.dump());
  EXPECT_EQ(one.report.at("summary").at("cells"), 32u);
}
