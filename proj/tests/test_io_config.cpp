#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "roughwall/config.hpp"
#include "roughwall/io.hpp"

using namespace roughwall;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

}  // namespace

TEST(Csv, FormatsRoundTripNumbersAndQuotesText) {
  CsvTable t({"name", "value"});
  t.row_text({"plain", "a,b"});
  t.row_text({"say \"hi\"", "x"});
  CsvTable n({"a", "b"});
  n.row({0.1, -1.0 / 3.0});
  EXPECT_EQ(t.str(), "name,value\r\nplain,\"a,b\"\r\n\"say \"\"hi\"\"\",x\r\n");
  EXPECT_EQ(n.str(), "a,b\r\n0.10000000000000001,-0.33333333333333331\r\n");
  EXPECT_EQ(std::stod(format_number(0.1)), 0.1);
  EXPECT_THROW(n.row({1.0}), Error);
}

TEST(Sha256, MatchesKnownDigests) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ArtifactWriter, RecordsHashesInTheManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "roughwall_io_test";
  std::filesystem::remove_all(dir);
  ArtifactWriter w(dir);
  CsvTable t({"x"});
  t.row({1.5});
  w.write_csv("a.csv", t);
  w.finish({{"seed", 7}});
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["seed"], 7);
  ASSERT_EQ(m["artifacts"].size(), 1u);
  EXPECT_EQ(m["artifacts"][0]["file"], "a.csv");
  EXPECT_EQ(m["artifacts"][0]["sha256"], sha256_hex(slurp(dir / "a.csv")));
  EXPECT_EQ(m["artifacts"][0]["bytes"], slurp(dir / "a.csv").size());
  std::filesystem::remove_all(dir);
}

TEST(Config, DefaultsAreValid) {
  const auto cfg = parse_config("{}");
  EXPECT_DOUBLE_EQ(cfg.mesh.h, 0.1);
  EXPECT_DOUBLE_EQ(cfg.study.N, 0.25);
  EXPECT_EQ(cfg.study.eps_list.size(), 4u);
}

TEST(Config, ReadsNestedValues) {
  const auto cfg = parse_config(R"({"command": "bl-solve", "law": {"p": 3, "delta_reg": 0},
      "pattern": {"kind": "flat", "params": [0.25]}, "mesh": {"L": 6, "h": 0.05},
      "solve": {"tol": 1e-10, "scheme": "newton", "lid": "dirichlet-zero"}})");
  EXPECT_EQ(cfg.command, Command::bl_solve);
  EXPECT_DOUBLE_EQ(cfg.p, 3.0);
  EXPECT_DOUBLE_EQ(cfg.mesh.L, 6.0);
  EXPECT_EQ(cfg.solve.scheme, Scheme::newton);
  EXPECT_EQ(cfg.solve.lid, LidCondition::dirichlet_zero);
  EXPECT_TRUE(cfg.pattern().is_flat());
  // The echo parses back to the same configuration.
  const auto again = parse_config(cfg.to_json().dump());
  EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_config("{\n  \"law\": {\"p\": 2,}\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
}

TEST(Config, UnknownKeysAndAllViolationsAreReportedTogether) {
  auto pr = problems_of(R"({"law": {"p": 2, "q": 1}, "bogus": true})");
  ASSERT_EQ(pr.size(), 2u);
  pr = problems_of(R"({"law": {"p": 1.0}, "mesh": {"h": 0.5, "L": 1}, "study": {"eps_list": [0.3]}})");
  ASSERT_EQ(pr.size(), 4u);
  EXPECT_NE(pr[0].find("p must exceed 1 (got 1)"), std::string::npos) << pr[0];
}

TEST(Config, TypeErrorsNameTheField) {
  const auto pr = problems_of(R"({"mesh": {"h": "small"}})");
  ASSERT_EQ(pr.size(), 1u);
  EXPECT_NE(pr[0].find("mesh.h"), std::string::npos);
}

TEST(Config, ScheduleMustEndAtTheRegularization) {
  const auto pr = problems_of(R"({"law": {"p": 1.5, "delta_reg": 1e-6}, "solve": {"delta_schedule": [1e-2, 1e-4]}})");
  EXPECT_FALSE(pr.empty());
  EXPECT_NO_THROW(parse_config(R"({"law": {"p": 1.5, "delta_reg": 1e-6}, "solve": {"delta_schedule": [1e-2, 1e-6]}})"));
}

TEST(Commands, RoundTripNames) {
  for (auto c : {Command::poiseuille, Command::bl_solve, Command::wall_law, Command::channel_solve, Command::verify_error,
                 Command::check_inequalities, Command::korn, Command::trace_poincare, Command::mesh})
    EXPECT_EQ(parse_command(to_string(c)), c);
  EXPECT_FALSE(parse_command("nope").has_value());
}
