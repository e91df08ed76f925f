#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dsol/io.hpp"
#include "dsol/runner.hpp"

using namespace dsol;
namespace fs = std::filesystem;

namespace {

const char* kGroundstate = R"({
  "mode": "groundstate",
  "grid": {"half_length": 20, "n_points": 801},
  "physics": {"p": 7, "gamma": -1},
  "profile": {"solitons": [{"omega": 1}]}
})";

std::vector<std::string> issues_of(const std::string& text, std::optional<Mode> mode = {}) {
  try {
    parse_config(text, mode);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& what) {
  for (const auto& s : issues)
    if (s.find(what) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dsol_io_" + name + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(d);
  return d;
}

std::string evolve_config(const fs::path& out, double t0, double t1, const std::string& extra = "") {
  std::ostringstream os;
  os << R"({"mode": "evolve", "output_dir": ")" << out.string() << R"(",
    "grid": {"half_length": 20, "n_points": 1025},
    "physics": {"p": 7, "gamma": -1},
    "profile": {"solitons": [{"omega": 1}]},
    "evolution": {"dt": 0.005, "record_every": 10, "t0": )"
     << t0 << R"(, "t1": )" << t1 << extra << "}}";
  return os.str();
}

}  // namespace

TEST(Config, MinimalGroundstateParses) {
  const ExperimentConfig c = parse_config(kGroundstate);
  EXPECT_EQ(c.mode, Mode::groundstate);
  ASSERT_TRUE(c.grid && c.physics && c.profile);
  EXPECT_EQ(c.grid->n_points, 801u);
  EXPECT_DOUBLE_EQ(c.profile->solitons[0].p, 7.0);
  EXPECT_DOUBLE_EQ(c.profile->solitons[0].gamma, -1.0);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_FALSE(c.evolution.has_value());
}

TEST(Config, RejectsInadmissibleFrequency) {
  const auto issues = issues_of(R"({"mode": "groundstate", "grid": {"half_length": 20, "n_points": 801},
    "physics": {"p": 7, "gamma": -1}, "profile": {"solitons": [{"omega": 0.2}]}})");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_TRUE(mentions(issues, "profile.solitons[0]"));
  EXPECT_TRUE(mentions(issues, "standing-wave admissibility requires omega > gamma^2/4"));
}

TEST(Config, RejectsDuplicateVelocities) {
  const auto issues = issues_of(R"({"mode": "groundstate", "grid": {"half_length": 20, "n_points": 801},
    "physics": {"p": 7, "gamma": -1},
    "profile": {"solitons": [{"omega": 1, "v": 2, "x0": 5}, {"omega": 0.5, "v": 2, "x0": -5}]}})");
  EXPECT_TRUE(mentions(issues, "profile.solitons[1].v"));
  EXPECT_TRUE(mentions(issues, "pairwise distinct"));
}

TEST(Config, SortsSolitonsByVelocity) {
  const ExperimentConfig c = parse_config(R"({"mode": "groundstate", "grid": {"half_length": 20, "n_points": 801},
    "physics": {"p": 7, "gamma": -1},
    "profile": {"solitons": [{"omega": 0.5, "v": 3, "x0": 9}, {"omega": 1}]}})");
  EXPECT_DOUBLE_EQ(c.profile->solitons[0].v, 0.0);
  EXPECT_DOUBLE_EQ(c.profile->solitons[1].v, 3.0);
}

TEST(Config, ReportsEveryProblem) {
  const auto issues = issues_of(R"({"mode": "evolve", "colour": "red",
    "grid": {"half_length": 20, "n_points": 800},
    "physics": {"p": 0.5, "gamma": -1, "extra": 1},
    "frac": {},
    "evolution": {"t1": 1}})");
  EXPECT_TRUE(mentions(issues, "colour: unknown key"));
  EXPECT_TRUE(mentions(issues, "frac: section not used by mode evolve"));
  EXPECT_TRUE(mentions(issues, "profile: required by mode evolve"));
  EXPECT_TRUE(mentions(issues, "grid:"));
  EXPECT_TRUE(mentions(issues, "physics.p: must exceed 1"));
  EXPECT_TRUE(mentions(issues, "physics.extra: unknown key"));
  EXPECT_TRUE(mentions(issues, "evolution.dt: required"));
  EXPECT_GE(issues.size(), 7u);
}

TEST(Config, SyntaxErrorCarriesPosition) {
  const auto issues = issues_of("{\n  \"mode\": \"groundstate\",\n  \"grid\": {\"half_length\": 20,, }\n}");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_TRUE(mentions(issues, "line 3, column")) << issues[0];
}

TEST(Config, ModeAndStabilityRules) {
  EXPECT_TRUE(mentions(issues_of(kGroundstate, Mode::spectrum), "but 'spectrum' was requested"));
  EXPECT_NO_THROW(parse_config(R"({"grid": {"half_length": 20, "n_points": 801}, "frac": {}})", Mode::norm_equiv));
  EXPECT_TRUE(mentions(issues_of(R"({"grid": {"half_length": 20, "n_points": 801}})"), "mode: required"));
  // dt above half the spacing trips the stability guard
  const fs::path out = scratch("unused");
  const auto issues = issues_of(evolve_config(out, 0, 1, ", \"dt\": 0.5"));
  EXPECT_FALSE(issues.empty());
  EXPECT_TRUE(mentions(issues_of(R"({"mode": "norm-equiv", "grid": {"half_length": 20, "n_points": 801},
    "frac": {"s": [0.5, 1.5], "gamma": [0]}})"), "frac.s[1]"));
}

TEST(Config, HashIgnoresOutputDirButNotSeed) {
  const ExperimentConfig a = parse_config(kGroundstate);
  std::string moved(kGroundstate);
  moved.insert(1, "\"output_dir\": \"elsewhere\",");
  const ExperimentConfig b = parse_config(moved);
  EXPECT_EQ(b.output_dir, "elsewhere");
  EXPECT_EQ(a.hash(), b.hash());
  const ExperimentConfig c = parse_config(kGroundstate, {}, 99);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_NE(a.hash(), c.hash());
  // key order and whitespace do not matter
  const ExperimentConfig d = parse_config(R"({"profile": {"solitons": [{"omega": 1}]}, "physics": {"gamma": -1, "p": 7},
    "grid": {"n_points": 801, "half_length": 20}, "mode": "groundstate"})");
  EXPECT_EQ(a.hash(), d.hash());
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hash_hex(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
  EXPECT_EQ(hash_hex(1), "0000000000000001");
}

TEST(Csv, FormatAndHeader) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(-2.0), "-2");
  for (double x : {M_PI, -1.0 / 3.0, 6.02214076e23, 1e-300, 5e-324, 123456789.0}) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    EXPECT_EQ(format_real(x), buf);
    EXPECT_EQ(std::strtod(format_real(x).c_str(), nullptr), x);
  }

  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "a.csv", 0xabcull, {"t", "M"});
    w.row(std::vector<double>{0.5, 1.25});
    w.row(std::vector<std::string>{"1", ""});
    EXPECT_THROW(w.row(std::vector<double>{1.0}), IoError);
  }
  EXPECT_EQ(slurp(dir / "a.csv"), "# config_hash=0000000000000abc\nt,M\n0.5,1.25\n1,\n");
  fs::remove_all(dir);
}

TEST(Checkpoint, LayoutAndRoundTrip) {
  const fs::path dir = scratch("cp");
  fs::create_directories(dir);
  const Grid g(5.0, 11);
  GridFunction u = GridFunction::sample(g, [](double x) { return cplx(std::exp(-x * x), x / 3.0); });
  write_checkpoint(dir / "u.dsol", 1.5, u, 0x0102030405060708ull);
  const std::string bytes = slurp(dir / "u.dsol");
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 8 + 8 + 16 * 11);
  EXPECT_EQ(bytes.substr(0, 4), "DSOL");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(16, 8), std::string("\x0b\x00\x00\x00\x00\x00\x00\x00", 8));
  EXPECT_EQ(bytes.substr(32, 8), std::string("\x08\x07\x06\x05\x04\x03\x02\x01", 8));
  // 1.5 = 0x3FF8000000000000
  EXPECT_EQ(bytes.substr(24, 8), std::string("\x00\x00\x00\x00\x00\x00\xf8\x3f", 8));

  const Checkpoint c = read_checkpoint(dir / "u.dsol");
  EXPECT_EQ(c.t, 1.5);
  EXPECT_EQ(c.config_hash, 0x0102030405060708ull);
  EXPECT_EQ(c.u.grid, g);
  EXPECT_EQ(c.u.values, u.values);

  std::ofstream(dir / "bad.dsol", std::ios::binary) << "DSOX" << bytes.substr(4);
  EXPECT_THROW(read_checkpoint(dir / "bad.dsol"), IoError);
  std::ofstream(dir / "short.dsol", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(read_checkpoint(dir / "short.dsol"), IoError);
  EXPECT_THROW(read_checkpoint(dir / "missing.dsol"), IoError);
  fs::remove_all(dir);
}

TEST(Run, EvolveRoundTripAndDeterminism) {
  const fs::path root = scratch("run");
  std::ostringstream log;
  const ExperimentConfig whole = parse_config(evolve_config(root / "whole", 0, 1));
  EXPECT_EQ(run_experiment(whole, log), kExitPass);
  for (const char* f : {"config.json", "trajectory.csv", "verdict.json", "final.dsol"})
    EXPECT_TRUE(fs::exists(root / "whole" / f)) << f;
  const std::string csv = slurp(root / "whole" / "trajectory.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + hash_hex(whole.hash()) + "\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_NE(slurp(root / "whole" / "verdict.json").find("\"pass\": true"), std::string::npos);

  // same config again: byte-identical CSV
  ExperimentConfig again = whole;
  again.output_dir = (root / "again").string();
  EXPECT_EQ(run_experiment(again, log), kExitPass);
  EXPECT_EQ(slurp(root / "again" / "trajectory.csv"), csv);

  // half way, then resume from the checkpoint
  EXPECT_EQ(run_experiment(parse_config(evolve_config(root / "first", 0, 0.5)), log), kExitPass);
  const std::string resume = ", \"initial_checkpoint\": \"" + (root / "first" / "final.dsol").string() + "\"";
  EXPECT_EQ(run_experiment(parse_config(evolve_config(root / "second", 0, 1, resume)), log), kExitPass);
  const Checkpoint a = read_checkpoint(root / "whole" / "final.dsol");
  const Checkpoint b = read_checkpoint(root / "second" / "final.dsol");
  EXPECT_EQ(b.t, 1.0);
  EXPECT_LT((a.u.values - b.u.values).norm(), 1e-12 * a.u.values.norm());
  fs::remove_all(root);
}

TEST(Run, GroundstateAndNormEquivArtifacts) {
  const fs::path root = scratch("gs");
  std::ostringstream log;
  ExperimentConfig gs = parse_config(kGroundstate);
  gs.output_dir = (root / "gs").string();
  EXPECT_EQ(run_experiment(gs, log), kExitPass);
  EXPECT_TRUE(fs::exists(root / "gs" / "groundstate.csv"));

  ExperimentConfig ne = parse_config(R"({"mode": "norm-equiv", "grid": {"half_length": 20, "n_points": 1025},
    "frac": {"s": [0.6], "gamma": [-1]}})");
  ne.output_dir = (root / "ne").string();
  EXPECT_EQ(run_experiment(ne, log), kExitPass);
  const std::string csv = slurp(root / "ne" / "norm_equivalence.csv");
  EXPECT_NE(csv.find("s,gamma,lambda,test_function_id,ratio,inverse_ratio\n"), std::string::npos);
  EXPECT_NE(csv.find(",odd_gauss,1,1\n"), std::string::npos);
  fs::remove_all(root);
}
