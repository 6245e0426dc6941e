#include <gtest/gtest.h>
#include <filesystem>
#include <fstream>
#include <levyest/cli.hpp>
#include <sstream>

using namespace levyest;
namespace fs = std::filesystem;

namespace {

const char* minimal_cp = R"(# compound Poisson bench
[run]
name = cp_small
seed = 7

[geometry]
eps = 0
a_bar = 5

[grid]
n = 1024, 4096
)";

int error_line(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name)
{
  auto p = fs::temp_directory_path() / ("levyest_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s)
{
  std::ofstream(p) << s;
}

std::string slurp(const fs::path& p)
{
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST(ParseConfig, MinimalDefaults)
{
  auto c = parse_config(minimal_cp);
  const auto& p = c.plan;
  EXPECT_EQ(p.config_id, "cp_small");
  EXPECT_EQ(p.seed, 7u);
  EXPECT_EQ(p.replicates, 50u);
  EXPECT_EQ(p.model.family, "compound_poisson");
  EXPECT_EQ(p.model.jump_law, "normal");
  EXPECT_EQ(p.geometry.eps, 0.0);
  EXPECT_EQ(p.geometry.a_bar, 5.0);
  ASSERT_EQ(p.grid.size(), 2u);
  EXPECT_DOUBLE_EQ(p.grid[0].delta, 1.0 / 32);
  EXPECT_DOUBLE_EQ(p.grid[1].delta, 1.0 / 64);
  EXPECT_EQ(p.estimator.s, 2.0);
  EXPECT_EQ(p.estimator.resolved_order(), 6);
  EXPECT_EQ(p.estimator.j_rule, JRule::count);
  EXPECT_EQ(p.p, 2.0);
  EXPECT_EQ(p.mode, SimulationMode::exact);
  EXPECT_FALSE(p.eps_exponent.has_value());
}

TEST(ParseConfig, RoundTrip)
{
  // a repeated section header is fine, repeated keys are not
  auto c = parse_config(std::string(minimal_cp) + "[estimator]\nj_rule = time\nclip = yes\n[bounds]\ntail_x = 0.25 0.5\n"
                                                  "[geometry]\neps_exponent = 0.25\n[estimate]\ndelta = 0.01\n");
  std::string s1 = serialize_config(c);
  auto c2 = parse_config(s1);
  EXPECT_EQ(serialize_config(c2), s1);
  EXPECT_EQ(c2.plan.estimator.j_rule, JRule::time);
  EXPECT_TRUE(c2.plan.estimator.clip);
  EXPECT_EQ(c2.plan.bounds.tail_x, (std::vector<double>{ 0.25, 0.5 }));
  EXPECT_EQ(*c2.plan.eps_exponent, 0.25);
  EXPECT_EQ(*c2.estimate.delta, 0.01);
  ASSERT_EQ(c2.plan.grid.size(), c.plan.grid.size());
  for (std::size_t i = 0; i < c.plan.grid.size(); ++i) {
    EXPECT_EQ(c2.plan.grid[i].n, c.plan.grid[i].n);
    EXPECT_EQ(c2.plan.grid[i].delta, c.plan.grid[i].delta);
  }

  // explicit delta list survives too, bit for bit
  auto d = parse_config("[geometry]\neps = 0.5\n[model]\nfamily = gamma\n[grid]\nn = 1000, 2000\ndelta = 0.1, 0.030000000000000002\n");
  auto d2 = parse_config(serialize_config(d));
  EXPECT_EQ(d2.plan.grid[1].delta, 0.030000000000000002);
  EXPECT_EQ(serialize_config(d2), serialize_config(d));
}

TEST(ParseConfig, GammaWithZeroEps)
{
  std::string text = "[model]\nfamily = gamma\n[geometry]\neps = 0\n[grid]\nn = 1000\n";
  EXPECT_NE(error_text(text).find("eps=0 requires finite Levy measure"), std::string::npos);
  EXPECT_EQ(error_line(text), 4);
}

TEST(ParseConfig, DuplicateKeyReportsBothLines)
{
  std::string text = "[geometry]\neps = 0\na_bar = 5\n\n[grid]\nn = 1024\n[geometry]\neps = 1\n";
  EXPECT_EQ(error_line(text), 8);
  EXPECT_NE(error_text(text).find("lines 2 and 8"), std::string::npos);
}

TEST(ParseConfig, ErrorsCarryLines)
{
  EXPECT_EQ(error_line("[geometry]\neps = 0\nfoo = 1\n[grid]\nn = 10\n"), 3);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n[gird]\nn = 10\n"), 3);
  EXPECT_EQ(error_line("eps = 0\n"), 1);
  EXPECT_EQ(error_line("[geometry]\neps\n"), 2);
  EXPECT_EQ(error_line("[geometry]\neps = zero\n[grid]\nn = 10\n"), 2);
  // missing keys point at the section header, or 0 without one
  EXPECT_EQ(error_line("[run]\nseed = 1\n[geometry]\na_bar = 5\n[grid]\nn = 10\n"), 3);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n"), 0);
  EXPECT_NE(error_text("[geometry]\neps = 0\n").find("missing required key 'n'"), std::string::npos);
  // n Delta < 1 on the grid
  EXPECT_EQ(error_line("[geometry]\neps = 0\na_bar = 5\n[grid]\nn = 10, 20\ndelta = 0.01\n"), 5);
  EXPECT_EQ(error_line("[run]\nreplicates = 1\n[geometry]\neps = 0\n[grid]\nn = 100\n"), 2);
  EXPECT_EQ(error_line("[model]\nfamily = levy\n[geometry]\neps = 0\n[grid]\nn = 100\n"), 2);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n[grid]\nn = 100\n[estimator]\ndepth = 4\n"), 6);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n[grid]\nn = 100\n[simulation]\nmode = fast\n"), 6);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n[grid]\nn = 100\n[estimate]\nsamples = x.csv\n"), 6);
  EXPECT_EQ(error_line("[geometry]\neps = 0\n[grid]\nn = 100\n[run]\nseed = -3\n"), 6);
}

TEST(Run, EstimateOnDumpedSamples)
{
  auto dir = scratch("estimate");
  write(dir / "sim.ini", std::string(minimal_cp) + "[simulation]\ndump_replicates = 2\n");
  std::ostringstream log, err;
  RunConfig rc{ "simulate", (dir / "sim.ini").string(), (dir / "sim").string(), std::nullopt, 1, false };
  ASSERT_EQ(run(rc, log, err), 0) << err.str();
  ASSERT_TRUE(fs::exists(dir / "sim" / "samples_cell0.csv"));
  EXPECT_TRUE(fs::exists(dir / "sim" / "resolved_config"));

  write(dir / "est.ini", std::string(minimal_cp) + "[estimate]\nsamples = " + (dir / "sim" / "samples_cell0.csv").string() +
                           "\ndelta = 0.03125\nreplicate = 1\ndensity_points = 300\n");
  rc = { "estimate", (dir / "est.ini").string(), (dir / "est").string(), std::nullopt, 1, false };
  ASSERT_EQ(run(rc, log, err), 0) << err.str();
  std::istringstream is(slurp(dir / "est" / "density.csv"));
  std::string line;
  int rows = 0;
  std::getline(is, line);
  EXPECT_EQ(line, "schema_version,1");
  std::getline(is, line);
  EXPECT_EQ(line, "x,value");
  while (std::getline(is, line))
    ++rows;
  EXPECT_EQ(rows, 300);

  // the same replicate simulated in place gives the same estimate
  write(dir / "est2.ini", std::string(minimal_cp) + "[estimate]\nreplicate = 1\ndensity_points = 300\n");
  rc = { "estimate", (dir / "est2.ini").string(), (dir / "est2").string(), std::nullopt, 1, false };
  ASSERT_EQ(run(rc, log, err), 0) << err.str();
  EXPECT_EQ(slurp(dir / "est" / "density.csv"), slurp(dir / "est2" / "density.csv"));
}

TEST(Run, BenchTwiceIsByteIdentical)
{
  auto dir = scratch("bench");
  write(dir / "b.ini", std::string(minimal_cp) +
                         "[run]\nseed = 9\n");
  std::ostringstream log, err;
  RunConfig a{ "bench", (dir / "b.ini").string(), (dir / "a").string(), std::nullopt, 1, false };
  RunConfig b{ "bench", (dir / "b.ini").string(), (dir / "b").string(), std::nullopt, 3, true };
  // seed given twice in [run]: reject
  EXPECT_EQ(run(a, log, err), 1);
  EXPECT_NE(err.str().find("duplicate key"), std::string::npos);

  write(dir / "b.ini", std::string(minimal_cp) +
                         "[run]\nreplicates = 4\n[bounds]\ncount_runs = 200\nsplit_runs = 5\nsplit_n = 500\n"
                         "tail_replicates = 5000\ntail_x = 1\n");
  ASSERT_EQ(run(a, log, err), 0) << err.str();
  ASSERT_EQ(run(b, log, err), 0) << err.str();
  for (const char* f : { "risk.csv", "slopes.csv", "bounds.csv" })
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "b" / "samples" / "samples_cell1.csv"));

  // --seed overrides the config and is recorded
  RunConfig c = a;
  c.out_dir = (dir / "c").string();
  c.seed = 8;
  ASSERT_EQ(run(c, log, err), 0) << err.str();
  EXPECT_NE(slurp(dir / "a" / "risk.csv"), slurp(dir / "c" / "risk.csv"));
  EXPECT_NE(slurp(dir / "c" / "resolved_config").find("seed = 8\n"), std::string::npos);
}

TEST(Run, CheckBoundsSkipsAreNotFailures)
{
  auto dir = scratch("bounds");
  write(dir / "g.ini", "[run]\nname = noisy\n[model]\nfamily = gamma\nsigma = 2\n[geometry]\neps = 0.5\n"
                       "[grid]\nn = 1000\ndelta = 0.1\n[bounds]\nsplit_delta = 0.1\nsplit_n = 500\nsplit_runs = 10\n"
                       "tail_replicates = 10000\n");
  std::ostringstream log, err;
  RunConfig rc{ "check-bounds", (dir / "g.ini").string(), (dir / "out").string(), std::nullopt, 1, false };
  EXPECT_EQ(run(rc, log, err), 0) << err.str() << log.str();
  std::string csv = slurp(dir / "out" / "bounds.csv");
  EXPECT_NE(csv.find("split_counts@r=1,noisy,nan,nan,nan,skipped"), std::string::npos);
}

TEST(Run, Errors)
{
  auto dir = scratch("errors");
  std::ostringstream log, err;
  RunConfig rc{ "bench", (dir / "missing.ini").string(), (dir / "out").string(), std::nullopt, 1, false };
  EXPECT_EQ(run(rc, log, err), 1);
  write(dir / "x.ini", minimal_cp);
  rc = { "frobnicate", (dir / "x.ini").string(), (dir / "out").string(), std::nullopt, 1, false };
  EXPECT_EQ(run(rc, log, err), 1);
  write(dir / "bad.ini", "[model]\nfamily = gamma\n[geometry]\neps = 0\n[grid]\nn = 1000\n");
  rc = { "bench", (dir / "bad.ini").string(), (dir / "out").string(), std::nullopt, 1, false };
  err.str("");
  EXPECT_EQ(run(rc, log, err), 1);
  EXPECT_NE(err.str().find("line 4: eps=0 requires finite Levy measure"), std::string::npos);
}
