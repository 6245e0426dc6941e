#pragma once

#include "bench.hpp"
#include "config.hpp"
#include "wavelet.hpp"
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <set>
#include <string>

namespace levyest {

struct RunConfig
{
  std::string subcommand; //!< simulate, estimate, bench, check-bounds, diagnose
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  int workers = 0; //!< 0: LEVYEST_WORKERS, else the config value
  bool dump_samples = false;
};

namespace cli_detail {

inline void write_file(const std::filesystem::path& path, const std::string& body)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << body;
  if (!os)
    throw std::runtime_error("write failed: " + path.string());
}

template<class W>
std::string render(W w)
{
  std::ostringstream os;
  w(os);
  return os.str();
}

// replicates [0, count) of every grid cell, on the bench's own streams
inline void dump_samples(const ExperimentPlan& plan, std::size_t count, const std::filesystem::path& dir)
{
  const LevyModel model = plan.model.build();
  const auto grid = plan.canonical_grid();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    bench_detail::CellSampler sampler(plan, model, grid[c]);
    std::vector<IncrementSample> samples(count);
    parallel_for(count, plan.workers, [&](std::size_t r) {
      samples[r] = sampler({ plan.seed, uint32_t(r), uint16_t(c) });
    });
    write_file(dir / ("samples_cell" + std::to_string(c) + ".csv"),
               render([&](std::ostream& os) { write_samples_csv(os, samples); }));
  }
}

inline int estimate(const ParsedConfig& cfg, const std::filesystem::path& out, std::ostream& log)
{
  const auto& plan = cfg.plan;
  const LevyModel model = plan.model.build();
  IncrementSample x;
  if (!cfg.estimate.samples.empty()) {
    std::ifstream is(cfg.estimate.samples);
    if (!is)
      throw std::runtime_error("cannot read samples file " + cfg.estimate.samples);
    auto all = read_samples_csv(is, *cfg.estimate.delta);
    bool found = false;
    for (auto& s : all)
      if (s.seed.replicate == cfg.estimate.replicate) {
        x = std::move(s);
        found = true;
        break;
      }
    if (!found)
      throw std::runtime_error("samples file has no replicate " + std::to_string(cfg.estimate.replicate));
  } else {
    auto cell = plan.canonical_grid().front();
    x = bench_detail::CellSampler(plan, model, cell)({ plan.seed, uint32_t(cfg.estimate.replicate), 0 });
  }
  auto geo = plan.geometry_for(x.delta);
  const auto& est = plan.estimator;
  auto lam = corrected_lambda(x, geo.eps, est.correction_order);
  int J = est.j_rule == JRule::fixed  ? est.j_fixed
          : est.j_rule == JRule::time ? choose_J(std::max(1.0, double(x.size()) * x.delta), est.s)
                                      : choose_J(std::max<double>(1.0, double(lam.exceed_count)), est.s);
  auto basis = build_basis(est.resolved_order(), J, est.depth, geo);
  DensityEstimate h = DensityEstimate::zero(basis);
  if (!lam.empty())
    h = estimate_h(x, geo, basis);
  else
    log << "no increment exceeds eps; both estimates are 0\n";
  h.set_clip(est.clip);
  DensityEstimate f = h;
  f.set_lambda_scale(lam.lambda_hat);
  auto xs = estimation_grid(geo, cfg.estimate.density_points);
  write_file(out / "density.csv", render([&](std::ostream& os) { write_density_csv(os, f, xs); }));
  write_file(out / "density_h.csv", render([&](std::ostream& os) { write_density_csv(os, h, xs); }));
  write_file(out / "estimate.csv", render([&](std::ostream& os) {
               os << "schema_version," << csv_schema_version << "\n"
                  << "key,value\n"
                  << "n," << x.size() << "\n"
                  << "delta," << format_double(x.delta) << "\n"
                  << "eps," << format_double(geo.eps) << "\n"
                  << "exceed_count," << lam.exceed_count << "\n"
                  << "lambda_hat," << format_double(lam.lambda_hat) << "\n"
                  << "order," << basis.order << "\n"
                  << "J," << J << "\n";
             }));
  log << "lambda_hat = " << format_double(lam.lambda_hat) << ", J = " << J << "\n";
  return 0;
}

inline bool any_failed(const std::vector<BoundReport>& rows)
{
  for (const auto& r : rows)
    if (r.verdict == Verdict::fail)
      return true;
  return false;
}

} // namespace cli_detail

//! Runs one subcommand. 0 on success, 2 when a bound check failed, 1 on
//! any error (message on err).
inline int run(const RunConfig& rc, std::ostream& log, std::ostream& err)
{
  namespace fs = std::filesystem;
  using namespace cli_detail;
  try {
    static const std::set<std::string> subs = { "simulate", "estimate", "bench", "check-bounds", "diagnose" };
    if (!subs.count(rc.subcommand))
      throw std::runtime_error("unknown subcommand '" + rc.subcommand + "'");
    std::ifstream in(rc.config_path, std::ios::binary);
    if (!in)
      throw std::runtime_error("cannot read config " + rc.config_path);
    std::stringstream text;
    text << in.rdbuf();
    ParsedConfig cfg = parse_config(text.str());
    if (rc.seed)
      cfg.plan.seed = *rc.seed;
    if (int w = resolve_workers(rc.workers); rc.workers > 0 || std::getenv("LEVYEST_WORKERS"))
      cfg.plan.workers = w;
    cfg.plan.workers = std::max(1, cfg.plan.workers);

    fs::path out(rc.out_dir);
    fs::create_directories(out);
    write_file(out / "resolved_config", serialize_config(cfg));
    const auto& plan = cfg.plan;

    if (rc.subcommand == "simulate") {
      dump_samples(plan, cfg.dump_replicates, out);
      log << "wrote samples for " << plan.grid.size() << " cells\n";
      return 0;
    }
    if (rc.subcommand == "estimate")
      return estimate(cfg, out, log);
    if (rc.subcommand == "diagnose") {
      auto rows = run_h1_h2_diagnostics(plan);
      write_file(out / "diagnostics.csv", render([&](std::ostream& os) { write_diagnostics_csv(os, rows); }));
      log << "wrote " << rows.size() << " diagnostic rows\n";
      return 0;
    }
    if (rc.subcommand == "check-bounds") {
      auto rows = run_bound_suite(plan);
      write_file(out / "bounds.csv", render([&](std::ostream& os) { write_bounds_csv(os, rows); }));
      for (const auto& r : rows)
        log << to_string(r.verdict) << "  " << r.name << (r.note.empty() ? "" : "  (" + r.note + ")") << "\n";
      return any_failed(rows) ? 2 : 0;
    }
    // bench
    auto rep = run_convergence_study(plan);
    auto rows = rep.bounds;
    auto suite = run_bound_suite(plan);
    rows.insert(rows.end(), suite.begin(), suite.end());
    write_file(out / "risk.csv", render([&](std::ostream& os) { write_risk_csv(os, rep); }));
    write_file(out / "slopes.csv", render([&](std::ostream& os) { write_slopes_csv(os, rep); }));
    write_file(out / "bounds.csv", render([&](std::ostream& os) { write_bounds_csv(os, rows); }));
    if (rc.dump_samples) {
      fs::create_directories(out / "samples");
      dump_samples(plan, 1, out / "samples");
    }
    for (const auto& s : rep.slopes)
      log << s.target << ": slope " << format_double(s.slope) << " (theory " << format_double(s.theory_slope)
          << ")\n";
    for (const auto& r : rows)
      if (r.verdict == Verdict::fail)
        log << "failed bound: " << r.name << "\n";
    return any_failed(rows) ? 2 : 0;
  } catch (const std::exception& e) {
    err << "levyest: " << e.what() << "\n";
    return 1;
  }
}

} // namespace levyest
