// psf: command-line front end for rollouts, the safety filter and the
// real-time budget.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>

#include "psf/io.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string out;
};

psf::RunConfig load(const Common& c) {
  psf::RunConfig rc = c.config_path.empty() ? psf::RunConfig{} : psf::load_config(c.config_path);
  if (c.workers) {
    if (*c.workers < 1) throw psf::InvalidArgument("--workers must be at least 1");
    rc.filter.sparse.workers = *c.workers;
  }
  if (c.seed) rc.filter.seed = *c.seed;
  return rc;
}

void add_common(CLI::App* cmd, Common& c, bool with_workers) {
  cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  if (with_workers) cmd->add_option("--workers", c.workers, "sparse evaluation threads");
  cmd->add_option("--seed", c.seed, "recorded in the report");
  cmd->add_option("--out", c.out, "output directory (overrides config and PSF_OUTPUT_DIR)");
}

int run_rollout(const Common& c, std::optional<double> mass, std::optional<double> friction) {
  const psf::RunConfig rc = load(c);
  psf::WorldParams theta = psf::nominal(rc.filter.distribution);
  if (mass) theta.mass = *mass;
  if (friction) theta.friction = *friction;
  const psf::HandoverWorld world = psf::build_handover(theta, rc.filter.scenario, rc.filter.distribution.domain);
  const psf::Trajectory t =
      psf::dense_rollout(rc.filter.scenario, theta, {rc.filter.sparse.aggregation, false}, rc.filter.distribution.domain);
  const auto dir = psf::resolve_output_dir(rc, c.out);
  psf::write_rollout_artifacts(world, t, dir);
  double peak = 0.0;
  for (const auto& f : t.fos) peak = std::max(peak, f.combined);
  std::cout << "rollout at mass " << theta.mass << " kg, friction " << theta.friction << ": " << t.horizon()
            << " steps, final reward mode " << t.rewards.back() << ", peak inverse FOS " << peak << "\n"
            << "wrote " << (dir / "trajectory.csv").string() << "\n";
  return 0;
}

int run_filter(const Common& c) {
  const psf::RunConfig rc = load(c);
  const psf::SafetyReport report = psf::filter_run(rc.filter);
  const auto dir = psf::resolve_output_dir(rc, c.out);
  psf::write_filter_artifacts(report, rc, dir);
  std::cout << psf::summarize_report(psf::report_json(report)) << "wrote " << (dir / "report.json").string() << "\n";
  return psf::exit_code(report);
}

int run_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw psf::InvalidArgument("cannot open " + path);
  std::cout << psf::summarize_report({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-based safety filter for a planar box handover"};
  app.require_subcommand(1);

  Common common;
  std::optional<double> mass, friction;
  auto* rollout = app.add_subcommand("rollout", "dense rollout; writes trajectory.csv and trajectory_meta.json");
  add_common(rollout, common, false);
  rollout->add_option("--mass", mass, "box mass [kg], default the distribution's nominal");
  rollout->add_option("--friction", friction, "pad friction, default the distribution's nominal");

  auto* filter = app.add_subcommand("filter", "full safety filter; writes report.json, scores.csv and field CSVs");
  add_common(filter, common, true);

  psf::FeasibilityInput feas;
  auto* feasibility = app.add_subcommand("feasibility", "rollouts per second a compute budget allows");
  feasibility->add_option("--tau", feas.tau, "simulation speed over real time")->capture_default_str();
  feasibility->add_option("--threads", feas.threads, "parallel threads K")->capture_default_str();
  feasibility->add_option("--alpha", feas.alpha, "fraction of transitions sparsely evaluated")->capture_default_str();
  feasibility->add_option("--penalty", feas.sequential_penalty, "sequential penalty >= 1")->capture_default_str();
  feasibility->add_option("--overhead", feas.overhead, "fraction of compute lost, in [0, 1)")->capture_default_str();

  std::string report_path;
  auto* report = app.add_subcommand("report", "pretty-print a report.json");
  report->add_option("path", report_path, "report.json to summarise")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*rollout) return run_rollout(common, mass, friction);
    if (*filter) return run_filter(common);
    if (*feasibility) {
      std::cout << psf::feasibility_table(feas);
      return 0;
    }
    return run_report(report_path);
  } catch (const std::exception& e) {
    std::cerr << "psf: error: " << e.what() << "\n";
    return 1;
  }
}
