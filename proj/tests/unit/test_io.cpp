#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "psf/errors.hpp"
#include "psf/io.hpp"

using namespace psf;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string golden(const std::string& name) { return read_file(std::filesystem::path(PSF_GOLDEN_DIR) / name); }

// A tiny hand-made report on a 2x2 grid so the serialised form can be frozen.
SafetyReport small_report() {
  SafetyReport r;
  r.epsilon = 0.75;
  r.seed = 7;
  r.probe_budget = 1;
  r.probes_used = 1;
  Evaluation p;
  p.label = "p";
  p.nominal = {0.5, 0.75};
  EventResult e;
  e.event = {3, Cause::Contact, 0.5};
  e.field.event_id = e.event.id();
  e.field.n_mass = 2;
  e.field.n_friction = 2;
  e.field.combined = {0.25, 0.5, 0.75, 1.0};
  e.field.contact = {0.25, 0.5, 0.75, 1.0};
  e.field.motor = {0.125, 0.125, 0.125, 1.0};
  e.field.failed = {0, 0, 0, 1};
  e.score = 0.8;
  e.safe = false;
  p.events.push_back(e);
  p.decision = Decision::Probe;
  r.rounds.push_back(p);
  Evaluation q = p;
  q.label = "p_prime";
  q.fresh_dense = false;
  q.events[0].score = 0.5;
  q.events[0].safe = true;
  q.decision = Decision::RollOut;
  r.rounds.push_back(q);
  Evaluation u;
  u.label = "p_prime_2";
  u.nominal_unsafe_step = 12;
  u.nominal_unsafe_reason = "nominal factor of safety reaches 1 at step 12";
  u.decision = Decision::Fallback;
  r.rounds.push_back(u);
  r.decision = Decision::RollOut;
  r.timings = {{"p.dense", 0.5}, {"total", 1.0}};
  return r;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config yields the defaults") {
  const RunConfig rc = parse_config("{}");
  CHECK(rc.output_dir == "psf_out");
  CHECK(rc.filter.grid_n == 48);
  CHECK(rc.filter.epsilon == 0.75);
  CHECK(rc.filter.scenario == HandoverConfig{});
  CHECK(rc.filter.distribution == DistributionSpec{});
  CHECK(rc.filter.probe_budget == 1);
}

TEST_CASE("dump and parse round-trip") {
  RunConfig rc;
  rc.output_dir = "elsewhere";
  rc.filter.epsilon = 0.6;
  rc.filter.grid_n = 16;
  rc.filter.scenario.lift_gain = 12.5;
  rc.filter.distribution.sigma = {0.3, 0.1};
  rc.filter.sparse.workers = 4;
  rc.filter.sparse.aggregation = MotorAggregation::Min;
  rc.filter.seed = 123456789012345ULL;
  const std::string text = dump_config(rc);
  const RunConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.filter.scenario == rc.filter.scenario);
  CHECK(back.filter.distribution == rc.filter.distribution);
  CHECK(back.filter.sparse.aggregation == MotorAggregation::Min);
  CHECK(back.filter.seed == 123456789012345ULL);
}

TEST_CASE("shipped default config matches the built-in defaults") {
  const RunConfig rc = load_config(std::filesystem::path(PSF_CONFIG_DIR) / "default.json");
  CHECK(dump_config(rc) == dump_config(RunConfig{}));
}

TEST_CASE("out-of-range value names the field and its line") {
  const std::string text = "{\n  \"grid\": {\"n\": 8},\n  \"safety\": {\n    \"epsilon\": 1.5\n  }\n}\n";
  CHECK(error_of(text) == "cfg.json:4: safety.epsilon must lie in (0, 1]");
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(e.field() == "safety.epsilon");
  }
}

TEST_CASE("unknown keys are rejected with their line") {
  CHECK(error_of("{\n\"scenario\": {\n  \"dt\": 0.01,\n  \"dtt\": 0.02\n}}") ==
        "cfg.json:4: scenario.dtt is not a recognised key");
  CHECK(error_of("{\"bogus\": 1}") == "cfg.json:1: bogus is not a recognised key");
}

TEST_CASE("type errors and array elements are located") {
  CHECK(error_of("{\"sparse\": {\"workers\": 2.5}}") == "cfg.json:1: sparse.workers must be an integer");
  CHECK(error_of("{\n\"scenario\": {\"box_size\": [\n 0.06,\n -1]}}") ==
        "cfg.json:4: scenario.box_size[1] must be positive");
  CHECK(error_of("{\"safety\": {\"motor_aggregation\": \"mean\"}}") ==
        "cfg.json:1: safety.motor_aggregation must be \"max\" or \"min\"");
  CHECK(error_of("{\"grid\": 3}") == "cfg.json:1: grid must be an object");
}

TEST_CASE("malformed JSON reports the line") {
  const std::string msg = error_of("{\n  \"grid\": {\"n\": 8},\n  \"safety\": {\"epsilon\": }\n}");
  CHECK(msg.rfind("cfg.json:3: malformed JSON", 0) == 0);
}

TEST_CASE("cross-field scenario rules map back to a line") {
  const std::string msg = error_of("{\n\"scenario\": {\n\"horizon\": 10,\n\"link_length\": 0\n}}");
  CHECK(msg.rfind("cfg.json:4: scenario.link_length", 0) == 0);
}

TEST_CASE("distribution checks") {
  CHECK(error_of("{\"distribution\": {\"sigma\": {\"mass\": 0}}}") ==
        "cfg.json:1: distribution.sigma.mass must be positive");
  CHECK(error_of("{\"distribution\": {\"mean\": {\"mass\": 5}}}") ==
        "cfg.json:1: distribution.mean lies outside the domain");
  CHECK(error_of("{\"distribution\": {\"domain\": {\"mass\": [2, 1]}}}") ==
        "cfg.json:1: distribution.domain.mass needs lower < upper");
  CHECK(error_of("{\"version\": 2}") == "cfg.json:1: version is not a supported version");
}

TEST_CASE("missing config file is a config error") {
  CHECK_THROWS_AS(load_config("/nonexistent/psf.json"), ConfigError);
}

TEST_CASE("output directory precedence: flag over environment over file") {
  RunConfig rc;
  rc.output_dir = "from_file";
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir(rc) == "from_file");
  ::setenv(kOutputDirEnv, "from_env", 1);
  CHECK(resolve_output_dir(rc) == "from_env");
  CHECK(resolve_output_dir(rc, "from_flag") == "from_flag");
  ::unsetenv(kOutputDirEnv);
}

TEST_CASE("report, scores and field serialisations match the frozen files") {
  const SafetyReport r = small_report();
  CHECK(report_json(r) == golden("report_small.json"));
  CHECK(scores_csv(r) == golden("scores_small.csv"));
  DistributionSpec spec;
  const ParamGrid grid = make_grid(spec, 2, 2);
  CHECK(field_csv(r.rounds[0].events[0].field, grid) == golden("field_small.csv"));
}

TEST_CASE("timings stay out of the report") {
  SafetyReport a = small_report();
  SafetyReport b = a;
  b.timings = {{"p.dense", 99.0}};
  CHECK(report_json(a) == report_json(b));
  CHECK(timings_json(a) != timings_json(b));
  CHECK(timings_json(a).find("\"total\": 1.0") != std::string::npos);
}

TEST_CASE("field file names are filesystem-safe") {
  const SafetyReport r = small_report();
  CHECK(field_file_name(r.rounds[1], r.rounds[1].events[0].event) == "fos_field_p_prime_contact_3.csv");
}

TEST_CASE("report summary") {
  const std::string s = summarize_report(report_json(small_report()));
  CHECK(s.find("decision: rollout (exit 0)") != std::string::npos);
  CHECK(s.find("round p_prime") != std::string::npos);
  CHECK(s.find("[re-weighted]") != std::string::npos);
  CHECK(s.find("nominal unsafe") != std::string::npos);
  CHECK_THROWS_AS(summarize_report("{"), InvalidArgument);
  CHECK_THROWS_AS(summarize_report("{}"), InvalidArgument);
}

TEST_CASE("field CSV rejects mismatched grids") {
  const SafetyReport r = small_report();
  CHECK_THROWS_AS(field_csv(r.rounds[0].events[0].field, make_grid(DistributionSpec{}, 3, 3)), InvalidArgument);
}

TEST_CASE("rollout artifacts: one row per transition") {
  HandoverConfig cfg;
  cfg.horizon = 30;
  const WorldParams theta{0.25, 0.5};
  const HandoverWorld world = build_handover(theta, cfg);
  const Trajectory t = dense_rollout(cfg, theta, {MotorAggregation::Max, false});
  const std::string csv = trajectory_csv(world, t);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("step,time,box_x,box_z,box_angle,box_vx,box_vz,box_omega,box_ax,box_az,box_alpha,", 0) == 0);
  CHECK(header.find("giving_lift_effort,giving_lift_limit,giving_lift_ratio") != std::string::npos);
  CHECK(header.find(",fos_contact,fos_motor,fos_combined,reward") != std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 30);
  CHECK(trajectory_meta_json(world, t).find("\"horizon\": 30") != std::string::npos);
}

TEST_CASE("filter artifacts land in the output directory") {
  RunConfig rc;
  rc.filter.grid_n = 4;
  rc.filter.epsilon = 1.0;
  const SafetyReport r = filter_run(rc.filter);
  const auto dir = std::filesystem::temp_directory_path() / "psf_io_test_artifacts";
  std::filesystem::remove_all(dir);
  write_filter_artifacts(r, rc, dir);
  CHECK(read_file(dir / "report.json") == report_json(r));
  CHECK(std::filesystem::exists(dir / "scores.csv"));
  CHECK(std::filesystem::exists(dir / "timings.json"));
  CHECK(parse_config(read_file(dir / "config.json")).filter.grid_n == 4);
  for (const auto& e : r.rounds[0].events) CHECK(std::filesystem::exists(dir / field_file_name(r.rounds[0], e.event)));
  std::filesystem::remove_all(dir);
}
