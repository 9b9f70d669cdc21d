#include "psf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "psf/errors.hpp"

namespace psf {

Trajectory dense_rollout(const HandoverConfig& config, const WorldParams& theta, const RolloutOptions& options,
                         const ParamDomain& domain) {
  const HandoverWorld world = build_handover(theta, config, domain);
  const int H = config.horizon;
  Trajectory t;
  t.theta = theta;
  t.states.reserve(static_cast<std::size_t>(H) + 1);
  t.controls.reserve(static_cast<std::size_t>(H));
  t.states.push_back(world.initial);
  t.rewards.push_back(reward(world, world.initial, 0));
  t.fos.push_back(handover_fos(world, world.initial, t.rewards.back(), options.aggregation));
  for (int k = 0; k < H; ++k) {
    t.controls.push_back(scripted_policy(world, t.states.back(), k));
    t.states.push_back(step(world.system, t.states.back(), t.controls.back(), theta, config.dt));
    t.rewards.push_back(reward(world, t.states.back(), t.rewards.back()));
    t.fos.push_back(handover_fos(world, t.states.back(), t.rewards.back(), options.aggregation));
    if (options.abort_if_unsafe && t.fos.back().combined >= 1.0) {
      throw NominalUnsafe("nominal factor of safety reaches 1 at step " + std::to_string(k + 1), k + 1);
    }
  }
  if (options.abort_if_unsafe && t.rewards.back() != 4) {
    throw NominalUnsafe("nominal rollout ends in reward mode " + std::to_string(t.rewards.back()) + ", not 4", H);
  }
  return t;
}

const char* to_string(Cause cause) { return cause == Cause::Contact ? "contact" : "motor"; }

std::string CriticalEvent::id() const { return std::string(to_string(cause)) + "_" + std::to_string(step); }

std::vector<CriticalEvent> select_critical(const Trajectory& trajectory, const SelectionOptions& options) {
  if (options.per_cause < 0 || options.window < 0) throw InvalidArgument("selection options must be non-negative");
  const long H = trajectory.horizon();
  std::vector<CriticalEvent> out;
  if (H < options.window || H == 0) return out;
  for (Cause cause : {Cause::Contact, Cause::Motor}) {
    auto value = [&](long c) {
      const FosSample& f = trajectory.fos[static_cast<std::size_t>(c + 1)];
      return cause == Cause::Contact ? f.contact : f.motor;
    };
    std::vector<long> order(static_cast<std::size_t>(H));
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(), [&](long a, long b) { return value(a) > value(b); });
    std::vector<long> chosen;
    for (long c : order) {
      if (static_cast<int>(chosen.size()) >= options.per_cause) break;
      const bool clear = std::all_of(chosen.begin(), chosen.end(),
                                     [&](long o) { return std::abs(o - c) >= options.window; });
      if (clear) chosen.push_back(c);
    }
    for (long c : chosen) out.push_back({c, cause, value(c)});
  }
  return out;
}

FosField sparse_evaluate(const HandoverWorld& world, const Trajectory& trajectory, const CriticalEvent& event,
                         const ParamGrid& grid, const SparseOptions& options) {
  if (event.step < 0 || event.step >= trajectory.horizon()) throw InvalidArgument("event step outside the trajectory");
  if (grid.points.size() != static_cast<std::size_t>(grid.n_mass) * static_cast<std::size_t>(grid.n_friction)) {
    throw InvalidArgument("grid dimensions do not match its points");
  }
  if (options.burst_steps < 1) throw InvalidArgument("burst_steps must be at least 1");
  const std::size_t n = grid.size();
  FosField field;
  field.event_id = event.id();
  field.n_mass = grid.n_mass;
  field.n_friction = grid.n_friction;
  field.combined.assign(n, 0.0);
  field.contact.assign(n, 0.0);
  field.motor.assign(n, 0.0);
  field.failed.assign(n, 0);

  const auto c = static_cast<std::size_t>(event.step);
  const SystemState& start = trajectory.states[c];
  const Eigen::VectorXd& u0 = trajectory.controls[c];
  const int r0 = trajectory.rewards[c];
  const int bursts = static_cast<int>(std::min<long>(options.burst_steps, trajectory.horizon() - event.step));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&]() {
    // Each worker owns its simulator instance.
    const HandoverWorld local = world;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        SystemState s = start;
        int r = r0;
        FosSample worst;
        for (int b = 0; b < bursts; ++b) {
          const Eigen::VectorXd u = b == 0 ? u0 : scripted_policy(local, s, static_cast<int>(event.step) + b);
          s = step(local.system, s, u, grid.points[i], local.config.dt);
          r = reward(local, s, r);
          const FosSample f = handover_fos(local, s, r, options.aggregation);
          if (b == 0 || f.combined > worst.combined) worst = f;
        }
        field.combined[i] = worst.combined;
        field.contact[i] = worst.contact;
        field.motor[i] = worst.motor;
      } catch (const SolverError&) {
        field.combined[i] = 1.0;
        field.contact[i] = 1.0;
        field.motor[i] = 1.0;
        field.failed[i] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return field;
}

const char* to_string(Decision decision) {
  switch (decision) {
    case Decision::RollOut: return "rollout";
    case Decision::Probe: return "probe";
    case Decision::Fallback: return "fallback";
  }
  return "fallback";
}

bool large_uncertainty(const DistributionSpec& spec, const ProbeThresholds& t) {
  return spec.sigma.mass > t.sigma_mass || spec.sigma.friction > t.sigma_friction;
}

Evaluation evaluate_events(const std::vector<CriticalEvent>& events, std::vector<FosField> fields,
                           const std::vector<double>& weights, const DistributionSpec& spec, double epsilon,
                           const ProbeThresholds& thresholds) {
  if (events.size() != fields.size()) throw InvalidArgument("one field per event is required");
  Evaluation e;
  e.spec = spec;
  bool all_safe = true;
  for (std::size_t i = 0; i < events.size(); ++i) {
    EventResult r;
    r.event = events[i];
    r.score = safety_score(fields[i], weights);
    r.safe = is_safe(r.score, epsilon);
    r.field = std::move(fields[i]);
    all_safe = all_safe && r.safe;
    e.events.push_back(std::move(r));
  }
  if (all_safe) {
    e.decision = Decision::RollOut;
  } else {
    e.decision = large_uncertainty(spec, thresholds) ? Decision::Probe : Decision::Fallback;
  }
  return e;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Evaluation fresh_evaluation(const FilterConfig& cfg, const DistributionSpec& spec, const std::string& label,
                            SafetyReport& report) {
  const WorldParams theta = nominal(spec);
  Evaluation e;
  try {
    auto t0 = Clock::now();
    const Trajectory traj = dense_rollout(cfg.scenario, theta, {cfg.sparse.aggregation, true}, spec.domain);
    report.timings.emplace_back(label + ".dense", seconds_since(t0));
    const auto events = select_critical(traj, cfg.selection);
    const ParamGrid grid = make_grid(spec, cfg.grid_n, cfg.grid_n);
    const HandoverWorld world = build_handover(theta, cfg.scenario, spec.domain);
    std::vector<FosField> fields;
    fields.reserve(events.size());
    t0 = Clock::now();
    for (const auto& ev : events) fields.push_back(sparse_evaluate(world, traj, ev, grid, cfg.sparse));
    report.timings.emplace_back(label + ".sparse", seconds_since(t0));
    e = evaluate_events(events, std::move(fields), grid.weights, spec, cfg.epsilon, cfg.probe_thresholds);
  } catch (const NominalUnsafe& ex) {
    e.spec = spec;
    e.nominal_unsafe_step = ex.step();
    e.nominal_unsafe_reason = ex.what();
    e.decision = Decision::Fallback;
  }
  e.label = label;
  e.nominal = theta;
  return e;
}

Evaluation reweighted_evaluation(const FilterConfig& cfg, const Evaluation& previous, const DistributionSpec& spec,
                                 const std::string& label) {
  std::vector<CriticalEvent> events;
  std::vector<FosField> fields;
  for (const auto& r : previous.events) {
    events.push_back(r.event);
    fields.push_back(r.field);
  }
  // The fields depend only on theta, so only the weights change.
  ParamGrid grid = make_grid(previous.spec, cfg.grid_n, cfg.grid_n);
  Evaluation e = evaluate_events(events, std::move(fields), reweight(grid, spec), spec, cfg.epsilon,
                                 cfg.probe_thresholds);
  e.label = label;
  e.nominal = nominal(spec);
  e.fresh_dense = false;
  return e;
}

}  // namespace

SafetyReport filter_run(const FilterConfig& cfg) {
  validate(cfg.scenario);
  validate(cfg.distribution);
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in (0, 1]");
  if (cfg.probe_budget < 0) throw InvalidArgument("probe_budget must be non-negative");
  if (cfg.sparse.workers < 1) throw InvalidArgument("workers must be at least 1");

  SafetyReport report;
  report.epsilon = cfg.epsilon;
  report.seed = cfg.seed;
  report.probe_budget = cfg.probe_budget;

  const auto start = Clock::now();
  DistributionSpec spec = cfg.distribution;
  report.rounds.push_back(fresh_evaluation(cfg, spec, "p", report));
  while (report.rounds.back().decision == Decision::Probe && report.probes_used < cfg.probe_budget) {
    const Evaluation& prev = report.rounds.back();
    const DistributionSpec updated = apply_probe(spec, cfg.probe.mean, cfg.probe.sigma);
    ++report.probes_used;
    const std::string label =
        report.probes_used == 1 ? std::string("p_prime") : "p_prime_" + std::to_string(report.probes_used);
    if (nominal_close(nominal(spec), nominal(updated), cfg.nominal_tolerance) && !prev.events.empty()) {
      report.rounds.push_back(reweighted_evaluation(cfg, prev, updated, label));
    } else {
      report.rounds.push_back(fresh_evaluation(cfg, updated, label, report));
    }
    spec = updated;
  }
  report.timings.emplace_back("total", seconds_since(start));
  report.decision = report.rounds.back().decision;
  if (report.decision == Decision::Probe) {
    report.decision = Decision::Fallback;
    report.probe_exhausted = true;
  }
  return report;
}

int exit_code(const SafetyReport& report) {
  if (report.decision == Decision::RollOut) return 0;
  return report.probe_exhausted ? 3 : 2;
}

}  // namespace psf
