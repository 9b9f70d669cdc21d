#pragma once

// Dense nominal rollout, critical-transition selection, parallel sparse
// re-evaluation over the parameter grid, scoring and the probe/fallback
// decision.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psf/safety.hpp"
#include "psf/scenario.hpp"
#include "psf/uncertainty.hpp"

namespace psf {

struct Trajectory {
  WorldParams theta;
  std::vector<SystemState> states;       // H + 1
  std::vector<Eigen::VectorXd> controls; // H
  std::vector<FosSample> fos;            // H + 1, fos[k] evaluated on states[k]
  std::vector<int> rewards;              // H + 1

  long horizon() const { return static_cast<long>(controls.size()); }
};

struct RolloutOptions {
  MotorAggregation aggregation = MotorAggregation::Max;
  // Abort with NominalUnsafe when the combined FOS reaches 1 or the task fails.
  bool abort_if_unsafe = true;
};

// Rolls the scripted policy for config.horizon steps at theta.
Trajectory dense_rollout(const HandoverConfig& config, const WorldParams& theta, const RolloutOptions& options = {},
                         const ParamDomain& domain = {});

enum class Cause { Contact, Motor };
const char* to_string(Cause cause);

// Transition c -> c + 1, ranked by the cause's FOS at state c + 1.
struct CriticalEvent {
  long step = 0;
  Cause cause = Cause::Contact;
  double nominal_fos = 0.0;

  std::string id() const;
  bool operator==(const CriticalEvent&) const = default;
};

struct SelectionOptions {
  int per_cause = 1;
  int window = 50;
};

// Per cause, the top-k transitions at least `window` steps apart; ties go to
// the earlier step. Contact events first, then motor, each by rank.
std::vector<CriticalEvent> select_critical(const Trajectory& trajectory, const SelectionOptions& options = {});

struct SparseOptions {
  int workers = 1;
  // Transitions simulated per grid point; the field keeps the worst one.
  int burst_steps = 1;
  MotorAggregation aggregation = MotorAggregation::Max;
};

// Re-simulates transition event.step from the nominal state for every grid
// point. Deterministic for any worker count.
FosField sparse_evaluate(const HandoverWorld& world, const Trajectory& trajectory, const CriticalEvent& event,
                         const ParamGrid& grid, const SparseOptions& options = {});

enum class Decision { RollOut, Probe, Fallback };
const char* to_string(Decision decision);

struct ProbeThresholds {
  double sigma_mass = 0.2;
  double sigma_friction = 0.25;
};

bool large_uncertainty(const DistributionSpec& spec, const ProbeThresholds& thresholds = {});

struct EventResult {
  CriticalEvent event;
  FosField field;
  double score = 0.0;
  bool safe = false;
};

// One pass of the decision procedure under a single distribution.
struct Evaluation {
  std::string label;
  DistributionSpec spec;
  WorldParams nominal;
  // False when the fields of the previous pass were re-weighted.
  bool fresh_dense = true;
  std::optional<long> nominal_unsafe_step;
  std::string nominal_unsafe_reason;
  std::vector<EventResult> events;
  Decision decision = Decision::Fallback;
};

// Scores every event with `weights` and decides.
Evaluation evaluate_events(const std::vector<CriticalEvent>& events, std::vector<FosField> fields,
                           const std::vector<double>& weights, const DistributionSpec& spec, double epsilon,
                           const ProbeThresholds& thresholds = {});

struct ProbeDefinition {
  WorldParams mean{0.2, 0.8};
  WorldParams sigma{0.1, 0.2};
};

struct FilterConfig {
  HandoverConfig scenario{};
  DistributionSpec distribution{};
  int grid_n = 48;
  double epsilon = 0.75;
  SelectionOptions selection{};
  ProbeDefinition probe{};
  int probe_budget = 1;
  ProbeThresholds probe_thresholds{};
  NominalTolerance nominal_tolerance{};
  SparseOptions sparse{};
  std::uint64_t seed = 0;
};

struct SafetyReport {
  double epsilon = 0.75;
  std::uint64_t seed = 0;
  int probe_budget = 1;
  int probes_used = 0;
  bool probe_exhausted = false;
  std::vector<Evaluation> rounds;
  Decision decision = Decision::Fallback;
  // Wall-clock seconds per stage; kept out of the deterministic report.
  std::vector<std::pair<std::string, double>> timings;
};

SafetyReport filter_run(const FilterConfig& config);

// Exit status: 0 roll out, 2 fallback, 3 fallback after spending the probe budget.
int exit_code(const SafetyReport& report);

}  // namespace psf
