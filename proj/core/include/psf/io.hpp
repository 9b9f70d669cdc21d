#pragma once

// Run configuration and artifact serialisation.

#include <filesystem>
#include <string>

#include "psf/feasibility.hpp"
#include "psf/pipeline.hpp"

namespace psf {

inline constexpr int kConfigVersion = 1;
inline constexpr int kReportVersion = 1;
inline constexpr const char* kOutputDirEnv = "PSF_OUTPUT_DIR";

struct RunConfig {
  FilterConfig filter{};
  std::string output_dir = "psf_out";
};

// Thrown for malformed or out-of-range configuration. `line` is 1-based,
// 0 when the problem is not tied to a line.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& message);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

// Parses a JSON document; every key is optional and defaults to RunConfig{}.
// `source` names the document in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& config);

// Output directory after applying PSF_OUTPUT_DIR, then an explicit override.
std::filesystem::path resolve_output_dir(const RunConfig& config, const std::string& cli_override = "");

// File names for a round's event field.
std::string field_file_name(const Evaluation& round, const CriticalEvent& event);

std::string report_json(const SafetyReport& report);
std::string timings_json(const SafetyReport& report);
std::string scores_csv(const SafetyReport& report);
std::string field_csv(const FosField& field, const ParamGrid& grid);

// Writes report.json, scores.csv, timings.json and one field CSV per event.
void write_filter_artifacts(const SafetyReport& report, const RunConfig& config, const std::filesystem::path& dir);

std::string trajectory_csv(const HandoverWorld& world, const Trajectory& trajectory);
std::string trajectory_meta_json(const HandoverWorld& world, const Trajectory& trajectory);
void write_rollout_artifacts(const HandoverWorld& world, const Trajectory& trajectory,
                             const std::filesystem::path& dir);

// Human-readable summary of a report.json document.
std::string summarize_report(const std::string& report_json_text);

std::string feasibility_table(const FeasibilityInput& input);

}  // namespace psf
