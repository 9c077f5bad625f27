#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "transdim/report.hpp"
#include "transdim/sem.hpp"
#include "transdim/sinusoids.hpp"

namespace transdim {

enum class Stage { config = 2, sample = 3, fit = 4, report = 5 };

/// An error tagged with the pipeline stage that raised it; the CLI maps the
/// stage to its exit code.
class StageError : public std::runtime_error {
public:
  StageError(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}
  [[nodiscard]] Stage stage() const noexcept { return stage_; }
  [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(stage_); }

private:
  Stage stage_;
};

struct PipelineConfig {
  SinusoidScene scene = three_sinusoid_scene();
  std::uint64_t noise_seed = 1;
  /// Observation read from a one-value-per-line file instead of synthesized.
  std::optional<std::filesystem::path> signal_csv;
  SamplerConfig sampler;
  SemConfig sem;
  std::size_t bins = 256;
  std::filesystem::path output_dir = "out";

  /// Sets the noise, sampler and SEM seeds together.
  void set_seed(std::uint64_t seed) noexcept;
  void validate() const;
};

/// Parses {"format_version":1,"scene":{..},"sampler":{..},"sem":{..},"report":{..},"output_dir":".."}.
/// Relative signal_csv paths are resolved against base_dir.
[[nodiscard]] PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                       const std::filesystem::path& base_dir = {});
[[nodiscard]] nlohmann::json pipeline_config_to_json(const PipelineConfig& config);

struct ReportBundle {
  BmsSummary bms;
  Histogram bma;
  Histogram background;
  std::vector<SummaryRow> rows;
};

struct PipelineResult {
  Eigen::VectorXd y;
  SamplerResult sampler;
  SemResult sem;
  ReportBundle report;
};

[[nodiscard]] Eigen::VectorXd make_signal(const PipelineConfig& config);

/// Writes y.csv, samples.ndjson and acceptance.json.
SamplerResult stage_sample(const Eigen::VectorXd& y, const SamplerConfig& config, const std::filesystem::path& out);
/// Writes model.json, trace.csv and allocations.ndjson.
SemResult stage_fit(const SampleSet& samples, const SemConfig& config, const std::filesystem::path& out);
/// Writes summary_table.csv and intensities.csv.
ReportBundle stage_report(const SampleSet& samples, const SummaryModel& model, const std::vector<Allocation>& allocations,
                          std::size_t bins, const std::filesystem::path& out);

/// All stages in order; any failure surfaces as a StageError.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace transdim
