#pragma once

#include <Eigen/Core>
#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "transdim/core_model.hpp"
#include "transdim/report.hpp"
#include "transdim/sem.hpp"
#include "transdim/sinusoids.hpp"

namespace transdim::io {

inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that parses back to exactly v.
[[nodiscard]] std::string format_double(double v);

// Posterior draws: one header line {"format_version":1,"meta":{...}} then one
// {"i":..,"k":..,"theta":[..]} object per line. The header is optional on read.
void write_samples(std::ostream& os, const SampleSet& samples);
[[nodiscard]] SampleSet read_samples(std::istream& is);

[[nodiscard]] nlohmann::json model_to_json(const SummaryModel& model);
[[nodiscard]] SummaryModel model_from_json(const nlohmann::json& j);

/// One value per line.
void write_signal_csv(std::ostream& os, const Eigen::VectorXd& y);
[[nodiscard]] Eigen::VectorXd read_signal_csv(std::istream& is);

[[nodiscard]] nlohmann::json acceptance_to_json(const AcceptanceReport& report);

/// iteration,J,mu_1,s_1,pi_1,...,eta
void write_trace_csv(std::ostream& os, const SemTrace& trace);

/// {"i":..,"z":[..]} per line; i is the sample's chain iteration.
void write_allocations(std::ostream& os, const SampleSet& samples, std::span<const Allocation> allocations);
[[nodiscard]] std::vector<Allocation> read_allocations(std::istream& is);

/// component,mu,s,pi,mu_bms,s_bms with "-" where a component has no BMS slot.
void write_summary_table(std::ostream& os, std::span<const SummaryRow> rows);

/// bin_center,bma,background,mixture_pdf
void write_intensities(std::ostream& os, const Histogram& bma, const Histogram& background, const SummaryModel& model);

// Config sections. Missing keys keep their defaults; unknown keys are rejected.
[[nodiscard]] SamplerConfig sampler_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json sampler_config_to_json(const SamplerConfig& c);
[[nodiscard]] SemConfig sem_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json sem_config_to_json(const SemConfig& c);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace transdim::io
