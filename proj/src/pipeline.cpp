#include "transdim/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "transdim/io.hpp"

namespace transdim {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw io::FormatError(section + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw io::FormatError(section + ": unknown key \"" + key + "\"");
  }
}

SinusoidScene scene_from_json(const json& j, std::uint64_t& noise_seed, std::optional<std::filesystem::path>& csv,
                              const std::filesystem::path& base_dir) {
  check_keys(j, {"n", "omegas", "amplitudes", "phases", "coefficients", "snr_db", "noise_seed", "signal_csv"}, "scene");
  SinusoidScene defaults = three_sinusoid_scene();
  const auto n = j.value("n", defaults.n);
  const double snr_db = j.value("snr_db", defaults.snr_db);
  noise_seed = j.value("noise_seed", noise_seed);
  if (j.contains("signal_csv")) {
    std::filesystem::path p = j.at("signal_csv").get<std::string>();
    csv = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (!j.contains("omegas")) {
    defaults.n = n;
    defaults.snr_db = snr_db;
    defaults.validate();
    return defaults;
  }
  auto omegas = j.at("omegas").get<std::vector<double>>();
  if (j.contains("coefficients")) {
    if (j.contains("amplitudes")) throw io::FormatError("scene: give either amplitudes or coefficients");
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    SinusoidScene s;
    s.n = n;
    s.snr_db = snr_db;
    s.omegas = std::move(omegas);
    s.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    s.validate();
    return s;
  }
  const auto amplitudes = j.value("amplitudes", std::vector<double>(omegas.size(), 0.0));
  const auto phases = j.value("phases", std::vector<double>{});
  return SinusoidScene::from_amplitudes(n, std::move(omegas), amplitudes, phases, snr_db);
}

}  // namespace

void PipelineConfig::set_seed(std::uint64_t seed) noexcept {
  noise_seed = seed;
  sampler.seed = seed;
  sem.seed = seed;
}

void PipelineConfig::validate() const {
  scene.validate();
  sampler.validate();
  sem.validate();
  if (bins < 2) throw std::domain_error("report: bins must be >= 2");
}

PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    check_keys(j, {"format_version", "scene", "sampler", "sem", "report", "output_dir"}, "config");
    if (j.contains("format_version") && j.at("format_version").get<int>() != io::kFormatVersion) {
      throw io::FormatError("config: unsupported format_version");
    }
    if (j.contains("scene")) c.scene = scene_from_json(j.at("scene"), c.noise_seed, c.signal_csv, base_dir);
    if (j.contains("sampler")) c.sampler = io::sampler_config_from_json(j.at("sampler"));
    if (j.contains("sem")) c.sem = io::sem_config_from_json(j.at("sem"));
    if (j.contains("report")) {
      check_keys(j.at("report"), {"bins"}, "report");
      c.bins = j.at("report").value("bins", c.bins);
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.validate();
  } catch (const json::exception& e) {
    throw StageError(Stage::config, std::string("config: ") + e.what());
  } catch (const std::exception& e) {
    throw StageError(Stage::config, e.what());
  }
  return c;
}

json pipeline_config_to_json(const PipelineConfig& c) {
  json scene = {{"n", c.scene.n},
                {"omegas", c.scene.omegas},
                {"coefficients", std::vector<double>(c.scene.coefficients.begin(), c.scene.coefficients.end())},
                {"snr_db", c.scene.snr_db},
                {"noise_seed", c.noise_seed}};
  if (c.signal_csv) scene["signal_csv"] = c.signal_csv->string();
  return {{"format_version", io::kFormatVersion},
          {"scene", scene},
          {"sampler", io::sampler_config_to_json(c.sampler)},
          {"sem", io::sem_config_to_json(c.sem)},
          {"report", {{"bins", c.bins}}},
          {"output_dir", c.output_dir.string()}};
}

Eigen::VectorXd make_signal(const PipelineConfig& config) {
  if (config.signal_csv) {
    std::ifstream in(*config.signal_csv);
    if (!in) throw std::runtime_error("cannot open " + config.signal_csv->string());
    return io::read_signal_csv(in);
  }
  return synthesize_signal(config.scene, config.noise_seed);
}

SamplerResult stage_sample(const Eigen::VectorXd& y, const SamplerConfig& config, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  SamplerResult result = run_sampler(y, config);
  std::ostringstream ys, ss;
  io::write_signal_csv(ys, y);
  io::write_samples(ss, result.samples);
  io::write_file(out / "y.csv", ys.str());
  io::write_file(out / "samples.ndjson", ss.str());
  io::write_file(out / "acceptance.json", io::acceptance_to_json(result.acceptance).dump(2) + "\n");
  return result;
}

SemResult stage_fit(const SampleSet& samples, const SemConfig& config, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  SemResult result = run_sem(samples, config);
  std::ostringstream trace, alloc;
  io::write_trace_csv(trace, result.trace);
  io::write_allocations(alloc, samples, result.final_allocations);
  io::write_file(out / "model.json", io::model_to_json(result.model).dump(2) + "\n");
  io::write_file(out / "trace.csv", trace.str());
  io::write_file(out / "allocations.ndjson", alloc.str());
  return result;
}

ReportBundle stage_report(const SampleSet& samples, const SummaryModel& model, const std::vector<Allocation>& allocations,
                          std::size_t bins, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  ReportBundle r;
  r.bms = bms_summary(samples);
  r.bma = bma_intensity(samples, bins);
  r.background = background_intensity(samples, allocations, bins);
  r.rows = summary_table(model, r.bms);
  std::ostringstream table, intens;
  io::write_summary_table(table, r.rows);
  io::write_intensities(intens, r.bma, r.background, model);
  io::write_file(out / "summary_table.csv", table.str());
  io::write_file(out / "intensities.csv", intens.str());
  return r;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw StageError(Stage::config, e.what());
  }
  try {
    result.y = make_signal(config);
    result.sampler = stage_sample(result.y, config.sampler, config.output_dir);
  } catch (const std::exception& e) {
    throw StageError(Stage::sample, e.what());
  }
  try {
    result.sem = stage_fit(result.sampler.samples, config.sem, config.output_dir);
  } catch (const std::exception& e) {
    throw StageError(Stage::fit, e.what());
  }
  try {
    result.report = stage_report(result.sampler.samples, result.sem.model, result.sem.final_allocations, config.bins,
                                 config.output_dir);
  } catch (const std::exception& e) {
    throw StageError(Stage::report, e.what());
  }
  return result;
}

}  // namespace transdim
