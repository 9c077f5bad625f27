// transdim: sample a sinusoid posterior, fit the summary model, report.
//
//   transdim sample   --config cfg.json [--seed N] [--out DIR]
//   transdim fit      --config cfg.json --samples samples.ndjson [--seed N] [--out DIR]
//   transdim report   --config cfg.json --samples samples.ndjson --model model.json
//                     --allocations allocations.ndjson [--out DIR]
//   transdim pipeline --config cfg.json [--seed N] [--out DIR]
//
// TRANSDIM_LOG=error|warn|info|debug controls stderr verbosity (default info).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "transdim/io.hpp"
#include "transdim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace transdim;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
  const char* env = std::getenv("TRANSDIM_LOG");
  if (!env) return Level::info;
  const std::string v = env;
  if (v == "error") return Level::error;
  if (v == "warn") return Level::warn;
  if (v == "debug") return Level::debug;
  return Level::info;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[transdim " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                           const std::optional<std::string>& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const std::exception& e) {
    throw StageError(Stage::config, std::string("config: ") + e.what());
  }
  PipelineConfig c = pipeline_config_from_json(j, fs::path(path).parent_path());
  if (seed) c.set_seed(*seed);
  if (out) c.output_dir = *out;
  return c;
}

template <typename Fn>
auto in_stage(Stage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

SampleSet load_samples(const std::string& path, Stage stage) {
  return in_stage(stage, [&] {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return io::read_samples(in);
  });
}

void report_sampler(const SamplerResult& r) {
  log(Level::info, "sampler: " + std::to_string(r.samples.size()) + " draws; acceptance birth " +
                       io::format_double(r.acceptance.birth.rate()) + ", death " +
                       io::format_double(r.acceptance.death.rate()) + ", update " +
                       io::format_double(r.acceptance.update.rate()));
}

void report_fit(const SemResult& r) {
  log(Level::info, "fit: L=" + std::to_string(r.model.L()) + ", eta=" + io::format_double(r.model.eta) +
                       ", final J=" + io::format_double(r.trace.iterations.back().criterion));
  for (const auto& c : r.model.components) {
    log(Level::debug, "  mu=" + io::format_double(c.mu) + " s=" + io::format_double(std::sqrt(c.s2)) +
                          " pi=" + io::format_double(c.pi));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trans-dimensional posterior sampling and summarization"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string samples_path, model_path, allocations_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output_dir)");
  };

  auto* sample = app.add_subcommand("sample", "synthesize or load y and run the RJ-MCMC sampler");
  common(sample);
  sample->add_option("--seed", seed, "seed for noise, sampler and SEM");

  auto* fit = app.add_subcommand("fit", "fit the summary model to a sample file by robust SEM");
  common(fit);
  fit->add_option("--seed", seed, "seed for noise, sampler and SEM");
  fit->add_option("--samples", samples_path, "samples.ndjson")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "write the summary table and intensities");
  common(report);
  report->add_option("--samples", samples_path, "samples.ndjson")->required()->check(CLI::ExistingFile);
  report->add_option("--model", model_path, "model.json")->required()->check(CLI::ExistingFile);
  report->add_option("--allocations", allocations_path, "allocations.ndjson")->required()->check(CLI::ExistingFile);

  auto* pipeline = app.add_subcommand("pipeline", "sample, fit and report in one go");
  common(pipeline);
  pipeline->add_option("--seed", seed, "seed for noise, sampler and SEM");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig config = load_config(config_path, seed, out);
    log(Level::debug, "output directory " + config.output_dir.string());

    if (sample->parsed()) {
      const auto y = in_stage(Stage::sample, [&] { return make_signal(config); });
      report_sampler(in_stage(Stage::sample, [&] { return stage_sample(y, config.sampler, config.output_dir); }));
    } else if (fit->parsed()) {
      const SampleSet samples = load_samples(samples_path, Stage::fit);
      report_fit(in_stage(Stage::fit, [&] { return stage_fit(samples, config.sem, config.output_dir); }));
    } else if (report->parsed()) {
      const SampleSet samples = load_samples(samples_path, Stage::report);
      in_stage(Stage::report, [&] {
        const SummaryModel model = io::model_from_json(nlohmann::json::parse(io::read_file(model_path)));
        std::ifstream in(allocations_path);
        const auto allocations = io::read_allocations(in);
        (void)stage_report(samples, model, allocations, config.bins, config.output_dir);
        return 0;
      });
      log(Level::info, "report written to " + config.output_dir.string());
    } else if (pipeline->parsed()) {
      const PipelineResult r = run_pipeline(config);
      report_sampler(r.sampler);
      report_fit(r.sem);
      log(Level::info, "MAP k=" + std::to_string(r.report.bms.map_k) + ", outputs in " + config.output_dir.string());
    }
  } catch (const StageError& e) {
    log(Level::error, e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    log(Level::error, e.what());
    return 1;
  }
  return 0;
}
