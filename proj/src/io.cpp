#include "transdim/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace transdim::io {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw FormatError(section + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw FormatError(section + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
  }
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_samples(std::ostream& os, const SampleSet& samples) {
  json header = {{"format_version", kFormatVersion},
                 {"meta",
                  {{"seed", samples.meta.seed},
                   {"n_sweeps", samples.meta.n_sweeps},
                   {"burn_in", samples.meta.burn_in},
                   {"thinning", samples.meta.thinning}}}};
  os << header.dump() << '\n';
  for (const auto& s : samples.samples) {
    json line = {{"i", s.iteration}, {"k", s.k()}, {"theta", s.theta}};
    os << line.dump() << '\n';
  }
}

SampleSet read_samples(std::istream& is) {
  SampleSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json j = parse_line(line, lineno);
    if (j.contains("format_version")) {
      if (j.at("format_version").get<int>() != kFormatVersion) throw FormatError("unsupported format_version");
      if (j.contains("meta")) {
        const auto& m = j.at("meta");
        read_opt(m, "seed", out.meta.seed);
        read_opt(m, "n_sweeps", out.meta.n_sweeps);
        read_opt(m, "burn_in", out.meta.burn_in);
        read_opt(m, "thinning", out.meta.thinning);
      }
      continue;
    }
    VariableDimSample s;
    try {
      s.iteration = j.value("i", std::size_t{0});
      s.theta = j.at("theta").get<std::vector<double>>();
      if (j.contains("k") && j.at("k").get<std::size_t>() != s.theta.size()) {
        throw FormatError("line " + std::to_string(lineno) + ": k does not match theta length");
      }
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      validate(s);
    } catch (const std::domain_error& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

json model_to_json(const SummaryModel& model) {
  json comps = json::array();
  for (const auto& c : model.components) comps.push_back({{"mu", c.mu}, {"s2", c.s2}, {"pi", c.pi}});
  return {{"format_version", kFormatVersion},
          {"components", comps},
          {"eta", model.eta},
          {"theta_volume", model.theta_volume}};
}

SummaryModel model_from_json(const json& j) {
  SummaryModel m;
  try {
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("mu").get<double>(), c.at("s2").get<double>(), c.at("pi").get<double>()});
    }
    m.eta = j.at("eta").get<double>();
    read_opt(j, "theta_volume", m.theta_volume);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  try {
    validate(m);
  } catch (const std::domain_error& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  return m;
}

void write_signal_csv(std::ostream& os, const Eigen::VectorXd& y) {
  for (Eigen::Index t = 0; t < y.size(); ++t) os << format_double(y[t]) << '\n';
}

Eigen::VectorXd read_signal_csv(std::istream& is) {
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t\r");
    double v = 0.0;
    const auto res = std::from_chars(line.data() + first, line.data() + last + 1, v);
    if (res.ec != std::errc{} || res.ptr != line.data() + last + 1) {
      throw FormatError("signal csv line " + std::to_string(lineno) + ": not a number");
    }
    values.push_back(v);
  }
  if (values.empty()) throw FormatError("signal csv is empty");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json acceptance_to_json(const AcceptanceReport& report) {
  auto stat = [](const MoveStats& s) {
    return json{{"proposed", s.proposed}, {"accepted", s.accepted}, {"rate", s.rate()}};
  };
  return {{"format_version", kFormatVersion},
          {"birth", stat(report.birth)},
          {"death", stat(report.death)},
          {"update", stat(report.update)},
          {"delta2", stat(report.delta2)}};
}

void write_trace_csv(std::ostream& os, const SemTrace& trace) {
  const std::size_t L = trace.initial.L();
  os << "iteration,J";
  for (std::size_t l = 1; l <= L; ++l) os << ",mu_" << l << ",s_" << l << ",pi_" << l;
  os << ",eta\n";
  for (std::size_t r = 0; r < trace.iterations.size(); ++r) {
    const auto& it = trace.iterations[r];
    os << (r + 1) << ',' << format_double(it.criterion);
    for (const auto& c : it.model.components) {
      os << ',' << format_double(c.mu) << ',' << format_double(std::sqrt(c.s2)) << ',' << format_double(c.pi);
    }
    os << ',' << format_double(it.model.eta) << '\n';
  }
}

void write_allocations(std::ostream& os, const SampleSet& samples, std::span<const Allocation> allocations) {
  if (allocations.size() != samples.size()) throw std::invalid_argument("write_allocations: misaligned");
  for (std::size_t i = 0; i < allocations.size(); ++i) {
    os << json{{"i", samples.samples[i].iteration}, {"z", allocations[i]}}.dump() << '\n';
  }
}

std::vector<Allocation> read_allocations(std::istream& is) {
  std::vector<Allocation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      out.push_back(parse_line(line, lineno).at("z").get<Allocation>());
    } catch (const json::exception& e) {
      throw FormatError("allocations line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_table(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "component,mu,s,pi,mu_bms,s_bms\n";
  for (const auto& r : rows) {
    os << r.component << ',' << format_double(r.fitted.mu) << ',' << format_double(std::sqrt(r.fitted.s2)) << ','
       << format_double(r.fitted.pi) << ',';
    if (r.has_bms) {
      os << format_double(r.bms.mu) << ',' << format_double(r.bms.s);
    } else {
      os << "-,-";
    }
    os << '\n';
  }
}

void write_intensities(std::ostream& os, const Histogram& bma, const Histogram& background, const SummaryModel& model) {
  if (bma.bins() != background.bins()) throw std::invalid_argument("write_intensities: bin counts differ");
  os << "bin_center,bma,background,mixture_pdf\n";
  for (std::size_t b = 0; b < bma.bins(); ++b) {
    const double c = bma.center(b);
    os << format_double(c) << ',' << format_double(bma.values[b]) << ',' << format_double(background.values[b]) << ','
       << format_double(mixture_intensity(model, c)) << '\n';
  }
}

SamplerConfig sampler_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"n_sweeps", "burn_in", "thinning", "k_max", "lambda_k", "delta2", "adapt_delta2", "rw_scale",
                       "periodogram_grid", "seed"},
                      "sampler");
  SamplerConfig c;
  try {
    read_opt(j, "n_sweeps", c.n_sweeps);
    read_opt(j, "burn_in", c.burn_in);
    read_opt(j, "thinning", c.thinning);
    read_opt(j, "k_max", c.k_max);
    read_opt(j, "lambda_k", c.lambda_k);
    read_opt(j, "delta2", c.delta2);
    read_opt(j, "adapt_delta2", c.adapt_delta2);
    read_opt(j, "rw_scale", c.rw_scale);
    read_opt(j, "periodogram_grid", c.periodogram_grid);
    read_opt(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("sampler: ") + e.what());
  }
  return c;
}

json sampler_config_to_json(const SamplerConfig& c) {
  return {{"n_sweeps", c.n_sweeps}, {"burn_in", c.burn_in},     {"thinning", c.thinning},
          {"k_max", c.k_max},       {"lambda_k", c.lambda_k},   {"delta2", c.delta2},
          {"adapt_delta2", c.adapt_delta2}, {"rw_scale", c.rw_scale}, {"periodogram_grid", c.periodogram_grid},
          {"seed", c.seed}};
}

SemConfig sem_config_from_json(const json& j) {
  reject_unknown_keys(j, {"n_iterations", "init_percentile", "inner_imh_steps", "seed", "averaging_window", "s_min"},
                      "sem");
  SemConfig c;
  try {
    read_opt(j, "n_iterations", c.n_iterations);
    read_opt(j, "init_percentile", c.init_percentile);
    read_opt(j, "inner_imh_steps", c.inner_imh_steps);
    read_opt(j, "seed", c.seed);
    read_opt(j, "averaging_window", c.averaging_window);
    read_opt(j, "s_min", c.s_min);
  } catch (const json::exception& e) {
    throw FormatError(std::string("sem: ") + e.what());
  }
  return c;
}

json sem_config_to_json(const SemConfig& c) {
  return {{"n_iterations", c.n_iterations}, {"init_percentile", c.init_percentile},
          {"inner_imh_steps", c.inner_imh_steps}, {"seed", c.seed},
          {"averaging_window", c.averaging_window}, {"s_min", c.s_min}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace transdim::io
