#include "transdim/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace transdim {

BmsSummary bms_summary(const SampleSet& samples, double s_min) {
  if (samples.empty()) throw std::invalid_argument("bms_summary: empty sample set");
  std::map<std::size_t, std::size_t> counts;
  for (const auto& s : samples.samples) ++counts[s.k()];
  BmsSummary out;
  std::size_t best = 0;
  for (const auto& [k, c] : counts) {
    if (c > best) {  // strict: the smaller k keeps a tie
      best = c;
      out.map_k = k;
    }
  }
  out.map_probability = double(best) / double(samples.size());

  std::vector<std::vector<double>> slots(out.map_k);
  for (const auto& s : samples.samples) {
    if (s.k() != out.map_k) continue;
    std::vector<double> sorted = s.theta;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t l = 0; l < out.map_k; ++l) slots[l].push_back(sorted[l]);
  }
  for (const auto& values : slots) {
    if (values.size() < 2) {
      out.slots.push_back({values.front(), s_min});
    } else {
      out.slots.push_back(robust_location_scale(values, s_min));
    }
  }
  return out;
}

std::size_t Histogram::bin_of(double v) const noexcept {
  if (v <= lo) return 0;
  const auto b = static_cast<std::size_t>((v - lo) / width());
  return std::min(b, values.size() - 1);
}

double Histogram::integral() const noexcept {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc * width();
}

Histogram bma_intensity(const SampleSet& samples, std::size_t bins) {
  if (bins < 2) throw std::domain_error("histogram needs at least two bins");
  Histogram h;
  h.values.assign(bins, 0.0);
  if (samples.empty()) return h;
  const double scale = 1.0 / (double(samples.size()) * h.width());
  for (const auto& s : samples.samples) {
    for (double t : s.theta) h.values[h.bin_of(t)] += scale;
  }
  return h;
}

Histogram background_intensity(const SampleSet& samples, std::span<const Allocation> allocations, std::size_t bins) {
  if (bins < 2) throw std::domain_error("histogram needs at least two bins");
  if (allocations.size() != samples.size()) throw std::invalid_argument("background_intensity: misaligned allocations");
  Histogram h;
  h.values.assign(bins, 0.0);
  if (samples.empty()) return h;
  const double scale = 1.0 / (double(samples.size()) * h.width());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& x = samples.samples[i];
    if (allocations[i].size() != x.k()) throw std::invalid_argument("background_intensity: allocation length mismatch");
    for (std::size_t j = 0; j < x.k(); ++j) {
      if (allocations[i][j] == 0) h.values[h.bin_of(x.theta[j])] += scale;
    }
  }
  return h;
}

double mixture_intensity(const SummaryModel& model, double theta) noexcept {
  double acc = 0.0;
  for (const auto& c : model.components) acc += c.pi * std::exp(log_normal_pdf(theta, c.mu, c.s2));
  return acc;
}

std::vector<SummaryRow> summary_table(const SummaryModel& model, const BmsSummary& bms) {
  std::vector<SummaryRow> rows(model.L());
  for (std::size_t l = 0; l < model.L(); ++l) {
    rows[l].component = l + 1;
    rows[l].fitted = model.components[l];
  }
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t l = 0; l < model.L(); ++l) {
    for (std::size_t s = 0; s < bms.slots.size(); ++s) {
      pairs.emplace_back(std::abs(model.components[l].mu - bms.slots[s].mu), l, s);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> slot_used(bms.slots.size(), false);
  for (const auto& [d, l, s] : pairs) {
    if (rows[l].has_bms || slot_used[s]) continue;
    rows[l].has_bms = true;
    rows[l].bms = bms.slots[s];
    slot_used[s] = true;
  }
  return rows;
}

}  // namespace transdim
