#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "transdim/core_model.hpp"
#include "transdim/sem.hpp"

namespace transdim {

/// Summary under the single most probable k (ties go to the smaller k).
struct BmsSummary {
  std::size_t map_k = 0;
  double map_probability = 0.0;
  std::vector<LocationScale> slots;  ///< per sorted slot, ascending
};

[[nodiscard]] BmsSummary bms_summary(const SampleSet& samples, double s_min = kDefaultScaleFloor);

/// Uniform histogram over [lo, hi); the last bin is closed.
struct Histogram {
  double lo = 0.0;
  double hi = kPi;
  std::vector<double> values;

  [[nodiscard]] std::size_t bins() const noexcept { return values.size(); }
  [[nodiscard]] double width() const noexcept { return (hi - lo) / double(values.size()); }
  [[nodiscard]] double center(std::size_t b) const noexcept { return lo + (double(b) + 0.5) * width(); }
  [[nodiscard]] std::size_t bin_of(double v) const noexcept;
  /// Riemann sum of the values.
  [[nodiscard]] double integral() const noexcept;
};

/// Intensity of all parameter values across samples, normalized by
/// M * bin width so that its integral is the posterior mean of k.
[[nodiscard]] Histogram bma_intensity(const SampleSet& samples, std::size_t bins);

/// Same normalization, restricted to entries whose label is 0.
[[nodiscard]] Histogram background_intensity(const SampleSet& samples, std::span<const Allocation> allocations,
                                             std::size_t bins);

/// sum_l pi_l N(theta | mu_l, s_l^2).
[[nodiscard]] double mixture_intensity(const SummaryModel& model, double theta) noexcept;

/// One row of the comparison table, in increasing mu.
struct SummaryRow {
  std::size_t component = 0;
  GaussianComponent fitted;
  bool has_bms = false;
  LocationScale bms;
};

/// Pairs each BMS slot with the nearest fitted component (greedy by
/// distance between means); fitted components must be sorted by mu.
[[nodiscard]] std::vector<SummaryRow> summary_table(const SummaryModel& model, const BmsSummary& bms);

}  // namespace transdim
