#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "transdim/allocation.hpp"
#include "transdim/core_model.hpp"

namespace transdim {

/// 2 Phi^-1(0.75): IQR of a unit Gaussian.
inline constexpr double kIqrToSigma = 1.3489795003921634;
inline constexpr double kDefaultScaleFloor = 1e-4;
/// Samples with k = L needed before initialization falls back to smaller k.
inline constexpr std::size_t kMinInitSamples = 20;
inline constexpr double kInitialPresence = 0.9;

struct SemConfig {
  std::size_t n_iterations = 50;
  double init_percentile = 0.90;
  std::size_t inner_imh_steps = 5;
  std::uint64_t seed = 1;
  std::size_t averaging_window = 10;
  double s_min = kDefaultScaleFloor;

  void validate() const;
};

struct LocationScale {
  double mu = 0.0;
  double s = 0.0;
};

/// Quantile with the (n+1)p plotting position, linearly interpolated and
/// clamped to the sample range. `sorted` must be ascending.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);

/// Median and IQR / 1.34898, with s floored at s_min. Needs >= 2 values.
[[nodiscard]] LocationScale robust_location_scale(std::span<const double> values, double s_min = kDefaultScaleFloor);

/// Smallest L with empirical P(k <= L) >= percentile.
[[nodiscard]] std::size_t choose_L(const SampleSet& samples, double percentile);

/// Robust per-slot estimates of the sorted parameters among samples with
/// k = L, pi = 0.9 for every component and eta such that Lambda0 equals
/// the mean excess max(k - L, 0).
[[nodiscard]] SummaryModel initialize_model(const SampleSet& samples, std::size_t L,
                                            double s_min = kDefaultScaleFloor);

struct MStepResult {
  SummaryModel model;
  std::vector<std::size_t> component_counts;
  std::size_t background_count = 0;
  std::vector<bool> starved;
};

/// Robust M-step. `previous` supplies (mu, s2) for starved components and the
/// number of components.
[[nodiscard]] MStepResult m_step(const SampleSet& samples, std::span<const Allocation> allocations,
                                 const SummaryModel& previous, double s_min = kDefaultScaleFloor);

/// Mean exact log marginal density of the samples under the model (the
/// quantity whose increase tracks a decreasing KL criterion).
[[nodiscard]] double criterion(const SampleSet& samples, const SummaryModel& model);

struct SemIteration {
  SummaryModel model;
  double criterion = 0.0;
  std::vector<std::size_t> component_counts;
  std::size_t background_count = 0;
  std::size_t imh_accepted = 0;
};

struct SemTrace {
  SummaryModel initial;
  std::vector<SemIteration> iterations;
};

struct SemResult {
  SummaryModel model;  ///< components sorted by mu
  SemTrace trace;
  std::vector<Allocation> final_allocations;  ///< last S-step, labels of `model`
};

/// Component-wise median of the last `window` snapshots, then sorted by mu.
[[nodiscard]] SummaryModel summarize_trace(const SemTrace& trace, std::size_t window);

/// Robust stochastic EM with L picked by choose_L.
[[nodiscard]] SemResult run_sem(const SampleSet& samples, const SemConfig& config);

/// Same, for a caller-chosen initial model.
[[nodiscard]] SemResult run_sem(const SampleSet& samples, const SummaryModel& initial, const SemConfig& config);

}  // namespace transdim
