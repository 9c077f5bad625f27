#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace transdim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Raised when an exact enumeration would exceed its configured size cap.
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One posterior draw (k, theta_1..theta_k) of the trans-dimensional chain.
/// k is implied by theta.size(); values are radial frequencies in (0, pi).
struct VariableDimSample {
  std::size_t iteration = 0;
  std::vector<double> theta;

  [[nodiscard]] std::size_t k() const noexcept { return theta.size(); }
};

struct SampleMeta {
  std::uint64_t seed = 0;
  std::size_t n_sweeps = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
};

struct SampleSet {
  std::vector<VariableDimSample> samples;
  SampleMeta meta;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
  [[nodiscard]] std::size_t max_k() const noexcept;
};

/// Throws std::domain_error if any theta leaves (0, pi) or k exceeds k_max.
void validate(const VariableDimSample& x, std::size_t k_max = std::numeric_limits<std::size_t>::max());

struct GaussianComponent {
  double mu = 0.0;
  double s2 = 1.0;
  double pi = 1.0;
};

/// L Bernoulli-Gaussian components plus a uniform Poisson background of
/// intensity eta over a parameter space of length theta_volume.
struct SummaryModel {
  std::vector<GaussianComponent> components;
  double eta = 0.0;
  double theta_volume = kPi;

  [[nodiscard]] std::size_t L() const noexcept { return components.size(); }
  /// Expected number of background points.
  [[nodiscard]] double lambda0() const noexcept { return eta * theta_volume; }
};

void validate(const SummaryModel& model);

/// Label per sample entry; 0 is the background, 1..L the Gaussian components.
using Allocation = std::vector<int>;

[[nodiscard]] bool is_admissible(const Allocation& z, std::size_t k, std::size_t L) noexcept;

/// Size of the admissible set: sum_j C(k,j) L!/(L-j)!, saturating at SIZE_MAX.
[[nodiscard]] std::size_t count_allocations(std::size_t k, std::size_t L) noexcept;

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// All admissible allocations of length k over labels {0..L}, in
/// lexicographic order.
[[nodiscard]] std::vector<Allocation> enumerate_allocations(std::size_t k, std::size_t L,
                                                            std::size_t cap = kDefaultEnumerationCap);

[[nodiscard]] double log_normal_pdf(double x, double mu, double s2) noexcept;

/// Numerically stable log(sum(exp(v))); -inf for an empty or all -inf input.
[[nodiscard]] double log_sum_exp(std::span<const double> values) noexcept;

/// log p(x, z | model): the pseudo-completed likelihood with a uniform
/// Poisson background. Returns -inf when z uses label 0 but eta == 0.
[[nodiscard]] double log_density_completed(const VariableDimSample& x, const Allocation& z,
                                           const SummaryModel& model);

/// log q(x) = log sum_z p(x, z | model), summed exactly over the admissible
/// set. Uses a dynamic program over the set of used Gaussian labels, so the
/// cost is O(k L 2^L) rather than the size of the admissible set.
[[nodiscard]] double log_density_marginal(const VariableDimSample& x, const SummaryModel& model);

/// Same quantity, by explicit enumeration; slow, kept for cross-checks.
[[nodiscard]] double log_density_marginal_enumerated(const VariableDimSample& x,
                                                     const SummaryModel& model,
                                                     std::size_t cap = kDefaultEnumerationCap);

}  // namespace transdim
