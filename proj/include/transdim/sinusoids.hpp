#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "transdim/core_model.hpp"

namespace transdim {

/// Columns (2j, 2j+1) hold cos(omega_j t) and sin(omega_j t), t = 0..n-1.
template <typename Scalar = double>
[[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> design_matrix(std::span<const Scalar> omegas,
                                                                                  Eigen::Index n) {
  if (n < 1) throw std::domain_error("design_matrix: n must be >= 1");
  const auto k = static_cast<Eigen::Index>(omegas.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> D(n, 2 * k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Scalar w = omegas[j];
    if (!(w > Scalar(0) && w < Scalar(kPi))) throw std::domain_error("design_matrix: frequency outside (0, pi)");
    for (Eigen::Index t = 0; t < n; ++t) {
      D(t, 2 * j) = std::cos(w * Scalar(t));
      D(t, 2 * j + 1) = std::sin(w * Scalar(t));
    }
  }
  return D;
}

/// Noisy sum of sinusoids. Amplitudes are stored as linear coefficients
/// (a_cos_j, a_sin_j) interleaved in the same order as design_matrix columns.
struct SinusoidScene {
  std::size_t n = 64;
  std::vector<double> omegas;
  Eigen::VectorXd coefficients;
  double snr_db = 7.0;

  /// a_cos = a cos(phi), a_sin = -a sin(phi).
  [[nodiscard]] static SinusoidScene from_amplitudes(std::size_t n, std::vector<double> omegas,
                                                     std::span<const double> amplitudes,
                                                     std::span<const double> phases, double snr_db);

  [[nodiscard]] std::size_t k() const noexcept { return omegas.size(); }
  [[nodiscard]] Eigen::VectorXd clean_signal() const;
  /// sigma2 solving snr_db = 10 log10(|D a|^2 / (n sigma2)).
  [[nodiscard]] double noise_variance() const;
  void validate() const;
};

/// Three sinusoids at (0.63, 0.68, 0.73) rad/sample with amplitudes
/// (20, 6.32, 20), phases (0, pi/4, pi/3), N = 64, 7 dB.
[[nodiscard]] SinusoidScene three_sinusoid_scene();

/// y = D a + e, e ~ N(0, sigma2 I); deterministic in seed. With all-zero
/// coefficients the noise variance is taken as 1.
[[nodiscard]] Eigen::VectorXd synthesize_signal(const SinusoidScene& scene, std::uint64_t seed);

struct SamplerConfig {
  std::size_t n_sweeps = 220'000;
  std::size_t burn_in = 20'000;
  std::size_t thinning = 10;
  std::size_t k_max = 20;
  double lambda_k = 3.0;
  double delta2 = 50.0;
  bool adapt_delta2 = false;
  double rw_scale = 0.0;             ///< 0 means 1/(2N)
  std::size_t periodogram_grid = 0;  ///< 0 means 4N
  std::uint64_t seed = 1;

  void validate() const;
  [[nodiscard]] double effective_rw_scale(std::size_t n) const { return rw_scale > 0.0 ? rw_scale : 0.5 / double(n); }
  [[nodiscard]] std::size_t effective_grid(std::size_t n) const { return periodogram_grid > 0 ? periodogram_grid : 4 * n; }
};

/// Minimum spacing between frequencies before the Gram matrix is treated as singular.
inline constexpr double kMinFrequencySpacing = 1e-6;

/// Hyperprior on delta2 when it is sampled: inverse-gamma(shape, scale).
inline constexpr double kDelta2PriorShape = 2.0;
inline constexpr double kDelta2PriorScale = 100.0;

/// log p(y | k, omega, delta2) with amplitudes (g-prior) and noise variance
/// (Jeffreys prior) integrated out, including all normalizing constants:
///   -N/2 log(2 pi) + lgamma(N/2) - N/2 log(y' P y / 2) - k log(1 + delta2).
/// Returns -inf for near-duplicate frequencies or a singular Gram matrix.
[[nodiscard]] double log_marginal_likelihood(std::span<const double> omegas, double delta2, const Eigen::VectorXd& y);

/// Unnormalized log posterior of (k, omega, delta2): the marginal likelihood
/// plus the truncated-Poisson prior on k, the uniform prior on omega, and
/// the delta2 hyperprior when delta2 is sampled.
[[nodiscard]] double log_target(std::span<const double> omegas, double delta2, const Eigen::VectorXd& y,
                                const SamplerConfig& config);

/// log of the truncated Poisson(lambda) prior on {0..k_max}, normalized.
[[nodiscard]] double log_prior_k(std::size_t k, double lambda, std::size_t k_max);

/// Birth / death probabilities; 0.5 each inside, 0 for the impossible move at the boundaries.
[[nodiscard]] double birth_probability(std::size_t k, std::size_t k_max) noexcept;
[[nodiscard]] double death_probability(std::size_t k, std::size_t k_max) noexcept;

/// Piecewise-constant density over (0, pi) proportional to the periodogram
/// of y on a uniform grid.
class PeriodogramProposal {
public:
  PeriodogramProposal(const Eigen::VectorXd& y, std::size_t grid);

  template <typename Rng>
  [[nodiscard]] double sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    const auto bin = std::min<std::size_t>(std::distance(cumulative_.begin(), it), probs_.size() - 1);
    const double lo = double(bin) * width_;
    double w = lo + u(rng) * width_;
    if (!(w > 0.0)) w = 0.5 * width_;
    return w;
  }
  [[nodiscard]] double log_density(double omega) const noexcept;
  [[nodiscard]] std::size_t grid() const noexcept { return probs_.size(); }

private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double width_ = 0.0;
};

struct ChainState {
  std::vector<double> omegas;
  double delta2 = 50.0;
  double log_target = 0.0;

  [[nodiscard]] std::size_t k() const noexcept { return omegas.size(); }
};

struct MoveStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  [[nodiscard]] double rate() const noexcept { return proposed ? double(accepted) / double(proposed) : 0.0; }
};

struct AcceptanceReport {
  MoveStats birth;
  MoveStats death;
  MoveStats update;
  MoveStats delta2;
};

/// Mixture proposal weights for the within-model frequency update.
inline constexpr double kRandomWalkWeight = 0.8;
/// Mixture weight of the uniform part of the birth proposal.
inline constexpr double kBirthUniformWeight = 0.5;

[[nodiscard]] ChainState initial_state(const Eigen::VectorXd& y, const SamplerConfig& config);

/// Log proposal density of a newborn frequency.
[[nodiscard]] double log_birth_density(double omega, const PeriodogramProposal& periodogram) noexcept;
/// Log density of the frequency-update proposal omega -> to.
[[nodiscard]] double log_update_density(double from, double to, double rw_scale,
                                        const PeriodogramProposal& periodogram) noexcept;

/// Log acceptance ratio for a birth of `born`; `proposed` is the enlarged
/// state with its log_target filled in. Insertion position is uniform, so
/// the reverse is a uniformly chosen death.
[[nodiscard]] double log_birth_ratio(const ChainState& state, const ChainState& proposed, double born,
                                     const PeriodogramProposal& periodogram, const SamplerConfig& config) noexcept;
/// Log acceptance ratio for removing the frequency `removed` (the reverse of a birth).
[[nodiscard]] double log_death_ratio(const ChainState& state, const ChainState& proposed, double removed,
                                     const PeriodogramProposal& periodogram, const SamplerConfig& config) noexcept;

/// One sweep: a birth or death move, then an MH update of every frequency,
/// then a delta2 update when adapt_delta2 is set.
void rjmcmc_sweep(ChainState& state, const Eigen::VectorXd& y, const SamplerConfig& config,
                  const PeriodogramProposal& periodogram, std::mt19937_64& rng, AcceptanceReport& report);

struct SamplerResult {
  SampleSet samples;
  AcceptanceReport acceptance;
  std::vector<double> delta2_trace;
};

/// Runs a single chain from k = 0; keeps every `thinning`-th sweep after burn-in.
[[nodiscard]] SamplerResult run_sampler(const Eigen::VectorXd& y, const SamplerConfig& config);

struct AmplitudeDraw {
  Eigen::VectorXd a;
  double sigma2 = 0.0;
};

/// Conditional posterior mean of the linear coefficients given omega:
/// delta2/(1+delta2) times the least-squares fit.
[[nodiscard]] Eigen::VectorXd amplitude_posterior_mean(std::span<const double> omegas, const Eigen::VectorXd& y,
                                                       double delta2);

/// sigma2 ~ IG(N/2, y'Py/2), then a ~ N(m, sigma2 M), M = delta2/(1+delta2) (D'D)^-1.
[[nodiscard]] AmplitudeDraw sample_amplitudes(std::span<const double> omegas, const Eigen::VectorXd& y,
                                              double delta2, std::mt19937_64& rng);

}  // namespace transdim
