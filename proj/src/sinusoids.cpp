#include "transdim/sinusoids.hpp"

#include <complex>
#include <numeric>

namespace transdim {

namespace {

bool has_near_duplicates(std::span<const double> omegas) {
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    for (std::size_t j = i + 1; j < omegas.size(); ++j) {
      if (std::abs(omegas[i] - omegas[j]) < kMinFrequencySpacing) return true;
    }
  }
  return false;
}

double log_delta2_prior(double delta2) {
  return kDelta2PriorShape * std::log(kDelta2PriorScale) - std::lgamma(kDelta2PriorShape) -
         (kDelta2PriorShape + 1.0) * std::log(delta2) - kDelta2PriorScale / delta2;
}

bool accept(double log_ratio, std::mt19937_64& rng) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::log(u(rng)) < log_ratio;
}

}  // namespace

SinusoidScene SinusoidScene::from_amplitudes(std::size_t n, std::vector<double> omegas,
                                             std::span<const double> amplitudes, std::span<const double> phases,
                                             double snr_db) {
  if (amplitudes.size() != omegas.size() || (!phases.empty() && phases.size() != omegas.size())) {
    throw std::invalid_argument("scene: amplitudes/phases must match the number of frequencies");
  }
  SinusoidScene scene;
  scene.n = n;
  scene.snr_db = snr_db;
  scene.coefficients.resize(2 * static_cast<Eigen::Index>(omegas.size()));
  for (std::size_t j = 0; j < omegas.size(); ++j) {
    const double phi = phases.empty() ? 0.0 : phases[j];
    scene.coefficients[2 * j] = amplitudes[j] * std::cos(phi);
    scene.coefficients[2 * j + 1] = -amplitudes[j] * std::sin(phi);
  }
  scene.omegas = std::move(omegas);
  scene.validate();
  return scene;
}

void SinusoidScene::validate() const {
  if (n < 1) throw std::domain_error("scene: n must be >= 1");
  if (coefficients.size() != 2 * static_cast<Eigen::Index>(omegas.size())) {
    throw std::domain_error("scene: need two linear coefficients per frequency");
  }
  for (double w : omegas) {
    if (!(w > 0.0 && w < kPi)) throw std::domain_error("scene: frequency outside (0, pi)");
  }
  if (!std::isfinite(snr_db)) throw std::domain_error("scene: snr_db must be finite");
}

Eigen::VectorXd SinusoidScene::clean_signal() const {
  if (omegas.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return design_matrix<double>(omegas, static_cast<Eigen::Index>(n)) * coefficients;
}

double SinusoidScene::noise_variance() const {
  const double energy = clean_signal().squaredNorm();
  if (energy <= 0.0) return 1.0;
  return energy / (double(n) * std::pow(10.0, snr_db / 10.0));
}

SinusoidScene three_sinusoid_scene() {
  const std::vector<double> amplitudes{20.0, 6.32, 20.0};
  const std::vector<double> phases{0.0, kPi / 4.0, kPi / 3.0};
  return SinusoidScene::from_amplitudes(64, {0.63, 0.68, 0.73}, amplitudes, phases, 7.0);
}

Eigen::VectorXd synthesize_signal(const SinusoidScene& scene, std::uint64_t seed) {
  scene.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(scene.noise_variance()));
  Eigen::VectorXd y = scene.clean_signal();
  for (Eigen::Index t = 0; t < y.size(); ++t) y[t] += noise(rng);
  return y;
}

void SamplerConfig::validate() const {
  if (!(n_sweeps > burn_in)) throw std::domain_error("sampler: n_sweeps must exceed burn_in");
  if (thinning < 1) throw std::domain_error("sampler: thinning must be >= 1");
  if (k_max < 1) throw std::domain_error("sampler: k_max must be >= 1");
  if (!(lambda_k > 0.0)) throw std::domain_error("sampler: lambda_k must be > 0");
  if (!(delta2 > 0.0)) throw std::domain_error("sampler: delta2 must be > 0");
  if (rw_scale < 0.0) throw std::domain_error("sampler: rw_scale must be >= 0");
}

double log_marginal_likelihood(std::span<const double> omegas, double delta2, const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(y.size());
  const auto k = static_cast<double>(omegas.size());
  const double yy = y.squaredNorm();
  double quad = yy;
  if (!omegas.empty()) {
    for (double w : omegas) {
      if (!(w > 0.0 && w < kPi)) return kNegInf;
    }
    if (has_near_duplicates(omegas)) return kNegInf;
    const Eigen::MatrixXd D = design_matrix<double>(omegas, y.size());
    const Eigen::MatrixXd gram = D.transpose() * D;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) return kNegInf;
    const Eigen::VectorXd b = D.transpose() * y;
    quad = yy - (delta2 / (1.0 + delta2)) * b.dot(llt.solve(b));
  }
  if (!(quad > 1e-300)) return kNegInf;
  return -0.5 * n * std::log(2.0 * kPi) + std::lgamma(0.5 * n) - 0.5 * n * std::log(0.5 * quad) -
         k * std::log1p(delta2);
}

double log_prior_k(std::size_t k, double lambda, std::size_t k_max) {
  if (k > k_max) return kNegInf;
  std::vector<double> terms(k_max + 1);
  for (std::size_t j = 0; j <= k_max; ++j) terms[j] = double(j) * std::log(lambda) - std::lgamma(double(j) + 1.0);
  return terms[k] - log_sum_exp(terms);
}

double log_target(std::span<const double> omegas, double delta2, const Eigen::VectorXd& y,
                  const SamplerConfig& config) {
  const std::size_t k = omegas.size();
  if (k > config.k_max) return kNegInf;
  double out = log_prior_k(k, config.lambda_k, config.k_max) - double(k) * std::log(kPi) +
               log_marginal_likelihood(omegas, delta2, y);
  if (config.adapt_delta2) out += log_delta2_prior(delta2);
  return out;
}

double birth_probability(std::size_t k, std::size_t k_max) noexcept {
  if (k >= k_max) return 0.0;
  return k == 0 ? 1.0 : 0.5;
}

double death_probability(std::size_t k, std::size_t k_max) noexcept {
  if (k == 0 || k > k_max) return 0.0;
  return k == k_max ? 1.0 : 0.5;
}

PeriodogramProposal::PeriodogramProposal(const Eigen::VectorXd& y, std::size_t grid)
    : probs_(grid), cumulative_(grid), width_(kPi / double(grid)) {
  if (grid < 1) throw std::domain_error("periodogram grid must be >= 1");
  double total = 0.0;
  for (std::size_t g = 0; g < grid; ++g) {
    const double w = (double(g) + 0.5) * width_;
    std::complex<double> acc{0.0, 0.0};
    for (Eigen::Index t = 0; t < y.size(); ++t) acc += y[t] * std::polar(1.0, -w * double(t));
    probs_[g] = std::norm(acc) / double(y.size());
    total += probs_[g];
  }
  if (!(total > 0.0)) {
    std::fill(probs_.begin(), probs_.end(), 1.0 / double(grid));
  } else {
    for (auto& p : probs_) p /= total;
  }
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

double PeriodogramProposal::log_density(double omega) const noexcept {
  if (!(omega > 0.0 && omega < kPi)) return kNegInf;
  const auto bin = std::min<std::size_t>(static_cast<std::size_t>(omega / width_), probs_.size() - 1);
  return std::log(probs_[bin] / width_);
}

double log_birth_density(double omega, const PeriodogramProposal& periodogram) noexcept {
  if (!(omega > 0.0 && omega < kPi)) return kNegInf;
  return std::log(kBirthUniformWeight / kPi +
                  (1.0 - kBirthUniformWeight) * std::exp(periodogram.log_density(omega)));
}

double log_update_density(double from, double to, double rw_scale, const PeriodogramProposal& periodogram) noexcept {
  const double d = (to - from) / rw_scale;
  const double rw = std::exp(-0.5 * d * d) / (rw_scale * std::sqrt(2.0 * kPi));
  const double pg = (to > 0.0 && to < kPi) ? std::exp(periodogram.log_density(to)) : 0.0;
  return std::log(kRandomWalkWeight * rw + (1.0 - kRandomWalkWeight) * pg);
}

double log_birth_ratio(const ChainState& state, const ChainState& proposed, double born,
                       const PeriodogramProposal& periodogram, const SamplerConfig& config) noexcept {
  const std::size_t k = state.k();
  return proposed.log_target - state.log_target + std::log(death_probability(k + 1, config.k_max)) -
         std::log(birth_probability(k, config.k_max)) - log_birth_density(born, periodogram);
}

double log_death_ratio(const ChainState& state, const ChainState& proposed, double removed,
                       const PeriodogramProposal& periodogram, const SamplerConfig& config) noexcept {
  const std::size_t k = state.k();
  return proposed.log_target - state.log_target + std::log(birth_probability(k - 1, config.k_max)) +
         log_birth_density(removed, periodogram) - std::log(death_probability(k, config.k_max));
}

ChainState initial_state(const Eigen::VectorXd& y, const SamplerConfig& config) {
  ChainState s;
  s.delta2 = config.delta2;
  s.log_target = log_target(s.omegas, s.delta2, y, config);
  return s;
}

void rjmcmc_sweep(ChainState& state, const Eigen::VectorXd& y, const SamplerConfig& config,
                  const PeriodogramProposal& periodogram, std::mt19937_64& rng, AcceptanceReport& report) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t k = state.k();
  const double b = birth_probability(k, config.k_max);
  const double d = death_probability(k, config.k_max);

  // Dimension move.
  const double u = unif(rng);
  if (u < b) {
    ++report.birth.proposed;
    const double born = unif(rng) < kBirthUniformWeight ? unif(rng) * kPi : periodogram.sample(rng);
    std::uniform_int_distribution<std::size_t> pos(0, k);
    ChainState proposed = state;
    proposed.omegas.insert(proposed.omegas.begin() + static_cast<std::ptrdiff_t>(pos(rng)), born);
    proposed.log_target = log_target(proposed.omegas, proposed.delta2, y, config);
    if (proposed.log_target > kNegInf && accept(log_birth_ratio(state, proposed, born, periodogram, config), rng)) {
      state = std::move(proposed);
      ++report.birth.accepted;
    }
  } else if (u < b + d) {
    ++report.death.proposed;
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const std::size_t j = pick(rng);
    ChainState proposed = state;
    const double removed = proposed.omegas[j];
    proposed.omegas.erase(proposed.omegas.begin() + static_cast<std::ptrdiff_t>(j));
    proposed.log_target = log_target(proposed.omegas, proposed.delta2, y, config);
    if (proposed.log_target > kNegInf && accept(log_death_ratio(state, proposed, removed, periodogram, config), rng)) {
      state = std::move(proposed);
      ++report.death.accepted;
    }
  }

  // Within-model frequency updates.
  const double rw_scale = config.effective_rw_scale(static_cast<std::size_t>(y.size()));
  std::normal_distribution<double> step(0.0, rw_scale);
  for (std::size_t j = 0; j < state.k(); ++j) {
    ++report.update.proposed;
    const double from = state.omegas[j];
    const double to = unif(rng) < kRandomWalkWeight ? from + step(rng) : periodogram.sample(rng);
    if (!(to > 0.0 && to < kPi)) continue;
    std::vector<double> omegas = state.omegas;
    omegas[j] = to;
    const double lt = log_target(omegas, state.delta2, y, config);
    if (lt == kNegInf) continue;
    const double log_ratio = lt - state.log_target + log_update_density(to, from, rw_scale, periodogram) -
                             log_update_density(from, to, rw_scale, periodogram);
    if (accept(log_ratio, rng)) {
      state.omegas = std::move(omegas);
      state.log_target = lt;
      ++report.update.accepted;
    }
  }

  if (config.adapt_delta2) {
    ++report.delta2.proposed;
    std::normal_distribution<double> log_step(0.0, 0.5);
    const double proposal = state.delta2 * std::exp(log_step(rng));
    const double lt = log_target(state.omegas, proposal, y, config);
    // Random walk on log(delta2): Jacobian delta2'/delta2.
    const double log_ratio = lt - state.log_target + std::log(proposal) - std::log(state.delta2);
    if (lt > kNegInf && accept(log_ratio, rng)) {
      state.delta2 = proposal;
      state.log_target = lt;
      ++report.delta2.accepted;
    }
  }
}

SamplerResult run_sampler(const Eigen::VectorXd& y, const SamplerConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(y.size());
  const PeriodogramProposal periodogram(y, config.effective_grid(n));
  std::mt19937_64 rng(config.seed);

  SamplerResult result;
  result.samples.meta = {config.seed, config.n_sweeps, config.burn_in, config.thinning};
  result.samples.samples.reserve((config.n_sweeps - config.burn_in) / config.thinning);

  ChainState state = initial_state(y, config);
  for (std::size_t sweep = 1; sweep <= config.n_sweeps; ++sweep) {
    rjmcmc_sweep(state, y, config, periodogram, rng, result.acceptance);
    if (sweep > config.burn_in && (sweep - config.burn_in) % config.thinning == 0) {
      result.samples.samples.push_back({sweep, state.omegas});
      if (config.adapt_delta2) result.delta2_trace.push_back(state.delta2);
    }
  }
  return result;
}

Eigen::VectorXd amplitude_posterior_mean(std::span<const double> omegas, const Eigen::VectorXd& y, double delta2) {
  if (omegas.empty()) return {};
  const Eigen::MatrixXd D = design_matrix<double>(omegas, y.size());
  const Eigen::LLT<Eigen::MatrixXd> llt(D.transpose() * D);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw std::runtime_error("amplitude_posterior_mean: singular Gram matrix");
  }
  return (delta2 / (1.0 + delta2)) * llt.solve(D.transpose() * y);
}

AmplitudeDraw sample_amplitudes(std::span<const double> omegas, const Eigen::VectorXd& y, double delta2,
                                std::mt19937_64& rng) {
  const auto n = static_cast<double>(y.size());
  const double shrink = delta2 / (1.0 + delta2);
  AmplitudeDraw draw;
  double quad = y.squaredNorm();
  Eigen::MatrixXd chol_gram_inv;
  if (!omegas.empty()) {
    if (has_near_duplicates(omegas)) throw std::runtime_error("sample_amplitudes: near-duplicate frequencies");
    const Eigen::MatrixXd D = design_matrix<double>(omegas, y.size());
    const Eigen::LLT<Eigen::MatrixXd> llt(D.transpose() * D);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
      throw std::runtime_error("sample_amplitudes: singular Gram matrix");
    }
    const Eigen::VectorXd b = D.transpose() * y;
    const Eigen::VectorXd ls = llt.solve(b);
    quad -= shrink * b.dot(ls);
    draw.a = shrink * ls;
    // (D'D)^-1 = U^-1 U^-T with D'D = U'U; U^-1 z has covariance (D'D)^-1.
    chol_gram_inv = llt.matrixU().solve(Eigen::MatrixXd::Identity(D.cols(), D.cols()));
  }
  // sigma2 ~ IG(N/2, quad/2)  <=>  1/sigma2 ~ Gamma(N/2, scale 2/quad)
  std::gamma_distribution<double> precision(0.5 * n, 2.0 / quad);
  draw.sigma2 = 1.0 / precision(rng);
  if (!omegas.empty()) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd e(draw.a.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = z(rng);
    draw.a += std::sqrt(draw.sigma2 * shrink) * (chol_gram_inv * e);
  }
  return draw;
}

}  // namespace transdim
