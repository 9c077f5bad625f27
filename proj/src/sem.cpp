#include "transdim/sem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "transdim/random.hpp"

namespace transdim {

namespace {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

/// Splits the widest component in two until there are L of them.
void pad_by_splitting(std::vector<GaussianComponent>& comps, std::size_t L, double s_min) {
  while (comps.size() < L) {
    auto widest = std::max_element(comps.begin(), comps.end(),
                                   [](const auto& a, const auto& b) { return a.s2 < b.s2; });
    const double s = std::sqrt(widest->s2);
    GaussianComponent left = *widest;
    GaussianComponent right = *widest;
    left.mu -= 0.5 * s;
    right.mu += 0.5 * s;
    left.s2 = right.s2 = std::max(0.25 * widest->s2, s_min * s_min);
    *widest = left;
    comps.push_back(right);
  }
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.mu < b.mu; });
}

}  // namespace

void SemConfig::validate() const {
  if (n_iterations < 1) throw std::domain_error("sem: n_iterations must be >= 1");
  if (!(init_percentile > 0.0 && init_percentile < 1.0)) throw std::domain_error("sem: init_percentile must be in (0,1)");
  if (averaging_window < 1) throw std::domain_error("sem: averaging_window must be >= 1");
  if (!(s_min > 0.0)) throw std::domain_error("sem: s_min must be > 0");
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty list");
  const double n = static_cast<double>(sorted.size());
  const double h = std::clamp((n + 1.0) * p, 1.0, n);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - std::floor(h);
  if (lo >= sorted.size()) return sorted.back();
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

LocationScale robust_location_scale(std::span<const double> values, double s_min) {
  if (values.size() < 2) throw std::invalid_argument("robust_location_scale needs at least two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return {quantile_sorted(sorted, 0.5), std::max(iqr / kIqrToSigma, s_min)};
}

std::size_t choose_L(const SampleSet& samples, double percentile) {
  if (samples.empty()) throw std::invalid_argument("choose_L: empty sample set");
  std::map<std::size_t, std::size_t> counts;
  for (const auto& s : samples.samples) ++counts[s.k()];
  const double target = percentile * double(samples.size());
  std::size_t cum = 0;
  for (const auto& [k, c] : counts) {
    cum += c;
    // relative slack so that e.g. 0.9 * 1000 == 900 counts as reached
    if (double(cum) >= target * (1.0 - 1e-12)) return k;
  }
  return counts.rbegin()->first;
}

SummaryModel initialize_model(const SampleSet& samples, std::size_t L, double s_min) {
  if (samples.empty()) throw std::invalid_argument("initialize_model: empty sample set");
  SummaryModel model;
  double excess = 0.0;
  for (const auto& s : samples.samples) excess += double(s.k() > L ? s.k() - L : 0);
  model.eta = excess / double(samples.size()) / model.theta_volume;
  if (L == 0) return model;

  std::map<std::size_t, std::size_t> counts;
  for (const auto& s : samples.samples) ++counts[s.k()];
  // Largest k' <= L with enough samples; failing that, the best-populated k' in [1, L].
  std::size_t slot_k = 0;
  for (std::size_t k = L; k >= 1; --k) {
    if (counts[k] >= kMinInitSamples) {
      slot_k = k;
      break;
    }
  }
  if (slot_k == 0) {
    std::size_t best = 1;
    for (std::size_t k = 1; k <= L; ++k) {
      if (counts[k] > best) {
        best = counts[k];
        slot_k = k;
      }
    }
  }

  std::vector<GaussianComponent> comps;
  if (slot_k > 0) {
    std::vector<std::vector<double>> slots(slot_k);
    for (const auto& s : samples.samples) {
      if (s.k() != slot_k) continue;
      std::vector<double> sorted = s.theta;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t l = 0; l < slot_k; ++l) slots[l].push_back(sorted[l]);
    }
    for (const auto& values : slots) {
      const auto est = robust_location_scale(values, s_min);
      comps.push_back({est.mu, est.s * est.s, kInitialPresence});
    }
  } else {
    // No sample has 1 <= k <= L with two or more draws: spread over the pooled values.
    std::vector<double> pooled;
    for (const auto& s : samples.samples) pooled.insert(pooled.end(), s.theta.begin(), s.theta.end());
    if (pooled.size() < 2) throw std::invalid_argument("initialize_model: not enough parameter values");
    std::sort(pooled.begin(), pooled.end());
    const auto est = robust_location_scale(pooled, s_min);
    const double s = std::max(est.s / double(L), s_min);
    for (std::size_t l = 0; l < L; ++l) {
      comps.push_back({quantile_sorted(pooled, (double(l) + 0.5) / double(L)), s * s, kInitialPresence});
    }
  }
  pad_by_splitting(comps, L, s_min);
  model.components = std::move(comps);
  return model;
}

MStepResult m_step(const SampleSet& samples, std::span<const Allocation> allocations, const SummaryModel& previous,
                   double s_min) {
  if (allocations.size() != samples.size()) throw std::invalid_argument("m_step: allocations not aligned with samples");
  const std::size_t L = previous.L();
  const double M = double(samples.size());
  const double pi_min = 1.0 / (2.0 * M);

  std::vector<std::vector<double>> values(L);
  MStepResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& x = samples.samples[i];
    const auto& z = allocations[i];
    if (!is_admissible(z, x.k(), L)) throw std::invalid_argument("m_step: inadmissible allocation");
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j] == 0) {
        ++out.background_count;
      } else {
        values[static_cast<std::size_t>(z[j]) - 1].push_back(x.theta[j]);
      }
    }
  }

  out.model.theta_volume = previous.theta_volume;
  out.model.eta = double(out.background_count) / (M * previous.theta_volume);
  out.model.components.resize(L);
  out.component_counts.resize(L);
  out.starved.assign(L, false);
  for (std::size_t l = 0; l < L; ++l) {
    // Injectivity: one value per sample that uses label l.
    const std::size_t present = values[l].size();
    out.component_counts[l] = present;
    auto& c = out.model.components[l];
    if (present < 2) {
      c = previous.components[l];
      c.pi = pi_min;
      out.starved[l] = true;
      continue;
    }
    const auto est = robust_location_scale(values[l], s_min);
    c.mu = est.mu;
    c.s2 = est.s * est.s;
    c.pi = std::clamp(double(present) / M, pi_min, 1.0);
  }
  return out;
}

double criterion(const SampleSet& samples, const SummaryModel& model) {
  if (samples.empty()) throw std::invalid_argument("criterion: empty sample set");
  double acc = 0.0;
  for (const auto& x : samples.samples) {
    const double v = log_density_marginal(x, model);
    if (v == kNegInf) return kNegInf;
    acc += v;
  }
  return acc / double(samples.size());
}

SummaryModel summarize_trace(const SemTrace& trace, std::size_t window) {
  if (trace.iterations.empty()) return trace.initial;
  const std::size_t n = trace.iterations.size();
  const std::size_t first = n > window ? n - window : 0;
  const SummaryModel& last = trace.iterations.back().model;
  SummaryModel out;
  out.theta_volume = last.theta_volume;
  std::vector<double> eta;
  for (std::size_t r = first; r < n; ++r) eta.push_back(trace.iterations[r].model.eta);
  out.eta = median_of(eta);
  for (std::size_t l = 0; l < last.L(); ++l) {
    std::vector<double> mu, s2, pi;
    for (std::size_t r = first; r < n; ++r) {
      const auto& c = trace.iterations[r].model.components[l];
      mu.push_back(c.mu);
      s2.push_back(c.s2);
      pi.push_back(c.pi);
    }
    out.components.push_back({median_of(mu), median_of(s2), median_of(pi)});
  }
  std::stable_sort(out.components.begin(), out.components.end(),
                   [](const auto& a, const auto& b) { return a.mu < b.mu; });
  return out;
}

SemResult run_sem(const SampleSet& samples, const SemConfig& config) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("run_sem: empty sample set");
  const std::size_t L = choose_L(samples, config.init_percentile);
  return run_sem(samples, initialize_model(samples, L, config.s_min), config);
}

SemResult run_sem(const SampleSet& samples, const SummaryModel& initial, const SemConfig& config) {
  config.validate();
  validate(initial);
  if (samples.empty()) throw std::invalid_argument("run_sem: empty sample set");
  const std::size_t M = samples.size();

  SemResult result;
  result.trace.initial = initial;
  SummaryModel model = initial;
  std::vector<AllocationChainState> chains(M);
  std::vector<Allocation> allocations(M);
  std::vector<std::size_t> accepted(M);

  for (std::size_t r = 1; r <= config.n_iterations; ++r) {
    // S-step; each sample owns an RNG stream keyed by (seed, i, r).
    parallel_for(M, [&](std::size_t i) {
      auto rng = make_stream(config.seed, {i, r});
      const auto& x = samples.samples[i];
      if (r == 1) chains[i] = greedy_allocation(x, model, rng);
      accepted[i] = imh_kernel(chains[i], x, model, config.inner_imh_steps, rng);
      allocations[i] = chains[i].z;
    });

    MStepResult step = m_step(samples, allocations, model, config.s_min);
    model = step.model;

    SemIteration it;
    it.model = model;
    it.criterion = criterion(samples, model);
    it.component_counts = std::move(step.component_counts);
    it.background_count = step.background_count;
    it.imh_accepted = std::accumulate(accepted.begin(), accepted.end(), std::size_t{0});
    result.trace.iterations.push_back(std::move(it));
  }

  result.model = summarize_trace(result.trace, config.averaging_window);

  // Relabel the last allocations to the mu-sorted order of the reported model.
  const auto& last = result.trace.iterations.back().model;
  std::vector<std::size_t> by_mu(last.L());
  std::iota(by_mu.begin(), by_mu.end(), std::size_t{0});
  std::stable_sort(by_mu.begin(), by_mu.end(),
                   [&](std::size_t a, std::size_t b) { return last.components[a].mu < last.components[b].mu; });
  std::vector<int> new_label(last.L() + 1, 0);
  for (std::size_t rank = 0; rank < by_mu.size(); ++rank) new_label[by_mu[rank] + 1] = static_cast<int>(rank + 1);
  result.final_allocations = std::move(allocations);
  for (auto& z : result.final_allocations) {
    for (int& l : z) l = new_label[static_cast<std::size_t>(l)];
  }
  return result;
}

}  // namespace transdim
