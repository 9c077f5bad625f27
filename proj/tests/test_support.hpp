#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <vector>

#include "transdim/allocation.hpp"
#include "transdim/core_model.hpp"

namespace transdim::testing {

/// One draw from the summary model: each component present with
/// probability pi_l, a Poisson(Lambda0) number of uniform background points,
/// then a uniformly random arrangement. `labels` receives the generating
/// label of each entry when non-null.
inline VariableDimSample draw_from_model(const SummaryModel& model, std::mt19937_64& rng,
                                         Allocation* labels = nullptr) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, int>> entries;
  for (std::size_t l = 0; l < model.L(); ++l) {
    const auto& c = model.components[l];
    if (unif(rng) < c.pi) {
      std::normal_distribution<double> g(c.mu, std::sqrt(c.s2));
      entries.emplace_back(g(rng), static_cast<int>(l + 1));
    }
  }
  if (model.eta > 0.0) {
    std::poisson_distribution<int> n0(model.lambda0());
    const int count = n0(rng);
    for (int j = 0; j < count; ++j) entries.emplace_back(unif(rng) * model.theta_volume, 0);
  }
  std::shuffle(entries.begin(), entries.end(), rng);
  VariableDimSample x;
  for (const auto& [theta, label] : entries) {
    x.theta.push_back(theta);
    if (labels) labels->push_back(label);
  }
  return x;
}

inline SampleSet draw_sample_set(const SummaryModel& model, std::size_t M, std::mt19937_64& rng,
                                 std::vector<Allocation>* labels = nullptr) {
  SampleSet set;
  set.samples.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    Allocation z;
    set.samples.push_back(draw_from_model(model, rng, labels ? &z : nullptr));
    set.samples.back().iteration = i;
    if (labels) labels->push_back(std::move(z));
  }
  return set;
}

/// Total-variation distance between an empirical histogram and a reference
/// distribution over the same keys.
template <typename Key>
double total_variation(const std::map<Key, std::size_t>& counts, std::size_t n, const std::map<Key, double>& reference) {
  double tv = 0.0;
  for (const auto& [key, p] : reference) {
    const auto it = counts.find(key);
    const double q = it == counts.end() ? 0.0 : double(it->second) / double(n);
    tv += std::abs(p - q);
  }
  for (const auto& [key, c] : counts) {
    if (!reference.count(key)) tv += double(c) / double(n);
  }
  return 0.5 * tv;
}

/// Runs one I-MH chain for `steps` single-step kernel applications from a
/// greedy start and returns the total-variation distance between the visited
/// allocations and the exact posterior.
inline double imh_total_variation(const VariableDimSample& x, const SummaryModel& model, std::size_t steps,
                                  std::mt19937_64& rng) {
  const auto exact = exact_allocation_posterior(x, model);
  std::map<Allocation, double> reference;
  for (std::size_t i = 0; i < exact.allocations.size(); ++i) reference[exact.allocations[i]] = exact.probabilities[i];
  auto state = greedy_allocation(x, model, rng);
  std::map<Allocation, std::size_t> counts;
  for (std::size_t s = 0; s < steps; ++s) {
    imh_kernel(state, x, model, 1, rng);
    ++counts[state.z];
  }
  return total_variation(counts, steps, reference);
}

/// Random small case: L components with means spread over (0.3, 2.8), and a
/// sample with k entries drawn near randomly chosen component means or
/// uniformly (background-like).
inline std::pair<VariableDimSample, SummaryModel> random_allocation_case(std::mt19937_64& rng, std::size_t k,
                                                                        std::size_t L) {
  std::uniform_real_distribution<double> mu(0.3, 2.8), s(0.03, 0.3), pi(0.15, 1.0), eta(0.05, 1.0), u(0.0, 1.0);
  SummaryModel m;
  for (std::size_t l = 0; l < L; ++l) m.components.push_back({mu(rng), std::pow(s(rng), 2), pi(rng)});
  m.eta = eta(rng);
  VariableDimSample x;
  for (std::size_t j = 0; j < k; ++j) {
    double t;
    if (L > 0 && u(rng) < 0.7) {
      const auto& c = m.components[static_cast<std::size_t>(u(rng) * double(L)) % L];
      std::normal_distribution<double> g(c.mu, 1.5 * std::sqrt(c.s2));
      t = g(rng);
    } else {
      t = 0.05 + u(rng) * (kPi - 0.1);
    }
    x.theta.push_back(std::clamp(t, 0.01, kPi - 0.01));
  }
  return {x, m};
}

inline double relative_error(double estimate, double truth) { return std::abs(estimate - truth) / std::abs(truth); }

}  // namespace transdim::testing
