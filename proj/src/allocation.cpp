#include "transdim/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace transdim {

namespace {

void check_feasible(const VariableDimSample& x, const SummaryModel& model) {
  if (model.eta <= 0.0 && x.k() > model.L()) {
    throw InfeasibleAllocation("sample has k=" + std::to_string(x.k()) + " entries but the model has L=" +
                               std::to_string(model.L()) + " components and no background");
  }
}

/// Log weights of every label for entry theta: index 0 is the background.
void label_log_weights(double theta, const SummaryModel& model, std::vector<double>& out) {
  out.resize(model.L() + 1);
  out[0] = model.eta > 0.0 ? std::log(model.eta) : kNegInf;
  for (std::size_t l = 0; l < model.L(); ++l) {
    const auto& c = model.components[l];
    out[l + 1] = std::log(c.pi) + log_normal_pdf(theta, c.mu, c.s2);
  }
}

/// Log normalizer over the labels still available.
double available_log_mass(const std::vector<double>& log_w, const std::vector<bool>& used) {
  double m = kNegInf;
  for (std::size_t l = 0; l < log_w.size(); ++l) {
    if (!used[l]) m = std::max(m, log_w[l]);
  }
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t l = 0; l < log_w.size(); ++l) {
    if (!used[l]) acc += std::exp(log_w[l] - m);
  }
  return m + std::log(acc);
}

std::vector<std::size_t> random_order(std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

double log_factorial(std::size_t n) { return std::lgamma(double(n) + 1.0); }

}  // namespace

AllocationProposal propose_allocation(const VariableDimSample& x, const SummaryModel& model,
                                      std::mt19937_64& rng) {
  check_feasible(x, model);
  AllocationProposal out;
  out.order = random_order(x.k(), rng);
  out.z.assign(x.k(), 0);
  out.log_q = -log_factorial(x.k());

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> used(model.L() + 1, false);
  used[0] = model.eta <= 0.0;  // label 0 is never exhausted, only disabled
  std::vector<double> log_w;
  for (std::size_t j : out.order) {
    label_log_weights(x.theta[j], model, log_w);
    const double log_mass = available_log_mass(log_w, used);
    // Inverse-cdf draw over the available labels.
    const double r = unif(rng);
    double cum = 0.0;
    std::size_t chosen = model.L() + 1;
    std::size_t last = 0;
    for (std::size_t l = 0; l < log_w.size(); ++l) {
      if (used[l]) continue;
      last = l;
      cum += std::exp(log_w[l] - log_mass);
      if (r < cum) {
        chosen = l;
        break;
      }
    }
    if (chosen > model.L()) chosen = last;
    out.z[j] = static_cast<int>(chosen);
    out.log_q += log_w[chosen] - log_mass;
    if (chosen > 0) used[chosen] = true;
  }
  return out;
}

double log_proposal_density(const VariableDimSample& x, const Allocation& z, const std::vector<std::size_t>& order,
                            const SummaryModel& model) {
  if (order.size() != x.k() || z.size() != x.k()) throw std::domain_error("log_proposal_density: size mismatch");
  double out = -log_factorial(x.k());
  std::vector<bool> used(model.L() + 1, false);
  used[0] = model.eta <= 0.0;
  std::vector<double> log_w;
  for (std::size_t j : order) {
    const auto l = static_cast<std::size_t>(z[j]);
    if (l > model.L() || used[l]) return kNegInf;
    label_log_weights(x.theta[j], model, log_w);
    out += log_w[l] - available_log_mass(log_w, used);
    if (l > 0) used[l] = true;
  }
  return out;
}

AllocationChainState greedy_allocation(const VariableDimSample& x, const SummaryModel& model,
                                       std::mt19937_64& rng) {
  check_feasible(x, model);
  AllocationChainState state;
  state.order = random_order(x.k(), rng);
  state.z.assign(x.k(), 0);
  std::vector<bool> used(model.L() + 1, false);
  used[0] = model.eta <= 0.0;
  std::vector<double> log_w;
  for (std::size_t j : state.order) {
    label_log_weights(x.theta[j], model, log_w);
    std::size_t best = 0;
    double best_w = kNegInf;
    for (std::size_t l = 0; l < log_w.size(); ++l) {
      if (!used[l] && (log_w[l] > best_w || best_w == kNegInf)) {
        best = l;
        best_w = log_w[l];
      }
    }
    state.z[j] = static_cast<int>(best);
    if (best > 0) used[best] = true;
  }
  refresh(state, x, model);
  return state;
}

void refresh(AllocationChainState& state, const VariableDimSample& x, const SummaryModel& model) {
  state.log_completed = log_density_completed(x, state.z, model);
  state.log_proposal = log_proposal_density(x, state.z, state.order, model);
}

double imh_log_ratio(double from_log_target, double from_log_q, double to_log_target, double to_log_q) noexcept {
  return (to_log_target - to_log_q) - (from_log_target - from_log_q);
}

std::size_t imh_kernel(AllocationChainState& state, const VariableDimSample& x, const SummaryModel& model,
                       std::size_t n_steps, std::mt19937_64& rng) {
  if (n_steps == 0) return 0;
  refresh(state, x, model);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t accepted = 0;
  for (std::size_t step = 0; step < n_steps; ++step) {
    AllocationProposal p = propose_allocation(x, model, rng);
    const double lp = log_density_completed(x, p.z, model);
    if (lp == kNegInf) continue;
    double log_ratio;
    if (state.log_completed == kNegInf) {
      log_ratio = 0.0;  // leave a zero-density state unconditionally
    } else {
      log_ratio = imh_log_ratio(state.log_completed, state.log_proposal, lp, p.log_q);
    }
    if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
      state.z = std::move(p.z);
      state.order = std::move(p.order);
      state.log_completed = lp;
      state.log_proposal = p.log_q;
      ++accepted;
    }
  }
  return accepted;
}

AllocationTable exact_allocation_posterior(const VariableDimSample& x, const SummaryModel& model, std::size_t cap) {
  AllocationTable table;
  table.allocations = enumerate_allocations(x.k(), model.L(), cap);
  std::vector<double> logs;
  logs.reserve(table.allocations.size());
  for (const auto& z : table.allocations) logs.push_back(log_density_completed(x, z, model));
  const double norm = log_sum_exp(logs);
  if (norm == kNegInf) throw std::domain_error("exact_allocation_posterior: sample has zero density");
  table.probabilities.reserve(logs.size());
  for (double v : logs) table.probabilities.push_back(std::exp(v - norm));
  return table;
}

}  // namespace transdim
