#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "transdim/core_model.hpp"

namespace transdim {

/// The sample cannot be allocated at all (no background and more entries than components).
class InfeasibleAllocation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// I-MH chain state for one posterior sample. The visiting order that
/// produced z is kept as an auxiliary variable so that the proposal
/// probability of the current state stays exactly computable.
struct AllocationChainState {
  Allocation z;
  std::vector<std::size_t> order;
  double log_completed = kNegInf;
  double log_proposal = kNegInf;
};

struct AllocationProposal {
  Allocation z;
  std::vector<std::size_t> order;
  double log_q = kNegInf;
};

/// Sequential proposal: visit the entries in a uniformly random order and
/// give each one a label among label 0 and the unused Gaussian labels with
/// weights eta and pi_l N(theta_j | mu_l, s_l^2). log_q is the probability
/// of (order, z), i.e. it includes the -log k! of the order.
[[nodiscard]] AllocationProposal propose_allocation(const VariableDimSample& x, const SummaryModel& model,
                                                    std::mt19937_64& rng);

/// log q(order, z) under the sequential proposal.
[[nodiscard]] double log_proposal_density(const VariableDimSample& x, const Allocation& z,
                                          const std::vector<std::size_t>& order, const SummaryModel& model);

/// Same visiting scheme, taking the heaviest label at each step.
[[nodiscard]] AllocationChainState greedy_allocation(const VariableDimSample& x, const SummaryModel& model,
                                                     std::mt19937_64& rng);

/// Recomputes the cached densities of `state` under `model`.
void refresh(AllocationChainState& state, const VariableDimSample& x, const SummaryModel& model);

/// log of the I-MH acceptance ratio for moving from (lp, lq) to (lp', lq').
[[nodiscard]] double imh_log_ratio(double from_log_target, double from_log_q, double to_log_target,
                                   double to_log_q) noexcept;

/// n_steps independent Metropolis-Hastings steps targeting p(z | x, model).
/// Caches are refreshed against `model` first. Returns the accepted count.
std::size_t imh_kernel(AllocationChainState& state, const VariableDimSample& x, const SummaryModel& model,
                       std::size_t n_steps, std::mt19937_64& rng);

struct AllocationTable {
  std::vector<Allocation> allocations;
  std::vector<double> probabilities;
};

/// p(z | x, model) over the whole admissible set, by enumeration.
[[nodiscard]] AllocationTable exact_allocation_posterior(const VariableDimSample& x, const SummaryModel& model,
                                                         std::size_t cap = kDefaultEnumerationCap);

}  // namespace transdim
