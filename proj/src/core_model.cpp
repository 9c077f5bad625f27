#include "transdim/core_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace transdim {

namespace {

constexpr std::size_t kMaxDynamicLabels = 20;

double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

std::size_t saturating_mul(std::size_t a, std::size_t b) noexcept {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

std::size_t saturating_add(std::size_t a, std::size_t b) noexcept {
  return (b > std::numeric_limits<std::size_t>::max() - a) ? std::numeric_limits<std::size_t>::max()
                                                            : a + b;
}

}  // namespace

std::size_t SampleSet::max_k() const noexcept {
  std::size_t m = 0;
  for (const auto& s : samples) m = std::max(m, s.k());
  return m;
}

void validate(const VariableDimSample& x, std::size_t k_max) {
  if (x.k() > k_max) {
    throw std::domain_error("sample has k=" + std::to_string(x.k()) + " > k_max=" + std::to_string(k_max));
  }
  for (double t : x.theta) {
    if (!(t > 0.0 && t < kPi)) throw std::domain_error("sample parameter outside (0, pi)");
  }
}

void validate(const SummaryModel& model) {
  if (!(model.eta >= 0.0) || !std::isfinite(model.eta)) throw std::domain_error("eta must be finite and >= 0");
  if (!(model.theta_volume > 0.0)) throw std::domain_error("theta_volume must be > 0");
  for (const auto& c : model.components) {
    if (!(c.s2 > 0.0)) throw std::domain_error("component variance must be > 0");
    if (!(c.pi > 0.0 && c.pi <= 1.0)) throw std::domain_error("probability of presence must lie in (0, 1]");
  }
}

bool is_admissible(const Allocation& z, std::size_t k, std::size_t L) noexcept {
  if (z.size() != k) return false;
  std::vector<bool> used(L + 1, false);
  for (int label : z) {
    if (label < 0 || static_cast<std::size_t>(label) > L) return false;
    if (label == 0) continue;
    if (used[label]) return false;
    used[label] = true;
  }
  return true;
}

std::size_t count_allocations(std::size_t k, std::size_t L) noexcept {
  // sum_j C(k, j) * L! / (L - j)!
  std::size_t total = 0;
  std::size_t binom = 1;    // C(k, j)
  std::size_t falling = 1;  // L (L-1) ... (L-j+1)
  for (std::size_t j = 0; j <= std::min(k, L); ++j) {
    if (j > 0) {
      binom = saturating_mul(binom, k - j + 1) / j;
      falling = saturating_mul(falling, L - j + 1);
    }
    total = saturating_add(total, saturating_mul(binom, falling));
  }
  return total;
}

std::vector<Allocation> enumerate_allocations(std::size_t k, std::size_t L, std::size_t cap) {
  const std::size_t count = count_allocations(k, L);
  if (count > cap) {
    throw ResourceError("admissible allocation count " + std::to_string(count) + " exceeds cap " +
                        std::to_string(cap));
  }
  std::vector<Allocation> out;
  out.reserve(count);
  Allocation z(k, 0);
  std::vector<bool> used(L + 1, false);
  std::function<void(std::size_t)> recurse = [&](std::size_t j) {
    if (j == k) {
      out.push_back(z);
      return;
    }
    for (std::size_t l = 0; l <= L; ++l) {
      if (l > 0 && used[l]) continue;
      z[j] = static_cast<int>(l);
      if (l > 0) used[l] = true;
      recurse(j + 1);
      if (l > 0) used[l] = false;
    }
  };
  recurse(0);
  return out;
}

double log_normal_pdf(double x, double mu, double s2) noexcept {
  const double d = x - mu;
  return -0.5 * (std::log(2.0 * kPi * s2) + d * d / s2);
}

double log_sum_exp(std::span<const double> values) noexcept {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

double log_density_completed(const VariableDimSample& x, const Allocation& z, const SummaryModel& model) {
  const std::size_t L = model.L();
  if (!is_admissible(z, x.k(), L)) throw std::domain_error("allocation is not admissible for this sample");

  const double lambda0 = model.lambda0();
  double out = -log_factorial(x.k()) - lambda0;
  const double log_eta = model.eta > 0.0 ? std::log(model.eta) : kNegInf;

  std::vector<bool> present(L + 1, false);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const int l = z[j];
    if (l == 0) {
      // Lambda0^{n0} (1/|Theta|)^{n0} = eta^{n0}
      if (model.eta <= 0.0) return kNegInf;
      out += log_eta;
    } else {
      const auto& c = model.components[l - 1];
      out += log_normal_pdf(x.theta[j], c.mu, c.s2);
      present[l] = true;
    }
  }
  for (std::size_t l = 1; l <= L; ++l) {
    const double p = model.components[l - 1].pi;
    out += present[l] ? std::log(p) : std::log1p(-p);
  }
  return out;
}

double log_density_marginal(const VariableDimSample& x, const SummaryModel& model) {
  const std::size_t L = model.L();
  const std::size_t k = x.k();
  if (L > kMaxDynamicLabels) {
    throw ResourceError("log_density_marginal supports at most " + std::to_string(kMaxDynamicLabels) +
                        " Gaussian components");
  }
  if (model.eta <= 0.0 && k > L) return kNegInf;

  const std::size_t n_masks = std::size_t{1} << L;
  const double log_eta = model.eta > 0.0 ? std::log(model.eta) : kNegInf;

  // log_gauss[j * L + l]
  std::vector<double> log_gauss(k * L);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& c = model.components[l];
      log_gauss[j * L + l] = log_normal_pdf(x.theta[j], c.mu, c.s2);
    }
  }

  // table[mask] = log sum over allocations of the first j entries that use
  // exactly the Gaussian labels in mask, of the per-entry density factors.
  std::vector<double> table(n_masks, kNegInf);
  std::vector<double> next(n_masks);
  table[0] = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(next.begin(), next.end(), kNegInf);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      const double base = table[mask];
      if (base == kNegInf) continue;
      if (model.eta > 0.0) {
        const double v = base + log_eta;
        next[mask] = log_sum_exp(std::array<double, 2>{next[mask], v});
      }
      for (std::size_t l = 0; l < L; ++l) {
        if (mask & (std::size_t{1} << l)) continue;
        const std::size_t to = mask | (std::size_t{1} << l);
        const double v = base + log_gauss[j * L + l];
        next[to] = log_sum_exp(std::array<double, 2>{next[to], v});
      }
    }
    table.swap(next);
  }

  std::vector<double> finals;
  finals.reserve(n_masks);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    if (table[mask] == kNegInf) continue;
    double v = table[mask];
    for (std::size_t l = 0; l < L; ++l) {
      const double p = model.components[l].pi;
      v += (mask & (std::size_t{1} << l)) ? std::log(p) : std::log1p(-p);
    }
    finals.push_back(v);
  }
  return log_sum_exp(finals) - log_factorial(k) - model.lambda0();
}

double log_density_marginal_enumerated(const VariableDimSample& x, const SummaryModel& model,
                                       std::size_t cap) {
  const auto all = enumerate_allocations(x.k(), model.L(), cap);
  std::vector<double> logs;
  logs.reserve(all.size());
  for (const auto& z : all) logs.push_back(log_density_completed(x, z, model));
  return log_sum_exp(logs);
}

}  // namespace transdim
