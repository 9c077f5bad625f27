#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "transdim/sem.hpp"

using namespace transdim;

namespace {

SampleSet with_counts(std::initializer_list<std::pair<std::size_t, std::size_t>> k_and_count) {
  SampleSet set;
  for (const auto& [k, count] : k_and_count) {
    for (std::size_t i = 0; i < count; ++i) {
      VariableDimSample x;
      for (std::size_t j = 0; j < k; ++j) x.theta.push_back(0.5 + 0.1 * double(j));
      set.samples.push_back(x);
    }
  }
  return set;
}

VariableDimSample sample_of(std::vector<double> theta) {
  VariableDimSample x;
  x.theta = std::move(theta);
  return x;
}

SemConfig quick_sem(std::uint64_t seed) {
  SemConfig c;
  c.n_iterations = 30;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("quantile_sorted uses the (n+1)p position") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.25));
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(v, 0.75) == doctest::Approx(3.75));
  CHECK(quantile_sorted(v, 0.01) == 1.0);
  CHECK(quantile_sorted(v, 0.99) == 4.0);
  CHECK(quantile_sorted(std::vector<double>{7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS((void)quantile_sorted(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("robust_location_scale: worked examples") {
  const auto q = robust_location_scale(std::vector<double>{-0.6744897501960817, 0.0, 0.6744897501960817});
  CHECK(q.mu == doctest::Approx(0.0));
  CHECK(q.s == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(kIqrToSigma == doctest::Approx(2.0 * 0.6744897501960817).epsilon(1e-15));

  const auto c = robust_location_scale(std::vector<double>{0.4, 0.4, 0.4}, 1e-4);
  CHECK(c.mu == 0.4);
  CHECK(c.s == 1e-4);
  CHECK_THROWS_AS((void)robust_location_scale(std::vector<double>{1.0}), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.68, 0.02);
  std::vector<double> v(100000);
  for (auto& x : v) x = g(rng);
  const auto e = robust_location_scale(v);
  CHECK(testing::relative_error(e.mu, 0.68) < 0.02);
  CHECK(testing::relative_error(e.s, 0.02) < 0.02);
}

TEST_CASE("choose_L") {
  CHECK(choose_L(with_counts({{2, 595}, {3, 308}, {4, 78}, {5, 19}}), 0.9) == 3);
  CHECK(choose_L(with_counts({{0, 10}}), 0.9) == 0);
  CHECK(choose_L(with_counts({{1, 50}, {2, 50}}), 0.9) == 2);
  CHECK(choose_L(with_counts({{1, 90}, {2, 10}}), 0.9) == 1);
  CHECK(choose_L(with_counts({{4, 5}, {1, 5}}), 0.5) == 1);
  CHECK_THROWS_AS((void)choose_L(SampleSet{}, 0.9), std::invalid_argument);
}

TEST_CASE("initialize_model: degenerate slot floors the scale") {
  SampleSet set;
  for (int i = 0; i < 50; ++i) set.samples.push_back(sample_of({0.5}));
  const auto m = initialize_model(set, 1, 1e-4);
  REQUIRE(m.L() == 1);
  CHECK(m.components[0].mu == 0.5);
  CHECK(m.components[0].s2 == doctest::Approx(1e-8));
  CHECK(m.components[0].pi == kInitialPresence);
  CHECK(m.eta == 0.0);
}

TEST_CASE("initialize_model: sorted slots recover generating scales") {
  std::mt19937_64 rng(2);
  const double mu[] = {0.6, 0.7, 0.8}, s[] = {0.01, 0.02, 0.015};
  SampleSet set;
  for (int i = 0; i < 10000; ++i) {
    VariableDimSample x;
    for (int l = 0; l < 3; ++l) x.theta.push_back(std::normal_distribution<double>(mu[l], s[l])(rng));
    std::shuffle(x.theta.begin(), x.theta.end(), rng);
    set.samples.push_back(x);
  }
  // A few samples with two extra values set the background intensity.
  for (int i = 0; i < 1000; ++i) set.samples.push_back(sample_of({0.6, 0.7, 0.8, 1.5, 2.5}));
  const auto m = initialize_model(set, 3);
  REQUIRE(m.L() == 3);
  for (int l = 0; l < 3; ++l) {
    CHECK(std::abs(m.components[l].mu - mu[l]) < 0.002);
    CHECK(testing::relative_error(std::sqrt(m.components[l].s2), s[l]) < 0.05);
    CHECK(m.components[l].pi == kInitialPresence);
  }
  CHECK(m.lambda0() == doctest::Approx(2000.0 / 11000.0));
}

TEST_CASE("initialize_model: fallback to smaller k and padding") {
  SampleSet set;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> a(1.0, 0.05), b(2.0, 0.2);
  for (int i = 0; i < 200; ++i) set.samples.push_back(sample_of({a(rng), b(rng)}));
  for (int i = 0; i < 5; ++i) set.samples.push_back(sample_of({1.0, 1.5, 2.0}));
  const auto m = initialize_model(set, 3);
  REQUIRE(m.L() == 3);
  for (const auto& c : m.components) {
    CHECK(c.s2 > 0.0);
    CHECK(c.pi == kInitialPresence);
  }
  std::vector<double> mus;
  for (const auto& c : m.components) mus.push_back(c.mu);
  std::sort(mus.begin(), mus.end());
  CHECK(std::abs(mus[0] - 1.0) < 0.03);
  // The wider slot (around 2.0) is the one split in two.
  CHECK(mus[1] > 1.5);
  CHECK(mus[2] > 2.0);

  SampleSet empty_ks;
  for (int i = 0; i < 30; ++i) empty_ks.samples.push_back(sample_of({}));
  const auto zero = initialize_model(empty_ks, 0);
  CHECK(zero.L() == 0);
  CHECK(zero.eta == 0.0);
}

TEST_CASE("m_step: counting rules") {
  SampleSet set;
  set.samples = {sample_of({1.0, 2.0}), sample_of({1.1}), sample_of({2.5}), sample_of({})};
  SummaryModel prev;
  prev.components = {{1.0, 0.01, 0.5}, {2.0, 0.04, 0.5}};
  const std::vector<Allocation> z{{1, 0}, {1}, {0}, {}};
  const auto r = m_step(set, z, prev);
  CHECK(r.model.components[0].pi == doctest::Approx(0.5));
  CHECK(r.model.components[0].mu == doctest::Approx(1.05));
  CHECK(r.component_counts == std::vector<std::size_t>{2, 0});
  CHECK(r.background_count == 2);
  CHECK(r.model.eta == doctest::Approx(2.0 / (4.0 * kPi)));
  // Starved component: previous location and scale, pi floored at 1/(2M).
  CHECK(r.starved == std::vector<bool>{false, true});
  CHECK(r.model.components[1].mu == 2.0);
  CHECK(r.model.components[1].s2 == 0.04);
  CHECK(r.model.components[1].pi == doctest::Approx(1.0 / 8.0));

  CHECK_THROWS_AS((void)m_step(set, std::vector<Allocation>{{1, 1}, {1}, {0}, {}}, prev), std::invalid_argument);
  CHECK_THROWS_AS((void)m_step(set, std::vector<Allocation>{{1, 0}}, prev), std::invalid_argument);
}

TEST_CASE("m_step: background intensity definition") {
  SampleSet set;
  std::vector<Allocation> z;
  for (int i = 0; i < 1000; ++i) {
    set.samples.push_back(i < 40 ? sample_of({1.0, 2.0}) : sample_of({1.0}));
    z.push_back(i < 40 ? Allocation{1, 0} : Allocation{1});
  }
  SummaryModel prev;
  prev.components = {{1.0, 0.01, 0.5}};
  const auto r = m_step(set, z, prev);
  CHECK(r.model.eta == doctest::Approx(0.01273).epsilon(1e-3));
  CHECK(r.model.lambda0() == doctest::Approx(0.04));
  CHECK(r.model.components[0].pi == 1.0);
}

TEST_CASE("m_step: robust estimates agree with the complete-data maximizer on clean data") {
  SummaryModel truth;
  truth.components = {{1.0, 0.03 * 0.03, 0.9}, {1.8, 0.05 * 0.05, 0.4}};
  std::mt19937_64 rng(4);
  std::vector<Allocation> labels;
  const auto set = testing::draw_sample_set(truth, 10000, rng, &labels);
  const auto r = m_step(set, labels, truth);
  for (std::size_t l = 0; l < 2; ++l) {
    std::vector<double> v;
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = 0; j < labels[i].size(); ++j) {
        if (labels[i][j] == int(l + 1)) v.push_back(set.samples[i].theta[j]);
      }
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double var = 0.0;
    for (double t : v) var += (t - mean) * (t - mean) / double(v.size());
    CHECK(testing::relative_error(r.model.components[l].mu, mean) < 0.05);
    CHECK(testing::relative_error(std::sqrt(r.model.components[l].s2), std::sqrt(var)) < 0.05);
    CHECK(r.model.components[l].pi == doctest::Approx(double(v.size()) / 10000.0));
  }
}

TEST_CASE("criterion: worked examples") {
  SummaryModel m;
  m.components = {{0.0, 1.0, 1.0}};
  SampleSet one;
  one.samples = {sample_of({0.0})};
  CHECK(criterion(one, m) == doctest::Approx(-0.9189385).epsilon(1e-7));

  std::mt19937_64 rng(5);
  SummaryModel model;
  model.components = {{1.0, 0.01, 0.7}, {2.0, 0.02, 0.5}, {2.5, 0.05, 0.3}};
  model.eta = 0.2;
  const auto set = testing::draw_sample_set(model, 200, rng);
  SampleSet doubled = set;
  doubled.samples.insert(doubled.samples.end(), set.samples.begin(), set.samples.end());
  CHECK(criterion(doubled, model) == doctest::Approx(criterion(set, model)).epsilon(1e-12));

  double enumerated = 0.0;
  std::size_t n = 0;
  for (const auto& x : set.samples) {
    if (x.k() > 4) continue;
    enumerated += log_density_marginal_enumerated(x, model);
    ++n;
  }
  SampleSet small;
  for (const auto& x : set.samples) {
    if (x.k() <= 4) small.samples.push_back(x);
  }
  CHECK(criterion(small, model) == doctest::Approx(enumerated / double(n)).epsilon(1e-11));

  SummaryModel narrow = model;
  narrow.eta = 0.0;
  SampleSet too_many;
  too_many.samples = {sample_of({1.0, 1.5, 2.0, 2.5})};
  CHECK(criterion(too_many, narrow) == kNegInf);
}

TEST_CASE("summarize_trace takes component-wise medians and sorts by mu") {
  SemTrace trace;
  for (int r = 0; r < 5; ++r) {
    SemIteration it;
    it.model.components = {{2.0 + 0.1 * r, 0.01 * (r + 1), 0.5}, {1.0, 0.04, 0.1 * (r + 1)}};
    it.model.eta = 0.01 * r;
    trace.iterations.push_back(it);
  }
  const auto m = summarize_trace(trace, 3);
  REQUIRE(m.L() == 2);
  CHECK(m.components[0].mu == 1.0);
  CHECK(m.components[0].pi == doctest::Approx(0.4));
  CHECK(m.components[1].mu == doctest::Approx(2.3));
  CHECK(m.components[1].s2 == doctest::Approx(0.04));
  CHECK(m.eta == doctest::Approx(0.03));
}

TEST_CASE("run_sem: self-consistency on data drawn from the model") {
  SummaryModel truth;
  truth.components = {{1.0, 0.05 * 0.05, 0.8}};
  truth.eta = 0.01;
  std::mt19937_64 rng(6);
  std::vector<Allocation> labels;
  const auto set = testing::draw_sample_set(truth, 10000, rng, &labels);
  std::size_t background = 0, present = 0;
  for (const auto& z : labels) {
    for (int l : z) (l == 0 ? background : present) += 1;
  }
  const auto fit = run_sem(set, quick_sem(1));
  REQUIRE(fit.model.L() == 1);
  const auto& c = fit.model.components[0];
  CHECK(testing::relative_error(c.mu, 1.0) < 0.1);
  CHECK(testing::relative_error(std::sqrt(c.s2), 0.05) < 0.1);
  CHECK(testing::relative_error(c.pi, 0.8) < 0.1);
  // The realized background count differs from its expectation by Poisson
  // noise, so compare the intensity with the value the labels imply.
  CHECK(testing::relative_error(c.pi, double(present) / 1e4) < 0.05);
  CHECK(testing::relative_error(fit.model.eta, double(background) / (1e4 * kPi)) < 0.05);
}

TEST_CASE("run_sem: trace invariants and determinism") {
  SummaryModel truth;
  truth.components = {{0.8, 0.02 * 0.02, 0.95}, {1.6, 0.04 * 0.04, 0.5}, {2.4, 0.03 * 0.03, 0.7}};
  truth.eta = 0.1;
  std::mt19937_64 rng(7);
  const auto set = testing::draw_sample_set(truth, 3000, rng);
  std::size_t total_k = 0;
  for (const auto& x : set.samples) total_k += x.k();

  auto config = quick_sem(3);
  config.n_iterations = 15;
  const auto a = run_sem(set, config);
  REQUIRE(a.trace.iterations.size() == 15);
  for (const auto& it : a.trace.iterations) {
    for (const auto& c : it.model.components) {
      CHECK(c.pi > 0.0);
      CHECK(c.pi <= 1.0);
    }
    CHECK(it.model.eta >= 0.0);
    CHECK(std::isfinite(it.criterion));
    const std::size_t assigned =
        std::accumulate(it.component_counts.begin(), it.component_counts.end(), it.background_count);
    CHECK(assigned == total_k);
  }
  for (std::size_t l = 1; l < a.model.L(); ++l) CHECK(a.model.components[l - 1].mu <= a.model.components[l].mu);
  REQUIRE(a.final_allocations.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(is_admissible(a.final_allocations[i], set.samples[i].k(), a.model.L()));

  // Final labels follow the mu order: entries labelled l sit near mu_l.
  for (std::size_t l = 0; l < a.model.L(); ++l) {
    std::vector<double> v;
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = 0; j < set.samples[i].k(); ++j) {
        if (a.final_allocations[i][j] == int(l + 1)) v.push_back(set.samples[i].theta[j]);
      }
    }
    REQUIRE(v.size() >= 2);
    CHECK(std::abs(robust_location_scale(v).mu - a.model.components[l].mu) < 0.05);
  }

  const auto b = run_sem(set, config);
  bool identical = a.trace.iterations.size() == b.trace.iterations.size();
  for (std::size_t r = 0; identical && r < a.trace.iterations.size(); ++r) {
    identical = a.trace.iterations[r].criterion == b.trace.iterations[r].criterion &&
                a.trace.iterations[r].background_count == b.trace.iterations[r].background_count;
  }
  CHECK(identical);
  CHECK(a.final_allocations == b.final_allocations);

  auto other = config;
  other.seed = 4;
  const auto c = run_sem(set, other);
  CHECK(c.trace.iterations.back().criterion != a.trace.iterations.back().criterion);
}

TEST_CASE("config validation") {
  SemConfig c;
  CHECK_NOTHROW(c.validate());
  c.init_percentile = 1.0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  c = SemConfig{};
  c.n_iterations = 0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  CHECK_THROWS_AS((void)run_sem(SampleSet{}, SemConfig{}), std::invalid_argument);
}
