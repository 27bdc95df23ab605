#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rewardforge/numerics.hpp"
#include "rewardforge/rng.hpp"

using namespace rewardforge;
namespace num = rewardforge::numerics;

namespace {

std::vector<double> random_logits(RngState& rng, int v, double lo, double hi) {
  std::vector<double> z(static_cast<size_t>(v));
  for (double& x : z) x = lo + (hi - lo) * rng.next_double();
  return z;
}

// Brute-force top-k reference: full sort by (prob desc, index asc).
std::vector<std::int32_t> topk_by_full_sort(const std::vector<double>& p, int k) {
  std::vector<std::int32_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    if (p[static_cast<size_t>(a)] != p[static_cast<size_t>(b)]) {
      return p[static_cast<size_t>(a)] > p[static_cast<size_t>(b)];
    }
    return a < b;
  });
  idx.resize(static_cast<size_t>(k));
  return idx;
}

}  // namespace

TEST_CASE("log_softmax uniform and stability") {
  const auto lp = num::log_softmax(std::vector<double>{0.0, 0.0, 0.0});
  for (double v : lp) CHECK(v == doctest::Approx(-std::log(3.0)).epsilon(1e-14));

  const auto extreme = num::log_softmax(std::vector<double>{1000.0, 0.0});
  CHECK(extreme[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(extreme[1] == doctest::Approx(-1000.0).epsilon(1e-12));

  // exp of output sums to 1 even for huge magnitudes
  const auto big = num::log_softmax(std::vector<double>{1e4, -1e4, 5e3});
  double sum = 0.0;
  for (double v : big) sum += std::exp(v);
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("log_softmax matches high-precision reference") {
  // Reference computed with 40-digit arithmetic for z = [1, 2, 3].
  const auto lp = num::log_softmax(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(std::abs(lp[0] - (-2.4076059644443803)) < 1e-12);
  CHECK(std::abs(lp[1] - (-1.4076059644443803)) < 1e-12);
  CHECK(std::abs(lp[2] - (-0.4076059644443803)) < 1e-12);
}

TEST_CASE("log_softmax rejects non-finite input") {
  CHECK_THROWS_AS(
      num::log_softmax(std::vector<double>{1.0, std::nan("")}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      num::softmax(std::vector<double>{std::numeric_limits<double>::infinity(),
                                       0.0}),
      std::invalid_argument);
}

TEST_CASE("softmax basics") {
  const auto p = num::softmax(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));

  const auto q = num::softmax(std::vector<double>{std::log(2.0), 0.0});
  CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto a = num::softmax(std::vector<double>{5.0, 6.0, 7.0});
  const auto b = num::softmax(std::vector<double>{0.0, 1.0, 2.0});
  for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("softmax/log_softmax consistency and shift invariance on random rows") {
  RngState rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(63));
    const auto z = random_logits(rng, v, -50.0, 50.0);
    const auto p = num::softmax(z);
    const auto lp = num::log_softmax(z);
    double sum = 0.0;
    for (int i = 0; i < v; ++i) {
      CHECK(std::abs(std::exp(lp[static_cast<size_t>(i)]) -
                     p[static_cast<size_t>(i)]) < 1e-12);
      sum += p[static_cast<size_t>(i)];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    auto shifted = z;
    const double c = -25.0 + 50.0 * rng.next_double();
    for (double& x : shifted) x += c;
    const auto ps = num::softmax(shifted);
    for (int i = 0; i < v; ++i) {
      CHECK(std::abs(ps[static_cast<size_t>(i)] - p[static_cast<size_t>(i)]) <
            1e-12);
    }
  }
}

TEST_CASE("entropy known values") {
  std::vector<double> uniform(256, 1.0 / 256.0);
  CHECK(std::abs(num::entropy(uniform) - std::log(256.0)) < 1e-12);

  std::vector<double> onehot(8, 0.0);
  onehot[3] = 1.0;
  CHECK(num::entropy(onehot) == 0.0);

  // -sum p ln p for [0.5, 0.3, 0.2], 40-digit reference
  CHECK(std::abs(num::entropy(std::vector<double>{0.5, 0.3, 0.2}) -
                 1.0296530140645735) < 1e-12);
}

TEST_CASE("entropy of uniform equals ln V for V in [2, 1024]") {
  for (int v = 2; v <= 1024; ++v) {
    std::vector<double> u(static_cast<size_t>(v), 1.0 / v);
    CHECK(std::abs(num::entropy(u) - std::log(static_cast<double>(v))) < 1e-12);
  }
}

TEST_CASE("entropy rejects invalid distributions") {
  CHECK_THROWS_AS(num::entropy(std::vector<double>{0.7, 0.7}),
                  std::invalid_argument);
  CHECK_THROWS_AS(num::entropy(std::vector<double>{-0.1, 1.1}),
                  std::invalid_argument);
}

TEST_CASE("top_k tie-breaking and bounds") {
  const std::vector<double> p{0.2, 0.5, 0.2, 0.1};
  const auto top2 = num::top_k_indices(p, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0] == 1);
  CHECK(top2[1] == 0);  // tie between 0 and 2 resolved toward the lower index

  const auto all = num::top_k_indices(p, 4);
  CHECK(all.size() == 4);

  CHECK_THROWS_AS(num::top_k_indices(p, 0), std::invalid_argument);
  CHECK_THROWS_AS(num::top_k_indices(p, 5), std::invalid_argument);
}

TEST_CASE("top_k agrees with a full-sort oracle on random rows") {
  RngState rng(7);
  for (int trial = 0; trial < 10000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(63));
    auto z = random_logits(rng, v, -4.0, 4.0);
    // quantize some entries to force ties
    for (double& x : z) {
      if (rng.next_double() < 0.3) x = std::round(x);
    }
    const auto p = num::softmax(z);
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v)));
    const auto got = num::top_k_indices(p, k);
    const auto want = topk_by_full_sort(p, k);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("categorical_sample one-hot and frequencies") {
  std::vector<double> onehot(6, 0.0);
  onehot[3] = 1.0;
  RngState rng(1);
  for (int i = 0; i < 100; ++i) CHECK(num::categorical_sample(onehot, rng) == 3);

  const std::vector<double> fair{0.5, 0.5};
  RngState rng2(99);
  int count0 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    if (num::categorical_sample(fair, rng2) == 0) ++count0;
  }
  const double freq = static_cast<double>(count0) / n;
  CHECK(freq > 0.49);  // 5 sigma ~ 0.008 around 0.5
  CHECK(freq < 0.51);
}

TEST_CASE("categorical_sample chi-square sanity on a skewed row") {
  const std::vector<double> p{0.6, 0.25, 0.1, 0.05};
  RngState rng(2024);
  const int n = 200000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<size_t>(num::categorical_sample(p, rng))];
  }
  double chi2 = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double expected = p[i] * n;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  CHECK(chi2 < 16.27);  // chi2_{3, 0.999}
}

TEST_CASE("seeded determinism of the rng and sampling") {
  RngState a(123456), b(123456);
  for (int i = 0; i < 1000000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }

  const std::vector<double> p{0.3, 0.3, 0.4};
  RngState s1(77), s2(77);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(num::categorical_sample(p, s1) == num::categorical_sample(p, s2));
  }
}

TEST_CASE("derive_seed gives distinct replayable streams") {
  const auto s1 = derive_seed(1, "pretrain");
  const auto s2 = derive_seed(1, "midtrain");
  CHECK(s1 != s2);
  CHECK(derive_seed(1, "pretrain") == s1);
}
