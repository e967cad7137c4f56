#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "graphtrack/hungarian.hpp"
#include "graphtrack/rng.hpp"

using namespace graphtrack;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Best {
  std::size_t count = 0;
  double cost = 0.0;
};

// Enumerates every partial injection rows -> cols over finite entries.
void enumerate(const Eigen::MatrixXd& c, Eigen::Index r, std::vector<char>& used, std::size_t count, double cost,
               Best& best) {
  if (r == c.rows()) {
    if (count > best.count || (count == best.count && cost < best.cost)) best = {count, cost};
    return;
  }
  enumerate(c, r + 1, used, count, cost, best);  // row left unmatched
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    if (used[static_cast<std::size_t>(j)] || !std::isfinite(c(r, j))) continue;
    used[static_cast<std::size_t>(j)] = 1;
    enumerate(c, r + 1, used, count + 1, cost + c(r, j), best);
    used[static_cast<std::size_t>(j)] = 0;
  }
}

Best brute_force(const Eigen::MatrixXd& c) {
  Best best;
  std::vector<char> used(static_cast<std::size_t>(c.cols()), 0);
  enumerate(c, 0, used, 0, 0.0, best);
  return best;
}

}  // namespace

TEST(Hungarian, Examples) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const auto ra = solve_assignment(a);
  ASSERT_EQ(ra.pairs.size(), 2u);
  EXPECT_EQ(ra.pairs[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(ra.pairs[1], std::make_pair(std::size_t{1}, std::size_t{1}));
  EXPECT_EQ(ra.total_cost, 0.0);

  Eigen::MatrixXd b(2, 2);
  b << 1, 2, 2, 100;
  const auto rb = solve_assignment(b);
  ASSERT_EQ(rb.pairs.size(), 2u);
  EXPECT_EQ(rb.pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(rb.pairs[1], std::make_pair(std::size_t{1}, std::size_t{0}));
  EXPECT_EQ(rb.total_cost, 4.0);

  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 2, kInf);
  const auto rc = solve_assignment(c);
  EXPECT_TRUE(rc.pairs.empty());
  EXPECT_EQ(rc.unmatched_rows.size(), 3u);
  EXPECT_EQ(rc.unmatched_cols.size(), 2u);
}

TEST(Hungarian, EmptyShapes) {
  EXPECT_TRUE(solve_assignment(Eigen::MatrixXd(0, 3)).pairs.empty());
  EXPECT_EQ(solve_assignment(Eigen::MatrixXd(0, 3)).unmatched_cols.size(), 3u);
  EXPECT_EQ(solve_assignment(Eigen::MatrixXd(2, 0)).unmatched_rows.size(), 2u);
}

TEST(Hungarian, PrefersMoreFinitePairs) {
  // pairing (0,0) alone is cheap but blocks row 1; two finite pairs win
  Eigen::MatrixXd c(2, 2);
  c << 0.0, 5.0, 1.0, kInf;
  const auto r = solve_assignment(c);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.total_cost, 6.0);
}

TEST(Hungarian, MatchesExhaustiveEnumeration) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 400; ++trial) {
    const auto rows = static_cast<Eigen::Index>(rng.below(6));
    const auto cols = static_cast<Eigen::Index>(rng.below(6));
    Eigen::MatrixXd c(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        c(i, j) = rng.bernoulli(0.3) ? kInf : std::floor(rng.uniform(0.0, 10.0)) / 4.0;  // ties are common
    const auto got = solve_assignment(c);
    const auto want = brute_force(c);
    EXPECT_EQ(got.pairs.size(), want.count);
    EXPECT_NEAR(got.total_cost, want.cost, 1e-12);
    // one-to-one, finite, consistent bookkeeping
    std::vector<char> rs(static_cast<std::size_t>(rows), 0), cs(static_cast<std::size_t>(cols), 0);
    double sum = 0.0;
    for (const auto& [r, k] : got.pairs) {
      EXPECT_FALSE(rs[r]++);
      EXPECT_FALSE(cs[k]++);
      EXPECT_TRUE(std::isfinite(c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))));
      sum += c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    }
    EXPECT_EQ(sum, got.total_cost);
    EXPECT_EQ(got.pairs.size() + got.unmatched_rows.size(), static_cast<std::size_t>(rows));
    EXPECT_EQ(got.pairs.size() + got.unmatched_cols.size(), static_cast<std::size_t>(cols));
  }
}

TEST(Hungarian, Deterministic) {
  SplitMix64 rng(5);
  Eigen::MatrixXd c(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) c(i, j) = std::floor(rng.uniform(0, 3));
  const auto a = solve_assignment(c);
  const auto b = solve_assignment(c);
  EXPECT_EQ(a.pairs, b.pairs);
}
