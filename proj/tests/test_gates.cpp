#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mpsim/gates.hpp"
#include "mpsim/heights.hpp"
#include "mpsim/mps_state.hpp"

namespace mpsim {
namespace {

std::vector<TwoBitGate> all_builtins() {
  return {two_bit::ID(), two_bit::SWAP(), two_bit::CNAND(), two_bit::CAND(),
          two_bit::COR(), two_bit::CXOR(), two_bit::CNOR()};
}

// Dense push-forward of a deterministic gate on adjacent bits (j, j+1),
// bit 1 most significant.
std::vector<double> push_forward(const std::vector<double>& p, int n, int j, const TwoBitGate& g) {
  std::vector<double> out(p.size(), 0.0);
  const std::size_t ma = std::size_t{1} << (n - j);
  const std::size_t mb = std::size_t{1} << (n - j - 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int a = (i & ma) ? 1 : 0;
    const int b = (i & mb) ? 1 : 0;
    std::size_t k = i & ~(ma | mb);
    if (g.A(a, b)) k |= ma;
    if (g.B(a, b)) k |= mb;
    out[k] += p[i];
  }
  return out;
}

TEST(OneBitGate, NotFlipsFixedBit) {
  const auto s = apply_one_bit(init_state(1, {{1, 0}}), 1, one_bit::NOT());
  EXPECT_DOUBLE_EQ(evaluate_probability(s, {{1, 1}}), 1.0);
  EXPECT_DOUBLE_EQ(evaluate_probability(s, {{1, 0}}), 0.0);
}

TEST(OneBitGate, RandAveragesTheSite) {
  auto s = apply_two_bit(init_state(3, {{2, 1}}), 1, two_bit::CNAND());
  const Matrix avg = s.sites[1].traced() / 2.0;
  s = apply_one_bit(std::move(s), 2, one_bit::RAND());
  EXPECT_TRUE(s.sites[1].m0.isApprox(avg, 1e-15));
  EXPECT_TRUE(s.sites[1].m1.isApprox(avg, 1e-15));
}

TEST(OneBitGate, RstResetsUniformBit) {
  const auto s = apply_one_bit(init_state(1), 1, one_bit::RST());
  EXPECT_DOUBLE_EQ(evaluate_probability(s, {{1, 0}}), 1.0);
  EXPECT_DOUBLE_EQ(evaluate_probability(s, {{1, 1}}), 0.0);
}

TEST(OneBitGate, TransferColumnsSumToOne) {
  for (double p : {0.0, 0.25, 1.0})
    for (double q : {0.0, 0.6, 1.0}) {
      const auto g = one_bit::make(p, q);
      for (int in = 0; in < 2; ++in) EXPECT_DOUBLE_EQ(g.transfer(0, in) + g.transfer(1, in), 1.0);
    }
  EXPECT_THROW(one_bit::make(1.5, 0.0), std::invalid_argument);
}

TEST(OneBitGate, IndexOutOfRange) {
  EXPECT_THROW(apply_one_bit(init_state(2), 3, one_bit::NOT()), std::out_of_range);
}

TEST(TwoBitGate, NandTransferEntries) {
  const auto g = two_bit::CNAND();
  int ones = 0;
  for (int ao = 0; ao < 2; ++ao)
    for (int bo = 0; bo < 2; ++bo)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) ones += g.transfer(ao, bo, a, b);
  EXPECT_EQ(ones, 4);
  EXPECT_EQ(g.transfer(0, 1, 0, 0), 1);
  EXPECT_EQ(g.transfer(0, 1, 0, 1), 1);
  EXPECT_EQ(g.transfer(1, 1, 1, 0), 1);
  EXPECT_EQ(g.transfer(1, 0, 1, 1), 1);
}

TEST(TwoBitGate, SumRuleForEveryBuiltin) {
  for (const auto& g : all_builtins())
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        int total = 0;
        for (int ao = 0; ao < 2; ++ao)
          for (int bo = 0; bo < 2; ++bo) total += g.transfer(ao, bo, a, b);
        EXPECT_EQ(total, 1) << g.name;
      }
}

TEST(TwoBitGate, ReversedActsOnSwappedOperands) {
  const auto g = two_bit::CNAND().reversed();
  // Now B is the untouched bit and A = NAND.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      EXPECT_EQ(g.A(a, b), 1 - (a & b));
      EXPECT_EQ(g.B(a, b), b);
    }
}

TEST(AssembleGateBlocks, NandOnUniformScalars) {
  const auto u = SiteMatrices::scalar(0.5, 0.5);
  const Matrix m = assemble_gate_blocks(u, u, two_bit::CNAND());
  // Blocks: (0,0) = 0, (0,1) = M0 M0 + M0 M1, (1,0) = M1 M1, (1,1) = M1 M0.
  Matrix expected(2, 2);
  expected << 0.0, 0.5 * 0.5 + 0.5 * 0.5, 0.5 * 0.5, 0.5 * 0.5;
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m, expected);
  EXPECT_EQ(m(0, 1), 0.5);
  EXPECT_EQ(m(1, 0), 0.25);
}

TEST(AssembleGateBlocks, IdentityLayout) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd = [&](int r, int c) { return Matrix::NullaryExpr(r, c, [&] { return u(rng); }); };
  SiteMatrices left{rnd(2, 3), rnd(2, 3)};
  SiteMatrices right{rnd(3, 4), rnd(3, 4)};
  const Matrix m = assemble_gate_blocks(left, right, two_bit::ID());
  EXPECT_TRUE(m.block(0, 0, 2, 4).isApprox(left.m0 * right.m0));
  EXPECT_TRUE(m.block(0, 4, 2, 4).isApprox(left.m0 * right.m1));
  EXPECT_TRUE(m.block(2, 0, 2, 4).isApprox(left.m1 * right.m0));
  EXPECT_TRUE(m.block(2, 4, 2, 4).isApprox(left.m1 * right.m1));
}

TEST(AssembleGateBlocks, DimensionMismatch) {
  SiteMatrices left{Matrix::Ones(1, 2), Matrix::Ones(1, 2)};
  SiteMatrices right{Matrix::Ones(3, 1), Matrix::Ones(3, 1)};
  EXPECT_THROW(assemble_gate_blocks(left, right, two_bit::ID()), CorruptState);
}

Matrix reconstruct(const SplitResult& s) {
  Matrix lhs(2 * s.left.rows(), s.left.cols());
  lhs << s.left.m0, s.left.m1;
  Matrix rhs(s.right.rows(), 2 * s.right.cols());
  rhs << s.right.m0, s.right.m1;
  return lhs * rhs;
}

TEST(SvdSplit, RankOne) {
  Matrix m(2, 2);
  m << 0.0, 0.5, 0.0, 0.5;
  const auto s = svd_split(m);
  EXPECT_EQ(s.left.cols(), 1);
  EXPECT_LE((reconstruct(s) - m).norm(), 1e-12);
}

TEST(SvdSplit, NandBlocksAreFullRank) {
  Matrix m(2, 2);
  m << 0.0, 0.5, 0.25, 0.25;
  EXPECT_DOUBLE_EQ(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0), -0.125);
  const auto s = svd_split(m);
  EXPECT_EQ(s.left.cols(), 2);
  EXPECT_LE((reconstruct(s) - m).norm(), 1e-12);
}

TEST(SvdSplit, RankDeficientFourByFour) {
  Eigen::Vector4d u1(1, 0, 2, 0), u2(0, 1, 1, 0);
  Eigen::Vector4d v1(0.5, 0, 0, 1), v2(0, 0, 3, 0);
  const Matrix m = u1 * v1.transpose() + u2 * v2.transpose();
  const auto s = svd_split(m);
  EXPECT_EQ(s.left.cols(), 2);
  EXPECT_LT(s.left.cols(), 4);
  EXPECT_LE((reconstruct(s) - m).norm() / m.norm(), 1e-12);
}

TEST(SvdSplit, AllZeroIsCorrupt) {
  EXPECT_THROW(svd_split(Matrix::Zero(2, 2)), CorruptState);
}

TEST(SvdSplit, LossyCapMarksTruncation) {
  Matrix m(2, 2);
  m << 0.0, 0.5, 0.25, 0.25;
  SvdConfig cfg;
  cfg.trunc_max_rank = 1;
  const auto s = svd_split(m, cfg);
  EXPECT_EQ(s.left.cols(), 1);
  EXPECT_TRUE(s.truncated);
}

TEST(ApplyTwoBit, NandOnUniformPair) {
  const auto s = apply_two_bit(init_state(2), 1, two_bit::CNAND());
  EXPECT_NEAR(evaluate_probability(s, {{2, 1}}), 0.75, 1e-12);
  EXPECT_NEAR(evaluate_probability(s, {{2, 0}}), 0.25, 1e-12);
  EXPECT_EQ(s.gate_count(), 1);
  EXPECT_EQ(s.bond_dims()[1], 2u);
}

TEST(ApplyTwoBit, IdentityLeavesDistribution) {
  std::mt19937 rng(5);
  auto s = init_state(5, {{2, 1}});
  s = apply_two_bit(std::move(s), 2, two_bit::CNOR());
  s = apply_two_bit(std::move(s), 3, two_bit::CXOR());
  const auto before = full_distribution(s);
  s = apply_two_bit(std::move(s), 3, two_bit::ID());
  const auto after = full_distribution(s);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
}

TEST(ApplyTwoBit, SwapExchangesDeltas) {
  const auto s = apply_two_bit(init_state(2, {{1, 0}, {2, 1}}), 1, two_bit::SWAP());
  EXPECT_NEAR(evaluate_probability(s, {{1, 1}, {2, 0}}), 1.0, 1e-12);
}

TEST(ApplyTwoBit, IndexOutOfRange) {
  EXPECT_THROW(apply_two_bit(init_state(3), 3, two_bit::ID()), std::out_of_range);
  EXPECT_THROW(apply_two_bit(init_state(3), 0, two_bit::ID()), std::out_of_range);
}

TEST(RecompressSweeps, PaddedProductStateCollapses) {
  auto s = init_state(3);
  s.sites[0].m0 = Matrix{{0.5, 0.0}};
  s.sites[0].m1 = Matrix{{0.5, 0.0}};
  s.sites[1].m0 = Matrix{{0.5, 0.0}, {7.0, 0.0}};
  s.sites[1].m1 = Matrix{{0.5, 0.0}, {-3.0, 0.0}};
  s.sites[2].m0 = Matrix{{0.5}, {2.0}};
  s.sites[2].m1 = Matrix{{0.5}, {1.0}};
  const auto before = full_distribution(s);
  s = recompress_sweeps(std::move(s));
  for (auto d : s.bond_dims()) EXPECT_EQ(d, 1u);
  const auto after = full_distribution(s);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
  EXPECT_EQ(s.gate_count(), 4);
}

TEST(RecompressSweeps, RepairsHeightFaultAfterRemoval) {
  auto s = init_state(4);
  for (int cut : {1, 2, 3, 2, 1, 3, 2}) s = apply_two_bit(std::move(s), cut, cut % 2 ? two_bit::CXOR() : two_bit::CNAND());
  s = remove_bit(std::move(s), 2);
  EXPECT_TRUE(s.profile.stale);
  EXPECT_FALSE(check_bounds(s.profile, s.bond_dims()).ok());
  const auto before = full_distribution(s);
  s = recompress_sweeps(std::move(s));
  const auto report = check_bounds(s.profile, s.bond_dims());
  EXPECT_TRUE(report.ok()) << (report.violations.empty() ? "" : report.violations.front());
  EXPECT_TRUE(satisfies_hdc(s.tracked_heights()));
  const auto after = full_distribution(s);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-9);
}

TEST(RecompressSweeps, PreservesDistributionAndNeverGrows) {
  std::mt19937 rng(21);
  const auto gates = all_builtins();
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + trial % 6;
    std::uniform_int_distribution<int> cut(1, n - 1), pick(0, static_cast<int>(gates.size()) - 1);
    auto s = init_state(n, {{n, 0}});
    for (int k = 0; k < 4 * n; ++k) s = apply_two_bit(std::move(s), cut(rng), gates[pick(rng)]);
    const auto dims_before = s.bond_dims();
    const auto before = full_distribution(s);
    s = recompress_sweeps(std::move(s));
    const auto dims_after = s.bond_dims();
    for (std::size_t j = 0; j < dims_before.size(); ++j) EXPECT_LE(dims_after[j], dims_before[j]);
    const auto after = full_distribution(s);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-9);
    EXPECT_TRUE(check_bounds(s.profile, dims_after).ok());
  }
}

TEST(GateProperties, MatchesDensePushForward) {
  std::mt19937 rng(1234);
  const auto gates = all_builtins();
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + trial % 9;  // up to 10 bits
    std::uniform_int_distribution<int> cut(1, n - 1), pick(0, static_cast<int>(gates.size()) - 1);
    BitAssignment fixed;
    if (n > 2) fixed.set(n, 0);
    auto s = init_state(n, fixed);
    auto dense = full_distribution(s);
    for (int k = 0; k < 3 * n; ++k) {
      const int j = cut(rng);
      const auto& g = gates[pick(rng)];
      s = apply_two_bit(std::move(s), j, g);
      dense = push_forward(dense, n, j, g);
      ASSERT_NEAR(evaluate_probability(s), 1.0, 1e-9);
      const auto report = check_bounds(s.profile, s.bond_dims());
      ASSERT_TRUE(report.hdc && report.dominance);
    }
    const auto mps = full_distribution(s);
    for (std::size_t i = 0; i < dense.size(); ++i) EXPECT_NEAR(mps[i], dense[i], 1e-9);
  }
}

TEST(GateProperties, SvdReconstructionRelativeError) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int dl = 1 + trial % 4, dm = 1 + trial % 3, dr = 1 + (trial * 7) % 5;
    auto rnd = [&](int r, int c) { return Matrix::NullaryExpr(r, c, [&] { return u(rng); }); };
    SiteMatrices left{rnd(dl, dm), rnd(dl, dm)};
    SiteMatrices right{rnd(dm, dr), rnd(dm, dr)};
    for (const auto& g : all_builtins()) {
      const Matrix blocks = assemble_gate_blocks(left, right, g);
      if (blocks.norm() == 0.0) continue;
      const auto s = svd_split(blocks);
      EXPECT_LE((reconstruct(s) - blocks).norm() / blocks.norm(), 1e-10);
    }
  }
}

TEST(GateProperties, DisjointGatesCommute) {
  std::mt19937 rng(77);
  const auto gates = all_builtins();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(gates.size()) - 1);
  for (int trial = 0; trial < 10; ++trial) {
    auto base = init_state(6);
    for (int k = 0; k < 6; ++k) base = apply_two_bit(std::move(base), 1 + k % 5, gates[pick(rng)]);
    const auto& g1 = gates[pick(rng)];
    const auto& g2 = gates[pick(rng)];
    const auto ab = full_distribution(apply_two_bit(apply_two_bit(base, 1, g1), 4, g2));
    const auto ba = full_distribution(apply_two_bit(apply_two_bit(base, 4, g2), 1, g1));
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], ba[i], 1e-9);
  }
}

TEST(GateProperties, HeightUpdateDominatesRank) {
  std::mt19937 rng(8);
  const auto gates = all_builtins();
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + trial % 5;
    std::uniform_int_distribution<int> cut(1, n - 1), pick(0, static_cast<int>(gates.size()) - 1);
    auto s = init_state(n);
    for (int k = 0; k < 5 * n; ++k) {
      const int j = cut(rng);
      const auto h = s.tracked_heights();
      s = apply_two_bit(std::move(s), j, gates[pick(rng)]);
      EXPECT_LE(s.tracked_heights()[j], std::min(h[j - 1], h[j + 1]) + 1);
      EXPECT_LE(ceil_log2(s.bond_dims()[j]), s.tracked_heights()[j]);
    }
  }
}

}  // namespace
}  // namespace mpsim
