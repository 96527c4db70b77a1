// Copyright 2026 The fsc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fsc/error.hpp"
#include "fsc/head.hpp"
#include "oracles.hpp"

namespace fsc {
namespace {

// Bank whose sub-centers are the rows of the identity, so logits equal x.
SubCenterBank identity_bank(std::size_t c, std::size_t s) {
  Matrix w(c * s, c * s);
  for (std::size_t i = 0; i < c * s; ++i) w(i, i) = 1.0;
  return SubCenterBank(Matrix(c, c * s), std::move(w), s, 0.0, 0, true);
}

// Direct (unshifted) evaluation of the sub-center cross-entropy.
double direct_subcenter_ce(const SubCenterBank& bank, const FeatureBatch& batch) {
  const std::size_t s = bank.subcenters_per_class();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.y.size(); ++i) {
    double all = 0.0, own = 0.0;
    for (std::size_t r = 0; r < bank.weights().rows(); ++r) {
      double z = 0.0;
      for (std::size_t k = 0; k < bank.dim(); ++k) z += batch.x(i, k) * bank.weights()(r, k);
      all += std::exp(z);
      if (r / s == static_cast<std::size_t>(batch.y[i])) own += std::exp(z);
    }
    total -= std::log(own / all);
  }
  return total / static_cast<double>(batch.y.size());
}

TEST(KaimingBound, KnownValues) {
  EXPECT_DOUBLE_EQ(kaiming_uniform_bound(6), 1.0);
  EXPECT_NEAR(kaiming_uniform_bound(512), 0.108253175473055, 1e-15);
  EXPECT_THROW(kaiming_uniform_bound(0), ContractError);
}

TEST(InitCenters, WithinBoundAndSeedStable) {
  RandomStream a(3), b(3);
  const Matrix mu = init_centers(10, 6, a);
  EXPECT_EQ(mu, init_centers(10, 6, b));
  for (double v : mu.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  RandomStream c(3);
  EXPECT_THROW(init_centers(0, 6, c), ContractError);
  EXPECT_THROW(init_centers(3, 0, c), ContractError);
}

TEST(SampleSubcenters, ZeroVarianceCollapsesToCenters) {
  RandomStream stream(1);
  const Matrix mu = init_centers(4, 8, stream);
  const SubCenterBank bank = sample_subcenters(mu, 3, 0.0, stream);
  EXPECT_TRUE(bank.frozen());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(bank.subcenter(i, j)[k], mu(i, k));
  const auto stats = dispersion_stats(bank);
  EXPECT_EQ(stats.mean_pairwise_sq_dist, 0.0);
  EXPECT_NEAR(stats.mean_pairwise_cosine, 1.0, 1e-12);
  EXPECT_THROW(sample_subcenters(mu, 3, -1e-3, stream), ContractError);
  EXPECT_THROW(sample_subcenters(mu, 0, 1e-3, stream), ContractError);
}

TEST(SampleSubcenters, DispersionFollowsTwoDSigmaSquared) {
  for (double sigma2 : {1e-3, 2e-3}) {
    const SubCenterBank bank = make_bank(20, 16, 512, sigma2, 5);
    const double expected = 2.0 * 512.0 * sigma2;
    EXPECT_NEAR(dispersion_stats(bank).mean_pairwise_sq_dist / expected, 1.0, 0.1);
  }
  EXPECT_THROW(dispersion_stats(make_bank(2, 1, 4, 1e-3, 1)), ContractError);
}

TEST(FrozenBank, RejectsMutationAndKeepsHash) {
  SubCenterBank bank = make_bank(3, 2, 4, 1e-3, 9);
  const std::string hash = bank.content_hash();
  EXPECT_THROW(bank.mutable_weights(), ContractError);
  EXPECT_THROW(bank.set_weights(Matrix(6, 4)), ContractError);
  EXPECT_EQ(bank.content_hash(), hash);

  SubCenterBank open = bank.trainable_copy();
  EXPECT_FALSE(open.frozen());
  open.mutable_weights()(0, 0) += 1.0;
  EXPECT_NE(open.content_hash(), hash);
}

TEST(Forward, UniformLogits) {
  const SubCenterBank bank(Matrix(3, 2), Matrix(6, 2), 2, 0.0, 0, true);
  const FeatureBatch batch{Matrix{{1.0, -2.0}, {0.5, 0.5}}, {0, 2}};
  const HeadOutput out = forward(bank, batch);
  for (double p : out.subclass_probs.values()) EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
  for (double p : out.class_probs.values()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(fsc_loss(bank, batch, 0.0).cross_entropy, std::log(3.0), 1e-15);
}

TEST(Forward, HandComputedTwoByTwo) {
  const SubCenterBank bank = identity_bank(2, 2);
  const FeatureBatch batch{Matrix{{1.0, 0.0, 0.0, 0.0}}, {0}};
  const HeadOutput out = forward(bank, batch);
  EXPECT_NEAR(out.class_probs(0, 0), 0.650244590945781, 1e-14);
  const LossBreakdown loss = fsc_loss(bank, batch, 0.0);
  // −ln((e+1)/(e+3)).
  EXPECT_NEAR(loss.cross_entropy, 0.430406693110456, 1e-14);
  EXPECT_EQ(loss.total, loss.cross_entropy);
}

TEST(Forward, InvariantsOnRandomBatches) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = fixtures::random_head_instance(seed);
    const HeadOutput out = forward(inst.bank, inst.batch);
    const std::size_t c = inst.bank.classes(), s = inst.bank.subcenters_per_class();
    for (std::size_t i = 0; i < inst.batch.y.size(); ++i) {
      double row = 0.0;
      for (std::size_t r = 0; r < c * s; ++r) row += out.subclass_probs(i, r);
      EXPECT_NEAR(row, 1.0, 1e-9);
      for (std::size_t j = 0; j < c; ++j) {
        double cls = 0.0;
        for (std::size_t m = 0; m < s; ++m) cls += out.subclass_probs(i, j * s + m);
        EXPECT_EQ(out.class_probs(i, j), cls);
      }
      // Assignment: first maximal true-class logit.
      const std::size_t base = static_cast<std::size_t>(inst.batch.y[i]) * s;
      std::size_t best = 0;
      for (std::size_t m = 1; m < s; ++m)
        if (out.logits(i, base + m) > out.logits(i, base + best)) best = m;
      EXPECT_EQ(out.assignment[i], best);
    }
  }
}

TEST(Forward, AssignmentTiesGoToSmallestIndex) {
  const SubCenterBank bank(Matrix(1, 2), Matrix{{1, 0}, {1, 0}, {0, 1}}, 3, 0.0, 0, true);
  const HeadOutput out = forward(bank, FeatureBatch{Matrix{{2.0, 1.0}}, {0}});
  EXPECT_EQ(out.assignment[0], 0u);
}

TEST(Forward, AssignmentInvariantUnderPositiveScaling) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = fixtures::random_head_instance(seed);
    const auto before = forward(inst.bank, inst.batch).assignment;
    for (auto& v : inst.batch.x.values()) v *= 7.5;
    EXPECT_EQ(forward(inst.bank, inst.batch).assignment, before);
  }
}

TEST(Forward, LargeLogitsStayFinite) {
  auto inst = fixtures::random_head_instance(4);
  Matrix w = inst.bank.weights();
  for (auto& v : w.values()) v *= 1000.0;
  const SubCenterBank big(inst.bank.centers(), std::move(w), inst.bank.subcenters_per_class(),
                          1.0, 0, true);
  const HeadOutput out = forward(big, inst.batch);
  EXPECT_TRUE(out.subclass_probs.all_finite());
  EXPECT_TRUE(std::isfinite(fsc_loss(big, inst.batch, 1e-4).total));
  EXPECT_TRUE(loss_grad_features(big, inst.batch, 1e-4).all_finite());
}

TEST(Forward, ContractViolations) {
  const SubCenterBank bank = make_bank(3, 2, 4, 1e-3, 1);
  EXPECT_THROW(forward(bank, FeatureBatch{Matrix(2, 5), {0, 1}}), ContractError);
  EXPECT_THROW(forward(bank, FeatureBatch{Matrix(2, 4), {0, 3}}), ContractError);
  EXPECT_THROW(forward(bank, FeatureBatch{Matrix(2, 4), {0}}), ContractError);
  Matrix bad(1, 4);
  bad(0, 2) = std::nan("");
  EXPECT_THROW(forward(bank, FeatureBatch{bad, {0}}), ContractError);
  EXPECT_THROW(fsc_loss(bank, FeatureBatch{Matrix(1, 4), {0}}, -1.0), ContractError);
}

TEST(Loss, SingleSubcenterMatchesSoftmaxCrossEntropy) {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    auto inst = fixtures::random_head_instance(seed);
    if (inst.bank.subcenters_per_class() != 1) continue;
    const double expected = direct_subcenter_ce(inst.bank, inst.batch);
    EXPECT_NEAR(fsc_loss(inst.bank, inst.batch, 0.0).total, expected, 1e-12);
  }
  // And explicitly, an s = 1 bank built through make_bank.
  const SubCenterBank bank = make_bank(4, 1, 3, 0.0, 2);
  RandomStream stream(2);
  const FeatureBatch batch{Matrix(5, 3, sample_normal(stream, 0.0, 4.0, 15)), {0, 1, 2, 3, 0}};
  EXPECT_NEAR(fsc_loss(bank, batch, 0.0).total, direct_subcenter_ce(bank, batch), 1e-12);
}

TEST(Loss, ZeroBetaIsSubcenterCrossEntropy) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = fixtures::random_head_instance(seed);
    const LossBreakdown loss = fsc_loss(inst.bank, inst.batch, 0.0);
    EXPECT_EQ(loss.total, loss.cross_entropy);
    EXPECT_NEAR(loss.total, direct_subcenter_ce(inst.bank, inst.batch), 1e-12);
  }
}

TEST(Loss, TotalIsCrossEntropyPlusBetaCompactness) {
  const auto inst = fixtures::random_head_instance(77);
  const LossBreakdown loss = fsc_loss(inst.bank, inst.batch, 0.25);
  EXPECT_EQ(loss.total, loss.cross_entropy + 0.25 * loss.compactness);
  EXPECT_EQ(loss.beta, 0.25);
}

TEST(Compactness, HandComputedAndBruteForce) {
  const SubCenterBank bank(Matrix(1, 2), Matrix{{1, 1}}, 1, 0.0, 0, true);
  const std::vector<std::size_t> zero{0};
  EXPECT_DOUBLE_EQ(compactness_loss(bank, FeatureBatch{Matrix{{4, 5}}, {0}}, zero), 12.5);
  EXPECT_EQ(compactness_loss(bank, FeatureBatch{Matrix{{1, 1}}, {0}}, zero), 0.0);
  EXPECT_THROW(compactness_loss(bank, FeatureBatch{Matrix{{1, 1}}, {0}}, {}), ContractError);

  RandomStream stream(31);
  const SubCenterBank big = make_bank(3, 4, 6, 1e-2, 31);
  FeatureBatch batch{Matrix(5, 6, sample_normal(stream, 0.0, 1.0, 30)), {0, 2, 1, 1, 2}};
  const auto assignment = forward(big, batch).assignment;
  double expected = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto w = big.subcenter(static_cast<std::size_t>(batch.y[i]), assignment[i]);
    for (std::size_t k = 0; k < 6; ++k) {
      const double diff = batch.x(i, k) - w[k];
      expected += 0.5 * diff * diff;
    }
  }
  EXPECT_NEAR(compactness_loss(big, batch, assignment), expected, 1e-12);
}

TEST(Compactness, NearestRuleUsesEuclideanDistance) {
  // Sub-center 1 has the larger logit, sub-center 0 is nearer.
  const SubCenterBank bank(Matrix(1, 1), Matrix{{1.0}, {10.0}}, 2, 0.0, 0, true);
  const FeatureBatch batch{Matrix{{1.5}}, {0}};
  EXPECT_EQ(forward(bank, batch, AssignmentRule::kArgmaxLogit).assignment[0], 1u);
  EXPECT_EQ(forward(bank, batch, AssignmentRule::kNearestEuclidean).assignment[0], 0u);
  EXPECT_EQ(parse_assignment_rule(to_string(AssignmentRule::kNearestEuclidean)),
            AssignmentRule::kNearestEuclidean);
  EXPECT_THROW(parse_assignment_rule("soft"), ContractError);
}

TEST(Gradient, SingleClassIsZero) {
  const SubCenterBank bank = make_bank(1, 3, 4, 1e-2, 3);
  RandomStream stream(3);
  const FeatureBatch batch{Matrix(4, 4, sample_normal(stream, 0.0, 1.0, 16)), {0, 0, 0, 0}};
  EXPECT_NEAR(fsc_loss(bank, batch, 0.0).total, 0.0, 1e-15);
  const Matrix grad = loss_grad_features(bank, batch, 0.0);
  for (double g : grad.values()) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Gradient, CompactnessVanishesAtAssignedSubcenter) {
  // x equals its assigned sub-center, and the true-class logits are tied.
  const SubCenterBank bank(Matrix(2, 2), Matrix{{1, 0}, {1, 1}, {-1, 0}, {0, -1}}, 2, 0.0, 0,
                           true);
  const FeatureBatch batch{Matrix{{1, 0}}, {0}};
  const auto out = forward(bank, batch);
  EXPECT_EQ(compactness_loss(bank, batch, out.assignment), 0.0);
  EXPECT_EQ(loss_grad_features(bank, batch, 0.5), loss_grad_features(bank, batch, 0.0));
}

TEST(Gradient, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    EXPECT_LE(fixtures::head_gradient_error(fixtures::random_head_instance(seed)), 1e-5)
        << "seed " << seed;
}

TEST(Gradient, NearestRuleMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto inst = fixtures::random_head_instance(seed);
    const auto rule = AssignmentRule::kNearestEuclidean;
    const Matrix analytic = loss_grad_features(inst.bank, inst.batch, inst.beta, rule);
    const auto numeric = oracle::central_difference(inst.batch.x.values(), [&] {
      return fsc_loss(inst.bank, inst.batch, inst.beta, rule).total;
    });
    EXPECT_LE(oracle::max_relative_error(analytic.values(), numeric), 1e-5);
  }
}

TEST(Gradient, WeightGradientMatchesCentralDifferences) {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    auto inst = fixtures::random_head_instance(seed);
    SubCenterBank open = inst.bank.trainable_copy();
    const HeadStep step =
        evaluate_head(open, inst.batch, inst.beta, AssignmentRule::kArgmaxLogit, true);
    const auto numeric = oracle::central_difference(open.mutable_weights().values(), [&] {
      return fsc_loss(open, inst.batch, inst.beta).total;
    });
    EXPECT_LE(oracle::max_relative_error(step.weight_grad.values(), numeric), 1e-5);
  }
}

TEST(L2Normalize, BackwardMatchesCentralDifferences) {
  RandomStream stream(17);
  Matrix x(4, 5, sample_normal(stream, 0.0, 1.0, 20));
  const Matrix upstream(4, 5, sample_normal(stream, 0.0, 1.0, 20));
  const Matrix analytic = l2_normalize_backward(x, upstream);
  const auto numeric = oracle::central_difference(x.values(), [&] {
    const Matrix y = l2_normalize_rows(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.values()[i] * upstream.values()[i];
    return acc;
  });
  EXPECT_LE(oracle::max_relative_error(analytic.values(), numeric), 1e-8);
}

TEST(BankPersistence, RoundTripAndTamperDetection) {
  const auto dir = std::filesystem::temp_directory_path() / "fsc_test_bank";
  std::filesystem::create_directories(dir);
  const SubCenterBank bank = make_bank(4, 3, 5, 1e-3, 42);
  save_bank(dir / "bank", bank);
  const SubCenterBank loaded = load_bank(dir / "bank");
  EXPECT_EQ(loaded.weights(), bank.weights());
  EXPECT_EQ(loaded.centers(), bank.centers());
  EXPECT_EQ(loaded.content_hash(), bank.content_hash());
  EXPECT_TRUE(loaded.frozen());
  EXPECT_EQ(loaded.seed(), 42u);

  {
    std::fstream bin(dir / "bank.bin", std::ios::in | std::ios::out | std::ios::binary);
    bin.seekp(20);
    bin.put('\x7f');
  }
  EXPECT_THROW(load_bank(dir / "bank"), IoError);
  EXPECT_THROW(load_bank(dir / "missing"), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fsc
