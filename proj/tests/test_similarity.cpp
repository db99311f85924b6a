#include <gtest/gtest.h>

#include <json.hpp>

#include "concept_bridge/error.hpp"
#include "concept_bridge/log.hpp"
#include "concept_bridge/reports.hpp"
#include "concept_bridge/similarity.hpp"
#include "fixtures.hpp"

using namespace concept_bridge;
using fixtures::random_features;

TEST(Mppc, SelfSimilarityIsOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto fm = random_features(200, 30 + seed, seed, "m");
    const auto r = mppc_pair(fm, fm);
    EXPECT_NEAR(r.mppc, 1.0, 1e-6);
    EXPECT_NEAR(r.wmppc, 1.0, 1e-6);
    EXPECT_EQ(r.dead_source_count, 0u);
  }
}

TEST(Mppc, MatchesNaiveMaxPearson) {
  const auto a = random_features(120, 9, 1, "a");
  auto b = random_features(120, 14, 2, "b");
  // plant a near-copy of source column 3 as target column 10
  for (std::size_t r = 0; r < 120; ++r) b.data(r, 10) = 2.0f * a.data(r, 3) + 0.1f * b.data(r, 10);
  b.s_vector = cumulative_activation(b.data, SMode::relu);

  MppcOptions opts;
  opts.target_block = 4;  // exercise the running max across blocks
  const auto r = mppc_pair(a, b, opts);
  double mean = 0, wnum = 0, wden = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    double best = -2;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < 14; ++j) {
      const double p = oracle::pearson(a.data, i, b.data, j);
      if (p > best) {
        best = p;
        arg = j;
      }
    }
    EXPECT_NEAR(r.rho[i], best, 1e-5);
    EXPECT_EQ(r.argmax[i], arg);
    mean += best;
    wnum += a.s_vector[i] * best;
    wden += a.s_vector[i];
  }
  EXPECT_EQ(r.argmax[3], 10u);
  EXPECT_NEAR(r.mppc, mean / 9, 1e-6);
  EXPECT_NEAR(r.wmppc, wnum / wden, 1e-6);
  EXPECT_EQ(r.source_id, "a@0");
  EXPECT_EQ(r.target_id, "b@0");
}

TEST(Mppc, BlockSizeAndTilesDoNotChangeResult) {
  const auto a = random_features(80, 20, 5, "a");
  const auto b = random_features(80, 33, 6, "b");
  const auto ref = mppc_pair(a, b);
  for (std::size_t block : {1u, 7u, 32u, 33u}) {
    MppcOptions o;
    o.target_block = block;
    o.tiles = {3, 5, 11};
    const auto r = mppc_pair(a, b, o);
    EXPECT_EQ(r.rho, ref.rho);
    EXPECT_EQ(r.argmax, ref.argmax);
    EXPECT_EQ(r.wmppc, ref.wmppc);
  }
}

TEST(Mppc, IsAsymmetric) {
  const auto a = random_features(100, 4, 1, "a");
  const auto b = random_features(100, 40, 2, "b");
  EXPECT_NE(mppc_pair(a, b).mppc, mppc_pair(b, a).mppc);
}

TEST(Mppc, ConstantSourceColumnsCountAsDeadWithZeroRho) {
  auto a = random_features(50, 5, 1, "a");
  for (std::size_t r = 0; r < 50; ++r) a.data(r, 2) = 1.5f;
  const auto b = random_features(50, 6, 2, "b");
  const auto r = mppc_pair(a, b);
  EXPECT_EQ(r.dead_source_count, 1u);
  EXPECT_EQ(r.rho[2], 0.0f);
}

TEST(Mppc, RejectsMisalignedSamples) {
  const auto a = random_features(50, 5, 1, "a");
  const auto b = random_features(51, 5, 2, "b");
  try {
    mppc_pair(a, b);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("aligned"), std::string::npos);
  }
}

TEST(WeightedMean, DegenerateAndSignedWeights) {
  const std::vector<float> rho{0.5f, 0.9f};
  EXPECT_NEAR(weighted_mean(std::vector<float>{1, 3}, rho), (0.5 + 3 * double(0.9f)) / 4, 1e-12);
  EXPECT_THROW(weighted_mean(std::vector<float>{0, 0}, rho), DataError);

  std::vector<std::string> warnings;
  auto prev = set_warning_handler([&](std::string_view m) { warnings.emplace_back(m); });
  EXPECT_THROW(weighted_mean(std::vector<float>{1, -3}, rho), DataError);
  set_warning_handler(prev);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("relu"), std::string::npos);
}

TEST(WeightedMean, ScaleInvariantInS) {
  const std::vector<float> rho{0.2f, 0.4f, 0.8f};
  const double w1 = weighted_mean(std::vector<float>{1, 2, 3}, rho);
  const double w2 = weighted_mean(std::vector<float>{10, 20, 30}, rho);
  EXPECT_NEAR(w1, w2, 1e-12);
  EXPECT_GE(w1, 0.2);
  EXPECT_LE(w1, 0.8);
}

TEST(SRho, PearsonOfTwoVectors) {
  EXPECT_NEAR(s_rho_correlation(std::vector<float>{1, 2, 3}, std::vector<float>{2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(s_rho_correlation(std::vector<float>{1, 2, 3}, std::vector<float>{3, 2, 1}), -1.0, 1e-12);
  EXPECT_EQ(s_rho_correlation(std::vector<float>{1, 1, 1}, std::vector<float>{3, 2, 1}), 0.0);
}

TEST(ConcatLayers, StacksColumnsAndTracksLayers) {
  const auto l0 = random_features(30, 3, 1, "m", 0);
  const auto l1 = random_features(30, 2, 2, "m", 1);
  const std::vector<FeatureMatrix> parts{l0, l1};
  const auto all = concat_layers(parts);
  EXPECT_EQ(all.features(), 5u);
  EXPECT_EQ(all.column_layers, (std::vector<std::int64_t>{0, 0, 0, 1, 1}));
  EXPECT_EQ(all.id(), "m@all");
  EXPECT_EQ(all.data(4, 3), l1.data(4, 0));
  EXPECT_EQ(all.s_vector[4], l1.s_vector[1]);

  const std::vector<FeatureMatrix> dup{l0, l0};
  EXPECT_THROW(concat_layers(dup), InvalidArgument);
  const std::vector<FeatureMatrix> mixed{l0, random_features(30, 2, 3, "other", 1)};
  EXPECT_THROW(concat_layers(mixed), InvalidArgument);
}

TEST(LayerGrid, CellsEqualPairwiseWmppc) {
  const std::vector<FeatureMatrix> src{random_features(60, 4, 1, "a", 0), random_features(60, 5, 2, "a", 1)};
  const std::vector<FeatureMatrix> tgt{random_features(60, 6, 3, "b", 0), random_features(60, 3, 4, "b", 2),
                                       random_features(60, 7, 5, "b", 4)};
  const auto g = layerwise_grid(src, tgt);
  EXPECT_EQ(g.target_layers, (std::vector<std::int64_t>{0, 2, 4}));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(g.grid(a, b), static_cast<float>(mppc_pair(src[a], tgt[b]).wmppc));
}

TEST(LayerGrid, ErrorsNameTheCell) {
  const std::vector<FeatureMatrix> src{random_features(60, 4, 1, "a", 5)};
  const std::vector<FeatureMatrix> tgt{random_features(61, 6, 3, "b", 9)};
  try {
    layerwise_grid(src, tgt);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("source layer 5, target layer 9"), std::string::npos) << e.what();
  }
}

TEST(Flops, ExactIntegers) {
  EXPECT_EQ(estimate_flops(24 * 8192, 24 * 8192, 118287), 9144698337755136ull);
  EXPECT_EQ(estimate_flops(8192, 8192, 118287), 15876212391936ull);
  EXPECT_EQ(estimate_flops(1, 1, 1), 2u);
  EXPECT_THROW(estimate_flops(0, 1, 1), InvalidArgument);
  EXPECT_THROW(estimate_flops(1ull << 40, 1ull << 40, 1), InvalidArgument);
}

TEST(Reports, TableCsvAndJsonAreConsistent) {
  const std::vector<FeatureMatrix> fms{random_features(40, 3, 1, "a"), random_features(40, 4, 2, "b")};
  const auto t = wmppc_table(fms, fms);
  ASSERT_EQ(t.cells.size(), 4u);
  EXPECT_NEAR(t.at(0, 0).wmppc, 1.0, 1e-6);
  const auto csv = wmppc_table_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "source\\target,a@0,b@0");
  const auto j = nlohmann::json::parse(wmppc_table_json(t, {}));
  EXPECT_EQ(j.at("wmppc")[1][0].get<double>(), t.at(1, 0).wmppc);
  EXPECT_EQ(j.at("source_ids").size(), 2u);
}
