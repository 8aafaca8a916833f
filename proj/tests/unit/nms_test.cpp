// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/nms.hpp"
#include "test_support.hpp"

using namespace sheetscan;
using namespace sheetscan::neuro;

TEST(Nms, KeepsBestOfOverlappingCluster) {
  const std::vector<Detection> dets{{{1, 1, 10, 10}, 0.8, {}},
                                    {{1, 1, 10, 11}, 0.9, {}},
                                    {{20, 20, 25, 25}, 0.3, {}},
                                    {{2, 2, 10, 10}, 0.7, {}}};
  const auto kept = nms(dets, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].box, (BBox{1, 1, 10, 11}));
  EXPECT_EQ(kept[1].box, (BBox{20, 20, 25, 25}));
}

TEST(Nms, TiesBreakByBox) {
  const std::vector<Detection> dets{{{2, 1, 5, 5}, 0.5, {}}, {{1, 1, 5, 5}, 0.5, {}}};
  const auto kept = nms(dets, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].box, (BBox{1, 1, 5, 5}));
}

TEST(Nms, SurvivorsArePairwiseBelowThreshold) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<Detection> dets;
    for (int i = 0; i < 30; ++i) dets.push_back({testkit::random_box(rng, 20, 20), rng.uniform(), {}});
    for (double thr : {0.0, 0.3, 0.7}) {
      const auto kept = nms(dets, thr);
      for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i > 0) ASSERT_GE(kept[i - 1].score, kept[i].score);
        for (std::size_t j = i + 1; j < kept.size(); ++j) ASSERT_LE(iou(kept[i].box, kept[j].box), thr);
      }
      // Every dropped box overlaps some higher-scored survivor.
      for (const auto& d : dets) {
        bool kept_it = false, covered = false;
        for (const auto& k : kept) {
          kept_it |= k == d;
          covered |= k.score >= d.score && iou(k.box, d.box) > thr;
        }
        ASSERT_TRUE(kept_it || covered);
      }
    }
  }
}

TEST(NmsRegions, RespectsOrderAndCap) {
  const std::vector<Roi> r{{0, 0, 4, 4}, {0, 0, 4, 4.2}, {10, 10, 12, 12}, {20, 20, 22, 22}};
  EXPECT_EQ(nms_regions(r, {1, 0, 2, 3}, 0.7, 10), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(nms_regions(r, {0, 1, 2, 3}, 0.7, 2), (std::vector<int>{0, 2}));
}
