#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"
#include "vidsum/keyframes/flow.hpp"
#include "vidsum/keyframes/select.hpp"

using namespace vidsum;
using namespace vidsum::keyframes;
using vidsum::testing::gray_image;
using vidsum::testing::random_image;

namespace {

// Brute-force proxy oracle: mean |luma difference| / 255 over all pixels.
double proxy_oracle(const Image& a, const Image& b) {
  double total = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const double la = 0.299 * a.at(x, y, 0) + 0.587 * a.at(x, y, 1) + 0.114 * a.at(x, y, 2);
      const double lb = 0.299 * b.at(x, y, 0) + 0.587 * b.at(x, y, 1) + 0.114 * b.at(x, y, 2);
      total += std::abs(la - lb) / 255.0;
    }
  return total / (a.width() * a.height());
}

Image square_at(int offset) {
  Image img = gray_image(8, 8, 0);
  for (int y = 2; y < 6; ++y)
    for (int x = offset; x < offset + 4; ++x) img.set_rgb(x, y, {255, 255, 255});
  return img;
}

Image checkerboard(bool inverted, int shift = 0) {
  Image img(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool on = (((x + shift) / 2 + y / 2) % 2 == 0) != inverted;
      const std::uint8_t v = on ? 255 : 0;
      img.set_rgb(x, y, {v, v, v});
    }
  return img;
}

FrameSequence sequence_of(const std::vector<Image>& images) {
  std::vector<TimedFrame> frames;
  for (std::size_t i = 0; i < images.size(); ++i) frames.push_back({static_cast<double>(i) * 0.5, images[i]});
  return FrameSequence("seq", 2.0, std::move(frames));
}

const IntensityProxyEstimator proxy;

}  // namespace

TEST(FlowMagnitude, IdenticalFramesAreZero) {
  Rng rng(1);
  const auto img = random_image(rng, 12, 9);
  EXPECT_EQ(flow_magnitude(img, img, proxy), 0.0);
}

TEST(FlowMagnitude, ShiftedSquareMatchesPixelOracle) {
  const auto a = square_at(1);
  const auto b = square_at(3);
  // 2 columns leave and 2 enter on 4 rows: 16 pixels change by a full 255.
  EXPECT_NEAR(flow_magnitude(a, b, proxy), 16.0 / 64.0, 1e-12);
  EXPECT_NEAR(flow_magnitude(a, b, proxy), proxy_oracle(a, b), 1e-12);
}

TEST(FlowMagnitude, InvertedCheckerboardBeatsOnePixelShift) {
  const auto board = checkerboard(false);
  const double inverted = flow_magnitude(board, checkerboard(true), proxy);
  const double shifted = flow_magnitude(board, checkerboard(false, 1), proxy);
  EXPECT_NEAR(inverted, proxy_oracle(board, checkerboard(true)), 1e-12);
  EXPECT_NEAR(shifted, proxy_oracle(board, checkerboard(false, 1)), 1e-12);
  EXPECT_GT(inverted, shifted);
}

TEST(FlowMagnitude, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(flow_magnitude(Image(4, 4), Image(4, 5), proxy), DimensionError);
}

TEST(FlowMagnitude, ProxyScalesLinearly) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    // Keep differences small enough that scaling by c stays inside [0, 255].
    Image a = gray_image(10, 10, 100), b = gray_image(10, 10, 100), b3 = gray_image(10, 10, 100);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) {
        const int d = static_cast<int>(rng.below(41)) - 20;
        const auto v = static_cast<std::uint8_t>(100 + d);
        const auto v3 = static_cast<std::uint8_t>(100 + 3 * d);
        b.set_rgb(x, y, {v, v, v});
        b3.set_rgb(x, y, {v3, v3, v3});
      }
    EXPECT_NEAR(flow_magnitude(a, b3, proxy), 3.0 * flow_magnitude(a, b, proxy), 1e-12);
  }
}

namespace {

class ThrowingEstimator final : public FlowEstimator {
 public:
  std::string name() const override { return "throwing"; }
  FlowField estimate(const Image&, const Image&) const override { throw std::runtime_error("gpu fell over"); }
};

}  // namespace

TEST(FlowMagnitude, EstimatorFailureIsBackendError) {
  EXPECT_THROW(flow_magnitude(Image(4, 4), Image(4, 4), ThrowingEstimator{}), BackendError);
}

TEST(SelectKeyframes, StaticSequencePicksEarliestScoreableFrames) {
  const auto seq = sequence_of(std::vector<Image>(10, gray_image(6, 6, 40)));
  const auto set = select_keyframes(seq, 3, proxy);
  ASSERT_EQ(set.selected.size(), 3u);
  EXPECT_EQ(set.selected[0].frame_index, 1u);
  EXPECT_EQ(set.selected[1].frame_index, 2u);
  EXPECT_EQ(set.selected[2].frame_index, 3u);
  EXPECT_EQ(set.budget_m, 3);
}

TEST(SelectKeyframes, PlantedShiftsWin) {
  std::vector<Image> images(10, square_at(0));
  for (std::size_t i = 4; i < 7; ++i) images[i] = square_at(2);
  for (std::size_t i = 7; i < 10; ++i) images[i] = square_at(4);
  const auto seq = sequence_of(images);
  const auto set = select_keyframes(seq, 2, proxy);
  ASSERT_EQ(set.selected.size(), 2u);
  EXPECT_EQ(set.selected[0].frame_index, 4u);
  EXPECT_EQ(set.selected[1].frame_index, 7u);
  EXPECT_DOUBLE_EQ(set.selected[0].timestamp_s, 2.0);
  // Brute force over every pair confirms these are the two maxima.
  std::vector<double> all;
  for (std::size_t i = 1; i < images.size(); ++i) all.push_back(proxy_oracle(images[i - 1], images[i]));
  std::sort(all.rbegin(), all.rend());
  EXPECT_NEAR(set.selected[0].magnitude, all[0], 1e-12);
  EXPECT_GT(all[1], all[2]);
}

TEST(SelectKeyframes, BudgetLargerThanSequenceReturnsAllScoreable) {
  Rng rng(9);
  std::vector<Image> images;
  for (int i = 0; i < 10; ++i) images.push_back(random_image(rng, 5, 5));
  const auto set = select_keyframes(sequence_of(images), 100, proxy);
  EXPECT_EQ(set.selected.size(), 9u);
}

TEST(SelectKeyframes, Contracts) {
  const auto seq = sequence_of(std::vector<Image>(3, gray_image(4, 4, 0)));
  EXPECT_THROW(select_keyframes(seq, 0, proxy), ContractError);
  EXPECT_THROW(select_keyframes(seq, -2, proxy), ContractError);
  EXPECT_THROW(select_keyframes(sequence_of({gray_image(4, 4, 0)}), 3, proxy), InsufficientFramesError);
  EXPECT_THROW(select_keyframes(FrameSequence{}, 3, proxy), ValidationError);
}

// Sorting every score descending (earlier timestamp on ties) and taking m
// equals select_keyframes, and the output is always in timestamp order.
TEST(SelectKeyframes, EqualsBruteForceOnRandomSequences) {
  Rng rng(123);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 2 + rng.below(49);
    std::vector<Image> images;
    // A small palette produces plenty of exact ties.
    for (std::size_t i = 0; i < n; ++i) images.push_back(gray_image(3, 3, static_cast<std::uint8_t>(rng.below(4) * 60)));
    const auto seq = sequence_of(images);
    const int m = 1 + static_cast<int>(rng.below(n + 3));
    const auto set = select_keyframes(seq, m, proxy);

    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 1; i < n; ++i) scored.push_back({proxy_oracle(images[i - 1], images[i]), i});
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(m)));
    std::vector<std::size_t> expected;
    for (const auto& s : scored) expected.push_back(s.second);
    std::sort(expected.begin(), expected.end());

    std::vector<std::size_t> got;
    for (const auto& s : set.selected) got.push_back(s.frame_index);
    EXPECT_EQ(got, expected) << "trial " << trial;
    EXPECT_TRUE(std::is_sorted(set.selected.begin(), set.selected.end(),
                               [](const FlowScore& a, const FlowScore& b) { return a.timestamp_s < b.timestamp_s; }));
    EXPECT_LE(set.selected.size(), static_cast<std::size_t>(m));
  }
}

TEST(SelectKeyframes, ScoresAttributedToLaterFrame) {
  const auto seq = sequence_of({gray_image(4, 4, 0), gray_image(4, 4, 255), gray_image(4, 4, 255)});
  const auto scores = score_sequence(seq, proxy);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].frame_index, 1u);
  EXPECT_NEAR(scores[0].magnitude, 1.0, 1e-12);
  EXPECT_EQ(scores[1].magnitude, 0.0);
}

TEST(KeyframeSet, JsonRoundTrip) {
  Rng rng(5);
  std::vector<Image> images;
  for (int i = 0; i < 6; ++i) images.push_back(random_image(rng, 4, 4));
  const auto set = select_keyframes(sequence_of(images), 3, proxy);
  EXPECT_EQ(nlohmann::json(set).get<KeyframeSet>(), set);
}
