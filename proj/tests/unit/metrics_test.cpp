#include <gtest/gtest.h>

#include <cmath>

#include "../oracles.hpp"
#include "support.hpp"
#include "vidsum/metrics/image.hpp"
#include "vidsum/metrics/selection.hpp"
#include "vidsum/metrics/text.hpp"

using namespace vidsum;
using namespace vidsum::metrics;
using vidsum::testing::gray_image;
using vidsum::testing::random_image;

namespace {

Tokens random_tokens(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> vocab = {"gold", "rates", "the", "fund", "sip", "nifty", "and", "risk", "cash", "tax"};
  Tokens t(rng.below(max_len + 1));
  for (auto& x : t) x = vocab[rng.below(vocab.size())];
  return t;
}

double rmse_oracle(const Image& a, const Image& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = double(a.at(x, y, c)) - double(b.at(x, y, c));
        s += d * d;
      }
  return std::sqrt(s / (3.0 * a.width() * a.height()));
}

}  // namespace

TEST(Rouge, IdentityAndHandCounts) {
  const auto id = rouge_n("gold rose today", "gold rose today", 1);
  EXPECT_EQ(id.f1, 1.0);
  const auto r1 = rouge_n("the cat sat", "the cat sat on the mat", 1);
  EXPECT_NEAR(r1.precision, 1.0, 1e-12);
  EXPECT_NEAR(r1.recall, 0.5, 1e-12);
  EXPECT_NEAR(r1.f1, 2.0 / 3.0, 1e-12);
  const auto r2 = rouge_n("the cat sat", "the cat sat on the mat", 2);
  EXPECT_NEAR(r2.precision, 1.0, 1e-12);
  EXPECT_NEAR(r2.recall, 0.4, 1e-12);
  EXPECT_NEAR(r2.f1, 2.0 * 0.4 / 1.4, 1e-12);
  EXPECT_EQ(rouge_n("", "x", 1).f1, 0.0);
  EXPECT_EQ(rouge_n("x", "", 1).f1, 0.0);
  EXPECT_THROW(rouge_n("x", "x", 0), ContractError);
}

TEST(Rouge, LcsExamples) {
  EXPECT_EQ(rouge_l("a b c", "a b c").f1, 1.0);
  const auto l = rouge_l("the cat sat", "the cat sat on the mat");
  EXPECT_NEAR(l.precision, 1.0, 1e-12);
  EXPECT_NEAR(l.recall, 0.5, 1e-12);
  EXPECT_NEAR(l.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rouge_l("alpha beta", "gamma delta").f1, 0.0);
  // LCS of "a b c d" and "b d a c" is 2.
  EXPECT_NEAR(rouge_l("a b c d", "b d a c").precision, 0.5, 1e-12);
}

TEST(Rouge, TokenizerIgnoresCaseAndPunctuation) {
  EXPECT_EQ(rouge_n("Gold, rose!", "gold rose", 1).f1, 1.0);
}

TEST(Bleu, Examples) {
  for (double b : bleu("the cat sat on the mat", "the cat sat on the mat")) EXPECT_NEAR(b, 1.0, 1e-12);
  EXPECT_NEAR(bleu("the the the", "the cat")[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(bleu("cat sat", "cat sat on mats")[0], std::exp(-1.0), 1e-12);
  EXPECT_NEAR(bleu("cat sat", "cat sat on mats")[0], 0.3679, 1e-4);
  for (double b : bleu("", "x")) EXPECT_EQ(b, 0.0);
  EXPECT_THROW(bleu("x", "x", 0), ContractError);
}

TEST(Bleu, SmoothingOnZeroCounts) {
  // Unigrams 2/3 match, no bigram matches: p2 = 1 / (2 * 2).
  const auto b = bleu("gold fell cash", "gold rose cash", 2);
  EXPECT_NEAR(b[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(b[1], std::exp((std::log(2.0 / 3.0) + std::log(0.25)) / 2.0), 1e-12);
}

TEST(Bleu, RangeProperty) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_tokens(rng, 12), r = random_tokens(rng, 12);
    for (double b : bleu(c, r)) {
      EXPECT_GE(b, 0.0);
      EXPECT_LE(b, 1.0 + 1e-12);
    }
  }
}

TEST(EmbeddingF1, IdentityAndOrthogonal) {
  const OneHotEmbedder e;
  EXPECT_NEAR(embedding_f1({"a", "b", "a"}, {"a", "b", "a"}, e).f1, 1.0, 1e-12);
  EXPECT_EQ(embedding_f1({"a", "b"}, {"c", "d"}, e).f1, 0.0);
  EXPECT_EQ(embedding_f1({}, {"c"}, e).f1, 0.0);
}

TEST(EmbeddingF1, OneHotEqualsUnigramF1OnDistinctTokens) {
  Rng rng(2);
  const OneHotEmbedder e;
  for (int i = 0; i < 200; ++i) {
    auto c = random_tokens(rng, 10), r = random_tokens(rng, 10);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    const auto emb = embedding_f1(c, r, e);
    const auto uni = oracle::unigram_prf(c, r);
    EXPECT_NEAR(emb.precision, uni.p, 1e-12);
    EXPECT_NEAR(emb.recall, uni.r, 1e-12);
    EXPECT_NEAR(emb.f1, rouge_n(c, r, 1).f1, 1e-12);
  }
}

// With repeats, greedy matching lets several candidate copies match one
// reference token, so it equals unclipped membership counts rather than ROUGE-1.
TEST(EmbeddingF1, OneHotEqualsMembershipF1WithRepeats) {
  Rng rng(3);
  const OneHotEmbedder e;
  for (int i = 0; i < 200; ++i) {
    const auto c = random_tokens(rng, 10), r = random_tokens(rng, 10);
    const auto emb = embedding_f1(c, r, e);
    const auto m = oracle::membership_prf(c, r);
    EXPECT_NEAR(emb.precision, m.p, 1e-12);
    EXPECT_NEAR(emb.recall, m.r, 1e-12);
    EXPECT_NEAR(emb.f1, m.f, 1e-12);
  }
  const auto clipped = rouge_n(Tokens{"the", "the"}, Tokens{"the", "cat"}, 1);
  EXPECT_NEAR(clipped.precision, 0.5, 1e-12);
  EXPECT_NEAR(embedding_f1({"the", "the"}, {"the", "cat"}, e).precision, 1.0, 1e-12);
}

TEST(EmbeddingF1, ExternalBackendFailure) {
  const ExternalTokenEmbedder bad("exit 4");
  EXPECT_THROW(embedding_f1({"a"}, {"b"}, bad), BackendError);
}

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse_image(gray_image(4, 4, 7), gray_image(4, 4, 7)), 0.0);
  EXPECT_EQ(rmse_image(gray_image(4, 4, 0), gray_image(4, 4, 255)), 255.0);
  EXPECT_THROW(rmse_image(gray_image(4, 4, 0), gray_image(4, 5, 0)), DimensionError);
}

TEST(Rmse, OracleAndSymmetry) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_image(rng, 9, 7), b = random_image(rng, 9, 7);
    EXPECT_NEAR(rmse_image(a, b), rmse_oracle(a, b), 1e-9);
    EXPECT_EQ(rmse_image(a, b), rmse_image(b, a));
  }
}

TEST(Ssim, IdentityIsOne) {
  Rng rng(4);
  const auto a = random_image(rng, 24, 20);
  EXPECT_NEAR(ssim_image(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantShiftMatchesLuminanceTerm) {
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double expected = (2.0 * 100 * 110 + c1) / (100.0 * 100 + 110.0 * 110 + c1);
  EXPECT_NEAR(ssim_image(gray_image(16, 16, 100), gray_image(16, 16, 110)), expected, 1e-9);
}

TEST(Ssim, IndependentNoiseIsNearZero) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_image(rng, 48, 48), b = random_image(rng, 48, 48);
    EXPECT_LT(std::abs(ssim_image(a, b)), 0.1);
  }
}

TEST(Ssim, SymmetricAndBounded) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_image(rng, 20, 14), b = random_image(rng, 20, 14);
    const double s = ssim_image(a, b);
    EXPECT_NEAR(s, ssim_image(b, a), 1e-12);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Ssim, SmallImages) {
  // One side at least 11: valid-region reduction. Both below: contract error.
  EXPECT_NEAR(ssim_image(gray_image(12, 6, 50), gray_image(12, 6, 50)), 1.0, 1e-12);
  EXPECT_THROW(ssim_image(gray_image(10, 10, 0), gray_image(10, 10, 0)), ContractError);
}

TEST(FrameSelection, Examples) {
  EXPECT_EQ(frame_selection_f1({1, 2, 3}, {1, 2, 3}), 1.0);
  const auto s = frame_selection_score({1, 2}, {2, 3});
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.f1, 0.5);
  EXPECT_EQ(frame_selection_f1({}, {1}), 0.0);
  EXPECT_EQ(frame_selection_f1({1}, {}), 0.0);
  EXPECT_EQ(frame_selection_f1({}, {}), 1.0);
}

TEST(TieAccuracy, Examples) {
  using V = Vote;
  EXPECT_EQ(tie_discounted_accuracy(std::vector<V>{V::match, V::match}), 1.0);
  EXPECT_EQ(tie_discounted_accuracy(std::vector<V>{V::match, V::match, V::tie, V::mismatch}), 0.625);
  EXPECT_EQ(tie_discounted_accuracy(std::vector<V>{V::tie, V::tie, V::tie}), 0.5);
  EXPECT_THROW(tie_discounted_accuracy(std::vector<V>{}), ContractError);
  EXPECT_EQ(parse_vote("tie"), V::tie);
  EXPECT_THROW(parse_vote("draw"), ValidationError);
}

TEST(TextMetrics, RangeAndIdentityProperty) {
  Rng rng(7);
  const OneHotEmbedder e;
  for (int i = 0; i < 200; ++i) {
    const auto c = random_tokens(rng, 12), r = random_tokens(rng, 12);
    for (const auto& s : {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r), embedding_f1(c, r, e)}) {
      EXPECT_GE(s.f1, 0.0);
      EXPECT_LE(s.f1, 1.0 + 1e-12);
    }
    if (!c.empty()) {
      EXPECT_NEAR(rouge_l(c, c).f1, 1.0, 1e-12);
      EXPECT_NEAR(embedding_f1(c, c, e).f1, 1.0, 1e-12);
    }
  }
}
