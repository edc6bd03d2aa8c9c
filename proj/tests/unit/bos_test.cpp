#include <gtest/gtest.h>

#include <filesystem>

#include "../oracles.hpp"
#include "support.hpp"
#include "vidsum/assets/media.hpp"
#include "vidsum/bos/backends.hpp"
#include "vidsum/bos/description.hpp"
#include "vidsum/bos/prompt.hpp"
#include "vidsum/bos/transcript.hpp"

using namespace vidsum;
using namespace vidsum::bos;
using vidsum::testing::gray_image;
using vidsum::testing::random_image;

namespace {

WordTimeline words_at(std::initializer_list<std::pair<const char*, double>> mids, double half = 0.1) {
  WordTimeline t;
  for (auto [tok, m] : mids) t.words.push_back({tok, m - half, m + half});
  return t;
}

EnrichedTranscript one_segment() { return {{{"S1", 0.0, 2.0, "hello there"}}}; }

}  // namespace

TEST(Ocr, BlankFrameReadsEmpty) {
  EXPECT_EQ(ocr_frame(gray_image(16, 16, 255), MockOcr{}), "");
  EXPECT_EQ(ocr_frame(gray_image(16, 16, 0), MockOcr{}), "");
}

TEST(Ocr, FixedTextAndWhitespaceNormalization) {
  EXPECT_EQ(ocr_frame(gray_image(8, 8, 10), MockOcr("NIFTY 50 +1.2%")), "NIFTY 50 +1.2%");
  EXPECT_EQ(ocr_frame(gray_image(8, 8, 10), MockOcr("  Gold\t +0.8%\n")), "Gold +0.8%");
}

TEST(Ocr, BackendFailureIsBackendErrorNamingFrame) {
  try {
    ocr_frame(gray_image(8, 8, 10), FailingOcr{}, 17);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 17"), std::string::npos);
  }
}

TEST(Ocr, MockIsDeterministicAndSometimesEmpty) {
  Rng rng(5);
  int empty = 0;
  for (int i = 0; i < 40; ++i) {
    const auto img = random_image(rng, 12, 12);
    const auto a = ocr_frame(img, MockOcr{});
    EXPECT_EQ(a, ocr_frame(img, MockOcr{}));
    empty += a.empty();
  }
  EXPECT_GT(empty, 0);
  EXPECT_LT(empty, 40);
}

TEST(Ocr, ExternalAdapterRoundTrip) {
  vidsum::testing::TempDir dir("ocr-ext");
  const auto script = dir / "ocr.py";
  write_file(script,
             "import json, sys\n"
             "req = json.load(sys.stdin)\n"
             "assert req['role'] == 'ocr'\n"
             "data = open(req['frame'], 'rb').read()\n"
             "print(json.dumps({'text': '  P6 ' + str(req['frame_index']) + '\\n  ok ' if data.startswith(b'P6') else ''}))\n");
  ExternalOcr ocr("python3 '" + script.string() + "'");
  EXPECT_EQ(ocr_frame(gray_image(4, 4, 9), ocr, 3), "P6 3 ok");

  write_file(script, "import sys\nsys.exit(3)\n");
  EXPECT_THROW(ocr_frame(gray_image(4, 4, 9), ocr, 3), BackendError);
  write_file(script, "print('not json')\n");
  EXPECT_THROW(ocr_frame(gray_image(4, 4, 9), ocr, 3), BackendError);
}

TEST(Caption, StablePerFrameAndDistinctAcrossFrames) {
  Rng rng(9);
  const auto a = random_image(rng, 16, 16);
  const auto b = random_image(rng, 16, 16);
  const auto ca = caption_frame(a, MockCaption{}, 0);
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, caption_frame(a, MockCaption{}, 5));
  EXPECT_NE(ca, caption_frame(b, MockCaption{}, 1));
}

TEST(Caption, TimeoutCarriesFrameIndex) {
  try {
    caption_frame(gray_image(8, 8, 1), MockCaption(MockCaption::Mode::timeout), 42);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 42"), std::string::npos);
  }
}

TEST(Caption, EmptyDegradesToPlaceholder) {
  EXPECT_EQ(caption_frame(gray_image(8, 8, 1), MockCaption(MockCaption::Mode::empty)), "[no caption]");
}

TEST(Fusion, Examples) {
  EXPECT_EQ(fuse_description("NIFTY 50 +1.2%", "a presenter at a desk").str(),
            "a presenter at a desk | On-screen text: NIFTY 50 +1.2%");
  EXPECT_EQ(fuse_description("", "a slide").str(), "a slide");
  EXPECT_THROW(fuse_description("x", ""), ContractError);
}

TEST(Fusion, ContainsBothPartsProperty) {
  Rng rng(3);
  const std::vector<std::string> ocr = {"", "Gold +0.8%", "SIP returns 10-12%", "a | b"};
  const std::vector<std::string> cap = {"a slide", "a wide shot of a studio desk", "x"};
  for (int i = 0; i < 50; ++i) {
    const auto& o = ocr[rng.below(ocr.size())];
    const auto& c = cap[rng.below(cap.size())];
    const auto f = fuse_description(o, c).str();
    EXPECT_EQ(f.rfind(c, 0), 0u);
    if (!o.empty()) {
      EXPECT_NE(f.find(o), std::string::npos);
      EXPECT_EQ(f.size(), c.size() + 3 + 16 + o.size());
    } else {
      EXPECT_EQ(f, c);
    }
  }
}

TEST(Fusion, DescribeFrameKeepsParts) {
  const auto d = describe_frame(4, 2.5, "Gold +0.8%", "a slide", true);
  EXPECT_EQ(d.frame_index, 4u);
  EXPECT_TRUE(d.ocr_failed);
  EXPECT_EQ(d.fused.str(), "a slide | On-screen text: Gold +0.8%");
  const nlohmann::json j = d;
  EXPECT_EQ(j.get<FrameDescription>(), d);
}

TEST(Merge, SingleSpeaker) {
  const auto t = merge_speaker_transcript(words_at({{"hello", 1.0}, {"world", 2.0}}), {{"S1", 0.0, 10.0}});
  ASSERT_EQ(t.segments.size(), 1u);
  EXPECT_EQ(t.segments[0].speaker_label, "S1");
  EXPECT_EQ(t.segments[0].text, "hello world");
}

TEST(Merge, TwoSpeakersSplitAtBoundary) {
  const std::vector<SpeakerSegment> diar = {{"S1", 0.0, 5.0}, {"S2", 5.0, 10.0}};
  const auto words = words_at({{"a", 1.0}, {"b", 4.0}, {"c", 6.0}, {"d", 9.0}});
  const auto t = merge_speaker_transcript(words, diar);
  ASSERT_EQ(t.segments.size(), 2u);
  EXPECT_EQ(t.segments[0].speaker_label, "S1");
  EXPECT_EQ(t.segments[0].text, "a b");
  EXPECT_EQ(t.segments[1].speaker_label, "S2");
  EXPECT_EQ(t.segments[1].text, "c d");
  EXPECT_EQ(oracle::check_merge({words, diar}, t), "");
}

TEST(Merge, MidpointOnSharedBoundaryGoesToEarlierSegment) {
  const std::vector<SpeakerSegment> diar = {{"S1", 0.0, 5.0}, {"S2", 5.0, 10.0}};
  const auto t = merge_speaker_transcript(words_at({{"edge", 5.0}}), diar);
  ASSERT_EQ(t.segments.size(), 1u);
  EXPECT_EQ(t.segments[0].speaker_label, "S1");
}

TEST(Merge, EmptyDiarizationUsesUnknownSpeaker) {
  const auto t = merge_speaker_transcript(words_at({{"a", 1.0}, {"b", 2.0}}), {});
  ASSERT_EQ(t.segments.size(), 1u);
  EXPECT_EQ(t.segments[0].speaker_label, "SPEAKER_UNK");
  EXPECT_EQ(t.segments[0].text, "a b");
}

TEST(Merge, WordsOutsideSegmentsSnapToNearest) {
  const std::vector<SpeakerSegment> diar = {{"S1", 1.0, 2.0}, {"S2", 6.0, 7.0}};
  // "tie" sits 2.0 from both segments; the earlier one wins.
  const auto sorted = words_at({{"pre", 0.2}, {"gap1", 3.0}, {"tie", 4.0}, {"gap2", 5.5}, {"post", 9.0}});
  const auto u = merge_speaker_transcript(sorted, diar);
  ASSERT_EQ(u.segments.size(), 2u);
  EXPECT_EQ(u.segments[0].text, "pre gap1 tie");
  EXPECT_EQ(u.segments[1].text, "gap2 post");
}

TEST(Merge, RejectsUnsortedInput) {
  EXPECT_THROW(merge_speaker_transcript(words_at({{"b", 2.0}, {"a", 1.0}}), {}), ValidationError);
  EXPECT_THROW(merge_speaker_transcript(words_at({{"a", 1.0}}), {{"S2", 5.0, 6.0}, {"S1", 0.0, 1.0}}),
               ValidationError);
  EXPECT_THROW(merge_speaker_transcript(words_at({{"a", 1.0}}), {{"S1", 2.0, 2.0}}), ValidationError);
}

TEST(Merge, MatchesIntervalOracleProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto layout = oracle::random_layout(rng);
    const auto got = merge_speaker_transcript(layout.words, layout.segments);
    EXPECT_EQ(oracle::check_merge(layout, got), "") << "trial " << trial;
  }
}

TEST(Merge, MockBackendsOnSyntheticAudio) {
  const VideoAsset asset{"a", "mock:seed=11", Domain::finance, Tone::informative, 30.0};
  const auto audio = decode_audio(asset);
  const auto words = MockAsr{}.transcribe(audio);
  const auto diar = MockDiarization{}.diarize(audio);
  ASSERT_FALSE(words.words.empty());
  ASSERT_FALSE(diar.empty());
  EXPECT_NO_THROW(validate(words));
  EXPECT_NO_THROW(validate(diar));
  const auto t = merge_speaker_transcript(words, diar);
  EXPECT_EQ(oracle::check_merge({words, diar}, t), "");
  EXPECT_EQ(words, MockAsr{}.transcribe(audio));
}

TEST(Prompt, SectionOrderAndContent) {
  const std::vector<FrameDescription> descs = {describe_frame(3, 1.5, "Gold +0.8%", "a slide"),
                                               describe_frame(9, 4.0, "", "a presenter")};
  const auto p = build_bos_prompt("vid", descs, one_segment(), 120);
  const auto& r = p.rendered;
  const auto i = r.find("### Instructions (bos-v1)");
  const auto f = r.find("### Frame descriptions");
  const auto t = r.find("### Transcript");
  const auto s = r.find("### Summary");
  ASSERT_NE(i, std::string::npos);
  EXPECT_LT(i, f);
  EXPECT_LT(f, t);
  EXPECT_LT(t, s);
  EXPECT_NE(r.find("120 tokens"), std::string::npos);
  EXPECT_LT(r.find("a slide | On-screen text: Gold +0.8%"), r.find("a presenter"));
  EXPECT_NE(p.sections.transcript.find("S1: hello there"), std::string::npos);
  EXPECT_EQ(p.template_version, "bos-v1");
}

TEST(Prompt, DeterministicAndRoundTrips) {
  const std::vector<FrameDescription> descs = {describe_frame(1, 0.5, "", "a slide")};
  const auto a = build_bos_prompt("vid", descs, one_segment(), 50);
  const auto b = build_bos_prompt("vid", descs, one_segment(), 50);
  EXPECT_EQ(a.rendered, b.rendered);
  const nlohmann::json j = a;
  EXPECT_EQ(j.get<BOSPrompt>().rendered, a.rendered);
}

TEST(Prompt, NoDescriptionsUsesPlaceholder) {
  const auto p = build_bos_prompt("vid", {}, one_segment(), 50);
  EXPECT_EQ(p.sections.frame_descriptions, "No salient visual content.");
}

TEST(Prompt, EmptyTranscriptIsContractViolation) {
  EXPECT_THROW(build_bos_prompt("vid", {}, EnrichedTranscript{}, 50), ContractError);
  EXPECT_THROW(build_bos_prompt("vid", {}, one_segment(), 0), ContractError);
}
