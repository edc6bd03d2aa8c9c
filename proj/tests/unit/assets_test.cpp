#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vidsum/assets/artifacts.hpp"
#include "vidsum/assets/manifest.hpp"
#include "vidsum/assets/media.hpp"
#include "vidsum/bos/transcript.hpp"
#include "vidsum/core/wav.hpp"

using namespace vidsum;
using vidsum::testing::TempDir;

namespace {

DatasetManifest parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in);
}

std::string record(const std::string& id, const std::string& domain, const std::string& tone, double duration) {
  std::ostringstream s;
  s << R"({"id":")" << id << R"(","source_uri":"mock:seed=1","domain":")" << domain << R"(","tone":")" << tone
    << R"(","duration_s":)" << duration << "}";
  return s.str();
}

VideoAsset mock_asset(const std::string& id, double duration, const std::string& params = "seed=3") {
  return {id, "mock:" + params, Domain::finance, Tone::neutral, duration};
}

}  // namespace

TEST(Manifest, AcceptsFinanceEnergeticRecord) {
  const auto m = parse(record("v1", "Finance", "Energetic", 1800) + "\n");
  ASSERT_EQ(m.assets.size(), 1u);
  EXPECT_EQ(m.assets[0].id, "v1");
  EXPECT_EQ(m.assets[0].domain, Domain::finance);
  EXPECT_EQ(m.assets[0].tone, Tone::energetic);
  EXPECT_DOUBLE_EQ(m.assets[0].duration_s, 1800.0);
}

TEST(Manifest, EmptyFileGivesEmptyManifest) {
  EXPECT_TRUE(parse("").assets.empty());
  EXPECT_TRUE(parse("\n  \n").assets.empty());
}

TEST(Manifest, DurationCapIsInclusive) {
  EXPECT_NO_THROW(parse(record("a", "Business", "Neutral", 2400)));
  try {
    parse(record("a", "Business", "Neutral", 2401));
    FAIL() << "expected a validation error";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("2400"), std::string::npos);
  }
}

TEST(Manifest, RejectsUnknownEnumsDuplicatesAndBadJson) {
  EXPECT_THROW(parse(record("a", "Crypto", "Neutral", 10)), ValidationError);
  EXPECT_THROW(parse(record("a", "Finance", "Angry", 10)), ValidationError);
  try {
    parse(record("a", "Finance", "Neutral", 10) + "\n" + record("a", "Finance", "Neutral", 10));
    FAIL();
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse(record("a", "Finance", "Neutral", 10) + "\n\n{not json\n");
    FAIL();
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse(R"({"id":"a","source_uri":"x","domain":"Finance","tone":"Neutral","duration_s":-1})"),
               ValidationError);
  EXPECT_THROW(parse(R"({"id":"a","domain":"Finance","tone":"Neutral","duration_s":1})"), ValidationError);
}

// Every line either yields an asset or a located error.
TEST(Manifest, ValidationIsTotal) {
  Rng rng(11);
  const std::vector<std::string> domains = {"Business", "Finance", "Investment", "Economics", "Marketing", "Sports"};
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = domains[rng.below(domains.size())];
    const double dur = rng.uniform(-10.0, 2500.0);
    const std::string line = record("x", d, "Cautious", dur);
    const bool valid = d != "Sports" && dur >= 0.0 && dur <= 2400.0;
    if (valid) {
      EXPECT_EQ(parse(line).assets.size(), 1u);
    } else {
      EXPECT_THROW(parse(line), ManifestError) << line;
    }
  }
}

TEST(Manifest, JsonlRoundTrip) {
  const auto m = parse(record("a", "Finance", "Neutral", 12.5) + "\n" + record("b", "Marketing", "Cautious", 3) + "\n");
  EXPECT_EQ(parse(to_jsonl(m)), m);
}

TEST(SampleFrames, TenSecondsAtOneFps) {
  const auto seq = sample_frames(mock_asset("a", 10.0), 1.0);
  ASSERT_EQ(seq.size(), 10u);
  for (std::size_t k = 0; k < seq.size(); ++k) EXPECT_DOUBLE_EQ(seq[k].timestamp_s, static_cast<double>(k));
  EXPECT_EQ(seq.asset_id(), "a");
}

TEST(SampleFrames, ZeroFpsIsContractError) {
  EXPECT_THROW(sample_frames(mock_asset("a", 10.0), 0.0), ContractError);
  EXPECT_THROW(sample_frames(mock_asset("a", 10.0), -1.0), ContractError);
}

TEST(SampleFrames, TwoSecondsAtFiveFpsMatchesProbe) {
  const auto asset = mock_asset("a", 2.0, "seed=5&fps=25");
  const auto media = open_media(asset);
  const auto info = media->probe();
  const auto seq = sample_frames(asset, 5.0);
  // Independent count: native frames / native frames per sample.
  const auto expected = static_cast<std::size_t>(info.native_frame_count / (info.native_fps / 5.0));
  ASSERT_EQ(seq.size(), expected);
  ASSERT_EQ(seq.size(), 10u);
  for (std::size_t k = 1; k < seq.size(); ++k) EXPECT_NEAR(seq[k].timestamp_s - seq[k - 1].timestamp_s, 0.2, 1e-12);
  EXPECT_EQ(seq[3].image, media->frame_at(0.6));
}

TEST(SampleFrames, UnreadableAndEmptyMedia) {
  EXPECT_THROW(sample_frames(mock_asset("a", 5.0, "unreadable"), 1.0), DecodeError);
  EXPECT_THROW(sample_frames(mock_asset("a", 0.0), 1.0), EmptyAssetError);
  VideoAsset bogus{"b", "ftp://nowhere", Domain::finance, Tone::neutral, 3.0};
  EXPECT_THROW(sample_frames(bogus, 1.0), DecodeError);
}

TEST(FrameSequence, EnforcesInvariants) {
  Image a(4, 4), b(5, 4);
  EXPECT_THROW(FrameSequence("x", 1.0, {{0.0, a}, {0.0, a}}), ValidationError);
  EXPECT_THROW(FrameSequence("x", 1.0, {{0.0, a}, {1.0, b}}), DimensionError);
  EXPECT_THROW(FrameSequence("x", 0.0, {}), ContractError);
}

TEST(AudioTrack, DecodesMonoSixteenKilohertz) {
  const auto track = decode_audio(mock_asset("a", 3.0));
  EXPECT_EQ(track.sample_rate_hz(), 16000);
  EXPECT_EQ(track.samples().size(), 48000u);
  EXPECT_THROW(AudioTrack("x", {}, 16000), DecodeError);
  EXPECT_THROW(AudioTrack("x", {1}, 0), ContractError);
}

TEST(Wav, ResamplesAndDownmixes) {
  PcmAudio stereo{{100, 300, 100, 300, 100, 300, 100, 300}, 2, 8000};
  const auto mono = to_mono(stereo, 16000);
  ASSERT_EQ(mono.size(), 8u);
  for (auto s : mono) EXPECT_EQ(s, 200);
  const auto bytes = encode_wav(stereo);
  const auto back = decode_wav(bytes);
  EXPECT_EQ(back.samples, stereo.samples);
  EXPECT_EQ(back.channels, 2);
  EXPECT_THROW(decode_wav("RIFF"), DecodeError);
}

TEST(Ppm, RoundTripAndRejectsGarbage) {
  Rng rng(2);
  const auto img = vidsum::testing::random_image(rng, 7, 5);
  EXPECT_EQ(decode_ppm(encode_ppm(img)), img);
  EXPECT_THROW(decode_ppm("P3\n1 1\n255\n0 0 0"), DecodeError);
  EXPECT_THROW(decode_ppm("P6\n2 2\n255\nabc"), DecodeError);
}

TEST(Artifacts, FramesRoundTripByteIdentically) {
  TempDir dir("frames");
  const auto seq = sample_frames(mock_asset("clip", 4.0), 2.0);
  const auto handle = persist_artifact(dir.path(), Stage::ingest, seq);
  EXPECT_EQ(handle.path, dir.path() / "ingest" / "clip" / "index.json");
  EXPECT_EQ(load_frames(dir.path(), Stage::ingest, "clip"), seq);
  const auto first = read_file(handle.path);
  const auto frame0 = read_file(dir.path() / "ingest" / "clip" / "frame_000000.ppm");
  persist_artifact(dir.path(), Stage::ingest, seq);
  EXPECT_EQ(read_file(handle.path), first);
  EXPECT_EQ(read_file(dir.path() / "ingest" / "clip" / "frame_000000.ppm"), frame0);
}

TEST(Artifacts, AudioAndJsonRoundTrip) {
  TempDir dir("audio");
  const auto track = decode_audio(mock_asset("clip", 2.0));
  persist_artifact(dir.path(), Stage::ingest, track);
  const auto back = load_audio(dir.path(), Stage::ingest, "clip");
  EXPECT_EQ(back.samples(), track.samples());
  EXPECT_EQ(back.sample_rate_hz(), track.sample_rate_hz());

  bos::EnrichedTranscript transcript;
  transcript.segments.push_back({"S1", 0.0, 1.5, "hello there"});
  transcript.segments.push_back({"S2", 1.5, 3.0, "markets rose 2%"});
  persist_artifact(dir.path(), Stage::bos, "clip", transcript);
  EXPECT_EQ(load_artifact<bos::EnrichedTranscript>(dir.path(), Stage::bos, "clip"), transcript);
}

TEST(Artifacts, UnwritableRunDirIsPersistenceError) {
  TempDir dir("readonly");
  // A regular file where the run directory should be: no privilege bypasses this.
  write_file(dir / "blocker", "x");
  try {
    persist_json(dir / "blocker", Stage::frames, "a", nlohmann::json{{"k", 1}});
    FAIL() << "expected a persistence error";
  } catch (const PersistenceError& e) {
    EXPECT_NE(e.path().find("blocker"), std::string::npos);
  }
  EXPECT_THROW(load_audio(dir.path(), Stage::ingest, "missing"), PersistenceError);
  EXPECT_THROW(load_json(dir / "nope.json"), PersistenceError);
}

TEST(Stages, NamesRoundTrip) {
  for (auto s : all_stages) EXPECT_EQ(parse_stage(to_string(s)), s);
  EXPECT_EQ(to_string(Stage::train_dpo), "train-dpo");
  EXPECT_FALSE(parse_stage("bogus").has_value());
}
