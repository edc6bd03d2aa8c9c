#pragma once

// Independent reference implementations shared by the unit and acceptance
// suites. Deliberately naive: loops and full sorts, no shared code paths with
// the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vidsum/bos/transcript.hpp"
#include "vidsum/core/rng.hpp"

namespace vidsum::oracle {

// Speaker index for one word by scanning every segment.
inline std::size_t speaker_for(const bos::TimedWord& w, const std::vector<bos::SpeakerSegment>& segs) {
  const double m = 0.5 * (w.start_s + w.end_s);
  for (std::size_t i = 0; i < segs.size(); ++i)
    if (segs[i].start_s <= m && m <= segs[i].end_s) return i;
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double d = m < segs[i].start_s ? segs[i].start_s - m : m - segs[i].end_s;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct LabeledText {
  std::string label;
  std::string text;
  bool operator==(const LabeledText&) const = default;
};

inline std::vector<LabeledText> expected_segments(const bos::WordTimeline& words,
                                                  const std::vector<bos::SpeakerSegment>& segs) {
  std::vector<LabeledText> out;
  for (const auto& w : words.words) {
    const std::string label = segs.empty() ? "SPEAKER_UNK" : segs[speaker_for(w, segs)].speaker_label;
    if (!out.empty() && out.back().label == label) {
      out.back().text += " " + w.token;
    } else {
      out.push_back({label, w.token});
    }
  }
  return out;
}

struct Layout {
  bos::WordTimeline words;
  std::vector<bos::SpeakerSegment> segments;
};

// Sorted words and sorted speaker segments with gaps, overlaps, touching
// boundaries, words outside every segment and repeated tokens.
inline Layout random_layout(Rng& rng) {
  Layout l;
  const double horizon = rng.uniform(5.0, 60.0);
  const auto n_segments = rng.below(7);
  double t = rng.uniform(0.0, 3.0);
  const std::vector<std::string> labels = {"S1", "S2", "S3"};
  for (std::uint64_t i = 0; i < n_segments; ++i) {
    const double len = rng.uniform(0.2, horizon / 3.0);
    l.segments.push_back({labels[rng.below(labels.size())], t, t + len});
    const auto mode = rng.below(3);
    t += mode == 0 ? len : mode == 1 ? len + rng.uniform(0.0, 3.0) : len * rng.uniform(0.3, 0.9);
  }
  std::sort(l.segments.begin(), l.segments.end(),
            [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  const auto n_words = 1 + rng.below(80);
  const std::vector<std::string> vocab = {"gold", "rates", "the", "fund", "10-12%", "Nifty", "and", "risk"};
  double w = rng.uniform(0.0, 2.0);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    const double len = rng.below(10) == 0 ? 0.0 : rng.uniform(0.05, 0.8);
    l.words.words.push_back({vocab[rng.below(vocab.size())], w, w + len});
    w += rng.below(6) == 0 ? 0.0 : rng.uniform(0.0, horizon / static_cast<double>(n_words) * 1.5);
  }
  return l;
}

// Empty string when the merge result satisfies word conservation, ordering,
// non-overlap and the oracle's speaker assignment; a description otherwise.
inline std::string check_merge(const Layout& l, const bos::EnrichedTranscript& got) {
  std::ostringstream err;
  std::map<std::string, int> want_tokens, got_tokens;
  for (const auto& w : l.words.words) ++want_tokens[w.token];
  for (const auto& s : got.segments) {
    std::istringstream in(s.text);
    std::string tok;
    while (in >> tok) ++got_tokens[tok];
  }
  if (want_tokens != got_tokens) err << "word multiset differs; ";
  for (std::size_t i = 0; i < got.segments.size(); ++i) {
    const auto& s = got.segments[i];
    if (s.start_s > s.end_s) err << "segment " << i << " inverted; ";
    if (i > 0) {
      const auto& p = got.segments[i - 1];
      if (p.start_s > s.start_s) err << "segment " << i << " out of order; ";
      if (p.end_s > s.start_s) err << "segments " << i - 1 << "," << i << " overlap; ";
      if (p.speaker_label == s.speaker_label) err << "segments " << i - 1 << "," << i << " not merged; ";
    }
  }
  const auto expected = expected_segments(l.words, l.segments);
  std::vector<LabeledText> actual;
  for (const auto& s : got.segments) actual.push_back({s.speaker_label, s.text});
  if (expected != actual) err << "speaker assignment differs from interval oracle; ";
  return err.str();
}

// Indices of the k largest scores by full stable sort: descending, earlier index on ties.
inline std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// |a - b| / max(|a|, |b|), with an absolute floor so values near zero compare
// on absolute error.
inline double relative_error(double a, double b, double floor = 1e-8) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

// Unigram precision / recall / F1 by explicit counting, for one-hot checks.
struct Prf {
  double p = 0, r = 0, f = 0;
};

inline Prf unigram_prf(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  std::map<std::string, int> c, r;
  for (const auto& t : cand) ++c[t];
  for (const auto& t : ref) ++r[t];
  int overlap = 0;
  for (const auto& [t, n] : c)
    if (r.count(t)) overlap += std::min(n, r[t]);
  Prf out;
  out.p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  out.r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  out.f = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

// Unclipped variant: a candidate token counts when it occurs anywhere in the
// reference, and vice versa. This is what greedy one-hot matching computes
// when tokens repeat.
inline Prf membership_prf(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  auto hits = [](const std::vector<std::string>& from, const std::vector<std::string>& in) {
    int n = 0;
    for (const auto& t : from)
      if (std::find(in.begin(), in.end(), t) != in.end()) ++n;
    return static_cast<double>(n) / static_cast<double>(from.size());
  };
  Prf out;
  out.p = hits(cand, ref);
  out.r = hits(ref, cand);
  out.f = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

}  // namespace vidsum::oracle
