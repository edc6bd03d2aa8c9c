#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "vidsum/bos/backends.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/keyframes/flow.hpp"
#include "vidsum/metrics/text.hpp"
#include "vidsum/preference/candidates.hpp"
#include "vidsum/ranker/embedders.hpp"

namespace vidsum::pipeline {

// Binding strings: "mock", "mock:<variant>", "proxy" (flow only) or
// "external:<shell command>".
struct Binding {
  std::string scheme;
  std::string argument;
};

inline Binding parse_binding(std::string_view role, std::string_view text) {
  const auto colon = text.find(':');
  Binding b{std::string(text.substr(0, colon)), colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1))};
  if (b.scheme == "external" && b.argument.empty()) {
    throw ValidationError("backend '" + std::string(role) + "': external binding needs a command");
  }
  return b;
}

[[noreturn]] inline void unknown_binding(std::string_view role, std::string_view text) {
  throw ValidationError("backend '" + std::string(role) + "' has no binding named '" + std::string(text) + "'");
}

inline std::unique_ptr<keyframes::FlowEstimator> make_flow(std::string_view text) {
  const auto b = parse_binding("flow", text);
  if (b.scheme == "proxy" || (b.scheme == "mock" && b.argument.empty())) {
    return std::make_unique<keyframes::IntensityProxyEstimator>();
  }
  if (b.scheme == "external") return std::make_unique<keyframes::ExternalFlowEstimator>(b.argument);
  unknown_binding("flow", text);
}

inline std::unique_ptr<bos::OcrBackend> make_ocr(std::string_view text) {
  const auto b = parse_binding("ocr", text);
  if (b.scheme == "mock") {
    if (b.argument.empty()) return std::make_unique<bos::MockOcr>();
    if (b.argument == "failing") return std::make_unique<bos::FailingOcr>();
    if (b.argument.starts_with("fixed=")) return std::make_unique<bos::MockOcr>(b.argument.substr(6));
  }
  if (b.scheme == "external") return std::make_unique<bos::ExternalOcr>(b.argument);
  unknown_binding("ocr", text);
}

inline std::unique_ptr<bos::CaptionBackend> make_caption(std::string_view text) {
  const auto b = parse_binding("caption", text);
  if (b.scheme == "mock") {
    if (b.argument.empty()) return std::make_unique<bos::MockCaption>();
    if (b.argument == "empty") return std::make_unique<bos::MockCaption>(bos::MockCaption::Mode::empty);
    if (b.argument == "timeout") return std::make_unique<bos::MockCaption>(bos::MockCaption::Mode::timeout);
  }
  if (b.scheme == "external") return std::make_unique<bos::ExternalCaption>(b.argument);
  unknown_binding("caption", text);
}

inline std::unique_ptr<bos::AsrBackend> make_asr(std::string_view text) {
  const auto b = parse_binding("asr", text);
  if (b.scheme == "mock" && b.argument.empty()) return std::make_unique<bos::MockAsr>();
  if (b.scheme == "external") return std::make_unique<bos::ExternalAsr>(b.argument);
  unknown_binding("asr", text);
}

inline std::unique_ptr<bos::DiarizationBackend> make_diarization(std::string_view text) {
  const auto b = parse_binding("diarization", text);
  if (b.scheme == "mock" && b.argument.empty()) return std::make_unique<bos::MockDiarization>();
  if (b.scheme == "external") return std::make_unique<bos::ExternalDiarization>(b.argument);
  unknown_binding("diarization", text);
}

inline std::unique_ptr<preference::GeneratorBackend> make_generator(std::string_view text) {
  const auto b = parse_binding("generator", text);
  if (b.scheme == "mock") {
    if (b.argument.empty() || b.argument == "extractive") return std::make_unique<preference::ExtractiveGenerator>();
    if (b.argument == "template") return std::make_unique<preference::TemplateGenerator>();
  }
  if (b.scheme == "external") return std::make_unique<preference::ExternalGenerator>(b.argument);
  unknown_binding("generator", text);
}

inline std::unique_ptr<preference::JudgeBackend> make_judge(std::string_view text) {
  const auto b = parse_binding("judge", text);
  if (b.scheme == "mock") {
    if (b.argument.empty() || b.argument == "fact") return std::make_unique<preference::FactJudge>();
    if (b.argument == "length") return std::make_unique<preference::LengthJudge>();
    if (b.argument == "constant") return std::make_unique<preference::ConstantJudge>();
  }
  if (b.scheme == "external") return std::make_unique<preference::ExternalJudge>(b.argument);
  unknown_binding("judge", text);
}

inline std::unique_ptr<ranker::ImageEmbedder> make_image_embedder(std::string_view text, std::uint64_t seed,
                                                                  int dim) {
  const auto b = parse_binding("image-embedder", text);
  if (b.scheme == "mock" && b.argument.empty()) return std::make_unique<ranker::MockImageEmbedder>(seed, dim);
  if (b.scheme == "external") return std::make_unique<ranker::ExternalImageEmbedder>(b.argument, dim);
  unknown_binding("image-embedder", text);
}

inline std::unique_ptr<ranker::TextEmbedder> make_text_embedder(std::string_view text, std::uint64_t seed, int dim) {
  const auto b = parse_binding("text-embedder", text);
  if (b.scheme == "mock" && b.argument.empty()) return std::make_unique<ranker::MockTextEmbedder>(seed, dim);
  if (b.scheme == "external") return std::make_unique<ranker::ExternalTextEmbedder>(b.argument, dim);
  unknown_binding("text-embedder", text);
}

inline std::unique_ptr<metrics::TokenEmbedder> make_token_embedder(std::string_view text) {
  const auto b = parse_binding("token-embedder", text);
  if (b.scheme == "mock" && (b.argument.empty() || b.argument == "onehot")) {
    return std::make_unique<metrics::OneHotEmbedder>();
  }
  if (b.scheme == "external") return std::make_unique<metrics::ExternalTokenEmbedder>(b.argument);
  unknown_binding("token-embedder", text);
}

// Fails early on any binding that cannot be constructed.
inline void check_bindings(const std::map<std::string, std::string>& backends) {
  make_flow(backends.at("flow"));
  make_ocr(backends.at("ocr"));
  make_caption(backends.at("caption"));
  make_asr(backends.at("asr"));
  make_diarization(backends.at("diarization"));
  make_generator(backends.at("generator"));
  make_judge(backends.at("judge"));
  make_image_embedder(backends.at("image-embedder"), 0, 1);
  make_text_embedder(backends.at("text-embedder"), 0, 1);
  make_token_embedder(backends.at("token-embedder"));
}

}  // namespace vidsum::pipeline
