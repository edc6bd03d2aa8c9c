#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/ranker/model.hpp"
#include "vidsum/ranker/network.hpp"

namespace vidsum::ranker {

enum class Optimizer { adam, sgd };

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  int batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;  // mean over items, at the parameters the epoch started from
  double bce = 0.0;
  double diversity = 0.0;
};

struct TrainResult {
  RankerModel model;
  std::vector<EpochRecord> curve;
};

inline nlohmann::json curve_to_json(const std::vector<EpochRecord>& curve) {
  auto arr = nlohmann::json::array();
  for (const auto& e : curve) {
    arr.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"bce", e.bce}, {"diversity", e.diversity}});
  }
  return arr;
}

// Called after each epoch with the updated model; return false to stop early.
using EpochCallback = std::function<bool(const EpochRecord&, const RankerModel&)>;

namespace detail {

inline void add_scaled(RankerParams& into, const RankerParams& from, double scale) {
  std::vector<Mat*> dst;
  into.visit([&](const std::string&, Mat& m) { dst.push_back(&m); });
  std::size_t i = 0;
  from.visit([&](const std::string&, const Mat& m) { *dst[i++] += scale * m; });
}

}  // namespace detail

// Gradient descent from a seeded initialization. Items are visited in a
// seeded shuffled order when minibatching; one update per batch.
inline TrainResult train_ranker(const std::vector<RankerItem>& dataset, const RankerConfig& model_config,
                                const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  require(!dataset.empty(), "train_ranker needs at least one item");
  require(config.epochs >= 0, "epochs must be non-negative");
  require(config.learning_rate > 0.0, "learning rate must be positive");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& item = dataset[i];
    if (static_cast<Eigen::Index>(item.labels.size()) != item.frames.rows()) {
      throw ContractError("training item " + std::to_string(i) + " has mismatched label count");
    }
    if (std::none_of(item.labels.begin(), item.labels.end(), [](int y) { return y == 1; })) {
      throw ContractError("training item " + std::to_string(i) + " has no positive label");
    }
  }

  TrainResult result{init_ranker(model_config, config.seed), {}};
  auto& model = result.model;
  RankerParams m1 = model.params.zeros_like();
  RankerParams m2 = model.params.zeros_like();
  Rng rng(derive_seed(config.seed, "ranker-order"));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = config.batch_size <= 0 ? dataset.size() : static_cast<std::size_t>(config.batch_size);
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < dataset.size()) rng.shuffle(order);
    EpochRecord rec{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      RankerParams grad = model.params.zeros_like();
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        auto gr = loss_and_gradient(model, dataset[order[b]]);
        if (!std::isfinite(gr.loss.loss)) {
          std::ostringstream msg;
          msg << "ranker training diverged at epoch " << epoch << ", item " << order[b] << ": loss=" << gr.loss.loss
              << " (bce=" << gr.loss.bce << ", diversity=" << gr.loss.diversity << ")";
          throw NumericError(msg.str());
        }
        rec.loss += gr.loss.loss / static_cast<double>(dataset.size());
        rec.bce += gr.loss.bce / static_cast<double>(dataset.size());
        rec.diversity += gr.loss.diversity / static_cast<double>(dataset.size());
        detail::add_scaled(grad, gr.grad, inv);
      }
      ++step;
      if (config.optimizer == Optimizer::sgd) {
        detail::add_scaled(model.params, grad, -config.learning_rate);
      } else {
        const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
        std::vector<Mat*> g_list, m_list, v_list;
        grad.visit([&](const std::string&, Mat& m) { g_list.push_back(&m); });
        m1.visit([&](const std::string&, Mat& m) { m_list.push_back(&m); });
        m2.visit([&](const std::string&, Mat& m) { v_list.push_back(&m); });
        std::size_t t = 0;
        model.params.visit([&](const std::string&, Mat& w) {
          const Mat& g = *g_list[t];
          Mat& m = *m_list[t];
          Mat& v = *v_list[t];
          m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
          v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g.cwiseProduct(g);
          w.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.adam_eps);
          ++t;
        });
      }
      try {
        model.check_finite();
      } catch (const NumericError& e) {
        throw NumericError("ranker training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    result.curve.push_back(rec);
    if (on_epoch && !on_epoch(rec, model)) break;
  }
  return result;
}

struct Prediction {
  std::vector<double> scores;
  Mat attention;
};

inline Prediction predict(const RankerModel& model, const Mat& raw_frames, const Vec& raw_text) {
  const auto c = forward(model, raw_frames, raw_text);
  return {std::vector<double>(c.scores.data(), c.scores.data() + c.scores.size()), c.attention};
}

}  // namespace vidsum::ranker
