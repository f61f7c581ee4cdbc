#pragma once

// JSON mapping for model, training and search configuration.

#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "spancat/model.hpp"
#include "spancat/training.hpp"

namespace spancat {

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Maxout: return "maxout";
    case Activation::Mish: return "mish";
    case Activation::DualMish: return "dual-mish";
  }
  return "maxout";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "maxout") return Activation::Maxout;
  if (s == "mish") return Activation::Mish;
  if (s == "dual-mish") return Activation::DualMish;
  throw DataError("unknown activation '" + s + "'");
}

inline std::string pool_name(PoolOp p) {
  switch (p) {
    case PoolOp::Mean: return "mean";
    case PoolOp::Max: return "max";
    case PoolOp::First: return "first";
    case PoolOp::Last: return "last";
  }
  return "mean";
}

inline PoolOp parse_pool(const std::string& s) {
  if (s == "mean") return PoolOp::Mean;
  if (s == "max") return PoolOp::Max;
  if (s == "first") return PoolOp::First;
  if (s == "last") return PoolOp::Last;
  throw DataError("unknown pooling op '" + s + "'");
}

inline nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json pooling = nlohmann::json::array();
  for (auto p : c.classifier.pooling) pooling.push_back(pool_name(p));
  nlohmann::json labels = nlohmann::json::array();
  for (auto l : c.labels) labels.push_back(std::string(label_name(l)));
  return {
      {"encoder",
       {{"mode", encoder_mode_name(c.encoder)},
        {"embed_dim", c.encoder.embed_dim},
        {"lstm_hidden", c.encoder.lstm_hidden},
        {"hash_buckets", c.encoder.hash_buckets},
        {"external_dim", c.encoder.external_dim}}},
      {"classifier",
       {{"activation", activation_name(c.classifier.activation)},
        {"hidden", c.classifier.hidden},
        {"depth", c.classifier.depth},
        {"dropout", c.classifier.dropout},
        {"pooling", pooling}}},
      {"suggester",
       {{"max_ngram_len", c.suggester.max_ngram_len},
        {"use_subtrees", c.suggester.use_subtrees},
        {"restrict_ngrams_to_sentence", c.suggester.restrict_ngrams_to_sentence}}},
      {"labels", labels},
      {"threshold", c.threshold},
      {"seed", c.seed},
  };
}

// Missing keys keep their defaults.
inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c = {}) {
  try {
    if (auto it = j.find("encoder"); it != j.end()) {
      const auto& e = *it;
      if (e.contains("mode")) set_encoder_mode(c.encoder, e["mode"].get<std::string>());
      c.encoder.embed_dim = e.value("embed_dim", c.encoder.embed_dim);
      c.encoder.lstm_hidden = e.value("lstm_hidden", c.encoder.lstm_hidden);
      c.encoder.hash_buckets = e.value("hash_buckets", c.encoder.hash_buckets);
      c.encoder.external_dim = e.value("external_dim", c.encoder.external_dim);
    }
    if (auto it = j.find("classifier"); it != j.end()) {
      const auto& k = *it;
      if (k.contains("activation")) c.classifier.activation = parse_activation(k["activation"].get<std::string>());
      c.classifier.hidden = k.value("hidden", c.classifier.hidden);
      c.classifier.depth = k.value("depth", c.classifier.depth);
      c.classifier.dropout = k.value("dropout", c.classifier.dropout);
      if (k.contains("pooling")) {
        c.classifier.pooling.clear();
        for (const auto& p : k["pooling"]) c.classifier.pooling.push_back(parse_pool(p.get<std::string>()));
      }
    }
    if (auto it = j.find("suggester"); it != j.end()) {
      const auto& s = *it;
      c.suggester.max_ngram_len = s.value("max_ngram_len", c.suggester.max_ngram_len);
      c.suggester.use_subtrees = s.value("use_subtrees", c.suggester.use_subtrees);
      c.suggester.restrict_ngrams_to_sentence =
          s.value("restrict_ngrams_to_sentence", c.suggester.restrict_ngrams_to_sentence);
    }
    if (auto it = j.find("labels"); it != j.end()) {
      c.labels.clear();
      for (const auto& l : *it) {
        auto parsed = parse_label(l.get<std::string>());
        if (!parsed || !is_scheme_label(*parsed)) throw DataError("label list: unknown label " + l.dump());
        c.labels.push_back(*parsed);
      }
    }
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("model config: ") + ex.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {
      {"peak_lr", t.peak_lr},
      {"warmup_steps", t.warmup_steps},
      {"max_steps", t.max_steps},
      {"early_stop_patience_steps", t.patience_steps},
      {"grad_accum", t.grad_accum},
      {"batch_words_max", t.batch_words_max},
      {"batch_words_start", t.batch_words_start},
      {"batch_growth", t.batch_growth},
      {"seed", t.seed},
      {"eval_every", t.eval_every},
      {"weight_decay", t.weight_decay},
      {"beta1", t.beta1},
      {"beta2", t.beta2},
      {"eps", t.eps},
      {"oversample_alpha", t.oversample_alpha},
      {"gold_annotator", t.gold_annotator},
  };
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig t = {}) {
  try {
    t.peak_lr = j.value("peak_lr", t.peak_lr);
    t.warmup_steps = j.value("warmup_steps", t.warmup_steps);
    t.max_steps = j.value("max_steps", t.max_steps);
    t.patience_steps = j.value("early_stop_patience_steps", t.patience_steps);
    t.grad_accum = j.value("grad_accum", t.grad_accum);
    t.batch_words_max = j.value("batch_words_max", t.batch_words_max);
    t.batch_words_start = j.value("batch_words_start", t.batch_words_start);
    t.batch_growth = j.value("batch_growth", t.batch_growth);
    t.seed = j.value("seed", t.seed);
    t.eval_every = j.value("eval_every", t.eval_every);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    t.beta1 = j.value("beta1", t.beta1);
    t.beta2 = j.value("beta2", t.beta2);
    t.eps = j.value("eps", t.eps);
    t.oversample_alpha = j.value("oversample_alpha", t.oversample_alpha);
    t.gold_annotator = j.value("gold_annotator", t.gold_annotator);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("training config: ") + ex.what());
  }
  t.validate();
  return t;
}

template <class V>
nlohmann::json list_json(const std::vector<V>& v) {
  return nlohmann::json(v);
}

inline nlohmann::json to_json(const SearchSpace& s) {
  std::vector<std::string> acts;
  for (auto a : s.activations) acts.push_back(activation_name(a));
  return {
      {"architectures", s.architectures},
      {"encoder_sources", s.encoder_sources},
      {"activations", acts},
      {"hidden_sizes", s.hidden_sizes},
      {"dropouts", s.dropouts},
      {"depths", s.depths},
      {"lr_min", s.lr_min},
      {"lr_max", s.lr_max},
      {"seeds", s.seeds},
      {"grad_accums", s.grad_accums},
      {"batch_starts", s.batch_starts},
  };
}

inline SearchSpace search_space_from_json(const nlohmann::json& j, SearchSpace s = {}) {
  try {
    if (j.contains("architectures")) s.architectures = j["architectures"].get<std::vector<std::string>>();
    if (j.contains("encoder_sources")) s.encoder_sources = j["encoder_sources"].get<std::vector<std::string>>();
    if (j.contains("activations")) {
      s.activations.clear();
      for (const auto& a : j["activations"]) s.activations.push_back(parse_activation(a.get<std::string>()));
    }
    if (j.contains("hidden_sizes")) s.hidden_sizes = j["hidden_sizes"].get<std::vector<int>>();
    if (j.contains("dropouts")) s.dropouts = j["dropouts"].get<std::vector<double>>();
    if (j.contains("depths")) s.depths = j["depths"].get<std::vector<int>>();
    s.lr_min = j.value("lr_min", s.lr_min);
    s.lr_max = j.value("lr_max", s.lr_max);
    if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("grad_accums")) s.grad_accums = j["grad_accums"].get<std::vector<int>>();
    if (j.contains("batch_starts")) s.batch_starts = j["batch_starts"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("search space: ") + ex.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw DataError("'" + path + "': " + ex.what());
  }
}

}  // namespace spancat
