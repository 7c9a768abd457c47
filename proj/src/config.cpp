#include "textmatch/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "textmatch/errors.hpp"
#include "textmatch/text.hpp"

namespace textmatch {

namespace {

double parse_double(std::string_view value, std::string_view key, const std::string& context) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw DataError(context + ": invalid number '" + std::string(value) + "' for key '" +
                    std::string(key) + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view value, std::string_view key, const std::string& context) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw DataError(context + ": invalid integer '" + std::string(value) + "' for key '" +
                    std::string(key) + "'");
  }
  return out;
}

std::size_t parse_size(std::string_view value, std::string_view key, const std::string& context) {
  return static_cast<std::size_t>(parse_u64(value, key, context));
}

bool parse_bool(std::string_view value, std::string_view key, const std::string& context) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw DataError(context + ": invalid boolean '" + std::string(value) + "' for key '" +
                  std::string(key) + "' (use true/false)");
}

}  // namespace

void set_config_value(RunConfig& config, std::string_view key, std::string_view value,
                      const std::string& context) {
  if (key == "seed") {
    config.seed = parse_u64(value, key, context);
  } else if (key == "d") {
    config.d = parse_size(value, key, context);
  } else if (key == "d_p") {
    config.d_p = parse_size(value, key, context);
  } else if (key == "gcn_layers") {
    config.gcn_layers = parse_size(value, key, context);
  } else if (key == "top_k") {
    config.top_k = parse_size(value, key, context);
  } else if (key == "window") {
    config.window = parse_size(value, key, context);
  } else if (key == "damping") {
    config.damping = parse_double(value, key, context);
  } else if (key == "tau") {
    config.tau = parse_double(value, key, context);
  } else if (key == "alpha") {
    config.alpha = parse_double(value, key, context);
  } else if (key == "beta") {
    config.beta = parse_double(value, key, context);
  } else if (key == "gamma") {
    config.gamma = parse_double(value, key, context);
  } else if (key == "lr_encoder") {
    config.lr_encoder = parse_double(value, key, context);
  } else if (key == "lr_rest") {
    config.lr_rest = parse_double(value, key, context);
  } else if (key == "weight_decay") {
    config.weight_decay = parse_double(value, key, context);
  } else if (key == "batch_size") {
    config.batch_size = parse_size(value, key, context);
  } else if (key == "epochs") {
    config.epochs = parse_size(value, key, context);
  } else if (key == "patience") {
    config.patience = parse_size(value, key, context);
  } else if (key == "threshold") {
    config.threshold = parse_double(value, key, context);
  } else if (key == "max_tokens") {
    config.max_tokens = parse_size(value, key, context);
  } else if (key == "min_count") {
    config.min_count = parse_size(value, key, context);
  } else if (key == "provider") {
    config.provider = std::string(value);
  } else if (key == "no_contrastive") {
    config.no_contrastive = parse_bool(value, key, context);
  } else if (key == "no_graph") {
    config.no_graph = parse_bool(value, key, context);
  } else if (key == "self_complement") {
    config.self_complement = parse_bool(value, key, context);
  } else if (key == "cache_graphs") {
    config.cache_graphs = parse_bool(value, key, context);
  } else if (key == "train_path") {
    config.train_path = std::string(value);
  } else if (key == "valid_path") {
    config.valid_path = std::string(value);
  } else if (key == "knowledge_path") {
    config.knowledge_path = std::string(value);
  } else if (key == "stopwords_path") {
    config.stopwords_path = std::string(value);
  } else if (key == "out_dir") {
    config.out_dir = std::string(value);
  } else {
    throw DataError(context + ": unknown key '" + std::string(key) + "'");
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);

  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view stripped = trim_whitespace(line);
    if (stripped.empty()) continue;

    const std::string context = path + ":" + std::to_string(line_no);
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(context + ": expected 'key = value'");
    }
    const std::string_view key = trim_whitespace(stripped.substr(0, eq));
    const std::string_view value = trim_whitespace(stripped.substr(eq + 1));
    if (key.empty()) throw DataError(context + ": empty key");
    set_config_value(config, key, value, context);
  }
  return config;
}

void validate_config(const RunConfig& config) {
  const auto fail = [](const std::string& what) { throw DataError("config error: " + what); };
  if (config.d == 0 || config.d_p == 0 || config.gcn_layers == 0) {
    fail("d, d_p, and gcn_layers must be positive");
  }
  if (config.top_k == 0) fail("top_k must be at least 1");
  if (config.window < 2) fail("window must be at least 2");
  if (config.damping <= 0.0 || config.damping >= 1.0) fail("damping must lie in (0, 1)");
  if (config.tau <= 0.0) fail("tau must be positive");
  if (config.alpha < 0.0 || config.beta < 0.0 || config.gamma < 0.0) {
    fail("loss weights must be non-negative");
  }
  if (config.lr_encoder <= 0.0 || config.lr_rest <= 0.0) fail("learning rates must be positive");
  if (config.weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (config.batch_size == 0) fail("batch_size must be at least 1");
  if (config.epochs == 0) fail("epochs must be at least 1");
  if (config.patience == 0) fail("patience must be at least 1");
  if (config.threshold <= 0.0 || config.threshold >= 1.0) fail("threshold must lie in (0, 1)");
  if (config.min_count == 0) fail("min_count must be at least 1");
  if (config.provider != "column" && config.provider != "augment" &&
      config.provider != "identity") {
    fail("provider must be one of column, augment, identity");
  }
  if (config.provider == "identity" && !config.self_complement) {
    fail("the identity provider is only valid together with self_complement");
  }
}

std::string config_json(const RunConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["d"] = config.d;
  j["d_p"] = config.d_p;
  j["gcn_layers"] = config.gcn_layers;
  j["top_k"] = config.top_k;
  j["window"] = config.window;
  j["damping"] = config.damping;
  j["tau"] = config.tau;
  j["alpha"] = config.alpha;
  j["beta"] = config.beta;
  j["gamma"] = config.gamma;
  j["lr_encoder"] = config.lr_encoder;
  j["lr_rest"] = config.lr_rest;
  j["weight_decay"] = config.weight_decay;
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["patience"] = config.patience;
  j["threshold"] = config.threshold;
  j["max_tokens"] = config.max_tokens;
  j["min_count"] = config.min_count;
  j["provider"] = config.provider;
  j["no_contrastive"] = config.no_contrastive;
  j["no_graph"] = config.no_graph;
  j["self_complement"] = config.self_complement;
  j["cache_graphs"] = config.cache_graphs;
  j["train_path"] = config.train_path;
  j["valid_path"] = config.valid_path;
  j["knowledge_path"] = config.knowledge_path;
  j["stopwords_path"] = config.stopwords_path;
  j["out_dir"] = config.out_dir;
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, const std::string& context) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(context + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(context + ": expected a JSON object");

  RunConfig config;
  for (const auto& [key, value] : j.items()) {
    std::string as_text;
    if (value.is_string()) {
      as_text = value.get<std::string>();
    } else if (value.is_boolean()) {
      as_text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number()) {
      as_text = value.dump();  // shortest round-trip form, from_chars-safe
    } else {
      throw DataError(context + ": unsupported value type for key '" + key + "'");
    }
    set_config_value(config, key, as_text, context);
  }
  return config;
}

}  // namespace textmatch
