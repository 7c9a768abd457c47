#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace textmatch {

/// Every knob of a run. The defaults are the reference configuration;
/// `seed` fully determines shuffling, initialization, and complement
/// generation, so two runs with equal fields produce identical artifacts.
struct RunConfig {
  std::uint64_t seed = 42;

  // model widths
  std::size_t d = 64;
  std::size_t d_p = 64;
  std::size_t gcn_layers = 2;

  // keyword + knowledge retrieval
  std::size_t top_k = 5;
  std::size_t window = 3;
  double damping = 0.85;

  // objectives
  double tau = 0.1;
  double alpha = 0.8;
  double beta = 0.1;
  double gamma = 0.1;

  // optimization; the encoder group (embedding + head) and everything else
  // keep separate learning rates
  double lr_encoder = 1e-3;
  double lr_rest = 1e-3;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::size_t patience = 5;

  // data handling
  double threshold = 0.5;
  std::size_t max_tokens = 64;
  std::size_t min_count = 1;
  std::string provider = "augment";  // column | augment | identity

  // ablations
  bool no_contrastive = false;
  bool no_graph = false;
  bool self_complement = false;

  bool cache_graphs = false;

  // file locations; empty means "not configured"
  std::string train_path;
  std::string valid_path;
  std::string knowledge_path;
  std::string stopwords_path;
  std::string out_dir;
};

/// Applies one `key = value` assignment. Unknown keys and unparseable
/// values raise DataError with `context` as the message prefix.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value,
                      const std::string& context);

/// Reads a `key = value` file; '#' starts a comment, blank lines are
/// skipped. Errors carry `path:line`.
RunConfig load_config(const std::string& path);

/// Range and consistency checks shared by the trainer and the CLI. The
/// identity provider is reserved for the self_complement ablation; naming
/// it without the flag is rejected here.
void validate_config(const RunConfig& config);

/// JSON object with one member per field, for the checkpoint sidecar.
std::string config_json(const RunConfig& config);

/// Inverse of config_json; unknown members raise DataError.
RunConfig config_from_json(const std::string& text, const std::string& context);

}  // namespace textmatch
