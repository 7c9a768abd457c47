#include "textmatch/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "textmatch/checkpoint.hpp"
#include "textmatch/config.hpp"
#include "textmatch/data.hpp"
#include "textmatch/errors.hpp"
#include "textmatch/gradcheck.hpp"
#include "textmatch/knowledge.hpp"
#include "textmatch/losses.hpp"
#include "textmatch/model.hpp"
#include "textmatch/text.hpp"
#include "textmatch/textrank.hpp"
#include "textmatch/trainer.hpp"

namespace textmatch {

namespace {

/// A CLI option that, when given, is funneled through set_config_value so
/// flags and config-file keys share one parser and one error style.
struct ConfigOverride {
  CLI::Option* option = nullptr;
  std::string key;
  std::shared_ptr<std::string> value;
};

ConfigOverride add_override(CLI::App* cmd, const std::string& flag, std::string key,
                            const std::string& description) {
  auto value = std::make_shared<std::string>();
  ConfigOverride o;
  o.option = cmd->add_option(flag, *value, description);
  o.key = std::move(key);
  o.value = std::move(value);
  return o;
}

void apply_overrides(RunConfig& config, const std::vector<ConfigOverride>& overrides) {
  for (const ConfigOverride& o : overrides) {
    if (o.option->count() > 0) {
      set_config_value(config, o.key, *o.value, "command line");
    }
  }
}

std::unordered_set<std::string> load_optional_stopwords(const std::string& path,
                                                        std::ostream& warn) {
  if (path.empty()) return {};
  return load_stopwords(path, warn);
}

LexicalStore load_optional_store(const std::string& path) {
  if (path.empty()) return {};
  return LexicalStore::load(path);
}

std::vector<SentencePair> load_nonempty_dataset(const std::string& path, std::ostream& warn) {
  std::vector<SentencePair> pairs = load_dataset(path, warn);
  if (pairs.empty()) throw DataError("dataset has no usable pairs: " + path);
  return pairs;
}

int run_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  auto stopwords = load_optional_stopwords(config.stopwords_path, err);
  LexicalStore store = load_optional_store(config.knowledge_path);
  std::vector<SentencePair> train_pairs = load_nonempty_dataset(config.train_path, err);
  std::vector<SentencePair> valid_pairs = load_nonempty_dataset(config.valid_path, err);

  const ComplementProvider provider = effective_provider(config);
  provide_complements(train_pairs, provider, store, config.seed + 1);
  provide_complements(valid_pairs, provider, store, config.seed + 2);

  Trainer trainer(config, std::move(train_pairs), std::move(valid_pairs), std::move(stopwords),
                  std::move(store));

  std::ofstream log_file;
  std::ostream* batch_log = &out;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    const auto log_path = std::filesystem::path(config.out_dir) / "train_log.tsv";
    log_file.open(log_path, std::ios::trunc);
    if (!log_file) throw DataError("cannot write training log: " + log_path.string());
    batch_log = &log_file;
  }

  const TrainResult result = trainer.run(*batch_log, out);
  char line[64];
  std::snprintf(line, sizeof(line), "best epoch %zu acc %.4f\n", result.best_epoch,
                result.best_acc);
  out << line;
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path,
             std::string vocab_path, std::string sidecar_path,
             const std::vector<ConfigOverride>& overrides, std::ostream& out,
             std::ostream& err) {
  const std::filesystem::path checkpoint(checkpoint_path);
  if (sidecar_path.empty()) sidecar_path = checkpoint_path + ".json";
  if (vocab_path.empty()) vocab_path = (checkpoint.parent_path() / "vocab.txt").string();

  std::ifstream sidecar(sidecar_path);
  if (!sidecar) throw DataError("cannot open checkpoint sidecar: " + sidecar_path);
  std::stringstream sidecar_text;
  sidecar_text << sidecar.rdbuf();
  RunConfig config = config_from_json(sidecar_text.str(), sidecar_path);
  apply_overrides(config, overrides);
  validate_config(config);

  const Vocabulary vocab = Vocabulary::load(vocab_path);
  Model model(model_config(config, vocab.size()), config.seed);
  load_checkpoint_into(checkpoint_path, model.named_params());

  auto stopwords = load_optional_stopwords(config.stopwords_path, err);
  const LexicalStore store = load_optional_store(config.knowledge_path);
  std::vector<SentencePair> pairs = load_nonempty_dataset(data_path, err);
  provide_complements(pairs, effective_provider(config), store, config.seed + 3);

  const Metrics metrics =
      evaluate_model(model, pairs, vocab, stopwords, store, forward_options(config));
  out << metrics_json(metrics, pairs.size()) << "\n";
  return 0;
}

int run_keywords(const std::string& s1, const std::string& s2, const std::string& knowledge_path,
                 const std::string& stopwords_path, std::size_t k,
                 const TextRankOptions& options, std::ostream& out, std::ostream& err) {
  const auto stopwords = load_optional_stopwords(stopwords_path, err);
  const LexicalStore store = load_optional_store(knowledge_path);

  const auto describe = [&](const char* label, const KeywordResult& result) {
    char line[64];
    std::snprintf(line, sizeof(line), " (score %.6f)", result.score);
    out << label << ": " << result.keyword << line
        << (result.used_fallback ? " [stopword fallback]" : "") << "\n";
  };
  const KeywordResult r1 = extract_keyword(tokenize(s1), stopwords, options);
  const KeywordResult r2 = extract_keyword(tokenize(s2), stopwords, options);
  describe("k1", r1);
  describe("k2", r2);

  const KnowledgeGraph graph = build_graph(r1.keyword, r2.keyword, store, k);
  out << "nodes:";
  for (const std::string& word : graph.node_words) out << " " << word;
  out << "\nadjacency:\n";
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (std::size_t j = 0; j < graph.size(); ++j) {
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%s%.4f", j == 0 ? "" : " ", graph.at(i, j));
      out << cell;
    }
    out << "\n";
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, std::ostream& out) {
  const std::vector<GradCheckReport> reports = run_gradient_checks(seed);
  for (const GradCheckReport& report : reports) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-14s %10.3e  %s\n", report.name.c_str(),
                  report.max_rel_err, report.passed ? "ok" : "FAIL");
    out << line;
  }
  if (!all_passed(reports)) {
    out << "gradient checks FAILED\n";
    return 1;
  }
  out << "all gradient checks passed\n";
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sentence-pair matcher with knowledge graphs and contrastive training"};
  app.name("textmatch");
  app.require_subcommand(1);

  // train
  CLI::App* train = app.add_subcommand("train", "train a model and write run artifacts");
  std::string config_path;
  train->add_option("--config", config_path, "key = value configuration file");
  std::vector<ConfigOverride> train_overrides{
      add_override(train, "--train", "train_path", "training pairs TSV"),
      add_override(train, "--valid", "valid_path", "validation pairs TSV"),
      add_override(train, "--knowledge", "knowledge_path", "related-word TSV"),
      add_override(train, "--stopwords", "stopwords_path", "stopword list"),
      add_override(train, "--out", "out_dir", "artifact directory"),
      add_override(train, "--seed", "seed", "run seed"),
      add_override(train, "--epochs", "epochs", "maximum epochs"),
      add_override(train, "--batch", "batch_size", "batch size"),
      add_override(train, "--provider", "provider", "complement provider"),
      add_override(train, "--d", "d", "sentence vector width"),
  };
  CLI::Option* flag_no_graph =
      train->add_flag("--no-graph", "ablation: replace the graph vector with zeros");
  CLI::Option* flag_no_contrastive =
      train->add_flag("--no-contrastive", "ablation: drop both contrastive terms");
  CLI::Option* flag_self_complement =
      train->add_flag("--self-complement", "ablation: use each sentence as its own complement");
  CLI::Option* flag_cache = train->add_flag("--cache-graphs", "reuse per-pair graph structure");

  // eval
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string checkpoint_path, data_path, vocab_path, sidecar_path;
  eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval->add_option("--data", data_path, "pairs TSV to score")->required();
  eval->add_option("--vocab", vocab_path, "vocabulary file (default: next to checkpoint)");
  eval->add_option("--config", sidecar_path, "config sidecar (default: checkpoint + .json)");
  std::vector<ConfigOverride> eval_overrides{
      add_override(eval, "--knowledge", "knowledge_path", "related-word TSV"),
      add_override(eval, "--stopwords", "stopwords_path", "stopword list"),
      add_override(eval, "--threshold", "threshold", "positive-class threshold"),
  };

  // keywords
  CLI::App* keywords = app.add_subcommand("keywords", "show keywords and the pair's graph");
  std::string s1, s2, kw_knowledge, kw_stopwords;
  std::size_t kw_k = 5;
  TextRankOptions kw_options;
  keywords->add_option("--s1", s1, "first sentence")->required();
  keywords->add_option("--s2", s2, "second sentence")->required();
  keywords->add_option("--knowledge", kw_knowledge, "related-word TSV");
  keywords->add_option("--stopwords", kw_stopwords, "stopword list");
  keywords->add_option("--k", kw_k, "related words per keyword");
  keywords->add_option("--window", kw_options.window, "co-occurrence window");
  keywords->add_option("--damping", kw_options.damping, "random-walk damping");

  // gradcheck
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  std::uint64_t gradcheck_seed = 2026;
  gradcheck->add_option("--seed", gradcheck_seed, "sampling seed");

  try {
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(std::move(args));

    if (train->parsed()) {
      RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
      apply_overrides(config, train_overrides);
      if (flag_no_graph->count() > 0) config.no_graph = true;
      if (flag_no_contrastive->count() > 0) config.no_contrastive = true;
      if (flag_self_complement->count() > 0) config.self_complement = true;
      if (flag_cache->count() > 0) config.cache_graphs = true;
      validate_config(config);
      if (config.train_path.empty() || config.valid_path.empty()) {
        err << "train needs --train and --valid (or train_path/valid_path in the config)\n";
        return 1;
      }
      return run_train(config, out, err);
    }
    if (eval->parsed()) {
      return run_eval(checkpoint_path, data_path, vocab_path, sidecar_path, eval_overrides, out,
                      err);
    }
    if (keywords->parsed()) {
      return run_keywords(s1, s2, kw_knowledge, kw_stopwords, kw_k, kw_options, out, err);
    }
    if (gradcheck->parsed()) {
      return run_gradcheck(gradcheck_seed, out);
    }
    err << "no subcommand selected\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    // Map CLI11's exit-code zoo onto the documented 0 (help) / 1 (usage).
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace textmatch
