#include "textmatch/data.hpp"

#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "textmatch/errors.hpp"
#include "textmatch/text.hpp"

namespace textmatch {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string checked_sentence(std::string_view raw, const std::string& context,
                             const char* what) {
  const std::string_view trimmed = trim_whitespace(raw);
  if (trimmed.empty()) {
    throw DataError(context + ": empty " + what);
  }
  try {
    tokenize(trimmed);  // surfaces invalid UTF-8 with a per-line location
  } catch (const DataError& e) {
    throw DataError(context + ": " + e.what());
  }
  return std::string(trimmed);
}

}  // namespace

std::vector<SentencePair> load_dataset(const std::string& path, std::ostream& warn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);

  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_whitespace(line).empty()) continue;

    const std::string context = path + ":" + std::to_string(line_no);
    const auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 5) {
      throw DataError(context + ": expected 3 or 5 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }

    SentencePair pair;
    pair.s1 = checked_sentence(fields[0], context, "first sentence");
    pair.s2 = checked_sentence(fields[1], context, "second sentence");

    const std::string_view label = trim_whitespace(fields[2]);
    if (label == "0") {
      pair.label = 0;
    } else if (label == "1") {
      pair.label = 1;
    } else {
      throw DataError(context + ": label must be 0 or 1, got '" + std::string(label) + "'");
    }

    if (fields.size() == 5) {
      pair.s1_comp = checked_sentence(fields[3], context, "first complement");
      pair.s2_comp = checked_sentence(fields[4], context, "second complement");
    }
    pairs.push_back(std::move(pair));
  }

  if (pairs.empty()) {
    warn << "warning: dataset " << path << " contains no pairs\n";
  }
  return pairs;
}

ComplementProvider parse_provider(std::string_view name) {
  if (name == "column") return ComplementProvider::kColumn;
  if (name == "augment") return ComplementProvider::kAugment;
  if (name == "identity") return ComplementProvider::kIdentity;
  throw DataError("unknown complement provider '" + std::string(name) + "'");
}

ComplementProvider effective_provider(const RunConfig& config) {
  if (config.self_complement) return ComplementProvider::kIdentity;
  return parse_provider(config.provider);
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

/// Up to two leftmost tokens with a store entry are swapped for their
/// top-scoring related word; then one token is dropped (seeded) when at
/// least two remain, so the result stays non-empty.
std::string augment_sentence(const std::string& sentence, const LexicalStore& store,
                             std::mt19937_64& rng) {
  std::vector<std::string> tokens = tokenize(sentence);
  std::size_t substituted = 0;
  for (std::string& token : tokens) {
    if (substituted == 2) break;
    const auto related = store.retrieve_topk(token, 1);
    if (!related.empty()) {
      token = related.front().word;
      ++substituted;
    }
  }
  if (tokens.size() >= 2) {
    const std::size_t drop = static_cast<std::size_t>(rng() % tokens.size());
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return join_tokens(tokens);
}

}  // namespace

void provide_complements(std::vector<SentencePair>& pairs, ComplementProvider provider,
                         const LexicalStore& store, std::uint64_t seed) {
  switch (provider) {
    case ComplementProvider::kColumn:
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].s1_comp.empty() || pairs[i].s2_comp.empty()) {
          throw DataError("column complement provider needs a five-column dataset, but pair " +
                          std::to_string(i + 1) + " has no complement columns");
        }
      }
      return;
    case ComplementProvider::kIdentity:
      for (SentencePair& pair : pairs) {
        pair.s1_comp = pair.s1;
        pair.s2_comp = pair.s2;
      }
      return;
    case ComplementProvider::kAugment: {
      std::mt19937_64 rng(seed);
      for (SentencePair& pair : pairs) {
        pair.s1_comp = augment_sentence(pair.s1, store, rng);
        pair.s2_comp = augment_sentence(pair.s2, store, rng);
      }
      return;
    }
  }
  throw std::logic_error("unhandled complement provider");
}

}  // namespace textmatch
