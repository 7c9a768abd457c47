#include "textmatch/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "textmatch/errors.hpp"

namespace textmatch {

namespace {

struct DecodedChar {
  char32_t cp;
  std::size_t len;
};

bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

DecodedChar decode_utf8(std::string_view text, std::size_t i) {
  const auto fail = [&]() -> DecodedChar {
    throw DataError("invalid UTF-8 at byte offset " + std::to_string(i));
  };
  const unsigned char b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) return {b0, 1};

  auto byte_at = [&](std::size_t off) -> unsigned char {
    if (i + off >= text.size()) fail();
    return static_cast<unsigned char>(text[i + off]);
  };

  if (b0 >= 0xC2 && b0 <= 0xDF) {
    const unsigned char b1 = byte_at(1);
    if (!is_continuation(b1)) fail();
    return {static_cast<char32_t>(((b0 & 0x1Fu) << 6) | (b1 & 0x3Fu)), 2};
  }
  if (b0 >= 0xE0 && b0 <= 0xEF) {
    const unsigned char b1 = byte_at(1), b2 = byte_at(2);
    const bool b1_ok = b0 == 0xE0   ? (b1 >= 0xA0 && b1 <= 0xBF)
                       : b0 == 0xED ? (b1 >= 0x80 && b1 <= 0x9F)
                                    : is_continuation(b1);
    if (!b1_ok || !is_continuation(b2)) fail();
    return {static_cast<char32_t>(((b0 & 0x0Fu) << 12) | ((b1 & 0x3Fu) << 6) | (b2 & 0x3Fu)), 3};
  }
  if (b0 >= 0xF0 && b0 <= 0xF4) {
    const unsigned char b1 = byte_at(1), b2 = byte_at(2), b3 = byte_at(3);
    const bool b1_ok = b0 == 0xF0   ? (b1 >= 0x90 && b1 <= 0xBF)
                       : b0 == 0xF4 ? (b1 >= 0x80 && b1 <= 0x8F)
                                    : is_continuation(b1);
    if (!b1_ok || !is_continuation(b2) || !is_continuation(b3)) fail();
    return {static_cast<char32_t>(((b0 & 0x07u) << 18) | ((b1 & 0x3Fu) << 12) |
                                  ((b2 & 0x3Fu) << 6) | (b3 & 0x3Fu)),
            4};
  }
  return fail();
}

bool is_separator(char32_t cp) {
  return cp == U' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x00A0 || cp == 0x3000;
}

bool is_ascii_alnum(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string run;
  auto flush = [&]() {
    if (!run.empty()) {
      tokens.push_back(std::move(run));
      run.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const DecodedChar c = decode_utf8(text, i);
    if (is_separator(c.cp)) {
      flush();
    } else if (is_ascii_alnum(c.cp)) {
      run.push_back(static_cast<char>(std::tolower(static_cast<int>(c.cp))));
    } else {
      flush();
      tokens.emplace_back(text.substr(i, c.len));
    }
    i += c.len;
  }
  flush();
  return tokens;
}

std::string_view trim_whitespace(std::string_view text) {
  auto leading_ws = [](std::string_view s) -> std::size_t {
    if (s.empty()) return 0;
    const unsigned char b = static_cast<unsigned char>(s[0]);
    if (b == ' ' || (b >= 0x09 && b <= 0x0D)) return 1;
    if (s.size() >= 2 && s.substr(0, 2) == "\xC2\xA0") return 2;
    if (s.size() >= 3 && s.substr(0, 3) == "\xE3\x80\x80") return 3;
    return 0;
  };
  auto trailing_ws = [](std::string_view s) -> std::size_t {
    if (s.empty()) return 0;
    const unsigned char b = static_cast<unsigned char>(s.back());
    if (b == ' ' || (b >= 0x09 && b <= 0x0D)) return 1;
    // UTF-8 lead bytes are never continuation bytes, so matching these
    // suffixes cannot split a longer character.
    if (s.size() >= 2 && s.substr(s.size() - 2) == "\xC2\xA0") return 2;
    if (s.size() >= 3 && s.substr(s.size() - 3) == "\xE3\x80\x80") return 3;
    return 0;
  };
  while (std::size_t n = leading_ws(text)) text.remove_prefix(n);
  while (std::size_t n = trailing_ws(text)) text.remove_suffix(n);
  return text;
}

Vocabulary::Vocabulary() {
  append("[UNK]");
  append("[PAD]");
  append("[CLS]");
}

void Vocabulary::append(std::string token) {
  token_to_id_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents,
                             std::size_t min_count) {
  if (min_count == 0) throw std::invalid_argument("vocabulary min_count must be at least 1");
  struct Stat {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::map<std::string, Stat, std::less<>> stats;
  std::size_t position = 0;
  Vocabulary vocab;
  for (const auto& doc : documents) {
    for (const auto& token : doc) {
      if (vocab.token_to_id_.count(token)) continue;  // reserved markers stay reserved
      auto [it, inserted] = stats.try_emplace(token);
      if (inserted) it->second.first_seen = position;
      ++it->second.count;
      ++position;
    }
  }
  std::vector<const decltype(stats)::value_type*> order;
  order.reserve(stats.size());
  for (const auto& kv : stats) {
    if (kv.second.count >= min_count) order.push_back(&kv);
  }
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->second.count != b->second.count) return a->second.count > b->second.count;
    return a->second.first_seen < b->second.first_seen;
  });
  for (const auto* kv : order) vocab.append(kv->first);
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.find(token) != token_to_id_.end();
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write vocabulary: " + path);
  for (const std::string& token : tokens_) out << token << '\n';
  if (!out) throw DataError("failed writing vocabulary: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= 3) {
      if (line != vocab.tokens_[line_no - 1]) {
        throw DataError(path + ":" + std::to_string(line_no) + ": expected reserved token '" +
                        vocab.tokens_[line_no - 1] + "', found '" + line + "'");
      }
      continue;
    }
    if (line.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty vocabulary token");
    }
    if (vocab.token_to_id_.count(line)) {
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate token '" + line + "'");
    }
    vocab.append(line);
  }
  if (line_no < 3) throw DataError(path + ": missing reserved vocabulary header");
  return vocab;
}

std::vector<int> encode_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens,
                            std::size_t max_tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 1);
  ids.push_back(Vocabulary::kClsId);
  for (const std::string& token : tokens) ids.push_back(vocab.id(token));
  if (max_tokens > 0 && ids.size() > max_tokens) ids.resize(max_tokens);
  return ids;
}

std::unordered_set<std::string> load_stopwords(const std::string& path, std::ostream& warn) {
  std::unordered_set<std::string> stopwords;
  std::ifstream in(path);
  if (!in) {
    warn << "warning: stopword file not found: " << path << "; using an empty set\n";
    return stopwords;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view trimmed = trim_whitespace(line);
    if (!trimmed.empty()) stopwords.emplace(trimmed);
  }
  return stopwords;
}

}  // namespace textmatch
