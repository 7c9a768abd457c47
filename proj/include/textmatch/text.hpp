#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace textmatch {

/// Splits UTF-8 text into tokens: runs of ASCII letters/digits become one
/// lowercased token; every other non-whitespace character is a token of its
/// own (so CJK text splits per character). Whitespace (ASCII, U+00A0,
/// U+3000) only separates. Invalid UTF-8 raises DataError.
std::vector<std::string> tokenize(std::string_view text);

/// Strips the tokenizer's whitespace set from both ends.
std::string_view trim_whitespace(std::string_view text);

/// Token-to-id table with three reserved entries. Ids are assigned by
/// descending corpus frequency, ties by first occurrence.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr int kPadId = 1;
  static constexpr int kClsId = 2;

  Vocabulary();

  static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                          std::size_t min_count = 1);

  int id(std::string_view token) const;  // kUnkId when unknown
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  /// One token per line; the three reserved markers come first.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> token_to_id_;
};

/// Ids for a tokenized sentence: reserved classifier id first, then token
/// ids (unknown tokens map to kUnkId). When max_tokens > 0 the result is
/// truncated to that many ids.
std::vector<int> encode_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens,
                            std::size_t max_tokens = 0);

/// One stopword per line. A missing file yields an empty set and a warning
/// on `warn`; it is not an error.
std::unordered_set<std::string> load_stopwords(const std::string& path, std::ostream& warn);

}  // namespace textmatch
