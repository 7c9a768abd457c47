#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace textmatch {

struct RelatedWord {
  std::string word;
  double score;  // relevance in (0, 1]
};

/// Word-to-related-words table loaded from a tab-separated file. Related
/// lists are kept sorted by score (descending), ties lexicographic.
class LexicalStore {
 public:
  /// Lines `word<TAB>related<TAB>score`; blank lines and lines starting
  /// with '#' are skipped. Validation failures name the offending line.
  static LexicalStore load(const std::string& path);

  void add(std::string word, std::string related, double score);

  const std::vector<RelatedWord>* find(std::string_view word) const;
  std::vector<RelatedWord> retrieve_topk(std::string_view keyword, std::size_t k) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::vector<RelatedWord>, std::less<>> entries_;
};

/// Per-pair graph over both keywords and their retrieved knowledge words.
/// Nodes 0 and 1 are the two keywords (always distinct nodes, even for
/// equal keyword strings); knowledge words follow in retrieval order,
/// deduplicated. Adjacency is dense, symmetric, zero-diagonal, with
/// relevance scores as weights.
struct KnowledgeGraph {
  std::vector<std::string> node_words;
  std::vector<double> adjacency;  // row-major size() x size()

  std::size_t size() const { return node_words.size(); }
  double at(std::size_t i, std::size_t j) const { return adjacency[i * size() + j]; }
};

/// Keyword-to-knowledge-word edges carry that keyword's retrieval score. A
/// word retrieved by both keywords becomes one node with two edges. The
/// keywords themselves connect only when one retrieves the other; if both
/// do, the larger score wins.
KnowledgeGraph build_graph(const std::string& k1, const std::string& k2,
                           const LexicalStore& store, std::size_t k);

}  // namespace textmatch
