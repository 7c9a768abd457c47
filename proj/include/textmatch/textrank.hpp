#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace textmatch {

struct TextRankOptions {
  std::size_t window = 3;
  double damping = 0.85;
  double tol = 1e-6;
  std::size_t max_iter = 100;
};

/// Undirected word graph with accumulated positive edge weights. Node order
/// is insertion order; neighbor maps are ordered by node index so iteration
/// is deterministic.
class CooccurrenceGraph {
 public:
  std::size_t ensure_node(std::string_view word);
  void add_edge(std::size_t u, std::size_t v, double weight = 1.0);

  std::size_t node_count() const { return words_.size(); }
  const std::string& word(std::size_t node) const { return words_.at(node); }
  const std::map<std::size_t, double>& neighbors(std::size_t node) const {
    return adjacency_.at(node);
  }
  double weight(std::size_t u, std::size_t v) const;  // 0 when no edge

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::map<std::size_t, double>> adjacency_;
};

/// One node per distinct token; tokens at positions i < j with j - i <
/// window co-occur, each such pair adding 1 to the edge weight. Same-word
/// pairs never form an edge.
CooccurrenceGraph build_cooccurrence(const std::vector<std::string>& tokens, std::size_t window);

struct TextRankResult {
  std::vector<double> scores;  // indexed by graph node
  std::size_t iterations = 0;
  bool converged = false;
};

/// Damped random-walk scores, iterated from all-ones until the L1 change
/// drops below tol (or max_iter). Isolated nodes settle at 1 - damping.
TextRankResult textrank_scores(const CooccurrenceGraph& graph, const TextRankOptions& options);

struct KeywordResult {
  std::string keyword;
  double score = 0.0;
  std::vector<std::pair<std::string, double>> ranking;  // best first
  bool used_fallback = false;  // every token was a stopword
};

/// Top-ranked token of a sentence. Stopword tokens are excluded unless that
/// would leave nothing, in which case the unfiltered tokens are ranked and
/// the result is flagged. Ties go to the token appearing earliest.
KeywordResult extract_keyword(const std::vector<std::string>& tokens,
                              const std::unordered_set<std::string>& stopwords,
                              const TextRankOptions& options);

}  // namespace textmatch
