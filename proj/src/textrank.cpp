#include "textmatch/textrank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace textmatch {

std::size_t CooccurrenceGraph::ensure_node(std::string_view word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  const std::size_t node = words_.size();
  index_.emplace(std::string(word), node);
  words_.emplace_back(word);
  adjacency_.emplace_back();
  return node;
}

void CooccurrenceGraph::add_edge(std::size_t u, std::size_t v, double weight) {
  if (u >= words_.size() || v >= words_.size()) {
    throw std::invalid_argument("add_edge: node index out of range");
  }
  if (u == v) throw std::invalid_argument("add_edge: self-edges are not allowed");
  if (weight <= 0.0) throw std::invalid_argument("add_edge: weight must be positive");
  adjacency_[u][v] += weight;
  adjacency_[v][u] += weight;
}

double CooccurrenceGraph::weight(std::size_t u, std::size_t v) const {
  const auto& nbrs = adjacency_.at(u);
  auto it = nbrs.find(v);
  return it == nbrs.end() ? 0.0 : it->second;
}

CooccurrenceGraph build_cooccurrence(const std::vector<std::string>& tokens, std::size_t window) {
  if (window < 2) throw std::invalid_argument("co-occurrence window must be at least 2");
  CooccurrenceGraph graph;
  for (const std::string& token : tokens) graph.ensure_node(token);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i + 1; j < tokens.size() && j - i < window; ++j) {
      if (tokens[i] == tokens[j]) continue;
      graph.add_edge(graph.ensure_node(tokens[i]), graph.ensure_node(tokens[j]), 1.0);
    }
  }
  return graph;
}

TextRankResult textrank_scores(const CooccurrenceGraph& graph, const TextRankOptions& options) {
  if (options.damping <= 0.0 || options.damping >= 1.0) {
    throw std::invalid_argument("textrank damping must lie strictly in (0, 1)");
  }
  if (options.tol <= 0.0) throw std::invalid_argument("textrank tol must be positive");

  const std::size_t n = graph.node_count();
  TextRankResult result;
  result.scores.assign(n, 1.0);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  std::vector<double> strength(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, w] : graph.neighbors(u)) strength[u] += w;
  }

  const double d = options.damping;
  std::vector<double> next(n, 0.0);
  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0.0;
      for (const auto& [u, w] : graph.neighbors(v)) {
        acc += w / strength[u] * result.scores[u];
      }
      next[v] = (1.0 - d) + d * acc;
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - result.scores[v]);
    result.scores.swap(next);
    result.iterations = iter;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

KeywordResult extract_keyword(const std::vector<std::string>& tokens,
                              const std::unordered_set<std::string>& stopwords,
                              const TextRankOptions& options) {
  if (tokens.empty()) {
    throw std::invalid_argument("extract_keyword: sentence has no tokens");
  }
  std::vector<std::string> candidates;
  candidates.reserve(tokens.size());
  for (const std::string& token : tokens) {
    if (!stopwords.count(token)) candidates.push_back(token);
  }
  KeywordResult result;
  if (candidates.empty()) {
    candidates = tokens;
    result.used_fallback = true;
  }

  const CooccurrenceGraph graph = build_cooccurrence(candidates, options.window);
  const TextRankResult ranked = textrank_scores(graph, options);

  std::map<std::string_view, std::size_t> first_seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) first_seen.try_emplace(tokens[i], i);

  std::vector<std::size_t> order(graph.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ranked.scores[a] != ranked.scores[b]) return ranked.scores[a] > ranked.scores[b];
    return first_seen.at(graph.word(a)) < first_seen.at(graph.word(b));
  });

  result.ranking.reserve(order.size());
  for (std::size_t node : order) result.ranking.emplace_back(graph.word(node), ranked.scores[node]);
  result.keyword = result.ranking.front().first;
  result.score = result.ranking.front().second;
  return result;
}

}  // namespace textmatch
