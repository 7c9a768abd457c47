#include "textmatch/knowledge.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "textmatch/errors.hpp"
#include "textmatch/text.hpp"

namespace textmatch {

namespace {

void validate_entry(const std::string& word, const std::string& related, double score,
                    std::string* problem) {
  if (word.empty() || related.empty()) {
    *problem = "empty word field";
  } else if (word == related) {
    *problem = "word related to itself";
  } else if (!(score > 0.0) || score > 1.0) {
    *problem = "score must lie in (0, 1]";
  }
}

void sort_related(std::vector<RelatedWord>& list) {
  std::sort(list.begin(), list.end(), [](const RelatedWord& a, const RelatedWord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.word < b.word;
  });
}

}  // namespace

LexicalStore LexicalStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open knowledge store: " + path);
  LexicalStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view stripped = trim_whitespace(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    const auto fail = [&](const std::string& why) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
    };

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(std::string_view(line).substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      fail("expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    std::string word(trim_whitespace(fields[0]));
    std::string related(trim_whitespace(fields[1]));
    const std::string_view score_text = trim_whitespace(fields[2]);

    double score = 0.0;
    const auto [end, ec] =
        std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (ec != std::errc{} || end != score_text.data() + score_text.size()) {
      fail("score is not a number: '" + std::string(score_text) + "'");
    }
    std::string problem;
    validate_entry(word, related, score, &problem);
    if (!problem.empty()) fail(problem);

    auto& list = store.entries_[word];
    for (const RelatedWord& existing : list) {
      if (existing.word == related) fail("duplicate entry for '" + word + "' -> '" + related + "'");
    }
    list.push_back(RelatedWord{std::move(related), score});
  }
  for (auto& [word, list] : store.entries_) sort_related(list);
  return store;
}

void LexicalStore::add(std::string word, std::string related, double score) {
  std::string problem;
  validate_entry(word, related, score, &problem);
  if (!problem.empty()) throw std::invalid_argument("lexical store: " + problem);
  auto& list = entries_[word];
  for (const RelatedWord& existing : list) {
    if (existing.word == related) {
      throw std::invalid_argument("lexical store: duplicate entry for '" + word + "'");
    }
  }
  list.push_back(RelatedWord{std::move(related), score});
  sort_related(list);
}

const std::vector<RelatedWord>* LexicalStore::find(std::string_view word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<RelatedWord> LexicalStore::retrieve_topk(std::string_view keyword,
                                                     std::size_t k) const {
  if (k == 0) throw std::invalid_argument("retrieve_topk: k must be at least 1");
  const std::vector<RelatedWord>* list = find(keyword);
  if (list == nullptr) return {};
  const std::size_t take = std::min(k, list->size());
  return {list->begin(), list->begin() + static_cast<std::ptrdiff_t>(take)};
}

KnowledgeGraph build_graph(const std::string& k1, const std::string& k2,
                           const LexicalStore& store, std::size_t k) {
  const std::vector<RelatedWord> r1 = store.retrieve_topk(k1, k);
  const std::vector<RelatedWord> r2 = store.retrieve_topk(k2, k);

  KnowledgeGraph graph;
  graph.node_words = {k1, k2};
  std::map<std::string, std::size_t, std::less<>> knowledge_index;

  struct Edge {
    std::size_t from, to;
    double score;
  };
  std::vector<Edge> edges;

  auto collect = [&](std::size_t keyword_node, const std::string& other_keyword,
                     std::size_t other_node, const std::vector<RelatedWord>& retrieved) {
    for (const RelatedWord& rel : retrieved) {
      std::size_t target;
      if (rel.word == other_keyword) {
        target = other_node;
      } else {
        auto it = knowledge_index.find(rel.word);
        if (it != knowledge_index.end()) {
          target = it->second;
        } else {
          target = graph.node_words.size();
          graph.node_words.push_back(rel.word);
          knowledge_index.emplace(rel.word, target);
        }
      }
      edges.push_back(Edge{keyword_node, target, rel.score});
    }
  };
  collect(0, k2, 1, r1);
  collect(1, k1, 0, r2);

  const std::size_t n = graph.size();
  graph.adjacency.assign(n * n, 0.0);
  for (const Edge& e : edges) {
    // Mutual keyword retrieval lands on one cell twice; keep the larger.
    const double w = std::max(graph.adjacency[e.from * n + e.to], e.score);
    graph.adjacency[e.from * n + e.to] = w;
    graph.adjacency[e.to * n + e.from] = w;
  }
  return graph;
}

}  // namespace textmatch
