#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "textmatch/config.hpp"
#include "textmatch/knowledge.hpp"

namespace textmatch {

struct SentencePair {
  std::string s1;
  std::string s2;
  std::string s1_comp;  // empty until a provider runs (unless loaded from a 5-column row)
  std::string s2_comp;
  int label = 0;  // 0 or 1
};

/// Tab-separated rows `s1<TAB>s2<TAB>label` with optional trailing
/// `s1_comp<TAB>s2_comp`. Sentences are trimmed and must be non-empty; the
/// label must be literally "0" or "1". Malformed rows raise DataError with
/// `path:line`. A file with no data rows yields an empty list plus a
/// warning on `warn`.
std::vector<SentencePair> load_dataset(const std::string& path, std::ostream& warn);

enum class ComplementProvider {
  kColumn,    // complements come from the dataset's 4th/5th columns
  kAugment,   // deterministic top-1 synonym substitution plus one token drop
  kIdentity,  // s' = s (contrastive-dropout style ablation)
};

ComplementProvider parse_provider(std::string_view name);

/// Provider selected by the config; self_complement always means identity.
ComplementProvider effective_provider(const RunConfig& config);

/// Fills s1_comp/s2_comp for every pair. The column provider requires the
/// complements to be present already (five-column file) and raises
/// DataError otherwise. The augmenter replaces up to two tokens with their
/// best related word from `store`, then drops one seeded random token when
/// at least two remain; its output always differs from the original when
/// any substitution candidate exists, and is never empty.
void provide_complements(std::vector<SentencePair>& pairs, ComplementProvider provider,
                         const LexicalStore& store, std::uint64_t seed);

}  // namespace textmatch
