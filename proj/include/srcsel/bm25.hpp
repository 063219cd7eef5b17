#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "srcsel/corpus.hpp"

namespace srcsel {

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// In-memory inverted index over a corpus. Term ids are the corpus vocabulary
// ids; postings are sorted by document.
struct InvertedIndex {
  std::vector<std::vector<Posting>> postings;
  std::vector<std::uint32_t> doc_lengths;
  double avg_doc_length = 0.0;
  std::size_t doc_count = 0;
};

inline InvertedIndex index_source(const Corpus& source) {
  if (source.documents.empty()) throw std::invalid_argument("index_source: empty corpus");
  InvertedIndex idx;
  idx.postings.resize(source.vocabulary.size());
  idx.doc_count = source.documents.size();
  idx.doc_lengths.reserve(idx.doc_count);
  std::vector<std::uint32_t> tf(source.vocabulary.size(), 0);
  std::vector<WordId> seen;
  double total = 0.0;
  for (const auto& d : source.documents) {
    seen.clear();
    for (WordId t : d.tokens) {
      if (tf[t]++ == 0) seen.push_back(t);
    }
    for (WordId t : seen) {
      idx.postings[t].push_back({d.doc_id, tf[t]});
      tf[t] = 0;
    }
    idx.doc_lengths.push_back(static_cast<std::uint32_t>(d.tokens.size()));
    total += static_cast<double>(d.tokens.size());
  }
  idx.avg_doc_length = total / static_cast<double>(idx.doc_count);
  return idx;
}

// Non-negative idf variant: ln(1 + (N - df + 0.5) / (df + 0.5)).
inline double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

struct ScoredDoc {
  std::uint32_t doc = 0;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

// BM25 ranking of indexed documents for a bag of query term ids (index
// vocabulary). Each distinct query term contributes once. Only documents
// sharing at least one term are returned: descending score, ties by doc id.
inline std::vector<ScoredDoc> retrieve(const InvertedIndex& idx, std::span<const WordId> query,
                                       std::size_t top_r, const Bm25Params& params = {}) {
  if (top_r == 0) throw std::invalid_argument("retrieve: top_r must be positive");
  std::vector<WordId> terms(query.begin(), query.end());
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::vector<double> acc(idx.doc_count, 0.0);
  std::vector<std::uint32_t> touched;
  for (WordId t : terms) {
    if (t >= idx.postings.size() || idx.postings[t].empty()) continue;
    const auto& plist = idx.postings[t];
    const double idf = bm25_idf(idx.doc_count, plist.size());
    for (const auto& p : plist) {
      const double tf = p.tf;
      const double len_norm =
          1.0 - params.b + params.b * idx.doc_lengths[p.doc] / idx.avg_doc_length;
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      acc[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
    }
  }
  std::vector<ScoredDoc> out;
  out.reserve(touched.size());
  for (auto d : touched) out.push_back({d, acc[d]});
  const auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
  };
  const std::size_t take = std::min(top_r, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(take), out.end(), better);
  out.resize(take);
  return out;
}

// Id translation table between two vocabularies; misses map to nullopt.
inline std::vector<std::optional<WordId>> vocabulary_map(const Vocabulary& from,
                                                         const Vocabulary& to) {
  std::vector<std::optional<WordId>> map(from.size());
  for (WordId i = 0; i < from.size(); ++i) map[i] = to.find(from.word(i));
  return map;
}

inline std::vector<WordId> translate_tokens(std::span<const WordId> tokens,
                                            const std::vector<std::optional<WordId>>& map) {
  std::vector<WordId> out;
  out.reserve(tokens.size());
  for (WordId t : tokens) {
    if (map[t]) out.push_back(*map[t]);
  }
  return out;
}

}  // namespace srcsel
