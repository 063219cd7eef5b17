#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/matrix.hpp"
#include "srcsel/model.hpp"

namespace srcsel {

struct Neighbor {
  WordId id = 0;
  double cosine = 0.0;

  bool operator==(const Neighbor&) const = default;
};

namespace detail {

template <typename Real>
std::vector<double> row_norms(const Matrix<Real>& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = norm(m.row(i));
  return out;
}

template <typename Real>
std::vector<Neighbor> knn_with_norms(const Matrix<Real>& emb, const std::vector<double>& norms,
                                     WordId query, std::size_t k,
                                     std::span<const WordId> candidates) {
  if (norms[query] == 0.0) {
    throw std::domain_error("knn: zero-norm query vector for id " + std::to_string(query));
  }
  std::vector<Neighbor> all;
  all.reserve(candidates.size());
  const auto q = emb.row(query);
  for (WordId c : candidates) {
    if (c == query) continue;
    const double cs = norms[c] == 0.0 ? 0.0 : dot(q, emb.row(c)) / (norms[query] * norms[c]);
    all.push_back({c, cs});
  }
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  return all;
}

}  // namespace detail

// The k candidates most cosine-similar to `query` (itself excluded), by
// descending cosine with ties to the smaller id. Throws std::domain_error for
// a zero-norm query.
template <typename Real>
std::vector<Neighbor> knn(const Matrix<Real>& emb, WordId query, std::size_t k,
                          std::span<const WordId> candidates) {
  if (k == 0) throw std::invalid_argument("knn: K must be positive");
  if (std::find(candidates.begin(), candidates.end(), query) == candidates.end()) {
    throw std::invalid_argument("knn: query is not in the candidate set");
  }
  std::vector<double> norms(emb.rows(), 0.0);
  for (WordId c : candidates) norms[c] = norm(emb.row(c));
  return detail::knn_with_norms(emb, norms, query, k, candidates);
}

struct StabilityValue {
  double value = 0.0;
  bool zero_vector = false;  // some pair involved a zero-norm target vector
};

// Mean target-side cosine between `word` and each of its neighbors. Pairs
// with a zero vector count as cosine 0; no neighbors gives 0.
template <typename Real>
StabilityValue stability(const Matrix<Real>& target, WordId word,
                         std::span<const WordId> neighbors) {
  StabilityValue out;
  if (neighbors.empty()) return out;
  const auto u = target.row(word);
  const double nu = norm(u);
  double sum = 0.0;
  for (WordId n : neighbors) {
    const auto v = target.row(n);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) {
      out.zero_vector = true;
      continue;
    }
    sum += dot(u, v) / (nu * nv);
  }
  out.value = sum / static_cast<double>(neighbors.size());
  return out;
}

// max(0, tanh(lambda * stability)), forced to 0 for the m most frequent
// target words (rank < m).
inline double wscore(double stability_value, double lambda, std::size_t target_freq_rank,
                     std::size_t m) {
  if (!(lambda > 0)) throw std::invalid_argument("wscore: lambda must be positive");
  if (target_freq_rank < m) return 0.0;
  return std::max(0.0, std::tanh(lambda * stability_value));
}

inline constexpr std::size_t kDefaultNeighbors = 10;
inline constexpr std::size_t kDefaultClipTop = 20;

struct StabilityEntry {
  std::string word;
  WordId target_id = 0;
  std::vector<WordId> neighbors;  // target ids, nearest first in source space
  double stability = 0.0;
  double wscore = 0.0;
  bool clipped = false;
  bool zero_vector = false;
};

struct StabilityReport {
  std::vector<StabilityEntry> entries;  // one per shared word, target id order
  double lambda = 0.0;
  std::size_t k = 0;
  std::size_t m = 0;

  // wscore per target id; 0 for words not shared with the source.
  std::vector<double> scores(std::size_t target_vocab_size) const {
    std::vector<double> out(target_vocab_size, 0.0);
    for (const auto& e : entries) out[e.target_id] = e.wscore;
    return out;
  }
};

// Recomputes wscore for a new lambda without redoing neighbor search.
inline void rescore(StabilityReport& report, double lambda) {
  report.lambda = lambda;
  for (auto& e : report.entries) e.wscore = wscore(e.stability, lambda, e.target_id, report.m);
}

// Stability and wscore of every word present in both vocabularies. Source
// neighbors are searched among the shared words only. Frequency rank is the
// target vocabulary id.
template <typename Real>
StabilityReport build_report(const Vocabulary& source_vocab, const Matrix<Real>& source_focus,
                             const Vocabulary& target_vocab, const Matrix<Real>& target_focus,
                             std::size_t k, double lambda, std::size_t m) {
  if (source_focus.rows() != source_vocab.size() || target_focus.rows() != target_vocab.size()) {
    throw std::invalid_argument("build_report: model and vocabulary sizes differ");
  }
  std::vector<WordId> shared_target;
  std::vector<WordId> shared_source;
  for (WordId t = 0; t < target_vocab.size(); ++t) {
    if (const auto s = source_vocab.find(target_vocab.word(t))) {
      shared_target.push_back(t);
      shared_source.push_back(*s);
    }
  }
  if (shared_target.empty()) throw std::invalid_argument("build_report: no shared words");

  // Source rows of the shared words, indexed by position in the shared list
  // (ascending target id), so knn ties resolve by target id.
  Matrix<Real> src(shared_target.size(), source_focus.cols());
  for (std::size_t i = 0; i < shared_source.size(); ++i) {
    std::ranges::copy(source_focus.row(shared_source[i]), src.row(i).begin());
  }
  const auto norms = detail::row_norms(src);
  std::vector<WordId> positions(shared_target.size());
  for (WordId i = 0; i < positions.size(); ++i) positions[i] = i;

  StabilityReport report{{}, lambda, k, m};
  report.entries.reserve(shared_target.size());
  for (WordId i = 0; i < positions.size(); ++i) {
    StabilityEntry e;
    e.target_id = shared_target[i];
    e.word = target_vocab.word(e.target_id);
    if (norms[i] == 0.0) {
      e.zero_vector = true;
    } else {
      for (const auto& nb : detail::knn_with_norms(src, norms, i, k, positions)) {
        e.neighbors.push_back(shared_target[nb.id]);
      }
    }
    const auto st = stability(target_focus, e.target_id, e.neighbors);
    e.stability = st.value;
    e.zero_vector = e.zero_vector || st.zero_vector;
    e.clipped = e.target_id < m;
    e.wscore = wscore(e.stability, lambda, e.target_id, m);
    report.entries.push_back(std::move(e));
  }
  return report;
}

// TSV: word, stability, wscore, clipped (0/1), with a header row.
inline void write_report(std::ostream& out, const StabilityReport& report) {
  out << "word\tstability\twscore\tclipped\n";
  char buf[96];
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%d\n", e.stability, e.wscore, e.clipped ? 1 : 0);
    out << e.word << buf;
  }
}

}  // namespace srcsel
