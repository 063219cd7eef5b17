#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srcsel/hash.hpp"
#include "srcsel/rng.hpp"
#include "srcsel/tokenize.hpp"

namespace srcsel {

using WordId = std::uint32_t;

// Word <-> dense id map with corpus counts. Ids are ordered by descending
// count with lexicographic tie-breaking, so id doubles as frequency rank.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Entries are taken in the given order; ids follow that order.
  explicit Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    words_.reserve(entries.size());
    counts_.reserve(entries.size());
    for (auto& [word, count] : entries) {
      if (index_.contains(word)) {
        throw std::invalid_argument("duplicate vocabulary word: " + word);
      }
      index_.emplace(word, static_cast<WordId>(words_.size()));
      words_.push_back(std::move(word));
      counts_.push_back(count);
      total_ += count;
    }
  }

  // Sorts (word, count) pairs by the canonical order and drops rare words.
  static Vocabulary from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts,
                                std::uint64_t min_count) {
    std::erase_if(counts, [&](const auto& e) { return e.second < min_count; });
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return Vocabulary(std::move(counts));
  }

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string& word(WordId id) const { return words_.at(id); }
  std::uint64_t count(WordId id) const { return counts_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total_tokens() const { return total_; }

  std::optional<WordId> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view word) const { return find(word).has_value(); }

  // Fingerprint over words and counts; binds models and caches to a vocabulary.
  std::uint64_t hash() const {
    Fnv1a h;
    h.value(static_cast<std::uint64_t>(words_.size()));
    for (std::size_t i = 0; i < words_.size(); ++i) {
      h.str(words_[i]);
      h.value(counts_[i]);
    }
    return h.digest();
  }

  // Same words, new per-id counts (used by vocabulary permutation).
  Vocabulary with_counts(std::vector<std::uint64_t> counts) const {
    if (counts.size() != words_.size()) throw std::invalid_argument("count vector size mismatch");
    Vocabulary v = *this;
    v.counts_ = std::move(counts);
    v.total_ = std::accumulate(v.counts_.begin(), v.counts_.end(), std::uint64_t{0});
    return v;
  }

  bool operator==(const Vocabulary& o) const {
    return words_ == o.words_ && counts_ == o.counts_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
  std::uint64_t total_ = 0;
};

template <typename Range>
Vocabulary build_vocabulary(const Range& tokens, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[std::string(t)];
  return Vocabulary::from_counts({counts.begin(), counts.end()}, min_count);
}

inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                                   std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : documents) {
    for (const auto& t : doc) ++counts[t];
  }
  return Vocabulary::from_counts({counts.begin(), counts.end()}, min_count);
}

struct Document {
  std::uint32_t doc_id = 0;
  std::vector<WordId> tokens;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  Vocabulary vocabulary;
  std::vector<Document> documents;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.tokens.size();
    return n;
  }

  bool operator==(const Corpus&) const = default;
};

enum class DocumentMode { kLine, kParagraph };

// Reads raw text into tokenized documents: one per non-empty line, or one per
// blank-line-separated paragraph. Documents with no tokens are skipped.
inline std::vector<std::vector<std::string>> read_documents(std::istream& in,
                                                            DocumentMode mode) {
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> paragraph;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    if (mode == DocumentMode::kLine) {
      if (!tokens.empty()) docs.push_back(std::move(tokens));
      continue;
    }
    const bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) {
      if (!paragraph.empty()) docs.push_back(std::move(paragraph));
      paragraph.clear();
    } else {
      paragraph.insert(paragraph.end(), std::make_move_iterator(tokens.begin()),
                       std::make_move_iterator(tokens.end()));
    }
  }
  if (!paragraph.empty()) docs.push_back(std::move(paragraph));
  return docs;
}

// Maps tokens to ids. Out-of-vocabulary tokens are dropped and documents left
// empty are omitted; surviving documents are renumbered densely.
inline Corpus encode(const std::vector<std::vector<std::string>>& documents,
                     const Vocabulary& vocab) {
  Corpus corpus{vocab, {}};
  for (const auto& doc : documents) {
    Document d;
    d.doc_id = static_cast<std::uint32_t>(corpus.documents.size());
    for (const auto& t : doc) {
      if (auto id = vocab.find(t)) d.tokens.push_back(*id);
    }
    if (!d.tokens.empty()) corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

inline std::vector<std::vector<std::string>> decode(const Corpus& corpus) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    std::vector<std::string> words;
    words.reserve(d.tokens.size());
    for (WordId id : d.tokens) words.push_back(corpus.vocabulary.word(id));
    docs.push_back(std::move(words));
  }
  return docs;
}

// Re-expresses a corpus in another vocabulary (by word string), dropping words
// the other vocabulary lacks.
inline Corpus reencode(const Corpus& corpus, const Vocabulary& vocab) {
  std::vector<std::optional<WordId>> map(corpus.vocabulary.size());
  for (WordId i = 0; i < corpus.vocabulary.size(); ++i) {
    map[i] = vocab.find(corpus.vocabulary.word(i));
  }
  Corpus out{vocab, {}};
  for (const auto& doc : corpus.documents) {
    Document d;
    d.doc_id = static_cast<std::uint32_t>(out.documents.size());
    for (WordId id : doc.tokens) {
      if (map[id]) d.tokens.push_back(*map[id]);
    }
    if (!d.tokens.empty()) out.documents.push_back(std::move(d));
  }
  return out;
}

// Keeps the listed documents (in the given order), renumbered densely.
inline Corpus subset(const Corpus& corpus, const std::vector<std::uint32_t>& doc_ids) {
  Corpus out{corpus.vocabulary, {}};
  out.documents.reserve(doc_ids.size());
  for (auto id : doc_ids) {
    Document d = corpus.documents.at(id);
    d.doc_id = static_cast<std::uint32_t>(out.documents.size());
    out.documents.push_back(std::move(d));
  }
  return out;
}

// Rebuilds the vocabulary from the tokens actually present, so counts and ids
// describe this corpus alone.
inline Corpus compact(const Corpus& corpus) {
  std::vector<std::uint64_t> counts(corpus.vocabulary.size(), 0);
  for (const auto& d : corpus.documents) {
    for (WordId id : d.tokens) ++counts[id];
  }
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (WordId i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) entries.emplace_back(corpus.vocabulary.word(i), counts[i]);
  }
  return reencode(corpus, Vocabulary::from_counts(std::move(entries), 1));
}

// Concatenation of two corpora sharing one vocabulary.
inline Corpus concatenate(const Corpus& first, const Corpus& second) {
  if (!(first.vocabulary == second.vocabulary)) {
    throw std::invalid_argument("concatenate: vocabularies differ");
  }
  Corpus out{first.vocabulary, first.documents};
  for (const auto& d : second.documents) {
    out.documents.push_back({static_cast<std::uint32_t>(out.documents.size()), d.tokens});
  }
  return out;
}

// Per-id token counts actually present in the corpus.
inline std::vector<std::uint64_t> token_counts(const Corpus& corpus) {
  std::vector<std::uint64_t> counts(corpus.vocabulary.size(), 0);
  for (const auto& d : corpus.documents) {
    for (WordId id : d.tokens) ++counts[id];
  }
  return counts;
}

// Replaces every token id i with mapping[i]. The word list is kept; counts
// move with their ids.
inline Corpus apply_permutation(const Corpus& corpus, const std::vector<WordId>& mapping) {
  const auto& vocab = corpus.vocabulary;
  if (mapping.size() != vocab.size()) throw std::invalid_argument("permutation size mismatch");
  std::vector<std::uint64_t> counts(vocab.size(), 0);
  std::vector<bool> seen(vocab.size(), false);
  for (WordId i = 0; i < mapping.size(); ++i) {
    const WordId to = mapping[i];
    if (to >= vocab.size() || seen[to]) throw std::invalid_argument("mapping is not a permutation");
    seen[to] = true;
    counts[to] = vocab.count(i);
  }
  Corpus out{vocab.with_counts(std::move(counts)), corpus.documents};
  for (auto& d : out.documents) {
    for (auto& t : d.tokens) t = mapping[t];
  }
  return out;
}

// Random permutation of vocabulary ids that avoids fixed points: uniform
// derangements by rejection, then a swap fix-up if rejection runs out.
inline std::vector<WordId> random_derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("vocabulary permutation needs at least two words");
  Rng rng(substream(seed, "permutation"));
  std::vector<WordId> p(n);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::iota(p.begin(), p.end(), WordId{0});
    shuffle(std::span<WordId>(p), rng);
    bool fixed = false;
    for (WordId i = 0; i < n && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) return p;
  }
  for (WordId i = 0; i < n; ++i) {
    if (p[i] == i) std::swap(p[i], p[(i + 1) % n]);
  }
  return p;
}

// Jumbled corpus: every word replaced by its image under a random derangement,
// which destroys all co-occurrence structure while keeping the frequency
// profile.
inline Corpus permute_vocabulary(const Corpus& corpus, std::uint64_t seed) {
  return apply_permutation(corpus, random_derangement(corpus.vocabulary.size(), seed));
}

}  // namespace srcsel
