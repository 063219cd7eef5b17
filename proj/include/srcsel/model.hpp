#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/corpus_io.hpp"
#include "srcsel/matrix.hpp"
#include "srcsel/rng.hpp"

namespace srcsel {

// Focus (U) and context (V) matrices of a CBOW model, one row per word id of
// the vocabulary identified by vocab_hash.
template <typename Real>
struct EmbeddingModel {
  Matrix<Real> focus;
  Matrix<Real> context;
  std::uint64_t vocab_hash = 0;

  std::size_t dim() const { return focus.cols(); }
  std::size_t size() const { return focus.rows(); }

  bool operator==(const EmbeddingModel&) const = default;
};

// Word vectors as read from an embedding file.
struct WordVectors {
  std::vector<std::string> words;
  Matrix<float> vectors;

  std::optional<std::size_t> find(const std::string& w) const {
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] == w) return i;
    }
    return std::nullopt;
  }
};

template <typename Real>
EmbeddingModel<Real> init_model(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  EmbeddingModel<Real> m{Matrix<Real>(vocab.size(), dim), Matrix<Real>(vocab.size(), dim),
                         vocab.hash()};
  Rng rng(substream(seed, "init"));
  const double half = 0.5 / static_cast<double>(dim);
  for (auto& x : m.focus.data()) x = static_cast<Real>(rng.uniform(-half, half));
  return m;
}

// Warm start from a source model: rows of words known to the source are
// copied (focus always, context when `copy_context`), the rest stay random.
template <typename Real>
EmbeddingModel<Real> init_model(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                const Vocabulary& source_vocab,
                                const EmbeddingModel<Real>& source, bool copy_context = true) {
  if (source.dim() != dim) {
    throw std::invalid_argument("source embedding dimension " + std::to_string(source.dim()) +
                                " does not match requested " + std::to_string(dim));
  }
  if (source.size() != source_vocab.size()) {
    throw std::invalid_argument("source model does not match its vocabulary");
  }
  auto m = init_model<Real>(vocab, dim, seed);
  for (WordId i = 0; i < vocab.size(); ++i) {
    const auto s = source_vocab.find(vocab.word(i));
    if (!s) continue;
    std::ranges::copy(source.focus.row(*s), m.focus.row(i).begin());
    if (copy_context) std::ranges::copy(source.context.row(*s), m.context.row(i).begin());
  }
  return m;
}

// word2vec text format: "V dim" header, then "word v1 ... vn" with six
// decimals. Rows are optionally scaled to unit length (zero rows stay zero).
template <typename Real>
void write_word2vec(std::ostream& out, const std::vector<std::string>& words,
                    const Matrix<Real>& vectors, bool unit_normalize) {
  if (words.size() != vectors.rows()) throw std::invalid_argument("word list / matrix size mismatch");
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto row = vectors.row(i);
    double scale = 1.0;
    if (unit_normalize) {
      const double n = norm(row);
      if (n > 0.0) scale = 1.0 / n;
    }
    out << words[i];
    for (Real x : row) {
      std::snprintf(buf, sizeof(buf), " %.6f", static_cast<double>(x) * scale);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing embeddings");
}

inline WordVectors read_word2vec(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw FormatError("embedding file: bad header");
  WordVectors wv{{}, Matrix<float>(rows, cols)};
  wv.words.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!(in >> wv.words[i])) throw FormatError("embedding file: truncated at row " + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) {
      double x;
      if (!(in >> x)) throw FormatError("embedding file: bad value at row " + std::to_string(i));
      wv.vectors(i, j) = static_cast<float>(x);
    }
  }
  return wv;
}

inline constexpr char kModelMagic[8] = {'S', 'S', 'M', 'O', 'D', 'E', 'L', '1'};

// Binary snapshot holding both matrices (little-endian float32).
template <typename Real>
void save_model(std::ostream& out, const EmbeddingModel<Real>& m) {
  out.write(kModelMagic, sizeof(kModelMagic));
  detail::put_le<std::uint64_t>(out, m.size());
  detail::put_le<std::uint64_t>(out, m.dim());
  detail::put_le<std::uint64_t>(out, m.vocab_hash);
  for (const auto* mat : {&m.focus, &m.context}) {
    for (Real x : mat->data()) {
      const float f = static_cast<float>(x);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof(bits));
      detail::put_le<std::uint32_t>(out, bits);
    }
  }
}

template <typename Real>
EmbeddingModel<Real> load_model(std::istream& in) {
  char magic[sizeof(kModelMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kModelMagic)) {
    throw FormatError("model file: bad magic");
  }
  const auto rows = detail::get_le<std::uint64_t>(in);
  const auto cols = detail::get_le<std::uint64_t>(in);
  EmbeddingModel<Real> m{Matrix<Real>(rows, cols), Matrix<Real>(rows, cols), 0};
  m.vocab_hash = detail::get_le<std::uint64_t>(in);
  for (auto* mat : {&m.focus, &m.context}) {
    for (Real& x : mat->data()) {
      const auto bits = detail::get_le<std::uint32_t>(in);
      float f;
      std::memcpy(&f, &bits, sizeof(f));
      x = static_cast<Real>(f);
    }
  }
  return m;
}

template <typename Real>
void check_model_matches(const EmbeddingModel<Real>& m, const Vocabulary& vocab) {
  if (m.vocab_hash != vocab.hash() || m.size() != vocab.size()) {
    throw std::runtime_error("model/vocabulary hash mismatch");
  }
}

}  // namespace srcsel
