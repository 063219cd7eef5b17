#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "srcsel/corpus.hpp"

namespace srcsel {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vocabulary TSV: `word<TAB>count` per line, in id order.
inline void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (WordId i = 0; i < vocab.size(); ++i) out << vocab.word(i) << '\t' << vocab.count(i) << '\n';
}

inline Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("vocabulary line " + std::to_string(lineno) + ": missing tab");
    }
    try {
      entries.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
    } catch (const std::logic_error&) {
      throw FormatError("vocabulary line " + std::to_string(lineno) + ": bad count");
    }
  }
  return Vocabulary(std::move(entries));
}

namespace detail {

inline void put_varint(std::ostream& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.put(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.put(static_cast<char>(v));
}

inline std::uint64_t get_varint(std::istream& in) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const int c = in.get();
    if (c == EOF) throw FormatError("corpus cache: truncated varint");
    v |= static_cast<std::uint64_t>(c & 0x7f) << shift;
    if ((c & 0x80) == 0) return v;
  }
  throw FormatError("corpus cache: varint too long");
}

template <typename T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw FormatError("unexpected end of binary data");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace detail

inline constexpr char kCorpusMagic[8] = {'S', 'S', 'C', 'O', 'R', 'P', 'U', 'S'};
inline constexpr std::uint32_t kCorpusVersion = 1;

// Encoded corpus cache: magic, version, vocabulary hash, document count, then
// for every document its token ids as varint(id + 1) closed by a 0 byte.
inline void write_corpus_cache(std::ostream& out, const Corpus& corpus) {
  out.write(kCorpusMagic, sizeof(kCorpusMagic));
  detail::put_le<std::uint32_t>(out, kCorpusVersion);
  detail::put_le<std::uint64_t>(out, corpus.vocabulary.hash());
  detail::put_le<std::uint64_t>(out, corpus.documents.size());
  for (const auto& d : corpus.documents) {
    for (WordId id : d.tokens) detail::put_varint(out, std::uint64_t{id} + 1);
    out.put('\0');
  }
}

// The vocabulary must be supplied separately and must match the stored hash.
inline Corpus read_corpus_cache(std::istream& in, const Vocabulary& vocab) {
  char magic[sizeof(kCorpusMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kCorpusMagic)) {
    throw FormatError("corpus cache: bad magic");
  }
  if (detail::get_le<std::uint32_t>(in) != kCorpusVersion) {
    throw FormatError("corpus cache: unsupported version");
  }
  if (detail::get_le<std::uint64_t>(in) != vocab.hash()) {
    throw FormatError("corpus cache: vocabulary hash mismatch");
  }
  const auto n_docs = detail::get_le<std::uint64_t>(in);
  Corpus corpus{vocab, {}};
  corpus.documents.reserve(n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    Document d;
    d.doc_id = static_cast<std::uint32_t>(i);
    for (;;) {
      const auto v = detail::get_varint(in);
      if (v == 0) break;
      if (v - 1 >= vocab.size()) throw FormatError("corpus cache: token id out of range");
      d.tokens.push_back(static_cast<WordId>(v - 1));
    }
    corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

inline std::string read_file(const std::string& path) {
  auto in = open_input(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace srcsel
