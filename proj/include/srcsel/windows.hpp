#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/rng.hpp"

namespace srcsel {

struct WindowSample {
  WordId focus = 0;
  std::vector<WordId> context;  // multiset, document order
  std::uint32_t doc_id = 0;
  std::uint32_t position = 0;

  bool operator==(const WindowSample&) const = default;
};

struct WindowOptions {
  std::uint32_t window = 5;
  // word2vec-style random shrinking of the window; off by default.
  bool shrink = false;
  // Remove repetitions of the focus word from its context.
  bool strip_focus = false;
  std::uint64_t seed = 0;
};

// Fills `out` with the context of tokens[pos] using a half-width of `window`,
// clipped at the document edges. Returns false when the context is empty.
inline bool fill_context(std::span<const WordId> tokens, std::size_t pos, std::uint32_t window,
                         bool strip_focus, std::vector<WordId>& out) {
  out.clear();
  const std::size_t lo = pos >= window ? pos - window : 0;
  const std::size_t hi = std::min(tokens.size(), pos + window + 1);
  const WordId focus = tokens[pos];
  for (std::size_t i = lo; i < hi; ++i) {
    if (i == pos) continue;
    if (strip_focus && tokens[i] == focus) continue;
    out.push_back(tokens[i]);
  }
  return !out.empty();
}

// Visits every (focus, context) window in corpus order. Positions whose
// context is empty are skipped.
template <typename Fn>
void for_each_window(const Corpus& corpus, const WindowOptions& opts, Fn&& fn) {
  Rng rng(substream(opts.seed, "window"));
  WindowSample s;
  for (const auto& doc : corpus.documents) {
    for (std::size_t pos = 0; pos < doc.tokens.size(); ++pos) {
      std::uint32_t w = opts.window;
      if (opts.shrink && w > 1) w -= static_cast<std::uint32_t>(rng.below(w));
      if (!fill_context(doc.tokens, pos, w, opts.strip_focus, s.context)) continue;
      s.focus = doc.tokens[pos];
      s.doc_id = doc.doc_id;
      s.position = static_cast<std::uint32_t>(pos);
      fn(static_cast<const WindowSample&>(s));
    }
  }
}

inline std::vector<WindowSample> iter_windows(const Corpus& corpus, const WindowOptions& opts) {
  std::vector<WindowSample> out;
  for_each_window(corpus, opts, [&](const WindowSample& s) { out.push_back(s); });
  return out;
}

}  // namespace srcsel
