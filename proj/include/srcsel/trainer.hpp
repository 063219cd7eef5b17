#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "srcsel/cbow.hpp"
#include "srcsel/corpus.hpp"
#include "srcsel/model.hpp"
#include "srcsel/sampler.hpp"
#include "srcsel/windows.hpp"

namespace srcsel {

struct TrainConfig {
  std::size_t dim = 300;
  std::uint32_t window = 5;
  std::uint32_t negatives = 5;
  std::uint32_t epochs = 5;
  double initial_lr = 0.05;
  double distortion = 0.75;
  std::uint64_t seed = 1;
  std::uint32_t workers = 1;
  double reg_weight = 1.0;  // rho
  bool shrink_window = false;
  double subsample = 0.0;  // word2vec frequent-word threshold; 0 disables
  // Drop repetitions of the focus word from contexts drawn from source text.
  bool strip_source_focus = true;
};

// Epoch grid searched by the experiment drivers.
inline const std::vector<std::uint32_t>& default_epoch_grid() {
  static const std::vector<std::uint32_t> grid{5, 20, 80, 160, 200, 250};
  return grid;
}

// One corpus feeding the SGD loop together with the negative distribution its
// samples use.
struct TrainingStream {
  const Corpus* corpus = nullptr;
  NegativeSampler sampler;
  bool strip_focus = false;
};

// Position of one window inside a stream plus its objective weight.
struct SampleRef {
  std::uint32_t doc = 0;
  std::uint32_t pos = 0;
  float weight = 1.0f;
  std::uint32_t stream = 0;
};

// Appends every window position of `corpus` whose context is non-empty.
// `weight_of(doc_id, focus, context)` returns the sample weight; zero-weight
// samples are dropped since they cannot move any parameter.
template <typename WeightFn>
void collect_samples(const Corpus& corpus, std::uint32_t stream, std::uint32_t window,
                     bool strip_focus, WeightFn&& weight_of, std::vector<SampleRef>& out) {
  std::vector<WordId> ctx;
  for (const auto& doc : corpus.documents) {
    for (std::size_t pos = 0; pos < doc.tokens.size(); ++pos) {
      if (!fill_context(doc.tokens, pos, window, strip_focus, ctx)) continue;
      const double w = weight_of(doc.doc_id, doc.tokens[pos], std::span<const WordId>(ctx));
      if (w <= 0.0) continue;
      out.push_back({doc.doc_id, static_cast<std::uint32_t>(pos), static_cast<float>(w), stream});
    }
  }
}

inline void collect_samples(const Corpus& corpus, std::uint32_t stream, std::uint32_t window,
                            bool strip_focus, std::vector<SampleRef>& out) {
  collect_samples(corpus, stream, window, strip_focus,
                  [](std::uint32_t, WordId, std::span<const WordId>) { return 1.0; }, out);
}

namespace detail {

inline double linear_lr(double lr0, std::uint64_t progress, std::uint64_t total) {
  constexpr double kFloor = 1e-4;
  if (total == 0) return lr0;
  return lr0 * (1.0 - (1.0 - kFloor) * static_cast<double>(progress) / static_cast<double>(total));
}

template <typename Real>
void sgd_range(EmbeddingModel<Real>& model, std::span<const TrainingStream> streams,
               std::span<const SampleRef> samples, std::size_t begin, std::size_t end,
               std::uint64_t progress_base, std::uint64_t total, const TrainConfig& cfg,
               const Regularizer<Real>* reg, const std::vector<double>* keep_prob, Rng& rng) {
  StepWorkspace<Real> ws;
  ws.context.reserve(2 * cfg.window);
  for (std::size_t i = begin; i < end; ++i) {
    const SampleRef& s = samples[i];
    const TrainingStream& st = streams[s.stream];
    const auto& tokens = st.corpus->documents[s.doc].tokens;
    const WordId focus = tokens[s.pos];
    if (keep_prob != nullptr && (*keep_prob)[focus] < rng.uniform()) continue;
    std::uint32_t w = cfg.window;
    if (cfg.shrink_window && w > 1) w -= static_cast<std::uint32_t>(rng.below(w));
    if (!fill_context(tokens, s.pos, w, st.strip_focus, ws.context)) continue;
    const double lr = linear_lr(cfg.initial_lr, progress_base + i, total);
    cbow_step<Real>(model, focus, ws.context, st.sampler, rng, cfg.negatives,
                    static_cast<Real>(lr), static_cast<Real>(s.weight), reg, ws);
  }
}

}  // namespace detail

// Runs `epochs` shuffled passes of cbow_step over `samples`. With several
// workers the matrices are shared without locks (racy element updates);
// workers == 1 is bit-reproducible for a given seed.
template <typename Real>
void run_sgd(EmbeddingModel<Real>& model, std::span<const TrainingStream> streams,
             std::vector<SampleRef> samples, const TrainConfig& cfg,
             const Regularizer<Real>* reg = nullptr) {
  if (cfg.workers == 0) throw std::invalid_argument("workers must be positive");
  if (!(cfg.initial_lr > 0)) throw std::invalid_argument("initial learning rate must be positive");
  const std::uint64_t n = samples.size();
  const std::uint64_t total = n * cfg.epochs;

  std::optional<std::vector<double>> keep;
  if (cfg.subsample > 0.0 && !streams.empty()) {
    // keep-probabilities from the first stream's frequency profile
    const auto& vocab = streams[0].corpus->vocabulary;
    const auto counts = token_counts(*streams[0].corpus);
    double tot = 0;
    for (auto c : counts) tot += static_cast<double>(c);
    keep.emplace(vocab.size(), 1.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      const double f = static_cast<double>(counts[i]) / tot;
      (*keep)[i] = std::min(1.0, (std::sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f);
    }
  }
  const std::vector<double>* keep_ptr = keep ? &*keep : nullptr;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng order_rng(substream(cfg.seed, "shuffle", epoch));
    shuffle(std::span<SampleRef>(samples), order_rng);
    const std::uint64_t base = static_cast<std::uint64_t>(epoch) * n;
    if (cfg.workers == 1) {
      Rng rng(substream(cfg.seed, "sampler", epoch, 0));
      detail::sgd_range<Real>(model, streams, samples, 0, n, base, total, cfg, reg, keep_ptr, rng);
      continue;
    }
    std::vector<std::jthread> pool;
    for (std::uint32_t w = 0; w < cfg.workers; ++w) {
      const std::size_t begin = n * w / cfg.workers;
      const std::size_t end = n * (w + 1) / cfg.workers;
      pool.emplace_back([&, w, begin, end] {
        Rng rng(substream(cfg.seed, "sampler", epoch, w));
        detail::sgd_range<Real>(model, streams, samples, begin, end, base, total, cfg, reg,
                                keep_ptr, rng);
      });
    }
  }
}

struct TgtMode {};

// Fine-tune from source embeddings.
template <typename Real>
struct SrcTuneMode {
  const Vocabulary* source_vocab = nullptr;
  const EmbeddingModel<Real>* source = nullptr;
};

// Regularized training. Initialized from the source model when one is given.
template <typename Real>
struct RegMode {
  Regularizer<Real> regularizer;
  const Vocabulary* source_vocab = nullptr;
  const EmbeddingModel<Real>* source = nullptr;
};

template <typename Real>
using TrainMode = std::variant<TgtMode, SrcTuneMode<Real>, RegMode<Real>>;

template <typename Real>
EmbeddingModel<Real> initial_model(const Vocabulary& vocab, const TrainConfig& cfg,
                                   const TrainMode<Real>& mode) {
  const Vocabulary* sv = nullptr;
  const EmbeddingModel<Real>* sm = nullptr;
  if (const auto* t = std::get_if<SrcTuneMode<Real>>(&mode)) {
    sv = t->source_vocab;
    sm = t->source;
    if (sv == nullptr || sm == nullptr) throw std::invalid_argument("SrcTune needs a source model");
  } else if (const auto* r = std::get_if<RegMode<Real>>(&mode)) {
    sv = r->source_vocab;
    sm = r->source;
  }
  if (sm != nullptr) return init_model<Real>(vocab, cfg.dim, cfg.seed, *sv, *sm);
  return init_model<Real>(vocab, cfg.dim, cfg.seed);
}

// Single-corpus CBOW training in any of the embedding-only modes.
template <typename Real>
EmbeddingModel<Real> train(const Corpus& corpus, const TrainConfig& cfg,
                           const TrainMode<Real>& mode = TgtMode{}) {
  if (corpus.documents.empty()) throw std::invalid_argument("train: corpus is empty");
  auto model = initial_model<Real>(corpus.vocabulary, cfg, mode);
  if (cfg.epochs == 0) return model;
  const auto counts = token_counts(corpus);
  std::vector<TrainingStream> streams{{&corpus, NegativeSampler(counts, cfg.distortion), false}};
  std::vector<SampleRef> samples;
  collect_samples(corpus, 0, cfg.window, false, samples);
  const Regularizer<Real>* reg = nullptr;
  if (const auto* r = std::get_if<RegMode<Real>>(&mode)) {
    if (r->regularizer.score.size() != corpus.vocabulary.size()) {
      throw std::invalid_argument("regularizer is not aligned to the corpus vocabulary");
    }
    reg = &r->regularizer;
  }
  run_sgd<Real>(model, streams, std::move(samples), cfg, reg);
  return model;
}

// Harmonic mean of the word's relative frequencies in the two corpora; the
// frequency-based regularization score. 0 when absent from the source.
inline double frequency_score(const Vocabulary& source, const Vocabulary& target,
                              const std::string& word) {
  const auto t = target.find(word);
  if (!t) throw std::invalid_argument("frequency_score: word not in target vocabulary: " + word);
  const auto s = source.find(word);
  if (!s || source.total_tokens() == 0) return 0.0;
  const double fs = static_cast<double>(source.count(*s)) / static_cast<double>(source.total_tokens());
  const double ft = static_cast<double>(target.count(*t)) / static_cast<double>(target.total_tokens());
  if (fs + ft == 0.0) return 0.0;
  return 2.0 * fs * ft / (fs + ft);
}

template <typename Real>
std::vector<Real> frequency_scores(const Vocabulary& source, const Vocabulary& target) {
  std::vector<Real> out(target.size());
  for (WordId i = 0; i < target.size(); ++i) {
    out[i] = static_cast<Real>(frequency_score(source, target, target.word(i)));
  }
  return out;
}

}  // namespace srcsel
