#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/bm25.hpp"
#include "srcsel/corpus.hpp"
#include "srcsel/model.hpp"
#include "srcsel/trainer.hpp"

namespace srcsel {

struct RetainOptions {
  std::uint32_t min_votes = 2;
  std::vector<double> cutoff_quantiles{0.0, 0.25, 0.5, 0.75};
};

struct QuantileDiagnostic {
  double quantile = 0.0;
  double cutoff = 0.0;
  std::size_t retained = 0;
  double heldout_mean = 0.0;  // -inf when nothing is retained
};

struct SelectionResult {
  std::vector<std::uint32_t> votes;       // per source doc
  std::vector<double> cumulative_score;   // per source doc
  std::vector<std::uint32_t> retained;    // ascending doc ids
  double cutoff = 0.0;
  double quantile = 0.0;
  std::vector<QuantileDiagnostic> diagnostics;

  bool empty() const { return retained.empty(); }
};

namespace detail {

// Cumulative-score threshold at quantile q of the documents that received at
// least one vote (lower nearest rank).
inline double score_quantile(const std::vector<std::uint32_t>& votes,
                             const std::vector<double>& cumulative, double q) {
  std::vector<double> pop;
  for (std::size_t d = 0; d < votes.size(); ++d) {
    if (votes[d] > 0) pop.push_back(cumulative[d]);
  }
  if (pop.empty()) return 0.0;
  std::sort(pop.begin(), pop.end());
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(pop.size() - 1)));
  return pop[std::min(idx, pop.size() - 1)];
}

}  // namespace detail

// Votes and cumulative BM25 per source document from the top-r lists of the
// voting target queries. Each candidate quantile of the cumulative score
// defines a cutoff; the chosen one maximizes the mean held-out relevance of
// the documents it keeps (`heldout_scores` are full rankings of held-out
// target queries). Ties go to the smaller quantile. A document is retained
// when votes >= min_votes and cumulative score >= cutoff.
inline SelectionResult retain(std::size_t source_doc_count,
                              const std::vector<std::vector<ScoredDoc>>& retrievals,
                              const std::vector<std::vector<ScoredDoc>>& heldout_scores,
                              const RetainOptions& opts) {
  if (opts.cutoff_quantiles.empty()) throw std::invalid_argument("retain: no cutoff quantiles");
  SelectionResult res;
  res.votes.assign(source_doc_count, 0);
  res.cumulative_score.assign(source_doc_count, 0.0);
  for (const auto& list : retrievals) {
    for (const auto& sd : list) {
      ++res.votes.at(sd.doc);
      res.cumulative_score[sd.doc] += sd.score;
    }
  }
  std::vector<double> heldout_mean(source_doc_count, 0.0);
  for (const auto& list : heldout_scores) {
    for (const auto& sd : list) heldout_mean.at(sd.doc) += sd.score;
  }
  if (!heldout_scores.empty()) {
    for (auto& v : heldout_mean) v /= static_cast<double>(heldout_scores.size());
  }

  const auto kept = [&](double cutoff) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t d = 0; d < source_doc_count; ++d) {
      if (res.votes[d] >= opts.min_votes && res.votes[d] > 0 && res.cumulative_score[d] >= cutoff) {
        out.push_back(d);
      }
    }
    return out;
  };

  double best = -std::numeric_limits<double>::infinity();
  bool chosen = false;
  for (double q : opts.cutoff_quantiles) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("retain: quantile outside [0, 1]");
    QuantileDiagnostic diag{q, detail::score_quantile(res.votes, res.cumulative_score, q), 0,
                            -std::numeric_limits<double>::infinity()};
    const auto docs = kept(diag.cutoff);
    diag.retained = docs.size();
    if (!docs.empty()) {
      double sum = 0.0;
      for (auto d : docs) sum += heldout_mean[d];
      diag.heldout_mean = sum / static_cast<double>(docs.size());
    }
    if (!chosen || diag.heldout_mean > best) {
      best = diag.heldout_mean;
      res.quantile = q;
      res.cutoff = diag.cutoff;
      res.retained = docs;
      chosen = true;
    }
    res.diagnostics.push_back(diag);
  }
  return res;
}

struct SelectionConfig {
  std::size_t top_r = 10;
  RetainOptions retain;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 1;
  Bm25Params bm25;
};

// Full retrieval stage: every voting target document queries the source
// index; a held-out slice of target documents is scored against all sources to
// choose the cumulative cutoff.
inline SelectionResult select_sources(const Corpus& target, const Corpus& source,
                                      const InvertedIndex& index, const SelectionConfig& cfg) {
  const auto map = vocabulary_map(target.vocabulary, source.vocabulary);
  std::vector<std::uint32_t> order(target.documents.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(substream(cfg.seed, "heldout"));
  shuffle(std::span<std::uint32_t>(order), rng);
  const auto n_heldout = static_cast<std::size_t>(
      std::floor(cfg.heldout_fraction * static_cast<double>(order.size())));
  std::vector<bool> is_heldout(order.size(), false);
  for (std::size_t i = 0; i < n_heldout; ++i) is_heldout[order[i]] = true;

  std::vector<std::vector<ScoredDoc>> votes;
  std::vector<std::vector<ScoredDoc>> heldout;
  for (const auto& d : target.documents) {
    const auto q = translate_tokens(d.tokens, map);
    if (is_heldout[d.doc_id]) {
      heldout.push_back(q.empty() ? std::vector<ScoredDoc>{}
                                  : retrieve(index, q, index.doc_count, cfg.bm25));
    } else {
      votes.push_back(q.empty() ? std::vector<ScoredDoc>{} : retrieve(index, q, cfg.top_r, cfg.bm25));
    }
  }
  return retain(index.doc_count, votes, heldout, cfg.retain);
}

inline void write_selection(std::ostream& out, const SelectionResult& sel) {
  std::vector<bool> kept(sel.votes.size(), false);
  for (auto d : sel.retained) kept[d] = true;
  out << "doc_id\tvotes\tcumulative_score\tretained\n";
  char buf[96];
  for (std::size_t d = 0; d < sel.votes.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "%zu\t%u\t%.6f\t%d\n", d, sel.votes[d], sel.cumulative_score[d],
                  kept[d] ? 1 : 0);
    out << buf;
  }
}

// Cosine between the target focus vector of `focus` and the mean target
// context vector of `context` after removing every repetition of the focus
// word. nullopt when nothing is left; 0 for zero-norm vectors.
template <typename Real>
std::optional<double> snippet_cosine(const EmbeddingModel<Real>& tgt, WordId focus,
                                     std::span<const WordId> context) {
  std::vector<double> h(tgt.dim(), 0.0);
  std::size_t n = 0;
  for (WordId c : context) {
    if (c == focus) continue;
    const auto row = tgt.context.row(c);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += static_cast<double>(row[i]);
    ++n;
  }
  if (n == 0) return std::nullopt;
  const auto u = tgt.focus.row(focus);
  double uu = 0.0, hh = 0.0, uh = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = static_cast<double>(u[i]);
    uu += x * x;
    hh += h[i] * h[i];
    uh += x * h[i];
  }
  if (uu == 0.0 || hh == 0.0) return 0.0;
  return uh / std::sqrt(uu * hh);
}

// exp(alpha * cos(u_w, v_C)); 0 when the context holds only the focus word.
template <typename Real>
double sscore(const EmbeddingModel<Real>& tgt, WordId focus, std::span<const WordId> context,
              double alpha = 1.0) {
  const auto c = snippet_cosine(tgt, focus, context);
  return c ? std::exp(alpha * *c) : 0.0;
}

enum class WeightingMode { kContext, kWord, kUnweighted };

struct SnippetWeighting {
  WeightingMode mode = WeightingMode::kContext;
  double alpha = 1.0;
  std::vector<double> word_scores;  // per target id, for kWord
};

// Source documents `doc_ids` expressed in the target vocabulary; words the
// target lacks are dropped, then emptied documents.
inline Corpus import_documents(const Corpus& source, std::span<const std::uint32_t> doc_ids,
                               const Vocabulary& target_vocab) {
  const auto map = vocabulary_map(source.vocabulary, target_vocab);
  Corpus out{target_vocab, {}};
  for (auto id : doc_ids) {
    auto tokens = translate_tokens(source.documents.at(id).tokens, map);
    if (tokens.empty()) continue;
    out.documents.push_back({static_cast<std::uint32_t>(out.documents.size()), std::move(tokens)});
  }
  return out;
}

struct JointOptions {
  // Fraction of non-retained source documents added at random (weighted by
  // sscore); 0.05 gives the random-injection variant.
  double inject_fraction = 0.0;
};

// Uniform sample of round(fraction * |non-retained|) non-retained documents.
inline std::vector<std::uint32_t> random_injection(std::size_t source_doc_count,
                                                   std::span<const std::uint32_t> retained,
                                                   double fraction, std::uint64_t seed) {
  std::vector<bool> kept(source_doc_count, false);
  for (auto d : retained) kept.at(d) = true;
  std::vector<std::uint32_t> pool;
  for (std::uint32_t d = 0; d < source_doc_count; ++d) {
    if (!kept[d]) pool.push_back(d);
  }
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  Rng rng(substream(seed, "inject"));
  shuffle(std::span<std::uint32_t>(pool), rng);
  pool.resize(std::min(n, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Fresh CBOW model trained on all target windows (weight 1, negatives from the
// target distribution) interleaved with windows of the retained source
// documents (weighted per `weighting`, negatives from the imported source
// distribution). Source text is restricted to the target vocabulary, so no
// source-only word ever gets a row.
template <typename Real>
EmbeddingModel<Real> joint_train(const Corpus& target, const Corpus& source,
                                 std::span<const std::uint32_t> retained,
                                 const EmbeddingModel<Real>* scorer,
                                 const SnippetWeighting& weighting, const TrainConfig& cfg,
                                 const JointOptions& opts = {}) {
  if (target.documents.empty()) throw std::invalid_argument("joint_train: target corpus is empty");
  const auto& vocab = target.vocabulary;
  const bool needs_scorer = weighting.mode == WeightingMode::kContext || opts.inject_fraction > 0;
  if (needs_scorer) {
    if (scorer == nullptr) throw std::invalid_argument("joint_train: context weighting needs a target model");
    check_model_matches(*scorer, vocab);
  }
  if (weighting.mode == WeightingMode::kWord && weighting.word_scores.size() != vocab.size()) {
    throw std::invalid_argument("joint_train: word scores are not aligned to the target vocabulary");
  }

  std::vector<std::uint32_t> injected;
  if (opts.inject_fraction > 0) {
    injected = random_injection(source.documents.size(), retained, opts.inject_fraction, cfg.seed);
  }
  std::vector<std::uint32_t> imported_ids(retained.begin(), retained.end());
  imported_ids.insert(imported_ids.end(), injected.begin(), injected.end());
  const Corpus imported_all = import_documents(source, imported_ids, vocab);
  // documents at index >= n_retained_docs came from random injection
  const std::size_t n_retained_docs = import_documents(source, retained, vocab).documents.size();

  auto model = init_model<Real>(vocab, cfg.dim, cfg.seed);
  if (cfg.epochs == 0) return model;

  std::vector<TrainingStream> streams;
  streams.push_back({&target, NegativeSampler(token_counts(target), cfg.distortion), false});
  std::vector<SampleRef> samples;
  collect_samples(target, 0, cfg.window, false, samples);

  if (!imported_all.documents.empty()) {
    streams.push_back({&imported_all, NegativeSampler(token_counts(imported_all), cfg.distortion),
                       cfg.strip_source_focus});
    const auto weight_of = [&](std::uint32_t doc, WordId focus, std::span<const WordId> ctx) {
      if (doc >= n_retained_docs) return sscore(*scorer, focus, ctx, weighting.alpha);
      switch (weighting.mode) {
        case WeightingMode::kContext: return sscore(*scorer, focus, ctx, weighting.alpha);
        case WeightingMode::kWord: return weighting.word_scores[focus];
        case WeightingMode::kUnweighted: return 1.0;
      }
      return 1.0;
    };
    collect_samples(imported_all, 1, cfg.window, cfg.strip_source_focus, weight_of, samples);
  }
  run_sgd<Real>(model, streams, std::move(samples), cfg);
  return model;
}

// Src+Tgt baseline: one corpus made of the target documents followed by every
// source document (restricted to the target vocabulary). Negatives for each
// window come from the distribution of the part its document belongs to.
template <typename Real>
EmbeddingModel<Real> train_concatenated(const Corpus& target, const Corpus& source,
                                        const TrainConfig& cfg) {
  if (target.documents.empty()) throw std::invalid_argument("train_concatenated: empty target");
  const auto& vocab = target.vocabulary;
  const auto map = vocabulary_map(source.vocabulary, vocab);
  Corpus merged{vocab, target.documents};
  const std::size_t n_target = merged.documents.size();
  std::vector<std::uint64_t> target_counts(vocab.size(), 0), source_counts(vocab.size(), 0);
  for (const auto& d : source.documents) {
    auto tokens = translate_tokens(d.tokens, map);
    if (tokens.empty()) continue;
    merged.documents.push_back({static_cast<std::uint32_t>(merged.documents.size()), std::move(tokens)});
  }
  for (std::size_t i = 0; i < merged.documents.size(); ++i) {
    auto& counts = i < n_target ? target_counts : source_counts;
    for (WordId t : merged.documents[i].tokens) ++counts[t];
  }

  auto model = init_model<Real>(vocab, cfg.dim, cfg.seed);
  if (cfg.epochs == 0) return model;
  const bool has_source = merged.documents.size() > n_target;
  std::vector<TrainingStream> streams;
  streams.push_back({&merged, NegativeSampler(target_counts, cfg.distortion), false});
  if (has_source) {
    streams.push_back({&merged, NegativeSampler(source_counts, cfg.distortion), cfg.strip_source_focus});
  }
  std::vector<SampleRef> samples;
  std::vector<WordId> ctx;
  for (const auto& doc : merged.documents) {
    const bool from_source = doc.doc_id >= n_target;
    for (std::size_t pos = 0; pos < doc.tokens.size(); ++pos) {
      if (!fill_context(doc.tokens, pos, cfg.window, from_source && cfg.strip_source_focus, ctx)) {
        continue;
      }
      samples.push_back({doc.doc_id, static_cast<std::uint32_t>(pos), 1.0f, from_source ? 1u : 0u});
    }
  }
  run_sgd<Real>(model, streams, std::move(samples), cfg);
  return model;
}

}  // namespace srcsel
