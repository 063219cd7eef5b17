#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/drift.hpp"
#include "srcsel/rng.hpp"
#include "srcsel/select.hpp"
#include "srcsel/trainer.hpp"
#include "srcsel/windows.hpp"

namespace srcsel {

struct CalibrationConfig {
  std::vector<double> lambda_grid{0.1, 1.0, 10.0, 50.0};
  std::vector<double> alpha_grid{0.5, 1.0, 2.0};
  double heldout_fraction = 0.2;
  std::size_t neighbors = kDefaultNeighbors;
  std::size_t clip_top = kDefaultClipTop;
  std::size_t snippets = 2000;  // sampled windows per scenario
  std::size_t min_heldout_docs = 100;
};

struct CalibrationPoint {
  double lambda = 0.0;
  double alpha = 0.0;
  double wscore_a = 0.0;  // held-out target as source
  double wscore_b = 0.0;  // jumbled held-out target as source
  double sscore_a = 0.0;
  double sscore_b = 0.0;

  double objective() const { return (wscore_a - wscore_b) + (sscore_a - sscore_b); }
};

struct CalibrationResult {
  double lambda_star = 0.0;
  double alpha_star = 0.0;
  std::vector<CalibrationPoint> diagnostics;  // lambda-major, both ascending

  const CalibrationPoint& selected() const {
    for (const auto& p : diagnostics) {
      if (p.lambda == lambda_star && p.alpha == alpha_star) return p;
    }
    throw std::logic_error("calibration result without its selected point");
  }
};

// Stability values and snippet cosines of one scenario; everything the grid
// needs, so each grid point is a cheap re-scoring.
struct ScenarioStats {
  std::vector<double> stability;  // non-clipped shared words
  std::vector<double> cosines;    // sampled source snippets against the main model
};

namespace detail {

inline std::vector<double> sorted_grid(std::vector<double> grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string("calibrate: empty ") + name + " grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

template <typename Real>
ScenarioStats scenario_stats(const Corpus& main, const EmbeddingModel<Real>& main_model,
                             const Corpus& source, const EmbeddingModel<Real>& source_model,
                             const CalibrationConfig& cfg, const TrainConfig& train_cfg,
                             std::uint64_t seed, std::uint64_t scenario) {
  ScenarioStats out;
  const auto report = build_report(source.vocabulary, source_model.focus, main.vocabulary,
                                   main_model.focus, cfg.neighbors, 1.0, cfg.clip_top);
  for (const auto& e : report.entries) {
    if (!e.clipped) out.stability.push_back(e.stability);
  }

  std::vector<std::uint32_t> all_ids(source.documents.size());
  for (std::uint32_t i = 0; i < all_ids.size(); ++i) all_ids[i] = i;
  const Corpus imported = import_documents(source, all_ids, main.vocabulary);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> windows;
  std::vector<WordId> ctx;
  for (const auto& d : imported.documents) {
    for (std::uint32_t pos = 0; pos < d.tokens.size(); ++pos) {
      if (fill_context(d.tokens, pos, train_cfg.window, true, ctx)) windows.emplace_back(d.doc_id, pos);
    }
  }
  Rng rng(substream(seed, "snippets", scenario));
  shuffle(std::span(windows), rng);
  if (windows.size() > cfg.snippets) windows.resize(cfg.snippets);
  for (const auto& [doc, pos] : windows) {
    const auto& tokens = imported.documents[doc].tokens;
    fill_context(tokens, pos, train_cfg.window, true, ctx);
    if (const auto c = snippet_cosine(main_model, tokens[pos], ctx)) out.cosines.push_back(*c);
  }
  return out;
}

inline double mean_wscore(const std::vector<double>& stability, double lambda) {
  if (stability.empty()) return 0.0;
  double s = 0.0;
  for (double v : stability) s += std::max(0.0, std::tanh(lambda * v));
  return s / static_cast<double>(stability.size());
}

// sscore divided by e^alpha, so the score lies in (0, 1] for any alpha.
inline double mean_normalized_sscore(const std::vector<double>& cosines, double alpha) {
  if (cosines.empty()) return 0.0;
  double s = 0.0;
  for (double c : cosines) s += std::exp(alpha * (c - 1.0));
  return s / static_cast<double>(cosines.size());
}

}  // namespace detail

// Grid evaluation over precomputed scenario statistics. The selected point
// maximizes (wA - wB) + (sA - sB), ties to the smaller lambda, then alpha.
inline CalibrationResult select_grid_point(const ScenarioStats& a, const ScenarioStats& b,
                                           const std::vector<double>& lambda_grid,
                                           const std::vector<double>& alpha_grid) {
  const auto lambdas = detail::sorted_grid(lambda_grid, "lambda");
  const auto alphas = detail::sorted_grid(alpha_grid, "alpha");
  for (double l : lambdas) {
    if (!(l > 0)) throw std::invalid_argument("calibrate: lambda must be positive");
  }
  CalibrationResult res;
  bool chosen = false;
  double best = 0.0;
  for (double l : lambdas) {
    const double wa = detail::mean_wscore(a.stability, l);
    const double wb = detail::mean_wscore(b.stability, l);
    for (double al : alphas) {
      CalibrationPoint p{l, al, wa, wb, detail::mean_normalized_sscore(a.cosines, al),
                         detail::mean_normalized_sscore(b.cosines, al)};
      if (!chosen || p.objective() > best) {
        best = p.objective();
        res.lambda_star = l;
        res.alpha_star = al;
        chosen = true;
      }
      res.diagnostics.push_back(p);
    }
  }
  return res;
}

// Held-out/main split of the target documents; the held-out ids come first in
// a seeded shuffle.
inline std::pair<Corpus, Corpus> calibration_split(const Corpus& target, double heldout_fraction,
                                                   std::uint64_t seed, std::size_t min_heldout) {
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw std::invalid_argument("calibrate: heldout_fraction must lie in (0, 1)");
  }
  std::vector<std::uint32_t> order(target.documents.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(substream(seed, "calibration-split"));
  shuffle(std::span<std::uint32_t>(order), rng);
  const auto n_heldout = static_cast<std::size_t>(
      std::llround(heldout_fraction * static_cast<double>(order.size())));
  if (n_heldout < min_heldout || n_heldout >= order.size()) {
    throw std::invalid_argument("calibrate: held-out slice has " + std::to_string(n_heldout) +
                                " documents, need at least " + std::to_string(min_heldout) +
                                " and a non-empty main slice");
  }
  std::vector<std::uint32_t> heldout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_heldout));
  std::vector<std::uint32_t> main(order.begin() + static_cast<std::ptrdiff_t>(n_heldout), order.end());
  std::sort(heldout.begin(), heldout.end());
  std::sort(main.begin(), main.end());
  return {compact(subset(target, main)), compact(subset(target, heldout))};
}

// Tunes lambda and alpha with the jumbled-vocabulary control: the target is
// split into main and held-out slices, and embeddings are trained on the main
// slice, the held-out slice (scenario A source) and a vocabulary-permuted copy
// of the held-out slice (scenario B source).
template <typename Real>
CalibrationResult calibrate(const Corpus& target, const CalibrationConfig& cfg,
                            const TrainConfig& train_cfg) {
  // validate grids before any training
  detail::sorted_grid(cfg.lambda_grid, "lambda");
  detail::sorted_grid(cfg.alpha_grid, "alpha");
  const auto [main, heldout] =
      calibration_split(target, cfg.heldout_fraction, train_cfg.seed, cfg.min_heldout_docs);
  const Corpus jumbled = permute_vocabulary(heldout, train_cfg.seed);
  const auto main_model = train<Real>(main, train_cfg);
  const auto heldout_model = train<Real>(heldout, train_cfg);
  const auto jumbled_model = train<Real>(jumbled, train_cfg);
  const auto a = detail::scenario_stats(main, main_model, heldout, heldout_model, cfg, train_cfg,
                                        train_cfg.seed, 0);
  const auto b = detail::scenario_stats(main, main_model, jumbled, jumbled_model, cfg, train_cfg,
                                        train_cfg.seed, 1);
  return select_grid_point(a, b, cfg.lambda_grid, cfg.alpha_grid);
}

inline void write_calibration(std::ostream& out, const CalibrationResult& res) {
  out << "lambda\talpha\twscore_a\twscore_b\tsscore_a\tsscore_b\tobjective\tselected\n";
  char buf[192];
  for (const auto& p : res.diagnostics) {
    const bool sel = p.lambda == res.lambda_star && p.alpha == res.alpha_star;
    std::snprintf(buf, sizeof(buf), "%g\t%g\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n", p.lambda, p.alpha,
                  p.wscore_a, p.wscore_b, p.sscore_a, p.sscore_b, p.objective(), sel ? 1 : 0);
    out << buf;
  }
}

}  // namespace srcsel
