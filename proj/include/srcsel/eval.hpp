#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/drift.hpp"
#include "srcsel/matrix.hpp"
#include "srcsel/model.hpp"
#include "srcsel/sampler.hpp"
#include "srcsel/windows.hpp"

namespace srcsel {

struct AwppConfig {
  std::uint32_t n_negatives = 10;
  std::uint64_t seed = 1;
  std::uint32_t window = 5;
};

struct AwppResult {
  double mean_probability = 0.0;
  // exp(-mean log p): a perplexity-style companion number
  double perplexity = 0.0;
  std::uint64_t samples = 0;
};

// Average word prediction probability: for every window,
//   p = exp(cos(u_w, v_C)) / sum_{x in {w, x_1..x_n}} exp(cos(u_x, v_C))
// with x_i drawn from the plain unigram distribution of the corpus
// vocabulary, averaged over all focus positions.
template <typename Real>
AwppResult awpp(const EmbeddingModel<Real>& model, const Corpus& corpus, const AwppConfig& cfg) {
  if (cfg.n_negatives == 0) throw std::invalid_argument("awpp: n_negatives must be positive");
  check_model_matches(model, corpus.vocabulary);
  const NegativeSampler unigram(corpus.vocabulary.counts(), 1.0);
  const auto norms = detail::row_norms(model.focus);
  Rng rng(substream(cfg.seed, "awpp"));
  std::vector<double> h(model.dim());
  double sum_p = 0.0, sum_log = 0.0;
  std::uint64_t n = 0;
  const auto cos_to_h = [&](WordId x, double h_norm) {
    if (norms[x] == 0.0 || h_norm == 0.0) return 0.0;
    const auto u = model.focus.row(x);
    double d = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) d += static_cast<double>(u[i]) * h[i];
    return d / (norms[x] * h_norm);
  };
  for_each_window(corpus, {.window = cfg.window}, [&](const WindowSample& s) {
    std::fill(h.begin(), h.end(), 0.0);
    for (WordId c : s.context) {
      const auto row = model.context.row(c);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += static_cast<double>(row[i]);
    }
    for (auto& x : h) x /= static_cast<double>(s.context.size());
    double hn = 0.0;
    for (double x : h) hn += x * x;
    hn = std::sqrt(hn);
    const double pos = std::exp(cos_to_h(s.focus, hn));
    double denom = pos;
    for (std::uint32_t k = 0; k < cfg.n_negatives; ++k) {
      denom += std::exp(cos_to_h(unigram.sample(rng), hn));
    }
    const double p = pos / denom;
    sum_p += p;
    sum_log += std::log(p);
    ++n;
  });
  AwppResult r;
  r.samples = n;
  if (n > 0) {
    r.mean_probability = sum_p / static_cast<double>(n);
    r.perplexity = std::exp(-sum_log / static_cast<double>(n));
  }
  return r;
}

struct NamedVectors {
  std::string name;
  WordVectors vectors;
};

struct NeighborColumn {
  bool missing = false;
  std::vector<std::pair<std::string, double>> neighbors;
};

struct NeighborRow {
  std::string probe;
  std::vector<NeighborColumn> columns;  // one per model
};

// K nearest neighbors of each probe in every model, side by side.
inline std::vector<NeighborRow> neighbor_table(const std::vector<NamedVectors>& models,
                                               const std::vector<std::string>& probes,
                                               std::size_t k) {
  std::vector<std::vector<WordId>> all_ids;
  std::vector<std::vector<double>> all_norms;
  for (const auto& m : models) {
    std::vector<WordId> ids(m.vectors.words.size());
    for (WordId i = 0; i < ids.size(); ++i) ids[i] = i;
    all_ids.push_back(std::move(ids));
    all_norms.push_back(detail::row_norms(m.vectors.vectors));
  }
  std::vector<NeighborRow> rows;
  for (const auto& probe : probes) {
    NeighborRow row{probe, {}};
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const auto& m = models[mi];
      NeighborColumn col;
      const auto q = m.vectors.find(probe);
      if (!q || all_norms[mi][*q] == 0.0) {
        col.missing = true;
      } else {
        for (const auto& nb : detail::knn_with_norms(m.vectors.vectors, all_norms[mi],
                                                     static_cast<WordId>(*q), k, all_ids[mi])) {
          col.neighbors.emplace_back(m.vectors.words[nb.id], nb.cosine);
        }
      }
      row.columns.push_back(std::move(col));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_neighbor_table(std::ostream& out, const std::vector<NamedVectors>& models,
                                 const std::vector<NeighborRow>& rows, std::size_t k) {
  constexpr int kWidth = 28;
  char cell[128];
  for (const auto& row : rows) {
    out << "== " << row.probe << '\n';
    for (const auto& m : models) {
      std::snprintf(cell, sizeof(cell), "%-*s", kWidth, m.name.c_str());
      out << cell;
    }
    out << '\n';
    for (std::size_t r = 0; r < k; ++r) {
      bool any = false;
      std::string line;
      for (const auto& col : row.columns) {
        if (col.missing) {
          std::snprintf(cell, sizeof(cell), "%-*s", kWidth, r == 0 ? "(missing)" : "");
        } else if (r < col.neighbors.size()) {
          any = true;
          std::snprintf(cell, sizeof(cell), "%-18s %8.4f  ", col.neighbors[r].first.c_str(),
                        col.neighbors[r].second);
        } else {
          std::snprintf(cell, sizeof(cell), "%-*s", kWidth, "");
        }
        line += cell;
      }
      if (!any && r > 0) break;
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << '\n';
    }
  }
}

struct LabeledDoc {
  std::string label;
  std::vector<std::string> tokens;
};

// One-layer softmax regression over averaged unit-length word vectors.
struct ClassifierModel {
  std::vector<std::string> labels;
  std::vector<std::size_t> train_counts;  // training documents per class
  Matrix<double> weights;                 // classes x dim
  std::vector<double> bias;

  std::size_t classes() const { return labels.size(); }
};

struct FeatureSet {
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  std::size_t empty_docs = 0;  // documents with no known token (zero feature)
};

// Averages the unit-normalized vectors of known tokens; unknown tokens are
// dropped and an all-unknown document gets the zero vector.
inline std::vector<double> document_features(const std::vector<std::string>& tokens,
                                             const WordVectors& emb,
                                             const std::unordered_map<std::string, std::size_t>& index,
                                             const std::vector<double>& norms, bool& empty) {
  std::vector<double> f(emb.vectors.cols(), 0.0);
  std::size_t n = 0;
  for (const auto& t : tokens) {
    const auto it = index.find(t);
    if (it == index.end()) continue;
    const double nv = norms[it->second];
    if (nv == 0.0) continue;
    const auto row = emb.vectors.row(it->second);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += row[i] / nv;
    ++n;
  }
  empty = n == 0;
  if (n > 0) {
    for (auto& x : f) x /= static_cast<double>(n);
  }
  return f;
}

inline FeatureSet featurize(const std::vector<LabeledDoc>& docs, const WordVectors& emb,
                            const std::vector<std::string>& labels) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < emb.words.size(); ++i) index.emplace(emb.words[i], i);
  const auto norms = detail::row_norms(emb.vectors);
  FeatureSet fs;
  for (const auto& d : docs) {
    const auto it = std::find(labels.begin(), labels.end(), d.label);
    if (it == labels.end()) throw std::invalid_argument("unknown class label: " + d.label);
    bool empty = false;
    fs.x.push_back(document_features(d.tokens, emb, index, norms, empty));
    fs.y.push_back(static_cast<std::size_t>(it - labels.begin()));
    fs.empty_docs += empty ? 1 : 0;
  }
  return fs;
}

inline std::vector<double> class_probabilities(const ClassifierModel& m, const std::vector<double>& x) {
  std::vector<double> z(m.classes());
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = m.bias[c];
    for (std::size_t i = 0; i < x.size(); ++i) z[c] += m.weights(c, i) * x[i];
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) sum += (v = std::exp(v - mx));
  for (auto& v : z) v /= sum;
  return z;
}

// Cross-entropy of one example.
inline double classifier_loss(const ClassifierModel& m, const std::vector<double>& x, std::size_t y) {
  return -std::log(class_probabilities(m, x)[y]);
}

// Gradient of classifier_loss: dW = (p - onehot(y)) x^T, db = p - onehot(y).
inline void classifier_gradient(const ClassifierModel& m, const std::vector<double>& x, std::size_t y,
                                Matrix<double>& grad_w, std::vector<double>& grad_b) {
  auto p = class_probabilities(m, x);
  p[y] -= 1.0;
  grad_w = Matrix<double>(m.classes(), x.size());
  grad_b = p;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    for (std::size_t i = 0; i < x.size(); ++i) grad_w(c, i) = p[c] * x[i];
  }
}

inline std::size_t predict(const ClassifierModel& m, const std::vector<double>& x) {
  const auto p = class_probabilities(m, x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

inline ClassifierModel train_classifier(const std::vector<LabeledDoc>& docs, const WordVectors& emb,
                                        std::uint32_t epochs, double lr, std::uint64_t seed = 1) {
  ClassifierModel m;
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) ++counts[d.label];
  if (counts.size() < 2) throw std::invalid_argument("train_classifier: need at least two classes");
  for (const auto& [label, n] : counts) {
    m.labels.push_back(label);
    m.train_counts.push_back(n);
  }
  m.weights = Matrix<double>(m.classes(), emb.vectors.cols());
  m.bias.assign(m.classes(), 0.0);
  const auto fs = featurize(docs, emb, m.labels);
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(substream(seed, "classifier"));
  Matrix<double> gw;
  std::vector<double> gb;
  for (std::uint32_t e = 0; e < epochs; ++e) {
    shuffle(std::span<std::size_t>(order), rng);
    for (auto i : order) {
      classifier_gradient(m, fs.x[i], fs.y[i], gw, gb);
      for (std::size_t k = 0; k < gw.data().size(); ++k) m.weights.data()[k] -= lr * gw.data()[k];
      for (std::size_t c = 0; c < gb.size(); ++c) m.bias[c] -= lr * gb[c];
    }
  }
  return m;
}

struct ClassifierMetrics {
  double micro = 0.0;
  double macro = 0.0;
  double rare_macro = 0.0;  // macro over the ceil(C/2) classes rarest in training
  std::size_t empty_docs = 0;
};

// Per-class accuracy is recall; macro averages it over classes present in
// the test set.
inline ClassifierMetrics classifier_metrics(const ClassifierModel& m, const std::vector<std::size_t>& truth,
                                            const std::vector<std::size_t>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("metrics: size mismatch");
  const std::size_t C = m.classes();
  std::vector<double> hit(C, 0.0), total(C, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    total[truth[i]] += 1.0;
    if (truth[i] == predicted[i]) {
      hit[truth[i]] += 1.0;
      correct += 1.0;
    }
  }
  ClassifierMetrics out;
  if (truth.empty()) return out;
  out.micro = correct / static_cast<double>(truth.size());
  std::vector<std::size_t> order(C);
  for (std::size_t c = 0; c < C; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return m.train_counts[a] < m.train_counts[b]; });
  const std::size_t n_rare = (C + 1) / 2;
  const auto macro_over = [&](auto begin, auto end) {
    double s = 0.0;
    std::size_t n = 0;
    for (auto it = begin; it != end; ++it) {
      if (total[*it] == 0.0) continue;
      s += hit[*it] / total[*it];
      ++n;
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
  };
  out.macro = macro_over(order.begin(), order.end());
  out.rare_macro = macro_over(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_rare));
  return out;
}

inline ClassifierMetrics classifier_metrics(const ClassifierModel& m, const std::vector<LabeledDoc>& test,
                                            const WordVectors& emb) {
  const auto fs = featurize(test, emb, m.labels);
  std::vector<std::size_t> pred;
  for (const auto& x : fs.x) pred.push_back(predict(m, x));
  auto out = classifier_metrics(m, fs.y, pred);
  out.empty_docs = fs.empty_docs;
  return out;
}

// TSV `label<TAB>text` per line.
inline std::vector<LabeledDoc> read_labeled_docs(std::istream& in) {
  std::vector<LabeledDoc> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("labeled document without a tab");
    docs.push_back({line.substr(0, tab), tokenize(std::string_view(line).substr(tab + 1))});
  }
  return docs;
}

}  // namespace srcsel
