#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "srcsel/eval.hpp"
#include "srcsel/synthetic.hpp"
#include "srcsel/trainer.hpp"

namespace srcsel {
namespace {

using Strings = std::vector<std::string>;

Corpus corpus_of(const std::vector<Strings>& docs) { return encode(docs, build_vocabulary(docs, 1)); }

EmbeddingModel<double> random_model(const Vocabulary& v, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingModel<double> m{Matrix<double>(v.size(), dim), Matrix<double>(v.size(), dim), v.hash()};
  for (auto& x : m.focus.data()) x = rng.uniform(-1, 1);
  for (auto& x : m.context.data()) x = rng.uniform(-1, 1);
  return m;
}

TEST(Awpp, IdenticalRowsGiveOneOverNPlusOne) {
  const auto c = corpus_of({{"a", "b", "c", "a"}, {"d", "b"}});
  EmbeddingModel<double> m{Matrix<double>(4, 3), Matrix<double>(4, 3), c.vocabulary.hash()};
  for (auto& x : m.focus.data()) x = 0.5;
  for (auto& x : m.context.data()) x = 2.0;
  for (std::uint32_t n : {1u, 3u, 10u}) {
    const auto r = awpp(m, c, {.n_negatives = n});
    EXPECT_NEAR(r.mean_probability, 1.0 / (n + 1), 1e-12);
    EXPECT_NEAR(r.perplexity, n + 1.0, 1e-9);
    EXPECT_EQ(r.samples, 6u);
  }
}

// Every window evaluated directly: context = tokens within `window` of the
// focus, negatives drawn in window order from the same unigram sampler.
double awpp_oracle(const EmbeddingModel<double>& m, const Corpus& c, std::uint32_t n, std::uint64_t seed,
                   std::uint32_t window) {
  const NegativeSampler unigram(c.vocabulary.counts(), 1.0);
  Rng rng(substream(seed, "awpp"));
  const auto cos = [&](WordId w, const std::vector<double>& h) {
    double d = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      d += m.focus(w, i) * h[i];
      a += m.focus(w, i) * m.focus(w, i);
      b += h[i] * h[i];
    }
    return d / std::sqrt(a * b);
  };
  double sum = 0;
  int count = 0;
  for (const auto& doc : c.documents) {
    const auto len = static_cast<long>(doc.tokens.size());
    for (long p = 0; p < len; ++p) {
      std::vector<double> h(m.dim(), 0.0);
      int nctx = 0;
      for (long q = std::max(0L, p - long(window)); q <= std::min(len - 1, p + long(window)); ++q) {
        if (q == p) continue;
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += m.context(doc.tokens[q], i);
        ++nctx;
      }
      if (nctx == 0) continue;
      for (auto& x : h) x /= nctx;
      const double pos = std::exp(cos(doc.tokens[p], h));
      double denom = pos;
      for (std::uint32_t k = 0; k < n; ++k) denom += std::exp(cos(unigram.sample(rng), h));
      sum += pos / denom;
      ++count;
    }
  }
  return sum / count;
}

TEST(Awpp, MatchesDirectWindowOracle) {
  const auto c = corpus_of({{"the", "cat", "sat", "on", "the", "mat"},
                            {"a", "dog", "ran"},
                            {"the", "dog", "sat", "on", "a", "cat", "again", "and", "again"}});
  const auto m = random_model(c.vocabulary, 5, 3);
  for (std::uint32_t window : {1u, 2u, 5u}) {
    const auto r = awpp(m, c, {.n_negatives = 2, .seed = 11, .window = window});
    EXPECT_NEAR(r.mean_probability, awpp_oracle(m, c, 2, 11, window), 1e-12);
  }
}

struct TrainedWorld {
  Corpus corpus;
  EmbeddingModel<float> trained;
  EmbeddingModel<float> untrained;

  TrainedWorld() {
    synthetic::TopicWorld world({.topics = 6, .words_per_topic = 20, .function_words = 6});
    const auto docs = world.corpus(500, 4);
    corpus = corpus_of(docs);
    TrainConfig cfg;
    cfg.dim = 24;
    cfg.epochs = 5;
    trained = train<float>(corpus, cfg);
    untrained = init_model<float>(corpus.vocabulary, 24, 99);
  }
};

TEST(Awpp, TrainedBeatsRandomInit) {
  TrainedWorld w;
  const auto t = awpp(w.trained, w.corpus, {});
  const auto u = awpp(w.untrained, w.corpus, {});
  EXPECT_GT(t.mean_probability, u.mean_probability);
  EXPECT_GT(t.mean_probability, 0.0);
  EXPECT_LT(t.mean_probability, 1.0);
  EXPECT_LT(t.perplexity, u.perplexity);
}

TEST(Awpp, NonIncreasingInNegatives) {
  TrainedWorld w;
  double prev = 1.0;
  for (std::uint32_t n : {1u, 5u, 20u}) {
    const double p = awpp(w.trained, w.corpus, {.n_negatives = n}).mean_probability;
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Awpp, InvariantToPositiveScaling) {
  const auto c = corpus_of({{"a", "b", "c", "d", "a", "c"}, {"b", "d", "a"}});
  const auto m = random_model(c.vocabulary, 4, 7);
  auto s = m;
  for (auto& x : s.focus.data()) x *= 3.0;
  for (auto& x : s.context.data()) x *= 0.25;
  EXPECT_NEAR(awpp(m, c, {}).mean_probability, awpp(s, c, {}).mean_probability, 1e-12);
}

TEST(Awpp, Errors) {
  const auto c = corpus_of({{"a", "b"}});
  const auto m = random_model(c.vocabulary, 4, 7);
  EXPECT_THROW(awpp(m, c, {.n_negatives = 0}), std::invalid_argument);
  const auto other = corpus_of({{"x", "y"}});
  EXPECT_THROW(awpp(m, other, {}), std::runtime_error);
}

WordVectors vectors_of(const Strings& words, const Matrix<double>& m) {
  WordVectors v{words, Matrix<float>(m.rows(), m.cols())};
  for (std::size_t i = 0; i < m.data().size(); ++i) v.vectors.data()[i] = static_cast<float>(m.data()[i]);
  return v;
}

TEST(NeighborTable, DuplicateListedFirstAndMissingFlagged) {
  Rng rng(5);
  Matrix<double> m(6, 3);
  for (auto& x : m.data()) x = rng.uniform(-1, 1);
  std::ranges::copy(m.row(2), m.row(5).begin());
  const Strings words{"a", "b", "c", "d", "e", "c2"};
  const std::vector<NamedVectors> models{{"one", vectors_of(words, m)}, {"two", vectors_of(words, m)}};
  const auto rows = neighbor_table(models, {"c", "zzz"}, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].columns[0].neighbors[0].first, "c2");
  EXPECT_NEAR(rows[0].columns[0].neighbors[0].second, 1.0, 1e-6);
  EXPECT_EQ(rows[0].columns[0].neighbors, rows[0].columns[1].neighbors);
  EXPECT_TRUE(rows[1].columns[0].missing);
  EXPECT_TRUE(rows[1].columns[1].missing);
}

TEST(NeighborTable, AgreesWithExhaustiveSearch) {
  Rng rng(8);
  Matrix<double> m(50, 6);
  for (auto& x : m.data()) x = rng.uniform(-1, 1);
  Strings words;
  for (int i = 0; i < 50; ++i) words.push_back("w" + std::to_string(i));
  const auto wv = vectors_of(words, m);
  const auto rows = neighbor_table({{"m", wv}}, words, 10);
  for (std::size_t q = 0; q < 50; ++q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t c = 0; c < 50; ++c) {
      if (c == q) continue;
      double d = 0, a = 0, b = 0;
      for (std::size_t i = 0; i < 6; ++i) {
        const double x = wv.vectors(q, i), y = wv.vectors(c, i);
        d += x * y;
        a += x * x;
        b += y * y;
      }
      all.emplace_back(-d / std::sqrt(a * b), c);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t k = 0; k < 10; ++k) {
      EXPECT_EQ(rows[q].columns[0].neighbors[k].first, words[all[k].second]);
    }
  }
}

TEST(NeighborTable, AlignedTextLayout) {
  Matrix<double> m(3, 2);
  m(0, 0) = 1;
  m(1, 0) = 1;
  m(1, 1) = 1;
  m(2, 1) = 1;
  const std::vector<NamedVectors> models{{"left", vectors_of({"x", "y", "z"}, m)},
                                         {"right", vectors_of({"x", "y", "q"}, m)}};
  const auto rows = neighbor_table(models, {"z"}, 2);
  std::ostringstream out;
  write_neighbor_table(out, models, rows, 2);
  EXPECT_EQ(out.str(),
            "== z\n"
            "left                        right                       \n"
            "y                    0.7071  (missing)\n"
            "x                    0.0000\n");
}

std::vector<LabeledDoc> cluster_docs(std::size_t per_class, std::uint64_t seed,
                                     const std::vector<std::string>& labels) {
  Rng rng(seed);
  std::vector<LabeledDoc> docs;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledDoc d{labels[c], {}};
      for (int k = 0; k < 6; ++k) d.tokens.push_back(labels[c] + std::to_string(rng.below(5)));
      if (i % 3 == 0) d.tokens.push_back("unknown-token");
      docs.push_back(d);
    }
  }
  return docs;
}

// Class c words point along axis c with a little noise.
WordVectors cluster_vectors(const std::vector<std::string>& labels, std::size_t dim) {
  Rng rng(1);
  WordVectors v;
  v.vectors = Matrix<float>(labels.size() * 5, dim);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (int k = 0; k < 5; ++k) {
      const auto row = v.words.size();
      v.words.push_back(labels[c] + std::to_string(k));
      for (std::size_t i = 0; i < dim; ++i) v.vectors(row, i) = static_cast<float>(rng.uniform(-0.2, 0.2));
      v.vectors(row, c) += 1.0f;
    }
  }
  return v;
}

TEST(Classifier, SeparableClassesTrainToPerfectAccuracy) {
  const std::vector<std::string> labels{"p", "q"};
  const auto docs = cluster_docs(40, 2, labels);
  const auto emb = cluster_vectors(labels, 4);
  const auto m = train_classifier(docs, emb, 30, 0.5);
  const auto metrics = classifier_metrics(m, docs, emb);
  EXPECT_EQ(metrics.micro, 1.0);
  EXPECT_EQ(metrics.macro, 1.0);
  EXPECT_EQ(metrics.rare_macro, 1.0);
}

TEST(Classifier, ZeroEpochsPredictsOneClass) {
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  const auto docs = cluster_docs(10, 3, labels);
  const auto emb = cluster_vectors(labels, 6);
  const auto m = train_classifier(docs, emb, 0, 0.5);
  const auto metrics = classifier_metrics(m, docs, emb);
  EXPECT_DOUBLE_EQ(metrics.micro, 0.25);
  EXPECT_DOUBLE_EQ(metrics.macro, 0.25);
}

TEST(Classifier, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    ClassifierModel m;
    m.labels = {"a", "b", "c"};
    m.train_counts = {1, 1, 1};
    m.weights = Matrix<double>(3, 5);
    m.bias = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (auto& x : m.weights.data()) x = rng.uniform(-1, 1);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const std::size_t y = rng.below(3);
    Matrix<double> gw;
    std::vector<double> gb;
    classifier_gradient(m, x, y, gw, gb);
    const double h = 1e-6;
    const auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = classifier_loss(m, x, y);
      param = keep - h;
      const double down = classifier_loss(m, x, y);
      param = keep;
      const double fd = (up - down) / (2 * h);
      EXPECT_LT(std::abs(fd - analytic) / std::max(1e-8, std::abs(fd) + std::abs(analytic)), 1e-4);
    };
    for (std::size_t i = 0; i < gw.data().size(); ++i) check(m.weights.data()[i], gw.data()[i]);
    for (std::size_t c = 0; c < 3; ++c) check(m.bias[c], gb[c]);
  }
}

TEST(Classifier, SingleClassIsAnError) {
  const auto docs = cluster_docs(5, 1, {"only"});
  EXPECT_THROW(train_classifier(docs, cluster_vectors({"only"}, 3), 1, 0.1), std::invalid_argument);
}

TEST(Classifier, EmptyDocumentsKeepZeroFeatures) {
  const std::vector<std::string> labels{"p", "q"};
  const auto emb = cluster_vectors(labels, 4);
  auto docs = cluster_docs(5, 2, labels);
  docs.push_back({"p", {"nothing", "known"}});
  const auto m = train_classifier(docs, emb, 5, 0.5);
  const auto fs = featurize(docs, emb, m.labels);
  EXPECT_EQ(fs.empty_docs, 1u);
  for (double v : fs.x.back()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(classifier_metrics(m, docs, emb).empty_docs, 1u);
  std::vector<LabeledDoc> unseen{{"zzz", {"p1"}}};
  EXPECT_THROW(classifier_metrics(m, unseen, emb), std::invalid_argument);
}

TEST(Classifier, FeaturesAverageUnitVectors) {
  WordVectors v{{"a", "b"}, Matrix<float>(2, 2)};
  v.vectors(0, 0) = 3.0f;
  v.vectors(1, 1) = 0.5f;
  const auto fs = featurize({{"x", {"a", "b", "b", "oov"}}}, v, {"x"});
  EXPECT_NEAR(fs.x[0][0], 1.0 / 3, 1e-12);
  EXPECT_NEAR(fs.x[0][1], 2.0 / 3, 1e-12);
}

ClassifierModel three_class_model() {
  ClassifierModel m;
  m.labels = {"a", "b", "c"};
  m.train_counts = {5, 3, 1};
  return m;
}

TEST(ClassifierMetrics, PerfectPredictions) {
  const auto m = three_class_model();
  const std::vector<std::size_t> t{0, 1, 2, 2, 1};
  const auto r = classifier_metrics(m, t, t);
  EXPECT_EQ(r.micro, 1.0);
  EXPECT_EQ(r.macro, 1.0);
  EXPECT_EQ(r.rare_macro, 1.0);
}

TEST(ClassifierMetrics, HandBuiltConfusion) {
  // recall a 3/4, b 1/2, c 1/2; rare classes are c (1 doc) and b (3 docs)
  const auto m = three_class_model();
  const std::vector<std::size_t> truth{0, 0, 0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> pred{0, 0, 0, 2, 1, 0, 2, 0};
  const auto r = classifier_metrics(m, truth, pred);
  EXPECT_DOUBLE_EQ(r.micro, 5.0 / 8);
  EXPECT_NEAR(r.macro, (0.75 + 0.5 + 0.5) / 3, 1e-15);
  EXPECT_DOUBLE_EQ(r.rare_macro, 0.5);
}

TEST(ClassifierMetrics, AllOneClassOnBalancedFourClasses) {
  ClassifierModel m;
  m.labels = {"a", "b", "c", "d"};
  m.train_counts = {4, 4, 4, 4};
  std::vector<std::size_t> truth, pred;
  for (std::size_t c = 0; c < 4; ++c) {
    for (int i = 0; i < 3; ++i) {
      truth.push_back(c);
      pred.push_back(1);
    }
  }
  const auto r = classifier_metrics(m, truth, pred);
  EXPECT_DOUBLE_EQ(r.micro, 0.25);
  EXPECT_DOUBLE_EQ(r.macro, 0.25);
}

TEST(ClassifierMetrics, InvariantToDocumentOrder) {
  const std::vector<std::string> labels{"a", "b", "c"};
  const auto emb = cluster_vectors(labels, 5);
  auto docs = cluster_docs(8, 6, labels);
  const auto m = train_classifier(docs, emb, 2, 0.05);
  const auto before = classifier_metrics(m, docs, emb);
  Rng rng(3);
  shuffle(std::span<LabeledDoc>(docs), rng);
  const auto after = classifier_metrics(m, docs, emb);
  EXPECT_EQ(before.micro, after.micro);
  EXPECT_EQ(before.macro, after.macro);
  EXPECT_EQ(before.rare_macro, after.rare_macro);
}

TEST(LabeledDocs, ReadsTabSeparatedLines) {
  std::istringstream in("sports\tThe Ball game\n\nphysics\tx-ray beams\n");
  const auto docs = read_labeled_docs(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].label, "sports");
  EXPECT_EQ(docs[0].tokens, (Strings{"the", "ball", "game"}));
  EXPECT_EQ(docs[1].tokens, (Strings{"x-ray", "beams"}));
  std::istringstream bad("no tab here\n");
  EXPECT_THROW(read_labeled_docs(bad), FormatError);
}

}  // namespace
}  // namespace srcsel
