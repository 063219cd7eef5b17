#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srcsel/benchmark.hpp"
#include "srcsel/bm25.hpp"
#include "srcsel/calibrate.hpp"
#include "srcsel/cbow.hpp"
#include "srcsel/drift.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/pipeline.hpp"
#include "srcsel/select.hpp"
#include "srcsel/synthetic.hpp"
#include "srcsel/trainer.hpp"

namespace fs = std::filesystem;
using namespace srcsel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

using Strings = std::vector<std::string>;

Corpus corpus_of(const std::vector<Strings>& docs, std::uint64_t min_count = 1) {
  return encode(docs, build_vocabulary(docs, min_count));
}

// 1. Gradients against central finite differences.

// Relative L2 error between the update applied by one lr = 1 step and the
// finite-difference gradient of sample_loss over every touched parameter.
double step_gradient_error(Rng& rng, double weight, bool with_reg) {
  const std::size_t V = 6, dim = 8;
  EmbeddingModel<double> m{Matrix<double>(V, dim), Matrix<double>(V, dim), 0};
  for (auto& x : m.focus.data()) x = rng.uniform(-1, 1);
  for (auto& x : m.context.data()) x = rng.uniform(-1, 1);
  const auto focus = static_cast<WordId>(rng.below(V));
  std::vector<WordId> ctx, neg;
  const auto n_ctx = 1 + rng.below(4);
  for (std::uint64_t i = 0; i < n_ctx; ++i) ctx.push_back(static_cast<WordId>(rng.below(V)));
  for (int i = 0; i < 3; ++i) {
    WordId n;
    do n = static_cast<WordId>(rng.below(V)); while (n == focus);
    neg.push_back(n);
  }
  Regularizer<double> reg{Matrix<double>(V, dim), std::vector<double>(V, 0.0), rng.uniform(0.05, 0.4)};
  for (auto& x : reg.source_focus.data()) x = rng.uniform(-1, 1);
  for (auto& s : reg.score) s = rng.uniform(0.2, 1.0);
  const Regularizer<double>* rp = with_reg ? &reg : nullptr;

  auto stepped = m;
  StepWorkspace<double> ws;
  cbow_update<double>(stepped, focus, ctx, neg, 1.0, weight, rp, ws);
  const auto original = m;

  const double h = 1e-5;
  double err2 = 0, ref2 = 0;
  const auto check = [&](Matrix<double>& param, const Matrix<double>& after, const Matrix<double>& before,
                         WordId row) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double keep = param(row, j);
      param(row, j) = keep + h;
      const double up = sample_loss<double>(m, focus, ctx, neg, weight, rp);
      param(row, j) = keep - h;
      const double down = sample_loss<double>(m, focus, ctx, neg, weight, rp);
      param(row, j) = keep;
      const double fd = (up - down) / (2 * h);
      const double analytic = before(row, j) - after(row, j);
      err2 += (fd - analytic) * (fd - analytic);
      ref2 += fd * fd;
    }
  };
  std::set<WordId> outs{focus};
  outs.insert(neg.begin(), neg.end());
  for (WordId r : outs) check(m.focus, stepped.focus, original.focus, r);
  for (WordId r : std::set<WordId>(ctx.begin(), ctx.end())) check(m.context, stepped.context, original.context, r);
  return std::sqrt(err2 / ref2);
}

double classifier_gradient_error(Rng& rng) {
  const std::size_t C = 2 + rng.below(3), D = 6;
  ClassifierModel m;
  for (std::size_t c = 0; c < C; ++c) m.labels.push_back("c" + std::to_string(c));
  m.train_counts.assign(C, 1);
  m.weights = Matrix<double>(C, D);
  for (auto& x : m.weights.data()) x = rng.uniform(-1, 1);
  for (std::size_t c = 0; c < C; ++c) m.bias.push_back(rng.uniform(-1, 1));
  std::vector<double> x(D);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const std::size_t y = rng.below(C);
  Matrix<double> gw;
  std::vector<double> gb;
  classifier_gradient(m, x, y, gw, gb);
  const double h = 1e-5;
  double err2 = 0, ref2 = 0;
  const auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = classifier_loss(m, x, y);
    param = keep - h;
    const double down = classifier_loss(m, x, y);
    param = keep;
    const double fd = (up - down) / (2 * h);
    err2 += (fd - analytic) * (fd - analytic);
    ref2 += fd * fd;
  };
  for (std::size_t i = 0; i < gw.data().size(); ++i) check(m.weights.data()[i], gw.data()[i]);
  for (std::size_t c = 0; c < C; ++c) check(m.bias[c], gb[c]);
  return std::sqrt(err2 / ref2);
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(substream(2024, "acceptance-gradients"));
  double worst = 0;
  int n = 0;
  for (int i = 0; i < 25; ++i, n += 4) {
    worst = std::max(worst, step_gradient_error(rng, 1.0, false));                    // plain
    worst = std::max(worst, step_gradient_error(rng, rng.uniform(0.05, 0.95), false));  // weighted
    worst = std::max(worst, step_gradient_error(rng, rng.uniform(0.05, 1.0), true));   // regularized
    worst = std::max(worst, classifier_gradient_error(rng));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30, fmt("%d instances, max relative error %.2e, %.2f s", n, worst, secs)};
}

// 2. Equivalence and brute-force oracles.

std::vector<ScoredDoc> bm25_oracle(const Corpus& c, const std::vector<WordId>& query) {
  const double k1 = 1.2, b = 0.75;
  const double n = static_cast<double>(c.documents.size());
  double avg = 0;
  for (const auto& d : c.documents) avg += static_cast<double>(d.tokens.size());
  avg /= n;
  const std::set<WordId> terms(query.begin(), query.end());
  std::vector<ScoredDoc> out;
  for (const auto& d : c.documents) {
    double s = 0;
    bool hit = false;
    for (WordId t : terms) {
      const auto f = static_cast<double>(std::count(d.tokens.begin(), d.tokens.end(), t));
      if (f == 0) continue;
      hit = true;
      double df = 0;
      for (const auto& e : c.documents) df += std::count(e.tokens.begin(), e.tokens.end(), t) > 0 ? 1 : 0;
      const double idf = std::log(1 + (n - df + 0.5) / (df + 0.5));
      s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * static_cast<double>(d.tokens.size()) / avg));
    }
    if (hit) out.push_back({d.doc_id, s});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredDoc& x, const ScoredDoc& y) { return x.score > y.score; });
  return out;
}

std::vector<WordId> knn_oracle(const Matrix<double>& m, WordId q, std::size_t k) {
  std::vector<std::pair<double, WordId>> all;
  for (WordId c = 0; c < m.rows(); ++c) {
    if (c == q) continue;
    double d = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < m.cols(); ++i) {
      d += m(q, i) * m(c, i);
      a += m(q, i) * m(q, i);
      b += m(c, i) * m(c, i);
    }
    all.emplace_back(-d / (std::sqrt(a) * std::sqrt(b)), c);
  }
  std::sort(all.begin(), all.end());
  std::vector<WordId> ids;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].second);
  return ids;
}

Outcome equivalence_oracles() {
  std::vector<std::string> notes;
  bool ok = true;

  synthetic::TopicWorld world({.topics = 4, .words_per_topic = 15, .function_words = 5, .doc_length = 20});
  const auto target = corpus_of(world.corpus(60, 1));
  const auto source = corpus_of(world.corpus(80, 2));
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 2;
  cfg.seed = 7;
  const SnippetWeighting unweighted{WeightingMode::kUnweighted, 1.0, {}};
  const auto scorer = train<float>(target, cfg);
  const bool a = joint_train<float>(target, source, {}, &scorer, {}, cfg) == train<float>(target, cfg);
  std::vector<std::uint32_t> all(source.documents.size());
  std::iota(all.begin(), all.end(), 0u);
  const bool b = joint_train<float>(target, source, all, nullptr, unweighted, cfg) ==
                 train_concatenated<float>(target, source, cfg);
  ok = ok && a && b;
  notes.push_back(std::string("(a) ") + (a ? "bit-exact" : "differs"));
  notes.push_back(std::string("(b) ") + (b ? "bit-exact" : "differs"));

  double bm25_err = 0;
  bool bm25_order = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(substream(seed, "acceptance-bm25"));
    std::vector<Strings> docs;
    for (int d = 0; d < 20; ++d) {
      Strings doc;
      const auto len = 5 + rng.below(25);
      for (std::size_t i = 0; i < len; ++i) doc.push_back("w" + std::to_string(rng.below(50)));
      docs.push_back(doc);
    }
    const auto c = corpus_of(docs);
    const auto idx = index_source(c);
    for (int q = 0; q < 20; ++q) {
      std::vector<WordId> query;
      const auto len = 1 + rng.below(8);
      for (std::size_t i = 0; i < len; ++i) query.push_back(static_cast<WordId>(rng.below(c.vocabulary.size())));
      const auto got = retrieve(idx, query, 20);
      const auto want = bm25_oracle(c, query);
      if (got.size() != want.size()) {
        bm25_order = false;
        continue;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        bm25_err = std::max(bm25_err, std::abs(got[i].score - want[i].score));
        if (std::abs(got[i].score - want[i].score) > 1e-12 && got[i].doc != want[i].doc) bm25_order = false;
      }
    }
  }
  const bool c1 = bm25_err <= 1e-9 && bm25_order;
  notes.push_back(fmt("(c) bm25 max err %.1e", bm25_err));

  bool knn_exact = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(substream(seed, "acceptance-knn"));
    Matrix<double> m(50, 8);
    for (auto& x : m.data()) x = rng.uniform(-1, 1);
    std::vector<WordId> ids(50);
    std::iota(ids.begin(), ids.end(), WordId{0});
    for (WordId q = 0; q < 50; ++q) {
      std::vector<WordId> got;
      for (const auto& nb : knn(m, q, 10, ids)) got.push_back(nb.id);
      knn_exact = knn_exact && got == knn_oracle(m, q, 10);
    }
  }
  notes.push_back(std::string("knn ") + (knn_exact ? "exact" : "differs"));
  ok = ok && c1 && knn_exact;
  std::string detail;
  for (const auto& s : notes) detail += (detail.empty() ? "" : ", ") + s;
  return {ok, detail};
}

// 3. Calibration separation on the bundled synthetic corpus.

Outcome calibration_separation() {
  const auto t0 = std::chrono::steady_clock::now();
  auto in = open_input(std::string(SRCSEL_DATA_DIR) + "/synthetic/target.txt");
  const auto target = corpus_of(read_documents(in, DocumentMode::kLine), 5);
  TrainConfig cfg;
  cfg.dim = 100;
  cfg.epochs = 5;
  const auto r = calibrate<float>(target, CalibrationConfig{}, cfg);
  const auto& p = r.selected();
  const double secs = seconds_since(t0);
  const bool ok = p.wscore_a >= 0.8 && p.wscore_b <= 0.2 && secs < 300;
  return {ok, fmt("lambda %g alpha %g: mean wscore held-out %.3f (need >= 0.8), jumbled %.3f (need <= 0.2), %.1f s",
                  r.lambda_star, r.alpha_star, p.wscore_a, p.wscore_b, secs)};
}

// 4. Drift detection on a sense-swap benchmark.

// Mann-Whitney AUC of `score` separating positives from negatives, ties
// counted as one half.
double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

Outcome drift_detection() {
  double total = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    synthetic::TopicSpec spec{.topics = 10, .words_per_topic = 30, .function_words = 10};
    synthetic::TopicWorld source_world(spec);
    synthetic::TopicWorld target_world(spec);
    const auto moved = target_world.drift(0.1, seed);
    const auto src = corpus_of(source_world.corpus(2000, substream(seed, "drift-source")));
    const auto tgt = corpus_of(target_world.corpus(2000, substream(seed, "drift-target")));
    TrainConfig cfg;
    cfg.dim = 50;
    cfg.epochs = 5;
    cfg.seed = seed;
    const auto sm = train<float>(src, cfg);
    const auto tm = train<float>(tgt, cfg);
    const auto report = build_report(src.vocabulary, sm.focus, tgt.vocabulary, tm.focus, kDefaultNeighbors, 1.0,
                                     kDefaultClipTop);
    const std::set<std::string> swapped(moved.begin(), moved.end());
    std::vector<double> pos, neg;
    for (const auto& e : report.entries) (swapped.count(e.word) ? pos : neg).push_back(1.0 - e.wscore);
    const double a = auc(pos, neg);
    total += a;
    per_seed += fmt("%s%.3f", per_seed.empty() ? "" : " ", a);
  }
  const double mean = total / 3;
  return {mean >= 0.9, fmt("mean AUC %.3f over 3 seeds (%s)", mean, per_seed.c_str())};
}

// 5. Selection precision with a jumbled half.

Outcome selection_precision() {
  synthetic::TopicWorld world({.topics = 10, .words_per_topic = 30, .function_words = 10});
  const auto target = corpus_of(world.corpus(300, 41));
  const auto relevant = world.corpus(500, 42);
  const auto other = corpus_of(world.corpus(500, 43));
  auto docs = relevant;
  for (const auto& d : decode(permute_vocabulary(other, 44))) docs.push_back(d);
  const auto source = corpus_of(docs);
  const auto sel = select_sources(target, source, index_source(source), SelectionConfig{});
  std::size_t good = 0;
  for (auto d : sel.retained) good += d < relevant.size() ? 1 : 0;
  const double precision = sel.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(sel.retained.size());
  return {precision >= 0.9,
          fmt("%zu of %zu retained from the relevant half (precision %.3f)", good, sel.retained.size(), precision)};
}

// 6. AWPP ordering SrcSel >= Tgt >= random init.

Outcome awpp_ordering() {
  std::vector<double> srcsel, tgt, random;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    synthetic::TopicWorld world({.topics = 8, .words_per_topic = 40, .function_words = 10, .doc_length = 30});
    const std::vector<std::uint32_t> mine{0, 1}, others{2, 3, 4, 5, 6, 7};
    const auto target = corpus_of(world.corpus(200, substream(seed, "awpp-target"), mine));
    const auto eval = encode(world.corpus(200, substream(seed, "awpp-eval"), mine), target.vocabulary);
    auto sdocs = world.corpus(1500, substream(seed, "awpp-relevant"), mine);
    const auto rest = world.corpus(1500, substream(seed, "awpp-other"), others);
    sdocs.insert(sdocs.end(), rest.begin(), rest.end());
    const auto source = corpus_of(sdocs);
    TrainConfig cfg;
    cfg.dim = 50;
    cfg.epochs = 5;
    cfg.seed = seed;
    const AwppConfig ac{.n_negatives = 10, .seed = seed, .window = cfg.window};
    const auto tm = train<float>(target, cfg);
    SelectionConfig sc;
    sc.seed = seed;
    const auto sel = select_sources(target, source, index_source(source), sc);
    const auto sm = joint_train<float>(target, source, sel.retained, &tm, {}, cfg);
    srcsel.push_back(awpp(sm, eval, ac).mean_probability);
    tgt.push_back(awpp(tm, eval, ac).mean_probability);
    random.push_back(awpp(init_model<float>(target.vocabulary, cfg.dim, seed), eval, ac).mean_probability);
  }
  const auto [smin, smax] = std::minmax_element(srcsel.begin(), srcsel.end());
  const auto [tmin, tmax] = std::minmax_element(tgt.begin(), tgt.end());
  const auto [rmin, rmax] = std::minmax_element(random.begin(), random.end());
  const bool ok = *smin > *tmax && *tmin > *rmax;
  return {ok, fmt("SrcSel [%.4f, %.4f], Tgt [%.4f, %.4f], random [%.4f, %.4f]", *smin, *smax, *tmin, *tmax, *rmin,
                  *rmax)};
}

// 7. Regularizer pull grows with rho.

Outcome regularizer_pull() {
  synthetic::TopicWorld world({.topics = 6, .words_per_topic = 25, .function_words = 8});
  const auto src = corpus_of(world.corpus(600, 51));
  const auto tgt = corpus_of(world.corpus(200, 52));
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.epochs = 3;
  const auto s = train<float>(src, cfg);
  std::vector<float> ones(tgt.vocabulary.size(), 0.0f);
  for (std::size_t i = 0; i < ones.size(); ++i) ones[i] = src.vocabulary.find(tgt.vocabulary.word(i)) ? 1.0f : 0.0f;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  std::string trail;
  for (double rho : {0.0, 0.1, 1.0, 10.0, 50.0}) {
    const auto reg = make_regularizer<float>(tgt.vocabulary, src.vocabulary, s, ones, static_cast<float>(rho));
    const auto m = train<float>(tgt, cfg, RegMode<float>{reg, nullptr, nullptr});
    double dist = 0;
    std::size_t n = 0;
    for (WordId i = 0; i < tgt.vocabulary.size(); ++i) {
      if (reg.score[i] != 1.0f) continue;
      double sq = 0;
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        const double d = m.focus(i, j) - reg.source_focus(i, j);
        sq += d * d;
      }
      dist += std::sqrt(sq);
      ++n;
    }
    dist /= static_cast<double>(n);
    monotone = monotone && dist <= prev;
    prev = dist;
    trail += fmt("%s%g:%.4f", trail.empty() ? "" : " ", rho, dist);
  }
  return {monotone, "mean distance by rho " + trail};
}

// 8. Pipeline determinism.

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "srcsel-acceptance-determinism";
  fs::remove_all(root);
  const std::string data = std::string(SRCSEL_DATA_DIR) + "/synthetic";
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const char* mode : {"tgt", "src-tune", "reg-sense", "srcsel", "srcsel-word"}) {
    std::istringstream text(std::string("mode = ") + mode +
                            "\ntarget = target.txt\nsource = source.txt\neval = eval.txt\n[train]\ndim = 32\nepochs = 2\n");
    const auto m = read_manifest(text, data);
    for (const char* run : {"a", "b"}) {
      std::ostringstream log;
      run_experiment(m, root / run / mode, StageCache(root / run / "cache"), log);
    }
    for (const auto& entry : fs::directory_iterator(root / "a" / mode)) {
      const auto other = root / "b" / mode / entry.path().filename();
      ++files;
      if (!fs::exists(other) || read_file(entry.path().string()) != read_file(other.string())) {
        differing.push_back(std::string(mode) + "/" + entry.path().filename().string());
      }
    }
  }
  fs::remove_all(root);
  std::string detail = fmt("%zu output files over 5 modes compared", files);
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && files > 0, detail};
}

// 9. Throughput.

Outcome throughput() {
  const auto r = measure_cbow_throughput(100, 5, 5, 3'000'000);
  return {r.samples_per_second >= 1e6, fmt("%.0f window samples/s at dim 100, k 5 (need >= 1000000)",
                                           r.samples_per_second)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"equivalence-oracles", equivalence_oracles},
      {"calibration-separation", calibration_separation},
      {"drift-detection", drift_detection},
      {"selection-precision", selection_precision},
      {"awpp-ordering", awpp_ordering},
      {"regularizer-pull", regularizer_pull},
      {"determinism", determinism},
      {"throughput", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
