#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/bm25.hpp"
#include "srcsel/calibrate.hpp"
#include "srcsel/corpus.hpp"
#include "srcsel/corpus_io.hpp"
#include "srcsel/drift.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/hash.hpp"
#include "srcsel/manifest.hpp"
#include "srcsel/model.hpp"
#include "srcsel/select.hpp"
#include "srcsel/trainer.hpp"

namespace srcsel {

namespace fs = std::filesystem;

inline fs::path default_cache_dir() {
  if (const char* env = std::getenv("SRCSEL_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return ".srcsel-cache";
}

// Content-addressed store for stage outputs. Every lookup is appended to
// stages.log as `stage<TAB>key<TAB>cached|computed`.
class StageCache {
 public:
  explicit StageCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  fs::path file(std::string_view stage, std::uint64_t key, std::string_view ext) const {
    return dir_ / (std::string(stage) + "-" + hex64(key) + std::string(ext));
  }

  void record(std::string_view stage, std::uint64_t key, bool cached) const {
    std::ofstream log(dir_ / "stages.log", std::ios::app);
    log << stage << '\t' << hex64(key) << '\t' << (cached ? "cached" : "computed") << '\n';
  }

 private:
  fs::path dir_;
};

namespace detail {

// Writes through a temporary file so an interrupted stage never leaves a
// partial cache entry behind.
inline void write_atomically(const fs::path& path, bool binary,
                             const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    auto out = open_output(tmp.string(), binary);
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void hash_config(Fnv1a& h, const TrainConfig& c) {
  h.value(c.dim).value(c.window).value(c.negatives).value(c.epochs).value(c.initial_lr);
  h.value(c.distortion).value(c.seed).value(c.workers).value(c.reg_weight);
  h.value(c.shrink_window).value(c.subsample).value(c.strip_source_focus);
}

template <typename T>
void hash_list(Fnv1a& h, const std::vector<T>& xs) {
  h.value(static_cast<std::uint64_t>(xs.size()));
  for (const auto& x : xs) h.value(x);
}

inline void write_doubles(std::ostream& out, const std::vector<double>& xs) {
  char buf[40];
  out << xs.size();
  for (double x : xs) {
    std::snprintf(buf, sizeof(buf), " %.17g", x);
    out << buf;
  }
  out << '\n';
}

inline std::vector<double> read_doubles(std::istream& in) {
  std::size_t n = 0;
  in >> n;
  std::vector<double> xs(n);
  for (auto& x : xs) in >> x;
  if (!in) throw FormatError("truncated cache entry");
  return xs;
}

}  // namespace detail

struct LoadedCorpus {
  Corpus corpus;
  std::string content_hash;  // hex FNV-1a of the file bytes
  std::uint64_t key = 0;     // content hash plus corpus options
};

inline std::string file_hash(const std::string& path) {
  const auto bytes = read_file(path);
  return hex64(Fnv1a().bytes(bytes.data(), bytes.size()).digest());
}

inline LoadedCorpus load_corpus(const std::string& path, std::uint64_t min_count, DocumentMode mode,
                                const StageCache& cache) {
  const auto bytes = read_file(path);
  LoadedCorpus lc;
  lc.content_hash = hex64(Fnv1a().bytes(bytes.data(), bytes.size()).digest());
  lc.key = Fnv1a().str("corpus").str(lc.content_hash).value(min_count).value(static_cast<int>(mode)).digest();
  const auto vocab_path = cache.file("corpus", lc.key, ".vocab");
  const auto corpus_path = cache.file("corpus", lc.key, ".bin");
  if (fs::exists(vocab_path) && fs::exists(corpus_path)) {
    auto vin = open_input(vocab_path.string());
    const auto vocab = read_vocabulary(vin);
    auto cin = open_input(corpus_path.string(), true);
    lc.corpus = read_corpus_cache(cin, vocab);
    cache.record("corpus", lc.key, true);
    return lc;
  }
  std::istringstream in(bytes);
  const auto docs = read_documents(in, mode);
  lc.corpus = encode(docs, build_vocabulary(docs, min_count));
  if (lc.corpus.documents.empty()) throw std::runtime_error(path + ": no documents after vocabulary filtering");
  detail::write_atomically(vocab_path, false, [&](std::ostream& o) { write_vocabulary(o, lc.corpus.vocabulary); });
  detail::write_atomically(corpus_path, true, [&](std::ostream& o) { write_corpus_cache(o, lc.corpus); });
  cache.record("corpus", lc.key, false);
  return lc;
}

template <typename Compute>
EmbeddingModel<float> cached_model(const StageCache& cache, std::string_view stage, std::uint64_t key,
                                   const Vocabulary& vocab, Compute&& compute) {
  const auto path = cache.file(stage, key, ".model");
  if (fs::exists(path)) {
    auto in = open_input(path.string(), true);
    auto m = load_model<float>(in);
    check_model_matches(m, vocab);
    cache.record(stage, key, true);
    return m;
  }
  auto m = compute();
  detail::write_atomically(path, true, [&](std::ostream& o) { save_model(o, m); });
  cache.record(stage, key, false);
  return m;
}

inline void write_selection_cache(std::ostream& out, const SelectionResult& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", s.cutoff, s.quantile);
  out << buf;
  std::vector<double> votes(s.votes.begin(), s.votes.end());
  std::vector<double> kept(s.retained.begin(), s.retained.end());
  detail::write_doubles(out, votes);
  detail::write_doubles(out, s.cumulative_score);
  detail::write_doubles(out, kept);
  out << s.diagnostics.size() << '\n';
  for (const auto& d : s.diagnostics) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g ", d.quantile, d.cutoff);
    out << buf << d.retained;
    std::snprintf(buf, sizeof(buf), " %.17g\n", d.heldout_mean);
    out << buf;
  }
}

inline SelectionResult read_selection_cache(std::istream& in) {
  SelectionResult s;
  in >> s.cutoff >> s.quantile;
  for (double v : detail::read_doubles(in)) s.votes.push_back(static_cast<std::uint32_t>(v));
  s.cumulative_score = detail::read_doubles(in);
  for (double v : detail::read_doubles(in)) s.retained.push_back(static_cast<std::uint32_t>(v));
  std::size_t n = 0;
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    QuantileDiagnostic d;
    std::string mean;
    in >> d.quantile >> d.cutoff >> d.retained >> mean;
    d.heldout_mean = std::strtod(mean.c_str(), nullptr);
    s.diagnostics.push_back(d);
  }
  if (!in) throw FormatError("truncated selection cache entry");
  return s;
}

inline void write_calibration_cache(std::ostream& out, const CalibrationResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %zu\n", r.lambda_star, r.alpha_star, r.diagnostics.size());
  out << buf;
  for (const auto& p : r.diagnostics) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.lambda, p.alpha, p.wscore_a,
                  p.wscore_b, p.sscore_a, p.sscore_b);
    out << buf;
  }
}

inline CalibrationResult read_calibration_cache(std::istream& in) {
  CalibrationResult r;
  std::size_t n = 0;
  in >> r.lambda_star >> r.alpha_star >> n;
  for (std::size_t i = 0; i < n; ++i) {
    CalibrationPoint p;
    in >> p.lambda >> p.alpha >> p.wscore_a >> p.wscore_b >> p.sscore_a >> p.sscore_b;
    r.diagnostics.push_back(p);
  }
  if (!in) throw FormatError("truncated calibration cache entry");
  return r;
}

// Ordered metric name/value pairs; the metrics.tsv schema is the name list.
struct Metrics {
  std::vector<std::string> names;
  std::vector<double> values;

  void add(std::string name, double v) {
    names.push_back(std::move(name));
    values.push_back(v);
  }
};

inline void write_metrics(std::ostream& out, const Metrics& m) {
  out << "metric\tvalue\n";
  char buf[64];
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "\t%.6f\n", m.values[i]);
    out << m.names[i] << buf;
  }
}

inline Metrics read_metrics(std::istream& in) {
  Metrics m;
  std::string line;
  if (!std::getline(in, line) || line != "metric\tvalue") throw FormatError("metrics file: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("metrics file: bad row '" + line + "'");
    m.add(line.substr(0, tab), std::stod(line.substr(tab + 1)));
  }
  return m;
}

struct RunResult {
  Metrics metrics;
  ExperimentManifest resolved;
  std::size_t retained = 0;
  std::vector<std::string> warnings;
};

namespace detail {

class Runner {
 public:
  Runner(ExperimentManifest m, const StageCache& cache, std::ostream& log)
      : m_(std::move(m)), cache_(cache), log_(log) {}

  RunResult run(const fs::path& output) {
    validate(m_);
    if ((m_.calibrate) && m_.mode != Mode::kRegSense && m_.mode != Mode::kSrcSel) {
      throw ManifestError(std::string("calibration does not apply to mode ") + mode_name(m_.mode));
    }
    check_inputs();
    target_ = load_corpus(m_.target, m_.min_count, m_.documents, cache_);
    if (needs_source(m_.mode)) source_ = load_corpus(m_.source, m_.min_count, m_.documents, cache_);
    load_eval();

    fs::create_directories(output);
    const auto model = final_model(output);
    write_outputs(output, model);
    return {metrics_, m_, retained_, warnings_};
  }

 private:
  void check_inputs() {
    std::map<std::string, std::string> paths{{"target", m_.target}};
    if (needs_source(m_.mode)) paths["source"] = m_.source;
    if (!m_.eval.empty()) paths["eval"] = m_.eval;
    if (!m_.classify_train.empty()) {
      paths["classify_train"] = m_.classify_train;
      paths["classify_test"] = m_.classify_test;
    }
    std::map<std::string, std::string> actual;
    for (const auto& [role, path] : paths) {
      if (!fs::exists(path)) throw ManifestError("missing input " + role + ": " + path);
      actual[role] = file_hash(path);
      const auto it = m_.input_hashes.find(role);
      if (it != m_.input_hashes.end() && it->second != actual[role]) {
        throw ManifestError("hash mismatch for " + role + " (" + path + "): manifest records " + it->second +
                            ", file has " + actual[role]);
      }
    }
    m_.input_hashes = std::move(actual);
  }

  void load_eval() {
    if (m_.eval.empty()) {
      eval_ = target_.corpus;
      return;
    }
    auto in = open_input(m_.eval);
    eval_ = encode(read_documents(in, m_.documents), target_.corpus.vocabulary);
    if (eval_.documents.empty()) throw std::runtime_error("evaluation corpus shares no words with the target");
  }

  // Stages named train-src depend on the source corpus only, train-tgt on the
  // target only; all others on both.
  std::uint64_t key_of(std::string_view stage, const TrainConfig& cfg, std::uint64_t extra = 0) const {
    Fnv1a h;
    h.str(stage).value(stage == "train-src" ? 0 : target_.key).value(stage == "train-tgt" ? 0 : source_.key);
    h.value(extra);
    hash_config(h, cfg);
    return h.digest();
  }

  AwppResult awpp_of(const EmbeddingModel<float>& model) const {
    return awpp(model, eval_, {.n_negatives = m_.awpp_negatives, .seed = m_.seed, .window = m_.train.window});
  }

  // Trains with `train_fn` at the configured epochs, or at every grid point
  // keeping the best evaluation AWPP (ties to fewer epochs).
  EmbeddingModel<float> tuned(std::string_view stage, std::uint64_t extra,
                              const std::function<EmbeddingModel<float>(const TrainConfig&)>& train_fn) {
    if (m_.epoch_grid.empty()) {
      epochs_ = m_.train.epochs;
      return cached_model(cache_, stage, key_of(stage, m_.train, extra), target_.corpus.vocabulary,
                          [&] { return train_fn(m_.train); });
    }
    std::optional<EmbeddingModel<float>> best;
    double best_p = -1.0;
    auto grid = m_.epoch_grid;
    std::sort(grid.begin(), grid.end());
    for (auto e : grid) {
      TrainConfig cfg = m_.train;
      cfg.epochs = e;
      auto model = cached_model(cache_, stage, key_of(stage, cfg, extra), target_.corpus.vocabulary,
                                [&] { return train_fn(cfg); });
      const double p = awpp_of(model).mean_probability;
      log_ << stage << ": epochs " << e << " awpp " << p << '\n';
      if (p > best_p) {
        best_p = p;
        epochs_ = e;
        best = std::move(model);
      }
    }
    return std::move(*best);
  }

  const EmbeddingModel<float>& source_model() {
    if (!src_model_) {
      src_model_ = cached_model(cache_, "train-src", key_of("train-src", m_.train), source_.corpus.vocabulary,
                                [&] { return train<float>(source_.corpus, m_.train); });
    }
    return *src_model_;
  }

  const EmbeddingModel<float>& target_model() {
    if (!tgt_model_) {
      tgt_model_ = cached_model(cache_, "train-tgt", key_of("train-tgt", m_.train), target_.corpus.vocabulary,
                                [&] { return train<float>(target_.corpus, m_.train); });
    }
    return *tgt_model_;
  }

  const CalibrationResult& calibration(const fs::path& output) {
    if (!calibration_) {
      Fnv1a h;
      h.str("calibrate").value(target_.key);
      hash_config(h, m_.train);
      const auto& c = m_.calibration;
      hash_list(h, c.lambda_grid);
      hash_list(h, c.alpha_grid);
      h.value(c.heldout_fraction).value(c.snippets).value(m_.neighbors).value(m_.clip_top);
      const auto key = h.digest();
      const auto path = cache_.file("calibrate", key, ".txt");
      if (fs::exists(path)) {
        auto in = open_input(path.string());
        calibration_ = read_calibration_cache(in);
        cache_.record("calibrate", key, true);
      } else {
        CalibrationConfig cc = c;
        cc.neighbors = m_.neighbors;
        cc.clip_top = m_.clip_top;
        calibration_ = calibrate<float>(target_.corpus, cc, m_.train);
        write_atomically(path, false, [&](std::ostream& o) { write_calibration_cache(o, *calibration_); });
        cache_.record("calibrate", key, false);
      }
      auto out = open_output((output / "calibration.tsv").string());
      write_calibration(out, *calibration_);
      log_ << "calibration: lambda " << calibration_->lambda_star << " alpha " << calibration_->alpha_star
           << '\n';
    }
    return *calibration_;
  }

  double lambda(const fs::path& output) { return m_.calibrate ? calibration(output).lambda_star : m_.lambda; }
  double alpha(const fs::path& output) { return m_.calibrate ? calibration(output).alpha_star : m_.alpha; }

  // Stability of every shared word, also written to stability.tsv.
  std::vector<float> stability_scores(const fs::path& output, double lam) {
    const auto& src = source_model();
    const auto& tgt = target_model();
    const auto report = build_report(source_.corpus.vocabulary, src.focus, target_.corpus.vocabulary,
                                     tgt.focus, m_.neighbors, lam, m_.clip_top);
    auto out = open_output((output / "stability.tsv").string());
    write_report(out, report);
    const auto scores = report.scores(target_.corpus.vocabulary.size());
    return {scores.begin(), scores.end()};
  }

  SelectionResult selection() {
    Fnv1a h;
    h.str("select").value(target_.key).value(source_.key).value(m_.top_r).value(m_.retain.min_votes);
    hash_list(h, m_.retain.cutoff_quantiles);
    h.value(m_.select_heldout_fraction).value(m_.seed);
    const auto key = h.digest();
    const auto path = cache_.file("select", key, ".txt");
    if (fs::exists(path)) {
      auto in = open_input(path.string());
      cache_.record("select", key, true);
      return read_selection_cache(in);
    }
    const auto index = index_source(source_.corpus);
    SelectionConfig cfg;
    cfg.top_r = m_.top_r;
    cfg.retain = m_.retain;
    cfg.heldout_fraction = m_.select_heldout_fraction;
    cfg.seed = m_.seed;
    auto sel = select_sources(target_.corpus, source_.corpus, index, cfg);
    write_atomically(path, false, [&](std::ostream& o) { write_selection_cache(o, sel); });
    cache_.record("select", key, false);
    return sel;
  }

  EmbeddingModel<float> final_model(const fs::path& output) {
    const auto& tv = target_.corpus.vocabulary;
    const float rho = static_cast<float>(m_.train.reg_weight);
    switch (m_.mode) {
      case Mode::kTgt:
        return tuned("train-tgt", 0, [&](const TrainConfig& c) { return train<float>(target_.corpus, c); });
      case Mode::kSrc: {
        epochs_ = m_.train.epochs;
        return init_model<float>(tv, m_.train.dim, m_.seed, source_.corpus.vocabulary, source_model());
      }
      case Mode::kSrcTune: {
        const auto& src = source_model();
        return tuned("train-src-tune", 0, [&](const TrainConfig& c) {
          return train<float>(target_.corpus, c, SrcTuneMode<float>{&source_.corpus.vocabulary, &src});
        });
      }
      case Mode::kRegFreq: {
        const auto& src = source_model();
        const auto reg = make_regularizer(tv, source_.corpus.vocabulary, src,
                                          frequency_scores<float>(source_.corpus.vocabulary, tv), rho);
        return tuned("train-reg-freq", 0, [&](const TrainConfig& c) {
          return train<float>(target_.corpus, c, RegMode<float>{reg, nullptr, nullptr});
        });
      }
      case Mode::kRegSense: {
        const double lam = lambda(output);
        const auto reg = make_regularizer(tv, source_.corpus.vocabulary, source_model(),
                                          stability_scores(output, lam), rho);
        Fnv1a extra;
        extra.value(lam).value(m_.neighbors).value(m_.clip_top);
        return tuned("train-reg-sense", extra.digest(), [&](const TrainConfig& c) {
          return train<float>(target_.corpus, c, RegMode<float>{reg, nullptr, nullptr});
        });
      }
      case Mode::kSrcPlusTgt:
        return tuned("train-src-plus-tgt", 0, [&](const TrainConfig& c) {
          return train_concatenated<float>(target_.corpus, source_.corpus, c);
        });
      case Mode::kSrcSel:
        return srcsel_model(output);
    }
    throw std::logic_error("unhandled mode");
  }

  EmbeddingModel<float> srcsel_model(const fs::path& output) {
    const auto sel = selection();
    {
      auto out = open_output((output / "selection.tsv").string());
      write_selection(out, sel);
    }
    retained_ = sel.retained.size();
    log_ << "selection: retained " << retained_ << " of " << source_.corpus.documents.size()
         << " source documents (cutoff quantile " << sel.quantile << ")\n";
    if (sel.empty()) {
      warnings_.push_back("no source documents retained; training on the target alone");
      log_ << "warning: " << warnings_.back() << '\n';
    }
    SnippetWeighting weighting{m_.weighting, 1.0, {}};
    Fnv1a extra;
    extra.value(static_cast<int>(m_.weighting)).value(m_.inject_fraction);
    hash_list(extra, sel.retained);
    if (m_.weighting == WeightingMode::kContext || m_.inject_fraction > 0) {
      weighting.alpha = alpha(output);
      extra.value(weighting.alpha);
    }
    if (m_.weighting == WeightingMode::kWord) {
      const double lam = lambda(output);
      const auto s = stability_scores(output, lam);
      weighting.word_scores.assign(s.begin(), s.end());
      extra.value(lam).value(m_.neighbors).value(m_.clip_top);
    }
    const EmbeddingModel<float>* scorer = nullptr;
    if (m_.weighting == WeightingMode::kContext || m_.inject_fraction > 0) scorer = &target_model();
    const JointOptions opts{m_.inject_fraction};
    return tuned("train-srcsel", extra.digest(), [&](const TrainConfig& c) {
      return joint_train<float>(target_.corpus, source_.corpus, sel.retained, scorer, weighting, c, opts);
    });
  }

  void write_outputs(const fs::path& output, const EmbeddingModel<float>& model) {
    const auto& words = target_.corpus.vocabulary.words();
    {
      auto out = open_output((output / "manifest.resolved").string());
      write_manifest(out, m_);
    }
    {
      auto out = open_output((output / "model.bin").string(), true);
      save_model(out, model);
    }
    {
      auto out = open_output((output / "embeddings.txt").string());
      write_word2vec(out, words, model.focus, true);
    }
    const auto a = awpp_of(model);
    metrics_.add("awpp", a.mean_probability);
    metrics_.add("awpp_perplexity", a.perplexity);
    metrics_.add("eval_windows", static_cast<double>(a.samples));
    metrics_.add("vocab_size", static_cast<double>(words.size()));
    metrics_.add("epochs", static_cast<double>(epochs_));
    if (!m_.classify_train.empty()) {
      WordVectors wv{words, Matrix<float>(model.size(), model.dim())};
      for (std::size_t i = 0; i < model.size(); ++i) {
        const double n = norm<float>(model.focus.row(i));
        for (std::size_t j = 0; j < model.dim(); ++j) {
          wv.vectors(i, j) = n > 0 ? static_cast<float>(model.focus(i, j) / n) : 0.0f;
        }
      }
      auto tr_in = open_input(m_.classify_train);
      auto te_in = open_input(m_.classify_test);
      const auto train_docs = read_labeled_docs(tr_in);
      const auto test_docs = read_labeled_docs(te_in);
      const auto clf = train_classifier(train_docs, wv, m_.classify_epochs, m_.classify_lr, m_.seed);
      const auto cm = classifier_metrics(clf, test_docs, wv);
      metrics_.add("micro_accuracy", cm.micro);
      metrics_.add("macro_accuracy", cm.macro);
      metrics_.add("rare_macro_accuracy", cm.rare_macro);
      metrics_.add("empty_feature_docs", static_cast<double>(cm.empty_docs));
    }
    auto out = open_output((output / "metrics.tsv").string());
    write_metrics(out, metrics_);
  }

  ExperimentManifest m_;
  const StageCache& cache_;
  std::ostream& log_;
  LoadedCorpus target_;
  LoadedCorpus source_;
  Corpus eval_;
  std::optional<EmbeddingModel<float>> src_model_;
  std::optional<EmbeddingModel<float>> tgt_model_;
  std::optional<CalibrationResult> calibration_;
  std::uint32_t epochs_ = 0;
  std::size_t retained_ = 0;
  std::vector<std::string> warnings_;
  Metrics metrics_;
};

}  // namespace detail

// Executes the manifest's stage graph and writes manifest.resolved,
// model.bin, embeddings.txt and metrics.tsv (plus stability.tsv,
// selection.tsv and calibration.tsv when those stages run) into `output`.
inline RunResult run_experiment(const ExperimentManifest& manifest, const fs::path& output,
                                const StageCache& cache, std::ostream& log) {
  if (output.empty()) throw ManifestError("no output directory");
  return detail::Runner(manifest, cache, log).run(output);
}

struct ComparisonRow {
  std::string method;
  std::size_t runs = 0;
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation; 0 for one run
};

struct Comparison {
  std::vector<std::string> metrics;
  std::vector<ComparisonRow> rows;  // in order of first appearance
};

// Label of a run: the method named by the manifest.resolved next to its
// metrics file, else the directory name.
inline std::string run_label(const fs::path& metrics_path) {
  const auto manifest = metrics_path.parent_path() / "manifest.resolved";
  if (fs::exists(manifest)) {
    auto in = open_input(manifest.string());
    return method_label(manifest_from_entries(parse_manifest_entries(in)));
  }
  return metrics_path.parent_path().filename().string();
}

// Groups runs by method and summarizes each metric. `paths` are run
// directories or metrics files; every one must share the same metric list.
inline Comparison compare_runs(const std::vector<fs::path>& paths) {
  if (paths.empty()) throw std::invalid_argument("compare: no reports given");
  Comparison cmp;
  std::vector<std::vector<std::vector<double>>> samples;  // row, metric, run
  for (const auto& p : paths) {
    const auto file = fs::is_directory(p) ? p / "metrics.tsv" : p;
    auto in = open_input(file.string());
    const auto m = read_metrics(in);
    if (cmp.metrics.empty() && cmp.rows.empty()) {
      cmp.metrics = m.names;
    } else if (m.names != cmp.metrics) {
      throw FormatError("compare: " + file.string() + " has a different metric schema");
    }
    const auto label = run_label(file);
    auto it = std::find_if(cmp.rows.begin(), cmp.rows.end(), [&](const auto& r) { return r.method == label; });
    if (it == cmp.rows.end()) {
      cmp.rows.push_back({label, 0, {}, {}});
      samples.emplace_back(m.names.size());
      it = cmp.rows.end() - 1;
    }
    auto& s = samples[static_cast<std::size_t>(it - cmp.rows.begin())];
    for (std::size_t i = 0; i < m.values.size(); ++i) s[i].push_back(m.values[i]);
    ++it->runs;
  }
  for (std::size_t r = 0; r < cmp.rows.size(); ++r) {
    for (const auto& xs : samples[r]) {
      const double n = static_cast<double>(xs.size());
      double mean = 0;
      for (double x : xs) mean += x;
      mean /= n;
      double ss = 0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      cmp.rows[r].mean.push_back(mean);
      cmp.rows[r].stddev.push_back(xs.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0);
    }
  }
  return cmp;
}

inline void write_comparison(std::ostream& out, const Comparison& cmp, bool markdown) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"method", "runs"};
  header.insert(header.end(), cmp.metrics.begin(), cmp.metrics.end());
  table.push_back(header);
  char buf[96];
  for (const auto& r : cmp.rows) {
    std::vector<std::string> row{r.method, std::to_string(r.runs)};
    for (std::size_t i = 0; i < r.mean.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f ± %.6f", r.mean[i], r.stddev[i]);
      row.emplace_back(buf);
    }
    table.push_back(std::move(row));
  }
  if (!markdown) {
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
      out << '\n';
    }
    return;
  }
  // column widths in code points so the ± sign does not skew alignment
  const auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
    return n;
  };
  std::vector<std::size_t> w(header.size(), 3);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], width(row[i]));
  }
  const auto emit = [&](const std::vector<std::string>& row) {
    out << '|';
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << ' ' << row[i] << std::string(w[i] - width(row[i]), ' ') << " |";
    }
    out << '\n';
  };
  emit(table[0]);
  out << '|';
  for (std::size_t i = 0; i < w.size(); ++i) out << (i < 2 ? ':' : '-') << std::string(w[i], '-') << (i < 2 ? "-|" : ":|");
  out << '\n';
  for (std::size_t r = 1; r < table.size(); ++r) emit(table[r]);
}

}  // namespace srcsel
