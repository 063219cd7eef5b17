#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "srcsel/bm25.hpp"
#include "srcsel/calibrate.hpp"
#include "srcsel/corpus_io.hpp"
#include "srcsel/drift.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/pipeline.hpp"
#include "srcsel/select.hpp"
#include "srcsel/synthetic.hpp"
#include "srcsel/trainer.hpp"

namespace fs = std::filesystem;
using namespace srcsel;

namespace {

struct CorpusFlags {
  std::uint64_t min_count = 5;
  std::string documents = "line";

  void add(CLI::App* app) {
    app->add_option("--min-count", min_count, "Drop words seen fewer times")->capture_default_str();
    app->add_option("--documents", documents, "Document boundaries: line or paragraph")
        ->check(CLI::IsMember({"line", "paragraph"}))
        ->capture_default_str();
  }

  DocumentMode mode() const { return documents == "line" ? DocumentMode::kLine : DocumentMode::kParagraph; }

  Corpus load(const std::string& path) const {
    auto in = open_input(path);
    const auto docs = read_documents(in, mode());
    return encode(docs, build_vocabulary(docs, min_count));
  }
};

void add_train_flags(CLI::App* app, TrainConfig& c) {
  app->add_option("--dim", c.dim, "Embedding dimension")->capture_default_str();
  app->add_option("--window", c.window, "Context half-width")->capture_default_str();
  app->add_option("--negatives", c.negatives, "Negative samples per window")->capture_default_str();
  app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app->add_option("--lr", c.initial_lr, "Initial learning rate")->capture_default_str();
  app->add_option("--reg-weight", c.reg_weight, "Regularizer weight rho")->capture_default_str();
}

struct ModelDir {
  Vocabulary vocab;
  EmbeddingModel<float> model;
};

ModelDir load_model_dir(const fs::path& dir) {
  auto vin = open_input((dir / "vocab.tsv").string());
  ModelDir md{read_vocabulary(vin), {}};
  auto min = open_input((dir / "model.bin").string(), true);
  md.model = load_model<float>(min);
  check_model_matches(md.model, md.vocab);
  return md;
}

void save_model_dir(const fs::path& dir, const Vocabulary& vocab, const EmbeddingModel<float>& model,
                    bool normalize) {
  fs::create_directories(dir);
  auto vout = open_output((dir / "vocab.tsv").string());
  write_vocabulary(vout, vocab);
  auto mout = open_output((dir / "model.bin").string(), true);
  save_model(mout, model);
  auto eout = open_output((dir / "embeddings.txt").string());
  write_word2vec(eout, vocab.words(), model.focus, normalize);
}

WordVectors load_vectors(const std::string& path) {
  auto in = open_input(path);
  return read_word2vec(in);
}

void write_synthetic(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  synthetic::TopicWorld world({.topics = 8, .words_per_topic = 40, .function_words = 10, .doc_length = 30});
  const std::vector<std::uint32_t> target_topics{0, 1};
  const std::vector<std::uint32_t> other_topics{2, 3, 4, 5, 6, 7};
  const auto put = [&](const char* name, const std::string& text) {
    auto out = open_output((dir / name).string());
    out << text;
  };
  put("target.txt", synthetic::to_text(world.corpus(600, seed, target_topics)));
  put("eval.txt", synthetic::to_text(world.corpus(200, seed + 1, target_topics)));
  auto source = world.corpus(1500, seed + 2, target_topics);
  const auto other = world.corpus(1500, seed + 3, other_topics);
  source.insert(source.end(), other.begin(), other.end());
  put("source.txt", synthetic::to_text(source));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-corpus word embeddings with selective source import"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  std::uint32_t workers = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed")->capture_default_str();
  auto* workers_opt = app.add_option("--workers", workers, "Training threads")->capture_default_str();

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "Count a corpus vocabulary");
  CorpusFlags vocab_corpus;
  std::string vocab_in, vocab_out = "-";
  vocab_cmd->add_option("corpus", vocab_in, "Corpus text file")->required();
  vocab_cmd->add_option("-o,--output", vocab_out, "Vocabulary TSV (default stdout)");
  vocab_corpus.add(vocab_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train CBOW embeddings on one corpus");
  CorpusFlags train_corpus;
  TrainConfig train_cfg;
  std::string train_in, train_out, train_init;
  bool no_normalize = false;
  train_cmd->add_option("corpus", train_in, "Corpus text file")->required();
  train_cmd->add_option("-o,--output", train_out, "Output directory")->required();
  train_cmd->add_option("--init-from", train_init, "Model directory to fine-tune from");
  train_cmd->add_flag("--no-normalize", no_normalize, "Export raw rather than unit-length vectors");
  train_corpus.add(train_cmd);
  add_train_flags(train_cmd, train_cfg);

  // drift
  auto* drift_cmd = app.add_subcommand("drift", "Stability and wscore of shared words");
  std::string drift_src, drift_tgt, drift_out = "-";
  double drift_lambda = 1.0;
  std::size_t drift_k = kDefaultNeighbors, drift_m = kDefaultClipTop;
  drift_cmd->add_option("--source-model", drift_src, "Source model directory")->required();
  drift_cmd->add_option("--target-model", drift_tgt, "Target model directory")->required();
  drift_cmd->add_option("--lambda", drift_lambda, "wscore sharpness")->capture_default_str();
  drift_cmd->add_option("--neighbors", drift_k, "Source neighbors per word")->capture_default_str();
  drift_cmd->add_option("--clip-top", drift_m, "Zero scores of the most frequent target words")
      ->capture_default_str();
  drift_cmd->add_option("-o,--output", drift_out, "Report TSV (default stdout)");

  // select
  auto* select_cmd = app.add_subcommand("select", "Retrieve and retain source documents");
  CorpusFlags select_corpus;
  SelectionConfig select_cfg;
  std::string select_tgt, select_src, select_out = "-";
  select_cmd->add_option("--target", select_tgt, "Target corpus")->required();
  select_cmd->add_option("--source", select_src, "Source corpus")->required();
  select_cmd->add_option("--top-r", select_cfg.top_r, "Documents retrieved per query")->capture_default_str();
  select_cmd->add_option("--min-votes", select_cfg.retain.min_votes, "Votes needed to retain")
      ->capture_default_str();
  select_cmd->add_option("--cutoff-quantiles", select_cfg.retain.cutoff_quantiles,
                         "Candidate cumulative-score quantiles")
      ->delimiter(',')
      ->capture_default_str();
  select_cmd->add_option("-o,--output", select_out, "Selection TSV (default stdout)");
  select_corpus.add(select_cmd);

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Choose lambda and alpha with a jumbled held-out slice");
  CorpusFlags cal_corpus;
  TrainConfig cal_train;
  CalibrationConfig cal_cfg;
  std::string cal_in, cal_out = "-";
  cal_cmd->add_option("corpus", cal_in, "Target corpus")->required();
  cal_cmd->add_option("--lambda-grid", cal_cfg.lambda_grid, "Candidate lambdas")->delimiter(',')->capture_default_str();
  cal_cmd->add_option("--alpha-grid", cal_cfg.alpha_grid, "Candidate alphas")->delimiter(',')->capture_default_str();
  cal_cmd->add_option("--heldout-fraction", cal_cfg.heldout_fraction, "Held-out share of the target")
      ->capture_default_str();
  cal_cmd->add_option("-o,--output", cal_out, "Diagnostics TSV (default stdout)");
  cal_corpus.add(cal_cmd);
  add_train_flags(cal_cmd, cal_train);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate embeddings");
  eval_cmd->require_subcommand(1);
  auto* awpp_cmd = eval_cmd->add_subcommand("awpp", "Average window predictive probability");
  std::string awpp_model, awpp_corpus;
  std::uint32_t awpp_k = 10, awpp_window = 5;
  awpp_cmd->add_option("--model", awpp_model, "Model directory")->required();
  awpp_cmd->add_option("--corpus", awpp_corpus, "Evaluation corpus")->required();
  awpp_cmd->add_option("--negatives", awpp_k, "Sampled negatives per window")->capture_default_str();
  awpp_cmd->add_option("--window", awpp_window, "Context half-width")->capture_default_str();
  std::string awpp_documents = "line";
  awpp_cmd->add_option("--documents", awpp_documents)->check(CLI::IsMember({"line", "paragraph"}));

  auto* nb_cmd = eval_cmd->add_subcommand("neighbors", "Nearest neighbors of probe words across models");
  std::vector<std::string> nb_files, nb_probes;
  std::size_t nb_k = 5;
  nb_cmd->add_option("--embeddings", nb_files, "word2vec text files")->required();
  nb_cmd->add_option("--probe", nb_probes, "Probe words")->required();
  nb_cmd->add_option("-k", nb_k, "Neighbors per probe")->capture_default_str();

  auto* clf_cmd = eval_cmd->add_subcommand("classify", "Average-embedding softmax classifier");
  std::string clf_emb, clf_train, clf_test;
  std::uint32_t clf_epochs = 20;
  double clf_lr = 0.1;
  clf_cmd->add_option("--embeddings", clf_emb, "word2vec text file")->required();
  clf_cmd->add_option("--train", clf_train, "label<TAB>text training file")->required();
  clf_cmd->add_option("--test", clf_test, "label<TAB>text test file")->required();
  clf_cmd->add_option("--epochs", clf_epochs)->capture_default_str();
  clf_cmd->add_option("--lr", clf_lr)->capture_default_str();

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment manifest");
  std::string run_manifest, run_output, run_cache;
  run_cmd->add_option("manifest", run_manifest, "Manifest file")->required();
  run_cmd->add_option("-o,--output", run_output, "Output directory (overrides the manifest)");
  run_cmd->add_option("--cache", run_cache, "Stage cache directory (default $SRCSEL_CACHE_DIR or .srcsel-cache)");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Tabulate metrics of several runs");
  std::vector<std::string> cmp_paths;
  bool cmp_markdown = false;
  cmp_cmd->add_option("reports", cmp_paths, "Run directories or metrics.tsv files")->required();
  cmp_cmd->add_flag("--markdown", cmp_markdown, "Markdown instead of TSV");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic topic corpora");
  std::string synth_dir;
  synth_cmd->add_option("directory", synth_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  const auto with_globals = [&](TrainConfig c) {
    c.seed = seed;
    c.workers = workers;
    return c;
  };
  const auto out_stream = [](const std::string& path) -> std::ostream& {
    static std::ofstream file;
    if (path == "-") return std::cout;
    file = open_output(path);
    return file;
  };

  try {
    if (*vocab_cmd) {
      const auto c = vocab_corpus.load(vocab_in);
      write_vocabulary(out_stream(vocab_out), c.vocabulary);
    } else if (*train_cmd) {
      const auto c = train_corpus.load(train_in);
      const auto cfg = with_globals(train_cfg);
      EmbeddingModel<float> model;
      if (train_init.empty()) {
        model = train<float>(c, cfg);
      } else {
        const auto init = load_model_dir(train_init);
        model = train<float>(c, cfg, SrcTuneMode<float>{&init.vocab, &init.model});
      }
      save_model_dir(train_out, c.vocabulary, model, !no_normalize);
      std::cerr << "trained " << c.vocabulary.size() << " words over " << c.documents.size() << " documents\n";
    } else if (*drift_cmd) {
      const auto s = load_model_dir(drift_src);
      const auto t = load_model_dir(drift_tgt);
      const auto report = build_report(s.vocab, s.model.focus, t.vocab, t.model.focus, drift_k, drift_lambda, drift_m);
      write_report(out_stream(drift_out), report);
    } else if (*select_cmd) {
      const auto t = select_corpus.load(select_tgt);
      const auto s = select_corpus.load(select_src);
      select_cfg.seed = seed;
      const auto sel = select_sources(t, s, index_source(s), select_cfg);
      write_selection(out_stream(select_out), sel);
      std::cerr << "retained " << sel.retained.size() << " of " << s.documents.size() << " source documents\n";
    } else if (*cal_cmd) {
      const auto t = cal_corpus.load(cal_in);
      const auto r = calibrate<float>(t, cal_cfg, with_globals(cal_train));
      write_calibration(out_stream(cal_out), r);
      std::cerr << "selected lambda " << r.lambda_star << " alpha " << r.alpha_star << '\n';
    } else if (*awpp_cmd) {
      const auto md = load_model_dir(awpp_model);
      auto in = open_input(awpp_corpus);
      const auto mode = awpp_documents == "line" ? DocumentMode::kLine : DocumentMode::kParagraph;
      const auto c = encode(read_documents(in, mode), md.vocab);
      const auto r = awpp(md.model, c, {.n_negatives = awpp_k, .seed = seed, .window = awpp_window});
      std::printf("awpp\t%.6f\nawpp_perplexity\t%.6f\neval_windows\t%zu\n", r.mean_probability, r.perplexity,
                  static_cast<std::size_t>(r.samples));
    } else if (*nb_cmd) {
      std::vector<NamedVectors> models;
      for (const auto& f : nb_files) models.push_back({fs::path(f).parent_path().filename().string(), load_vectors(f)});
      for (auto& m : models) {
        if (m.name.empty()) m.name = "model";
      }
      write_neighbor_table(std::cout, models, neighbor_table(models, nb_probes, nb_k), nb_k);
    } else if (*clf_cmd) {
      const auto emb = load_vectors(clf_emb);
      auto tr = open_input(clf_train);
      auto te = open_input(clf_test);
      const auto train_docs = read_labeled_docs(tr);
      const auto test_docs = read_labeled_docs(te);
      const auto model = train_classifier(train_docs, emb, clf_epochs, clf_lr, seed);
      const auto m = classifier_metrics(model, test_docs, emb);
      std::printf("micro_accuracy\t%.6f\nmacro_accuracy\t%.6f\nrare_macro_accuracy\t%.6f\nempty_feature_docs\t%zu\n",
                  m.micro, m.macro, m.rare_macro, m.empty_docs);
    } else if (*run_cmd) {
      auto in = open_input(run_manifest);
      auto m = read_manifest(in, fs::path(run_manifest).parent_path());
      if (seed_opt->count() > 0) m.seed = m.train.seed = seed;
      if (workers_opt->count() > 0) m.train.workers = workers;
      const fs::path output = run_output.empty() ? fs::path(m.output) : fs::path(run_output);
      const StageCache cache(run_cache.empty() ? default_cache_dir() : fs::path(run_cache));
      const auto r = run_experiment(m, output, cache, std::cerr);
      write_metrics(std::cout, r.metrics);
    } else if (*cmp_cmd) {
      std::vector<fs::path> paths(cmp_paths.begin(), cmp_paths.end());
      const auto cmp = compare_runs(paths);
      write_comparison(std::cout, cmp, cmp_markdown);
    } else if (*synth_cmd) {
      write_synthetic(synth_dir, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "srcsel: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
