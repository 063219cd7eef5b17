#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/calibrate.hpp"
#include "srcsel/corpus.hpp"
#include "srcsel/select.hpp"
#include "srcsel/trainer.hpp"

namespace srcsel {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { kTgt, kSrc, kSrcTune, kRegFreq, kRegSense, kSrcPlusTgt, kSrcSel };

inline constexpr double kRandomInjectionFraction = 0.05;

struct ExperimentManifest {
  Mode mode = Mode::kTgt;
  std::uint64_t seed = 1;
  std::string target;
  std::string source;
  std::string eval;    // AWPP corpus; the target corpus when empty
  std::string output;  // not part of the resolved manifest

  // [corpus]
  std::uint64_t min_count = 5;
  DocumentMode documents = DocumentMode::kLine;

  // [train]; seed comes from the top level
  TrainConfig train;
  std::vector<std::uint32_t> epoch_grid;  // non-empty: pick epochs by held-out AWPP

  // [select]
  std::size_t top_r = 10;
  RetainOptions retain;
  double select_heldout_fraction = 0.1;

  // [drift]
  double lambda = 1.0;
  std::size_t neighbors = kDefaultNeighbors;
  std::size_t clip_top = kDefaultClipTop;

  // [weighting]
  WeightingMode weighting = WeightingMode::kContext;
  double alpha = 1.0;
  double inject_fraction = 0.0;

  // [calibrate]
  bool calibrate = false;
  CalibrationConfig calibration;

  // [eval]
  std::uint32_t awpp_negatives = 10;
  std::string classify_train;
  std::string classify_test;
  std::uint32_t classify_epochs = 20;
  double classify_lr = 0.1;

  // [inputs]: content hash per input role, recorded by a previous run
  std::map<std::string, std::string> input_hashes;
};

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kTgt: return "tgt";
    case Mode::kSrc: return "src";
    case Mode::kSrcTune: return "src-tune";
    case Mode::kRegFreq: return "reg-freq";
    case Mode::kRegSense: return "reg-sense";
    case Mode::kSrcPlusTgt: return "src-plus-tgt";
    case Mode::kSrcSel: return "srcsel";
  }
  return "?";
}

inline const char* weighting_name(WeightingMode w) {
  switch (w) {
    case WeightingMode::kContext: return "context";
    case WeightingMode::kWord: return "word";
    case WeightingMode::kUnweighted: return "unweighted";
  }
  return "?";
}

// Method label used in comparison tables; selection variants are named after
// their weighting.
inline std::string method_label(const ExperimentManifest& m) {
  if (m.mode != Mode::kSrcSel) return mode_name(m.mode);
  std::string label = "srcsel";
  if (m.weighting == WeightingMode::kWord) label += "-word";
  if (m.weighting == WeightingMode::kUnweighted) label += "-r";
  if (m.inject_fraction > 0) label += "-c";
  return label;
}

inline bool needs_source(Mode m) { return m != Mode::kTgt; }

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw ManifestError("bad value for " + key + ": '" + v + "'");
  if constexpr (std::is_unsigned_v<T>) {
    if (v.find('-') != std::string::npos) throw ManifestError("negative value for " + key);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ManifestError("bad boolean for " + key + ": '" + v + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // shortest form that reads back to the same value
  for (int prec = 1; prec <= 17; ++prec) {
    char shortest[64];
    std::snprintf(shortest, sizeof(shortest), "%.*g", prec, v);
    if (std::stod(shortest) == v) return shortest;
  }
  return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace detail

// Flat `key = value` text with `[section]` headers; `#` starts a comment.
// Keys before the first header belong to the top level.
inline std::map<std::string, std::string> parse_manifest_entries(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ManifestError("line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ManifestError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    const auto full = section.empty() ? key : section + "." + key;
    if (!out.emplace(full, detail::trim(std::string_view(t).substr(eq + 1))).second) {
      throw ManifestError("duplicate key " + full);
    }
  }
  return out;
}

// Builds a manifest from parsed entries. Relative paths resolve against
// `base_dir`. Mode shorthands (srcsel-word, srcsel-r, srcsel-c) set the
// weighting section; contradicting it is an error.
inline ExperimentManifest manifest_from_entries(std::map<std::string, std::string> e,
                                                const std::filesystem::path& base_dir = {}) {
  ExperimentManifest m;
  const auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = e.find(key);
    if (it == e.end()) return std::nullopt;
    auto v = it->second;
    e.erase(it);
    return v;
  };
  const auto path_of = [&](const std::string& v) {
    if (v.empty()) return v;
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p.lexically_normal().string();
  };

  const auto mode = take("mode");
  if (!mode) throw ManifestError("manifest has no mode");
  std::optional<WeightingMode> implied_weighting;
  bool implied_injection = false;
  if (*mode == "tgt") m.mode = Mode::kTgt;
  else if (*mode == "src") m.mode = Mode::kSrc;
  else if (*mode == "src-tune") m.mode = Mode::kSrcTune;
  else if (*mode == "reg-freq") m.mode = Mode::kRegFreq;
  else if (*mode == "reg-sense") m.mode = Mode::kRegSense;
  else if (*mode == "src-plus-tgt") m.mode = Mode::kSrcPlusTgt;
  else if (*mode == "srcsel") m.mode = Mode::kSrcSel;
  else if (*mode == "srcsel-word") {
    m.mode = Mode::kSrcSel;
    implied_weighting = WeightingMode::kWord;
  } else if (*mode == "srcsel-r") {
    m.mode = Mode::kSrcSel;
    implied_weighting = WeightingMode::kUnweighted;
  } else if (*mode == "srcsel-c") {
    m.mode = Mode::kSrcSel;
    implied_injection = true;
  } else {
    throw ManifestError("unknown mode '" + *mode + "'");
  }

  if (auto v = take("seed")) m.seed = detail::parse_number<std::uint64_t>("seed", *v);
  if (auto v = take("target")) m.target = path_of(*v);
  if (auto v = take("source")) m.source = path_of(*v);
  if (auto v = take("eval")) m.eval = path_of(*v);
  if (auto v = take("output")) m.output = path_of(*v);

  if (auto v = take("corpus.min_count")) m.min_count = detail::parse_number<std::uint64_t>("min_count", *v);
  if (auto v = take("corpus.documents")) {
    if (*v == "line") m.documents = DocumentMode::kLine;
    else if (*v == "paragraph") m.documents = DocumentMode::kParagraph;
    else throw ManifestError("corpus.documents must be line or paragraph");
  }

  auto& t = m.train;
  if (auto v = take("train.dim")) t.dim = detail::parse_number<std::size_t>("dim", *v);
  if (auto v = take("train.window")) t.window = detail::parse_number<std::uint32_t>("window", *v);
  if (auto v = take("train.negatives")) t.negatives = detail::parse_number<std::uint32_t>("negatives", *v);
  if (auto v = take("train.epochs")) t.epochs = detail::parse_number<std::uint32_t>("epochs", *v);
  if (auto v = take("train.epoch_grid")) m.epoch_grid = detail::parse_list<std::uint32_t>("epoch_grid", *v);
  if (auto v = take("train.lr")) t.initial_lr = detail::parse_number<double>("lr", *v);
  if (auto v = take("train.distortion")) t.distortion = detail::parse_number<double>("distortion", *v);
  if (auto v = take("train.workers")) t.workers = detail::parse_number<std::uint32_t>("workers", *v);
  if (auto v = take("train.reg_weight")) t.reg_weight = detail::parse_number<double>("reg_weight", *v);
  if (auto v = take("train.shrink_window")) t.shrink_window = detail::parse_bool("shrink_window", *v);
  if (auto v = take("train.subsample")) t.subsample = detail::parse_number<double>("subsample", *v);
  if (auto v = take("train.strip_source_focus")) {
    t.strip_source_focus = detail::parse_bool("strip_source_focus", *v);
  }

  if (auto v = take("select.top_r")) m.top_r = detail::parse_number<std::size_t>("top_r", *v);
  if (auto v = take("select.min_votes")) m.retain.min_votes = detail::parse_number<std::uint32_t>("min_votes", *v);
  if (auto v = take("select.cutoff_quantiles")) {
    m.retain.cutoff_quantiles = detail::parse_list<double>("cutoff_quantiles", *v);
  }
  if (auto v = take("select.heldout_fraction")) {
    m.select_heldout_fraction = detail::parse_number<double>("select.heldout_fraction", *v);
  }

  if (auto v = take("drift.lambda")) m.lambda = detail::parse_number<double>("lambda", *v);
  if (auto v = take("drift.neighbors")) m.neighbors = detail::parse_number<std::size_t>("neighbors", *v);
  if (auto v = take("drift.clip_top")) m.clip_top = detail::parse_number<std::size_t>("clip_top", *v);

  if (auto v = take("weighting.mode")) {
    WeightingMode w;
    if (*v == "context") w = WeightingMode::kContext;
    else if (*v == "word") w = WeightingMode::kWord;
    else if (*v == "unweighted") w = WeightingMode::kUnweighted;
    else throw ManifestError("weighting.mode must be context, word or unweighted");
    if (implied_weighting && *implied_weighting != w) {
      throw ManifestError("mode " + *mode + " contradicts weighting.mode = " + *v);
    }
    m.weighting = w;
  } else if (implied_weighting) {
    m.weighting = *implied_weighting;
  }
  if (auto v = take("weighting.alpha")) m.alpha = detail::parse_number<double>("alpha", *v);
  if (auto v = take("weighting.inject_fraction")) {
    m.inject_fraction = detail::parse_number<double>("inject_fraction", *v);
    if (implied_injection && !(m.inject_fraction > 0)) {
      throw ManifestError("mode srcsel-c needs a positive inject_fraction");
    }
  } else if (implied_injection) {
    m.inject_fraction = kRandomInjectionFraction;
  }

  auto& c = m.calibration;
  if (auto v = take("calibrate.enabled")) m.calibrate = detail::parse_bool("calibrate.enabled", *v);
  if (auto v = take("calibrate.lambda_grid")) c.lambda_grid = detail::parse_list<double>("lambda_grid", *v);
  if (auto v = take("calibrate.alpha_grid")) c.alpha_grid = detail::parse_list<double>("alpha_grid", *v);
  if (auto v = take("calibrate.heldout_fraction")) {
    c.heldout_fraction = detail::parse_number<double>("calibrate.heldout_fraction", *v);
  }
  if (auto v = take("calibrate.snippets")) c.snippets = detail::parse_number<std::size_t>("snippets", *v);

  if (auto v = take("eval.awpp_negatives")) {
    m.awpp_negatives = detail::parse_number<std::uint32_t>("awpp_negatives", *v);
  }
  if (auto v = take("eval.classify_train")) m.classify_train = path_of(*v);
  if (auto v = take("eval.classify_test")) m.classify_test = path_of(*v);
  if (auto v = take("eval.classify_epochs")) {
    m.classify_epochs = detail::parse_number<std::uint32_t>("classify_epochs", *v);
  }
  if (auto v = take("eval.classify_lr")) m.classify_lr = detail::parse_number<double>("classify_lr", *v);

  for (auto it = e.begin(); it != e.end();) {
    if (it->first.starts_with("inputs.")) {
      m.input_hashes.emplace(it->first.substr(7), it->second);
      it = e.erase(it);
    } else {
      ++it;
    }
  }

  if (!e.empty()) throw ManifestError("unknown manifest key '" + e.begin()->first + "'");
  m.train.seed = m.seed;
  return m;
}

inline ExperimentManifest read_manifest(std::istream& in, const std::filesystem::path& base_dir = {}) {
  return manifest_from_entries(parse_manifest_entries(in), base_dir);
}

// Structural checks that need no file access.
inline void validate(const ExperimentManifest& m) {
  if (m.target.empty()) throw ManifestError("manifest has no target corpus");
  if (needs_source(m.mode) && m.source.empty()) {
    throw ManifestError(std::string("mode ") + method_label(m) + " needs a source corpus");
  }
  if (m.mode != Mode::kSrcSel && (m.weighting != WeightingMode::kContext || m.inject_fraction > 0)) {
    throw ManifestError("weighting options only apply to the srcsel modes");
  }
  if (m.inject_fraction < 0 || m.inject_fraction >= 1) throw ManifestError("inject_fraction must lie in [0, 1)");
  if (m.train.dim == 0) throw ManifestError("train.dim must be positive");
  if (m.train.negatives == 0) throw ManifestError("train.negatives must be positive");
  if (m.train.workers == 0) throw ManifestError("train.workers must be positive");
  if (!(m.train.initial_lr > 0)) throw ManifestError("train.lr must be positive");
  if (m.train.reg_weight < 0) throw ManifestError("train.reg_weight must be nonnegative");
  if (m.top_r == 0) throw ManifestError("select.top_r must be positive");
  if (!(m.lambda > 0)) throw ManifestError("drift.lambda must be positive");
  if (!(m.alpha > 0)) throw ManifestError("weighting.alpha must be positive");
  if (m.awpp_negatives == 0) throw ManifestError("eval.awpp_negatives must be positive");
  if (m.classify_train.empty() != m.classify_test.empty()) {
    throw ManifestError("eval.classify_train and eval.classify_test go together");
  }
}

// Every setting spelled out, with input hashes; the output directory is left
// out so copies of one experiment compare equal.
inline void write_manifest(std::ostream& out, const ExperimentManifest& m) {
  using detail::fmt_double;
  out << "mode = " << mode_name(m.mode) << '\n';
  out << "seed = " << m.seed << '\n';
  out << "target = " << m.target << '\n';
  if (!m.source.empty()) out << "source = " << m.source << '\n';
  if (!m.eval.empty()) out << "eval = " << m.eval << '\n';
  out << "\n[corpus]\n";
  out << "min_count = " << m.min_count << '\n';
  out << "documents = " << (m.documents == DocumentMode::kLine ? "line" : "paragraph") << '\n';
  const auto& t = m.train;
  out << "\n[train]\n";
  out << "dim = " << t.dim << '\n';
  out << "window = " << t.window << '\n';
  out << "negatives = " << t.negatives << '\n';
  out << "epochs = " << t.epochs << '\n';
  out << "epoch_grid = " << detail::fmt_list(m.epoch_grid) << '\n';
  out << "lr = " << fmt_double(t.initial_lr) << '\n';
  out << "distortion = " << fmt_double(t.distortion) << '\n';
  out << "workers = " << t.workers << '\n';
  out << "reg_weight = " << fmt_double(t.reg_weight) << '\n';
  out << "shrink_window = " << (t.shrink_window ? "true" : "false") << '\n';
  out << "subsample = " << fmt_double(t.subsample) << '\n';
  out << "strip_source_focus = " << (t.strip_source_focus ? "true" : "false") << '\n';
  out << "\n[select]\n";
  out << "top_r = " << m.top_r << '\n';
  out << "min_votes = " << m.retain.min_votes << '\n';
  out << "cutoff_quantiles = " << detail::fmt_list(m.retain.cutoff_quantiles) << '\n';
  out << "heldout_fraction = " << fmt_double(m.select_heldout_fraction) << '\n';
  out << "\n[drift]\n";
  out << "lambda = " << fmt_double(m.lambda) << '\n';
  out << "neighbors = " << m.neighbors << '\n';
  out << "clip_top = " << m.clip_top << '\n';
  out << "\n[weighting]\n";
  out << "mode = " << weighting_name(m.weighting) << '\n';
  out << "alpha = " << fmt_double(m.alpha) << '\n';
  out << "inject_fraction = " << fmt_double(m.inject_fraction) << '\n';
  const auto& c = m.calibration;
  out << "\n[calibrate]\n";
  out << "enabled = " << (m.calibrate ? "true" : "false") << '\n';
  out << "lambda_grid = " << detail::fmt_list(c.lambda_grid) << '\n';
  out << "alpha_grid = " << detail::fmt_list(c.alpha_grid) << '\n';
  out << "heldout_fraction = " << fmt_double(c.heldout_fraction) << '\n';
  out << "snippets = " << c.snippets << '\n';
  out << "\n[eval]\n";
  out << "awpp_negatives = " << m.awpp_negatives << '\n';
  if (!m.classify_train.empty()) {
    out << "classify_train = " << m.classify_train << '\n';
    out << "classify_test = " << m.classify_test << '\n';
  }
  out << "classify_epochs = " << m.classify_epochs << '\n';
  out << "classify_lr = " << fmt_double(m.classify_lr) << '\n';
  if (!m.input_hashes.empty()) {
    out << "\n[inputs]\n";
    for (const auto& [role, hash] : m.input_hashes) out << role << " = " << hash << '\n';
  }
}

}  // namespace srcsel
