#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "srcsel/cbow.hpp"
#include "srcsel/synthetic.hpp"
#include "srcsel/trainer.hpp"

namespace srcsel {

struct ThroughputResult {
  std::uint64_t samples = 0;
  double seconds = 0.0;
  double samples_per_second = 0.0;
};

// Single-thread cbow_step throughput over windows of a synthetic corpus.
inline ThroughputResult measure_cbow_throughput(std::size_t dim, std::uint32_t negatives,
                                                std::uint32_t window, std::uint64_t min_samples,
                                                std::uint64_t seed = 1) {
  synthetic::TopicSpec spec{.topics = 20, .words_per_topic = 50, .function_words = 20,
                            .doc_length = 40};
  const auto docs = synthetic::TopicWorld(spec).corpus(2000, seed);
  const auto corpus = encode(docs, build_vocabulary(docs, 1));
  NegativeSampler sampler(token_counts(corpus), 0.75);
  auto model = init_model<float>(corpus.vocabulary, dim, seed);
  std::vector<SampleRef> samples;
  collect_samples(corpus, 0, window, false, samples);

  StepWorkspace<float> ws;
  Rng rng(seed);
  // warm-up pass so the context rows are non-zero
  for (const auto& s : samples) {
    const auto& tokens = corpus.documents[s.doc].tokens;
    fill_context(tokens, s.pos, window, false, ws.context);
    cbow_step<float>(model, tokens[s.pos], ws.context, sampler, rng, negatives, 0.025f, 1.0f,
                     nullptr, ws);
  }
  ThroughputResult r;
  const auto start = std::chrono::steady_clock::now();
  while (r.samples < min_samples) {
    for (const auto& s : samples) {
      const auto& tokens = corpus.documents[s.doc].tokens;
      fill_context(tokens, s.pos, window, false, ws.context);
      cbow_step<float>(model, tokens[s.pos], ws.context, sampler, rng, negatives, 0.025f, 1.0f,
                       nullptr, ws);
    }
    r.samples += samples.size();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.samples_per_second = static_cast<double>(r.samples) / r.seconds;
  return r;
}

}  // namespace srcsel
