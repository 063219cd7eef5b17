#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcsel/rng.hpp"

namespace srcsel::synthetic {

// Topic-clustered text generator for benchmarks: each document draws one
// topic and mixes that topic's words with shared function words.
struct TopicSpec {
  std::uint32_t topics = 8;
  std::uint32_t words_per_topic = 40;
  std::uint32_t function_words = 10;
  std::uint32_t doc_length = 30;
  double topic_prob = 0.8;  // chance a token comes from the document's topic
  double zipf = 0.5;        // within-list weight of rank r is (r+1)^-zipf
};

class TopicWorld {
 public:
  explicit TopicWorld(const TopicSpec& spec) : spec_(spec) {
    if (spec.topics == 0 || spec.words_per_topic == 0) throw std::invalid_argument("empty topic world");
    members_.resize(spec.topics);
    for (std::uint32_t t = 0; t < spec.topics; ++t) {
      for (std::uint32_t i = 0; i < spec.words_per_topic; ++i) {
        members_[t].push_back({topic_word(t, i), rank_weight(i)});
      }
    }
    for (std::uint32_t i = 0; i < spec.function_words; ++i) {
      function_.push_back({"f" + std::to_string(i), rank_weight(i)});
    }
  }

  static std::string topic_word(std::uint32_t topic, std::uint32_t i) {
    return "t" + std::to_string(topic) + "w" + std::to_string(i);
  }

  const TopicSpec& spec() const { return spec_; }

  std::vector<std::string> topic_words(std::uint32_t topic) const {
    std::vector<std::string> out;
    for (const auto& m : members_.at(topic)) out.push_back(m.word);
    return out;
  }

  // Moves round(fraction * all topic words) randomly chosen topic words into a
  // different, randomly chosen topic. Returns the moved words.
  std::vector<std::string> drift(double fraction, std::uint64_t seed) {
    if (spec_.topics < 2) throw std::invalid_argument("drift needs at least two topics");
    Rng rng(substream(seed, "drift"));
    std::vector<std::pair<std::uint32_t, std::uint32_t>> all;
    for (std::uint32_t t = 0; t < spec_.topics; ++t) {
      for (std::uint32_t i = 0; i < members_[t].size(); ++i) all.emplace_back(t, i);
    }
    shuffle(std::span(all), rng);
    const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(all.size())));
    all.resize(n);
    std::vector<Member> moving;
    std::vector<std::uint32_t> dest;
    for (const auto& [t, i] : all) {
      moving.push_back(members_[t][i]);
      auto to = static_cast<std::uint32_t>(rng.below(spec_.topics - 1));
      if (to >= t) ++to;
      dest.push_back(to);
    }
    // erase by word so indices stay valid during removal
    for (auto& list : members_) {
      std::erase_if(list, [&](const Member& m) {
        return std::ranges::any_of(moving, [&](const Member& x) { return x.word == m.word; });
      });
    }
    std::vector<std::string> moved;
    for (std::size_t k = 0; k < moving.size(); ++k) {
      members_[dest[k]].push_back(moving[k]);
      moved.push_back(moving[k].word);
    }
    return moved;
  }

  std::vector<std::string> document(std::uint32_t topic, Rng& rng) const {
    std::vector<std::string> doc;
    doc.reserve(spec_.doc_length);
    for (std::uint32_t k = 0; k < spec_.doc_length; ++k) {
      const bool from_topic = function_.empty() || rng.uniform() < spec_.topic_prob;
      doc.push_back(pick(from_topic ? members_[topic] : function_, rng));
    }
    return doc;
  }

  // n documents with topics drawn uniformly from `topics` (all when empty).
  std::vector<std::vector<std::string>> corpus(std::size_t n, std::uint64_t seed,
                                               std::span<const std::uint32_t> topics = {}) const {
    Rng rng(substream(seed, "synthetic-corpus"));
    std::vector<std::vector<std::string>> docs;
    docs.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
      const std::uint32_t t = topics.empty()
                                  ? static_cast<std::uint32_t>(rng.below(spec_.topics))
                                  : topics[rng.below(topics.size())];
      docs.push_back(document(t, rng));
    }
    return docs;
  }

 private:
  struct Member {
    std::string word;
    double weight;
  };

  double rank_weight(std::uint32_t i) const { return std::pow(static_cast<double>(i + 1), -spec_.zipf); }

  static const std::string& pick(const std::vector<Member>& list, Rng& rng) {
    double total = 0;
    for (const auto& m : list) total += m.weight;
    double u = rng.uniform() * total;
    for (const auto& m : list) {
      if (u < m.weight) return m.word;
      u -= m.weight;
    }
    return list.back().word;
  }

  TopicSpec spec_;
  std::vector<std::vector<Member>> members_;
  std::vector<Member> function_;
};

inline std::string to_text(const std::vector<std::vector<std::string>>& docs) {
  std::string out;
  for (const auto& d : docs) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i) out += ' ';
      out += d[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace srcsel::synthetic
