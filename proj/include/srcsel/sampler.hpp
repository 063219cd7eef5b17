#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "srcsel/corpus.hpp"
#include "srcsel/rng.hpp"

namespace srcsel {

// Draws word ids with probability proportional to count^distortion. The
// cumulative table defines the distribution; draws go through an alias table
// built from it (Vose), one uniform variate per draw.
class NegativeSampler {
 public:
  NegativeSampler() = default;

  NegativeSampler(std::span<const std::uint64_t> counts, double distortion) {
    cdf_.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > 0) {
        total += std::pow(static_cast<double>(counts[i]), distortion);
        ++support_;
      }
      cdf_[i] = total;
    }
    if (support_ == 0) throw std::invalid_argument("negative sampler: all counts are zero");
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
    build_alias();
  }

  std::size_t size() const { return cdf_.size(); }
  // Number of ids with nonzero probability.
  std::size_t support() const { return support_; }

  double probability(WordId id) const {
    return id == 0 ? cdf_[0] : cdf_[id] - cdf_[id - 1];
  }

  WordId sample(Rng& rng) const {
    const double u = rng.uniform() * static_cast<double>(cdf_.size());
    const auto bucket = std::min(static_cast<std::size_t>(u), cdf_.size() - 1);
    const double frac = u - static_cast<double>(bucket);
    return frac < accept_[bucket] ? static_cast<WordId>(bucket) : alias_[bucket];
  }

  // Redraws on collisions with `avoid`. Returns false when `avoid` is the only
  // id with nonzero probability.
  bool sample_excluding(Rng& rng, WordId avoid, WordId& out) const {
    if (support_ == 1 && avoid < cdf_.size() && probability(avoid) > 0.0) return false;
    do {
      out = sample(rng);
    } while (out == avoid);
    return true;
  }

 private:
  void build_alias() {
    const std::size_t n = cdf_.size();
    accept_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<WordId> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = probability(static_cast<WordId>(i)) * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<WordId>(i));
    }
    while (!small.empty() && !large.empty()) {
      const WordId s = small.back(), l = large.back();
      small.pop_back();
      accept_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // leftovers are 1 up to rounding; zero-probability ids must never be kept
    for (WordId l : large) accept_[l] = 1.0;
    for (WordId s : small) {
      accept_[s] = probability(s) > 0.0 ? 1.0 : 0.0;
      alias_[s] = large.empty() ? first_supported() : large.front();
    }
  }

  WordId first_supported() const {
    for (WordId i = 0; i < cdf_.size(); ++i) {
      if (probability(i) > 0.0) return i;
    }
    return 0;
  }

  std::vector<double> cdf_;
  std::vector<double> accept_;
  std::vector<WordId> alias_;
  std::size_t support_ = 0;
};

}  // namespace srcsel
