#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "srcsel/model.hpp"
#include "srcsel/sampler.hpp"
#include "srcsel/windows.hpp"

namespace srcsel {

// Pull of target focus rows towards aligned source rows:
// loss += rho * score[w] * ||u_w - source_focus[w]||^2.
template <typename Real>
struct Regularizer {
  Matrix<Real> source_focus;  // aligned to the target vocabulary
  std::vector<Real> score;    // per target word, in [0, 1]; 0 if absent from source
  Real rho = 1;
};

// Aligns source focus rows to the target vocabulary. Words absent from the
// source get a zero row and score 0 regardless of `scores`.
template <typename Real>
Regularizer<Real> make_regularizer(const Vocabulary& target_vocab, const Vocabulary& source_vocab,
                                   const EmbeddingModel<Real>& source, std::vector<Real> scores,
                                   Real rho) {
  if (scores.size() != target_vocab.size()) throw std::invalid_argument("score vector size mismatch");
  Regularizer<Real> reg{Matrix<Real>(target_vocab.size(), source.dim()), std::move(scores), rho};
  for (WordId i = 0; i < target_vocab.size(); ++i) {
    if (const auto s = source_vocab.find(target_vocab.word(i))) {
      std::ranges::copy(source.focus.row(*s), reg.source_focus.row(i).begin());
    } else {
      reg.score[i] = 0;
    }
  }
  return reg;
}

namespace detail {

// -log(sigmoid(x)), stable for large |x|.
template <typename Real>
inline Real neg_log_sigmoid(Real x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

template <typename Real>
inline Real sigmoid(Real x) {
  return x >= 0 ? Real(1) / (Real(1) + std::exp(-x)) : std::exp(x) / (Real(1) + std::exp(x));
}

template <typename Real>
void context_mean(const Matrix<Real>& ctx, std::span<const WordId> context, std::span<Real> out) {
  std::ranges::fill(out, Real(0));
  const Real inv = Real(1) / static_cast<Real>(context.size());
  for (WordId c : context) axpy<Real>(inv, ctx.row(c), out);
}

}  // namespace detail

template <typename Real>
struct StepWorkspace {
  std::vector<Real> hidden;
  std::vector<Real> grad_hidden;
  std::vector<Real> reg_diff;
  std::vector<Real> coeff;
  std::vector<WordId> negatives;
  std::vector<WordId> context;

  void resize(std::size_t dim) {
    hidden.resize(dim);
    grad_hidden.resize(dim);
    reg_diff.resize(dim);
  }
};

// Weighted negative CBOW objective for one (focus, context) window with the
// given negatives:
//   weight * ( -log s(u_w . v_C) - sum_j log s(-u_j . v_C)
//              + rho * score_w * ||u_w - u^S_w||^2 )
// where v_C is the mean of the context rows.
template <typename Real>
Real sample_loss(const EmbeddingModel<Real>& m, WordId focus, std::span<const WordId> context,
                 std::span<const WordId> negatives, Real weight,
                 const Regularizer<Real>* reg = nullptr) {
  std::vector<Real> h(m.dim());
  detail::context_mean<Real>(m.context, context, h);
  Real loss = detail::neg_log_sigmoid<Real>(dot<Real>(m.focus.row(focus), h));
  for (WordId n : negatives) loss += detail::neg_log_sigmoid<Real>(-dot<Real>(m.focus.row(n), h));
  if (reg != nullptr && reg->score[focus] != 0) {
    Real sq = 0;
    const auto u = m.focus.row(focus);
    const auto s = reg->source_focus.row(focus);
    for (std::size_t i = 0; i < u.size(); ++i) sq += (u[i] - s[i]) * (u[i] - s[i]);
    loss += reg->rho * reg->score[focus] * sq;
  }
  return weight * loss;
}

// One SGD step on sample_loss with explicit negatives. All gradients are taken
// at the pre-step parameters, so repeated ids receive the exact summed
// gradient. The regularizer step coefficient 2*lr*weight*rho*score is capped
// at 1, which lands exactly on the source row instead of overshooting it.
// Returns the pre-step loss.
template <typename Real>
Real cbow_update(EmbeddingModel<Real>& m, WordId focus, std::span<const WordId> context,
                 std::span<const WordId> negatives, Real lr, Real weight,
                 const Regularizer<Real>* reg, StepWorkspace<Real>& ws) {
  const std::size_t dim = m.dim();
  ws.resize(dim);
  std::span<Real> h(ws.hidden.data(), dim);
  std::span<Real> gh(ws.grad_hidden.data(), dim);
  detail::context_mean<Real>(m.context, context, h);

  const std::size_t n_out = negatives.size() + 1;
  ws.coeff.resize(n_out);
  const auto out_id = [&](std::size_t j) { return j == 0 ? focus : negatives[j - 1]; };

  Real loss = 0;
  for (std::size_t j = 0; j < n_out; ++j) {
    const Real f = dot<Real>(m.focus.row(out_id(j)), std::span<const Real>(h));
    // z is the margin: the positive example wants f large, negatives small.
    const Real z = j == 0 ? f : -f;
    const Real e = std::exp(-std::abs(z));
    const Real sig_z = z >= 0 ? Real(1) / (Real(1) + e) : e / (Real(1) + e);
    loss += std::log1p(e) + (z < 0 ? -z : Real(0));
    // ascent direction of the log-likelihood w.r.t. f: (label - sigmoid(f))
    ws.coeff[j] = j == 0 ? Real(1) - sig_z : -(Real(1) - sig_z);
  }

  const bool regularized = reg != nullptr && reg->score[focus] != 0;
  if (regularized) {
    const auto u = m.focus.row(focus);
    const auto s = reg->source_focus.row(focus);
    Real sq = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      ws.reg_diff[i] = u[i] - s[i];
      sq += ws.reg_diff[i] * ws.reg_diff[i];
    }
    loss += reg->rho * reg->score[focus] * sq;
  }
  loss *= weight;
  if (weight == Real(0)) return loss;

  const Real step = lr * weight;
  std::ranges::fill(gh, Real(0));
  // Fused pass: accumulate the hidden gradient from the pre-step row, then
  // update the row. A repeated negative id is seen twice; its second visit
  // must read the pre-step value, so duplicates take the unfused path.
  bool duplicates = false;
  for (std::size_t j = 1; j < n_out && !duplicates; ++j) {
    for (std::size_t i = 0; i < j; ++i) duplicates = duplicates || out_id(i) == out_id(j);
  }
  if (!duplicates) {
    for (std::size_t j = 0; j < n_out; ++j) {
      Real* u = m.focus.row(out_id(j)).data();
      const Real g = ws.coeff[j];
      const Real gs = step * g;
      for (std::size_t i = 0; i < dim; ++i) {
        gh[i] += g * u[i];
        u[i] += gs * h[i];
      }
    }
  } else {
    for (std::size_t j = 0; j < n_out; ++j) axpy<Real>(ws.coeff[j], m.focus.row(out_id(j)), gh);
    for (std::size_t j = 0; j < n_out; ++j) {
      axpy<Real>(step * ws.coeff[j], std::span<const Real>(h), m.focus.row(out_id(j)));
    }
  }
  if (regularized) {
    const Real c = std::min(Real(1), Real(2) * step * reg->rho * reg->score[focus]);
    axpy<Real>(-c, std::span<const Real>(ws.reg_diff.data(), dim), m.focus.row(focus));
  }
  const Real ctx_step = step / static_cast<Real>(context.size());
  for (WordId c : context) axpy<Real>(ctx_step, std::span<const Real>(gh), m.context.row(c));
  return loss;
}

// Draws k negatives (re-drawn when they hit the focus word) and applies
// cbow_update.
template <typename Real>
Real cbow_step(EmbeddingModel<Real>& m, WordId focus, std::span<const WordId> context,
               const NegativeSampler& sampler, Rng& rng, std::uint32_t k, Real lr, Real weight,
               const Regularizer<Real>* reg, StepWorkspace<Real>& ws) {
  ws.negatives.clear();
  WordId n;
  for (std::uint32_t i = 0; i < k; ++i) {
    if (!sampler.sample_excluding(rng, focus, n)) break;
    ws.negatives.push_back(n);
  }
  return cbow_update<Real>(m, focus, context, ws.negatives, lr, weight, reg, ws);
}

template <typename Real>
Real cbow_step(EmbeddingModel<Real>& m, const WindowSample& s, const NegativeSampler& sampler,
               Rng& rng, std::uint32_t k, Real lr, Real weight,
               const Regularizer<Real>* reg = nullptr) {
  if (s.context.empty()) throw std::invalid_argument("cbow_step: empty context");
  if (!(lr > 0)) throw std::invalid_argument("cbow_step: learning rate must be positive");
  StepWorkspace<Real> ws;
  return cbow_step<Real>(m, s.focus, s.context, sampler, rng, k, lr, weight, reg, ws);
}

}  // namespace srcsel
