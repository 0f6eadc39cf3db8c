#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/data/image_tensor.hpp"
#include "nightday/nn/adam.hpp"
#include "nightday/translation/losses.hpp"
#include "nightday/translation/networks.hpp"

namespace nightday::translation {

struct TranslationLosses {
  double d_a = 0;
  double d_b = 0;
  double g_adv = 0;  // both directions summed
  double cycle = 0;

  friend bool operator==(const TranslationLosses&, const TranslationLosses&) = default;
};

/// Adam state for the joint generator update and each discriminator.
template <class T>
struct TranslationOptimizer {
  nn::Adam<T> generators;
  nn::Adam<T> d_a;
  nn::Adam<T> d_b;

  explicit TranslationOptimizer(nn::AdamConfig config = {}) : generators(config), d_a(config), d_b(config) {}
};

/// One generator update (adversarial terms in both directions plus cycle
/// consistency) followed by one update of each discriminator on the same fakes.
/// Losses are averaged over the batch. Non-finite values anywhere raise
/// DivergenceError with the step number.
template <class T, class Disc>
  requires Critic<Disc, T>
TranslationLosses train_translation_step(TranslationModels<T, Disc>& m, std::span<const Tensor<T>> batch_a,
                                         std::span<const Tensor<T>> batch_b, TranslationOptimizer<T>& opt,
                                         T lambda_cycle = T(10)) {
  if (batch_a.empty() || batch_a.size() != batch_b.size())
    throw ArgumentError("translation step needs equally sized non-empty batches");
  for (std::size_t i = 0; i < batch_a.size(); ++i) require_same_shape(batch_a[i], batch_b[i], "translation batch");
  const std::int64_t step = m.step + 1;
  const T inv_batch = T(1) / static_cast<T>(batch_a.size());
  try {
    auto g_params = m.generator_parameters();
    nn::zero_grad(g_params);

    TranslationLosses losses;
    std::vector<Tensor<T>> fakes_b, fakes_a;
    for (std::size_t i = 0; i < batch_a.size(); ++i) {
      const Tensor<T>& a = batch_a[i];
      const Tensor<T>& b = batch_b[i];
      Tape<T> t_fake_b, t_rec_a, t_fake_a, t_rec_b, t_db, t_da;
      Tensor<T> fake_b = m.g_ab.forward(a, &t_fake_b);
      Tensor<T> rec_a = m.g_ba.forward(fake_b, &t_rec_a);
      Tensor<T> fake_a = m.g_ba.forward(b, &t_fake_a);
      Tensor<T> rec_b = m.g_ab.forward(fake_a, &t_rec_b);

      auto adv_ab = adversarial_loss_generator(m.d_b.forward(fake_b, &t_db));
      auto adv_ba = adversarial_loss_generator(m.d_a.forward(fake_a, &t_da));
      auto cyc = cycle_loss(a, rec_a, b, rec_b, lambda_cycle);
      losses.g_adv += static_cast<double>(adv_ab.value + adv_ba.value) * inv_batch;
      losses.cycle += static_cast<double>(cyc.value) * inv_batch;

      adv_ab.grad_fake *= inv_batch;
      adv_ba.grad_fake *= inv_batch;
      cyc.grad_a_cycled *= inv_batch;
      cyc.grad_b_cycled *= inv_batch;

      Tensor<T> g_fake_b = m.d_b.backward(adv_ab.grad_fake, t_db);
      g_fake_b += m.g_ba.backward(cyc.grad_a_cycled, t_rec_a);
      m.g_ab.backward(g_fake_b, t_fake_b);

      Tensor<T> g_fake_a = m.d_a.backward(adv_ba.grad_fake, t_da);
      g_fake_a += m.g_ab.backward(cyc.grad_b_cycled, t_rec_b);
      m.g_ba.backward(g_fake_a, t_fake_a);

      fakes_b.push_back(std::move(fake_b));
      fakes_a.push_back(std::move(fake_a));
    }
    if (!std::isfinite(losses.g_adv) || !std::isfinite(losses.cycle))
      throw DivergenceError("non-finite generator loss", step);
    opt.generators.step(g_params);

    auto update_critic = [&](Disc& d, nn::Adam<T>& adam, std::span<const Tensor<T>> reals,
                             const std::vector<Tensor<T>>& fakes) {
      auto params = d.parameters();
      nn::zero_grad(params);
      double total = 0;
      for (std::size_t i = 0; i < reals.size(); ++i) {
        Tape<T> t_real, t_fake;
        const Tensor<T> real_scores = d.forward(reals[i], &t_real);
        const Tensor<T> fake_scores = d.forward(fakes[i], &t_fake);
        auto loss = adversarial_loss_discriminator(real_scores, fake_scores);
        total += static_cast<double>(loss.value) * inv_batch;
        loss.grad_real *= inv_batch;
        loss.grad_fake *= inv_batch;
        d.backward(loss.grad_real, t_real);
        d.backward(loss.grad_fake, t_fake);
      }
      if (!std::isfinite(total)) throw DivergenceError("non-finite discriminator loss", step);
      adam.step(params);
      return total;
    };
    losses.d_b = update_critic(m.d_b, opt.d_b, batch_b, fakes_b);
    losses.d_a = update_critic(m.d_a, opt.d_a, batch_a, fakes_a);
    m.step = step;
    return losses;
  } catch (const NumericError& e) {
    throw DivergenceError(e.what(), step);
  }
}

/// Night -> day with G_ab. A non-empty `expected_digest` must match the checkpoint.
inline ImageTensor translate(const TranslationCheckpoint& ckpt, const ImageTensor& night,
                             std::string_view expected_digest = {}) {
  if (!expected_digest.empty() && expected_digest != ckpt.config_digest)
    throw CompatibilityError("translation checkpoint digest " + ckpt.config_digest + " does not match config digest " +
                             std::string(expected_digest));
  Tensor<float> out = ckpt.g_ab.forward(night.tensor());
  for (auto& v : out.values()) v = std::clamp(v, -1.0f, 1.0f);
  return ImageTensor(std::move(out));
}

}  // namespace nightday::translation
