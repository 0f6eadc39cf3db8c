#pragma once

#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "nightday/nn/archive.hpp"
#include "nightday/translation/networks.hpp"

namespace nightday::translation {

inline constexpr std::string_view kTranslationMagic = "AINN";

namespace detail {

inline std::int64_t meta_int(const nn::TensorArchive& a, const std::string& key) {
  const std::string& v = a.meta(key);
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(key);
    return parsed;
  } catch (const std::exception&) {
    throw CheckpointError(CheckpointErrc::malformed, "metadata '" + key + "' is not an integer");
  }
}

inline std::uint64_t meta_u64(const nn::TensorArchive& a, const std::string& key) {
  const std::string& v = a.meta(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw CheckpointError(CheckpointErrc::malformed, "metadata '" + key + "' is not an unsigned integer");
  return out;
}

}  // namespace detail

inline nn::TensorArchive to_archive(TranslationCheckpoint& ckpt) {
  nn::TensorArchive a;
  a.magic = std::string(kTranslationMagic);
  a.metadata = {{"step", std::to_string(ckpt.step)},
                {"seed", std::to_string(ckpt.seed)},
                {"config_digest", ckpt.config_digest},
                {"residual_blocks", std::to_string(ckpt.g_ab.residual_blocks())},
                {"generator_width", std::to_string(ckpt.g_ab.width())},
                {"discriminator_width", std::to_string(ckpt.d_a.width())}};
  for (const auto* p : ckpt.all_parameters()) a.tensors.push_back(nn::to_record(*p));
  return a;
}

inline TranslationCheckpoint from_archive(const nn::TensorArchive& a) {
  TranslationModelConfig arch;
  arch.residual_blocks = static_cast<int>(detail::meta_int(a, "residual_blocks"));
  arch.generator_width = static_cast<int>(detail::meta_int(a, "generator_width"));
  arch.discriminator_width = static_cast<int>(detail::meta_int(a, "discriminator_width"));
  if (arch.residual_blocks < 1 || arch.generator_width < 1 || arch.discriminator_width < 1)
    throw CheckpointError(CheckpointErrc::malformed, "invalid architecture metadata");
  TranslationCheckpoint ckpt{Generator<float>(arch.residual_blocks, arch.generator_width, "g_ab."),
                             Generator<float>(arch.residual_blocks, arch.generator_width, "g_ba."),
                             PatchDiscriminator<float>(arch.discriminator_width, "d_a."),
                             PatchDiscriminator<float>(arch.discriminator_width, "d_b."),
                             detail::meta_int(a, "step"),
                             detail::meta_u64(a, "seed"),
                             a.meta("config_digest")};
  nn::assign_from(a, ckpt.all_parameters());
  return ckpt;
}

inline void save_checkpoint(TranslationCheckpoint& ckpt, const std::filesystem::path& path) {
  nn::write_archive(path, to_archive(ckpt));
}

/// Loads and, when `expected_digest` is given, checks the recorded config digest.
inline TranslationCheckpoint load_checkpoint(const std::filesystem::path& path,
                                             std::optional<std::string_view> expected_digest = std::nullopt) {
  auto ckpt = from_archive(nn::read_archive(path, kTranslationMagic));
  if (expected_digest && *expected_digest != ckpt.config_digest)
    throw CheckpointError(CheckpointErrc::digest_mismatch, "checkpoint was written for config " + ckpt.config_digest +
                                                              ", expected " + std::string(*expected_digest));
  return ckpt;
}

}  // namespace nightday::translation
