#pragma once

#include <array>

#include "armhe/rng.hpp"
#include "armhe/vehicle.hpp"

// Seeded measurement corruption: base channel noise (normal or uniform)
// plus sporadic additive outliers on the tractor position channels.

namespace armhe {

enum class NoiseKind { kNormal, kUniform };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNormal;
  double sigma_beta = M_PI / 180.0;
  double sigma_theta = 0.2 * M_PI / 180.0;
  double sigma_xy = 0.025;
  double outlier_prob = 0.1;       // per-step event probability
  double outlier_scale = 10.0;     // std dev (normal) or support half-width
  bool per_channel_events = false; // independent events per position channel
  std::array<bool, kMeasDim> outlier_channels = {false, false, true, true};

  bool valid() const {
    return sigma_beta >= 0.0 && sigma_theta >= 0.0 && sigma_xy >= 0.0 &&
           outlier_prob >= 0.0 && outlier_prob <= 1.0 && outlier_scale >= 0.0;
  }
};

struct CorruptResult {
  Vec4 noisy;
  std::array<bool, kMeasDim> outlier = {false, false, false, false};
};

/// Adds base noise to every channel and, with probability outlier_prob, an
/// outlier draw to each enabled channel. In the default mode one event hits
/// all enabled channels at once; per_channel_events draws events per channel.
CorruptResult corrupt(const Vec4& clean, const NoiseSpec& spec, Rng& rng);

}  // namespace armhe
