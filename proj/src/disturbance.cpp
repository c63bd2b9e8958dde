#include "armhe/disturbance.hpp"

namespace armhe {

namespace {

double base_draw(NoiseKind kind, double scale, Rng& rng) {
  if (scale <= 0.0) return 0.0;
  return kind == NoiseKind::kNormal ? rng.normal(0.0, scale)
                                    : rng.uniform(-scale, scale);
}

}  // namespace

CorruptResult corrupt(const Vec4& clean, const NoiseSpec& spec, Rng& rng) {
  CorruptResult out;
  const double scales[kMeasDim] = {spec.sigma_beta, spec.sigma_theta,
                                   spec.sigma_xy, spec.sigma_xy};
  out.noisy = clean;
  for (int i = 0; i < kMeasDim; ++i)
    out.noisy[i] += base_draw(spec.kind, scales[i], rng);

  const bool shared_event =
      !spec.per_channel_events && spec.outlier_prob > 0.0 &&
      rng.bernoulli(spec.outlier_prob);
  for (int i = 0; i < kMeasDim; ++i) {
    if (!spec.outlier_channels[i]) continue;
    const bool hit = spec.per_channel_events
                         ? rng.bernoulli(spec.outlier_prob)
                         : shared_event;
    if (!hit) continue;
    out.noisy[i] += base_draw(spec.kind, spec.outlier_scale, rng);
    out.outlier[i] = true;
  }
  return out;
}

}  // namespace armhe
