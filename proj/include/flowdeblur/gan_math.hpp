// Loss and penalty arithmetic for adversarial prior training, kept as pure
// functions so any training harness can be validated against them, plus the
// level-proportioned replay-buffer sampling policy.
#ifndef FLOWDEBLUR_GAN_MATH_HPP
#define FLOWDEBLUR_GAN_MATH_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "flowdeblur/errors.hpp"
#include "flowdeblur/rng.hpp"

namespace flowdeblur {

struct LossWeights {
    double gamma = 0.0;  // adversarial term
    double lambda = 0.0; // artifacts penalty

    void validate() const;
};

struct BufferPolicy {
    std::array<double, 3> proportions{0.5, 0.3, 0.2};
    int capacity = 1000;

    void validate() const; // proportions must sum to 1, capacity > 0
};

// Positive part of the critic-score gap: max(d_generated - d_sharp, 0).
double artifacts_penalty(double d_generated, double d_sharp);

// Empirical expectation difference mean(corrupted) - mean(observed).
double wasserstein_estimate(std::span<const double> scores_corrupted,
                            std::span<const double> scores_observed);

// log(1 - d_fake), with d_fake clamped below 1 - 1e-12 to stay finite.
// d_fake outside [0,1] is rejected.
double cgan_generator_loss(double d_fake);

// Precomputed feature activations, shape (channels, height, width).
struct FeatureTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureTensor() = default;
    FeatureTensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {}
};

// Mean squared feature difference over all channels*height*width elements.
double content_loss(const FeatureTensor& features_a,
                    const FeatureTensor& features_b);

// content + gamma*adversarial + lambda*penalty.
double total_loss(double content, double adversarial, double penalty,
                  const LossWeights& weights);

// Per-level draw counts: floor(capacity*proportion) plus largest-remainder
// distribution of what is left, so the counts always sum to capacity.
std::array<int, 3> buffer_counts(const BufferPolicy& policy);

// Draws capacity items with the per-level counts above, uniformly with
// replacement within each level, deterministic per seed.
template <typename T>
std::vector<T> buffer_sample(const std::array<std::vector<T>, 3>& items_by_level,
                             const BufferPolicy& policy, std::uint64_t seed) {
    policy.validate();
    for (const auto& level : items_by_level) {
        if (level.empty())
            throw ParameterError("buffer_sample: every level list must be non-empty");
    }
    const std::array<int, 3> counts = buffer_counts(policy);
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(policy.capacity));
    Rng rng(mix64(seed));
    for (int level = 0; level < 3; ++level) {
        const auto& items = items_by_level[static_cast<std::size_t>(level)];
        for (int i = 0; i < counts[static_cast<std::size_t>(level)]; ++i)
            out.push_back(items[bounded(rng, items.size())]);
    }
    return out;
}

} // namespace flowdeblur

#endif
