#include "flowdeblur/gan_math.hpp"

#include <algorithm>
#include <cmath>

namespace flowdeblur {

void LossWeights::validate() const {
    if (!(gamma >= 0.0) || !(lambda >= 0.0) || !std::isfinite(gamma) ||
        !std::isfinite(lambda))
        throw ParameterError("LossWeights: gamma and lambda must be finite and >= 0");
}

void BufferPolicy::validate() const {
    if (capacity <= 0) throw ParameterError("BufferPolicy: capacity must be > 0");
    double sum = 0.0;
    for (double p : proportions) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ParameterError("BufferPolicy: proportions must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParameterError("BufferPolicy: proportions must sum to 1");
}

double artifacts_penalty(double d_generated, double d_sharp) {
    if (!std::isfinite(d_generated) || !std::isfinite(d_sharp))
        throw ParameterError("artifacts_penalty: scores must be finite");
    return std::max(d_generated - d_sharp, 0.0);
}

double wasserstein_estimate(std::span<const double> scores_corrupted,
                            std::span<const double> scores_observed) {
    if (scores_corrupted.empty() || scores_observed.empty())
        throw ParameterError("wasserstein_estimate: score lists must be non-empty");
    double a = 0.0, b = 0.0;
    for (double v : scores_corrupted) a += v;
    for (double v : scores_observed) b += v;
    return a / static_cast<double>(scores_corrupted.size()) -
           b / static_cast<double>(scores_observed.size());
}

double cgan_generator_loss(double d_fake) {
    if (!(d_fake >= 0.0) || !(d_fake <= 1.0))
        throw ParameterError("cgan_generator_loss: d_fake must lie in [0,1]");
    const double clamped = std::min(d_fake, 1.0 - 1e-12);
    return std::log(1.0 - clamped);
}

double content_loss(const FeatureTensor& features_a, const FeatureTensor& features_b) {
    if (features_a.channels != features_b.channels ||
        features_a.height != features_b.height ||
        features_a.width != features_b.width)
        throw ShapeError("content_loss: feature tensors must share a shape");
    if (features_a.data.empty())
        throw ParameterError("content_loss: empty feature tensors");
    double sum = 0.0;
    for (std::size_t i = 0; i < features_a.data.size(); ++i) {
        const double d = features_a.data[i] - features_b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(features_a.data.size());
}

double total_loss(double content, double adversarial, double penalty,
                  const LossWeights& weights) {
    weights.validate();
    return content + weights.gamma * adversarial + weights.lambda * penalty;
}

std::array<int, 3> buffer_counts(const BufferPolicy& policy) {
    policy.validate();
    std::array<int, 3> counts{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = policy.capacity * policy.proportions[i];
        counts[i] = static_cast<int>(std::floor(exact));
        remainders[i] = exact - counts[i];
        assigned += counts[i];
    }
    // Largest-remainder distribution of the leftovers; ties go to the
    // earliest level.
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t i = 0; assigned < policy.capacity; ++i)
        counts[order[i % 3]] += 1, ++assigned;
    return counts;
}

} // namespace flowdeblur
