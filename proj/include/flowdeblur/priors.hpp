// Denoising priors for the splitting loop: identity pass-through, a total
// variation proximal denoiser, and an external-process denoiser speaking a
// framed binary protocol so trained networks from any ecosystem plug in.
//
// External-denoiser wire protocol, little-endian, one frame per level:
//   request:  magic "DNZ1", u32 level, u32 width, u32 height, u32 channels,
//             channels*height*width f32 samples (deconvolved image),
//             then the same sample block for the observed image
//   reply:    magic "DNZ2", u32 width, u32 height, u32 channels, samples
// The child persists across the levels of one solve.
#ifndef FLOWDEBLUR_PRIORS_HPP
#define FLOWDEBLUR_PRIORS_HPP

#include <memory>
#include <string>
#include <vector>

#include "flowdeblur/hqs.hpp"
#include "flowdeblur/image.hpp"
#include "flowdeblur/subprocess.hpp"

namespace flowdeblur {

Image identity_denoise(const Image& deconvolved, const Image& observed,
                       int level);

struct IdentityPrior final : DenoiserPrior {
    Image denoise(const Image& deconvolved, const Image&, int) override {
        return deconvolved;
    }
};

struct TvParams {
    // Regularization strength per level; the last entry repeats for any
    // deeper level. Defaults decrease as beta increases.
    std::vector<double> weights{0.08, 0.04, 0.02};
    int inner_iters = 50;
    double step = 0.248; // dual ascent converges for step in (0, 0.25]

    double weight_for_level(int level) const;
    void validate() const;
};

// Approximate proximal operator of weight*TV (isotropic) at `input` via
// projected dual ascent. Channels are treated independently.
Image tv_prox(const Image& input, double weight, int inner_iters = 50,
              double step = 0.248);

Image tv_denoise(const Image& deconvolved, const TvParams& params,
                 int level = 1);

// Isotropic total variation of an image, the quantity tv_prox decreases.
double total_variation(const Image& img);

struct TvPrior final : DenoiserPrior {
    TvParams params;

    TvPrior() = default;
    explicit TvPrior(TvParams p) : params(std::move(p)) { params.validate(); }

    Image denoise(const Image& deconvolved, const Image&,
                  int level) override {
        return tv_denoise(deconvolved, params, level);
    }
};

struct ExternalDenoiserConfig {
    std::string command; // whitespace-split argv, resolved via PATH
    double timeout_seconds = 30.0;
};

// Reply violated the protocol: bad magic or truncated payload.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Owns one child per solve; begin_solve() discards any previous child so
// each global iteration gets a fresh process.
class ExternalDenoiser final : public DenoiserPrior {
public:
    explicit ExternalDenoiser(ExternalDenoiserConfig cfg);
    ~ExternalDenoiser() override;

    void begin_solve() override;
    Image denoise(const Image& deconvolved, const Image& observed,
                  int level) override;

private:
    ExternalDenoiserConfig cfg_;
    std::unique_ptr<Subprocess> child_;
};

// One-shot variant: spawns, exchanges a single frame, reaps the child.
Image external_denoise(const Image& deconvolved, const Image& observed,
                       int level, const ExternalDenoiserConfig& cfg);

} // namespace flowdeblur

#endif
