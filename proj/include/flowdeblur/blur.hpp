// Spatially-varying linear-motion blur: per-pixel kernel stamps rasterized
// from a motion-flow map, with forward, adjoint and normal application.
#ifndef FLOWDEBLUR_BLUR_HPP
#define FLOWDEBLUR_BLUR_HPP

#include <cstdint>
#include <vector>

#include "flowdeblur/flow_map.hpp"
#include "flowdeblur/image.hpp"

namespace flowdeblur {

// How samples outside the image are treated. The adjoint is always the
// exact transpose of the forward under the chosen mode.
enum class BoundaryPolicy { replicate, zero };

// One discrete blur stencil. Tap offsets (dx,dy) are relative to the
// anchored pixel; weights are non-negative and sum to 1.
struct KernelStamp {
    struct Tap {
        int dx;
        int dy;
        double weight;
    };
    std::vector<Tap> taps;

    double weight_sum() const;
};

// Rasterize the motion segment from (-u/2,-v/2) to (+u/2,+v/2) by
// supersampled line integration with bilinear splatting (256 samples per
// pixel of segment length), normalized to unit mass. (0,0) is the exact
// delta; subpixel motions fall out as small bilinear stamps.
KernelStamp kernel_from_motion(double u, double v);

// Per-pixel stamps compiled from a flow map once, so repeated operator
// applications (e.g. inside a linear solver) skip re-rasterization.
class FlowOperator {
public:
    FlowOperator(const MotionFlowMap& flow, BoundaryPolicy boundary);

    // blurred(y,x) = sum_taps w * sharp(y+dy, x+dx), per channel.
    Image forward(const Image& sharp) const;
    // Exact transpose: scatters each residual pixel through its own stamp.
    Image adjoint(const Image& residual) const;
    // adjoint(forward(x)) + beta*x; symmetric positive definite for beta>0.
    Image normal(const Image& x, double beta) const;

    int width() const { return width_; }
    int height() const { return height_; }
    BoundaryPolicy boundary() const { return boundary_; }

private:
    struct PackedTap {
        std::int32_t dx;
        std::int32_t dy;
        double weight;
    };

    void require_compatible(const Image& img, const char* what) const;

    int width_ = 0;
    int height_ = 0;
    BoundaryPolicy boundary_ = BoundaryPolicy::replicate;
    std::vector<PackedTap> taps_;          // all stamps, concatenated
    std::vector<std::uint32_t> offsets_;   // pixels()+1 entries into taps_
};

// One-shot conveniences; each compiles the flow and applies once.
Image forward_blur(const Image& sharp, const MotionFlowMap& flow,
                   BoundaryPolicy boundary = BoundaryPolicy::replicate);
Image adjoint_blur(const Image& residual, const MotionFlowMap& flow,
                   BoundaryPolicy boundary = BoundaryPolicy::replicate);
Image normal_apply(const Image& x, const MotionFlowMap& flow, double beta,
                   BoundaryPolicy boundary = BoundaryPolicy::replicate);

} // namespace flowdeblur

#endif
