#include "flowdeblur/blur.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowdeblur {

namespace {

constexpr int kSamplesPerPixel = 256; // line-integration density

// Scratch accumulation grid reused across pixels of one flow map.
struct StampScratch {
    std::vector<double> grid;
    int radius = 0;

    void reset(int radius_needed) {
        radius = radius_needed;
        const int side = 2 * radius + 1;
        grid.assign(static_cast<std::size_t>(side) * side, 0.0);
    }
    double& at(int dx, int dy) {
        const int side = 2 * radius + 1;
        return grid[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
    }
};

// Integrate the centered segment into the scratch grid via midpoint samples
// with bilinear splatting; returns the number of samples used.
int rasterize_segment(double u, double v, StampScratch& scratch) {
    const double len = std::hypot(u, v);
    const int radius =
        static_cast<int>(std::floor(std::max(std::abs(u), std::abs(v)) / 2.0)) + 2;
    scratch.reset(radius);
    if (len == 0.0) {
        scratch.at(0, 0) = 1.0;
        return 1;
    }
    const int samples =
        std::max(1, static_cast<int>(std::ceil(len * kSamplesPerPixel)));
    const double w = 1.0 / samples;
    for (int k = 0; k < samples; ++k) {
        const double t = (k + 0.5) / samples;
        const double px = (t - 0.5) * u;
        const double py = (t - 0.5) * v;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        scratch.at(x0, y0) += w * (1.0 - fx) * (1.0 - fy);
        scratch.at(x0 + 1, y0) += w * fx * (1.0 - fy);
        scratch.at(x0, y0 + 1) += w * (1.0 - fx) * fy;
        scratch.at(x0 + 1, y0 + 1) += w * fx * fy;
    }
    return samples;
}

inline int clamp_index(int v, int hi) {
    return v < 0 ? 0 : (v > hi ? hi : v);
}

} // namespace

double KernelStamp::weight_sum() const {
    double s = 0.0;
    for (const Tap& t : taps) s += t.weight;
    return s;
}

KernelStamp kernel_from_motion(double u, double v) {
    if (!std::isfinite(u) || !std::isfinite(v))
        throw ParameterError("kernel_from_motion: motion must be finite");
    StampScratch scratch;
    rasterize_segment(u, v, scratch);

    KernelStamp stamp;
    double sum = 0.0;
    const int r = scratch.radius;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double w = scratch.at(dx, dy);
            if (w > 0.0) {
                stamp.taps.push_back({dx, dy, w});
                sum += w;
            }
        }
    for (auto& tap : stamp.taps) tap.weight /= sum;
    return stamp;
}

FlowOperator::FlowOperator(const MotionFlowMap& flow, BoundaryPolicy boundary)
    : width_(flow.width), height_(flow.height), boundary_(boundary) {
    if (flow.width <= 0 || flow.height <= 0)
        throw ParameterError("FlowOperator: empty flow map");
    offsets_.reserve(flow.pixels() + 1);
    offsets_.push_back(0);
    StampScratch scratch;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) {
            const double u = flow.u_at(y, x);
            const double v = flow.v_at(y, x);
            if (!std::isfinite(u) || !std::isfinite(v))
                throw ParameterError("FlowOperator: non-finite motion at (" +
                                     std::to_string(x) + "," + std::to_string(y) + ")");
            rasterize_segment(u, v, scratch);
            double sum = 0.0;
            const int r = scratch.radius;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    sum += scratch.at(dx, dy);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double w = scratch.at(dx, dy);
                    if (w > 0.0) taps_.push_back({dx, dy, w / sum});
                }
            offsets_.push_back(static_cast<std::uint32_t>(taps_.size()));
        }
}

void FlowOperator::require_compatible(const Image& img, const char* what) const {
    if (img.width != width_ || img.height != height_)
        throw ShapeError(std::string(what) + ": image " + std::to_string(img.width) +
                         "x" + std::to_string(img.height) + " vs flow " +
                         std::to_string(width_) + "x" + std::to_string(height_));
}

Image FlowOperator::forward(const Image& sharp) const {
    require_compatible(sharp, "forward_blur");
    Image out(width_, height_, sharp.channels);
    const int xmax = width_ - 1, ymax = height_ - 1;
    for (int c = 0; c < sharp.channels; ++c) {
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * width_ + x;
                double acc = 0.0;
                for (std::uint32_t t = offsets_[pix]; t < offsets_[pix + 1]; ++t) {
                    const PackedTap& tap = taps_[t];
                    const int sx = x + tap.dx;
                    const int sy = y + tap.dy;
                    if (boundary_ == BoundaryPolicy::replicate) {
                        acc += tap.weight *
                               sharp.at(c, clamp_index(sy, ymax), clamp_index(sx, xmax));
                    } else if (sx >= 0 && sx <= xmax && sy >= 0 && sy <= ymax) {
                        acc += tap.weight * sharp.at(c, sy, sx);
                    }
                }
                out.at(c, y, x) = acc;
            }
    }
    return out;
}

Image FlowOperator::adjoint(const Image& residual) const {
    require_compatible(residual, "adjoint_blur");
    Image out(width_, height_, residual.channels);
    std::vector<double> acc(static_cast<std::size_t>(width_) * height_);
    const int xmax = width_ - 1, ymax = height_ - 1;
    for (int c = 0; c < residual.channels; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * width_ + x;
                const double r = residual.at(c, y, x);
                for (std::uint32_t t = offsets_[pix]; t < offsets_[pix + 1]; ++t) {
                    const PackedTap& tap = taps_[t];
                    const int sx = x + tap.dx;
                    const int sy = y + tap.dy;
                    if (boundary_ == BoundaryPolicy::replicate) {
                        acc[static_cast<std::size_t>(clamp_index(sy, ymax)) * width_ +
                            clamp_index(sx, xmax)] += tap.weight * r;
                    } else if (sx >= 0 && sx <= xmax && sy >= 0 && sy <= ymax) {
                        acc[static_cast<std::size_t>(sy) * width_ + sx] +=
                            tap.weight * r;
                    }
                }
            }
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                out.at(c, y, x) = acc[static_cast<std::size_t>(y) * width_ + x];
    }
    return out;
}

Image FlowOperator::normal(const Image& x, double beta) const {
    if (beta < 0.0)
        throw ParameterError("normal_apply: beta must be non-negative");
    Image out = adjoint(forward(x));
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += beta * x.data[i];
    return out;
}

Image forward_blur(const Image& sharp, const MotionFlowMap& flow,
                   BoundaryPolicy boundary) {
    return FlowOperator(flow, boundary).forward(sharp);
}

Image adjoint_blur(const Image& residual, const MotionFlowMap& flow,
                   BoundaryPolicy boundary) {
    return FlowOperator(flow, boundary).adjoint(residual);
}

Image normal_apply(const Image& x, const MotionFlowMap& flow, double beta,
                   BoundaryPolicy boundary) {
    return FlowOperator(flow, boundary).normal(x, beta);
}

} // namespace flowdeblur
