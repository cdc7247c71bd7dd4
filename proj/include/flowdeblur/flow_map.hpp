// Per-pixel motion vectors describing a spatially-varying linear blur.
#ifndef FLOWDEBLUR_FLOW_MAP_HPP
#define FLOWDEBLUR_FLOW_MAP_HPP

#include <cstddef>
#include <vector>

#include "flowdeblur/errors.hpp"

namespace flowdeblur {

// u is horizontal motion, v vertical, both in pixels and signed.
// Components are stored as 32-bit floats to match the on-disk format.
struct MotionFlowMap {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    MotionFlowMap() = default;
    MotionFlowMap(int w, int h);

    float& u_at(int y, int x) { return u[static_cast<std::size_t>(y) * width + x]; }
    float u_at(int y, int x) const { return u[static_cast<std::size_t>(y) * width + x]; }
    float& v_at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    float v_at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }

    std::size_t pixels() const {
        return static_cast<std::size_t>(width) * height;
    }
    bool same_shape(const MotionFlowMap& other) const {
        return width == other.width && height == other.height;
    }
};

void require_same_shape(const MotionFlowMap& a, const MotionFlowMap& b,
                        const char* what);

} // namespace flowdeblur

#endif
