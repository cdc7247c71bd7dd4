#include "flowdeblur/image.hpp"

#include <cmath>
#include <string>

#include "flowdeblur/flow_map.hpp"

namespace flowdeblur {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw ParameterError("Image: dimensions must be positive and channels 1 or 3");
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.width) + "x" + std::to_string(a.height) +
                         "x" + std::to_string(a.channels) + " vs " +
                         std::to_string(b.width) + "x" + std::to_string(b.height) +
                         "x" + std::to_string(b.channels) + ")");
}

bool all_finite(const Image& img) {
    for (double v : img.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void clamp01(Image& img) {
    for (double& v : img.data) {
        if (v < 0.0) v = 0.0;
        else if (v > 1.0) v = 1.0;
    }
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image gray(img.width, img.height, 1);
    const std::size_t n = img.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.data[i];
        const double g = img.data[n + i];
        const double b = img.data[2 * n + i];
        gray.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    }
    return gray;
}

double dot(const Image& a, const Image& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double norm2(const Image& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

MotionFlowMap::MotionFlowMap(int w, int h)
    : width(w), height(h), u(static_cast<std::size_t>(w) * h, 0.0f),
      v(static_cast<std::size_t>(w) * h, 0.0f) {
    if (w <= 0 || h <= 0)
        throw ParameterError("MotionFlowMap: dimensions must be positive");
}

void require_same_shape(const MotionFlowMap& a, const MotionFlowMap& b,
                        const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": flow shape mismatch (" +
                         std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
}

} // namespace flowdeblur
