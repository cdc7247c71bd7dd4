// Planar floating-point image, the value type every operator works on.
#ifndef FLOWDEBLUR_IMAGE_HPP
#define FLOWDEBLUR_IMAGE_HPP

#include <cstddef>
#include <vector>

#include "flowdeblur/errors.hpp"

namespace flowdeblur {

// Samples are stored planar (channel-major), row-major within a channel,
// nominal range [0,1]. Channels are 1 (gray) or 3 (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0);

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t sample_count() const { return data.size(); }
    std::size_t pixels() const {
        return static_cast<std::size_t>(width) * height;
    }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height &&
               channels == other.channels;
    }
};

// Throws ShapeError unless a and b agree in width, height and channels.
void require_same_shape(const Image& a, const Image& b, const char* what);

// True when every sample is finite.
bool all_finite(const Image& img);

// Clamp every sample into [0,1] in place.
void clamp01(Image& img);

// Rec.601 luma of an RGB image; gray images pass through unchanged.
Image to_gray(const Image& img);

double dot(const Image& a, const Image& b);
double norm2(const Image& a);

} // namespace flowdeblur

#endif
