// Lossless PNG input/output. Samples map linearly between [0,1] and the
// integer range of the file's bit depth (8 or 16).
#ifndef FLOWDEBLUR_IMAGE_IO_HPP
#define FLOWDEBLUR_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowdeblur/image.hpp"

namespace flowdeblur {

Image read_image(const std::filesystem::path& path);
void write_image(const Image& img, const std::filesystem::path& path,
                 int bit_depth = 8);

// In-memory variants, used where images cross process boundaries.
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth = 8);

} // namespace flowdeblur

#endif
