#include "flowdeblur/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace flowdeblur {

namespace {

struct MemReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

void mem_read(png_structp png, png_bytep out, png_size_t count) {
    auto* ctx = static_cast<MemReader*>(png_get_io_ptr(png));
    if (ctx->offset + count > ctx->size)
        png_error(png, "unexpected end of PNG stream");
    std::memcpy(out, ctx->data + ctx->offset, count);
    ctx->offset += count;
}

void mem_write(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void mem_flush(png_structp) {}

struct ReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~ReadGuard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct WriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~WriteGuard() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    std::uint8_t b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

} // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 ||
        png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw FormatError("decode_png: not a PNG stream");

    ReadGuard guard;
    guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                       nullptr);
    if (!guard.png) throw IoError("decode_png: libpng allocation failed");
    guard.info = png_create_info_struct(guard.png);
    if (!guard.info) throw IoError("decode_png: libpng allocation failed");

    MemReader ctx{bytes.data(), bytes.size(), 0};
    std::vector<png_byte> raster;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(guard.png)))
        throw FormatError("decode_png: malformed or truncated PNG");

    png_set_read_fn(guard.png, &ctx, mem_read);
    png_read_info(guard.png, guard.info);

    const png_byte color_type = png_get_color_type(guard.png, guard.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(guard.png);
    if (color_type == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(guard.png, guard.info) < 8)
        png_set_expand_gray_1_2_4_to_8(guard.png);
    if (png_get_valid(guard.png, guard.info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(guard.png);
    png_set_strip_alpha(guard.png); // alpha is out of scope, keep color/gray
    if (host_is_little_endian()) png_set_swap(guard.png);
    png_set_interlace_handling(guard.png);
    png_read_update_info(guard.png, guard.info);

    const int width = static_cast<int>(png_get_image_width(guard.png, guard.info));
    const int height = static_cast<int>(png_get_image_height(guard.png, guard.info));
    const int depth = png_get_bit_depth(guard.png, guard.info);
    const int channels = png_get_channels(guard.png, guard.info);
    if ((channels != 1 && channels != 3) || (depth != 8 && depth != 16))
        throw FormatError("decode_png: unsupported channel/depth combination");

    const std::size_t rowbytes = png_get_rowbytes(guard.png, guard.info);
    raster.resize(rowbytes * static_cast<std::size_t>(height));
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] = raster.data() + rowbytes * y;
    png_read_image(guard.png, rows.data());
    png_read_end(guard.png, nullptr);

    Image img(width, height, channels);
    const double scale = depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;
    for (int y = 0; y < height; ++y) {
        const png_byte* row = rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                double v;
                if (depth == 8) {
                    v = row[x * channels + c];
                } else {
                    std::uint16_t s;
                    std::memcpy(&s, row + 2 * (x * channels + c), 2);
                    v = s;
                }
                img.at(c, y, x) = v * scale;
            }
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw ParameterError("encode_png: bit depth must be 8 or 16");
    if (img.width <= 0 || img.height <= 0)
        throw ParameterError("encode_png: empty image");

    WriteGuard guard;
    guard.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                        nullptr);
    if (!guard.png) throw IoError("encode_png: libpng allocation failed");
    guard.info = png_create_info_struct(guard.png);
    if (!guard.info) throw IoError("encode_png: libpng allocation failed");

    std::vector<std::uint8_t> out;
    std::vector<png_byte> row;

    if (setjmp(png_jmpbuf(guard.png)))
        throw IoError("encode_png: libpng write failed");

    png_set_write_fn(guard.png, &out, mem_write, mem_flush);
    png_set_IHDR(guard.png, guard.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), bit_depth,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(guard.png, guard.info);
    if (host_is_little_endian()) png_set_swap(guard.png);

    const int maxval = bit_depth == 8 ? 255 : 65535;
    const std::size_t stride =
        static_cast<std::size_t>(img.width) * img.channels * (bit_depth / 8);
    row.resize(stride);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double v = img.at(c, y, x);
                if (v < 0.0) v = 0.0;
                else if (v > 1.0) v = 1.0;
                const auto q = static_cast<std::uint32_t>(std::lround(v * maxval));
                if (bit_depth == 8) {
                    row[static_cast<std::size_t>(x) * img.channels + c] =
                        static_cast<png_byte>(q);
                } else {
                    const auto s = static_cast<std::uint16_t>(q);
                    std::memcpy(row.data() + 2 * (static_cast<std::size_t>(x) *
                                                  img.channels + c), &s, 2);
                }
            }
        png_write_row(guard.png, row.data());
    }
    png_write_end(guard.png, guard.info);
    return out;
}

Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_image: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof())
        throw IoError("read_image: read failed for " + path.string());
    return decode_png(bytes);
}

void write_image(const Image& img, const std::filesystem::path& path,
                 int bit_depth) {
    const std::vector<std::uint8_t> bytes = encode_png(img, bit_depth);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_image: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_image: write failed for " + path.string());
}

} // namespace flowdeblur
