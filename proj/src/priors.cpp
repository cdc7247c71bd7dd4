#include "flowdeblur/priors.hpp"

#include <cmath>
#include <cstring>

namespace flowdeblur {

Image identity_denoise(const Image& deconvolved, const Image& observed, int level) {
    require_same_shape(deconvolved, observed, "identity_denoise");
    if (level < 1) throw ParameterError("identity_denoise: level is 1-based");
    return deconvolved;
}

void TvParams::validate() const {
    if (weights.empty()) throw ParameterError("TvParams: weights must be non-empty");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ParameterError("TvParams: weights must be finite and >= 0");
    if (inner_iters < 0) throw ParameterError("TvParams: inner_iters must be >= 0");
    if (!(step > 0.0) || !(step <= 0.25))
        throw ParameterError("TvParams: step must lie in (0, 0.25]");
}

double TvParams::weight_for_level(int level) const {
    if (level < 1) throw ParameterError("TvParams: level is 1-based");
    const std::size_t idx =
        std::min(static_cast<std::size_t>(level - 1), weights.size() - 1);
    return weights[idx];
}

namespace {

// Forward differences with Neumann boundary; div below is their negative
// adjoint, so <grad x, p> == -<x, div p>.
inline double div_at(const std::vector<double>& p1, const std::vector<double>& p2,
                     int w, int h, int y, int x) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    double d = 0.0;
    if (x < w - 1) d += p1[i];
    if (x > 0) d -= p1[i - 1];
    if (y < h - 1) d += p2[i];
    if (y > 0) d -= p2[i - static_cast<std::size_t>(w)];
    return d;
}

} // namespace

Image tv_prox(const Image& input, double weight, int inner_iters, double step) {
    if (!(weight >= 0.0) || !std::isfinite(weight))
        throw ParameterError("tv_prox: weight must be finite and >= 0");
    if (inner_iters < 0) throw ParameterError("tv_prox: inner_iters must be >= 0");
    if (!(step > 0.0) || !(step <= 0.25))
        throw ParameterError("tv_prox: step must lie in (0, 0.25]");
    if (weight == 0.0) return input;

    const int w = input.width, h = input.height;
    const std::size_t n = input.pixels();
    Image out = input;
    std::vector<double> f(n), p1(n), p2(n), d(n);

    for (int c = 0; c < input.channels; ++c) {
        for (std::size_t i = 0; i < n; ++i)
            f[i] = input.data[static_cast<std::size_t>(c) * n + i];
        std::fill(p1.begin(), p1.end(), 0.0);
        std::fill(p2.begin(), p2.end(), 0.0);

        for (int it = 0; it < inner_iters; ++it) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    d[i] = div_at(p1, p2, w, h, y, x) + f[i] / weight;
                }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const double gx = x < w - 1 ? d[i + 1] - d[i] : 0.0;
                    const double gy = y < h - 1 ? d[i + w] - d[i] : 0.0;
                    double q1 = p1[i] + step * gx;
                    const double q2 = p2[i] + step * gy;
                    const double norm = std::sqrt(q1 * q1 + q2 * q2);
                    if (norm > 1.0) {
                        q1 /= norm;
                        p2[i] = q2 / norm;
                    } else {
                        p2[i] = q2;
                    }
                    p1[i] = q1;
                }
        }

        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                out.data[static_cast<std::size_t>(c) * n + i] =
                    f[i] + weight * div_at(p1, p2, w, h, y, x);
            }
    }
    return out;
}

Image tv_denoise(const Image& deconvolved, const TvParams& params, int level) {
    params.validate();
    return tv_prox(deconvolved, params.weight_for_level(level),
                   params.inner_iters, params.step);
}

double total_variation(const Image& img) {
    const int w = img.width, h = img.height;
    double tv = 0.0;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double gx =
                    x < w - 1 ? static_cast<double>(img.at(c, y, x + 1)) - img.at(c, y, x)
                              : 0.0;
                const double gy =
                    y < h - 1 ? static_cast<double>(img.at(c, y + 1, x)) - img.at(c, y, x)
                              : 0.0;
                tv += std::sqrt(gx * gx + gy * gy);
            }
    return tv;
}

namespace {

constexpr char kRequestMagic[4] = {'D', 'N', 'Z', '1'};
constexpr char kReplyMagic[4] = {'D', 'N', 'Z', '2'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_samples(std::vector<std::uint8_t>& out, const Image& img) {
    // Samples travel as IEEE754 little-endian f32, the platform float
    // representation.
    for (double v : img.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}

std::vector<std::uint8_t> build_request(const Image& deconvolved,
                                        const Image& observed, int level) {
    std::vector<std::uint8_t> frame;
    frame.reserve(20 + 8 * deconvolved.sample_count());
    frame.insert(frame.end(), kRequestMagic, kRequestMagic + 4);
    put_u32(frame, static_cast<std::uint32_t>(level));
    put_u32(frame, static_cast<std::uint32_t>(deconvolved.width));
    put_u32(frame, static_cast<std::uint32_t>(deconvolved.height));
    put_u32(frame, static_cast<std::uint32_t>(deconvolved.channels));
    put_samples(frame, deconvolved);
    put_samples(frame, observed);
    return frame;
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

Image read_reply(Subprocess& child, std::chrono::milliseconds timeout,
                 const Image& expected_shape) {
    std::uint8_t header[16];
    child.read_exact(header, sizeof header, timeout);
    if (std::memcmp(header, kReplyMagic, 4) != 0)
        throw ProtocolError("external denoiser: bad reply magic");
    const std::uint32_t w = get_u32(header + 4);
    const std::uint32_t h = get_u32(header + 8);
    const std::uint32_t c = get_u32(header + 12);
    if (w == 0 || h == 0 || (c != 1 && c != 3) || w > (1u << 20) || h > (1u << 20))
        throw ProtocolError("external denoiser: implausible reply header");

    Image reply(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    std::vector<float> samples(reply.data.size());
    child.read_exact(samples.data(), samples.size() * sizeof(float), timeout);
    for (std::size_t i = 0; i < samples.size(); ++i) reply.data[i] = samples[i];
    if (!reply.same_shape(expected_shape))
        throw ShapeError("external denoiser: reply shape " + std::to_string(w) + "x" +
                         std::to_string(h) + "x" + std::to_string(c) +
                         " does not match the request");
    return reply;
}

} // namespace

ExternalDenoiser::ExternalDenoiser(ExternalDenoiserConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.command.empty())
        throw ParameterError("ExternalDenoiser: empty command");
    if (!(cfg_.timeout_seconds > 0.0))
        throw ParameterError("ExternalDenoiser: timeout must be > 0");
}

ExternalDenoiser::~ExternalDenoiser() = default;

void ExternalDenoiser::begin_solve() {
    child_.reset(); // one child per solve
}

Image ExternalDenoiser::denoise(const Image& deconvolved, const Image& observed,
                                int level) {
    require_same_shape(deconvolved, observed, "external_denoise");
    if (level < 1) throw ParameterError("external_denoise: level is 1-based");
    if (!child_) child_ = std::make_unique<Subprocess>(split_command(cfg_.command));

    const auto timeout = std::chrono::milliseconds(
        static_cast<long long>(cfg_.timeout_seconds * 1000.0));
    const std::vector<std::uint8_t> frame = build_request(deconvolved, observed, level);
    try {
        child_->write_exact(frame.data(), frame.size(), timeout);
        return read_reply(*child_, timeout, deconvolved);
    } catch (const TimeoutError&) {
        child_.reset();
        throw;
    } catch (const ProtocolError&) {
        child_.reset();
        throw;
    } catch (const ShapeError&) {
        child_.reset();
        throw;
    } catch (const std::runtime_error& e) {
        // Pipe failure or stream closed mid-frame: the reply is malformed.
        child_.reset();
        throw ProtocolError(std::string("external denoiser: ") + e.what());
    }
}

Image external_denoise(const Image& deconvolved, const Image& observed, int level,
                       const ExternalDenoiserConfig& cfg) {
    ExternalDenoiser denoiser(cfg);
    return denoiser.denoise(deconvolved, observed, level);
}

} // namespace flowdeblur
