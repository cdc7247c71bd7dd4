#include "flowdeblur/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "flowdeblur/blur.hpp"
#include "flowdeblur/flow_io.hpp"
#include "flowdeblur/image_io.hpp"
#include "flowdeblur/rng.hpp"

namespace flowdeblur {

void FlowGenParams::validate() const {
    if (!(ceiling >= 0.0) || !std::isfinite(ceiling))
        throw ParameterError("FlowGenParams: ceiling must be >= 0");
    if (!(smoothness >= 1.0) || !std::isfinite(smoothness))
        throw ParameterError("FlowGenParams: smoothness must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw ParameterError("FlowGenParams: noise_sigma must be >= 0");
}

namespace {

// Separable Gaussian smoothing with replicate boundary.
void smooth_field(std::vector<double>& f, int w, int h, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) /
                                  (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;

    std::vector<double> tmp(f.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int sx = std::clamp(x + i, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       f[static_cast<std::size_t>(y) * w + sx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int sy = std::clamp(y + i, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(sy) * w + x];
            }
            f[static_cast<std::size_t>(y) * w + x] = acc;
        }
}

constexpr std::uint64_t kNoiseSalt = 0x6f626e6f69736531ULL;

} // namespace

MotionFlowMap sample_flow(int width, int height, const FlowGenParams& params) {
    params.validate();
    if (width <= 0 || height <= 0)
        throw ParameterError("sample_flow: dimensions must be positive");
    MotionFlowMap flow(width, height);
    if (params.ceiling == 0.0) return flow;

    const std::size_t n = flow.pixels();
    std::vector<double> fu(n), fv(n);
    Rng rng(mix64(params.seed));
    for (double& v : fu) v = normal01(rng);
    for (double& v : fv) v = normal01(rng);
    // Per-map amplitude so the ceiling bounds the set rather than pinning
    // every single map to it.
    const double amplitude = 0.3 + 0.7 * uniform01(rng);

    smooth_field(fu, width, height, params.smoothness);
    smooth_field(fv, width, height, params.smoothness);

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        peak = std::max({peak, std::abs(fu[i]), std::abs(fv[i])});
    const double scale = peak > 0.0 ? params.ceiling * amplitude / peak : 0.0;
    const double cap = params.ceiling;
    for (std::size_t i = 0; i < n; ++i) {
        flow.u[i] = static_cast<float>(std::clamp(fu[i] * scale, -cap, cap));
        flow.v[i] = static_cast<float>(std::clamp(fv[i] * scale, -cap, cap));
    }
    return flow;
}

std::pair<Image, MotionFlowMap> generate_pair(const Image& sharp,
                                              const FlowGenParams& params) {
    params.validate();
    MotionFlowMap flow = sample_flow(sharp.width, sharp.height, params);
    Image blurred = forward_blur(sharp, flow, BoundaryPolicy::replicate);
    if (params.noise_sigma > 0.0) {
        Rng rng(mix64(params.seed ^ kNoiseSalt));
        for (double& v : blurred.data) v += params.noise_sigma * normal01(rng);
        clamp01(blurred);
    }
    return {std::move(blurred), std::move(flow)};
}

DatasetManifest build_dataset(const std::filesystem::path& sharp_dir,
                              const std::filesystem::path& out_dir,
                              int count_per_image,
                              const FlowGenParams& params) {
    params.validate();
    if (count_per_image <= 0)
        throw ParameterError("build_dataset: count_per_image must be positive");
    if (!std::filesystem::is_directory(sharp_dir))
        throw IoError("build_dataset: not a directory: " + sharp_dir.string());

    std::vector<std::filesystem::path> inputs;
    for (const auto& entry : std::filesystem::directory_iterator(sharp_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") inputs.push_back(entry.path());
    }
    if (inputs.empty())
        throw IoError("build_dataset: no PNG images in " + sharp_dir.string());
    std::sort(inputs.begin(), inputs.end());

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("build_dataset: cannot create " + out_dir.string());

    DatasetManifest manifest;
    manifest.manifest_path = out_dir / "manifest.tsv";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Image sharp = read_image(inputs[i]);
        for (int k = 0; k < count_per_image; ++k) {
            const std::uint64_t index =
                i * static_cast<std::uint64_t>(count_per_image) + k;
            FlowGenParams pair_params = params;
            pair_params.seed = mix64(params.seed ^ mix64(index + 1));

            auto [blurred, flow] = generate_pair(sharp, pair_params);
            const std::string stem = inputs[i].stem().string();
            const std::string base = stem + "_" + std::to_string(k);
            write_image(blurred, out_dir / (base + ".png"), 16);
            write_flow(flow, out_dir / (base + ".mflo"));
            manifest.rows.push_back({inputs[i].string(), base + ".png",
                                     base + ".mflo", pair_params.seed});
        }
    }

    std::ofstream out(manifest.manifest_path, std::ios::trunc);
    if (!out)
        throw IoError("build_dataset: cannot write " +
                      manifest.manifest_path.string());
    out << "sharp\tblurred\tflow\tseed\n";
    for (const auto& row : manifest.rows)
        out << row.sharp << '\t' << row.blurred << '\t' << row.flow << '\t'
            << row.seed << '\n';
    if (!out)
        throw IoError("build_dataset: write failed for " +
                      manifest.manifest_path.string());
    return manifest;
}

} // namespace flowdeblur
