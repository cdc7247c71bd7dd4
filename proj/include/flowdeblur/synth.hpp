// Synthetic nonuniform-blur data generation: smooth random motion-flow
// fields under a magnitude ceiling, blurred/sharp pair production, and
// dataset construction with a tab-separated manifest.
#ifndef FLOWDEBLUR_SYNTH_HPP
#define FLOWDEBLUR_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flowdeblur/flow_map.hpp"
#include "flowdeblur/image.hpp"

namespace flowdeblur {

struct FlowGenParams {
    double ceiling = 23.0;     // bound on |u| and |v|, pixels
    double smoothness = 8.0;   // correlation length of the field, pixels
    std::uint64_t seed = 0;
    double noise_sigma = 0.01; // additive Gaussian noise on blurred output

    // ceiling == 0 is the degenerate zero-flow field; negative values,
    // smoothness < 1 and negative noise are rejected.
    void validate() const;
};

// Gaussian-filtered white noise per component, scaled so that
// max(|u|,|v|) <= ceiling, then hard-clamped. Deterministic per seed.
MotionFlowMap sample_flow(int width, int height, const FlowGenParams& params);

// blurred = forward_blur(sharp, flow) + N(0, noise_sigma), clamped to [0,1].
// The flow is returned as the oracle label.
std::pair<Image, MotionFlowMap> generate_pair(const Image& sharp,
                                              const FlowGenParams& params);

struct DatasetManifest {
    struct Row {
        std::string sharp;   // input path as given
        std::string blurred; // relative to the manifest directory
        std::string flow;    // relative to the manifest directory
        std::uint64_t seed;
    };
    std::vector<Row> rows;
    std::filesystem::path manifest_path;
};

// Reads every PNG in sharp_dir (sorted by name), writes count_per_image
// blurred/flow pairs for each into out_dir plus "manifest.tsv" with the
// header "sharp\tblurred\tflow\tseed". Fully reproducible from params.seed.
DatasetManifest build_dataset(const std::filesystem::path& sharp_dir,
                              const std::filesystem::path& out_dir,
                              int count_per_image,
                              const FlowGenParams& params);

} // namespace flowdeblur

#endif
