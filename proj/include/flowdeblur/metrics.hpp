// Image and flow quality metrics.
#ifndef FLOWDEBLUR_METRICS_HPP
#define FLOWDEBLUR_METRICS_HPP

#include <optional>

#include "flowdeblur/flow_map.hpp"
#include "flowdeblur/image.hpp"

namespace flowdeblur {

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> flow_mse;
};

// Peak signal-to-noise ratio in dB with peak 1.0. Identical inputs have
// zero MSE; the sentinel +infinity is returned for that case.
double psnr(const Image& a, const Image& b);

// Mean structural similarity over 11x11 Gaussian windows (sigma 1.5),
// K1=0.01, K2=0.03, peak 1.0. RGB inputs are reduced to Rec.601 luma.
// Windows are fully interior; images smaller than 11x11 are rejected.
double ssim(const Image& a, const Image& b);

// Mean squared component error; the mean runs over both u and v, i.e.
// 2*width*height elements.
double flow_mse(const MotionFlowMap& estimate, const MotionFlowMap& label);

MetricReport compare(const Image& a, const Image& b);

} // namespace flowdeblur

#endif
