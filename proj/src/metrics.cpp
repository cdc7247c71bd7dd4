#include "flowdeblur/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace flowdeblur {

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01; // (K1*L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        w[static_cast<std::size_t>(i)] =
            std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable valid-mode filtering: rows first, then columns. Output is
// (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h,
                                 const std::vector<double>& k, int& ow, int& oh) {
    const int n = static_cast<int>(k.size());
    ow = w - n + 1;
    oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t)
                acc += k[static_cast<std::size_t>(t)] *
                       in[static_cast<std::size_t>(y) * w + x + t];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t)
                acc += k[static_cast<std::size_t>(t)] *
                       rows[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ParameterError("ssim: image smaller than the 11x11 window");

    const Image ga = to_gray(a);
    const Image gb = to_gray(b);
    const int w = a.width, h = a.height;
    const std::size_t n = ga.pixels();

    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ga.data[i];
        y[i] = gb.data[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    const std::vector<double> win = gaussian_window();
    int ow = 0, oh = 0;
    const std::vector<double> mu_x = filter_valid(x, w, h, win, ow, oh);
    const std::vector<double> mu_y = filter_valid(y, w, h, win, ow, oh);
    const std::vector<double> e_xx = filter_valid(xx, w, h, win, ow, oh);
    const std::vector<double> e_yy = filter_valid(yy, w, h, win, ow, oh);
    const std::vector<double> e_xy = filter_valid(xy, w, h, win, ow, oh);

    double acc = 0.0;
    const std::size_t m = mu_x.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double vx = e_xx[i] - mx * mx;
        const double vy = e_yy[i] - my * my;
        const double cxy = e_xy[i] - mx * my;
        acc += (2.0 * mx * my + kC1) * (2.0 * cxy + kC2) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
    return acc / static_cast<double>(m);
}

double flow_mse(const MotionFlowMap& estimate, const MotionFlowMap& label) {
    require_same_shape(estimate, label, "flow_mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < estimate.u.size(); ++i) {
        const double du = static_cast<double>(estimate.u[i]) - label.u[i];
        const double dv = static_cast<double>(estimate.v[i]) - label.v[i];
        sum += du * du + dv * dv;
    }
    // N counts both components: 2 * width * height elements.
    return sum / (2.0 * static_cast<double>(estimate.pixels()));
}

MetricReport compare(const Image& a, const Image& b) {
    MetricReport report;
    report.psnr = psnr(a, b);
    report.ssim = ssim(a, b);
    return report;
}

} // namespace flowdeblur
