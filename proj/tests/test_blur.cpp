#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "flowdeblur/blur.hpp"
#include "testutil.hpp"

using namespace flowdeblur;
using testutil::random_flow;
using testutil::random_image;

namespace {

// Dense supersampling oracle: fixed 1e4 midpoint samples along the segment,
// bilinear splatting into a map keyed by offset.
std::map<std::pair<int, int>, double> stamp_oracle(double u, double v) {
    std::map<std::pair<int, int>, double> taps;
    const int samples = 10000;
    if (u == 0.0 && v == 0.0) {
        taps[{0, 0}] = 1.0;
        return taps;
    }
    for (int k = 0; k < samples; ++k) {
        const double t = (k + 0.5) / samples;
        const double px = (t - 0.5) * u;
        const double py = (t - 0.5) * v;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        taps[{x0, y0}] += (1 - fx) * (1 - fy) / samples;
        taps[{x0 + 1, y0}] += fx * (1 - fy) / samples;
        taps[{x0, y0 + 1}] += (1 - fx) * fy / samples;
        taps[{x0 + 1, y0 + 1}] += fx * fy / samples;
    }
    return taps;
}

std::map<std::pair<int, int>, double> as_map(const KernelStamp& stamp) {
    std::map<std::pair<int, int>, double> taps;
    for (const auto& t : stamp.taps) taps[{t.dx, t.dy}] += t.weight;
    return taps;
}

double max_tap_diff(const std::map<std::pair<int, int>, double>& a,
                    const std::map<std::pair<int, int>, double>& b) {
    double m = 0.0;
    for (const auto& [k, w] : a) {
        const auto it = b.find(k);
        m = std::max(m, std::abs(w - (it == b.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, w] : b)
        if (!a.count(k)) m = std::max(m, std::abs(w));
    return m;
}

// Nested-loop spatial convolution with one stamp applied everywhere.
Image dense_forward_oracle(const Image& img, const KernelStamp& stamp,
                           BoundaryPolicy boundary) {
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (const auto& t : stamp.taps) {
                    int sx = x + t.dx, sy = y + t.dy;
                    if (boundary == BoundaryPolicy::replicate) {
                        sx = std::clamp(sx, 0, img.width - 1);
                        sy = std::clamp(sy, 0, img.height - 1);
                    } else if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) {
                        continue;
                    }
                    acc += t.weight * img.at(c, sy, sx);
                }
                out.at(c, y, x) = static_cast<float>(acc);
            }
    return out;
}

// Correlation (flipped-kernel convolution), the dense oracle for the
// adjoint under zero boundary with a spatially constant stamp.
Image dense_adjoint_oracle(const Image& img, const KernelStamp& stamp) {
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (const auto& t : stamp.taps) {
                    const int sx = x - t.dx, sy = y - t.dy;
                    if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height)
                        continue;
                    acc += t.weight * img.at(c, sy, sx);
                }
                out.at(c, y, x) = static_cast<float>(acc);
            }
    return out;
}

MotionFlowMap constant_flow(int w, int h, double u, double v) {
    MotionFlowMap flow(w, h);
    for (std::size_t i = 0; i < flow.pixels(); ++i) {
        flow.u[i] = static_cast<float>(u);
        flow.v[i] = static_cast<float>(v);
    }
    return flow;
}

} // namespace

TEST_CASE("zero motion rasterizes to the exact delta") {
    const KernelStamp stamp = kernel_from_motion(0.0, 0.0);
    REQUIRE(stamp.taps.size() == 1);
    CHECK(stamp.taps[0].dx == 0);
    CHECK(stamp.taps[0].dy == 0);
    CHECK(stamp.taps[0].weight == 1.0);
}

TEST_CASE("horizontal motion (2,0) gives the analytic three-tap stamp") {
    const KernelStamp stamp = kernel_from_motion(2.0, 0.0);
    const auto taps = as_map(stamp);
    REQUIRE(taps.size() == 3);
    for (const auto& [k, w] : taps) CHECK(k.second == 0); // single row
    CHECK(taps.at({-1, 0}) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(taps.at({0, 0}) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(taps.at({1, 0}) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(stamp.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_tap_diff(taps, stamp_oracle(2.0, 0.0)) < 1e-4);
}

TEST_CASE("diagonal motion (3,3) is symmetric and matches the oracle") {
    const KernelStamp stamp = kernel_from_motion(3.0, 3.0);
    const auto taps = as_map(stamp);
    for (const auto& [k, w] : taps) {
        const auto mirrored = taps.find({-k.first, -k.second});
        REQUIRE(mirrored != taps.end());
        CHECK(w == doctest::Approx(mirrored->second).epsilon(1e-9));
    }
    CHECK(max_tap_diff(taps, stamp_oracle(3.0, 3.0)) < 1e-4);
}

TEST_CASE("random stamps conserve flux and stay inside the segment box") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const double u = (2.0 * uniform01(rng) - 1.0) * 46.0;
        const double v = (2.0 * uniform01(rng) - 1.0) * 46.0;
        const KernelStamp stamp = kernel_from_motion(u, v);
        CHECK(stamp.weight_sum() == doctest::Approx(1.0).epsilon(1e-6));
        int min_dx = 0, max_dx = 0, min_dy = 0, max_dy = 0;
        for (const auto& t : stamp.taps) {
            min_dx = std::min(min_dx, t.dx);
            max_dx = std::max(max_dx, t.dx);
            min_dy = std::min(min_dy, t.dy);
            max_dy = std::max(max_dy, t.dy);
            CHECK(t.weight >= 0.0);
        }
        const int bound =
            2 * static_cast<int>(std::ceil(std::max(std::abs(u), std::abs(v)))) + 1;
        CHECK(max_dx - min_dx + 1 <= bound);
        CHECK(max_dy - min_dy + 1 <= bound);
    }
    CHECK_THROWS_AS(kernel_from_motion(std::nan(""), 0.0), ParameterError);
}

TEST_CASE("subpixel motion falls out as a small bilinear stamp") {
    const KernelStamp stamp = kernel_from_motion(0.6, -0.4);
    CHECK(stamp.taps.size() <= 9);
    CHECK(stamp.weight_sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("forward blur with zero flow is the identity") {
    Rng rng(6);
    const Image img = random_image(rng, 15, 11, 3);
    const MotionFlowMap flow(15, 11);
    for (BoundaryPolicy b : {BoundaryPolicy::replicate, BoundaryPolicy::zero}) {
        const Image out = forward_blur(img, flow, b);
        CHECK(testutil::max_abs_diff(img, out) <= 1e-7);
    }
}

TEST_CASE("constant flow equals dense convolution with the single stamp") {
    Rng rng(7);
    const Image img = random_image(rng, 16, 16, 1);
    const MotionFlowMap flow = constant_flow(16, 16, 3.2, -1.7);
    const KernelStamp stamp = kernel_from_motion(3.2, -1.7);
    for (BoundaryPolicy b : {BoundaryPolicy::replicate, BoundaryPolicy::zero}) {
        const Image expected = dense_forward_oracle(img, stamp, b);
        const Image got = forward_blur(img, flow, b);
        CHECK(testutil::max_abs_diff(expected, got) < 1e-6);
    }
}

TEST_CASE("an impulse reads the stamp back out") {
    Image impulse(17, 17, 1, 0.0);
    impulse.at(0, 8, 8) = 1.0;
    const MotionFlowMap flow = constant_flow(17, 17, 4.0, 0.0);
    const Image out = forward_blur(impulse, flow, BoundaryPolicy::zero);
    const KernelStamp stamp = kernel_from_motion(4.0, 0.0);
    // The centered segment is symmetric, so gather and scatter agree.
    Image expected(17, 17, 1, 0.0f);
    for (const auto& t : stamp.taps)
        expected.at(0, 8 + t.dy, 8 + t.dx) += t.weight;
    CHECK(testutil::max_abs_diff(expected, out) < 1e-6);
}

TEST_CASE("adjoint with zero flow is the identity") {
    Rng rng(8);
    const Image img = random_image(rng, 9, 14, 1);
    const MotionFlowMap flow(9, 14);
    const Image out = adjoint_blur(img, flow, BoundaryPolicy::replicate);
    CHECK(testutil::max_abs_diff(img, out) <= 1e-7);
}

TEST_CASE("adjoint satisfies the inner-product identity") {
    Rng rng(9);
    for (int trial = 0; trial < 24; ++trial) {
        const int w = 8 + static_cast<int>(bounded(rng, 25));
        const int h = 8 + static_cast<int>(bounded(rng, 25));
        const auto boundary =
            trial % 2 ? BoundaryPolicy::zero : BoundaryPolicy::replicate;
        const MotionFlowMap flow = random_flow(rng, w, h, 6.0);
        const FlowOperator op(flow, boundary);
        const Image x = random_image(rng, w, h, 1);
        const Image y = random_image(rng, w, h, 1);
        const double lhs = dot(op.forward(x), y);
        const double rhs = dot(x, op.adjoint(y));
        CHECK(std::abs(lhs - rhs) <= 1e-6 * norm2(x) * norm2(y));
    }
}

TEST_CASE("constant-flow adjoint equals the correlation oracle") {
    Rng rng(10);
    const Image img = random_image(rng, 12, 12, 1);
    const MotionFlowMap flow = constant_flow(12, 12, 2.4, 1.1);
    const KernelStamp stamp = kernel_from_motion(2.4, 1.1);
    const Image expected = dense_adjoint_oracle(img, stamp);
    const Image got = adjoint_blur(img, flow, BoundaryPolicy::zero);
    CHECK(testutil::max_abs_diff(expected, got) < 1e-6);
}

TEST_CASE("normal operator basics") {
    Rng rng(11);
    const Image x = random_image(rng, 10, 10, 1);
    const MotionFlowMap zero_flow(10, 10);
    CHECK(testutil::max_abs_diff(normal_apply(x, zero_flow, 0.0), x) <= 1e-7);

    const Image doubled = normal_apply(x, zero_flow, 1.0);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(doubled.data[i] == doctest::Approx(2.0 * x.data[i]).epsilon(1e-6));

    CHECK_THROWS_AS(normal_apply(x, zero_flow, -1.0), ParameterError);
}

TEST_CASE("normal operator is symmetric positive semi-definite") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const MotionFlowMap flow = random_flow(rng, 12, 12, 5.0);
        const FlowOperator op(flow, BoundaryPolicy::replicate);
        const Image x = random_image(rng, 12, 12, 1, -1.0, 1.0);
        const Image y = random_image(rng, 12, 12, 1, -1.0, 1.0);
        const double beta = 0.25;
        const double xax = dot(x, op.normal(x, beta));
        CHECK(xax >= 0.0);
        // strict positive definiteness with beta > 0
        CHECK(xax >= beta * norm2(x) * norm2(x) * (1.0 - 1e-6));
        const double xay = dot(x, op.normal(y, beta));
        const double axy = dot(op.normal(x, beta), y);
        CHECK(std::abs(xay - axy) <= 1e-6 * norm2(x) * norm2(y));
    }
}

TEST_CASE("forward blur is linear") {
    Rng rng(13);
    const MotionFlowMap flow = random_flow(rng, 14, 14, 4.0);
    const FlowOperator op(flow, BoundaryPolicy::replicate);
    const Image x = random_image(rng, 14, 14, 1);
    const Image y = random_image(rng, 14, 14, 1);
    const double a = 0.7, b = -1.3;
    Image combo(14, 14, 1);
    for (std::size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = a * x.data[i] + b * y.data[i];
    const Image lhs = op.forward(combo);
    const Image kx = op.forward(x);
    const Image ky = op.forward(y);
    for (std::size_t i = 0; i < lhs.data.size(); ++i)
        CHECK(lhs.data[i] ==
              doctest::Approx(a * kx.data[i] + b * ky.data[i]).epsilon(1e-5));
}

TEST_CASE("blurring a constant image under replicate returns the constant") {
    Rng rng(14);
    const Image constant(20, 20, 1, 0.37);
    const MotionFlowMap flow = random_flow(rng, 20, 20, 9.0);
    const Image out = forward_blur(constant, flow, BoundaryPolicy::replicate);
    for (float v : out.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("shape mismatches are rejected") {
    Rng rng(15);
    const Image img = random_image(rng, 8, 8, 1);
    const MotionFlowMap flow(9, 8);
    CHECK_THROWS_AS(forward_blur(img, flow), ShapeError);
    CHECK_THROWS_AS(adjoint_blur(img, flow), ShapeError);
    CHECK_THROWS_AS(normal_apply(img, flow, 1.0), ShapeError);
}
