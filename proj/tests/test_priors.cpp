#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowdeblur/hqs.hpp"
#include "flowdeblur/priors.hpp"
#include "flowdeblur/synth.hpp"
#include "testutil.hpp"

using namespace flowdeblur;
using testutil::random_image;

namespace {

// Independent long-run TV prox oracle using the opposite dual sign
// convention (p-update toward -f/weight, primal f - weight*div p).
Image tv_prox_oracle(const Image& input, double weight, int iters) {
    const int w = input.width, h = input.height;
    const std::size_t n = input.pixels();
    Image out = input;
    std::vector<double> f(n), p1(n, 0.0), p2(n, 0.0), d(n);
    const double tau = 0.248;

    auto divergence = [&](std::size_t i, int y, int x) {
        double dv = 0.0;
        if (x < w - 1) dv += p1[i];
        if (x > 0) dv -= p1[i - 1];
        if (y < h - 1) dv += p2[i];
        if (y > 0) dv -= p2[i - static_cast<std::size_t>(w)];
        return dv;
    };

    for (int c = 0; c < input.channels; ++c) {
        for (std::size_t i = 0; i < n; ++i)
            f[i] = input.data[static_cast<std::size_t>(c) * n + i];
        std::fill(p1.begin(), p1.end(), 0.0);
        std::fill(p2.begin(), p2.end(), 0.0);
        for (int it = 0; it < iters; ++it) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    d[i] = divergence(i, y, x) - f[i] / weight;
                }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const double gx = x < w - 1 ? d[i + 1] - d[i] : 0.0;
                    const double gy = y < h - 1 ? d[i + w] - d[i] : 0.0;
                    double q1 = p1[i] + tau * gx;
                    double q2 = p2[i] + tau * gy;
                    const double norm = std::sqrt(q1 * q1 + q2 * q2);
                    if (norm > 1.0) {
                        q1 /= norm;
                        q2 /= norm;
                    }
                    p1[i] = q1;
                    p2[i] = q2;
                }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                out.data[static_cast<std::size_t>(c) * n + i] =
                    f[i] - weight * divergence(i, y, x);
            }
    }
    return out;
}

double prox_objective(const Image& z, const Image& anchor, double weight) {
    double quad = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        const double d = static_cast<double>(z.data[i]) - anchor.data[i];
        quad += d * d;
    }
    return 0.5 * quad + weight * total_variation(z);
}

} // namespace

TEST_CASE("identity prior passes the deconvolved image through") {
    Rng rng(61);
    const Image img = random_image(rng, 10, 8, 3);
    const Image observed = random_image(rng, 10, 8, 3);
    const Image once = identity_denoise(img, observed, 1);
    CHECK(testutil::bitwise_equal(once, img));
    const Image twice = identity_denoise(once, observed, 2);
    CHECK(testutil::bitwise_equal(twice, once));
    const Image wrong(10, 9, 3);
    CHECK_THROWS_AS(identity_denoise(img, wrong, 1), ShapeError);
}

TEST_CASE("with the identity prior, hqs reduces to chained deconvolution steps") {
    Rng rng(62);
    const Image sharp = testutil::cartoon_image(rng, 18, 18, 1);
    FlowGenParams params;
    params.ceiling = 4.0;
    params.seed = 80;
    const auto [observed, flow] = generate_pair(sharp, params);

    IdentityPrior prior;
    const HqsSchedule schedule;
    const Image via_solver = hqs_deblur(observed, flow, prior, schedule);

    const FlowOperator op(flow, BoundaryPolicy::replicate);
    Image chained = observed;
    for (double beta : schedule.betas) {
        chained = x_step(chained, observed, op, beta, schedule);
        // The solve loop exchanges prior outputs at f32 precision.
        chained = testutil::quantize_f32(chained);
    }
    CHECK(testutil::bitwise_equal(via_solver, chained));
}

TEST_CASE("tv_prox with zero weight is exact identity") {
    Rng rng(63);
    const Image img = random_image(rng, 12, 12, 1);
    CHECK(testutil::bitwise_equal(tv_prox(img, 0.0), img));
}

TEST_CASE("tv_prox leaves constant images untouched") {
    const Image img(16, 12, 3, 0.42);
    const Image out = tv_prox(img, 0.3, 80, 0.248);
    CHECK(testutil::max_abs_diff(out, img) <= 1e-12);
}

TEST_CASE("tv_prox converges to the long-run dual-ascent oracle on a step edge") {
    Image edge(32, 1, 1, 0.0);
    for (int x = 16; x < 32; ++x) edge.at(0, 0, x) = 1.0;
    const Image ours = tv_prox(edge, 0.1, 20000, 0.248);
    const Image oracle = tv_prox_oracle(edge, 0.1, 100000);
    CHECK(testutil::max_abs_diff(ours, oracle) < 1e-3);
    // The prox of a clean step shrinks the jump; ends must move toward
    // each other.
    CHECK(ours.at(0, 0, 0) > 0.0f);
    CHECK(ours.at(0, 0, 31) < 1.0f);
}

TEST_CASE("tv_prox lowers total variation and the prox objective") {
    Rng rng(64);
    for (int trial = 0; trial < 6; ++trial) {
        const Image img = random_image(rng, 14, 14, 1);
        const double weight = 0.02 + 0.06 * uniform01(rng);
        const Image out = tv_prox(img, weight, 50, 0.248);
        CHECK(total_variation(out) <= total_variation(img) + 1e-9);
        CHECK(prox_objective(out, img, weight) <=
              prox_objective(img, img, weight) + 1e-9);
        CHECK(all_finite(out));
        CHECK(out.same_shape(img));
    }
}

TEST_CASE("tv params validation and per-level weights") {
    TvParams params;
    CHECK_NOTHROW(params.validate());
    CHECK(params.weight_for_level(1) == 0.08);
    CHECK(params.weight_for_level(3) == 0.02);
    CHECK(params.weight_for_level(9) == 0.02); // last weight repeats
    params.step = 0.3;
    CHECK_THROWS_AS(params.validate(), ParameterError);
    params.step = 0.248;
    params.weights = {-0.1};
    CHECK_THROWS_AS(params.validate(), ParameterError);
}

TEST_CASE("echo double makes the external prior transparent") {
    Rng rng(65);
    const Image sharp = testutil::cartoon_image(rng, 16, 16, 1);
    FlowGenParams params;
    params.ceiling = 3.0;
    params.seed = 81;
    const auto [observed, flow] = generate_pair(sharp, params);

    IdentityPrior identity;
    const HqsSchedule schedule;
    const Image expected = hqs_deblur(observed, flow, identity, schedule);

    ExternalDenoiser echo({ECHO_DENOISER_PATH, 20.0});
    const Image via_child = hqs_deblur(observed, flow, echo, schedule);
    CHECK(testutil::bitwise_equal(expected, via_child));
}

TEST_CASE("echo double works for the one-shot helper and rgb frames") {
    Rng rng(66);
    const Image img = random_image(rng, 9, 7, 3);
    const Image observed = random_image(rng, 9, 7, 3);
    const Image out = external_denoise(img, observed, 2, {ECHO_DENOISER_PATH, 20.0});
    // Samples cross the wire as f32; the echo is exact at that precision.
    CHECK(testutil::bitwise_equal(out, testutil::quantize_f32(img)));
}

TEST_CASE("shape-corrupting double raises the shape error without crashing") {
    Rng rng(67);
    const Image img = random_image(rng, 8, 8, 1);
    CHECK_THROWS_AS(external_denoise(img, img, 1, {CORRUPT_DENOISER_PATH, 20.0}),
                    ShapeError);
}

TEST_CASE("a reply with the wrong magic is a protocol error") {
    Rng rng(68);
    const Image img = random_image(rng, 6, 6, 1);
    // cat echoes the request frame, whose magic is DNZ1, not DNZ2.
    CHECK_THROWS_AS(external_denoise(img, img, 1, {"cat", 20.0}), ProtocolError);
}

TEST_CASE("a silent denoiser times out") {
    Rng rng(69);
    const Image img = random_image(rng, 6, 6, 1);
    CHECK_THROWS_AS(external_denoise(img, img, 1, {HANG_DENOISER_PATH, 0.4}),
                    TimeoutError);
}

TEST_CASE("a missing executable is a spawn error") {
    Rng rng(70);
    const Image img = random_image(rng, 6, 6, 1);
    CHECK_THROWS_AS(
        external_denoise(img, img, 1, {"/nonexistent/denoiser-binary", 5.0}),
        SpawnError);
}

TEST_CASE("gaussian double matches the in-process filter through the wire") {
    Rng rng(71);
    const Image img = random_image(rng, 16, 16, 3);
    const Image observed = random_image(rng, 16, 16, 3);
    const Image via_child =
        external_denoise(img, observed, 1, {GAUSS_DENOISER_PATH, 20.0});

    // Identical separable filter, run in-process: sigma 1.0, radius 3,
    // replicate boundary, accumulation in double.
    const int radius = 3;
    double kernel[7], ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(static_cast<double>(i) * i) / 2.0);
        ksum += kernel[i + radius];
    }
    for (double& k : kernel) k /= ksum;
    Image expected = img;
    for (int c = 0; c < img.channels; ++c) {
        Image tmp(img.width, img.height, 1);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] *
                           img.at(c, y, std::clamp(x + i, 0, img.width - 1));
                tmp.at(0, y, x) = static_cast<float>(acc);
            }
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] *
                           tmp.at(0, std::clamp(y + i, 0, img.height - 1), x);
                expected.at(c, y, x) = static_cast<float>(acc);
            }
    }
    CHECK(testutil::max_abs_diff(via_child, expected) < 1e-5);
}

TEST_CASE("the child persists across levels and restarts per solve") {
    Rng rng(72);
    const Image img = random_image(rng, 8, 8, 1);
    ExternalDenoiser echo({ECHO_DENOISER_PATH, 20.0});
    echo.begin_solve();
    const Image quantized = testutil::quantize_f32(img);
    const Image a = echo.denoise(img, img, 1);
    const Image b = echo.denoise(a, img, 2);  // same child, second frame
    CHECK(testutil::bitwise_equal(b, quantized));
    echo.begin_solve(); // fresh child
    const Image c = echo.denoise(img, img, 1);
    CHECK(testutil::bitwise_equal(c, quantized));
}
