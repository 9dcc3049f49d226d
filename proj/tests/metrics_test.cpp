// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "gsplane/core/errors.hpp"
#include "gsplane/metrics/metrics.hpp"
#include "helpers.hpp"

using namespace gsp;

namespace {

// Straight per-pixel reference, independent of the library implementation.
double psnr_reference(const ImageBuffer& a, const ImageBuffer& b) {
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        se += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    const double mse = se / static_cast<double>(a.data.size());
    return mse < 1e-10 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

// Sliding-window SSIM with per-window weighted sums, no separable filtering.
double ssim_reference(const ImageBuffer& a, const ImageBuffer& b) {
    const int r = 5;
    double kernel[11][11];
    double ksum = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            kernel[dy + r][dx + r] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            ksum += kernel[dy + r][dx + r];
        }
    for (auto& row : kernel)
        for (double& k : row)
            k /= ksum;
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double acc = 0.0;
        int count = 0;
        for (int y = r; y < a.height - r; ++y)
            for (int x = r; x < a.width - r; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = kernel[dy + r][dx + r];
                        const double va = a.at(x + dx, y + dy, c);
                        const double vb = b.at(x + dx, y + dy, c);
                        mx += w * va;
                        my += w * vb;
                        mxx += w * va * va;
                        myy += w * vb * vb;
                        mxy += w * va * vb;
                    }
                const double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        total += acc / count;
    }
    return total / a.channels;
}

} // namespace

TEST_CASE("psnr: identical, arithmetic case, reference agreement") {
    auto gen = test::rng(21);
    const ImageBuffer img = test::random_image(gen, 24, 16);
    CHECK(psnr(img, img) == 99.0);

    // MSE exactly 0.01 -> 20 dB
    ImageBuffer a(10, 10, 1), b(10, 10, 1);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            a.set(x, y, 0, 0.5);
            b.set(x, y, 0, 0.6);
        }
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

    for (int i = 0; i < 50; ++i) {
        const ImageBuffer x = test::random_image(gen, 31, 17);
        const ImageBuffer y = test::random_image(gen, 31, 17);
        CHECK(std::abs(psnr(x, y) - psnr_reference(x, y)) < 1e-9);
    }
    ImageBuffer wrong(9, 10, 1);
    CHECK_THROWS_AS(psnr(a, wrong), DimensionMismatch);
}

TEST_CASE("psnr strictly decreases with noise amplitude") {
    auto gen = test::rng(22);
    const ImageBuffer base = test::random_image(gen, 40, 30);
    double prev = 1e9;
    for (double amp : {0.01, 0.02, 0.05, 0.1}) {
        ImageBuffer noisy = base;
        auto g2 = test::rng(99); // same noise pattern, scaled
        for (auto& v : noisy.data) {
            v += amp * (test::uniform(g2, -1.0, 1.0));
            v = std::clamp(v, 0.0, 1.0);
        }
        const double p = psnr(noisy, base);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim: identity, constants, symmetry, reference agreement") {
    auto gen = test::rng(23);
    const ImageBuffer img = test::random_image(gen, 32, 24);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-9));

    ImageBuffer c1(16, 16, 3), c2(16, 16, 3);
    for (auto& v : c1.data)
        v = 0.42;
    for (auto& v : c2.data)
        v = 0.42;
    CHECK(ssim(c1, c2) == doctest::Approx(1.0).epsilon(1e-12));

    for (int i = 0; i < 20; ++i) {
        const ImageBuffer x = test::random_image(gen, 25, 19);
        const ImageBuffer y = test::random_image(gen, 25, 19);
        CHECK(std::abs(ssim(x, y) - ssim_reference(x, y)) < 1e-6);
        CHECK(std::abs(ssim(x, y) - ssim(y, x)) < 1e-12);
    }

    ImageBuffer tiny(10, 32, 1);
    CHECK_THROWS_AS(ssim(tiny, tiny), TooSmall);
}

TEST_CASE("render_loss: zero at identity, weighted combination") {
    auto gen = test::rng(24);
    const ImageBuffer img = test::random_image(gen, 20, 15);
    CHECK(render_loss(img, img) == doctest::Approx(0.0).epsilon(1e-9));

    // constant offset: L1 known exactly, ssim term folded in explicitly
    ImageBuffer a(16, 16, 1), b(16, 16, 1);
    for (auto& v : a.data)
        v = 0.4;
    for (auto& v : b.data)
        v = 0.5;
    const double expected = 0.8 * 0.1 + 0.2 * (1.0 - ssim(a, b));
    CHECK(render_loss(a, b, 0.8, 0.2) == doctest::Approx(expected).epsilon(1e-12));
    // formula arithmetic: beta1 * L1 + beta2 * (1 - SSIM) at L1=0.1, SSIM=0.9
    CHECK(0.8 * 0.1 + 0.2 * (1.0 - 0.9) == doctest::Approx(0.10).epsilon(1e-12));
}

TEST_CASE("stage2_loss combines the two render losses") {
    auto gen = test::rng(25);
    const ImageBuffer f1 = test::random_image(gen, 22, 16);
    const ImageBuffer f2 = test::random_image(gen, 22, 16);
    const ImageBuffer h1 = test::random_image(gen, 30, 20);
    const ImageBuffer h2 = test::random_image(gen, 30, 20);
    CHECK(stage2_loss(f1, f1, h1, h1) == doctest::Approx(0.0).epsilon(1e-12));
    const double expected = 0.5 * render_loss(f1, f2) + 0.5 * render_loss(h1, h2);
    CHECK(stage2_loss(f1, f2, h1, h2) == doctest::Approx(expected).epsilon(1e-12));
    const double expected2 = 0.3 * render_loss(f1, f2) + 0.9 * render_loss(h1, h2);
    CHECK(stage2_loss(f1, f2, h1, h2, 0.3, 0.9) == doctest::Approx(expected2).epsilon(1e-12));
}

TEST_CASE("chamfer_eval: identity, directed asymmetry, brute force equality") {
    std::vector<Vec3> a = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const auto same = chamfer_eval(a, a);
    CHECK(same.pred_to_gt == 0.0);
    CHECK(same.gt_to_pred == 0.0);

    // pred = gt + one far outlier
    std::vector<Vec3> pred = a;
    pred.push_back(Vec3(0.0, 1.0, 10.0)); // nearest gt point is (0,1,0), distance 10
    const auto cd = chamfer_eval(pred, a);
    CHECK(cd.gt_to_pred == 0.0);
    CHECK(cd.pred_to_gt == doctest::Approx(10.0 / 4.0).epsilon(1e-12));

    auto gen = test::rng(26);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vec3> p, q;
        const int np = 1 + static_cast<int>(test::uniform(gen, 0, 300));
        const int nq = 1 + static_cast<int>(test::uniform(gen, 0, 300));
        for (int i = 0; i < np; ++i)
            p.emplace_back(test::uniform(gen, -1, 1), test::uniform(gen, -1, 1),
                           test::uniform(gen, -1, 1));
        for (int i = 0; i < nq; ++i)
            q.emplace_back(test::uniform(gen, -1, 1), test::uniform(gen, -1, 1),
                           test::uniform(gen, -1, 1));
        const auto dist = nearest_distances(p, q);
        for (size_t i = 0; i < p.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& b : q) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double d = p[i][k] - b[k];
                    s += d * d;
                }
                best = std::min(best, s);
            }
            CHECK(dist[i] == std::sqrt(best)); // exact, not approximate
        }
    }
    CHECK_THROWS_AS(chamfer_eval({}, a), EmptySet);
}
