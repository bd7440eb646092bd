#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "dsvr/media/image.hpp"
#include "dsvr/nn/gradcheck.hpp"
#include "dsvr/sense/sensing.hpp"

using dsvr::nn::ParamSet;
using dsvr::nn::Rng;
using dsvr::nn::Tensor4;
using dsvr::nn::Var;
namespace sense = dsvr::sense;

namespace {

template <typename T>
Tensor4<T> random_tensor(int n, int c, int h, int w, Rng& rng, T lo = T(0), T hi = T(1)) {
    Tensor4<T> t(n, c, h, w);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t.data()[i] = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    }
    return t;
}

template <typename T>
double max_abs_diff(const Tensor4<T>& a, const Tensor4<T>& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) -
                                 static_cast<double>(b.data()[i])));
    }
    return m;
}

}  // namespace

TEST_CASE("dfm: closed-form values for residuals (3, 7)") {
    // |z_hat - x| = (3, 7): e = (log 4 / log 8, log 8 / log 8) = (2/3, 1).
    auto z_hat = Tensor4<double>::from({1, 1, 1, 2}, {3.0, 7.0});
    auto x = Tensor4<double>::from({1, 1, 1, 2}, {0.0, 0.0});
    auto e = sense::compute_dfm<double>(z_hat, x);
    CHECK(e.data()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(e.data()[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dfm: zero residual yields the all-zero map") {
    Rng rng(11);
    auto x = random_tensor<float>(2, 3, 7, 5, rng);
    auto e = sense::compute_dfm<float>(x, x);
    for (std::size_t i = 0; i < e.numel(); ++i) CHECK(e.data()[i] == 0.0f);
}

TEST_CASE("dfm: range, peak and ordering laws") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        auto z_hat = random_tensor<double>(1, 3, 9, 9, rng);
        auto x = random_tensor<double>(1, 3, 9, 9, rng);
        auto e = sense::compute_dfm<double>(z_hat, x);

        double peak = 0.0;
        for (std::size_t i = 0; i < e.numel(); ++i) {
            CHECK(e.data()[i] >= 0.0);
            CHECK(e.data()[i] <= 1.0);
            peak = std::max(peak, e.data()[i]);
        }
        CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));

        // Monotone: larger |residual| never maps to a smaller value.
        for (std::size_t i = 1; i < e.numel(); ++i) {
            const double ri = std::abs(z_hat.data()[i] - x.data()[i]);
            const double rp = std::abs(z_hat.data()[i - 1] - x.data()[i - 1]);
            if (ri > rp) {
                CHECK(e.data()[i] >= e.data()[i - 1]);
            } else if (ri < rp) {
                CHECK(e.data()[i] <= e.data()[i - 1]);
            }
        }
    }
}

TEST_CASE("dfm: normalization is per batch element") {
    // Frame 0 residuals peak at 1, frame 1 at 9; both frames normalize to 1.
    auto z_hat = Tensor4<double>::from({2, 1, 1, 2}, {1.0, 0.5, 9.0, 3.0});
    auto x = Tensor4<double>::from({2, 1, 1, 2}, {0.0, 0.0, 0.0, 0.0});
    auto e = sense::compute_dfm<double>(z_hat, x);
    CHECK(e.data()[0] == doctest::Approx(1.0));
    CHECK(e.data()[1] == doctest::Approx(std::log1p(0.5) / std::log1p(1.0)));
    CHECK(e.data()[2] == doctest::Approx(1.0));
    CHECK(e.data()[3] == doctest::Approx(std::log1p(3.0) / std::log1p(9.0)));
}

TEST_CASE("dfm: shape mismatch is rejected") {
    Tensor4<float> a(1, 3, 4, 4);
    Tensor4<float> b(1, 3, 4, 5);
    CHECK_THROWS_WITH_AS(sense::compute_dfm<float>(a, b),
                         doctest::Contains("shape mismatch"), std::invalid_argument);
}

TEST_CASE("interpolate_pair: output matches input resolution, odd sizes included") {
    Rng rng(21);
    ParamSet<float> params;
    sense::add_sensing_params(params, rng);
    for (auto [h, w] : std::vector<std::pair<int, int>>{{16, 16}, {13, 17}, {5, 5}, {32, 8}}) {
        auto a = Var<float>::constant(random_tensor<float>(1, 3, h, w, rng));
        auto b = Var<float>::constant(random_tensor<float>(1, 3, h, w, rng));
        auto out = sense::interpolate_pair<float>(params, sense::kFB1Prefix, a, b);
        CHECK(out->value.n() == 1);
        CHECK(out->value.c() == 3);
        CHECK(out->value.h() == h);
        CHECK(out->value.w() == w);
        CHECK(out->value.all_finite());
    }
}

TEST_CASE("interpolate_pair: mismatched resolutions are rejected") {
    Rng rng(22);
    ParamSet<float> params;
    sense::add_sensing_params(params, rng);
    auto a = Var<float>::constant(Tensor4<float>(1, 3, 8, 8));
    auto b = Var<float>::constant(Tensor4<float>(1, 3, 8, 10));
    CHECK_THROWS_WITH_AS(sense::interpolate_pair<float>(params, sense::kFB1Prefix, a, b),
                         doctest::Contains("resolution mismatch"), std::invalid_argument);
}

TEST_CASE("estimate_reference: the two outer estimates share F_B1") {
    Rng rng(23);
    ParamSet<float> params;
    sense::add_sensing_params(params, rng);
    // With x_{t-2} == x_{t+2}, shared weights force bit-identical outer outputs.
    auto xm2 = random_tensor<float>(1, 3, 12, 12, rng);
    auto x0 = random_tensor<float>(1, 3, 12, 12, rng);
    auto est = sense::estimate_reference<float>(params, Var<float>::constant(xm2),
                                                Var<float>::constant(x0),
                                                Var<float>::constant(xm2));
    CHECK(max_abs_diff(est.z_prev->value, est.z_next->value) == 0.0);

    // And the merged estimate comes from a *different* net: mutating fb2
    // output bias changes z_mid but not the outer estimates.
    auto& b2 = params.at("fb2.out.b");
    b2->value.fill(0.25f);
    auto est2 = sense::estimate_reference<float>(params, Var<float>::constant(xm2),
                                                 Var<float>::constant(x0),
                                                 Var<float>::constant(xm2));
    CHECK(max_abs_diff(est2.z_prev->value, est.z_prev->value) == 0.0);
    CHECK(max_abs_diff(est2.z_mid->value, est.z_mid->value) > 0.0);
}

TEST_CASE("interpolate_pair: all-zero weights reduce to the output bias") {
    ParamSet<float> params;
    Rng rng(24);
    sense::add_sensing_params(params, rng);
    for (const auto& name : params.names()) params.at(name)->value.fill(0.0f);
    params.at("fb1.out.b")->value.fill(0.5f);

    auto a = Var<float>::constant(random_tensor<float>(1, 3, 10, 10, rng));
    auto b = Var<float>::constant(random_tensor<float>(1, 3, 10, 10, rng));
    auto out = sense::interpolate_pair<float>(params, sense::kFB1Prefix, a, b);
    for (std::size_t i = 0; i < out->value.numel(); ++i) {
        CHECK(out->value.data()[i] == 0.5f);
    }
}

TEST_CASE("estimate_reference: deterministic for a fixed seed") {
    auto run = [] {
        Rng rng(25);
        ParamSet<float> params;
        sense::add_sensing_params(params, rng);
        auto xm2 = Var<float>::constant(random_tensor<float>(1, 3, 8, 8, rng));
        auto x0 = Var<float>::constant(random_tensor<float>(1, 3, 8, 8, rng));
        auto xp2 = Var<float>::constant(random_tensor<float>(1, 3, 8, 8, rng));
        return sense::estimate_reference<float>(params, xm2, x0, xp2).z_mid->value;
    };
    CHECK(max_abs_diff(run(), run()) == 0.0);
}

TEST_CASE("sensing gradients: finite differences agree on the composed estimate") {
    Rng rng(26);
    ParamSet<double> params;
    sense::add_sensing_params(params, rng);
    auto xm2 = Var<double>::constant(random_tensor<double>(1, 3, 6, 6, rng));
    auto x0 = Var<double>::constant(random_tensor<double>(1, 3, 6, 6, rng));
    auto xp2 = Var<double>::constant(random_tensor<double>(1, 3, 6, 6, rng));
    // Offset target keeps residuals O(1) so central differences stay
    // well-conditioned.
    Tensor4<double> target;
    {
        dsvr::nn::NoGradGuard guard;
        auto est = sense::estimate_reference<double>(params, xm2, x0, xp2);
        target = est.z_mid->value;
        for (std::size_t i = 0; i < target.numel(); ++i) target.data()[i] -= 1.0;
    }
    auto fn = [&](ParamSet<double>& p) {
        auto est = sense::estimate_reference<double>(p, xm2, x0, xp2);
        return dsvr::nn::l1_loss<double>(est.z_mid, Var<double>::constant(target));
    };
    Rng probe_rng(27);
    auto report = dsvr::nn::gradient_check<double>(fn, params, 1, probe_rng, 1e-4);
    INFO("worst: ", report.worst_param, "[", report.worst_index, "]");
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("write_dfm_png: grayscale is the channel max scaled to 8 bits") {
    auto e = Tensor4<float>::from({1, 3, 1, 2}, {0.2f, 0.0f,   // R
                                                 0.6f, 0.0f,   // G
                                                 0.1f, 1.0f}); // B
    const auto path = std::filesystem::temp_directory_path() / "dsvr_dfm_test.png";
    sense::write_dfm_png(path.string(), e);
    auto img = dsvr::media::read_png(path.string());
    std::filesystem::remove(path);
    REQUIRE(img.h == 1);
    REQUIRE(img.w == 2);
    CHECK(static_cast<int>(img.at(0, 0, 0)) == 153);  // round(0.6 * 255)
    CHECK(static_cast<int>(img.at(0, 1, 0)) == 255);
    CHECK(img.at(0, 0, 0) == img.at(0, 0, 1));
    CHECK(img.at(0, 0, 1) == img.at(0, 0, 2));
}
