#include "cbir/error.hpp"
#include "cbir/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

using namespace cbir;

namespace {

Image g3(std::vector<std::uint8_t> v) {
    return Image(3, 3, 1, std::move(v));
}

const Image kA = g3({4, 3, 7, 0, 0, 1, 9, 5, 5});
const Image kB = g3({5, 3, 5, 0, 0, 0, 8, 5, 1});

std::vector<double> random_vec(std::mt19937& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = d(rng);
    }
    return v;
}

std::vector<double> flat(const Image& img) {
    return {img.data().begin(), img.data().end()};
}

} // namespace

TEST_CASE("pixel distances on the worked example") {
    CHECK(pixel_distance(kA, kB, PixelDistanceKind::Squared) == 23.0);
    CHECK(std::abs(pixel_distance(kA, kB, PixelDistanceKind::Euclidean) - std::sqrt(23.0)) <= 1e-12);
    double abs_oracle = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
        abs_oracle += std::abs(static_cast<double>(kA.data()[i]) - kB.data()[i]);
    }
    CHECK(pixel_distance(kA, kB, PixelDistanceKind::Abs) == abs_oracle);
    CHECK(abs_oracle == 9.0);
    for (auto kind : {PixelDistanceKind::Abs, PixelDistanceKind::Squared, PixelDistanceKind::Euclidean}) {
        CHECK(pixel_distance(kA, kA, kind) == 0.0);
    }
}

TEST_CASE("euclidean pixel distance equals minkowski p=2 bit for bit") {
    std::mt19937 rng(1);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 50; ++trial) {
        Image a(5, 4, 1), b(5, 4, 1);
        for (auto& v : a.data()) {
            v = static_cast<std::uint8_t>(byte(rng));
        }
        for (auto& v : b.data()) {
            v = static_cast<std::uint8_t>(byte(rng));
        }
        CHECK(pixel_distance(a, b, PixelDistanceKind::Euclidean) == minkowski(flat(a), flat(b), 2.0));
    }
}

TEST_CASE("pixel distance input checks") {
    CHECK_THROWS_AS(pixel_distance(kA, Image(2, 2, 1), PixelDistanceKind::Abs), Error);
    CHECK_THROWS_AS(pixel_distance(Image(3, 3, 3), Image(3, 3, 3), PixelDistanceKind::Abs), Error);
}

TEST_CASE("stabilized pixel distance") {
    CHECK(stabilized_pixel_distance(kA, kA) == 0.0);
    Image shifted = kA;
    for (auto& v : shifted.data()) {
        v = static_cast<std::uint8_t>(v + 5);
    }
    CHECK(stabilized_pixel_distance(shifted, kA) == kInfiniteDistance);

    const Image a(2, 2, 1, {1, 2, 3, 4});
    const Image z(2, 2, 1, {0, 0, 0, 0});
    const double sd = std::sqrt(5.0 / 3.0);
    CHECK(stabilized_pixel_distance(a, z) == doctest::Approx(2.0 * 2.5 / sd).epsilon(1e-14));
    CHECK(stabilized_pixel_distance(z, a) == stabilized_pixel_distance(a, z));

    const DiffStats s = diff_stats(flat(a), flat(z));
    CHECK(s.mean_diff == 2.5);
    CHECK(s.sample_std == doctest::Approx(sd).epsilon(1e-15));
    CHECK(s.n == 4);
}

TEST_CASE("vector disparity") {
    CHECK(vector_disparity(kA, kA) == doctest::Approx(0.0).scale(1e-15));
    const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0};
    CHECK(cosine_disparity(e1, e2) == 1.0);
    const std::vector<double> a{1, 1}, b{1, 0};
    CHECK(cosine_disparity(a, b) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-15));
    const std::vector<double> zero{0, 0};
    try {
        cosine_disparity(zero, a);
        FAIL("expected UndefinedInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UndefinedInput);
    }
}

TEST_CASE("cosine disparity is invariant to positive scaling") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_vec(rng, 12, -1.0, 1.0);
        const auto v = random_vec(rng, 12, -1.0, 1.0);
        auto w = u;
        const double s = scale(rng);
        for (auto& x : w) {
            x *= s;
        }
        CHECK(std::abs(cosine_disparity(u, v) - cosine_disparity(w, v)) <= 1e-9);
        const double d = cosine_disparity(u, v);
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
    }
}

TEST_CASE("histogram distance") {
    const std::vector<double> h{4, 0}, g{0, 4};
    CHECK(histogram_distance(h, h) == 0.0);
    CHECK(histogram_distance(h, g) == doctest::Approx(std::sqrt(32.0)).epsilon(1e-15));
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_vec(rng, 16), b = random_vec(rng, 16);
        CHECK(histogram_distance(a, b) == histogram_distance(b, a));
    }
    const Histogram ha{{1, 2, 3}, 6}, hb{{3, 2, 1}, 6};
    CHECK(histogram_distance(ha, hb) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
}

TEST_CASE("histograms of pixel permutations are at distance zero") {
    std::mt19937 rng(6);
    std::uniform_int_distribution<int> byte(0, 255);
    Image img(8, 6, 1);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(byte(rng));
    }
    Image perm = img;
    std::shuffle(perm.data().begin(), perm.data().end(), rng);
    CHECK(histogram_distance(histogram(img), histogram(perm)) == 0.0);
}

TEST_CASE("histogram intersection") {
    const std::vector<double> h{0.5, 0.5}, g{0.25, 0.75}, d{1.0, 0.0}, e{0.0, 1.0};
    CHECK(histogram_intersection(h, h) == 1.0);
    CHECK(histogram_intersection(d, e) == 0.0);
    CHECK(histogram_intersection(h, g) == 0.75);
    const std::vector<double> bad{0.5, 0.6};
    CHECK_THROWS_AS(histogram_intersection(bad, h), Error);
}

TEST_CASE("minkowski") {
    const std::vector<double> u{3, 4}, z{0, 0};
    CHECK(minkowski(u, z, 2.0) == 5.0);
    CHECK(minkowski(u, z, 1.0) == 7.0);
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0}) {
        CHECK(minkowski(u, u, p) == 0.0);
    }
    CHECK(minkowski(u, z, 3.0) == doctest::Approx(std::cbrt(91.0)).epsilon(1e-14));
    CHECK_THROWS_AS(minkowski(u, z, 0.5), Error);
    const std::vector<double> short_v{1};
    CHECK_THROWS_AS(minkowski(u, short_v, 2.0), Error);
}

TEST_CASE("metric axioms on random instances") {
    std::mt19937 rng(99);
    using Fn = double (*)(std::span<const double>, std::span<const double>);
    const std::vector<std::pair<const char*, std::function<double(std::span<const double>, std::span<const double>)>>>
        metrics = {
            {"l1", [](auto a, auto b) { return minkowski(a, b, 1.0); }},
            {"l2", [](auto a, auto b) { return minkowski(a, b, 2.0); }},
            {"minkowski3", [](auto a, auto b) { return minkowski(a, b, 3.0); }},
            {"histogram", static_cast<Fn>(histogram_distance)},
        };
    for (const auto& [name, d] : metrics) {
        CAPTURE(name);
        for (int trial = 0; trial < 100; ++trial) {
            const auto x = random_vec(rng, 6), y = random_vec(rng, 6), z = random_vec(rng, 6);
            CHECK(d(x, y) >= 0.0);
            CHECK(d(x, x) == 0.0);
            CHECK(d(x, y) > 0.0);
            CHECK(std::abs(d(x, y) - d(y, x)) <= 1e-9);
            CHECK(d(x, z) <= d(x, y) + d(y, z) + 1e-9);
        }
    }
}

TEST_CASE("osm") {
    FeatureLayout layout;
    std::vector<double> v(layout.total(), 0.25);
    const auto same = osm(v, v, layout);
    CHECK(same.e_texture == 1.0);
    CHECK(same.e_intensity == 1.0);
    CHECK(same.e_shape == 1.0);
    CHECK(same.osm == 1.0);

    const auto b = osm_from_distances(1.0, 0.0, 3.0);
    CHECK(b.e_texture == 0.5);
    CHECK(b.e_intensity == 1.0);
    CHECK(b.e_shape == 0.25);
    CHECK(b.osm == doctest::Approx(1.75 / 3.0).epsilon(1e-15));
    CHECK(b.osm == (b.e_texture + b.e_intensity + b.e_shape) / 3.0);

    CHECK((0.6 + 0.9 + 0.3) / 3.0 == doctest::Approx(0.6));
    CHECK(partial_similarity(0.0) == 1.0);

    std::vector<double> w = v;
    w[layout.texture().offset] += 3.0;
    w[layout.shape().offset] += 4.0;
    const auto c = osm(v, w, layout);
    CHECK(c.e_texture == 0.25);
    CHECK(c.e_shape == 0.2);
    CHECK(c.e_intensity == 1.0);
    CHECK(c.osm > 0.0);
    CHECK(c.osm < 1.0);
}
