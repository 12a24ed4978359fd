#include "cbir/metrics.hpp"

#include "cbir/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cbir {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": length mismatch");
    }
}

std::vector<double> gray_values(const Image& img) {
    if (img.channels() != 1) {
        throw Error(ErrorCode::WrongChannelCount, "pixel comparisons require 1-channel images");
    }
    return {img.data().begin(), img.data().end()};
}

std::pair<std::vector<double>, std::vector<double>> gray_pair(const Image& a, const Image& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::DimensionMismatch, "images differ in size");
    }
    return {gray_values(a), gray_values(b)};
}

double sum_abs(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += std::abs(u[i] - v[i]);
    }
    return s;
}

double sum_squares(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
    }
    return s;
}

} // namespace

double minkowski(std::span<const double> u, std::span<const double> v, double p) {
    require_same_length(u, v, "minkowski");
    if (!(p >= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "Minkowski order must be >= 1");
    }
    if (p == 1.0) {
        return sum_abs(u, v);
    }
    if (p == 2.0) {
        return std::sqrt(sum_squares(u, v));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += std::pow(std::abs(u[i] - v[i]), p);
    }
    return std::pow(s, 1.0 / p);
}

double pixel_distance(const Image& a, const Image& b, PixelDistanceKind kind) {
    const auto [u, v] = gray_pair(a, b);
    switch (kind) {
    case PixelDistanceKind::Abs: return sum_abs(u, v);
    case PixelDistanceKind::Squared: return sum_squares(u, v);
    case PixelDistanceKind::Euclidean: return minkowski(u, v, 2.0);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown pixel distance kind");
}

DiffStats diff_stats(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "diff_stats");
    if (a.size() < 2) {
        throw Error(ErrorCode::EmptyInput, "sample variance needs at least 2 values");
    }
    const auto n = static_cast<double>(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] - b[i];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / (n - 1.0)), a.size()};
}

double stabilized_distance(std::span<const double> a, std::span<const double> b) {
    const DiffStats s = diff_stats(a, b);
    if (s.sample_std == 0.0) {
        return s.mean_diff == 0.0 ? 0.0 : kInfiniteDistance;
    }
    return std::sqrt(static_cast<double>(s.n)) * std::abs(s.mean_diff) / s.sample_std;
}

double stabilized_pixel_distance(const Image& a, const Image& b) {
    const auto [u, v] = gray_pair(a, b);
    return stabilized_distance(u, v);
}

double cosine_disparity(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "cosine_disparity");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::UndefinedInput, "cosine disparity of a zero vector is undefined");
    }
    const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    return 1.0 - cosine;
}

double vector_disparity(const Image& a, const Image& b) {
    const auto [u, v] = gray_pair(a, b);
    return cosine_disparity(u, v);
}

double histogram_distance(std::span<const double> h1, std::span<const double> h2) {
    require_same_length(h1, h2, "histogram_distance");
    return std::sqrt(sum_squares(h1, h2));
}

double histogram_distance(const Histogram& h1, const Histogram& h2) {
    if (h1.bins.size() != h2.bins.size()) {
        throw Error(ErrorCode::DimensionMismatch, "histogram_distance: bin count mismatch");
    }
    const std::vector<double> a(h1.bins.begin(), h1.bins.end());
    const std::vector<double> b(h2.bins.begin(), h2.bins.end());
    return histogram_distance(a, b);
}

double histogram_intersection(std::span<const double> h1, std::span<const double> h2) {
    require_same_length(h1, h2, "histogram_intersection");
    double s1 = 0.0, s2 = 0.0, overlap = 0.0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
        s1 += h1[i];
        s2 += h2[i];
        overlap += std::min(h1[i], h2[i]);
    }
    if (std::abs(s1 - 1.0) > 1e-6 || std::abs(s2 - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "histogram_intersection requires normalized histograms");
    }
    return overlap;
}

double partial_similarity(double distance) {
    return 1.0 / (1.0 + distance);
}

SimilarityBreakdown osm_from_distances(double texture, double intensity, double shape) {
    SimilarityBreakdown s;
    s.e_texture = partial_similarity(texture);
    s.e_intensity = partial_similarity(intensity);
    s.e_shape = partial_similarity(shape);
    s.osm = (s.e_texture + s.e_intensity + s.e_shape) / 3.0;
    return s;
}

SimilarityBreakdown osm(std::span<const double> query, std::span<const double> candidate,
                        const FeatureLayout& layout) {
    if (query.size() != layout.total() || candidate.size() != layout.total()) {
        throw Error(ErrorCode::DimensionMismatch, "osm: feature vector does not match the block layout");
    }
    auto block = [&](BlockRange r) { return minkowski(r.slice(query), r.slice(candidate), 2.0); };
    return osm_from_distances(block(layout.texture()), block(layout.color()), block(layout.shape()));
}

} // namespace cbir
