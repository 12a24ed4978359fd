#pragma once

#include "cbir/image.hpp"
#include "cbir/layout.hpp"

#include <limits>
#include <span>

namespace cbir {

// Pixel-level comparisons use the gray value as the pixel characteristic, so
// every image-level function here expects 1-channel images of equal size.

enum class PixelDistanceKind { Abs, Squared, Euclidean };

double pixel_distance(const Image& a, const Image& b, PixelDistanceKind kind);

struct DiffStats {
    double mean_diff = 0.0;   ///< mean of per-pixel differences a - b
    double sample_std = 0.0;  ///< sample standard deviation, divisor n - 1
    std::size_t n = 0;
};

DiffStats diff_stats(std::span<const double> a, std::span<const double> b);

/// Returned when the differences have zero spread but nonzero mean.
inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

/// sqrt(n) * |mean_diff| / sample_std, with 0 for identical inputs and
/// kInfiniteDistance when the difference is a nonzero constant.
double stabilized_distance(std::span<const double> a, std::span<const double> b);
double stabilized_pixel_distance(const Image& a, const Image& b);

/// 1 - cos(a, b). Zero vectors are rejected with UndefinedInput.
double cosine_disparity(std::span<const double> a, std::span<const double> b);
double vector_disparity(const Image& a, const Image& b);

/// Euclidean distance between histogram bin vectors.
double histogram_distance(std::span<const double> h1, std::span<const double> h2);
double histogram_distance(const Histogram& h1, const Histogram& h2);

/// Sum of bin-wise minima; both inputs must sum to 1 within 1e-6.
double histogram_intersection(std::span<const double> h1, std::span<const double> h2);

double minkowski(std::span<const double> u, std::span<const double> v, double p);

struct SimilarityBreakdown {
    double e_texture = 0.0;
    double e_intensity = 0.0;
    double e_shape = 0.0;
    double osm = 0.0;
};

/// Maps a block distance into (0, 1]: 1 / (1 + d).
double partial_similarity(double distance);

SimilarityBreakdown osm_from_distances(double texture, double intensity, double shape);

/// Overall similarity: mean of the per-block partial similarities, where each
/// block distance is Euclidean over that block of the normalized vectors and
/// the intensity block is the color block.
SimilarityBreakdown osm(std::span<const double> query, std::span<const double> candidate,
                        const FeatureLayout& layout);

} // namespace cbir
