#pragma once

#include "cbir/image.hpp"

#include <array>
#include <vector>

namespace cbir {

struct Offset {
    int dx = 1;
    int dy = 0;

    bool operator==(const Offset&) const = default;
};

/// Gray image requantized to `levels` gray levels: level = floor(v * levels / 256).
struct QuantizedImage {
    int width = 0;
    int height = 0;
    int levels = 0;
    std::vector<int> data;

    int at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

QuantizedImage quantize_gray(const Image& img, int levels);

/// Normalized, symmetric gray-level co-occurrence matrix for one displacement.
struct CooccurrenceMatrix {
    int levels = 0;
    Offset offset;
    std::vector<double> p;   ///< levels x levels, row-major

    double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Counts every in-bounds pair (pixel, pixel + offset) in both directions.
CooccurrenceMatrix glcm(const QuantizedImage& img, Offset offset);
CooccurrenceMatrix glcm(const Image& img, Offset offset, int levels);

struct GlcmFeatures {
    double contrast = 0.0;
    double dissimilarity = 0.0;
    double homogeneity = 0.0;
    double angular_second_moment = 0.0;
    double entropy = 0.0;

    std::array<double, 5> flatten() const {
        return {contrast, dissimilarity, homogeneity, angular_second_moment, entropy};
    }
};

GlcmFeatures glcm_features(const CooccurrenceMatrix& m);

/// GLCM features averaged over several offsets.
GlcmFeatures glcm_features(const Image& img, const std::vector<Offset>& offsets, int levels);

struct TamuraFeatures {
    double coarseness = 0.0;
    double contrast = 0.0;
    double directionality = 0.0;

    std::array<double, 3> flatten() const { return {coarseness, contrast, directionality}; }
};

inline constexpr int kTamuraMinSize = 32;
inline constexpr int kTamuraMaxScale = 5;
inline constexpr double kTamuraGradientThreshold = 12.0;
inline constexpr int kTamuraDirectionBins = 16;

double tamura_coarseness(const Image& img);
double tamura_contrast(const Image& img);
double tamura_directionality(const Image& img);

/// Requires a gray image of at least kTamuraMinSize on each side.
TamuraFeatures tamura_features(const Image& img);

} // namespace cbir
