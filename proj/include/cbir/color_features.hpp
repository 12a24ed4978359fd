#pragma once

#include "cbir/image.hpp"

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbir {

/// Quantization grid for the HSV histogram: hue bands x saturation x value.
struct HsvGrid {
    int hue = 8;
    int saturation = 3;
    int value = 3;

    int size() const noexcept { return hue * saturation * value; }
    /// Flattened bin index, hue-major.
    int index(int h, int s, int v) const noexcept { return (h * saturation + s) * value + v; }

    bool operator==(const HsvGrid&) const = default;
};

/// Fraction of pixels in each HSV bin; sums to 1.
struct ColorHistogramFeature {
    std::vector<double> bins;
};

struct ChannelMoments {
    double mean = 0.0;
    double stddev = 0.0;
    /// Cube root of the third central moment, so it shares intensity units.
    double skew = 0.0;
};

struct ColorMomentsFeature {
    std::array<ChannelMoments, 3> channels;

    std::array<double, 9> flatten() const;
};

int hsv_bin(const std::array<double, 3>& hsv, const HsvGrid& grid);

ColorHistogramFeature hsv_histogram(const Image& img, const HsvGrid& grid = {});
ColorMomentsFeature color_moments(const Image& img);

/// Named hues accepted by histogram_from_proportions: red, orange, yellow,
/// green, cyan, blue, purple, magenta.
double hue_center(const std::string& name);

/// Builds a target histogram from a query such as {"blue", 0.51}. Each named
/// fraction lands in the bin holding that hue at full saturation and value;
/// any unassigned mass is spread evenly over every bin.
ColorHistogramFeature histogram_from_proportions(const std::vector<std::pair<std::string, double>>& proportions,
                                                 const HsvGrid& grid = {});

/// Parses "blue=0.51,red=0.2" into (name, fraction) pairs. Throws InvalidArgument.
std::vector<std::pair<std::string, double>> parse_proportions(std::string_view text);

} // namespace cbir
