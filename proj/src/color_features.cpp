#include "cbir/color_features.hpp"

#include "cbir/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace cbir {

namespace {

void validate(const HsvGrid& grid) {
    if (grid.hue < 1 || grid.saturation < 1 || grid.value < 1) {
        throw Error(ErrorCode::InvalidArgument, "HSV grid dimensions must be >= 1");
    }
}

int band(double x, int n) {
    return std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
}

} // namespace

std::array<double, 9> ColorMomentsFeature::flatten() const {
    std::array<double, 9> out{};
    for (std::size_t c = 0; c < 3; ++c) {
        out[3 * c] = channels[c].mean;
        out[3 * c + 1] = channels[c].stddev;
        out[3 * c + 2] = channels[c].skew;
    }
    return out;
}

int hsv_bin(const std::array<double, 3>& hsv, const HsvGrid& grid) {
    const int h = band(hsv[0] / 360.0, grid.hue);
    const int s = band(hsv[1], grid.saturation);
    const int v = band(hsv[2], grid.value);
    return grid.index(h, s, v);
}

ColorHistogramFeature hsv_histogram(const Image& img, const HsvGrid& grid) {
    validate(grid);
    if (img.empty()) {
        throw Error(ErrorCode::EmptyInput, "hsv_histogram of a zero-pixel image");
    }
    const HsvImage hsv = rgb_to_hsv(img);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(grid.size()), 0);
    for (const auto& px : hsv.pixels) {
        ++counts[static_cast<std::size_t>(hsv_bin(px, grid))];
    }
    ColorHistogramFeature out;
    out.bins.reserve(counts.size());
    const auto n = static_cast<double>(img.pixel_count());
    for (std::uint64_t c : counts) {
        out.bins.push_back(static_cast<double>(c) / n);
    }
    return out;
}

ColorMomentsFeature color_moments(const Image& img) {
    if (img.empty()) {
        throw Error(ErrorCode::EmptyInput, "color_moments of a zero-pixel image");
    }
    if (img.channels() != 3) {
        throw Error(ErrorCode::WrongChannelCount, "color_moments requires a 3-channel image");
    }
    const auto n = static_cast<double>(img.pixel_count());
    const auto data = img.data();
    ColorMomentsFeature out;
    for (int c = 0; c < 3; ++c) {
        // Integer sums keep the mean exact and independent of pixel order.
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            sum += data[3 * i + c];
        }
        const double mean = static_cast<double>(sum) / n;
        double m2 = 0.0, m3 = 0.0;
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            const double d = data[3 * i + c] - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        m2 /= n;
        m3 /= n;
        out.channels[static_cast<std::size_t>(c)] = {mean, std::sqrt(m2), std::cbrt(m3)};
    }
    return out;
}

double hue_center(const std::string& name) {
    static const std::map<std::string, double, std::less<>> table = {
        {"red", 0.0},    {"orange", 30.0}, {"yellow", 60.0},  {"green", 120.0},
        {"cyan", 180.0}, {"blue", 240.0},  {"purple", 270.0}, {"magenta", 300.0},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        throw Error(ErrorCode::UnknownName, "unknown color name: " + name);
    }
    return it->second;
}

ColorHistogramFeature histogram_from_proportions(const std::vector<std::pair<std::string, double>>& proportions,
                                                 const HsvGrid& grid) {
    validate(grid);
    ColorHistogramFeature out;
    out.bins.assign(static_cast<std::size_t>(grid.size()), 0.0);
    double assigned = 0.0;
    for (const auto& [name, fraction] : proportions) {
        if (!(fraction >= 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "color proportion must be >= 0");
        }
        const double hue = hue_center(name);
        const int bin = hsv_bin({hue, 1.0, 1.0}, grid);
        out.bins[static_cast<std::size_t>(bin)] += fraction;
        assigned += fraction;
    }
    if (assigned > 1.0 + 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "color proportions sum to more than 1");
    }
    const double residual = std::max(0.0, 1.0 - assigned) / grid.size();
    if (residual > 0.0) {
        for (double& b : out.bins) {
            b += residual;
        }
    }
    return out;
}

std::vector<std::pair<std::string, double>> parse_proportions(std::string_view text) {
    std::vector<std::pair<std::string, double>> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw Error(ErrorCode::InvalidArgument, "expected name=fraction, got: " + std::string(item));
        }
        const std::string_view number = item.substr(eq + 1);
        double fraction = 0.0;
        const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), fraction);
        if (ec != std::errc{} || end != number.data() + number.size()) {
            throw Error(ErrorCode::InvalidArgument, "malformed fraction in: " + std::string(item));
        }
        out.emplace_back(std::string(item.substr(0, eq)), fraction);
    }
    if (out.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no color proportions given");
    }
    return out;
}

} // namespace cbir
