#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cbir {

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB, interleaved) channels.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels);
    Image(int width, int height, int channels, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    bool empty() const noexcept { return pixel_count() == 0; }

    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<std::uint8_t> data_;
};

/// Three values per pixel, interleaved in row-major order.
template <class T>
struct TriChannel {
    int width = 0;
    int height = 0;
    std::vector<std::array<T, 3>> pixels;

    const std::array<T, 3>& at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

/// H in degrees [0, 360), S and V in [0, 1].
using HsvImage = TriChannel<double>;
/// (R-G, 2B-R-G, R+G+B) per pixel.
using OpponentImage = TriChannel<int>;

struct Histogram {
    std::vector<std::uint64_t> bins;
    std::uint64_t total = 0;
};

struct CdfCurve {
    std::vector<double> values;
};

// --- loading / encoding ---------------------------------------------------

/// Loads PGM/PPM (P2, P3, P5, P6), 8/16-bit PNG and 24/32-bit BMP files.
/// The decoder is chosen from the file extension, falling back to the
/// content signature when the extension is unknown.
Image load_image(const std::filesystem::path& path);

/// Decodes an in-memory file, detecting the format from its signature.
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Image& img);
/// Binary P5 (gray) or P6 (RGB).
std::vector<std::uint8_t> encode_pnm(const Image& img);
/// Writes .png, .pgm (gray), .ppm (RGB) or .pnm by extension.
void save_image(const Image& img, const std::filesystem::path& path);

// --- conversions ----------------------------------------------------------

Image to_grayscale(const Image& img);
/// Gray images are replicated into three identical channels.
Image to_rgb(const Image& img);
HsvImage rgb_to_hsv(const Image& img);
std::array<double, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
OpponentImage opponent_transform(const Image& img);

Histogram histogram(const Image& img, int bins = 256);
CdfCurve cdf(const Histogram& h);

// --- geometric helpers ----------------------------------------------------

/// Clockwise quarter turn.
Image rotate90(const Image& img);
/// Pixel replication by an integer factor.
Image upscale(const Image& img, int factor);
/// Box-filter downscale so that max(width, height) <= max_dim; aspect ratio is
/// preserved and images already small enough are returned unchanged.
Image fit_within(const Image& img, int max_dim);

} // namespace cbir
