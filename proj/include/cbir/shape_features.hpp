#pragma once

#include "cbir/image.hpp"

#include <array>
#include <complex>
#include <vector>

namespace cbir {

/// Binary foreground map over an image grid.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t foreground_count() const noexcept { return count_; }

    bool at(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ &&
               bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool on);

    bool operator==(const Mask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::size_t count_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Otsu threshold over the 256-level histogram; returns the largest level
/// that still belongs to the dark class. Throws NoShape for single-level images.
int otsu_threshold(const Image& gray);

/// Otsu split, the side with fewer pixels is the object (darker side on a
/// tie), reduced to its largest 4-connected component.
Mask segment(const Image& gray);

Mask largest_component(const Mask& mask);

/// Raw Hu invariants (not log-scaled).
std::array<double, 7> hu_invariants(const Mask& mask);

/// Hu invariants stored as sign(phi) * log10(|phi| + 1e-30).
std::array<double, 7> hu_moments(const Mask& mask);

inline constexpr int kBoundaryMinPoints = 8;
inline constexpr int kBoundarySamples = 128;

/// Moore-neighbour trace of the outer boundary, clockwise on screen, starting
/// at the topmost-then-leftmost foreground pixel. The start is not repeated.
std::vector<std::array<int, 2>> trace_boundary(const Mask& mask);

/// Closed polygon resampled to `count` points equally spaced by arc length.
std::vector<std::complex<double>> resample_closed(const std::vector<std::array<int, 2>>& polygon, int count);

/// |F(k)| / |F(1)| for k = 1..harmonics over the resampled boundary.
std::vector<double> fourier_descriptors(const Mask& mask, int harmonics = 10);

struct ShapeFeature {
    std::array<double, 7> hu{};
    std::vector<double> fourier;
};

ShapeFeature shape_features(const Image& gray, int harmonics = 10);

} // namespace cbir
