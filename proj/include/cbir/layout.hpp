#pragma once

#include <cstddef>
#include <span>

namespace cbir {

struct BlockRange {
    std::size_t offset = 0;
    std::size_t length = 0;

    template <class T>
    std::span<T> slice(std::span<T> v) const {
        return v.subspan(offset, length);
    }

    bool operator==(const BlockRange&) const = default;
};

/// Sizes of each sub-block of a feature vector. The vector is laid out as
/// color (histogram, moments) | texture (GLCM, Tamura) | shape (Hu, Fourier).
struct FeatureLayout {
    std::size_t color_histogram = 72;
    std::size_t color_moments = 9;
    std::size_t glcm = 5;
    std::size_t tamura = 3;
    std::size_t hu = 7;
    std::size_t fourier = 10;

    BlockRange color() const { return {0, color_histogram + color_moments}; }
    BlockRange texture() const { return {color().length, glcm + tamura}; }
    BlockRange shape() const { return {color().length + texture().length, hu + fourier}; }

    BlockRange color_histogram_range() const { return {0, color_histogram}; }
    BlockRange color_moments_range() const { return {color_histogram, color_moments}; }
    BlockRange glcm_range() const { return {texture().offset, glcm}; }
    BlockRange tamura_range() const { return {texture().offset + glcm, tamura}; }
    BlockRange hu_range() const { return {shape().offset, hu}; }
    BlockRange fourier_range() const { return {shape().offset + hu, fourier}; }

    std::size_t total() const { return color().length + texture().length + shape().length; }

    bool operator==(const FeatureLayout&) const = default;
};

} // namespace cbir
