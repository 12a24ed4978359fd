#include "cbir/texture_features.hpp"

#include "cbir/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace cbir {

namespace {

void require_gray(const Image& img, const char* what) {
    if (img.channels() != 1) {
        throw Error(ErrorCode::WrongChannelCount, std::string(what) + " requires a 1-channel image");
    }
}

// Summed-area table with one row/column of zero padding.
class IntegralImage {
public:
    explicit IntegralImage(const Image& img) : w_(img.width()), h_(img.height()) {
        sums_.assign(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0);
        for (int y = 0; y < h_; ++y) {
            std::int64_t row = 0;
            for (int x = 0; x < w_; ++x) {
                row += img.at(x, y);
                cell(x + 1, y + 1) = cell(x + 1, y) + row;
            }
        }
    }

    /// Mean over [x0, x1] x [y0, y1] clipped to the image; false if the clipped box is empty.
    bool box_mean(int x0, int y0, int x1, int y1, double& mean) const {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, w_ - 1);
        y1 = std::min(y1, h_ - 1);
        if (x0 > x1 || y0 > y1) {
            return false;
        }
        const std::int64_t s = get(x1 + 1, y1 + 1) - get(x0, y1 + 1) - get(x1 + 1, y0) + get(x0, y0);
        mean = static_cast<double>(s) / (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
        return true;
    }

private:
    std::int64_t& cell(int x, int y) { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
    std::int64_t get(int x, int y) const { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

    int w_, h_;
    std::vector<std::int64_t> sums_;
};

} // namespace

QuantizedImage quantize_gray(const Image& img, int levels) {
    require_gray(img, "quantize_gray");
    if (levels < 2 || levels > 256) {
        throw Error(ErrorCode::InvalidArgument, "gray level count must be in [2, 256]");
    }
    QuantizedImage q{img.width(), img.height(), levels, {}};
    q.data.reserve(img.pixel_count());
    for (std::uint8_t v : img.data()) {
        q.data.push_back(static_cast<int>(v) * levels / 256);
    }
    return q;
}

CooccurrenceMatrix glcm(const QuantizedImage& img, Offset offset) {
    if (img.levels < 2) {
        throw Error(ErrorCode::InvalidArgument, "GLCM needs at least 2 gray levels");
    }
    const auto g = static_cast<std::size_t>(img.levels);
    std::vector<std::uint64_t> counts(g * g, 0);
    std::uint64_t pairs = 0;
    for (int y = 0; y < img.height; ++y) {
        const int y2 = y + offset.dy;
        if (y2 < 0 || y2 >= img.height) {
            continue;
        }
        for (int x = 0; x < img.width; ++x) {
            const int x2 = x + offset.dx;
            if (x2 < 0 || x2 >= img.width) {
                continue;
            }
            const auto a = static_cast<std::size_t>(img.at(x, y));
            const auto b = static_cast<std::size_t>(img.at(x2, y2));
            if (a >= g || b >= g) {
                throw Error(ErrorCode::InvalidArgument, "quantized level out of range");
            }
            ++counts[a * g + b];
            ++counts[b * g + a];
            ++pairs;
        }
    }
    if (pairs == 0) {
        throw Error(ErrorCode::ImageTooSmall, "image has no pixel pairs for the GLCM offset");
    }
    CooccurrenceMatrix m{img.levels, offset, {}};
    m.p.reserve(counts.size());
    const double total = 2.0 * static_cast<double>(pairs);
    for (std::uint64_t c : counts) {
        m.p.push_back(static_cast<double>(c) / total);
    }
    return m;
}

CooccurrenceMatrix glcm(const Image& img, Offset offset, int levels) {
    return glcm(quantize_gray(img, levels), offset);
}

GlcmFeatures glcm_features(const CooccurrenceMatrix& m) {
    GlcmFeatures f;
    for (int i = 0; i < m.levels; ++i) {
        for (int j = 0; j < m.levels; ++j) {
            const double p = m.at(i, j);
            if (p == 0.0) {
                continue;
            }
            const double d = i - j;
            f.contrast += p * d * d;
            f.dissimilarity += p * std::abs(d);
            f.homogeneity += p / (1.0 + d * d);
            f.angular_second_moment += p * p;
            f.entropy -= p * std::log(p);
        }
    }
    return f;
}

GlcmFeatures glcm_features(const Image& img, const std::vector<Offset>& offsets, int levels) {
    if (offsets.empty()) {
        throw Error(ErrorCode::InvalidArgument, "at least one GLCM offset is required");
    }
    const QuantizedImage q = quantize_gray(img, levels);
    GlcmFeatures mean;
    for (const Offset& off : offsets) {
        const GlcmFeatures f = glcm_features(glcm(q, off));
        mean.contrast += f.contrast;
        mean.dissimilarity += f.dissimilarity;
        mean.homogeneity += f.homogeneity;
        mean.angular_second_moment += f.angular_second_moment;
        mean.entropy += f.entropy;
    }
    const auto n = static_cast<double>(offsets.size());
    mean.contrast /= n;
    mean.dissimilarity /= n;
    mean.homogeneity /= n;
    mean.angular_second_moment /= n;
    mean.entropy /= n;
    return mean;
}

double tamura_coarseness(const Image& img) {
    require_gray(img, "tamura_coarseness");
    const IntegralImage integral(img);
    const int w = img.width(), h = img.height();
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best_k = 0;
            double best_e = -1.0;
            for (int k = 0; k <= kTamuraMaxScale; ++k) {
                const int s = 1 << k;
                const int lo = s / 2;
                double a = 0.0, b = 0.0, e = 0.0;
                // Adjacent non-overlapping s x s windows left/right of x ...
                if (integral.box_mean(x - s, y - lo, x - 1, y - lo + s - 1, a) &&
                    integral.box_mean(x, y - lo, x + s - 1, y - lo + s - 1, b)) {
                    e = std::abs(a - b);
                }
                // ... and above/below y.
                if (integral.box_mean(x - lo, y - s, x - lo + s - 1, y - 1, a) &&
                    integral.box_mean(x - lo, y, x - lo + s - 1, y + s - 1, b)) {
                    e = std::max(e, std::abs(a - b));
                }
                if (e > best_e) {
                    best_e = e;
                    best_k = k;
                }
            }
            total += static_cast<double>(1 << best_k);
        }
    }
    return total / static_cast<double>(img.pixel_count());
}

double tamura_contrast(const Image& img) {
    require_gray(img, "tamura_contrast");
    const auto n = static_cast<double>(img.pixel_count());
    std::uint64_t sum = 0;
    for (std::uint8_t v : img.data()) {
        sum += v;
    }
    const double mean = static_cast<double>(sum) / n;
    double m2 = 0.0, m4 = 0.0;
    for (std::uint8_t v : img.data()) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (m2 == 0.0) {
        return 0.0;
    }
    const double kurtosis = m4 / (m2 * m2);
    return std::sqrt(m2) / std::pow(kurtosis, 0.25);
}

double tamura_directionality(const Image& img) {
    require_gray(img, "tamura_directionality");
    const int w = img.width(), h = img.height();
    std::array<std::uint64_t, kTamuraDirectionBins> bins{};
    std::uint64_t counted = 0;
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            int gx = 0, gy = 0;
            for (int k = -1; k <= 1; ++k) {
                gx += img.at(x + 1, y + k) - img.at(x - 1, y + k);
                gy += img.at(x + k, y + 1) - img.at(x + k, y - 1);
            }
            const double magnitude = (std::abs(gx) + std::abs(gy)) / 2.0;
            if (magnitude <= kTamuraGradientThreshold) {
                continue;
            }
            double theta = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
            if (theta < 0.0) {
                theta += std::numbers::pi;
            }
            if (theta >= std::numbers::pi) {
                theta -= std::numbers::pi;
            }
            const int bin = std::min(static_cast<int>(theta * kTamuraDirectionBins / std::numbers::pi),
                                     kTamuraDirectionBins - 1);
            ++bins[static_cast<std::size_t>(bin)];
            ++counted;
        }
    }
    if (counted == 0) {
        return 0.0;
    }
    // Orientations live on [0, pi); doubling the angle makes them circular.
    // The mean resultant length is 1 - circular variance.
    std::complex<double> resultant{0.0, 0.0};
    for (int b = 0; b < kTamuraDirectionBins; ++b) {
        const double center = (b + 0.5) * std::numbers::pi / kTamuraDirectionBins;
        resultant += static_cast<double>(bins[static_cast<std::size_t>(b)]) * std::polar(1.0, 2.0 * center);
    }
    return std::clamp(std::abs(resultant) / static_cast<double>(counted), 0.0, 1.0);
}

TamuraFeatures tamura_features(const Image& img) {
    require_gray(img, "tamura_features");
    if (img.width() < kTamuraMinSize || img.height() < kTamuraMinSize) {
        throw Error(ErrorCode::ImageTooSmall, "Tamura features need an image of at least 32x32");
    }
    return {tamura_coarseness(img), tamura_contrast(img), tamura_directionality(img)};
}

} // namespace cbir
