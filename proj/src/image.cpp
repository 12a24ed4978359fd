#include "cbir/image.hpp"

#include "cbir/error.hpp"

#include <algorithm>
#include <cmath>

namespace cbir {

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                      static_cast<std::size_t>(std::max(height, 0)) *
                                      static_cast<std::size_t>(std::max(channels, 0)))) {}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::WrongChannelCount, "image must have 1 or 3 channels");
    }
    if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
        throw Error(ErrorCode::DimensionMismatch, "image data length does not match width*height*channels");
    }
}

namespace {

void require_rgb(const Image& img, const char* what) {
    if (img.channels() != 3) {
        throw Error(ErrorCode::WrongChannelCount, std::string(what) + " requires a 3-channel image");
    }
}

} // namespace

Image to_grayscale(const Image& img) {
    if (img.channels() == 1) {
        return img;
    }
    Image out(img.width(), img.height(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
    }
    return out;
}

Image to_rgb(const Image& img) {
    if (img.channels() == 3) {
        return img;
    }
    Image out(img.width(), img.height(), 3);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
    }
    return out;
}

std::array<double, 3> rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8, g = g8, b = b8;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;

    double h = 0.0;
    if (delta > 0.0) {
        if (mx == r) {
            h = 60.0 * ((g - b) / delta);
        } else if (mx == g) {
            h = 60.0 * ((b - r) / delta + 2.0);
        } else {
            h = 60.0 * ((r - g) / delta + 4.0);
        }
        if (h < 0.0) {
            h += 360.0;
        }
        if (h >= 360.0) {
            h -= 360.0;
        }
    }
    const double s = mx > 0.0 ? delta / mx : 0.0;
    return {h, s, mx / 255.0};
}

HsvImage rgb_to_hsv(const Image& img) {
    require_rgb(img, "rgb_to_hsv");
    HsvImage out{img.width(), img.height(), {}};
    out.pixels.reserve(img.pixel_count());
    auto src = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        out.pixels.push_back(rgb_to_hsv(src[3 * i], src[3 * i + 1], src[3 * i + 2]));
    }
    return out;
}

OpponentImage opponent_transform(const Image& img) {
    require_rgb(img, "opponent_transform");
    OpponentImage out{img.width(), img.height(), {}};
    out.pixels.reserve(img.pixel_count());
    auto src = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const int r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
        out.pixels.push_back({r - g, 2 * b - r - g, r + g + b});
    }
    return out;
}

Histogram histogram(const Image& img, int bins) {
    if (bins < 2) {
        throw Error(ErrorCode::InvalidArgument, "histogram needs at least 2 bins");
    }
    if (img.channels() != 1) {
        throw Error(ErrorCode::WrongChannelCount, "histogram requires a 1-channel image");
    }
    Histogram h;
    h.bins.assign(static_cast<std::size_t>(bins), 0);
    for (std::uint8_t v : img.data()) {
        ++h.bins[static_cast<std::size_t>(v) * static_cast<std::size_t>(bins) / 256];
    }
    h.total = img.pixel_count();
    return h;
}

CdfCurve cdf(const Histogram& h) {
    if (h.total == 0) {
        throw Error(ErrorCode::EmptyInput, "cdf of an empty histogram is undefined");
    }
    CdfCurve out;
    out.values.reserve(h.bins.size());
    std::uint64_t running = 0;
    for (std::uint64_t count : h.bins) {
        running += count;
        out.values.push_back(static_cast<double>(running) / static_cast<double>(h.total));
    }
    return out;
}

Image rotate90(const Image& img) {
    const int w = img.width(), h = img.height(), ch = img.channels();
    Image out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                out.at(h - 1 - y, x, c) = img.at(x, y, c);
            }
        }
    }
    return out;
}

Image upscale(const Image& img, int factor) {
    if (factor < 1) {
        throw Error(ErrorCode::InvalidArgument, "upscale factor must be >= 1");
    }
    const int ch = img.channels();
    Image out(img.width() * factor, img.height() * factor, ch);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            for (int c = 0; c < ch; ++c) {
                out.at(x, y, c) = img.at(x / factor, y / factor, c);
            }
        }
    }
    return out;
}

Image fit_within(const Image& img, int max_dim) {
    if (max_dim < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_dim must be >= 1");
    }
    const int w = img.width(), h = img.height();
    if (std::max(w, h) <= max_dim) {
        return img;
    }
    const double scale = static_cast<double>(max_dim) / std::max(w, h);
    const int nw = std::max(1, static_cast<int>(std::lround(w * scale)));
    const int nh = std::max(1, static_cast<int>(std::lround(h * scale)));
    const int ch = img.channels();

    Image out(nw, nh, ch);
    for (int oy = 0; oy < nh; ++oy) {
        const int y0 = static_cast<int>(static_cast<long long>(oy) * h / nh);
        const int y1 = std::max(y0 + 1, static_cast<int>(static_cast<long long>(oy + 1) * h / nh));
        for (int ox = 0; ox < nw; ++ox) {
            const int x0 = static_cast<int>(static_cast<long long>(ox) * w / nw);
            const int x1 = std::max(x0 + 1, static_cast<int>(static_cast<long long>(ox + 1) * w / nw));
            for (int c = 0; c < ch; ++c) {
                long sum = 0;
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) {
                        sum += img.at(x, y, c);
                    }
                }
                const long n = static_cast<long>(y1 - y0) * (x1 - x0);
                out.at(ox, oy, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
            }
        }
    }
    return out;
}

} // namespace cbir
