#include "cbir/shape_features.hpp"

#include "cbir/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cbir {

Mask::Mask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
    }
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void Mask::set(int x, int y, bool on) {
    auto& bit = bits_[static_cast<std::size_t>(y) * width_ + x];
    if ((bit != 0) != on) {
        count_ = on ? count_ + 1 : count_ - 1;
        bit = on ? 1 : 0;
    }
}

int otsu_threshold(const Image& gray) {
    if (gray.channels() != 1) {
        throw Error(ErrorCode::WrongChannelCount, "segmentation requires a 1-channel image");
    }
    const Histogram h = histogram(gray, 256);
    const auto levels = std::count_if(h.bins.begin(), h.bins.end(), [](std::uint64_t c) { return c > 0; });
    if (levels < 2) {
        throw Error(ErrorCode::NoShape, "image has a single gray level, no shape to segment");
    }
    long double total_sum = 0.0L;
    for (int v = 0; v < 256; ++v) {
        total_sum += static_cast<long double>(v) * h.bins[static_cast<std::size_t>(v)];
    }
    const auto n = static_cast<long double>(h.total);

    int best_t = 0;
    long double best = -1.0L;
    long double n0 = 0.0L, s0 = 0.0L;
    for (int t = 0; t < 255; ++t) {
        n0 += h.bins[static_cast<std::size_t>(t)];
        s0 += static_cast<long double>(t) * h.bins[static_cast<std::size_t>(t)];
        const long double n1 = n - n0;
        if (n0 == 0.0L || n1 == 0.0L) {
            continue;
        }
        // Between-class variance up to the constant factor 1/n^2.
        const long double diff = n * s0 - n0 * total_sum;
        const long double score = diff * diff / (n0 * n1);
        if (score > best) {
            best = score;
            best_t = t;
        }
    }
    return best_t;
}

Mask largest_component(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::array<int, 2>> stack;
    int best_label = -1;
    std::size_t best_size = 0;
    int next_label = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) {
                continue;
            }
            const int id = next_label++;
            std::size_t size = 0;
            stack.push_back({x, y});
            label[static_cast<std::size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++size;
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + dx[k], ny = cy + dy[k];
                    if (mask.at(nx, ny) && label[static_cast<std::size_t>(ny) * w + nx] < 0) {
                        label[static_cast<std::size_t>(ny) * w + nx] = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
            // Strict comparison keeps the earliest component (raster order) on ties.
            if (size > best_size) {
                best_size = size;
                best_label = id;
            }
        }
    }
    Mask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (label[static_cast<std::size_t>(y) * w + x] == best_label && best_label >= 0) {
                out.set(x, y, true);
            }
        }
    }
    return out;
}

Mask segment(const Image& gray) {
    if (gray.empty()) {
        throw Error(ErrorCode::EmptyInput, "cannot segment an empty image");
    }
    const int t = otsu_threshold(gray);
    std::size_t dark = 0;
    for (std::uint8_t v : gray.data()) {
        dark += v <= t ? 1 : 0;
    }
    const std::size_t bright = gray.pixel_count() - dark;
    const bool dark_is_object = dark <= bright;

    Mask m(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            const bool is_dark = gray.at(x, y) <= t;
            if (is_dark == dark_is_object) {
                m.set(x, y, true);
            }
        }
    }
    return largest_component(m);
}

namespace {

__extension__ typedef __int128 i128;

// Central moments held as exact integers scaled by powers of the pixel count:
// second order are n * mu_pq, third order n^2 * mu_pq. Everything is computed
// from raw integer moments, so results do not depend on where the shape sits.
// The 128-bit range covers masks up to roughly 8k x 8k.
struct ScaledCentralMoments {
    i128 n = 0;
    i128 c20 = 0, c02 = 0, c11 = 0;
    i128 c30 = 0, c03 = 0, c21 = 0, c12 = 0;
};

ScaledCentralMoments central_moments(const Mask& mask) {
    i128 m00 = 0, m10 = 0, m01 = 0, m20 = 0, m02 = 0, m11 = 0, m30 = 0, m03 = 0, m21 = 0, m12 = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) {
                continue;
            }
            const i128 X = x, Y = y;
            m00 += 1;
            m10 += X;
            m01 += Y;
            m20 += X * X;
            m02 += Y * Y;
            m11 += X * Y;
            m30 += X * X * X;
            m03 += Y * Y * Y;
            m21 += X * X * Y;
            m12 += X * Y * Y;
        }
    }
    ScaledCentralMoments c;
    const i128 n = m00;
    c.n = n;
    c.c20 = n * m20 - m10 * m10;
    c.c02 = n * m02 - m01 * m01;
    c.c11 = n * m11 - m10 * m01;
    c.c30 = n * n * m30 - 3 * n * m10 * m20 + 2 * m10 * m10 * m10;
    c.c03 = n * n * m03 - 3 * n * m01 * m02 + 2 * m01 * m01 * m01;
    c.c21 = n * n * m21 - 2 * n * m10 * m11 - n * m01 * m20 + 2 * m10 * m10 * m01;
    c.c12 = n * n * m12 - 2 * n * m01 * m11 - n * m10 * m02 + 2 * m01 * m01 * m10;
    return c;
}

} // namespace

std::array<double, 7> hu_invariants(const Mask& mask) {
    if (mask.foreground_count() == 0) {
        throw Error(ErrorCode::NoShape, "Hu moments of an empty mask");
    }
    const ScaledCentralMoments c = central_moments(mask);
    using ld = long double;
    const ld n = static_cast<ld>(c.n);
    // eta_pq = mu_pq / n^(1 + (p+q)/2)
    const ld n3 = n * n * n;
    const ld n45 = n3 * n * std::sqrt(n);
    const ld e20 = static_cast<ld>(c.c20) / n3;
    const ld e02 = static_cast<ld>(c.c02) / n3;
    const ld e11 = static_cast<ld>(c.c11) / n3;
    const ld e30 = static_cast<ld>(c.c30) / n45;
    const ld e03 = static_cast<ld>(c.c03) / n45;
    const ld e21 = static_cast<ld>(c.c21) / n45;
    const ld e12 = static_cast<ld>(c.c12) / n45;

    const ld a = e30 + e12;
    const ld b = e21 + e03;
    const ld p = e30 - 3 * e12;
    const ld q = 3 * e21 - e03;

    std::array<double, 7> hu{};
    hu[0] = static_cast<double>(e20 + e02);
    hu[1] = static_cast<double>((e20 - e02) * (e20 - e02) + 4 * e11 * e11);
    hu[2] = static_cast<double>(p * p + q * q);
    hu[3] = static_cast<double>(a * a + b * b);
    hu[4] = static_cast<double>(p * a * (a * a - 3 * b * b) + q * b * (3 * a * a - b * b));
    hu[5] = static_cast<double>((e20 - e02) * (a * a - b * b) + 4 * e11 * a * b);
    hu[6] = static_cast<double>(q * a * (a * a - 3 * b * b) - p * b * (3 * a * a - b * b));
    return hu;
}

std::array<double, 7> hu_moments(const Mask& mask) {
    std::array<double, 7> hu = hu_invariants(mask);
    for (double& phi : hu) {
        const double sign = phi < 0.0 ? -1.0 : 1.0;
        phi = sign * std::log10(std::abs(phi) + 1e-30);
    }
    return hu;
}

std::vector<std::array<int, 2>> trace_boundary(const Mask& mask) {
    // Clockwise on screen (y grows downward), starting from west.
    static constexpr int dx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

    std::array<int, 2> start{-1, -1};
    for (int y = 0; y < mask.height() && start[0] < 0; ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y)) {
                start = {x, y};
                break;
            }
        }
    }
    if (start[0] < 0) {
        return {};
    }

    std::vector<std::array<int, 2>> boundary{start};
    std::array<int, 2> current = start;
    int backtrack = 0; // west of the start pixel is background by construction
    const std::size_t limit = 4 * mask.foreground_count() + 8;

    while (boundary.size() <= limit) {
        int found = -1;
        for (int i = 1; i <= 8; ++i) {
            const int d = (backtrack + i) % 8;
            if (mask.at(current[0] + dx[d], current[1] + dy[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) {
            break; // isolated pixel
        }
        const std::array<int, 2> next{current[0] + dx[found], current[1] + dy[found]};
        // The background cell checked just before `next`, expressed relative to `next`.
        const int prev = (found + 7) % 8;
        const int bx = current[0] + dx[prev] - next[0];
        const int by = current[1] + dy[prev] - next[1];
        for (int d = 0; d < 8; ++d) {
            if (dx[d] == bx && dy[d] == by) {
                backtrack = d;
                break;
            }
        }
        // Jacob's stopping criterion: back at the start and about to repeat the first move.
        if (current == start && boundary.size() > 1 && next == boundary[1]) {
            break;
        }
        current = next;
        boundary.push_back(current);
    }
    if (boundary.size() > 1 && boundary.back() == start) {
        boundary.pop_back();
    }
    return boundary;
}

std::vector<std::complex<double>> resample_closed(const std::vector<std::array<int, 2>>& polygon, int count) {
    if (polygon.empty() || count < 1) {
        throw Error(ErrorCode::InvalidArgument, "resampling needs a nonempty polygon and a positive count");
    }
    const std::size_t m = polygon.size();
    std::vector<std::complex<double>> pts;
    pts.reserve(m);
    for (const auto& p : polygon) {
        pts.emplace_back(p[0], p[1]);
    }
    std::vector<double> cumulative(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        cumulative[i + 1] = cumulative[i] + std::abs(pts[(i + 1) % m] - pts[i]);
    }
    const double perimeter = cumulative[m];
    std::vector<std::complex<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    if (perimeter == 0.0) {
        out.assign(static_cast<std::size_t>(count), pts[0]);
        return out;
    }
    std::size_t seg = 0;
    for (int j = 0; j < count; ++j) {
        const double target = perimeter * j / count;
        while (seg + 1 < m && cumulative[seg + 1] <= target) {
            ++seg;
        }
        const double len = cumulative[seg + 1] - cumulative[seg];
        const double t = len > 0.0 ? (target - cumulative[seg]) / len : 0.0;
        out.push_back(pts[seg] + t * (pts[(seg + 1) % m] - pts[seg]));
    }
    return out;
}

std::vector<double> fourier_descriptors(const Mask& mask, int harmonics) {
    if (harmonics < 2 || harmonics >= kBoundarySamples / 2) {
        throw Error(ErrorCode::InvalidArgument, "harmonic count must be in [2, 63]");
    }
    const auto boundary = trace_boundary(mask);
    if (boundary.size() < static_cast<std::size_t>(kBoundaryMinPoints)) {
        throw Error(ErrorCode::BoundaryTooShort, "shape boundary has fewer than 8 points");
    }
    const auto z = resample_closed(boundary, kBoundarySamples);
    const double n = static_cast<double>(z.size());

    std::vector<double> magnitude(static_cast<std::size_t>(harmonics));
    for (int k = 1; k <= harmonics; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < z.size(); ++i) {
            acc += z[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * static_cast<double>(i) / n);
        }
        magnitude[static_cast<std::size_t>(k - 1)] = std::abs(acc);
    }
    const double reference = magnitude[0];
    if (!(reference > 0.0)) {
        throw Error(ErrorCode::UndefinedInput, "first boundary harmonic vanishes");
    }
    for (double& m : magnitude) {
        m /= reference;
    }
    magnitude[0] = 1.0;
    return magnitude;
}

ShapeFeature shape_features(const Image& gray, int harmonics) {
    const Mask mask = segment(gray);
    return {hu_moments(mask), fourier_descriptors(mask, harmonics)};
}

} // namespace cbir
