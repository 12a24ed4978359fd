#include "cbir/error.hpp"
#include "cbir/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>

namespace cbir {

namespace {

enum class Format { Pnm, Png, Bmp };

[[noreturn]] void corrupt(const std::string& msg) {
    throw Error(ErrorCode::CorruptData, msg);
}

std::optional<Format> sniff(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (b.size() >= 8 && std::equal(std::begin(png_sig), std::end(png_sig), b.begin())) {
        return Format::Png;
    }
    if (b.size() >= 2 && b[0] == 'P' && (b[1] == '2' || b[1] == '3' || b[1] == '5' || b[1] == '6')) {
        return Format::Pnm;
    }
    if (b.size() >= 2 && b[0] == 'B' && b[1] == 'M') {
        return Format::Bmp;
    }
    return std::nullopt;
}

std::optional<Format> from_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
        return Format::Pnm;
    }
    if (ext == ".png") {
        return Format::Png;
    }
    if (ext == ".bmp") {
        return Format::Bmp;
    }
    return std::nullopt;
}

std::uint8_t rescale(unsigned value, unsigned maxval) {
    if (maxval == 255) {
        return static_cast<std::uint8_t>(value);
    }
    return static_cast<std::uint8_t>(static_cast<unsigned long>(value) * 255UL / maxval);
}

// --- PNM --------------------------------------------------------------------

class PnmReader {
public:
    explicit PnmReader(std::span<const std::uint8_t> bytes) : b_(bytes) {}

    Image read() {
        if (b_.size() < 2 || b_[0] != 'P') {
            corrupt("missing PNM magic number");
        }
        const char kind = static_cast<char>(b_[1]);
        if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
            throw Error(ErrorCode::UnsupportedFormat, std::string("unsupported PNM variant P") + kind);
        }
        pos_ = 2;
        const unsigned width = header_number();
        const unsigned height = header_number();
        const unsigned maxval = header_number();
        if (width == 0 || height == 0 || width > 1U << 16 || height > 1U << 16) {
            corrupt("PNM dimensions out of range");
        }
        if (maxval == 0 || maxval > 65535) {
            corrupt("PNM maxval out of range");
        }
        const int channels = (kind == '3' || kind == '6') ? 3 : 1;
        const std::size_t count = static_cast<std::size_t>(width) * height * channels;
        std::vector<std::uint8_t> data(count);

        if (kind == '2' || kind == '3') {
            for (std::size_t i = 0; i < count; ++i) {
                const unsigned v = header_number();
                if (v > maxval) {
                    corrupt("PNM sample exceeds maxval");
                }
                data[i] = rescale(v, maxval);
            }
        } else {
            // Exactly one whitespace byte separates the header from the raster.
            if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
                corrupt("PNM header not terminated by whitespace");
            }
            ++pos_;
            const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
            if (b_.size() - pos_ < count * bytes_per_sample) {
                corrupt("PNM raster truncated");
            }
            for (std::size_t i = 0; i < count; ++i) {
                unsigned v = b_[pos_ + i * bytes_per_sample];
                if (bytes_per_sample == 2) {
                    v = (v << 8) | b_[pos_ + i * 2 + 1];
                }
                if (v > maxval) {
                    corrupt("PNM sample exceeds maxval");
                }
                data[i] = rescale(v, maxval);
            }
        }
        return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(data));
    }

private:
    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned header_number() {
        skip_space_and_comments();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) {
            corrupt("expected a number in PNM data");
        }
        unsigned long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 0xFFFFFFFFUL) {
                corrupt("number too large in PNM data");
            }
            ++pos_;
        }
        return static_cast<unsigned>(v);
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

// --- BMP --------------------------------------------------------------------

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

Image read_bmp(std::span<const std::uint8_t> b) {
    if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') {
        corrupt("missing or truncated BMP header");
    }
    const std::uint32_t data_offset = le32(b, 10);
    const std::uint32_t header_size = le32(b, 14);
    if (header_size < 40) {
        throw Error(ErrorCode::UnsupportedFormat, "only BITMAPINFOHEADER-style BMP files are supported");
    }
    const auto width = static_cast<std::int32_t>(le32(b, 18));
    const auto raw_height = static_cast<std::int32_t>(le32(b, 22));
    const std::uint16_t bpp = le16(b, 28);
    const std::uint32_t compression = le32(b, 30);
    if (compression != 0 && !(compression == 3 && bpp == 32)) {
        throw Error(ErrorCode::UnsupportedFormat, "compressed BMP files are not supported");
    }
    if (bpp != 24 && bpp != 32) {
        throw Error(ErrorCode::UnsupportedFormat, "only 24-bit and 32-bit BMP files are supported");
    }
    const bool bottom_up = raw_height > 0;
    const std::int64_t height = bottom_up ? raw_height : -static_cast<std::int64_t>(raw_height);
    if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16)) {
        corrupt("BMP dimensions out of range");
    }
    const std::size_t bytes_pp = bpp / 8;
    const std::size_t stride = (static_cast<std::size_t>(width) * bytes_pp + 3) & ~static_cast<std::size_t>(3);
    if (data_offset > b.size() || b.size() - data_offset < stride * static_cast<std::size_t>(height)) {
        corrupt("BMP pixel data truncated");
    }
    Image img(width, static_cast<int>(height), 3);
    for (int y = 0; y < height; ++y) {
        const std::size_t row = bottom_up ? static_cast<std::size_t>(height - 1 - y) : static_cast<std::size_t>(y);
        const std::size_t base = data_offset + row * stride;
        for (int x = 0; x < width; ++x) {
            const std::size_t p = base + static_cast<std::size_t>(x) * bytes_pp;
            img.at(x, y, 0) = b[p + 2];
            img.at(x, y, 1) = b[p + 1];
            img.at(x, y, 2) = b[p];
        }
    }
    return img;
}

// --- PNG --------------------------------------------------------------------

struct PngSource {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

struct PngDecoded {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> raster;
    char message[256] = {};
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
    auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
    if (src->bytes.size() - src->pos < length) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, src->bytes.data() + src->pos, length);
    src->pos += length;
}

void png_record_error(png_structp png, png_const_charp msg) {
    auto* decoded = static_cast<PngDecoded*>(png_get_error_ptr(png));
    std::strncpy(decoded->message, msg, sizeof(decoded->message) - 1);
    png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

// libpng reports errors through longjmp; nothing with a destructor lives in
// this frame between setjmp and the decode calls, the results go to *out.
bool png_decode(PngSource* src, PngDecoded* out) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, out, png_record_error, png_ignore_warning);
    if (png == nullptr) {
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, src, png_read_from_span);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    out->channels = png_get_channels(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    if (out->width == 0 || out->height == 0 || out->width > (1U << 16) || out->height > (1U << 16)) {
        png_error(png, "PNG dimensions out of range");
    }
    const png_size_t rowbytes = png_get_rowbytes(png, info);
    out->raster.resize(rowbytes * out->height);
    std::vector<png_bytep> rows(out->height);
    for (std::uint32_t y = 0; y < out->height; ++y) {
        rows[y] = out->raster.data() + y * rowbytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

Image read_png(std::span<const std::uint8_t> bytes) {
    PngSource src{bytes, 0};
    auto decoded = std::make_unique<PngDecoded>();
    if (!png_decode(&src, decoded.get())) {
        corrupt(std::string("PNG decode failed: ") + decoded->message);
    }
    if (decoded->channels != 1 && decoded->channels != 3) {
        throw Error(ErrorCode::UnsupportedFormat, "unexpected PNG channel layout");
    }
    const std::size_t samples = static_cast<std::size_t>(decoded->width) * decoded->height * decoded->channels;
    std::vector<std::uint8_t> data(samples);
    if (decoded->bit_depth == 16) {
        for (std::size_t i = 0; i < samples; ++i) {
            const unsigned v = (static_cast<unsigned>(decoded->raster[2 * i]) << 8) | decoded->raster[2 * i + 1];
            data[i] = rescale(v, 65535);
        }
    } else {
        std::copy_n(decoded->raster.begin(), samples, data.begin());
    }
    return Image(static_cast<int>(decoded->width), static_cast<int>(decoded->height), decoded->channels,
                 std::move(data));
}

Image decode_as(Format format, std::span<const std::uint8_t> bytes) {
    switch (format) {
    case Format::Pnm: return PnmReader(bytes).read();
    case Format::Png: return read_png(bytes);
    case Format::Bmp: return read_bmp(bytes);
    }
    throw Error(ErrorCode::UnsupportedFormat, "unknown format");
}

} // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
    const auto format = sniff(bytes);
    if (!format) {
        throw Error(ErrorCode::UnsupportedFormat, "unrecognized image signature");
    }
    return decode_as(*format, bytes);
}

Image load_image(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorCode::FileNotFound, "no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open: " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    auto format = from_extension(path);
    if (!format) {
        format = sniff(bytes);
    }
    if (!format) {
        throw Error(ErrorCode::UnsupportedFormat, "unsupported image format: " + path.string());
    }
    try {
        return decode_as(*format, bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    png_image desc;
    std::memset(&desc, 0, sizeof(desc));
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(img.width());
    desc.height = static_cast<png_uint_32>(img.height());
    desc.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&desc, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
        throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + desc.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.data().data(), 0, nullptr)) {
        throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + desc.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
    const std::string header =
        (img.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(img.width()) + " " + std::to_string(img.height()) +
        "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    std::vector<std::uint8_t> bytes;
    if (ext == ".png") {
        bytes = encode_png(img);
    } else if ((ext == ".pgm" && img.channels() == 1) || (ext == ".ppm" && img.channels() == 3) || ext == ".pnm") {
        bytes = encode_pnm(img);
    } else {
        throw Error(ErrorCode::UnsupportedFormat, "cannot write " + std::to_string(img.channels()) +
                                                      "-channel image as " + path.string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
}

} // namespace cbir
