#include "plotminer/raster.hpp"

#include "plotminer/error.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <numeric>
#include <string>

namespace plotminer::raster {

namespace {

void check_dims(int width, int height)
{
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::UnreadableFile, path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw Error(ErrorCode::UnreadableFile, path.string());
    }
    return bytes;
}

class PgmReader {
public:
    PgmReader(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
        : bytes_(bytes), path_(path)
    {
    }

    GrayImage read()
    {
        const bool ascii = bytes_[1] == '2';
        pos_ = 2;
        const long width = header_int();
        const long height = header_int();
        const long maxval = header_int();
        if (width < 1 || height < 1 || width > (1 << 20) || height > (1 << 20)) {
            fail("bad dimensions");
        }
        if (maxval < 1 || maxval > 65535) {
            fail("bad maxval");
        }
        const std::size_t n = static_cast<std::size_t>(width) * height;
        std::vector<std::uint8_t> data(n);
        auto rescale = [maxval](long v) {
            if (maxval == 255) {
                return static_cast<std::uint8_t>(v);
            }
            const long clamped = std::min(v, maxval);
            return static_cast<std::uint8_t>((clamped * 255 + maxval / 2) / maxval);
        };
        if (ascii) {
            for (std::size_t i = 0; i < n; ++i) {
                data[i] = rescale(header_int());
            }
        } else {
            // exactly one whitespace byte separates maxval from the raster
            if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
                fail("missing raster separator");
            }
            ++pos_;
            const std::size_t bps = maxval > 255 ? 2 : 1;
            if (bytes_.size() - pos_ < n * bps) {
                fail("truncated raster");
            }
            for (std::size_t i = 0; i < n; ++i) {
                long v = bytes_[pos_ + i * bps];
                if (bps == 2) {
                    v = (v << 8) | bytes_[pos_ + i * bps + 1];
                }
                data[i] = rescale(v);
            }
        }
        return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
    }

private:
    [[noreturn]] void fail(const std::string& why) const
    {
        throw Error(ErrorCode::CorruptHeader, path_.string() + ": " + why);
    }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long header_int()
    {
        skip_space_and_comments();
        long v = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 100'000'000) {
                fail("integer overflow");
            }
            ++pos_;
            ++digits;
        }
        if (digits == 0) {
            fail("expected integer");
        }
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

struct PngReadState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct MemoryCursor {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos;
};

void png_memory_read(png_structp png, png_bytep out, png_size_t len)
{
    auto* cur = static_cast<MemoryCursor*>(png_get_io_ptr(png));
    if (cur->bytes->size() - cur->pos < len) {
        png_error(png, "unexpected end of data");
    }
    std::copy_n(cur->bytes->data() + cur->pos, len, out);
    cur->pos += len;
}

void png_silent_warning(png_structp, png_const_charp) {}

// libpng reports errors via longjmp; nothing with a non-trivial destructor
// may be created between setjmp and the last libpng call.
bool decode_png(const std::vector<std::uint8_t>& bytes, int& width, int& height,
                int& channels, std::vector<std::uint8_t>& pixels)
{
    PngReadState st;
    st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_silent_warning);
    if (!st.png) {
        return false;
    }
    st.info = png_create_info_struct(st.png);
    if (!st.info) {
        return false;
    }
    MemoryCursor cursor{&bytes, 0};
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(st.png))) {
        return false;
    }
    png_set_read_fn(st.png, &cursor, png_memory_read);
    png_read_info(st.png, st.info);

    const png_byte color = png_get_color_type(st.png, st.info);
    const png_byte depth = png_get_bit_depth(st.png, st.info);
    if (depth == 16) {
        png_set_scale_16(st.png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(st.png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
        png_set_expand_gray_1_2_4_to_8(st.png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(st.png);
    }
    png_set_tRNS_to_alpha(st.png);
    png_set_strip_alpha(st.png);
    png_read_update_info(st.png, st.info);

    width = static_cast<int>(png_get_image_width(st.png, st.info));
    height = static_cast<int>(png_get_image_height(st.png, st.info));
    channels = png_get_channels(st.png, st.info);
    const std::size_t stride = png_get_rowbytes(st.png, st.info);
    pixels.assign(stride * height, 0);
    rows.resize(height);
    for (int r = 0; r < height; ++r) {
        rows[r] = pixels.data() + stride * r;
    }
    png_read_image(st.png, rows.data());
    png_read_end(st.png, nullptr);
    return true;
}

GrayImage read_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
{
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
    if (!decode_png(bytes, width, height, channels, pixels) || width < 1 || height < 1) {
        throw Error(ErrorCode::CorruptHeader, path.string() + ": PNG decode failed");
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::UnsupportedFormat,
                    path.string() + ": unsupported PNG channel count " + std::to_string(channels));
    }
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height);
    const std::size_t stride = pixels.size() / height;
    for (int r = 0; r < height; ++r) {
        const std::uint8_t* row = pixels.data() + stride * r;
        for (int c = 0; c < width; ++c) {
            data[static_cast<std::size_t>(r) * width + c] =
                channels == 1 ? row[c]
                              : luminance(row[3 * c], row[3 * c + 1], row[3 * c + 2]);
        }
    }
    return GrayImage(width, height, std::move(data));
}

}  // namespace

Box bounding_union(const Box& a, const Box& b)
{
    if (a.empty()) {
        return b;
    }
    if (b.empty()) {
        return a;
    }
    return Box{std::min(a.top, b.top), std::min(a.left, b.left), std::max(a.bottom, b.bottom),
               std::max(a.right, b.right)};
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw Error(ErrorCode::DimensionMismatch, "gray image data length does not match dims");
    }
}

BinaryImage::BinaryImage(int width, int height) : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, 0);
}

BinaryImage::BinaryImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw Error(ErrorCode::DimensionMismatch, "binary image data length does not match dims");
    }
    if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
        throw Error(ErrorCode::InvalidArgument, "binary image values must be 0 or 1");
    }
}

long BinaryImage::count() const
{
    return std::accumulate(data_.begin(), data_.end(), 0L);
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage load_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    static constexpr std::array<std::uint8_t, 8> png_sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= png_sig.size() && std::equal(png_sig.begin(), png_sig.end(), bytes.begin())) {
        return read_png(bytes, path);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
        return PgmReader(bytes, path).read();
    }
    throw Error(ErrorCode::UnsupportedFormat, path.string());
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path, PgmEncoding encoding)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << (encoding == PgmEncoding::Binary ? "P5" : "P2") << "\n"
        << img.width() << " " << img.height() << "\n255\n";
    if (encoding == PgmEncoding::Binary) {
        out.write(reinterpret_cast<const char*>(img.data().data()),
                  static_cast<std::streamsize>(img.data().size()));
    } else {
        for (int r = 0; r < img.height(); ++r) {
            for (int c = 0; c < img.width(); ++c) {
                out << static_cast<int>(img.at(r, c)) << (c + 1 == img.width() ? '\n' : ' ');
            }
        }
    }
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
}

std::optional<int> otsu_threshold(const GrayImage& img)
{
    std::array<long, 256> hist{};
    for (auto v : img.data()) {
        ++hist[v];
    }
    const double total = static_cast<double>(img.data().size());
    double sum_all = 0;
    for (int v = 0; v < 256; ++v) {
        sum_all += static_cast<double>(v) * hist[v];
    }
    // class 0 holds values < t
    double n0 = 0;
    double s0 = 0;
    double best = 0;
    std::optional<int> best_t;
    for (int t = 0; t < 256; ++t) {
        if (t > 0) {
            n0 += hist[t - 1];
            s0 += static_cast<double>(t - 1) * hist[t - 1];
        }
        const double n1 = total - n0;
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const double diff = s0 / n0 - (sum_all - s0) / n1;
        const double between = (n0 / total) * (n1 / total) * diff * diff;
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

BinaryImage binarize(const GrayImage& img, std::optional<int> threshold, bool invert)
{
    if (threshold && (*threshold < 0 || *threshold > 255)) {
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0,255]");
    }
    BinaryImage out(img.width(), img.height());
    std::optional<int> t = threshold;
    if (!t) {
        t = otsu_threshold(img);
        if (!t) {
            return out;
        }
    }
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const bool dark = img.at(r, c) < *t;
            out.set(r, c, invert ? !dark : dark);
        }
    }
    return out;
}

BinaryImage crop(const BinaryImage& img, const Box& box)
{
    if (box.empty() || box.top < 0 || box.left < 0 || box.bottom >= img.height() ||
        box.right >= img.width()) {
        throw Error(ErrorCode::OutOfBounds, "crop box outside image");
    }
    BinaryImage out(box.width(), box.height());
    for (int r = box.top; r <= box.bottom; ++r) {
        for (int c = box.left; c <= box.right; ++c) {
            out.set(r - box.top, c - box.left, img.at(r, c));
        }
    }
    return out;
}

BinaryImage transpose(const BinaryImage& img)
{
    BinaryImage out(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            out.set(c, r, img.at(r, c));
        }
    }
    return out;
}

GrayImage to_gray(const BinaryImage& img)
{
    GrayImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            out.set(r, c, img.at(r, c) ? 0 : 255);
        }
    }
    return out;
}

}  // namespace plotminer::raster
