#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace plotminer::raster {

// Inclusive pixel rectangle. An empty box has bottom < top or right < left.
struct Box {
    int top = 0;
    int left = 0;
    int bottom = -1;
    int right = -1;

    int height() const { return bottom >= top ? bottom - top + 1 : 0; }
    int width() const { return right >= left ? right - left + 1 : 0; }
    long area() const { return static_cast<long>(height()) * width(); }
    bool empty() const { return area() == 0; }
    bool contains(double row, double col) const
    {
        return row >= top && row <= bottom && col >= left && col <= right;
    }
    bool intersects(const Box& o) const
    {
        return !empty() && !o.empty() && top <= o.bottom && o.top <= bottom && left <= o.right &&
               o.left <= right;
    }
    bool operator==(const Box&) const = default;
};

Box bounding_union(const Box& a, const Box& b);

// Row-major image of values in [0,255].
class GrayImage {
public:
    GrayImage(int width, int height, std::uint8_t fill = 255);
    GrayImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint8_t at(int row, int col) const { return data_[index(row, col)]; }
    void set(int row, int col, std::uint8_t v) { data_[index(row, col)] = v; }
    std::span<const std::uint8_t> data() const { return data_; }

    bool operator==(const GrayImage&) const = default;

private:
    std::size_t index(int row, int col) const
    {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

// Row-major {0,1} raster; 1 marks ink.
class BinaryImage {
public:
    BinaryImage(int width, int height);
    BinaryImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool at(int row, int col) const { return data_[index(row, col)] != 0; }
    void set(int row, int col, bool v) { data_[index(row, col)] = v ? 1 : 0; }
    bool in_bounds(int row, int col) const
    {
        return row >= 0 && row < height_ && col >= 0 && col < width_;
    }
    std::span<const std::uint8_t> data() const { return data_; }
    long count() const;

    bool operator==(const BinaryImage&) const = default;

private:
    std::size_t index(int row, int col) const
    {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

enum class PgmEncoding { Ascii, Binary };

// Reads PGM (P2/P5, 8- or 16-bit) and PNG (gray, gray+alpha, RGB, RGBA,
// palette). Colour is folded to luminance round(0.299R + 0.587G + 0.114B).
GrayImage load_image(const std::filesystem::path& path);

void write_pgm(const GrayImage& img, const std::filesystem::path& path,
               PgmEncoding encoding = PgmEncoding::Binary);

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Threshold maximising between-class variance for the split {v < T} / {v >= T}.
// Returns nullopt when no threshold separates two non-empty classes with
// positive variance (uniform image).
std::optional<int> otsu_threshold(const GrayImage& img);

// Ink is dark: output is 1 iff luminance < threshold. Without an explicit
// threshold Otsu is used; a uniform image yields an all-background result.
BinaryImage binarize(const GrayImage& img, std::optional<int> threshold = std::nullopt,
                     bool invert = false);

BinaryImage crop(const BinaryImage& img, const Box& box);
BinaryImage transpose(const BinaryImage& img);

// Renders ink as 0 and background as 255.
GrayImage to_gray(const BinaryImage& img);

}  // namespace plotminer::raster
