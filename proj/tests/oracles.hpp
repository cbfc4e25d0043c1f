#pragma once

// Independent reference computations used by the tests. These are written
// directly from the definitions and share no code with the library.

#include "plotminer/anneal.hpp"
#include "plotminer/raster.hpp"
#include "plotminer/rng.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

using plotminer::Rng;
using plotminer::raster::BinaryImage;
using plotminer::raster::GrayImage;

// Otsu by exhaustive scan with exact integer arithmetic. The between-class
// variance for a split is (S0*n1 - S1*n0)^2 / (N^2 n0 n1); candidates are
// compared by cross multiplication, first maximum wins.
inline std::optional<int> otsu(const GrayImage& img)
{
    using u128 = unsigned __int128;
    std::optional<int> best_t;
    u128 best_num = 0;
    u128 best_den = 1;
    for (int t = 0; t < 256; ++t) {
        std::int64_t n0 = 0;
        std::int64_t n1 = 0;
        std::int64_t s0 = 0;
        std::int64_t s1 = 0;
        for (auto v : img.data()) {
            if (v < t) {
                ++n0;
                s0 += v;
            } else {
                ++n1;
                s1 += v;
            }
        }
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const std::int64_t diff = s0 * n1 - s1 * n0;
        const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
        const u128 num = mag * mag;
        const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
        if (num == 0) {
            continue;
        }
        if (!best_t || num * best_den > best_num * den) {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    return best_t;
}

inline long hamming(const BinaryImage& a, const BinaryImage& b)
{
    long n = 0;
    for (int r = 0; r < a.height(); ++r) {
        for (int c = 0; c < a.width(); ++c) {
            n += a.at(r, c) != b.at(r, c) ? 1 : 0;
        }
    }
    return n;
}

// Pixel (r, c) is ink iff some weight-1 placement's mask covers it.
inline BinaryImage render(const std::vector<plotminer::anneal::Placement>& placements,
                          const std::vector<plotminer::plotseg::ShapeTemplate>& templates, int h,
                          int w)
{
    BinaryImage out(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (const auto& p : placements) {
                if (p.weight == 0) {
                    continue;
                }
                for (const auto& t : templates) {
                    if (t.shape_id != p.shape_id) {
                        continue;
                    }
                    const int mr = r - p.row;
                    const int mc = c - p.col;
                    if (mr >= 0 && mc >= 0 && mr < t.mask.height() && mc < t.mask.width() &&
                        t.mask.at(mr, mc)) {
                        out.set(r, c, true);
                    }
                }
            }
        }
    }
    return out;
}

inline BinaryImage random_binary(Rng& rng, int w, int h, double density)
{
    BinaryImage img(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            img.set(r, c, rng.canonical() < density);
        }
    }
    return img;
}

inline GrayImage random_gray(Rng& rng, int w, int h)
{
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
    for (auto& v : data) {
        v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    }
    return GrayImage(w, h, std::move(data));
}

// Pixels whose rho = x cos(theta) + y sin(theta) rounds to the given bin.
inline int hough_cell_votes(const BinaryImage& img, double theta_deg, double rho, double rho_step = 1)
{
    const double t = theta_deg * (M_PI / 180.0);
    const long want = std::lround(rho / rho_step);
    int votes = 0;
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            if (img.at(r, c) && std::lround((c * std::cos(t) + r * std::sin(t)) / rho_step) == want) {
                ++votes;
            }
        }
    }
    return votes;
}

// One-level Haar detail coefficients of a 2x2 cell [[a, b], [c, d]].
struct Haar {
    double lh;
    double hl;
    double hh;
};
inline Haar haar(double a, double b, double c, double d)
{
    return {(a + b - c - d) / 2, (a - b + c - d) / 2, (a - b - c + d) / 2};
}

// 8-connected component count by repeated relabelling to a fixed point.
inline int count_components_8(const BinaryImage& img)
{
    const int h = img.height();
    const int w = img.width();
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    for (int i = 0; i < h * w; ++i) {
        if (img.at(i / w, i % w)) {
            label[i] = i;
        }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                int& l = label[r * w + c];
                if (l < 0) {
                    continue;
                }
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = r + dr;
                        const int nc = c + dc;
                        if (nr >= 0 && nc >= 0 && nr < h && nc < w && label[nr * w + nc] >= 0 &&
                            label[nr * w + nc] < l) {
                            l = label[nr * w + nc];
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    int n = 0;
    for (int i = 0; i < h * w; ++i) {
        n += label[i] == i ? 1 : 0;
    }
    return n;
}

// color_type: 0 gray, 2 RGB, 4 gray+alpha, 6 RGBA; 8-bit samples.
void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               const std::vector<std::uint8_t>& samples);

std::filesystem::path temp_dir(const std::string& name);

}  // namespace oracle
