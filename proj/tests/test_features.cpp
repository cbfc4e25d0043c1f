#include "doctest.h"
#include "oracles.hpp"

#include "plotminer/error.hpp"
#include "plotminer/features.hpp"

#include <cmath>
#include <numeric>

using namespace plotminer;
using namespace plotminer::features;
using plotminer::raster::BinaryImage;
using plotminer::raster::GrayImage;

namespace {

double subband_sum(const std::vector<double>& h, int band)
{
    return std::accumulate(h.begin() + band * kWaveletBins, h.begin() + (band + 1) * kWaveletBins,
                           0.0);
}

// Histogram of the padded image built cell by cell from the Haar oracle.
std::vector<double> naive_wavelet(const GrayImage& img, int block)
{
    const int ph = (img.height() + block - 1) / block * block;
    const int pw = (img.width() + block - 1) / block * block;
    auto px = [&](int r, int c) {
        return static_cast<double>(img.at(std::min(r, img.height() - 1), std::min(c, img.width() - 1)));
    };
    auto bin = [](double v) {
        int b = static_cast<int>(std::floor((v + 255.0) * 16.0 / 510.0));
        return std::clamp(b, 0, 15);
    };
    std::vector<double> h(48, 0.0);
    double cells = 0;
    for (int r = 0; r < ph; r += 2) {
        for (int c = 0; c < pw; c += 2) {
            const auto d = oracle::haar(px(r, c), px(r, c + 1), px(r + 1, c), px(r + 1, c + 1));
            h[bin(d.lh)] += 1;
            h[16 + bin(d.hl)] += 1;
            h[32 + bin(d.hh)] += 1;
            cells += 1;
        }
    }
    for (auto& v : h) {
        v /= cells;
    }
    return h;
}

BinaryImage line_pixels(int w, int h, double theta_deg, double rho)
{
    BinaryImage img(w, h);
    const double t = theta_deg * (M_PI / 180.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (std::lround(c * std::cos(t) + r * std::sin(t)) == std::lround(rho)) {
                img.set(r, c, true);
            }
        }
    }
    return img;
}

}  // namespace

TEST_CASE("constant image puts all detail mass at zero")
{
    for (int level : {0, 77, 255}) {
        const auto h = block_wavelet_features(GrayImage(16, 12, static_cast<std::uint8_t>(level)), 4);
        REQUIRE(h.size() == 48u);
        const int zero_bin = wavelet_bin(0.0);
        for (int band = 0; band < 3; ++band) {
            CHECK(h[band * 16 + zero_bin] == doctest::Approx(1.0));
            CHECK(subband_sum(h, band) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("haar example [[255,0],[255,0]]")
{
    const auto d = oracle::haar(255, 0, 255, 0);
    CHECK(d.hl == 255);
    CHECK(d.lh == 0);
    CHECK(d.hh == 0);
    const auto h = block_wavelet_features(GrayImage(2, 2, {255, 0, 255, 0}), 2);
    CHECK(h[wavelet_bin(0)] == 1.0);
    CHECK(h[16 + wavelet_bin(255)] == 1.0);
    CHECK(h[32 + wavelet_bin(0)] == 1.0);
    CHECK(wavelet_bin(255) == 15);
    CHECK(wavelet_bin(-255) == 0);
}

TEST_CASE("wavelet histograms match the naive cell scan and are normalised")
{
    Rng rng(21);
    for (int i = 0; i < 60; ++i) {
        const int block = 2 * rng.uniform_int(1, 4);
        const auto img = oracle::random_gray(rng, rng.uniform_int(block, 30), rng.uniform_int(block, 30));
        const auto got = block_wavelet_features(img, block);
        const auto want = naive_wavelet(img, block);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
        }
        for (int band = 0; band < 3; ++band) {
            CHECK(std::abs(subband_sum(got, band) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("wavelet block size errors")
{
    const GrayImage img(10, 10);
    auto code = [&](int block) {
        try {
            block_wavelet_features(img, block);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code(3) == ErrorCode::InvalidArgument);
    CHECK(code(0) == ErrorCode::InvalidArgument);
    CHECK(code(12) == ErrorCode::BlockTooLarge);
}

TEST_CASE("hough finds a full horizontal row")
{
    BinaryImage img(50, 50);
    for (int c = 0; c < 50; ++c) {
        img.set(40, c, true);
    }
    auto lines = hough_lines(img);
    REQUIRE_FALSE(lines.empty());
    CHECK(lines[0].orientation_deg == 0.0);
    CHECK(lines[0].votes == 50);
    CHECK(lines[0].row_at(25) == doctest::Approx(40));

    for (int r = 0; r < 50; ++r) {
        img.set(r, 10, true);
    }
    lines = hough_lines(img);
    REQUIRE(lines.size() >= 2);
    CHECK(std::abs(mutual_angle(lines[0].orientation_deg, lines[1].orientation_deg) - 90.0) <= 1.0);
}

TEST_CASE("hough main diagonal is at 135 degrees")
{
    BinaryImage img(50, 50);
    for (int k = 0; k < 50; ++k) {
        img.set(k, k, true);
    }
    const auto lines = hough_lines(img);
    REQUIRE_FALSE(lines.empty());
    CHECK(mutual_angle(lines[0].orientation_deg, 135.0) <= 1.0);
    CHECK(lines[0].votes == 50);
    CHECK(oracle::hough_cell_votes(img, lines[0].theta_deg, lines[0].rho) == 50);
}

TEST_CASE("empty foreground has no lines")
{
    CHECK(hough_lines(BinaryImage(20, 20)).empty());
}

TEST_CASE("hough peak cells hold every pixel of a digital line")
{
    Rng rng(5);
    int tested = 0;
    while (tested < 80) {
        const double theta = rng.uniform_int(0, 179);
        const double rho = rng.uniform_int(-40, 90);
        const auto img = line_pixels(64, 64, theta, rho);
        const long n = img.count();
        if (n < 30) {
            continue;
        }
        ++tested;
        const auto lines = hough_lines(img);
        REQUIRE_FALSE(lines.empty());
        CHECK(lines[0].votes == n);
        CHECK(oracle::hough_cell_votes(img, lines[0].theta_deg, lines[0].rho) == lines[0].votes);
        for (const auto& l : lines) {
            CHECK(oracle::hough_cell_votes(img, l.theta_deg, l.rho) == l.votes);
        }
    }
}

TEST_CASE("transposing maps orientation o to 90 - o with equal votes")
{
    BinaryImage row(40, 60);
    for (int c = 0; c < 40; ++c) {
        row.set(33, c, true);
    }
    const auto a = hough_lines(row);
    const auto b = hough_lines(raster::transpose(row));
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    CHECK(a[0].orientation_deg == 0.0);
    CHECK(b[0].orientation_deg == 90.0);
    CHECK(a[0].votes == b[0].votes);

    Rng rng(9);
    int tested = 0;
    while (tested < 40) {
        const double theta = rng.uniform_int(0, 179);
        const auto img = line_pixels(64, 64, theta, rng.uniform_int(0, 60));
        if (img.count() < 30) {
            continue;
        }
        ++tested;
        const auto p = hough_lines(img);
        const auto q = hough_lines(raster::transpose(img));
        REQUIRE(!p.empty());
        REQUIRE(!q.empty());
        CHECK(p[0].votes == q[0].votes);
        const double mapped = std::fmod(90.0 - p[0].orientation_deg + 180.0, 180.0);
        CHECK(mutual_angle(q[0].orientation_deg, mapped) <= 1.0);
    }
}

TEST_CASE("orientation convention")
{
    CHECK(orientation_from_theta(90) == 0.0);
    CHECK(orientation_from_theta(0) == 90.0);
    CHECK(orientation_from_theta(45) == 45.0);
    CHECK(orientation_from_theta(135) == 135.0);
    CHECK(mutual_angle(10, 170) == doctest::Approx(20));
    CHECK(mutual_angle(0, 90) == doctest::Approx(90));
}

TEST_CASE("axes features")
{
    const auto empty = axes_features({}, 141.42);
    CHECK(empty == std::vector<double>{0, 0, 0});

    const double diag = std::hypot(100.0, 100.0);
    LineSegment h{50, 90, 100, 0};
    LineSegment v{10, 0, 100, 90};
    const auto two = axes_features({h, v}, diag);
    CHECK(two[0] == doctest::Approx(100 / 141.42).epsilon(1e-4));
    CHECK(two[1] == doctest::Approx(100 / 141.42).epsilon(1e-4));
    CHECK(two[2] == doctest::Approx(1.0));

    LineSegment one{0, 90, 80, 0};
    const auto single = axes_features({one}, 141.42);
    CHECK(single[0] == doctest::Approx(0.5657).epsilon(1e-4));
    CHECK(single[1] == 0.0);
    CHECK(single[2] == 0.0);

    CHECK_THROWS_AS(axes_features({}, 0), Error);
}

TEST_CASE("caption features")
{
    const auto lex = default_lexicon();
    REQUIRE(lex == std::vector<std::string>{"distribution", "slope", "axes", "plot", "range"});
    CHECK(caption_features("Plot of the energy distribution", lex) ==
          std::vector<bool>{true, false, false, true, false});
    CHECK(caption_features("", lex) == std::vector<bool>(5, false));
    const auto axes = caption_features("axes. Axes, AXES", lex);
    CHECK(std::count(axes.begin(), axes.end(), true) == 1);
    CHECK(axes[2]);
    CHECK(caption_features("two plots", lex)[3]);
}

TEST_CASE("caption features ignore case and duplicated tokens")
{
    const auto lex = default_lexicon();
    Rng rng(13);
    const std::vector<std::string> words = {"plot", "Slope", "the", "RANGE", "of", "axes", "data",
                                            "distribution", "fit", "plots"};
    for (int i = 0; i < 100; ++i) {
        std::string caption;
        std::string shouted;
        std::string doubled;
        const int n = rng.uniform_int(0, 8);
        for (int k = 0; k < n; ++k) {
            const auto& w = words[rng.index(words.size())];
            caption += w + " ";
            std::string up = w;
            for (auto& ch : up) {
                ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            }
            shouted += up + " ";
            doubled += w + " " + w + ", ";
        }
        const auto base = caption_features(caption, lex);
        CHECK(caption_features(shouted, lex) == base);
        CHECK(caption_features(doubled, lex) == base);
    }
}

TEST_CASE("assemble feature vector layout")
{
    const std::vector<double> is(48, 0.5);
    const std::vector<double> ca{0.1, 0.2, 0.3};
    const std::vector<bool> ct{true, false, true, false, true};
    const auto only_is = assemble_feature_vector(is, std::nullopt, std::nullopt, 5);
    CHECK(only_is.dimension() == 56);
    CHECK(only_is.ca_features == std::vector<double>(3, 0.0));
    CHECK(only_is.ct_features == std::vector<bool>(5, false));
    CHECK(only_is.mask.to_string() == "IS");

    const auto all = assemble_feature_vector(is, ca, ct, 5);
    CHECK(all.dimension() == 56);
    CHECK(all.mask == FamilyMask::all());
    CHECK(assemble_feature_vector(is, ca, ct, 5).dense() == all.dense());

    CHECK_THROWS_AS(assemble_feature_vector(std::nullopt, std::nullopt, std::nullopt, 5), Error);
    CHECK_THROWS_AS(assemble_feature_vector(std::vector<double>(3), std::nullopt, std::nullopt, 5),
                    Error);
}

TEST_CASE("masked assembly equals the full vector with other families zeroed")
{
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> is(48);
        for (auto& v : is) {
            v = rng.canonical();
        }
        std::vector<double> ca{rng.canonical(), rng.canonical(), rng.canonical()};
        std::vector<bool> ct(5);
        for (std::size_t k = 0; k < ct.size(); ++k) {
            ct[k] = rng.canonical() < 0.5;
        }
        const auto full = assemble_feature_vector(is, ca, ct, 5).dense();
        for (unsigned bits = 1; bits < 8; ++bits) {
            const FamilyMask m{bits};
            const auto masked =
                assemble_feature_vector(m.has(Family::IS) ? std::optional(is) : std::nullopt,
                                        m.has(Family::CA) ? std::optional(ca) : std::nullopt,
                                        m.has(Family::CT) ? std::optional(ct) : std::nullopt, 5)
                    .dense();
            auto expect = full;
            for (std::size_t k = 0; k < expect.size(); ++k) {
                const bool keep = k < 48 ? m.has(Family::IS) : k < 51 ? m.has(Family::CA)
                                                                      : m.has(Family::CT);
                if (!keep) {
                    expect[k] = 0.0;
                }
            }
            CHECK(masked == expect);
            CHECK(restrict_to(assemble_feature_vector(is, ca, ct, 5), m).dense() == expect);
        }
    }
}

TEST_CASE("family mask text")
{
    CHECK(FamilyMask::parse("all") == FamilyMask::all());
    CHECK(FamilyMask::parse("IS+CT").to_string() == "IS+CT");
    CHECK(FamilyMask::all().to_string() == "IS+CA+CT");
}
