#pragma once

#include "plotminer/raster.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plotminer::features {

// A Hough accumulator peak. rho/theta use image coordinates (x = column,
// y = row, origin top-left): rho = x cos(theta) + y sin(theta).
// orientation_deg is the visual direction of the line with y pointing up,
// so horizontal = 0, vertical = 90, and the top-left to bottom-right
// diagonal = 135.
struct LineSegment {
    double rho = 0;
    double theta_deg = 0;
    int votes = 0;
    double orientation_deg = 0;

    // Position of the line at a given column / row. Undefined (returns NaN)
    // when the line is parallel to the queried axis.
    double row_at(double col) const;
    double col_at(double row) const;
    // Unsigned perpendicular distance of pixel (row, col) from the line.
    double distance(double row, double col) const;
};

double orientation_from_theta(double theta_deg);

// Smallest angle between two undirected orientations, in [0, 90].
double mutual_angle(double orientation_a, double orientation_b);

struct HoughParams {
    double theta_step = 1.0;
    double rho_step = 1.0;
    int top_k = 8;
    int min_votes = 30;
};

inline constexpr int kWaveletBins = 16;
inline constexpr int kIsDim = 3 * kWaveletBins;
inline constexpr int kCaDim = 3;

// One-level Haar detail histograms (LH | HL | HH, 16 bins each over
// [-255, 255]) pooled over every block of the replicate-padded image.
std::vector<double> block_wavelet_features(const raster::GrayImage& img, int block_size = 8);

// Index of the histogram bin holding a detail coefficient.
int wavelet_bin(double coefficient);

std::vector<LineSegment> hough_lines(const raster::BinaryImage& img,
                                     const HoughParams& params = {});

std::vector<double> axes_features(const std::vector<LineSegment>& lines, double img_diag);

std::vector<std::string> default_lexicon();
std::vector<std::string> load_lexicon(const std::filesystem::path& path);

std::vector<std::string> tokenize_caption(std::string_view caption);
std::vector<bool> caption_features(std::string_view caption,
                                   const std::vector<std::string>& lexicon);

enum class Family : unsigned { IS = 1u, CA = 2u, CT = 4u };

struct FamilyMask {
    unsigned bits = 0;

    static FamilyMask all() { return {7u}; }
    bool has(Family f) const { return (bits & static_cast<unsigned>(f)) != 0; }
    FamilyMask with(Family f) const { return {bits | static_cast<unsigned>(f)}; }
    bool empty() const { return bits == 0; }
    std::string to_string() const;  // e.g. "IS+CA"
    static FamilyMask parse(std::string_view text);
    bool operator==(const FamilyMask&) const = default;
};

// Feature families in fixed layout [IS | CA | CT]; absent families are
// zero-filled so every vector built with the same lexicon has equal length.
struct FeatureVector {
    std::vector<double> is_features;
    std::vector<double> ca_features;
    std::vector<bool> ct_features;
    FamilyMask mask;

    std::size_t dimension() const
    {
        return is_features.size() + ca_features.size() + ct_features.size();
    }
    std::vector<double> dense() const;
};

FeatureVector assemble_feature_vector(const std::optional<std::vector<double>>& is,
                                      const std::optional<std::vector<double>>& ca,
                                      const std::optional<std::vector<bool>>& ct,
                                      std::size_t lexicon_size);

// Zeroes every family not in `keep` (the ablation used for per-family runs).
FeatureVector restrict_to(const FeatureVector& fv, FamilyMask keep);

struct FeatureConfig {
    int block_size = 8;
    HoughParams hough;
    std::vector<std::string> lexicon = default_lexicon();
};

// Computes IS and CA from the image, CT when a caption is supplied.
FeatureVector extract_features(const raster::GrayImage& img,
                               const std::optional<std::string>& caption,
                               const FeatureConfig& config = {}, bool invert = false);

}  // namespace plotminer::features
