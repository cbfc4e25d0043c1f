#pragma once

#include "plotminer/anneal.hpp"
#include "plotminer/features.hpp"
#include "plotminer/plotseg.hpp"
#include "plotminer/raster.hpp"
#include "plotminer/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace plotminer::synth {

using anneal::Placement;
using plotseg::ShapeTemplate;

struct OverlapSpec {
    int height = 90;
    int width = 90;
    std::map<std::string, int> shape_counts;
    int min_overlap_pairs = 1;
    std::uint64_t seed = 42;
};

struct OverlapImage {
    raster::BinaryImage image{1, 1};
    std::vector<Placement> truth;
};

// The diamond/triangle pair used for overlap experiments (ids diamond_11,
// triangle_11, both 61 px).
std::vector<ShapeTemplate> overlap_templates();
OverlapSpec default_overlap_spec(std::uint64_t seed = 42);

// Number of placement pairs whose masks share at least one pixel.
int count_overlapping_pairs(const std::vector<Placement>& placements,
                            const std::vector<ShapeTemplate>& templates);

OverlapImage gen_overlap_image(const OverlapSpec& spec,
                               const std::vector<ShapeTemplate>& templates);

struct Series {
    std::string shape_id;
    int count = 0;
};

struct PlotSpec {
    int height = 160;
    int width = 200;
    int axis_row = 135;  // x axis
    int axis_col = 30;   // y axis
    std::vector<Series> series;
    double noise = 0.0;
    bool connect = false;
    // extra markers drawn overlapping an existing marker of the same series
    int fused_pairs = 0;
    bool tick_labels = true;
    std::string caption;
    std::uint64_t seed = 42;
};

struct PlotTruth {
    int axis_row = 0;
    int axis_col = 0;
    // top-left offsets in image coordinates
    std::vector<Placement> markers;
    // index pairs into `markers` that were deliberately fused
    std::vector<std::pair<std::size_t, std::size_t>> fused;
    std::string caption;
};

struct PlotImage {
    raster::GrayImage image{1, 1};
    PlotTruth truth;
};

// Random canvas, axes, one to three marker series and a keyword-biased
// caption; the returned PlotSpec carries `seed`.
PlotSpec random_plot_spec(Rng& rng, std::uint64_t seed);
PlotImage gen_plot_image(const PlotSpec& spec, const std::vector<ShapeTemplate>& templates);

enum class NegativeKind { Speckle, TextOnly, Gradient, Table };

std::string to_string(NegativeKind kind);

raster::GrayImage gen_negative_image(NegativeKind kind, int height, int width,
                                     std::uint64_t seed);

struct CorpusItem {
    std::string name;
    raster::GrayImage image{1, 1};
    std::string caption;
    int label = 1;  // +1 plot, -1 other
};

// Balanced synthetic stand-in for a crawled figure corpus: n_plots random
// plots and n_negatives from the NegativeKind rotation, each with a caption.
std::vector<CorpusItem> gen_classifier_corpus(int n_plots, int n_negatives, std::uint64_t seed,
                                              const std::vector<ShapeTemplate>& templates);

struct RecallRow {
    std::string shape_id;
    long total = 0;
    long correct = 0;
    double recall() const
    {
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct RecallTable {
    std::vector<RecallRow> rows;
    long images = 0;
    long images_fully_recovered = 0;

    long total() const;
    long correct() const;
    double recall() const;
    std::string to_text() const;
};

// gen_overlap_image -> anneal -> match_placements over n_images. Image i
// uses seed derive_seed(spec.seed, i) and anneal seed
// derive_seed(config.seed, i).
RecallTable eval_disambiguation(int n_images, const OverlapSpec& spec_template,
                                const anneal::AnnealConfig& config, int tol,
                                const std::vector<ShapeTemplate>& templates);

}  // namespace plotminer::synth
