#pragma once

#include "plotminer/anneal.hpp"
#include "plotminer/features.hpp"
#include "plotminer/io.hpp"
#include "plotminer/plotseg.hpp"
#include "plotminer/raster.hpp"
#include "plotminer/svm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plotminer::pipeline {

struct DataPoint {
    std::string shape_id;
    double row = 0;
    double col = 0;
    std::string origin;  // "direct" or "annealed"
};

struct RegionText {
    std::string region;  // "x_axis", "y_axis" or "plotting"
    plotseg::TextBox box;  // bbox in image coordinates
};

struct ExtractionResult {
    std::string source;
    bool is_plot = false;
    double score = 0;
    std::uint64_t seed = 42;
    std::optional<plotseg::PlotRegions> regions;
    std::vector<RegionText> text_boxes;
    std::vector<DataPoint> data_points;
    std::vector<std::string> warnings;
};

io::Json to_json(const ExtractionResult& r);
ExtractionResult extraction_from_json(const io::Json& j);

struct ExtractConfig {
    features::FeatureConfig features;
    plotseg::AxisParams axes;
    int guard = 2;
    plotseg::LineRemovalParams removal;
    double match_threshold = 0.85;
    double gap_tolerance = 0.5;
    // residual components smaller than this are treated as noise
    long min_component_area = 9;
    anneal::AnnealConfig anneal;
    bool invert = false;
};

// Reads {"anneal": {...}, "features": {...}, "extract": {...}}; every
// section and key is optional.
ExtractConfig extract_config_from_json(const io::Json& j, ExtractConfig base = {});
io::Json to_json(const ExtractConfig& c);

svm::Prediction classify_image(const raster::GrayImage& img, const std::optional<std::string>& caption,
                               const svm::SvmModel& model, const features::FeatureConfig& config,
                               bool invert = false);

// Classification (when a model is given), axes, regions, text grouping,
// line removal, template matching and annealing of unresolved blobs.
// When `segmentation` is non-null it receives a JSON dump of every
// component seen in the three regions.
ExtractionResult extract(const raster::GrayImage& img, const std::string& source,
                         const std::optional<std::string>& caption, const svm::SvmModel* model,
                         const std::vector<plotseg::ShapeTemplate>& templates,
                         const ExtractConfig& config, io::Json* segmentation = nullptr);

}  // namespace plotminer::pipeline
