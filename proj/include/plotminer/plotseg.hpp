#pragma once

#include "plotminer/features.hpp"
#include "plotminer/raster.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace plotminer::plotseg {

using features::LineSegment;
using raster::BinaryImage;
using raster::Box;

struct AxisPair {
    LineSegment x_axis;
    LineSegment y_axis;
};

struct AxisParams {
    double tolerance_deg = 10.0;
    features::HoughParams hough;
};

struct PlotRegions {
    Box x_axis_region;
    Box y_axis_region;
    Box plotting_region;
    LineSegment x_axis_line;
    LineSegment y_axis_line;
};

struct ConnectedComponent {
    int label = 0;
    Box bbox;
    long pixel_count = 0;
    double centroid_row = 0;
    double centroid_col = 0;
    BinaryImage mask{1, 1};
};

struct ShapeTemplate {
    std::string shape_id;
    BinaryImage mask{1, 1};
    // top-left placement reference in mask coordinates
    int anchor_row = 0;
    int anchor_col = 0;

    long area() const { return mask.count(); }
    std::pair<double, double> centroid() const;
};

struct TextBox {
    Box bbox;
    std::vector<int> member_components;
    double mean_gap = 0;
};

AxisPair detect_axes(const BinaryImage& img, const AxisParams& params = {});

// Row of the horizontal axis / column of the vertical axis, evaluated at the
// image centre and rounded.
int axis_row(const LineSegment& x_axis, const BinaryImage& img);
int axis_col(const LineSegment& y_axis, const BinaryImage& img);

PlotRegions segment_regions(const BinaryImage& img, const AxisPair& axes, int guard = 2);

// 8-connected labelling; components are ordered by (bbox top, bbox left)
// and labelled 0..n-1 in that order.
std::vector<ConnectedComponent> connected_components(const BinaryImage& img);

std::vector<TextBox> group_text_candidates(const std::vector<ConnectedComponent>& components,
                                           double gap_tolerance = 0.5);

struct LineRemovalParams {
    double thickness = 1.0;
    long marker_max_area = 400;
};

// Erases ink within `thickness` of any listed line, then restores erased
// pixels that sit inside the box of a small (marker sized) residual
// component or solid blob so markers crossed by a line keep their shape.
BinaryImage remove_lines(const BinaryImage& region, const std::vector<LineSegment>& lines,
                         const LineRemovalParams& params = {});

// Drops strokes thinner than 3 px (curves, tick marks) by a 3x3 opening and
// regrows surviving blobs from the original ink within a 1 px margin.
BinaryImage remove_thin_strokes(const BinaryImage& region);

// Dice score 2|A and B| / (|A| + |B|) maximised over integer shifts of b
// against a (top-left aligned) within +-max_shift in each axis.
double overlap_f1(const BinaryImage& a, const BinaryImage& b, int max_shift = 2);

struct ShapeMatch {
    std::optional<std::string> shape_id;  // nullopt = unresolved
    double best_f1 = 0;
    std::string best_candidate;
};

ShapeMatch classify_component(const ConnectedComponent& component,
                              const std::vector<ShapeTemplate>& templates,
                              double match_threshold = 0.85);

// Analytic marker masks.
BinaryImage diamond_mask(int size);
BinaryImage triangle_mask(int size);
BinaryImage square_mask(int size);
BinaryImage circle_mask(int size);
BinaryImage cross_mask(int size);

ShapeTemplate make_template(const std::string& shape_id, BinaryImage mask);

// diamond, triangle, square, circle and cross at sizes 7..15 (odd), ids
// "<shape>_<size>".
std::vector<ShapeTemplate> default_template_library();

// Loads every <shape_id>.pgm in `dir` (dark ink); sorted by id.
std::vector<ShapeTemplate> load_template_library(const std::filesystem::path& dir);
void save_template_library(const std::vector<ShapeTemplate>& templates,
                           const std::filesystem::path& dir);

const ShapeTemplate& find_template(const std::vector<ShapeTemplate>& templates,
                                   const std::string& shape_id);

}  // namespace plotminer::plotseg
