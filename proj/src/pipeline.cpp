#include "plotminer/pipeline.hpp"

#include "plotminer/error.hpp"
#include "plotminer/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace plotminer::pipeline {

using io::Json;
using plotseg::ConnectedComponent;
using raster::BinaryImage;
using raster::Box;

namespace {

Box shifted(const Box& b, int dr, int dc)
{
    return {b.top + dr, b.left + dc, b.bottom + dr, b.right + dc};
}

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorCode::MalformedConfig, what);
}

Json component_json(const ConnectedComponent& c, const Box& region, const std::string& name)
{
    return Json{{"region", name},
                {"label", c.label},
                {"bbox", io::to_json(shifted(c.bbox, region.top, region.left))},
                {"pixel_count", c.pixel_count},
                {"centroid", {c.centroid_row + region.top, c.centroid_col + region.left}}};
}

// Text boxes found among the components of one region, moved to image
// coordinates.
std::vector<RegionText> region_text(const std::vector<ConnectedComponent>& comps, const Box& region,
                                    const std::string& name, double tolerance)
{
    std::vector<RegionText> out;
    for (auto& tb : plotseg::group_text_candidates(comps, tolerance)) {
        tb.bbox = shifted(tb.bbox, region.top, region.left);
        out.push_back({name, std::move(tb)});
    }
    return out;
}

}  // namespace

Json to_json(const ExtractionResult& r)
{
    Json text = Json::array();
    for (const auto& t : r.text_boxes) {
        text.push_back({{"region", t.region},
                        {"bbox", io::to_json(t.box.bbox)},
                        {"members", t.box.member_components},
                        {"mean_gap", t.box.mean_gap}});
    }
    Json points = Json::array();
    for (const auto& p : r.data_points) {
        points.push_back({{"shape_id", p.shape_id},
                          {"centroid", {{"row", p.row}, {"col", p.col}}},
                          {"origin", p.origin}});
    }
    Json j{{"source", r.source},
           {"is_plot", r.is_plot},
           {"score", r.score},
           {"seed", r.seed},
           {"text_boxes", text},
           {"data_points", points},
           {"warnings", r.warnings}};
    j["regions"] = r.regions ? io::to_json(*r.regions) : Json(nullptr);
    return j;
}

ExtractionResult extraction_from_json(const Json& j)
{
    ExtractionResult r;
    try {
        r.source = j.at("source").get<std::string>();
        r.is_plot = j.at("is_plot").get<bool>();
        r.score = j.at("score").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("regions").is_null()) {
            r.regions = io::regions_from_json(j.at("regions"));
        }
        for (const auto& t : j.at("text_boxes")) {
            RegionText rt;
            rt.region = t.at("region").get<std::string>();
            rt.box.bbox = io::box_from_json(t.at("bbox"));
            rt.box.member_components = t.at("members").get<std::vector<int>>();
            rt.box.mean_gap = t.at("mean_gap").get<double>();
            r.text_boxes.push_back(std::move(rt));
        }
        for (const auto& p : j.at("data_points")) {
            DataPoint d;
            d.shape_id = p.at("shape_id").get<std::string>();
            d.row = p.at("centroid").at("row").get<double>();
            d.col = p.at("centroid").at("col").get<double>();
            d.origin = p.at("origin").get<std::string>();
            r.data_points.push_back(std::move(d));
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        malformed(std::string("extraction result: ") + e.what());
    }
    return r;
}

ExtractConfig extract_config_from_json(const Json& j, ExtractConfig c)
{
    if (!j.is_object()) {
        malformed("config must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "anneal" && it.key() != "features" && it.key() != "extract") {
            malformed("unknown config section '" + it.key() + "'");
        }
    }
    if (j.contains("anneal")) {
        c.anneal = io::anneal_config_from_json(j.at("anneal"), c.anneal);
    }
    if (j.contains("features")) {
        c.features = io::feature_config_from_json(j.at("features"), c.features);
        c.axes.hough = c.features.hough;
    }
    if (j.contains("extract")) {
        const Json& e = j.at("extract");
        static const std::set<std::string> known = {
            "guard",          "match_threshold", "gap_tolerance",      "min_component_area",
            "line_thickness", "marker_max_area", "axis_tolerance_deg", "invert"};
        if (!e.is_object()) {
            malformed("extract section must be an object");
        }
        try {
            for (auto it = e.begin(); it != e.end(); ++it) {
                const auto& key = it.key();
                if (!known.count(key)) {
                    malformed("unknown key '" + key + "' in extract config");
                }
                const Json& v = it.value();
                if (key == "guard") {
                    c.guard = v.get<int>();
                } else if (key == "match_threshold") {
                    c.match_threshold = v.get<double>();
                } else if (key == "gap_tolerance") {
                    c.gap_tolerance = v.get<double>();
                } else if (key == "min_component_area") {
                    c.min_component_area = v.get<long>();
                } else if (key == "line_thickness") {
                    c.removal.thickness = v.get<double>();
                } else if (key == "marker_max_area") {
                    c.removal.marker_max_area = v.get<long>();
                } else if (key == "axis_tolerance_deg") {
                    c.axes.tolerance_deg = v.get<double>();
                } else {
                    c.invert = v.get<bool>();
                }
            }
        } catch (const Json::exception& ex) {
            malformed(std::string("extract config: ") + ex.what());
        }
        if (c.guard < 0 || c.match_threshold < 0 || c.match_threshold > 1 || c.gap_tolerance < 0 ||
            c.removal.thickness < 0 || c.axes.tolerance_deg <= 0) {
            malformed("extract config value out of range");
        }
    }
    return c;
}

Json to_json(const ExtractConfig& c)
{
    return Json{{"anneal", io::to_json(c.anneal)},
                {"features", io::to_json(c.features)},
                {"extract",
                 {{"guard", c.guard},
                  {"match_threshold", c.match_threshold},
                  {"gap_tolerance", c.gap_tolerance},
                  {"min_component_area", c.min_component_area},
                  {"line_thickness", c.removal.thickness},
                  {"marker_max_area", c.removal.marker_max_area},
                  {"axis_tolerance_deg", c.axes.tolerance_deg},
                  {"invert", c.invert}}}};
}

svm::Prediction classify_image(const raster::GrayImage& img, const std::optional<std::string>& caption,
                               const svm::SvmModel& model, const features::FeatureConfig& config,
                               bool invert)
{
    const auto fv = features::extract_features(img, caption, config, invert);
    const auto x = fv.dense();
    if (x.size() != model.dimension()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "model expects " + std::to_string(model.dimension()) + " features, image gives " +
                        std::to_string(x.size()));
    }
    return svm::predict(model, x);
}

ExtractionResult extract(const raster::GrayImage& img, const std::string& source,
                         const std::optional<std::string>& caption, const svm::SvmModel* model,
                         const std::vector<plotseg::ShapeTemplate>& templates,
                         const ExtractConfig& config, Json* segmentation)
{
    ExtractionResult result;
    result.source = source;
    result.seed = config.anneal.seed;
    if (segmentation) {
        *segmentation = Json{{"source", source}, {"components", Json::array()}};
    }

    if (model) {
        const auto pred = classify_image(img, caption, *model, config.features, config.invert);
        result.score = pred.score;
        result.is_plot = pred.label == 1;
        if (!result.is_plot) {
            result.warnings.push_back(std::string(to_string(ErrorCode::NotAPlot)) + ": classifier score " +
                                      std::to_string(pred.score));
            return result;
        }
    } else {
        result.is_plot = true;
        result.warnings.push_back("no classifier model given; image treated as a plot");
    }

    const BinaryImage bin = raster::binarize(img, std::nullopt, config.invert);
    plotseg::PlotRegions regions;
    try {
        const auto axes = plotseg::detect_axes(bin, config.axes);
        regions = plotseg::segment_regions(bin, axes, config.guard);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::AxesNotFound && e.code() != ErrorCode::DegenerateRegion) {
            throw;
        }
        result.warnings.push_back(e.what());
        return result;
    }
    result.regions = regions;

    auto dump = [&](const std::vector<ConnectedComponent>& comps, const Box& region,
                    const std::string& name) {
        if (!segmentation) {
            return;
        }
        for (const auto& c : comps) {
            (*segmentation)["components"].push_back(component_json(c, region, name));
        }
    };

    for (const auto& [name, region] :
         {std::pair<std::string, Box>{"x_axis", regions.x_axis_region},
          std::pair<std::string, Box>{"y_axis", regions.y_axis_region}}) {
        const auto comps = plotseg::connected_components(raster::crop(bin, region));
        dump(comps, region, name);
        auto text = region_text(comps, region, name, config.gap_tolerance);
        result.text_boxes.insert(result.text_boxes.end(), text.begin(), text.end());
    }

    const Box& pr = regions.plotting_region;
    const BinaryImage plot = raster::crop(bin, pr);
    const auto lines = features::hough_lines(plot, config.features.hough);
    const BinaryImage cleaned =
        plotseg::remove_thin_strokes(plotseg::remove_lines(plot, lines, config.removal));
    const auto comps = plotseg::connected_components(cleaned);
    struct Pending {
        const ConnectedComponent* comp;
        std::vector<std::string> extra;  // candidate ids beyond the repeated shapes
    };
    struct Matched {
        const ConnectedComponent* comp;
        std::string shape_id;
    };
    std::vector<Pending> unresolved;
    std::vector<Matched> matched;
    std::map<std::string, int> shape_count;
    for (const auto& c : comps) {
        if (c.pixel_count < config.min_component_area) {
            dump({c}, pr, "plotting");
            continue;
        }
        const auto match = plotseg::classify_component(c, templates, config.match_threshold);
        if (segmentation) {
            Json entry = component_json(c, pr, "plotting");
            entry["match"] = match.shape_id ? Json(*match.shape_id) : Json(nullptr);
            entry["best_f1"] = match.best_f1;
            (*segmentation)["components"].push_back(std::move(entry));
        }
        if (match.shape_id) {
            matched.push_back({&c, *match.shape_id});
            ++shape_count[*match.shape_id];
        } else {
            unresolved.push_back({&c, {match.best_candidate}});
        }
    }
    // Evenly spaced neighbours also chain up as text; a chain holding a
    // recognised marker is not text.
    std::set<int> marker_labels;
    for (const auto& m : matched) {
        marker_labels.insert(m.comp->label);
    }
    std::set<int> text_members;
    for (auto& t : region_text(comps, pr, "plotting", config.gap_tolerance)) {
        const auto& members = t.box.member_components;
        if (std::none_of(members.begin(), members.end(),
                         [&](int l) { return marker_labels.count(l) > 0; })) {
            text_members.insert(members.begin(), members.end());
            result.text_boxes.push_back(std::move(t));
        }
    }
    std::erase_if(unresolved, [&](const Pending& p) { return text_members.count(p.comp->label) > 0; });
    // Shapes seen more than once define the marker series. A lone match to
    // some other template is usually a fused pair that happens to resemble
    // a larger glyph, so it is annealed instead.
    std::vector<std::string> seen_shapes;
    for (const auto& [id, n] : shape_count) {
        if (n >= 2) {
            seen_shapes.push_back(id);
        }
    }
    if (seen_shapes.empty()) {
        for (const auto& [id, n] : shape_count) {
            seen_shapes.push_back(id);
        }
    }
    for (const auto& m : matched) {
        const bool lone = shape_count[m.shape_id] == 1 &&
                          !std::binary_search(seen_shapes.begin(), seen_shapes.end(), m.shape_id);
        if (lone) {
            unresolved.push_back({m.comp, {m.shape_id}});
        } else {
            result.data_points.push_back({m.shape_id, m.comp->centroid_row + pr.top,
                                          m.comp->centroid_col + pr.left, "direct"});
        }
    }
    std::sort(unresolved.begin(), unresolved.end(),
              [](const Pending& a, const Pending& b) { return a.comp->label < b.comp->label; });

    for (std::size_t b = 0; b < unresolved.size(); ++b) {
        const auto& blob = *unresolved[b].comp;
        std::vector<plotseg::ShapeTemplate> candidates;
        for (const auto& t : templates) {
            const auto& extra = unresolved[b].extra;
            const bool wanted =
                std::binary_search(seen_shapes.begin(), seen_shapes.end(), t.shape_id) ||
                std::find(extra.begin(), extra.end(), t.shape_id) != extra.end();
            if (wanted && t.mask.height() <= blob.mask.height() &&
                t.mask.width() <= blob.mask.width()) {
                candidates.push_back(t);
            }
        }
        if (candidates.empty()) {
            result.warnings.push_back("unresolved blob " + std::to_string(blob.label) +
                                      " is smaller than every candidate template");
            continue;
        }
        anneal::AnnealConfig cfg = config.anneal;
        cfg.seed = derive_seed(config.anneal.seed, b);
        const auto fit = anneal::anneal(blob.mask, candidates, cfg);
        if (fit.placements.empty()) {
            result.warnings.push_back("annealing found no marker in blob " +
                                      std::to_string(blob.label));
            continue;
        }
        for (const auto& p : fit.placements) {
            const auto [cr, cc] = plotseg::find_template(candidates, p.shape_id).centroid();
            result.data_points.push_back({p.shape_id, pr.top + blob.bbox.top + p.row + cr,
                                          pr.left + blob.bbox.left + p.col + cc, "annealed"});
        }
    }
    return result;
}

}  // namespace plotminer::pipeline
