#include "plotminer/plotseg.hpp"

#include "plotminer/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace plotminer::plotseg {

namespace {

bool is_horizontal(const LineSegment& l, double tol)
{
    return l.orientation_deg <= tol || l.orientation_deg >= 180.0 - tol;
}

bool is_vertical(const LineSegment& l, double tol)
{
    return std::abs(l.orientation_deg - 90.0) <= tol;
}

int vertical_overlap(const Box& a, const Box& b)
{
    return std::min(a.bottom, b.bottom) - std::max(a.top, b.top) + 1;
}

BinaryImage erode3(const BinaryImage& img)
{
    BinaryImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            bool keep = img.at(r, c);
            for (int dr = -1; dr <= 1 && keep; ++dr) {
                for (int dc = -1; dc <= 1 && keep; ++dc) {
                    keep = img.in_bounds(r + dr, c + dc) && img.at(r + dr, c + dc);
                }
            }
            out.set(r, c, keep);
        }
    }
    return out;
}

BinaryImage dilate3(const BinaryImage& img)
{
    BinaryImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            if (!img.at(r, c)) {
                continue;
            }
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (img.in_bounds(r + dr, c + dc)) {
                        out.set(r + dr, c + dc, true);
                    }
                }
            }
        }
    }
    return out;
}

Box expand(const Box& b, int margin, const BinaryImage& img)
{
    return Box{std::max(0, b.top - margin), std::max(0, b.left - margin),
               std::min(img.height() - 1, b.bottom + margin),
               std::min(img.width() - 1, b.right + margin)};
}

}  // namespace

std::pair<double, double> ShapeTemplate::centroid() const
{
    double sr = 0;
    double sc = 0;
    long n = 0;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (mask.at(r, c)) {
                sr += r;
                sc += c;
                ++n;
            }
        }
    }
    return {sr / static_cast<double>(n), sc / static_cast<double>(n)};
}

AxisPair detect_axes(const BinaryImage& img, const AxisParams& params)
{
    if (img.count() == 0) {
        throw Error(ErrorCode::AxesNotFound, "image has no ink");
    }
    const auto lines = features::hough_lines(img, params.hough);
    std::optional<LineSegment> xa;
    std::optional<LineSegment> ya;
    for (const auto& l : lines) {
        if (is_horizontal(l, params.tolerance_deg)) {
            // equal votes: prefer the lowest line (frames repeat the axis at the top)
            if (!xa || l.votes > xa->votes ||
                (l.votes == xa->votes && l.row_at(img.width() / 2.0) > xa->row_at(img.width() / 2.0))) {
                xa = l;
            }
        } else if (is_vertical(l, params.tolerance_deg)) {
            if (!ya || l.votes > ya->votes ||
                (l.votes == ya->votes && l.col_at(img.height() / 2.0) < ya->col_at(img.height() / 2.0))) {
                ya = l;
            }
        }
    }
    if (!xa || !ya) {
        throw Error(ErrorCode::AxesNotFound,
                    !xa ? "no near-horizontal line found" : "no near-vertical line found");
    }
    return {*xa, *ya};
}

int axis_row(const LineSegment& x_axis, const BinaryImage& img)
{
    return static_cast<int>(std::lround(x_axis.row_at((img.width() - 1) / 2.0)));
}

int axis_col(const LineSegment& y_axis, const BinaryImage& img)
{
    return static_cast<int>(std::lround(y_axis.col_at((img.height() - 1) / 2.0)));
}

PlotRegions segment_regions(const BinaryImage& img, const AxisPair& axes, int guard)
{
    const int xr = axis_row(axes.x_axis, img);
    const int yc = axis_col(axes.y_axis, img);
    if (xr < 0 || xr >= img.height() || yc < 0 || yc >= img.width()) {
        throw Error(ErrorCode::DegenerateRegion, "axes lie outside the image");
    }
    PlotRegions regions;
    regions.x_axis_line = axes.x_axis;
    regions.y_axis_line = axes.y_axis;
    // the bottom-left corner (below the x axis, left of the y axis) goes to the x-axis region
    regions.x_axis_region = Box{xr + 1, 0, img.height() - 1, img.width() - 1};
    regions.y_axis_region = Box{0, 0, xr, yc - 1};
    regions.plotting_region = Box{0, yc + guard + 1, xr - guard - 1, img.width() - 1};
    if (regions.x_axis_region.empty()) {
        throw Error(ErrorCode::DegenerateRegion, "x-axis region has zero area");
    }
    if (regions.y_axis_region.empty()) {
        throw Error(ErrorCode::DegenerateRegion, "y-axis region has zero area");
    }
    if (regions.plotting_region.empty()) {
        throw Error(ErrorCode::DegenerateRegion, "plotting region has zero area");
    }
    return regions;
}

std::vector<ConnectedComponent> connected_components(const BinaryImage& img)
{
    const int h = img.height();
    const int w = img.width();
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    std::vector<ConnectedComponent> comps;
    std::vector<std::pair<int, int>> pixels;
    std::deque<std::pair<int, int>> queue;
    for (int r0 = 0; r0 < h; ++r0) {
        for (int c0 = 0; c0 < w; ++c0) {
            if (!img.at(r0, c0) || label[static_cast<std::size_t>(r0) * w + c0] >= 0) {
                continue;
            }
            const int id = static_cast<int>(comps.size());
            pixels.clear();
            queue.assign(1, {r0, c0});
            label[static_cast<std::size_t>(r0) * w + c0] = id;
            while (!queue.empty()) {
                auto [r, c] = queue.front();
                queue.pop_front();
                pixels.emplace_back(r, c);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = r + dr;
                        const int nc = c + dc;
                        if (!img.in_bounds(nr, nc) || !img.at(nr, nc)) {
                            continue;
                        }
                        auto& l = label[static_cast<std::size_t>(nr) * w + nc];
                        if (l < 0) {
                            l = id;
                            queue.emplace_back(nr, nc);
                        }
                    }
                }
            }
            ConnectedComponent cc;
            cc.bbox = Box{h, w, -1, -1};
            double sr = 0;
            double sc = 0;
            for (auto [r, c] : pixels) {
                cc.bbox.top = std::min(cc.bbox.top, r);
                cc.bbox.left = std::min(cc.bbox.left, c);
                cc.bbox.bottom = std::max(cc.bbox.bottom, r);
                cc.bbox.right = std::max(cc.bbox.right, c);
                sr += r;
                sc += c;
            }
            cc.pixel_count = static_cast<long>(pixels.size());
            cc.centroid_row = sr / static_cast<double>(pixels.size());
            cc.centroid_col = sc / static_cast<double>(pixels.size());
            cc.mask = BinaryImage(cc.bbox.width(), cc.bbox.height());
            for (auto [r, c] : pixels) {
                cc.mask.set(r - cc.bbox.top, c - cc.bbox.left, true);
            }
            comps.push_back(std::move(cc));
        }
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const ConnectedComponent& a, const ConnectedComponent& b) {
                         return std::pair(a.bbox.top, a.bbox.left) <
                                std::pair(b.bbox.top, b.bbox.left);
                     });
    for (std::size_t i = 0; i < comps.size(); ++i) {
        comps[i].label = static_cast<int>(i);
    }
    return comps;
}

std::vector<TextBox> group_text_candidates(const std::vector<ConnectedComponent>& components,
                                           double gap_tolerance)
{
    std::vector<TextBox> boxes;
    if (components.size() < 2) {
        return boxes;
    }
    std::vector<int> widths;
    for (const auto& c : components) {
        widths.push_back(c.bbox.width());
    }
    std::sort(widths.begin(), widths.end());
    const std::size_t mid = widths.size() / 2;
    const double median_width =
        widths.size() % 2 ? widths[mid] : 0.5 * (widths[mid - 1] + widths[mid]);

    std::vector<std::size_t> order(components.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(components[a].bbox.left, components[a].bbox.top) <
               std::pair(components[b].bbox.left, components[b].bbox.top);
    });
    std::vector<bool> used(components.size(), false);

    for (std::size_t start : order) {
        if (used[start]) {
            continue;
        }
        std::vector<std::size_t> chain{start};
        std::vector<int> gaps;
        while (true) {
            const Box& cur = components[chain.back()].bbox;
            std::optional<std::size_t> next;
            int next_gap = 0;
            for (std::size_t cand : order) {
                if (used[cand] || std::find(chain.begin(), chain.end(), cand) != chain.end()) {
                    continue;
                }
                const Box& b = components[cand].bbox;
                if (b.left <= cur.right) {
                    continue;
                }
                const int gap = b.left - cur.right - 1;
                const int shorter = std::min(cur.height(), b.height());
                if (gap > median_width || 2 * vertical_overlap(cur, b) < shorter) {
                    continue;
                }
                if (!next || gap < next_gap ||
                    (gap == next_gap && b.top < components[*next].bbox.top)) {
                    next = cand;
                    next_gap = gap;
                }
            }
            if (!next) {
                break;
            }
            chain.push_back(*next);
            gaps.push_back(next_gap);
        }
        if (chain.size() < 2) {
            used[start] = true;
            continue;
        }
        const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) /
                            static_cast<double>(gaps.size());
        const bool regular = std::all_of(gaps.begin(), gaps.end(), [&](int g) {
            return std::abs(g - mean) <= gap_tolerance * mean;
        });
        TextBox tb;
        for (auto i : chain) {
            tb.bbox = raster::bounding_union(tb.bbox, components[i].bbox);
            tb.member_components.push_back(components[i].label);
        }
        tb.mean_gap = mean;
        const bool clashes = std::any_of(boxes.begin(), boxes.end(),
                                         [&](const TextBox& o) { return o.bbox.intersects(tb.bbox); });
        if (regular && !clashes) {
            for (auto i : chain) {
                used[i] = true;
            }
            boxes.push_back(std::move(tb));
        } else {
            used[start] = true;
        }
    }
    return boxes;
}

BinaryImage remove_lines(const BinaryImage& region, const std::vector<LineSegment>& lines,
                         const LineRemovalParams& params)
{
    if (lines.empty()) {
        return region;
    }
    BinaryImage residual = region;
    BinaryImage erased(region.width(), region.height());
    for (int r = 0; r < region.height(); ++r) {
        for (int c = 0; c < region.width(); ++c) {
            if (!region.at(r, c)) {
                continue;
            }
            for (const auto& l : lines) {
                if (l.distance(r, c) <= params.thickness) {
                    residual.set(r, c, false);
                    erased.set(r, c, true);
                    break;
                }
            }
        }
    }
    const int margin = static_cast<int>(std::ceil(params.thickness));
    BinaryImage out = residual;
    auto restore = [&](const Box& box) {
        for (int r = box.top; r <= box.bottom; ++r) {
            for (int c = box.left; c <= box.right; ++c) {
                if (erased.at(r, c)) {
                    out.set(r, c, true);
                }
            }
        }
    };
    for (const auto& cc : connected_components(residual)) {
        if (cc.bbox.area() <= params.marker_max_area) {
            restore(expand(cc.bbox, margin, region));
        }
    }
    // Several lines can cross one marker and leave no residual worth
    // keeping, so solid blobs (what survives a 3x3 opening of the input)
    // are protected too. The extra margin covers tips the opening trims.
    for (const auto& cc : connected_components(dilate3(erode3(region)))) {
        if (cc.bbox.area() <= params.marker_max_area) {
            restore(expand(cc.bbox, margin + 2, region));
        }
    }
    return out;
}

BinaryImage remove_thin_strokes(const BinaryImage& region)
{
    const BinaryImage core = dilate3(erode3(region));
    BinaryImage out(region.width(), region.height());
    constexpr int kMargin = 2;
    for (const auto& cc : connected_components(core)) {
        const Box grown = expand(cc.bbox, kMargin, region);
        std::deque<std::pair<int, int>> queue;
        for (int r = cc.bbox.top; r <= cc.bbox.bottom; ++r) {
            for (int c = cc.bbox.left; c <= cc.bbox.right; ++c) {
                if (cc.mask.at(r - cc.bbox.top, c - cc.bbox.left) && !out.at(r, c)) {
                    out.set(r, c, true);
                    queue.emplace_back(r, c);
                }
            }
        }
        while (!queue.empty()) {
            auto [r, c] = queue.front();
            queue.pop_front();
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int nr = r + dr;
                    const int nc = c + dc;
                    if (grown.contains(nr, nc) && region.at(nr, nc) && !out.at(nr, nc)) {
                        out.set(nr, nc, true);
                        queue.emplace_back(nr, nc);
                    }
                }
            }
        }
    }
    return out;
}

double overlap_f1(const BinaryImage& a, const BinaryImage& b, int max_shift)
{
    const long na = a.count();
    const long nb = b.count();
    if (na + nb == 0) {
        return 0.0;
    }
    long best = 0;
    for (int dr = -max_shift; dr <= max_shift; ++dr) {
        for (int dc = -max_shift; dc <= max_shift; ++dc) {
            long inter = 0;
            for (int r = 0; r < a.height(); ++r) {
                const int br = r - dr;
                if (br < 0 || br >= b.height()) {
                    continue;
                }
                for (int c = 0; c < a.width(); ++c) {
                    const int bc = c - dc;
                    if (bc >= 0 && bc < b.width() && a.at(r, c) && b.at(br, bc)) {
                        ++inter;
                    }
                }
            }
            best = std::max(best, inter);
        }
    }
    return 2.0 * static_cast<double>(best) / static_cast<double>(na + nb);
}

ShapeMatch classify_component(const ConnectedComponent& component,
                              const std::vector<ShapeTemplate>& templates,
                              double match_threshold)
{
    if (templates.empty()) {
        throw Error(ErrorCode::NoTemplates, "classify_component needs at least one template");
    }
    ShapeMatch match;
    match.best_f1 = -1;
    for (const auto& t : templates) {
        const double f1 = overlap_f1(component.mask, t.mask);
        if (f1 > match.best_f1) {
            match.best_f1 = f1;
            match.best_candidate = t.shape_id;
        }
    }
    if (match.best_f1 >= match_threshold) {
        match.shape_id = match.best_candidate;
    }
    return match;
}

BinaryImage diamond_mask(int size)
{
    BinaryImage m(size, size);
    const int r = size / 2;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            m.set(i, j, std::abs(i - r) + std::abs(j - r) <= r);
        }
    }
    return m;
}

BinaryImage triangle_mask(int size)
{
    BinaryImage m(size, size);
    const int mid = size / 2;
    for (int i = 0; i < size; ++i) {
        const int half = std::min(i / 2, mid);
        for (int j = mid - half; j <= mid + half; ++j) {
            m.set(i, j, true);
        }
    }
    return m;
}

BinaryImage square_mask(int size)
{
    return BinaryImage(size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size, 1));
}

BinaryImage circle_mask(int size)
{
    BinaryImage m(size, size);
    const double c = (size - 1) / 2.0;
    const double rad = size / 2.0;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            m.set(i, j, (i - c) * (i - c) + (j - c) * (j - c) <= rad * rad);
        }
    }
    return m;
}

BinaryImage cross_mask(int size)
{
    BinaryImage m(size, size);
    const int mid = size / 2;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            m.set(i, j, std::abs(i - mid) <= 1 || std::abs(j - mid) <= 1);
        }
    }
    return m;
}

ShapeTemplate make_template(const std::string& shape_id, BinaryImage mask)
{
    if (mask.count() == 0) {
        throw Error(ErrorCode::InvalidArgument, "template '" + shape_id + "' has no ink");
    }
    ShapeTemplate t;
    t.shape_id = shape_id;
    t.mask = std::move(mask);
    return t;
}

std::vector<ShapeTemplate> default_template_library()
{
    std::vector<ShapeTemplate> lib;
    for (int size = 7; size <= 15; size += 2) {
        lib.push_back(make_template("circle_" + std::to_string(size), circle_mask(size)));
        lib.push_back(make_template("cross_" + std::to_string(size), cross_mask(size)));
        lib.push_back(make_template("diamond_" + std::to_string(size), diamond_mask(size)));
        lib.push_back(make_template("square_" + std::to_string(size), square_mask(size)));
        lib.push_back(make_template("triangle_" + std::to_string(size), triangle_mask(size)));
    }
    std::sort(lib.begin(), lib.end(),
              [](const ShapeTemplate& a, const ShapeTemplate& b) { return a.shape_id < b.shape_id; });
    return lib;
}

std::vector<ShapeTemplate> load_template_library(const std::filesystem::path& dir)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(ErrorCode::UnreadableFile, "template directory " + dir.string());
    }
    std::vector<ShapeTemplate> lib;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".pgm") {
            continue;
        }
        const auto gray = raster::load_image(entry.path());
        lib.push_back(make_template(entry.path().stem().string(), raster::binarize(gray, 128)));
    }
    if (lib.empty()) {
        throw Error(ErrorCode::NoTemplates, "no .pgm templates in " + dir.string());
    }
    std::sort(lib.begin(), lib.end(),
              [](const ShapeTemplate& a, const ShapeTemplate& b) { return a.shape_id < b.shape_id; });
    return lib;
}

void save_template_library(const std::vector<ShapeTemplate>& templates,
                           const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (const auto& t : templates) {
        raster::write_pgm(raster::to_gray(t.mask), dir / (t.shape_id + ".pgm"));
    }
}

const ShapeTemplate& find_template(const std::vector<ShapeTemplate>& templates,
                                   const std::string& shape_id)
{
    for (const auto& t : templates) {
        if (t.shape_id == shape_id) {
            return t;
        }
    }
    throw Error(ErrorCode::UnknownShape, "no template named '" + shape_id + "'");
}

}  // namespace plotminer::plotseg
