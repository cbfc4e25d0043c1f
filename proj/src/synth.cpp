#include "plotminer/synth.hpp"

#include "plotminer/error.hpp"
#include "plotminer/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace plotminer::synth {

namespace {

constexpr std::uint8_t kInk = 0;
constexpr std::uint8_t kBackground = 255;
constexpr int kMaxAttempts = 10000;

bool masks_intersect(const Placement& a, const ShapeTemplate& ta, const Placement& b,
                     const ShapeTemplate& tb)
{
    const int top = std::max(a.row, b.row);
    const int bottom = std::min(a.row + ta.mask.height(), b.row + tb.mask.height());
    const int left = std::max(a.col, b.col);
    const int right = std::min(a.col + ta.mask.width(), b.col + tb.mask.width());
    for (int r = top; r < bottom; ++r) {
        for (int c = left; c < right; ++c) {
            if (ta.mask.at(r - a.row, c - a.col) && tb.mask.at(r - b.row, c - b.col)) {
                return true;
            }
        }
    }
    return false;
}

void draw_line(raster::GrayImage& img, int r0, int c0, int r1, int c1)
{
    // Bresenham
    const int dr = std::abs(r1 - r0);
    const int dc = std::abs(c1 - c0);
    const int sr = r0 < r1 ? 1 : -1;
    const int sc = c0 < c1 ? 1 : -1;
    int err = dc - dr;
    while (true) {
        if (r0 >= 0 && r0 < img.height() && c0 >= 0 && c0 < img.width()) {
            img.set(r0, c0, kInk);
        }
        if (r0 == r1 && c0 == c1) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 > -dr) {
            err -= dr;
            c0 += sc;
        }
        if (e2 < dc) {
            err += dc;
            r0 += sr;
        }
    }
}

void stamp(raster::GrayImage& img, const ShapeTemplate& t, int row, int col)
{
    for (int r = 0; r < t.mask.height(); ++r) {
        for (int c = 0; c < t.mask.width(); ++c) {
            if (t.mask.at(r, c) && row + r < img.height() && col + c < img.width()) {
                img.set(row + r, col + c, kInk);
            }
        }
    }
}

// A hollow 4x7 box or a bar, standing in for a digit glyph.
void draw_glyph(raster::GrayImage& img, int top, int left, Rng& rng)
{
    const bool hollow = rng.canonical() < 0.7;
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 4; ++c) {
            const bool edge = r == 0 || r == 6 || c == 0 || c == 3;
            if ((hollow && edge) || (!hollow && c == 2)) {
                const int rr = top + r;
                const int cc = left + c;
                if (rr >= 0 && rr < img.height() && cc >= 0 && cc < img.width()) {
                    img.set(rr, cc, kInk);
                }
            }
        }
    }
}

void draw_label(raster::GrayImage& img, int top, int left, int digits, Rng& rng)
{
    for (int d = 0; d < digits; ++d) {
        draw_glyph(img, top, left + d * 6, rng);
    }
}

void add_speckle(raster::GrayImage& img, double fraction, Rng& rng)
{
    const long n = std::lround(fraction * img.width() * img.height());
    for (long i = 0; i < n; ++i) {
        img.set(rng.uniform_int(0, img.height() - 1), rng.uniform_int(0, img.width() - 1), kInk);
    }
}

std::string pick(const std::vector<std::string>& words, Rng& rng)
{
    return words[rng.index(words.size())];
}

std::string plot_caption(Rng& rng)
{
    static const std::vector<std::string> keyword_phrases = {
        "plot of", "distribution of", "slope of", "range of", "axes show", "log plot of",
        "size distribution for", "plots comparing"};
    static const std::vector<std::string> neutral_phrases = {
        "results for", "measured", "comparison of", "variation of", "effect of", "values of"};
    static const std::vector<std::string> subjects = {
        "the particle size", "conductivity", "temperature", "yield", "response time",
        "the reaction rate", "throughput", "absorbance", "error rate", "concentration"};
    std::string cap = "Figure " + std::to_string(rng.uniform_int(1, 12)) + ". ";
    cap += rng.canonical() < 0.7 ? pick(keyword_phrases, rng) : pick(neutral_phrases, rng);
    cap += " " + pick(subjects, rng) + " versus " + pick(subjects, rng) + ".";
    return cap;
}

std::string negative_caption(Rng& rng)
{
    static const std::vector<std::string> openers = {
        "Schematic of", "Photograph of", "Overview of", "Structure of", "Table of",
        "Micrograph of", "Illustration of", "Diagram of", "Example of"};
    static const std::vector<std::string> subjects = {
        "the apparatus", "the crystal lattice", "the proposed system", "sample preparation",
        "the network architecture", "the reactor", "the synthesis route", "the interface",
        "the measurement setup", "the parameters used"};
    static const std::vector<std::string> keyword_tails = {
        " over the full range.", " along both axes.", " and its distribution.",
        " with a shallow slope."};
    std::string cap = "Figure " + std::to_string(rng.uniform_int(1, 12)) + ". " +
                      pick(openers, rng) + " " + pick(subjects, rng);
    cap += rng.canonical() < 0.15 ? pick(keyword_tails, rng) : std::string(".");
    return cap;
}

}  // namespace

std::vector<ShapeTemplate> overlap_templates()
{
    return {plotseg::make_template("diamond_11", plotseg::diamond_mask(11)),
            plotseg::make_template("triangle_11", plotseg::triangle_mask(11))};
}

OverlapSpec default_overlap_spec(std::uint64_t seed)
{
    OverlapSpec spec;
    spec.shape_counts = {{"diamond_11", 3}, {"triangle_11", 2}};
    spec.min_overlap_pairs = 1;
    spec.seed = seed;
    return spec;
}

int count_overlapping_pairs(const std::vector<Placement>& placements,
                            const std::vector<ShapeTemplate>& templates)
{
    int pairs = 0;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        for (std::size_t j = i + 1; j < placements.size(); ++j) {
            if (masks_intersect(placements[i], plotseg::find_template(templates, placements[i].shape_id),
                                placements[j], plotseg::find_template(templates, placements[j].shape_id))) {
                ++pairs;
            }
        }
    }
    return pairs;
}

OverlapImage gen_overlap_image(const OverlapSpec& spec, const std::vector<ShapeTemplate>& templates)
{
    int total = 0;
    for (const auto& [id, n] : spec.shape_counts) {
        if (n < 0) {
            throw Error(ErrorCode::InfeasibleSpec, "negative count for " + id);
        }
        const auto& t = plotseg::find_template(templates, id);
        if (t.mask.height() > spec.height || t.mask.width() > spec.width) {
            throw Error(ErrorCode::InfeasibleSpec, id + " does not fit the canvas");
        }
        total += n;
    }
    if (total < 1) {
        throw Error(ErrorCode::InfeasibleSpec, "overlap spec places no shapes");
    }
    Rng rng(spec.seed);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<Placement> truth;
        for (const auto& [id, n] : spec.shape_counts) {
            const auto& t = plotseg::find_template(templates, id);
            const auto [max_row, max_col] = anneal::placement_bounds(t, spec.height, spec.width);
            for (int k = 0; k < n; ++k) {
                truth.push_back({id, rng.uniform_int(0, max_row), rng.uniform_int(0, max_col), 1});
            }
        }
        if (count_overlapping_pairs(truth, templates) >= spec.min_overlap_pairs) {
            OverlapImage out;
            out.image = anneal::render(truth, templates, spec.height, spec.width);
            out.truth = std::move(truth);
            return out;
        }
    }
    throw Error(ErrorCode::InfeasibleSpec,
                "could not reach " + std::to_string(spec.min_overlap_pairs) +
                    " overlapping pairs in " + std::to_string(kMaxAttempts) + " attempts");
}

PlotImage gen_plot_image(const PlotSpec& spec, const std::vector<ShapeTemplate>& templates)
{
    constexpr int kGuard = 2;
    constexpr int kPad = 4;
    if (spec.axis_row < 10 || spec.axis_row > spec.height - 2 || spec.axis_col < 1 ||
        spec.axis_col > spec.width - 10) {
        throw Error(ErrorCode::InfeasibleSpec, "axes must lie inside the canvas");
    }
    Rng rng(spec.seed);
    PlotImage out;
    out.image = raster::GrayImage(spec.width, spec.height, kBackground);
    auto& img = out.image;
    out.truth.axis_row = spec.axis_row;
    out.truth.axis_col = spec.axis_col;
    out.truth.caption = spec.caption;

    // axes as an L, 1 px wide
    draw_line(img, spec.axis_row, spec.axis_col, spec.axis_row, spec.width - 4);
    draw_line(img, 3, spec.axis_col, spec.axis_row, spec.axis_col);

    if (spec.tick_labels) {
        for (int c = spec.axis_col + 25; c < spec.width - 8; c += 30) {
            draw_line(img, spec.axis_row + 1, c, spec.axis_row + 3, c);
            if (spec.axis_row + 13 < spec.height) {
                const int digits = rng.uniform_int(1, 3);
                draw_label(img, spec.axis_row + 6, c - digits * 3, digits, rng);
            }
        }
        for (int r = spec.axis_row - 25; r > 8; r -= 30) {
            draw_line(img, r, spec.axis_col - 3, r, spec.axis_col - 1);
            const int digits = rng.uniform_int(1, 2);
            const int left = spec.axis_col - 6 - digits * 6;
            if (left >= 0) {
                draw_label(img, r - 3, left, digits, rng);
            }
        }
    }

    const int top = kPad;
    const int bottom = spec.axis_row - kGuard - kPad;  // exclusive
    const int left = spec.axis_col + kGuard + kPad;
    const int right = spec.width - kPad;  // exclusive

    struct Slot {
        std::size_t series;
        Placement p;
        raster::Box box;
    };
    std::vector<Slot> slots;
    auto box_of = [&](const Placement& p) {
        const auto& t = plotseg::find_template(templates, p.shape_id);
        return raster::Box{p.row, p.col, p.row + t.mask.height() - 1, p.col + t.mask.width() - 1};
    };
    auto grow = [](raster::Box b, int m) {
        return raster::Box{b.top - m, b.left - m, b.bottom + m, b.right + m};
    };

    for (std::size_t s = 0; s < spec.series.size(); ++s) {
        const auto& t = plotseg::find_template(templates, spec.series[s].shape_id);
        const int max_row = bottom - t.mask.height();
        const int max_col = right - t.mask.width();
        if (max_row < top || max_col < left) {
            throw Error(ErrorCode::InfeasibleSpec, "plotting area too small for " + t.shape_id);
        }
        for (int k = 0; k < spec.series[s].count; ++k) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                Placement p{t.shape_id, rng.uniform_int(top, max_row), rng.uniform_int(left, max_col), 1};
                const auto box = box_of(p);
                const bool clear = std::none_of(slots.begin(), slots.end(), [&](const Slot& o) {
                    return grow(o.box, 6).intersects(box);
                });
                if (clear) {
                    slots.push_back({s, p, box});
                    placed = true;
                }
            }
            if (!placed) {
                throw Error(ErrorCode::InfeasibleSpec, "could not place marker without overlap");
            }
        }
    }

    const std::size_t base_count = slots.size();
    for (int f = 0; f < spec.fused_pairs && base_count > 0; ++f) {
        const std::size_t partner = static_cast<std::size_t>(f) % base_count;
        const Slot anchor = slots[partner];
        const auto& t = plotseg::find_template(templates, anchor.p.shape_id);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            const int reach = std::max(3, t.mask.width() * 2 / 3);
            int dr = rng.uniform_int(-reach, reach);
            int dc = rng.uniform_int(-reach, reach);
            if (std::max(std::abs(dr), std::abs(dc)) < 3) {
                continue;
            }
            Placement p{t.shape_id, anchor.p.row + dr, anchor.p.col + dc, 1};
            if (p.row < top || p.col < left || p.row + t.mask.height() > bottom ||
                p.col + t.mask.width() > right) {
                continue;
            }
            if (!masks_intersect(p, t, anchor.p, t)) {
                continue;
            }
            const auto box = box_of(p);
            bool clear = true;
            for (std::size_t o = 0; o < slots.size() && clear; ++o) {
                if (o != partner && grow(slots[o].box, 6).intersects(box)) {
                    clear = false;
                }
            }
            if (clear) {
                out.truth.fused.emplace_back(partner, slots.size());
                slots.push_back({anchor.series, p, box});
                placed = true;
            }
        }
        if (!placed) {
            throw Error(ErrorCode::InfeasibleSpec, "could not place fused marker");
        }
    }

    if (spec.connect) {
        for (std::size_t s = 0; s < spec.series.size(); ++s) {
            std::vector<std::pair<int, int>> centres;
            for (const auto& slot : slots) {
                if (slot.series == s) {
                    centres.emplace_back((slot.box.left + slot.box.right) / 2,
                                         (slot.box.top + slot.box.bottom) / 2);
                }
            }
            std::sort(centres.begin(), centres.end());
            for (std::size_t i = 1; i < centres.size(); ++i) {
                draw_line(img, centres[i - 1].second, centres[i - 1].first, centres[i].second,
                          centres[i].first);
            }
        }
    }
    for (const auto& slot : slots) {
        stamp(img, plotseg::find_template(templates, slot.p.shape_id), slot.p.row, slot.p.col);
        out.truth.markers.push_back(slot.p);
    }
    add_speckle(img, spec.noise, rng);
    return out;
}

std::string to_string(NegativeKind kind)
{
    switch (kind) {
    case NegativeKind::Speckle: return "speckle";
    case NegativeKind::TextOnly: return "text";
    case NegativeKind::Gradient: return "gradient";
    case NegativeKind::Table: return "table";
    }
    return "unknown";
}

raster::GrayImage gen_negative_image(NegativeKind kind, int height, int width, std::uint64_t seed)
{
    Rng rng(seed);
    raster::GrayImage img(width, height, kBackground);
    switch (kind) {
    case NegativeKind::Speckle: {
        add_speckle(img, 0.03 + 0.12 * rng.canonical(), rng);
        // a few ink clumps
        const int clumps = rng.uniform_int(3, 12);
        for (int k = 0; k < clumps; ++k) {
            const int r0 = rng.uniform_int(0, height - 1);
            const int c0 = rng.uniform_int(0, width - 1);
            const int rad = rng.uniform_int(2, 6);
            for (int r = r0 - rad; r <= r0 + rad; ++r) {
                for (int c = c0 - rad; c <= c0 + rad; ++c) {
                    if (r >= 0 && r < height && c >= 0 && c < width &&
                        (r - r0) * (r - r0) + (c - c0) * (c - c0) <= rad * rad) {
                        img.set(r, c, kInk);
                    }
                }
            }
        }
        break;
    }
    case NegativeKind::TextOnly: {
        for (int r = 6; r + 8 < height; r += rng.uniform_int(11, 15)) {
            int c = rng.uniform_int(3, 10);
            while (c + 4 < width - 3) {
                const int digits = rng.uniform_int(2, 7);
                draw_label(img, r, c, digits, rng);
                c += digits * 6 + rng.uniform_int(5, 9);
            }
        }
        break;
    }
    case NegativeKind::Gradient: {
        const double gr = rng.canonical() * 2 - 1;
        const double gc = rng.canonical() * 2 - 1;
        const double base = 60 + 120 * rng.canonical();
        const double fr = 0.02 + 0.1 * rng.canonical();
        const double fc = 0.02 + 0.1 * rng.canonical();
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                double v = base + gr * r * 0.5 + gc * c * 0.5 + 35 * std::sin(fr * r) * std::cos(fc * c) +
                           30 * (rng.canonical() - 0.5);
                img.set(r, c, static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
            }
        }
        break;
    }
    case NegativeKind::Table: {
        const int rows = rng.uniform_int(3, 8);
        const int cols = rng.uniform_int(2, 5);
        const int top = rng.uniform_int(3, 12);
        const int left = rng.uniform_int(3, 12);
        const int bottom = height - rng.uniform_int(3, 12);
        const int right = width - rng.uniform_int(3, 12);
        const bool full_grid = rng.canonical() < 0.5;
        for (int i = 0; i <= rows; ++i) {
            const int r = top + (bottom - top) * i / rows;
            if (full_grid || i == 0 || i == 1 || i == rows) {
                draw_line(img, r, left, r, right);
            }
        }
        for (int j = 0; j <= cols; ++j) {
            const int c = left + (right - left) * j / cols;
            if (full_grid) {
                draw_line(img, top, c, bottom, c);
            }
        }
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                const int r = top + (bottom - top) * i / rows + 3;
                const int c = left + (right - left) * j / cols + 3;
                const int cell_w = (right - left) / cols;
                const int digits = std::max(1, std::min(rng.uniform_int(1, 4), (cell_w - 6) / 6));
                if (r + 8 < top + (bottom - top) * (i + 1) / rows) {
                    draw_label(img, r, c, digits, rng);
                }
            }
        }
        break;
    }
    }
    return img;
}

PlotSpec random_plot_spec(Rng& rng, std::uint64_t seed)
{
    static const std::array<const char*, 5> shapes = {"circle", "cross", "diamond", "square",
                                                      "triangle"};
    PlotSpec spec;
    spec.height = rng.uniform_int(120, 200);
    spec.width = rng.uniform_int(150, 240);
    spec.axis_row = spec.height - rng.uniform_int(16, 30);
    spec.axis_col = rng.uniform_int(22, 40);
    const int n_series = rng.uniform_int(1, 3);
    for (int s = 0; s < n_series; ++s) {
        const int size = 7 + 2 * rng.uniform_int(0, 2);
        spec.series.push_back(
            {std::string(shapes[rng.index(shapes.size())]) + "_" + std::to_string(size),
             rng.uniform_int(3, 8)});
    }
    spec.noise = rng.canonical() < 0.5 ? 0.0 : 0.01 * rng.canonical();
    spec.connect = rng.canonical() < 0.5;
    spec.tick_labels = rng.canonical() < 0.8;
    spec.seed = seed;
    spec.caption = plot_caption(rng);
    return spec;
}

std::vector<CorpusItem> gen_classifier_corpus(int n_plots, int n_negatives, std::uint64_t seed,
                                              const std::vector<ShapeTemplate>& templates)
{
    std::vector<CorpusItem> items;
    Rng rng(seed);
    for (int i = 0; i < n_plots; ++i) {
        PlotSpec spec = random_plot_spec(rng, derive_seed(seed, static_cast<std::uint64_t>(i)));
        auto plot = gen_plot_image(spec, templates);
        char name[32];
        std::snprintf(name, sizeof name, "plot_%04d", i);
        items.push_back({name, std::move(plot.image), spec.caption, 1});
    }
    static const std::array<NegativeKind, 4> kinds = {NegativeKind::Speckle, NegativeKind::TextOnly,
                                                      NegativeKind::Gradient, NegativeKind::Table};
    for (int i = 0; i < n_negatives; ++i) {
        const auto kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
        const int h = rng.uniform_int(120, 200);
        const int w = rng.uniform_int(150, 240);
        auto img = gen_negative_image(kind, h, w, derive_seed(seed ^ 0x5eedULL, static_cast<std::uint64_t>(i)));
        char name[40];
        std::snprintf(name, sizeof name, "%s_%04d", to_string(kind).c_str(), i);
        items.push_back({name, std::move(img), negative_caption(rng), -1});
    }
    return items;
}

long RecallTable::total() const
{
    long t = 0;
    for (const auto& r : rows) {
        t += r.total;
    }
    return t;
}

long RecallTable::correct() const
{
    long t = 0;
    for (const auto& r : rows) {
        t += r.correct;
    }
    return t;
}

double RecallTable::recall() const
{
    const long t = total();
    return t == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(t);
}

std::string RecallTable::to_text() const
{
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %7s %10s %9s\n", "Shape", "Total", "# Correct", "% Recall");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-14s %7ld %10ld %9.1f\n", r.shape_id.c_str(), r.total,
                      r.correct, 100.0 * r.recall());
        out << line;
    }
    return out.str();
}

RecallTable eval_disambiguation(int n_images, const OverlapSpec& spec_template,
                                const anneal::AnnealConfig& config, int tol,
                                const std::vector<ShapeTemplate>& templates)
{
    if (n_images < 1) {
        throw Error(ErrorCode::InvalidArgument, "n_images must be >= 1");
    }
    std::map<std::string, RecallRow> rows;
    for (const auto& [id, n] : spec_template.shape_counts) {
        rows[id].shape_id = id;
    }
    RecallTable table;
    for (int i = 0; i < n_images; ++i) {
        OverlapSpec spec = spec_template;
        spec.seed = derive_seed(spec_template.seed, static_cast<std::uint64_t>(i));
        const auto sample = gen_overlap_image(spec, templates);
        anneal::AnnealConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
        const auto result = anneal::anneal(sample.image, templates, cfg);
        const auto report = anneal::match_placements(result.placements, sample.truth, tol);
        for (const auto& [id, sr] : report.per_shape) {
            rows[id].shape_id = id;
            rows[id].total += sr.total;
            rows[id].correct += sr.correct;
        }
        ++table.images;
        if (report.correct == report.total) {
            ++table.images_fully_recovered;
        }
    }
    for (auto& [id, row] : rows) {
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace plotminer::synth
