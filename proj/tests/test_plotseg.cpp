#include "doctest.h"
#include "oracles.hpp"

#include "plotminer/error.hpp"
#include "plotminer/plotseg.hpp"

#include <set>

using namespace plotminer;
using namespace plotminer::plotseg;

namespace {

BinaryImage frame(int w, int h, int row, int col)
{
    BinaryImage img(w, h);
    for (int c = 0; c < w; ++c) {
        img.set(row, c, true);
    }
    for (int r = 0; r < h; ++r) {
        img.set(r, col, true);
    }
    return img;
}

void stamp(BinaryImage& img, const BinaryImage& mask, int row, int col)
{
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (mask.at(r, c)) {
                img.set(row + r, col + c, true);
            }
        }
    }
}

ConnectedComponent block(int top, int left, int h, int w, int label)
{
    ConnectedComponent c;
    c.label = label;
    c.bbox = Box{top, left, top + h - 1, left + w - 1};
    c.pixel_count = static_cast<long>(h) * w;
    c.mask = BinaryImage(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 1));
    return c;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("axes of a synthetic frame")
{
    const auto img = frame(100, 100, 90, 10);
    const auto axes = detect_axes(img);
    CHECK(axis_row(axes.x_axis, img) == 90);
    CHECK(axis_col(axes.y_axis, img) == 10);

    BinaryImage only_h(100, 100);
    for (int c = 0; c < 100; ++c) {
        only_h.set(50, c, true);
    }
    CHECK(code_of([&] { detect_axes(only_h); }) == ErrorCode::AxesNotFound);
    CHECK(code_of([&] { detect_axes(BinaryImage(30, 30)); }) == ErrorCode::AxesNotFound);
}

TEST_CASE("regions from the guard-band rule")
{
    const auto img = frame(100, 100, 90, 10);
    const auto regions = segment_regions(img, detect_axes(img), 2);
    CHECK(regions.plotting_region == Box{0, 13, 87, 99});
    CHECK(regions.x_axis_region.top == 91);
    CHECK(regions.y_axis_region.right == 9);

    const auto last = frame(100, 100, 99, 10);
    CHECK(code_of([&] { segment_regions(last, detect_axes(last)); }) == ErrorCode::DegenerateRegion);
}

TEST_CASE("regions never share a pixel")
{
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const int w = rng.uniform_int(40, 120);
        const int h = rng.uniform_int(40, 120);
        const auto img = frame(w, h, rng.uniform_int(h / 2, h - 2), rng.uniform_int(1, w / 2));
        const auto reg = segment_regions(img, detect_axes(img), rng.uniform_int(0, 3));
        CHECK_FALSE(reg.x_axis_region.intersects(reg.y_axis_region));
        CHECK_FALSE(reg.x_axis_region.intersects(reg.plotting_region));
        CHECK_FALSE(reg.y_axis_region.intersects(reg.plotting_region));
    }
}

TEST_CASE("connected component examples")
{
    BinaryImage two(5, 2);
    for (int r = 0; r < 2; ++r) {
        two.set(r, 0, true);
        two.set(r, 1, true);
        two.set(r, 3, true);
        two.set(r, 4, true);
    }
    const auto cc = connected_components(two);
    REQUIRE(cc.size() == 2u);
    CHECK(cc[0].pixel_count == 4);
    CHECK(cc[1].pixel_count == 4);

    BinaryImage dot(10, 10);
    dot.set(5, 7, true);
    const auto one = connected_components(dot);
    REQUIRE(one.size() == 1u);
    CHECK(one[0].centroid_row == 5.0);
    CHECK(one[0].centroid_col == 7.0);

    BinaryImage diag(2, 2);
    diag.set(0, 0, true);
    diag.set(1, 1, true);
    CHECK(connected_components(diag).size() == 1u);
    CHECK(connected_components(BinaryImage(4, 4)).empty());
}

TEST_CASE("components partition the foreground")
{
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const int w = rng.uniform_int(1, 30);
        const int h = rng.uniform_int(1, 30);
        const auto img = oracle::random_binary(rng, w, h, rng.canonical() * 0.6);
        const auto comps = connected_components(img);
        CHECK(static_cast<int>(comps.size()) == oracle::count_components_8(img));
        BinaryImage seen(w, h);
        long total = 0;
        for (const auto& c : comps) {
            total += c.pixel_count;
            CHECK(c.mask.count() == c.pixel_count);
            for (int r = 0; r < c.mask.height(); ++r) {
                for (int q = 0; q < c.mask.width(); ++q) {
                    if (c.mask.at(r, q)) {
                        CHECK_FALSE(seen.at(c.bbox.top + r, c.bbox.left + q));
                        seen.set(c.bbox.top + r, c.bbox.left + q, true);
                    }
                }
            }
        }
        CHECK(seen == img);
        CHECK(total == img.count());
    }
}

TEST_CASE("text grouping examples")
{
    const std::vector<ConnectedComponent> row = {block(10, 0, 5, 5, 0), block(10, 8, 5, 5, 1),
                                                 block(10, 16, 5, 5, 2)};
    const auto boxes = group_text_candidates(row);
    REQUIRE(boxes.size() == 1u);
    CHECK(boxes[0].mean_gap == doctest::Approx(3.0));
    CHECK(boxes[0].member_components.size() == 3u);
    CHECK(boxes[0].bbox == Box{10, 0, 14, 20});

    const std::vector<ConnectedComponent> apart = {block(0, 0, 5, 5, 0), block(20, 8, 5, 5, 1)};
    CHECK(group_text_candidates(apart).empty());
    CHECK(group_text_candidates({block(3, 3, 5, 5, 0)}).empty());
}

TEST_CASE("text boxes are pairwise disjoint")
{
    Rng rng(29);
    for (int i = 0; i < 200; ++i) {
        std::vector<ConnectedComponent> comps;
        const int n = rng.uniform_int(2, 14);
        for (int k = 0; k < n; ++k) {
            comps.push_back(block(rng.uniform_int(0, 40), rng.uniform_int(0, 80), rng.uniform_int(3, 7),
                                  rng.uniform_int(2, 6), k));
        }
        const auto boxes = group_text_candidates(comps);
        for (std::size_t a = 0; a < boxes.size(); ++a) {
            for (std::size_t b = a + 1; b < boxes.size(); ++b) {
                CHECK_FALSE(boxes[a].bbox.intersects(boxes[b].bbox));
            }
        }
    }
}

TEST_CASE("remove_lines examples")
{
    BinaryImage line(40, 30);
    for (int c = 0; c < 40; ++c) {
        line.set(12, c, true);
    }
    const auto lines = features::hough_lines(line);
    REQUIRE_FALSE(lines.empty());
    CHECK(remove_lines(line, lines, {.thickness = 1}).count() == 0);
    CHECK(remove_lines(line, {}) == line);

    const auto diamond = diamond_mask(7);
    auto crossed = line;
    stamp(crossed, diamond, 9, 15);
    const auto kept = remove_lines(crossed, features::hough_lines(crossed), {.thickness = 1});
    long in_box = 0;
    for (int r = 9; r < 16; ++r) {
        for (int c = 15; c < 22; ++c) {
            in_box += kept.at(r, c) ? 1 : 0;
        }
    }
    CHECK(std::abs(in_box - diamond.count()) <= 0.15 * diamond.count());
}

TEST_CASE("remove_lines never adds ink")
{
    Rng rng(33);
    const auto library = default_template_library();
    for (int i = 0; i < 200; ++i) {
        const int w = rng.uniform_int(30, 80);
        const int h = rng.uniform_int(30, 80);
        auto img = oracle::random_binary(rng, w, h, 0.02);
        for (int k = rng.uniform_int(0, 3); k > 0; --k) {
            const int r = rng.uniform_int(0, h - 1);
            for (int c = 0; c < w; ++c) {
                img.set(r, c, true);
            }
        }
        for (int k = rng.uniform_int(0, 5); k > 0; --k) {
            const auto& t = library[rng.index(library.size())];
            stamp(img, t.mask, rng.uniform_int(0, h - t.mask.height()), rng.uniform_int(0, w - t.mask.width()));
        }
        const auto out = remove_lines(img, features::hough_lines(img), {.thickness = 1.0 + rng.uniform_int(0, 2)});
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (out.at(r, c)) {
                    CHECK(img.at(r, c));
                }
            }
        }
        const auto thin = remove_thin_strokes(img);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (thin.at(r, c)) {
                    CHECK(img.at(r, c));
                }
            }
        }
    }
}

TEST_CASE("classify_component examples")
{
    const auto library = default_template_library();
    const auto& d9 = find_template(library, "diamond_9");
    BinaryImage img(30, 30);
    stamp(img, d9.mask, 5, 5);
    auto comps = connected_components(img);
    REQUIRE(comps.size() == 1u);
    const auto m = classify_component(comps[0], library);
    REQUIRE(m.shape_id);
    CHECK(*m.shape_id == "diamond_9");
    CHECK(m.best_f1 == 1.0);

    BinaryImage fused(30, 30);
    stamp(fused, d9.mask, 5, 5);
    stamp(fused, d9.mask, 8, 10);
    comps = connected_components(fused);
    REQUIRE(comps.size() == 1u);
    CHECK(overlap_f1(comps[0].mask, d9.mask) < 0.85);
    const auto single = classify_component(comps[0], {d9});
    CHECK_FALSE(single.shape_id);
}

TEST_CASE("overlap score is symmetric and 1 only for shifted copies")
{
    Rng rng(43);
    for (int i = 0; i < 200; ++i) {
        const auto a = oracle::random_binary(rng, rng.uniform_int(2, 12), rng.uniform_int(2, 12), 0.5);
        const auto b = oracle::random_binary(rng, rng.uniform_int(2, 12), rng.uniform_int(2, 12), 0.5);
        if (a.count() == 0 || b.count() == 0) {
            continue;
        }
        CHECK(overlap_f1(a, b) == doctest::Approx(overlap_f1(b, a)));
        CHECK(overlap_f1(a, a) == 1.0);
        if (a.count() != b.count()) {
            CHECK(overlap_f1(a, b) < 1.0);
        }
    }
}

TEST_CASE("template library")
{
    const auto library = default_template_library();
    std::set<std::string> ids;
    for (const auto& t : library) {
        ids.insert(t.shape_id);
        CHECK(t.area() > 0);
    }
    CHECK(ids.size() == library.size());
    CHECK(ids.count("diamond_7"));
    CHECK(ids.count("cross_15"));
    CHECK(code_of([&] { find_template(library, "hexagon_9"); }) == ErrorCode::UnknownShape);

    const auto dir = oracle::temp_dir("templates");
    const std::vector<ShapeTemplate> some = {library[0], library[3], library[7]};
    save_template_library(some, dir);
    const auto loaded = load_template_library(dir);
    REQUIRE(loaded.size() == 3u);
    for (const auto& t : some) {
        CHECK(find_template(loaded, t.shape_id).mask == t.mask);
    }
}
