#include "doctest.h"
#include "oracles.hpp"

#include "plotminer/error.hpp"
#include "plotminer/features.hpp"
#include "plotminer/plotseg.hpp"
#include "plotminer/synth.hpp"

using namespace plotminer;
using namespace plotminer::synth;

TEST_CASE("overlap templates")
{
    const auto lib = overlap_templates();
    REQUIRE(lib.size() == 2u);
    CHECK(lib[0].shape_id == "diamond_11");
    CHECK(lib[1].shape_id == "triangle_11");
    CHECK(lib[0].area() == 61);
    CHECK(lib[1].area() == 61);
}

TEST_CASE("single shape image is its own rendering")
{
    const auto lib = overlap_templates();
    OverlapSpec spec;
    spec.shape_counts = {{"diamond_11", 1}};
    spec.min_overlap_pairs = 0;
    const auto img = gen_overlap_image(spec, lib);
    REQUIRE(img.truth.size() == 1u);
    CHECK(img.image == anneal::render(img.truth, lib, 90, 90));
}

TEST_CASE("three diamonds and two triangles with an overlap")
{
    const auto lib = overlap_templates();
    const auto spec = default_overlap_spec(42);
    const auto img = gen_overlap_image(spec, lib);
    CHECK(img.truth.size() == 5u);
    CHECK(img.image.count() <= 5 * 61);
    CHECK(count_overlapping_pairs(img.truth, lib) >= 1);
    const auto again = gen_overlap_image(spec, lib);
    CHECK(again.image == img.image);
    CHECK(again.truth == img.truth);
}

TEST_CASE("generated overlap images equal the render of their truth")
{
    const auto lib = overlap_templates();
    for (int i = 0; i < 200; ++i) {
        auto spec = default_overlap_spec(derive_seed(123, i));
        spec.shape_counts = {{"diamond_11", 1 + i % 4}, {"triangle_11", i % 3}};
        spec.min_overlap_pairs = i % 2;
        const auto img = gen_overlap_image(spec, lib);
        CHECK(img.image == oracle::render(img.truth, lib, spec.height, spec.width));
        CHECK(count_overlapping_pairs(img.truth, lib) >= spec.min_overlap_pairs);
        for (const auto& p : img.truth) {
            const auto [mr, mc] = anneal::placement_bounds(plotseg::find_template(lib, p.shape_id), 90, 90);
            CHECK(p.row >= 0);
            CHECK(p.col >= 0);
            CHECK(p.row <= mr);
            CHECK(p.col <= mc);
        }
    }
}

TEST_CASE("infeasible overlap specs")
{
    const auto lib = overlap_templates();
    OverlapSpec spec;
    spec.height = spec.width = 8;
    spec.shape_counts = {{"diamond_11", 1}};
    CHECK_THROWS_AS(gen_overlap_image(spec, lib), Error);
    spec = OverlapSpec{};
    CHECK_THROWS_AS(gen_overlap_image(spec, lib), Error);
}

TEST_CASE("empty plot shows two orthogonal dominant lines")
{
    PlotSpec spec;
    spec.tick_labels = false;
    const auto plot = gen_plot_image(spec, plotseg::default_template_library());
    const auto bin = raster::binarize(plot.image);
    const auto lines = features::hough_lines(bin);
    REQUIRE(lines.size() >= 2u);
    CHECK(features::mutual_angle(lines[0].orientation_deg, lines[1].orientation_deg) ==
          doctest::Approx(90.0));
    if (lines.size() > 2) {
        CHECK(lines[2].votes < lines[1].votes / 2);
    }
    CHECK(plot.truth.axis_row == spec.axis_row);
    CHECK(plot.truth.axis_col == spec.axis_col);
}

TEST_CASE("ten separate diamonds survive line removal as diamonds")
{
    const auto lib = plotseg::default_template_library();
    PlotSpec spec;
    spec.series = {{"diamond_9", 10}};
    const auto plot = gen_plot_image(spec, lib);
    REQUIRE(plot.truth.markers.size() == 10u);
    const auto bin = raster::binarize(plot.image);
    const auto regions = plotseg::segment_regions(bin, plotseg::detect_axes(bin));
    const auto area = raster::crop(bin, regions.plotting_region);
    const auto cleaned = plotseg::remove_lines(area, features::hough_lines(area));
    int diamonds = 0;
    for (const auto& c : plotseg::connected_components(cleaned)) {
        if (c.pixel_count < 9) {
            continue;
        }
        const auto m = plotseg::classify_component(c, lib);
        diamonds += m.shape_id == std::optional<std::string>("diamond_9") ? 1 : 0;
    }
    CHECK(diamonds == 10);
}

TEST_CASE("plot generation is deterministic")
{
    const auto lib = plotseg::default_template_library();
    Rng a(5);
    Rng b(5);
    for (int i = 0; i < 10; ++i) {
        const auto sa = random_plot_spec(a, derive_seed(5, i));
        const auto sb = random_plot_spec(b, derive_seed(5, i));
        const auto pa = gen_plot_image(sa, lib);
        const auto pb = gen_plot_image(sb, lib);
        CHECK(pa.image == pb.image);
        CHECK(pa.truth.markers == pb.truth.markers);
        CHECK(pa.truth.caption == pb.truth.caption);
    }
}

TEST_CASE("classifier corpus is balanced and reproducible")
{
    const auto lib = plotseg::default_template_library();
    const auto c1 = gen_classifier_corpus(6, 6, 9, lib);
    const auto c2 = gen_classifier_corpus(6, 6, 9, lib);
    REQUIRE(c1.size() == 12u);
    int plots = 0;
    for (std::size_t i = 0; i < c1.size(); ++i) {
        plots += c1[i].label == 1 ? 1 : 0;
        CHECK(c1[i].image == c2[i].image);
        CHECK(c1[i].caption == c2[i].caption);
        CHECK(c1[i].name == c2[i].name);
    }
    CHECK(plots == 6);
    for (auto kind : {NegativeKind::Speckle, NegativeKind::TextOnly, NegativeKind::Gradient, NegativeKind::Table}) {
        const auto g = gen_negative_image(kind, 100, 120, 3);
        CHECK(g.height() == 100);
        CHECK(g.width() == 120);
        CHECK(g == gen_negative_image(kind, 100, 120, 3));
    }
}

TEST_CASE("evaluation harness")
{
    const auto lib = overlap_templates();
    OverlapSpec spec = default_overlap_spec(8);
    anneal::AnnealConfig none;
    none.max_iterations = 0;
    const auto zero = eval_disambiguation(3, spec, none, 2, lib);
    CHECK(zero.recall() == 0.0);
    for (const auto& r : zero.rows) {
        CHECK(r.correct == 0);
        CHECK(r.total > 0);
    }
    anneal::AnnealConfig cfg;
    cfg.max_iterations = 3000;
    const auto a = eval_disambiguation(3, spec, cfg, 2, lib);
    const auto b = eval_disambiguation(3, spec, cfg, 2, lib);
    CHECK(a.to_text() == b.to_text());
    CHECK(a.to_text().find("Shape") != std::string::npos);
    CHECK(a.to_text().find("% Recall") != std::string::npos);
    CHECK(a.total() == 15);
}
