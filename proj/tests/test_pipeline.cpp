#include "doctest.h"
#include "oracles.hpp"

#include "plotminer/cli.hpp"
#include "plotminer/error.hpp"
#include "plotminer/io.hpp"
#include "plotminer/pipeline.hpp"
#include "plotminer/synth.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace plotminer;
using plotminer::io::Json;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args)
{
    args.insert(args.begin(), "plotminer");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const svm::SvmModel& plot_model()
{
    static const svm::SvmModel model = [] {
        const auto lib = plotseg::default_template_library();
        const auto corpus = synth::gen_classifier_corpus(24, 24, 17, lib);
        std::vector<svm::Sample> x;
        std::vector<int> y;
        for (const auto& item : corpus) {
            x.push_back(features::extract_features(item.image, item.caption).dense());
            y.push_back(item.label);
        }
        return svm::train(x, y);
    }();
    return model;
}

std::pair<double, double> truth_centroid(const anneal::Placement& p,
                                         const std::vector<plotseg::ShapeTemplate>& lib)
{
    const auto [cr, cc] = plotseg::find_template(lib, p.shape_id).centroid();
    return {p.row + cr, p.col + cc};
}

}  // namespace

TEST_CASE("canonical json formatting")
{
    Json j = {{"b", 1.0}, {"a", -0.0000001}, {"c", std::nan("")}, {"d", 3}, {"e", 2.5}};
    CHECK(io::dump_canonical(j) == R"({"a":0.000000,"b":1.000000,"c":null,"d":3,"e":2.500000})");
}

TEST_CASE("anneal config json")
{
    anneal::AnnealConfig cfg;
    cfg.max_iterations = 1234;
    cfg.temp_constant_e = 0.25;
    cfg.initial_temperature = 7.0;
    const auto back = io::anneal_config_from_json(io::to_json(cfg));
    CHECK(back.max_iterations == 1234);
    CHECK(back.temp_constant_e == 0.25);
    CHECK(back.initial_temperature == 7.0);
    auto code = [](const Json& j) {
        try {
            io::anneal_config_from_json(j);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code(Json{{"bogus", 1}}) == ErrorCode::MalformedConfig);
    CHECK(code(Json{{"temp_constant_e", 2.0}}) == ErrorCode::MalformedConfig);
}

TEST_CASE("ten direct diamonds")
{
    const auto lib = plotseg::default_template_library();
    synth::PlotSpec spec;
    spec.series = {{"diamond_9", 10}};
    const auto plot = synth::gen_plot_image(spec, lib);
    const auto res = pipeline::extract(plot.image, "ten", std::nullopt, nullptr, lib, {});
    CHECK(res.is_plot);
    REQUIRE(res.data_points.size() == 10u);
    for (const auto& m : plot.truth.markers) {
        const auto [tr, tc] = truth_centroid(m, lib);
        const bool found = std::any_of(res.data_points.begin(), res.data_points.end(), [&](const auto& d) {
            return d.origin == "direct" && d.shape_id == m.shape_id && std::abs(d.row - tr) <= 2 &&
                   std::abs(d.col - tc) <= 2;
        });
        CHECK(found);
    }
    for (const auto& d : res.data_points) {
        CHECK(d.origin == "direct");
    }
}

TEST_CASE("a fused pair is annealed")
{
    const auto lib = plotseg::default_template_library();
    synth::PlotSpec spec;
    spec.series = {{"diamond_9", 6}};
    spec.fused_pairs = 1;
    const auto plot = synth::gen_plot_image(spec, lib);
    REQUIRE(plot.truth.fused.size() == 1u);
    const auto res = pipeline::extract(plot.image, "fused", std::nullopt, nullptr, lib, {});
    const auto annealed = std::count_if(res.data_points.begin(), res.data_points.end(),
                                        [](const auto& d) { return d.origin == "annealed"; });
    CHECK(annealed >= 1);
}

TEST_CASE("non-plot input")
{
    const auto lib = plotseg::default_template_library();
    const auto noise = synth::gen_negative_image(synth::NegativeKind::Speckle, 150, 180, 4);
    const auto res = pipeline::extract(noise, "noise", std::string("photo of a cat"), &plot_model(), lib, {});
    CHECK_FALSE(res.is_plot);
    CHECK(res.data_points.empty());

    synth::PlotSpec spec;
    spec.series = {{"square_9", 5}};
    spec.caption = "plot of the slope distribution";
    const auto plot = synth::gen_plot_image(spec, lib);
    CHECK(pipeline::classify_image(plot.image, spec.caption, plot_model(), {}).label == 1);
}

TEST_CASE("extraction json round trips byte for byte")
{
    const auto lib = plotseg::default_template_library();
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        auto spec = synth::random_plot_spec(rng, derive_seed(3, i));
        spec.fused_pairs = i % 2;
        const auto plot = synth::gen_plot_image(spec, lib);
        const auto res = pipeline::extract(plot.image, "p" + std::to_string(i), spec.caption, nullptr, lib, {});
        const auto text = io::dump_canonical(pipeline::to_json(res), 2);
        const auto back = pipeline::extraction_from_json(Json::parse(text));
        CHECK(io::dump_canonical(pipeline::to_json(back), 2) == text);
    }
}

TEST_CASE("extraction is deterministic")
{
    const auto lib = plotseg::default_template_library();
    Rng rng(8);
    for (int i = 0; i < 4; ++i) {
        auto spec = synth::random_plot_spec(rng, derive_seed(8, i));
        spec.fused_pairs = 1;
        const auto plot = synth::gen_plot_image(spec, lib);
        const auto a = pipeline::extract(plot.image, "x", spec.caption, nullptr, lib, {});
        const auto b = pipeline::extract(plot.image, "x", spec.caption, nullptr, lib, {});
        CHECK(io::dump_canonical(pipeline::to_json(a)) == io::dump_canonical(pipeline::to_json(b)));
    }
}

TEST_CASE("cli usage errors exit with 2")
{
    ::unsetenv("PLOTMINER_TEMPLATES");
    CHECK(run({}).code == 2);
    CHECK(run({"classify"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"eval", "--temp-const", "1.5", "--images", "1"}).code == 2);
    CHECK(run({"train", "x.jsonl", "--folds", "1"}).code == 2);
}

TEST_CASE("cli failures exit with 1")
{
    const auto dir = oracle::temp_dir("cli_fail");
    const auto model = dir / "m.txt";
    svm::save_model(plot_model(), model);
    const auto r = run({"classify", (dir / "nope.pgm").string(), "--model", model.string()});
    CHECK(r.code == 1);
    CHECK(r.out.find("error") != std::string::npos);
    CHECK(run({"extract", (dir / "nope.pgm").string()}).code == 1);
}

TEST_CASE("cli classify verdicts")
{
    const auto dir = oracle::temp_dir("cli_classify");
    const auto lib = plotseg::default_template_library();
    svm::save_model(plot_model(), dir / "m.txt");
    synth::PlotSpec spec;
    spec.series = {{"circle_9", 6}};
    raster::write_pgm(synth::gen_plot_image(spec, lib).image, dir / "plot.pgm");
    raster::write_pgm(synth::gen_negative_image(synth::NegativeKind::Speckle, 150, 180, 2), dir / "noise.pgm");
    const auto r = run({"classify", (dir / "plot.pgm").string(), (dir / "noise.pgm").string(), "--model",
                        (dir / "m.txt").string()});
    CHECK(r.code == 0);
    std::istringstream lines(r.out);
    std::string first;
    std::string second;
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(Json::parse(first)["is_plot"] == true);
    CHECK(Json::parse(second)["is_plot"] == false);
}

TEST_CASE("cli train on a separable corpus")
{
    const auto dir = oracle::temp_dir("cli_train");
    Rng rng(51);
    {
        std::ofstream corpus(dir / "corpus.jsonl");
        for (int i = 0; i < 60; ++i) {
            const int label = i % 2 ? 1 : -1;
            std::vector<double> f(4);
            for (auto& v : f) {
                v = rng.canonical();
            }
            f[0] = label > 0 ? 0.7 + 0.3 * rng.canonical() : 0.3 * rng.canonical();
            corpus << Json{{"label", label}, {"features", f}}.dump() << '\n';
        }
    }
    const auto r = run({"train", (dir / "corpus.jsonl").string(), "--folds", "3", "--out", (dir / "m.txt").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("100.00") != std::string::npos);
    CHECK(r.out.find("seed: 42") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "m.txt"));
}

TEST_CASE("cli gen, disambiguate and eval")
{
    const auto dir = oracle::temp_dir("cli_gen");
    auto r = run({"gen", "overlap", "--out", dir.string(), "--count", "1", "--seed", "4"});
    REQUIRE(r.code == 0);
    const auto image = dir / "overlap_000.pgm";
    REQUIRE(std::filesystem::exists(image));
    r = run({"disambiguate", image.string(), "--seed", "4"});
    CHECK(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(j.contains("placements"));
    CHECK(j["match"]["recall"].get<double>() >= 0.0);

    const auto again = run({"disambiguate", image.string(), "--seed", "4"});
    CHECK(again.out == r.out);

    r = run({"eval", "--images", "2", "--iters", "0"});
    CHECK(r.code == 0);
    CHECK(r.out.find("images fully recovered: 0/2") != std::string::npos);
}
