#include "plotminer/cli.hpp"

#include "plotminer/error.hpp"
#include "plotminer/io.hpp"
#include "plotminer/pipeline.hpp"
#include "plotminer/rng.hpp"
#include "plotminer/svm.hpp"
#include "plotminer/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace plotminer::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by most subcommands; unset strings mean "not given".
struct Common {
    std::string model;
    std::string templates;
    std::string lexicon;
    std::string config;
    std::string out;
    std::uint64_t seed = 42;
    bool invert = false;
    long iters = -1;
    double temp_const = -1;
    CLI::Option* seed_opt = nullptr;
};

void add_seed(CLI::App* app, Common& c)
{
    c.seed_opt = app->add_option("--seed", c.seed, "Random seed (default 42)");
}

void add_anneal_overrides(CLI::App* app, Common& c)
{
    app->add_option("--iters", c.iters, "Annealing iterations");
    app->add_option("--temp-const", c.temp_const, "Cooling constant e, T <- T(1-e)");
}

std::vector<plotseg::ShapeTemplate> resolve_templates(const std::string& dir)
{
    if (!dir.empty()) {
        return plotseg::load_template_library(dir);
    }
    if (const char* env = std::getenv("PLOTMINER_TEMPLATES"); env != nullptr && *env != '\0') {
        return plotseg::load_template_library(env);
    }
    return plotseg::default_template_library();
}

// Config file first, then explicit flags.
pipeline::ExtractConfig resolve_config(const Common& c)
{
    pipeline::ExtractConfig cfg;
    if (!c.config.empty()) {
        cfg = pipeline::extract_config_from_json(io::read_json_file(c.config));
    }
    if (!c.lexicon.empty()) {
        cfg.features.lexicon = features::load_lexicon(c.lexicon);
    }
    if (c.seed_opt != nullptr && (c.seed_opt->count() > 0 || c.config.empty())) {
        cfg.anneal.seed = c.seed;
    }
    if (c.iters >= 0) {
        cfg.anneal.max_iterations = c.iters;
    }
    if (c.temp_const >= 0) {
        cfg.anneal.temp_constant_e = c.temp_const;
    }
    if (c.invert) {
        cfg.invert = true;
    }
    try {
        cfg.anneal.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

// Writes to --out when given, otherwise to the command's stdout.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) {
                throw Error(ErrorCode::IoError, "cannot write " + path);
            }
            stream_ = file_.get();
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

std::string caption_stem(const fs::path& p)
{
    const std::string name = p.filename().string();
    const std::string suffix = ".caption.txt";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
        return name.substr(0, name.size() - suffix.size());
    }
    return p.stem().string();
}

// Explicit caption files are paired by stem; otherwise a <stem>.caption.txt
// sidecar next to the image is used when it exists.
std::optional<std::string> find_caption(const fs::path& image,
                                        const std::map<std::string, fs::path>& explicit_captions)
{
    const std::string stem = image.stem().string();
    if (auto it = explicit_captions.find(stem); it != explicit_captions.end()) {
        return io::read_text_file(it->second);
    }
    const fs::path sidecar = image.parent_path() / (stem + ".caption.txt");
    if (fs::exists(sidecar)) {
        return io::read_text_file(sidecar);
    }
    return std::nullopt;
}

features::FeatureVector features_from_json(const Json& j, std::size_t lexicon_size)
{
    std::optional<std::vector<double>> is;
    std::optional<std::vector<double>> ca;
    std::optional<std::vector<bool>> ct;
    if (j.contains("is")) {
        is = j.at("is").get<std::vector<double>>();
    }
    if (j.contains("ca")) {
        ca = j.at("ca").get<std::vector<double>>();
    }
    if (j.contains("ct")) {
        std::vector<bool> bits;
        for (const auto& v : j.at("ct")) {
            bits.push_back(v.is_boolean() ? v.get<bool>() : v.get<double>() != 0);
        }
        lexicon_size = bits.size();
        ct = std::move(bits);
    }
    return features::assemble_feature_vector(is, ca, ct, lexicon_size);
}

void print_confusion(std::ostream& os, const std::string& title, const svm::ConfusionMatrix& m)
{
    char line[128];
    os << title << '\n';
    std::snprintf(line, sizeof line, "%-8s %8s %8s\n", "Class", "Non 2-D", "2-D");
    os << line;
    std::snprintf(line, sizeof line, "%-8s %8ld %8ld\n", "Non 2-D", m.tn, m.fp);
    os << line;
    std::snprintf(line, sizeof line, "%-8s %8ld %8ld\n", "2-D", m.fn, m.tp);
    os << line;
}

std::string family_label(features::FamilyMask m)
{
    if (m == features::FamilyMask::all()) {
        return "All";
    }
    const std::string s = m.to_string();
    if (s.find('+') == std::string::npos) {
        return "Only " + s;
    }
    std::string spaced;
    for (char ch : s) {
        spaced += ch == '+' ? std::string(" + ") : std::string(1, ch);
    }
    return spaced;
}

std::map<std::string, int> parse_shape_counts(const std::vector<std::string>& items)
{
    std::map<std::string, int> counts;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("--shape expects ID=COUNT, got '" + item + "'");
        }
        int n = 0;
        try {
            n = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("bad count in '" + item + "'");
        }
        if (n < 1) {
            throw UsageError("shape counts must be >= 1");
        }
        counts[item.substr(0, eq)] += n;
    }
    return counts;
}

std::vector<plotseg::ShapeTemplate> subset(const std::vector<plotseg::ShapeTemplate>& lib,
                                          const std::map<std::string, int>& counts)
{
    std::vector<plotseg::ShapeTemplate> out;
    for (const auto& [id, n] : counts) {
        out.push_back(plotseg::find_template(lib, id));
    }
    return out;
}

// ---- classify --------------------------------------------------------------

struct ClassifyArgs {
    Common common;
    std::vector<std::string> images;
    std::vector<std::string> captions;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err)
{
    const auto cfg = resolve_config(a.common);
    const auto model = svm::load_model(a.common.model);
    std::map<std::string, fs::path> captions;
    for (const auto& c : a.captions) {
        captions[caption_stem(c)] = c;
    }
    Sink sink(a.common.out, out);
    bool failed = false;
    for (const auto& file : a.images) {
        Json line;
        try {
            const auto img = raster::load_image(file);
            const auto caption = find_caption(file, captions);
            const auto pred = pipeline::classify_image(img, caption, model, cfg.features, cfg.invert);
            line = Json{{"file", file}, {"is_plot", pred.label == 1}, {"score", pred.score}};
        } catch (const Error& e) {
            failed = true;
            err << file << ": " << e.what() << '\n';
            line = Json{{"file", file}, {"error", e.what()}};
        }
        sink.get() << io::dump_canonical(line) << '\n';
    }
    return failed ? kFailed : kOk;
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
    Common common;
    std::string image;
    std::string caption;
    std::string dump_segmentation;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out, std::ostream& /*err*/)
{
    const auto cfg = resolve_config(a.common);
    const auto templates = resolve_templates(a.common.templates);
    std::optional<svm::SvmModel> model;
    if (!a.common.model.empty()) {
        model = svm::load_model(a.common.model);
    }
    const auto img = raster::load_image(a.image);
    std::optional<std::string> caption;
    if (!a.caption.empty()) {
        caption = io::read_text_file(a.caption);
    } else {
        caption = find_caption(a.image, {});
    }
    Json segmentation;
    const auto result = pipeline::extract(img, a.image, caption, model ? &*model : nullptr, templates,
                                          cfg, a.dump_segmentation.empty() ? nullptr : &segmentation);
    if (!a.dump_segmentation.empty()) {
        io::write_text_file(a.dump_segmentation, io::dump_canonical(segmentation, 2) + "\n");
    }
    Sink sink(a.common.out, out);
    sink.get() << io::dump_canonical(pipeline::to_json(result), 2) << '\n';
    return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string corpus;
    int folds = 3;
    double c = 1.0;
    int epochs = 200;
    std::string families = "ALL";
    bool ablation = false;
    double test_fraction = 0;
};

// One corpus record: family-structured features, or a plain vector whose
// length does not match the [IS | CA | CT] layout.
struct TrainRecord {
    std::optional<features::FeatureVector> families;
    svm::Sample raw;
};

TrainRecord record_features(const Json& f, std::size_t lexicon_size)
{
    TrainRecord rec;
    if (f.is_object()) {
        rec.families = features_from_json(f, lexicon_size);
        return rec;
    }
    const auto values = f.get<std::vector<double>>();
    constexpr std::size_t fixed = features::kIsDim + features::kCaDim;
    if (values.size() == fixed + lexicon_size) {
        std::vector<bool> ct;
        for (std::size_t i = fixed; i < values.size(); ++i) {
            ct.push_back(values[i] != 0);
        }
        rec.families = features::assemble_feature_vector(
            std::vector<double>(values.begin(), values.begin() + features::kIsDim),
            std::vector<double>(values.begin() + features::kIsDim, values.begin() + fixed), ct,
            lexicon_size);
    } else {
        rec.raw = values;
    }
    return rec;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err)
{
    const auto cfg = resolve_config(a.common);
    features::FamilyMask mask;
    try {
        mask = features::FamilyMask::parse(a.families);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (a.test_fraction < 0 || a.test_fraction >= 1) {
        throw UsageError("--test-fraction must lie in [0, 1)");
    }
    std::ifstream in(a.corpus);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + a.corpus);
    }
    const fs::path base = fs::path(a.corpus).parent_path();
    std::vector<TrainRecord> records;
    std::vector<int> labels;
    std::string text;
    int line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = a.corpus + ":" + std::to_string(line_no);
        try {
            const Json rec = Json::parse(text);
            const int label = rec.at("label").get<int>();
            if (label != 1 && label != -1) {
                throw Error(ErrorCode::MalformedConfig, "label must be 1 or -1");
            }
            if (rec.contains("features")) {
                records.push_back(record_features(rec.at("features"), cfg.features.lexicon.size()));
            } else {
                const fs::path image = base / rec.at("image").get<std::string>();
                std::optional<std::string> caption;
                if (rec.contains("caption")) {
                    caption = rec.at("caption").get<std::string>();
                }
                records.push_back({features::extract_features(raster::load_image(image), caption,
                                                              cfg.features, cfg.invert),
                                   {}});
            }
            labels.push_back(label);
        } catch (const Json::exception& e) {
            err << where << ": " << e.what() << '\n';
            return kFailed;
        } catch (const Error& e) {
            err << where << ": " << e.what() << '\n';
            return kFailed;
        }
    }
    const bool any_raw = std::any_of(records.begin(), records.end(),
                                     [](const TrainRecord& r) { return !r.families; });
    if (any_raw && (a.ablation || !(mask == features::FamilyMask::all()))) {
        throw UsageError("family selection needs feature vectors in the [IS | CA | CT] layout");
    }
    auto dense = [&](features::FamilyMask m, const std::vector<std::size_t>& idx) {
        std::vector<svm::Sample> xs;
        for (auto i : idx) {
            xs.push_back(records[i].families ? features::restrict_to(*records[i].families, m).dense()
                                             : records[i].raw);
        }
        return xs;
    };
    auto pick = [&](const std::vector<std::size_t>& idx) {
        std::vector<int> ys;
        for (auto i : idx) {
            ys.push_back(labels[i]);
        }
        return ys;
    };
    svm::TrainParams params;
    params.c = a.c;
    params.epochs = a.epochs;
    params.seed = cfg.anneal.seed;

    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> train_idx = all;
    std::vector<std::size_t> test_idx;
    if (a.test_fraction > 0) {
        Rng rng(derive_seed(params.seed, 0x7e57));
        std::vector<std::size_t> shuffled = all;
        rng.shuffle(shuffled);
        const auto n_test = static_cast<std::size_t>(
            std::lround(a.test_fraction * static_cast<double>(shuffled.size())));
        test_idx.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
        train_idx.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
    }

    std::ostream& os = out;
    os << "seed: " << params.seed << '\n';
    os << "samples: " << labels.size() << '\n';
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %18s\n", "Features",
                  ("% CV(#" + std::to_string(a.folds) + ") accuracy").c_str());
    os << line;
    std::vector<features::FamilyMask> rows;
    if (a.ablation) {
        using features::Family;
        const features::FamilyMask none;
        rows = {none.with(Family::IS),
                none.with(Family::CA),
                none.with(Family::CT),
                none.with(Family::IS).with(Family::CA),
                none.with(Family::CT).with(Family::CA),
                none.with(Family::IS).with(Family::CT),
                features::FamilyMask::all()};
    } else {
        rows = {mask};
    }
    const auto ys = pick(all);
    svm::CrossValidation chosen;
    for (const auto& m : rows) {
        const auto cv = svm::cross_validate(dense(m, all), ys, a.folds, params);
        std::snprintf(line, sizeof line, "%-10s %18.2f\n", family_label(m).c_str(), cv.mean_accuracy_pct);
        os << line;
        if (m == mask) {
            chosen = cv;
        }
    }
    if (chosen.folds.empty()) {
        chosen = svm::cross_validate(dense(mask, all), ys, a.folds, params);
    }
    svm::ConfusionMatrix pooled;
    for (const auto& f : chosen.folds) {
        pooled += f;
    }
    const auto x_train = dense(mask, train_idx);
    const auto y_train = pick(train_idx);
    const auto model = svm::train(x_train, y_train, params);
    os << '\n';
    print_confusion(os, "Confusion matrix (cross-validation, " + family_label(mask) + ")", pooled);
    os << '\n';
    print_confusion(os, "Confusion matrix (train set, " + family_label(mask) + ")",
                    svm::evaluate(model, x_train, y_train));
    if (!test_idx.empty()) {
        os << '\n';
        print_confusion(os, "Confusion matrix (test set, " + family_label(mask) + ")",
                        svm::evaluate(model, dense(mask, test_idx), pick(test_idx)));
    }
    if (!a.common.out.empty()) {
        svm::save_model(model, a.common.out);
        os << "model written to " << a.common.out << '\n';
    }
    return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    Common common;
    int images = 20;
    std::vector<std::string> shapes;
    int min_overlap = 1;
    int height = 90;
    int width = 90;
    int tol = 2;
};

Json table_json(const synth::RecallTable& t)
{
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"shape", r.shape_id},
                        {"total", r.total},
                        {"correct", r.correct},
                        {"recall", r.recall()}});
    }
    return Json{{"rows", rows},
                {"images", t.images},
                {"images_fully_recovered", t.images_fully_recovered},
                {"total", t.total()},
                {"correct", t.correct()},
                {"recall", t.recall()}};
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& /*err*/)
{
    const auto cfg = resolve_config(a.common);
    if (a.images < 1 || a.tol < 0) {
        throw UsageError("--images must be >= 1 and --tol >= 0");
    }
    synth::OverlapSpec spec = synth::default_overlap_spec(cfg.anneal.seed);
    if (!a.shapes.empty()) {
        spec.shape_counts = parse_shape_counts(a.shapes);
    }
    spec.min_overlap_pairs = a.min_overlap;
    spec.height = a.height;
    spec.width = a.width;
    const auto templates = subset(resolve_templates(a.common.templates), spec.shape_counts);
    const auto table = synth::eval_disambiguation(a.images, spec, cfg.anneal, a.tol, templates);
    out << "seed: " << cfg.anneal.seed << '\n';
    out << table.to_text();
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %7ld %10ld %9.1f\n", "All", table.total(), table.correct(),
                  100.0 * table.recall());
    out << line;
    out << "images fully recovered: " << table.images_fully_recovered << '/' << table.images << '\n';
    if (!a.common.out.empty()) {
        Json j = table_json(table);
        j["seed"] = cfg.anneal.seed;
        j["tol"] = a.tol;
        j["anneal"] = io::to_json(cfg.anneal);
        io::write_text_file(a.common.out, io::dump_canonical(j, 2) + "\n");
    }
    return kOk;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
    Common common;
    std::string kind;
    int count = 10;
    int fused = 0;
    std::vector<std::string> shapes;
    int min_overlap = 1;
    int height = 90;
    int width = 90;
    int plots = 50;
    int negatives = 50;
};

int cmd_gen(const GenArgs& a, std::ostream& out, std::ostream& err)
{
    const auto cfg = resolve_config(a.common);
    const std::uint64_t seed = cfg.anneal.seed;
    if (a.common.out.empty()) {
        throw UsageError("gen needs --out DIR");
    }
    const fs::path dir = a.common.out;
    fs::create_directories(dir);
    auto emit = [&](const std::string& name, const raster::GrayImage& img, const Json& truth) {
        const fs::path image = dir / (name + ".pgm");
        raster::write_pgm(img, image);
        const fs::path sidecar = dir / (name + ".truth.json");
        io::write_text_file(sidecar, io::dump_canonical(truth, 2) + "\n");
        out << io::dump_canonical(Json{{"image", image.string()}, {"truth", sidecar.string()}}) << '\n';
    };
    char name[64];
    if (a.kind == "overlap") {
        synth::OverlapSpec spec = synth::default_overlap_spec(seed);
        if (!a.shapes.empty()) {
            spec.shape_counts = parse_shape_counts(a.shapes);
        }
        spec.min_overlap_pairs = a.min_overlap;
        spec.height = a.height;
        spec.width = a.width;
        const auto templates = subset(resolve_templates(a.common.templates), spec.shape_counts);
        for (int i = 0; i < a.count; ++i) {
            synth::OverlapSpec s = spec;
            s.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
            const auto sample = synth::gen_overlap_image(s, templates);
            std::snprintf(name, sizeof name, "overlap_%03d", i);
            emit(name, raster::to_gray(sample.image),
                 Json{{"kind", "overlap"},
                      {"seed", s.seed},
                      {"height", s.height},
                      {"width", s.width},
                      {"placements", io::placements_to_json(sample.truth)}});
        }
        return kOk;
    }
    const auto lib = resolve_templates(a.common.templates);
    if (a.kind == "plot") {
        bool failed = false;
        for (int i = 0; i < a.count; ++i) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            auto spec = synth::random_plot_spec(rng, derive_seed(seed ^ 0x706c6f74ULL, static_cast<std::uint64_t>(i)));
            spec.fused_pairs = a.fused;
            std::snprintf(name, sizeof name, "plot_%03d", i);
            try {
                const auto plot = synth::gen_plot_image(spec, lib);
                Json fused = Json::array();
                for (const auto& [p, q] : plot.truth.fused) {
                    fused.push_back({p, q});
                }
                emit(name, plot.image,
                     Json{{"kind", "plot"},
                          {"seed", spec.seed},
                          {"axis_row", plot.truth.axis_row},
                          {"axis_col", plot.truth.axis_col},
                          {"markers", io::placements_to_json(plot.truth.markers)},
                          {"fused", fused},
                          {"caption", plot.truth.caption}});
                io::write_text_file(dir / (std::string(name) + ".caption.txt"), plot.truth.caption + "\n");
            } catch (const Error& e) {
                failed = true;
                err << name << ": " << e.what() << '\n';
            }
        }
        return failed ? kFailed : kOk;
    }
    if (a.kind == "corpus") {
        if (a.plots < 0 || a.negatives < 0) {
            throw UsageError("--plots and --negatives must be >= 0");
        }
        const auto items = synth::gen_classifier_corpus(a.plots, a.negatives, seed, lib);
        std::ostringstream jsonl;
        for (const auto& item : items) {
            raster::write_pgm(item.image, dir / (item.name + ".pgm"));
            io::write_text_file(dir / (item.name + ".caption.txt"), item.caption + "\n");
            const auto fv = features::extract_features(item.image, item.caption, cfg.features);
            jsonl << io::dump_canonical(Json{{"name", item.name},
                                             {"image", item.name + ".pgm"},
                                             {"caption", item.caption},
                                             {"label", item.label},
                                             {"features", fv.dense()}})
                  << '\n';
        }
        io::write_text_file(dir / "corpus.jsonl", jsonl.str());
        out << io::dump_canonical(Json{{"corpus", (dir / "corpus.jsonl").string()},
                                       {"items", items.size()},
                                       {"seed", seed}})
            << '\n';
        return kOk;
    }
    throw UsageError("unknown gen kind '" + a.kind + "' (overlap, plot or corpus)");
}

// ---- disambiguate ----------------------------------------------------------

struct DisambiguateArgs {
    Common common;
    std::string image;
    std::string truth;
    std::vector<std::string> shapes;
    int tol = 2;
};

int cmd_disambiguate(const DisambiguateArgs& a, std::ostream& out, std::ostream& /*err*/)
{
    const auto cfg = resolve_config(a.common);
    auto lib = resolve_templates(a.common.templates);
    const auto blob = raster::binarize(raster::load_image(a.image), std::nullopt, cfg.invert);

    fs::path truth_path = a.truth;
    if (truth_path.empty()) {
        const fs::path guess = fs::path(a.image).parent_path() / (fs::path(a.image).stem().string() + ".truth.json");
        if (fs::exists(guess)) {
            truth_path = guess;
        }
    }
    std::optional<std::vector<anneal::Placement>> truth;
    if (!truth_path.empty()) {
        const Json j = io::read_json_file(truth_path);
        const char* key = j.contains("placements") ? "placements" : "markers";
        if (!j.contains(key)) {
            throw Error(ErrorCode::MalformedConfig, truth_path.string() + " has no placements");
        }
        truth = io::placements_from_json(j.at(key));
    }

    std::set<std::string> wanted(a.shapes.begin(), a.shapes.end());
    if (wanted.empty() && truth) {
        for (const auto& p : *truth) {
            wanted.insert(p.shape_id);
        }
    }
    std::vector<plotseg::ShapeTemplate> templates;
    if (wanted.empty()) {
        templates = lib;
    } else {
        for (const auto& id : wanted) {
            templates.push_back(plotseg::find_template(lib, id));
        }
    }
    const auto result = anneal::anneal(blob, templates, cfg.anneal);
    Json j{{"source", a.image},
           {"seed", cfg.anneal.seed},
           {"final_cost", result.final_cost},
           {"converged", result.converged},
           {"iterations", result.iterations_used},
           {"restarts", result.restarts},
           {"placements", io::placements_to_json(result.placements)}};
    if (truth) {
        const auto report = anneal::match_placements(result.placements, *truth, a.tol);
        Json matched = Json::array();
        Json unmatched_truth = Json::array();
        std::vector<bool> used(result.placements.size(), false);
        for (std::size_t t = 0; t < truth->size(); ++t) {
            if (const auto r = report.truth_match[t]) {
                used[*r] = true;
                matched.push_back({{"truth", io::to_json((*truth)[t])},
                                   {"result", io::to_json(result.placements[*r])},
                                   {"distance", anneal::chebyshev((*truth)[t], result.placements[*r])}});
            } else {
                unmatched_truth.push_back(io::to_json((*truth)[t]));
            }
        }
        Json unmatched_result = Json::array();
        for (std::size_t r = 0; r < used.size(); ++r) {
            if (!used[r]) {
                unmatched_result.push_back(io::to_json(result.placements[r]));
            }
        }
        j["match"] = Json{{"tol", a.tol},
                          {"matched", matched},
                          {"unmatched_truth", unmatched_truth},
                          {"unmatched_result", unmatched_result},
                          {"recall", report.recall()}};
    }
    Sink sink(a.common.out, out);
    sink.get() << io::dump_canonical(j, 2) << '\n';
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Find 2-D plots, segment them and recover their data points", "plotminer"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    ClassifyArgs classify;
    auto* c = app.add_subcommand("classify", "Decide which images are 2-D plots (JSON lines)");
    c->add_option("images", classify.images, "Image files (PGM or PNG)")->required();
    c->add_option("--captions", classify.captions, "Caption files, paired with images by stem");
    c->add_option("--model", classify.common.model, "Model file from `train`")->required();
    c->add_option("--lexicon", classify.common.lexicon, "Caption keyword list, one per line");
    c->add_option("--config", classify.common.config, "JSON configuration");
    c->add_option("--out", classify.common.out, "Write JSON lines here instead of stdout");
    c->add_flag("--invert", classify.common.invert, "Treat light pixels as ink");

    ExtractArgs extract;
    auto* e = app.add_subcommand("extract", "Extract data points from one plot image (JSON)");
    e->add_option("image", extract.image, "Image file")->required();
    e->add_option("--caption", extract.caption, "Caption text file");
    e->add_option("--model", extract.common.model, "Model file; without it the image is assumed to be a plot");
    e->add_option("--templates", extract.common.templates, "Directory of <shape_id>.pgm templates");
    e->add_option("--lexicon", extract.common.lexicon, "Caption keyword list");
    e->add_option("--config", extract.common.config, "JSON configuration");
    e->add_option("--out", extract.common.out, "Write the result here instead of stdout");
    e->add_option("--dump-segmentation", extract.dump_segmentation, "Write region/component JSON here");
    e->add_flag("--invert", extract.common.invert, "Treat light pixels as ink");
    add_seed(e, extract.common);
    add_anneal_overrides(e, extract.common);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Fit the plot classifier on a JSON-lines corpus");
    t->add_option("corpus", train.corpus, "corpus.jsonl")->required();
    t->add_option("--out", train.common.out, "Model output path");
    t->add_option("--folds", train.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    t->add_option("--c", train.c, "Soft-margin C")->check(CLI::PositiveNumber);
    t->add_option("--epochs", train.epochs, "Training epochs")->check(CLI::Range(1, 1000000));
    t->add_option("--families", train.families, "Feature families, e.g. ALL, IS, IS+CT");
    t->add_flag("--ablation", train.ablation, "Report every family combination");
    t->add_option("--test-fraction", train.test_fraction, "Hold out this seeded fraction as a test set");
    t->add_option("--lexicon", train.common.lexicon, "Caption keyword list");
    t->add_option("--config", train.common.config, "JSON configuration");
    t->add_flag("--invert", train.common.invert, "Treat light pixels as ink");
    add_seed(t, train.common);

    EvalArgs eval;
    auto* v = app.add_subcommand("eval", "Recall of overlap disambiguation on generated images");
    v->add_option("--images", eval.images, "Number of generated images");
    v->add_option("--shape", eval.shapes, "ID=COUNT per image (default diamond_11=3 triangle_11=2)");
    v->add_option("--min-overlap", eval.min_overlap, "Overlapping pairs required per image");
    v->add_option("--height", eval.height, "Canvas height");
    v->add_option("--width", eval.width, "Canvas width");
    v->add_option("--tol", eval.tol, "Match tolerance in pixels (Chebyshev)");
    v->add_option("--templates", eval.common.templates, "Template directory");
    v->add_option("--config", eval.common.config, "JSON configuration");
    v->add_option("--out", eval.common.out, "Write the recall table as JSON here");
    add_seed(v, eval.common);
    add_anneal_overrides(v, eval.common);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate synthetic images with ground truth");
    g->add_option("kind", gen.kind, "overlap, plot or corpus")->required();
    g->add_option("--out", gen.common.out, "Output directory")->required();
    g->add_option("--count", gen.count, "Images to generate (overlap, plot)")->check(CLI::NonNegativeNumber);
    g->add_option("--fused", gen.fused, "Fused marker pairs per plot")->check(CLI::NonNegativeNumber);
    g->add_option("--shape", gen.shapes, "ID=COUNT per overlap image");
    g->add_option("--min-overlap", gen.min_overlap, "Overlapping pairs per overlap image");
    g->add_option("--height", gen.height, "Overlap canvas height");
    g->add_option("--width", gen.width, "Overlap canvas width");
    g->add_option("--plots", gen.plots, "Plots in a corpus");
    g->add_option("--negatives", gen.negatives, "Non-plots in a corpus");
    g->add_option("--templates", gen.common.templates, "Template directory");
    g->add_option("--lexicon", gen.common.lexicon, "Caption keyword list (corpus features)");
    g->add_option("--config", gen.common.config, "JSON configuration");
    add_seed(g, gen.common);

    DisambiguateArgs dis;
    auto* d = app.add_subcommand("disambiguate", "Anneal one overlap blob into marker placements");
    d->add_option("image", dis.image, "Blob image (PGM or PNG)")->required();
    d->add_option("--truth", dis.truth, "Truth sidecar (default <stem>.truth.json if present)");
    d->add_option("--shape", dis.shapes, "Restrict candidates to these template ids");
    d->add_option("--tol", dis.tol, "Match tolerance in pixels")->check(CLI::NonNegativeNumber);
    d->add_option("--templates", dis.common.templates, "Template directory");
    d->add_option("--config", dis.common.config, "JSON configuration");
    d->add_option("--out", dis.common.out, "Write the result here instead of stdout");
    d->add_flag("--invert", dis.common.invert, "Treat light pixels as ink");
    add_seed(d, dis.common);
    add_anneal_overrides(d, dis.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return kUsage;
    }

    try {
        if (*c) {
            return cmd_classify(classify, out, err);
        }
        if (*e) {
            return cmd_extract(extract, out, err);
        }
        if (*t) {
            return cmd_train(train, out, err);
        }
        if (*v) {
            return cmd_eval(eval, out, err);
        }
        if (*g) {
            return cmd_gen(gen, out, err);
        }
        return cmd_disambiguate(dis, out, err);
    } catch (const UsageError& ex) {
        err << "usage error: " << ex.what() << '\n';
        return kUsage;
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::MalformedConfig || ex.code() == ErrorCode::InvalidArgument) {
            err << "usage error: " << ex.what() << '\n';
            return kUsage;
        }
        err << "error: " << ex.what() << '\n';
        return kFailed;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kFailed;
    }
}

}  // namespace plotminer::cli
