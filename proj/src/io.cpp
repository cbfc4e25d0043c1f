#include "plotminer/io.hpp"

#include "plotminer/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace plotminer::io {

namespace {

void dump_into(const Json& v, int indent, int depth, std::string& out)
{
    auto newline = [&](int d) {
        if (indent >= 0) {
            out += '\n';
            out.append(static_cast<std::size_t>(indent * d), ' ');
        }
    };
    switch (v.type()) {
    case Json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(depth + 1);
            out += Json(it.key()).dump(-1, ' ', false, Json::error_handler_t::replace);
            out += indent >= 0 ? ": " : ":";
            dump_into(it.value(), indent, depth + 1, out);
        }
        newline(depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        out += '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(depth + 1);
            dump_into(item, indent, depth + 1, out);
        }
        newline(depth);
        out += ']';
        return;
    }
    case Json::value_t::number_float: {
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            out += "null";
            return;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", d);
        if (std::string_view(buf) == "-0.000000") {
            out += "0.000000";
        } else {
            out += buf;
        }
        return;
    }
    default:
        out += v.dump(-1, ' ', false, Json::error_handler_t::replace);
    }
}

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorCode::MalformedConfig, what);
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const char* where)
{
    if (!j.is_object()) {
        malformed(std::string(where) + " must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            malformed(std::string("unknown key '") + it.key() + "' in " + where);
        }
    }
}

template <class T>
void take(const Json& j, const char* key, T& field)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        field = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        malformed(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

std::string dump_canonical(const Json& value, int indent)
{
    std::string out;
    dump_into(value, indent, 0, out);
    return out;
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        malformed(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json to_json(const raster::Box& box)
{
    return Json{{"top", box.top}, {"left", box.left}, {"bottom", box.bottom}, {"right", box.right}};
}

raster::Box box_from_json(const Json& j)
{
    reject_unknown(j, {"top", "left", "bottom", "right"}, "box");
    raster::Box b;
    take(j, "top", b.top);
    take(j, "left", b.left);
    take(j, "bottom", b.bottom);
    take(j, "right", b.right);
    return b;
}

Json to_json(const features::LineSegment& line)
{
    return Json{{"rho", line.rho},
                {"theta_deg", line.theta_deg},
                {"votes", line.votes},
                {"orientation_deg", line.orientation_deg}};
}

features::LineSegment line_from_json(const Json& j)
{
    reject_unknown(j, {"rho", "theta_deg", "votes", "orientation_deg"}, "line");
    features::LineSegment l;
    take(j, "rho", l.rho);
    take(j, "theta_deg", l.theta_deg);
    take(j, "votes", l.votes);
    take(j, "orientation_deg", l.orientation_deg);
    return l;
}

Json to_json(const anneal::Placement& p)
{
    return Json{{"shape", p.shape_id}, {"i", p.row}, {"j", p.col}};
}

anneal::Placement placement_from_json(const Json& j)
{
    reject_unknown(j, {"shape", "i", "j"}, "placement");
    if (!j.contains("shape") || !j.contains("i") || !j.contains("j")) {
        malformed("placement needs shape, i and j");
    }
    anneal::Placement p;
    take(j, "shape", p.shape_id);
    take(j, "i", p.row);
    take(j, "j", p.col);
    return p;
}

Json placements_to_json(const std::vector<anneal::Placement>& placements)
{
    Json arr = Json::array();
    for (const auto& p : placements) {
        if (p.weight != 0) {
            arr.push_back(to_json(p));
        }
    }
    return arr;
}

std::vector<anneal::Placement> placements_from_json(const Json& j)
{
    if (!j.is_array()) {
        malformed("placements must be an array");
    }
    std::vector<anneal::Placement> out;
    for (const auto& item : j) {
        out.push_back(placement_from_json(item));
    }
    return out;
}

Json to_json(const anneal::AnnealConfig& c)
{
    Json j{{"max_iterations", c.max_iterations},
           {"temp_constant_e", c.temp_constant_e},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"gamma", c.gamma},
           {"epsilon", c.epsilon},
           {"initial_candidates_per_shape", c.initial_candidates_per_shape},
           {"seed", c.seed},
           {"duplicate_distance", c.duplicate_distance},
           {"max_restarts", c.max_restarts}};
    if (c.initial_temperature) {
        j["initial_temperature"] = *c.initial_temperature;
    }
    return j;
}

anneal::AnnealConfig anneal_config_from_json(const Json& j, anneal::AnnealConfig c)
{
    reject_unknown(j,
                   {"max_iterations", "temp_constant_e", "alpha", "beta", "gamma", "epsilon",
                    "initial_candidates_per_shape", "seed", "duplicate_distance", "max_restarts",
                    "initial_temperature"},
                   "anneal config");
    take(j, "max_iterations", c.max_iterations);
    take(j, "temp_constant_e", c.temp_constant_e);
    take(j, "alpha", c.alpha);
    take(j, "beta", c.beta);
    take(j, "gamma", c.gamma);
    take(j, "epsilon", c.epsilon);
    take(j, "initial_candidates_per_shape", c.initial_candidates_per_shape);
    take(j, "seed", c.seed);
    take(j, "duplicate_distance", c.duplicate_distance);
    take(j, "max_restarts", c.max_restarts);
    if (j.contains("initial_temperature")) {
        if (j.at("initial_temperature").is_null()) {
            c.initial_temperature.reset();
        } else {
            double t = 0;
            take(j, "initial_temperature", t);
            c.initial_temperature = t;
        }
    }
    try {
        c.validate();
    } catch (const Error& e) {
        malformed(e.what());
    }
    return c;
}

Json to_json(const features::FeatureConfig& c)
{
    return Json{{"block_size", c.block_size},
                {"hough",
                 {{"theta_step", c.hough.theta_step},
                  {"rho_step", c.hough.rho_step},
                  {"top_k", c.hough.top_k},
                  {"min_votes", c.hough.min_votes}}},
                {"lexicon", c.lexicon}};
}

features::FeatureConfig feature_config_from_json(const Json& j, features::FeatureConfig c)
{
    reject_unknown(j, {"block_size", "hough", "lexicon"}, "feature config");
    take(j, "block_size", c.block_size);
    if (j.contains("hough")) {
        const auto& h = j.at("hough");
        reject_unknown(h, {"theta_step", "rho_step", "top_k", "min_votes"}, "hough config");
        take(h, "theta_step", c.hough.theta_step);
        take(h, "rho_step", c.hough.rho_step);
        take(h, "top_k", c.hough.top_k);
        take(h, "min_votes", c.hough.min_votes);
    }
    take(j, "lexicon", c.lexicon);
    if (c.block_size < 2 || c.block_size % 2 != 0) {
        malformed("block_size must be an even number >= 2");
    }
    if (c.hough.theta_step <= 0 || c.hough.rho_step <= 0 || c.hough.top_k < 1) {
        malformed("hough steps must be positive and top_k >= 1");
    }
    return c;
}

Json to_json(const plotseg::PlotRegions& r)
{
    return Json{{"x_axis_region", to_json(r.x_axis_region)},
                {"y_axis_region", to_json(r.y_axis_region)},
                {"plotting_region", to_json(r.plotting_region)},
                {"x_axis_line", to_json(r.x_axis_line)},
                {"y_axis_line", to_json(r.y_axis_line)}};
}

plotseg::PlotRegions regions_from_json(const Json& j)
{
    reject_unknown(j,
                   {"x_axis_region", "y_axis_region", "plotting_region", "x_axis_line",
                    "y_axis_line"},
                   "regions");
    plotseg::PlotRegions r;
    try {
        r.x_axis_region = box_from_json(j.at("x_axis_region"));
        r.y_axis_region = box_from_json(j.at("y_axis_region"));
        r.plotting_region = box_from_json(j.at("plotting_region"));
        r.x_axis_line = line_from_json(j.at("x_axis_line"));
        r.y_axis_line = line_from_json(j.at("y_axis_line"));
    } catch (const Json::exception& e) {
        malformed(std::string("regions: ") + e.what());
    }
    return r;
}

}  // namespace plotminer::io
