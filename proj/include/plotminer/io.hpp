#pragma once

#include "plotminer/anneal.hpp"
#include "plotminer/features.hpp"
#include "plotminer/plotseg.hpp"
#include "plotminer/raster.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace plotminer::io {

using Json = nlohmann::json;

// Sorted keys, integers verbatim, every floating value printed with six
// decimals. indent < 0 gives a single line.
std::string dump_canonical(const Json& value, int indent = -1);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

Json to_json(const raster::Box& box);
raster::Box box_from_json(const Json& j);

Json to_json(const features::LineSegment& line);
features::LineSegment line_from_json(const Json& j);

// {shape, i, j}; weight is implied (only live placements are written)
Json to_json(const anneal::Placement& p);
anneal::Placement placement_from_json(const Json& j);
Json placements_to_json(const std::vector<anneal::Placement>& placements);
std::vector<anneal::Placement> placements_from_json(const Json& j);

Json to_json(const anneal::AnnealConfig& config);
// Keys absent from `j` keep their value in `base`; unknown keys are rejected.
anneal::AnnealConfig anneal_config_from_json(const Json& j, anneal::AnnealConfig base = {});

Json to_json(const features::FeatureConfig& config);
features::FeatureConfig feature_config_from_json(const Json& j, features::FeatureConfig base = {});

Json to_json(const plotseg::PlotRegions& regions);
plotseg::PlotRegions regions_from_json(const Json& j);

}  // namespace plotminer::io
