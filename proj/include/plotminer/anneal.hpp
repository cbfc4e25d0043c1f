#pragma once

#include "plotminer/plotseg.hpp"
#include "plotminer/raster.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace plotminer::anneal {

using plotseg::ShapeTemplate;
using raster::BinaryImage;

// Template placed with its top-left corner at (row, col) of the target.
struct Placement {
    std::string shape_id;
    int row = 0;
    int col = 0;
    int weight = 1;

    bool operator==(const Placement&) const = default;
};

struct AnnealConfig {
    long max_iterations = 10000;
    double temp_constant_e = 0.4;
    long alpha = 200;  // duplicate-removal period
    long beta = 100;   // cooling period
    long gamma = 150;  // type-swap period
    long epsilon = 0;
    int initial_candidates_per_shape = 16;
    std::uint64_t seed = 42;
    double duplicate_distance = 2.0;
    // Overrides the initial temperature (normally the initial cost).
    std::optional<double> initial_temperature;
    // extra seeded chains tried when a chain ends above epsilon
    int max_restarts = 2;

    void validate() const;
};

struct AnnealResult {
    std::vector<Placement> placements;
    long final_cost = 0;
    long iterations_used = 0;
    bool converged = false;
    int restarts = 0;
};

// Energy after every iteration of the (final) chain, for diagnostics.
struct AnnealTrace {
    std::vector<long> energy;
    std::vector<double> temperature;
};

// OR of every weight-1 placement's mask into an h x w canvas.
BinaryImage render(const std::vector<Placement>& placements,
                   const std::vector<ShapeTemplate>& templates, int h, int w);

// Trace((B - C)^T (B - C)); for binary matrices this is the number of
// differing pixels.
long grammian_trace(const BinaryImage& b, const BinaryImage& c);
// grammian_trace of the target against the rendered placements.
long cost(const BinaryImage& target, const std::vector<Placement>& placements,
          const std::vector<ShapeTemplate>& templates);

// Largest legal top-left offset for a template in an h x w target.
std::pair<int, int> placement_bounds(const ShapeTemplate& t, int h, int w);

AnnealResult anneal(const BinaryImage& target, const std::vector<ShapeTemplate>& templates,
                    const AnnealConfig& config = {},
                    const std::optional<std::vector<Placement>>& initial = std::nullopt,
                    AnnealTrace* trace = nullptr);

struct ShapeRecall {
    long total = 0;
    long correct = 0;

    double recall() const
    {
        return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct MatchReport {
    std::map<std::string, ShapeRecall> per_shape;
    // truth index -> matched result index
    std::vector<std::optional<std::size_t>> truth_match;
    long total = 0;
    long correct = 0;

    double recall() const
    {
        return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

long chebyshev(const Placement& a, const Placement& b);

// One-to-one matching of same-shape pairs within `tol` (Chebyshev). Closest
// pairs are taken first and the pairing is then grown to a maximum matching;
// a truth placement counts as correct when it is paired.
MatchReport match_placements(const std::vector<Placement>& result,
                             const std::vector<Placement>& truth, int tol);

}  // namespace plotminer::anneal
