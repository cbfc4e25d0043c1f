#include "plotminer/anneal.hpp"

#include "plotminer/error.hpp"
#include "plotminer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>

namespace plotminer::anneal {

namespace {

std::size_t template_index(const std::vector<ShapeTemplate>& templates, const std::string& id)
{
    for (std::size_t i = 0; i < templates.size(); ++i) {
        if (templates[i].shape_id == id) {
            return i;
        }
    }
    throw Error(ErrorCode::UnknownShape, "no template named '" + id + "'");
}

void check_in_bounds(const Placement& p, const ShapeTemplate& t, int h, int w)
{
    const auto [max_row, max_col] = placement_bounds(t, h, w);
    if (p.row < 0 || p.col < 0 || p.row > max_row || p.col > max_col) {
        throw Error(ErrorCode::OutOfBounds, "placement of '" + p.shape_id + "' at (" +
                                                std::to_string(p.row) + "," +
                                                std::to_string(p.col) + ") leaves the canvas");
    }
}

// round(rand*2 - 1) with round-half-away-from-zero: -1, 0, +1 with
// probabilities 1/4, 1/2, 1/4.
int unit_step(Rng& rng)
{
    return static_cast<int>(std::round(rng.canonical() * 2.0 - 1.0));
}

struct Item {
    std::size_t tmpl;
    int row;
    int col;
    bool active;
};

// Coverage counts make each move O(template area) instead of O(h*w).
class Chain {
public:
    Chain(const BinaryImage& target, const std::vector<ShapeTemplate>& templates)
        : target_(target), templates_(templates),
          count_(static_cast<std::size_t>(target.width()) * target.height(), 0)
    {
        energy_ = target.count();
    }

    long energy() const { return energy_; }
    std::vector<Item>& items() { return items_; }
    const std::vector<Item>& items() const { return items_; }

    void add(std::size_t tmpl, int row, int col)
    {
        items_.push_back({tmpl, row, col, true});
        stamp(items_.back(), +1);
    }

    // returns the energy change
    long move(std::size_t i, int row, int col)
    {
        const long before = energy_;
        stamp(items_[i], -1);
        items_[i].row = row;
        items_[i].col = col;
        stamp(items_[i], +1);
        return energy_ - before;
    }

    long set_active(std::size_t i, bool active)
    {
        const long before = energy_;
        if (items_[i].active != active) {
            if (items_[i].active) {
                stamp(items_[i], -1);
                items_[i].active = false;
            } else {
                items_[i].active = true;
                stamp(items_[i], +1);
            }
        }
        return energy_ - before;
    }

    std::pair<int, int> bounds(std::size_t tmpl) const
    {
        return placement_bounds(templates_[tmpl], target_.height(), target_.width());
    }

    std::vector<std::size_t> active_indices() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (items_[i].active) {
                out.push_back(i);
            }
        }
        return out;
    }

    std::vector<Placement> placements() const
    {
        std::vector<Placement> out;
        for (const auto& it : items_) {
            if (it.active) {
                out.push_back({templates_[it.tmpl].shape_id, it.row, it.col, 1});
            }
        }
        return out;
    }

private:
    void stamp(const Item& it, int delta)
    {
        if (!it.active) {
            return;
        }
        const auto& mask = templates_[it.tmpl].mask;
        const int w = target_.width();
        for (int r = 0; r < mask.height(); ++r) {
            for (int c = 0; c < mask.width(); ++c) {
                if (!mask.at(r, c)) {
                    continue;
                }
                const int tr = it.row + r;
                const int tc = it.col + c;
                auto& n = count_[static_cast<std::size_t>(tr) * w + tc];
                const bool was = n > 0;
                n += delta;
                const bool now = n > 0;
                if (was != now) {
                    // covering ink fixes a mismatch, covering background makes one
                    const bool ink = target_.at(tr, tc);
                    energy_ += (now == ink) ? -1 : +1;
                }
            }
        }
    }

    const BinaryImage& target_;
    const std::vector<ShapeTemplate>& templates_;
    std::vector<int> count_;
    std::vector<Item> items_;
    long energy_ = 0;
};

constexpr int kInitAttempts = 200;

bool touches_ink(const BinaryImage& target, const ShapeTemplate& t, int row, int col)
{
    for (int r = 0; r < t.mask.height(); ++r) {
        for (int c = 0; c < t.mask.width(); ++c) {
            if (t.mask.at(r, c) && target.at(row + r, col + c)) {
                return true;
            }
        }
    }
    return false;
}

bool metropolis_accept(long delta, double temperature, Rng& rng)
{
    if (delta < 0) {
        return true;
    }
    if (temperature <= 0) {
        return delta == 0;
    }
    return rng.canonical() < std::exp(-static_cast<double>(delta) / temperature);
}

std::pair<double, double> template_centroid(const ShapeTemplate& t)
{
    return t.centroid();
}

struct RunOutcome {
    std::vector<Placement> placements;
    long cost = 0;
    long iterations = 0;
    bool converged = false;
};

RunOutcome run_chain(const BinaryImage& target, const std::vector<ShapeTemplate>& templates,
                     const AnnealConfig& cfg, std::uint64_t seed,
                     const std::optional<std::vector<Placement>>& initial, AnnealTrace* trace)
{
    Rng rng(seed);
    Chain chain(target, templates);
    const int h = target.height();
    const int w = target.width();
    if (initial) {
        for (const auto& p : *initial) {
            const auto k = template_index(templates, p.shape_id);
            check_in_bounds(p, templates[k], h, w);
            chain.add(k, p.row, p.col);
            if (p.weight == 0) {
                chain.set_active(chain.items().size() - 1, false);
            }
        }
    } else {
        for (std::size_t k = 0; k < templates.size(); ++k) {
            const auto [max_row, max_col] = chain.bounds(k);
            for (int n = 0; n < cfg.initial_candidates_per_shape; ++n) {
                // uniform offsets, redrawn (a bounded number of times) until
                // the candidate touches target ink
                int row = 0;
                int col = 0;
                for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
                    row = static_cast<int>(rng.canonical() * (max_row + 1));
                    col = static_cast<int>(rng.canonical() * (max_col + 1));
                    if (touches_ink(target, templates[k], row, col)) {
                        break;
                    }
                }
                chain.add(k, row, col);
            }
        }
    }

    double temperature = cfg.initial_temperature.value_or(static_cast<double>(chain.energy()));
    RunOutcome out;
    if (trace) {
        trace->energy.clear();
        trace->temperature.clear();
    }
    if (chain.energy() <= cfg.epsilon) {
        out.placements = chain.placements();
        out.cost = chain.energy();
        out.converged = true;
        return out;
    }

    auto dedupe = [&] {
        auto& items = chain.items();
        for (std::size_t i = 0; i < items.size(); ++i) {
            for (std::size_t j = i + 1; j < items.size(); ++j) {
                if (!items[i].active || !items[j].active || items[i].tmpl != items[j].tmpl) {
                    continue;
                }
                const double d = std::hypot(items[i].row - items[j].row, items[i].col - items[j].col);
                if (d > cfg.duplicate_distance) {
                    continue;
                }
                // drop whichever of the pair leaves the lower cost
                const long drop_j = chain.set_active(j, false);
                chain.set_active(j, true);
                const long drop_i = chain.set_active(i, false);
                if (drop_j <= drop_i) {
                    chain.set_active(i, true);
                    chain.set_active(j, false);
                }
            }
        }
    };

    auto propose_swap = [&] {
        const auto active = chain.active_indices();
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                if (chain.items()[active[a]].tmpl != chain.items()[active[b]].tmpl) {
                    pairs.emplace_back(active[a], active[b]);
                }
            }
        }
        if (pairs.empty()) {
            return;
        }
        const auto [i, j] = pairs[rng.index(pairs.size())];
        const Item a = chain.items()[i];
        const Item b = chain.items()[j];
        // exchange positions centroid-to-centroid so differently sized shapes stay aligned
        const auto ca = template_centroid(templates[a.tmpl]);
        const auto cb = template_centroid(templates[b.tmpl]);
        auto place = [&](const Item& self, std::pair<double, double> self_c, const Item& other,
                         std::pair<double, double> other_c) {
            const auto [max_row, max_col] = chain.bounds(self.tmpl);
            const int row = static_cast<int>(std::lround(other.row + other_c.first - self_c.first));
            const int col = static_cast<int>(std::lround(other.col + other_c.second - self_c.second));
            return std::pair{std::clamp(row, 0, max_row), std::clamp(col, 0, max_col)};
        };
        const auto na = place(a, ca, b, cb);
        const auto nb = place(b, cb, a, ca);
        long delta = chain.move(i, na.first, na.second);
        delta += chain.move(j, nb.first, nb.second);
        if (!metropolis_accept(delta, temperature, rng)) {
            chain.move(i, a.row, a.col);
            chain.move(j, b.row, b.col);
        }
    };

    long it = 0;
    while (it < cfg.max_iterations) {
        ++it;
        const auto active = chain.active_indices();
        if (active.empty()) {
            break;
        }
        const std::size_t i = active[rng.index(active.size())];
        const Item old = chain.items()[i];
        const auto [max_row, max_col] = chain.bounds(old.tmpl);
        const int row = std::clamp(old.row + unit_step(rng), 0, max_row);
        const int col = std::clamp(old.col + unit_step(rng), 0, max_col);
        if (row != old.row || col != old.col) {
            const long delta = chain.move(i, row, col);
            if (!metropolis_accept(delta, temperature, rng)) {
                chain.move(i, old.row, old.col);
            }
        }
        if (it % cfg.alpha == 0) {
            dedupe();
        }
        if (it % cfg.beta == 0) {
            temperature *= (1.0 - cfg.temp_constant_e);
        }
        if (it % cfg.gamma == 0) {
            propose_swap();
        }
        if (trace) {
            trace->energy.push_back(chain.energy());
            trace->temperature.push_back(temperature);
        }
        if (chain.energy() <= cfg.epsilon) {
            break;
        }
    }
    out.iterations = it;
    out.cost = chain.energy();
    out.converged = out.cost <= cfg.epsilon;
    out.placements = chain.placements();
    return out;
}

// Greedily drops placements whose removal does not raise the cost.
void prune_redundant(const BinaryImage& target, const std::vector<ShapeTemplate>& templates,
                     RunOutcome& run)
{
    Chain chain(target, templates);
    for (const auto& p : run.placements) {
        chain.add(template_index(templates, p.shape_id), p.row, p.col);
    }
    while (true) {
        std::optional<std::size_t> best;
        long best_delta = 1;
        for (auto i : chain.active_indices()) {
            const long delta = chain.set_active(i, false);
            chain.set_active(i, true);
            if (delta < best_delta) {
                best_delta = delta;
                best = i;
            }
        }
        if (!best) {
            break;
        }
        chain.set_active(*best, false);
    }
    run.placements = chain.placements();
    run.cost = chain.energy();
}

}  // namespace

void AnnealConfig::validate() const
{
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidArgument, why); };
    if (max_iterations < 0) {
        throw bad("max_iterations must be >= 0");
    }
    if (!(temp_constant_e > 0 && temp_constant_e < 1)) {
        throw bad("temp_constant_e must lie in (0,1)");
    }
    if (alpha < 1 || beta < 1 || gamma < 1) {
        throw bad("alpha, beta and gamma must be >= 1");
    }
    if (epsilon < 0) {
        throw bad("epsilon must be >= 0");
    }
    if (initial_candidates_per_shape < 1) {
        throw bad("initial_candidates_per_shape must be >= 1");
    }
    if (max_restarts < 0) {
        throw bad("max_restarts must be >= 0");
    }
    if (duplicate_distance < 0) {
        throw bad("duplicate_distance must be >= 0");
    }
}

std::pair<int, int> placement_bounds(const ShapeTemplate& t, int h, int w)
{
    return {h - t.mask.height(), w - t.mask.width()};
}

BinaryImage render(const std::vector<Placement>& placements,
                   const std::vector<ShapeTemplate>& templates, int h, int w)
{
    BinaryImage canvas(w, h);
    for (const auto& p : placements) {
        const auto& t = templates[template_index(templates, p.shape_id)];
        check_in_bounds(p, t, h, w);
        if (p.weight == 0) {
            continue;
        }
        for (int r = 0; r < t.mask.height(); ++r) {
            for (int c = 0; c < t.mask.width(); ++c) {
                if (t.mask.at(r, c)) {
                    canvas.set(p.row + r, p.col + c, true);
                }
            }
        }
    }
    return canvas;
}

long grammian_trace(const BinaryImage& b, const BinaryImage& c)
{
    if (b.width() != c.width() || b.height() != c.height()) {
        throw Error(ErrorCode::DimensionMismatch, "cost needs equally sized matrices");
    }
    // (B-C)^T (B-C) has diagonal entries sum_i (B_ij - C_ij)^2
    long trace = 0;
    for (int col = 0; col < b.width(); ++col) {
        for (int row = 0; row < b.height(); ++row) {
            const long d = static_cast<long>(b.at(row, col)) - static_cast<long>(c.at(row, col));
            trace += d * d;
        }
    }
    return trace;
}

long cost(const BinaryImage& target, const std::vector<Placement>& placements,
          const std::vector<ShapeTemplate>& templates)
{
    return grammian_trace(target, render(placements, templates, target.height(), target.width()));
}

AnnealResult anneal(const BinaryImage& target, const std::vector<ShapeTemplate>& templates,
                    const AnnealConfig& config, const std::optional<std::vector<Placement>>& initial,
                    AnnealTrace* trace)
{
    config.validate();
    if (templates.empty()) {
        throw Error(ErrorCode::NoTemplates, "anneal needs at least one template");
    }
    if (target.count() == 0) {
        throw Error(ErrorCode::EmptyTarget, "target has no ink");
    }
    std::vector<ShapeTemplate> usable;
    for (const auto& t : templates) {
        if (t.mask.height() <= target.height() && t.mask.width() <= target.width()) {
            usable.push_back(t);
        }
    }
    if (usable.empty()) {
        throw Error(ErrorCode::NoTemplates, "no template fits inside the target");
    }
    const auto& lib = initial ? templates : usable;

    RunOutcome run = run_chain(target, lib, config, config.seed, initial, trace);
    AnnealResult result;
    long iterations = run.iterations;
    // unconverged chains are rerun from fresh seeds; the cheapest chain wins
    for (int k = 1; k <= config.max_restarts && !initial && !run.converged; ++k) {
        RunOutcome next = run_chain(target, lib, config, derive_seed(config.seed, k), std::nullopt, trace);
        iterations += next.iterations;
        if (next.cost < run.cost) {
            run = std::move(next);
        }
        result.restarts = k;
    }
    run.iterations = iterations;
    if (config.max_iterations == 0 && !run.converged) {
        // nothing was searched, so no candidate is reported
        run.placements.clear();
        run.cost = target.count();
    } else {
        prune_redundant(target, lib, run);
    }
    result.placements = std::move(run.placements);
    result.final_cost = run.cost;
    result.iterations_used = run.iterations;
    result.converged = run.cost <= config.epsilon;
    return result;
}

long chebyshev(const Placement& a, const Placement& b)
{
    return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

MatchReport match_placements(const std::vector<Placement>& result,
                             const std::vector<Placement>& truth, int tol)
{
    if (tol < 0) {
        throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
    }
    MatchReport report;
    report.truth_match.assign(truth.size(), std::nullopt);
    for (const auto& t : truth) {
        ++report.per_shape[t.shape_id].total;
    }
    report.total = static_cast<long>(truth.size());

    std::vector<std::tuple<long, std::size_t, std::size_t>> candidates;
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        for (std::size_t ri = 0; ri < result.size(); ++ri) {
            if (result[ri].weight == 0 || result[ri].shape_id != truth[ti].shape_id) {
                continue;
            }
            const long d = chebyshev(result[ri], truth[ti]);
            if (d <= tol) {
                candidates.emplace_back(d, ti, ri);
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());
    // closest pairs first, then augmenting paths so the pairing count is
    // the maximum one-to-one matching
    std::vector<std::vector<std::size_t>> adj(truth.size());
    std::vector<std::optional<std::size_t>> owner(result.size());
    for (const auto& [d, ti, ri] : candidates) {
        adj[ti].push_back(ri);
        if (!report.truth_match[ti] && !owner[ri]) {
            report.truth_match[ti] = ri;
            owner[ri] = ti;
        }
    }
    std::vector<bool> visited;
    std::function<bool(std::size_t)> augment = [&](std::size_t ti) {
        for (auto ri : adj[ti]) {
            if (visited[ri]) {
                continue;
            }
            visited[ri] = true;
            if (!owner[ri] || augment(*owner[ri])) {
                owner[ri] = ti;
                report.truth_match[ti] = ri;
                return true;
            }
        }
        return false;
    };
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        if (!report.truth_match[ti]) {
            visited.assign(result.size(), false);
            augment(ti);
        }
    }
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        if (report.truth_match[ti]) {
            ++report.per_shape[truth[ti].shape_id].correct;
            ++report.correct;
        }
    }
    return report;
}

}  // namespace plotminer::anneal
