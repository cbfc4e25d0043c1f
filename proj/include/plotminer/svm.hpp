#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace plotminer::svm {

using Sample = std::vector<double>;

// Linear two-class model. Inputs are min-max scaled with the stored
// per-coordinate ranges before the decision function w.x + b is applied.
struct SvmModel {
    std::vector<double> weights;
    double bias = 0;
    double c_param = 1.0;
    std::vector<double> scale_min;
    std::vector<double> scale_range;

    std::size_t dimension() const { return weights.size(); }
    bool operator==(const SvmModel&) const = default;
};

struct TrainParams {
    double c = 1.0;
    int epochs = 200;
    std::uint64_t seed = 42;
};

struct Prediction {
    int label = 1;
    double score = 0;
};

struct ConfusionMatrix {
    long tn = 0;
    long fp = 0;
    long fn = 0;
    long tp = 0;

    long total() const { return tn + fp + fn + tp; }
    double accuracy() const
    {
        return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
    }
    void add(int truth, int predicted);
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

struct CrossValidation {
    double mean_accuracy_pct = 0;
    std::vector<ConfusionMatrix> folds;
    std::vector<std::size_t> fold_sizes;
};

// Soft-margin primal objective (1/2)|w|^2 + C * sum max(0, 1 - y (w.x + b))
// on already-scaled data.
double hinge_objective(std::span<const Sample> x, std::span<const int> y,
                       std::span<const double> w, double b, double c);

// A subgradient of hinge_objective; exact gradient away from the kinks.
// Returned layout is [dw..., db].
std::vector<double> hinge_subgradient(std::span<const Sample> x, std::span<const int> y,
                                      std::span<const double> w, double b, double c);

struct TrainTrace {
    // objective of the retained iterate at each epoch checkpoint
    std::vector<double> checkpoint_objective;
};

SvmModel train(std::span<const Sample> samples, std::span<const int> labels,
               const TrainParams& params = {}, TrainTrace* trace = nullptr);

Prediction predict(const SvmModel& model, std::span<const double> x);

double accuracy(const SvmModel& model, std::span<const Sample> samples,
                std::span<const int> labels);

ConfusionMatrix evaluate(const SvmModel& model, std::span<const Sample> samples,
                         std::span<const int> labels);

CrossValidation cross_validate(std::span<const Sample> samples, std::span<const int> labels,
                               int k, const TrainParams& params = {});

// Seeded shuffle followed by a contiguous split. Returns sample indices per
// fold; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, std::uint64_t seed);

void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace plotminer::svm
