#include "plotminer/svm.hpp"

#include "plotminer/error.hpp"
#include "plotminer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

namespace plotminer::svm {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void check_data(std::span<const Sample> x, std::span<const int> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "sample and label counts differ");
    }
    if (x.empty()) {
        throw Error(ErrorCode::TooFewSamples, "no samples");
    }
    const std::size_t dim = x.front().size();
    for (const auto& s : x) {
        if (s.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "samples have inconsistent dimension");
        }
    }
    for (int label : y) {
        if (label != 1 && label != -1) {
            throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
        }
    }
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ConfusionMatrix::add(int truth, int predicted)
{
    if (truth > 0) {
        predicted > 0 ? ++tp : ++fn;
    } else {
        predicted > 0 ? ++fp : ++tn;
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o)
{
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    tp += o.tp;
    return *this;
}

double hinge_objective(std::span<const Sample> x, std::span<const int> y,
                       std::span<const double> w, double b, double c)
{
    double loss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        loss += std::max(0.0, 1.0 - y[i] * (dot(w, x[i]) + b));
    }
    return 0.5 * dot(w, w) + c * loss;
}

std::vector<double> hinge_subgradient(std::span<const Sample> x, std::span<const int> y,
                                      std::span<const double> w, double b, double c)
{
    std::vector<double> g(w.begin(), w.end());
    g.push_back(0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] * (dot(w, x[i]) + b) < 1.0) {
            for (std::size_t j = 0; j < w.size(); ++j) {
                g[j] -= c * y[i] * x[i][j];
            }
            g.back() -= c * y[i];
        }
    }
    return g;
}

SvmModel train(std::span<const Sample> samples, std::span<const int> labels,
               const TrainParams& params, TrainTrace* trace)
{
    check_data(samples, labels);
    if (samples.size() < 2) {
        throw Error(ErrorCode::TooFewSamples, "need at least two samples");
    }
    if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; })) {
        throw Error(ErrorCode::SingleClassData, "training data contains a single class");
    }
    if (!(params.c > 0)) {
        throw Error(ErrorCode::InvalidArgument, "C must be positive");
    }
    if (params.epochs < 1) {
        throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
    }

    const std::size_t n = samples.size();
    const std::size_t dim = samples.front().size();
    SvmModel model;
    model.c_param = params.c;
    model.scale_min.assign(dim, 0.0);
    model.scale_range.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double lo = samples[0][j];
        double hi = samples[0][j];
        for (const auto& s : samples) {
            lo = std::min(lo, s[j]);
            hi = std::max(hi, s[j]);
        }
        model.scale_min[j] = lo;
        model.scale_range[j] = hi - lo;
    }
    std::vector<Sample> x(n, Sample(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double range = model.scale_range[j] > 0 ? model.scale_range[j] : 1.0;
            x[i][j] = (samples[i][j] - model.scale_min[j]) / range;
        }
    }

    // Pegasos-style stochastic subgradient steps 1/(lambda t) with
    // lambda = 1/(C n); the bias is unregularised. At each epoch boundary
    // the iterate falls back to the best checkpoint if the epoch made the
    // objective worse, so checkpoint objectives never increase.
    const double lambda = 1.0 / (params.c * static_cast<double>(n));
    std::vector<double> w(dim, 0.0);
    double b = 0;
    std::vector<double> best_w = w;
    double best_b = b;
    double best_obj = hinge_objective(x, labels, w, b, params.c);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(params.seed);
    long t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double margin = labels[i] * (dot(w, x[i]) + b);
            const double shrink = 1.0 - eta * lambda;
            for (auto& wj : w) {
                wj *= shrink;
            }
            if (margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) {
                    w[j] += eta * labels[i] * x[i][j];
                }
                b += eta * labels[i];
            }
        }
        const double obj = hinge_objective(x, labels, w, b, params.c);
        if (obj <= best_obj) {
            best_obj = obj;
            best_w = w;
            best_b = b;
        } else {
            w = best_w;
            b = best_b;
        }
        if (trace) {
            trace->checkpoint_objective.push_back(best_obj);
        }
    }
    model.weights = std::move(best_w);
    model.bias = best_b;
    return model;
}

Prediction predict(const SvmModel& model, std::span<const double> x)
{
    if (x.size() != model.dimension()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "model expects " + std::to_string(model.dimension()) + " features, got " +
                        std::to_string(x.size()));
    }
    double score = model.bias;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double v = x[j];
        if (!model.scale_min.empty()) {
            const double range = model.scale_range[j] > 0 ? model.scale_range[j] : 1.0;
            v = (v - model.scale_min[j]) / range;
        }
        score += model.weights[j] * v;
    }
    return {score >= 0 ? 1 : -1, score};
}

ConfusionMatrix evaluate(const SvmModel& model, std::span<const Sample> samples,
                         std::span<const int> labels)
{
    check_data(samples, labels);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        cm.add(labels[i], predict(model, samples[i]).label);
    }
    return cm;
}

double accuracy(const SvmModel& model, std::span<const Sample> samples,
                std::span<const int> labels)
{
    return evaluate(model, samples, labels).accuracy();
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, std::uint64_t seed)
{
    if (k < 2 || static_cast<std::size_t>(k) > n) {
        throw Error(ErrorCode::TooFewSamples, "need 2 <= k <= n for " + std::to_string(n) +
                                                  " samples, got k=" + std::to_string(k));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<long>(pos),
                        order.begin() + static_cast<long>(pos + size));
        pos += size;
    }
    return folds;
}

CrossValidation cross_validate(std::span<const Sample> samples, std::span<const int> labels,
                               int k, const TrainParams& params)
{
    check_data(samples, labels);
    const auto folds = make_folds(samples.size(), k, params.seed);
    CrossValidation cv;
    double acc_sum = 0;
    for (int f = 0; f < k; ++f) {
        std::vector<Sample> train_x;
        std::vector<int> train_y;
        for (int g = 0; g < k; ++g) {
            if (g == f) {
                continue;
            }
            for (auto i : folds[g]) {
                train_x.push_back(samples[i]);
                train_y.push_back(labels[i]);
            }
        }
        const SvmModel model = train(train_x, train_y, params);
        ConfusionMatrix cm;
        for (auto i : folds[f]) {
            cm.add(labels[i], predict(model, samples[i]).label);
        }
        acc_sum += cm.accuracy();
        cv.folds.push_back(cm);
        cv.fold_sizes.push_back(folds[f].size());
    }
    cv.mean_accuracy_pct = 100.0 * acc_sum / k;
    return cv;
}

void save_model(const SvmModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    auto row = [&](const char* key, const std::vector<double>& values) {
        out << key;
        for (double v : values) {
            out << ' ' << format_double(v);
        }
        out << '\n';
    };
    out << "svmlinear v1\n";
    out << "dim " << model.dimension() << '\n';
    out << "c " << format_double(model.c_param) << '\n';
    out << "bias " << format_double(model.bias) << '\n';
    row("scale_min", model.scale_min);
    row("scale_range", model.scale_range);
    row("w", model.weights);
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
}

SvmModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    }
    auto malformed = [&](const std::string& why) {
        return Error(ErrorCode::MalformedModelFile, path.string() + ": " + why);
    };
    std::string line;
    if (!std::getline(in, line) || line != "svmlinear v1") {
        throw malformed("missing 'svmlinear v1' header");
    }
    std::map<std::string, std::vector<double>> fields;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::vector<double> values;
        std::string tok;
        while (ls >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw malformed("bad number '" + tok + "' in " + key);
            }
            values.push_back(v);
        }
        if (fields.count(key)) {
            throw malformed("duplicate key " + key);
        }
        fields[key] = std::move(values);
    }
    auto scalar = [&](const std::string& key) {
        auto it = fields.find(key);
        if (it == fields.end() || it->second.size() != 1) {
            throw malformed("missing or invalid '" + key + "' line");
        }
        return it->second[0];
    };
    const double dim_value = scalar("dim");
    if (dim_value < 0 || dim_value != std::floor(dim_value)) {
        throw malformed("invalid dim");
    }
    const auto dim = static_cast<std::size_t>(dim_value);
    auto vec = [&](const std::string& key) {
        auto it = fields.find(key);
        if (it == fields.end() || it->second.size() != dim) {
            throw malformed("'" + key + "' must hold " + std::to_string(dim) + " values");
        }
        return it->second;
    };
    SvmModel model;
    model.c_param = scalar("c");
    if (!(model.c_param > 0)) {
        throw malformed("c must be positive");
    }
    model.bias = scalar("bias");
    model.scale_min = vec("scale_min");
    model.scale_range = vec("scale_range");
    model.weights = vec("w");
    return model;
}

}  // namespace plotminer::svm
