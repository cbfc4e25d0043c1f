#include "plotminer/features.hpp"

#include "plotminer/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace plotminer::features {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kCoefficientLimit = 255.0;

bool token_matches(const std::string& token, const std::string& keyword)
{
    if (token == keyword) {
        return true;
    }
    // crude plural/singular folding: "plots" ~ "plot", "slope" ~ "slopes"
    if (token.size() == keyword.size() + 1 && token.back() == 's' &&
        token.compare(0, keyword.size(), keyword) == 0) {
        return true;
    }
    return keyword.size() == token.size() + 1 && keyword.back() == 's' &&
           keyword.compare(0, token.size(), token) == 0;
}

}  // namespace

double LineSegment::row_at(double col) const
{
    const double s = std::sin(theta_deg * kDegToRad);
    if (std::abs(s) < 1e-12) {
        return std::nan("");
    }
    return (rho - col * std::cos(theta_deg * kDegToRad)) / s;
}

double LineSegment::col_at(double row) const
{
    const double c = std::cos(theta_deg * kDegToRad);
    if (std::abs(c) < 1e-12) {
        return std::nan("");
    }
    return (rho - row * std::sin(theta_deg * kDegToRad)) / c;
}

double LineSegment::distance(double row, double col) const
{
    const double t = theta_deg * kDegToRad;
    return std::abs(col * std::cos(t) + row * std::sin(t) - rho);
}

double orientation_from_theta(double theta_deg)
{
    double o = std::fmod(90.0 - theta_deg, 180.0);
    if (o < 0) {
        o += 180.0;
    }
    if (o >= 180.0 - 1e-9) {
        o = 0.0;
    }
    return o;
}

double mutual_angle(double orientation_a, double orientation_b)
{
    const double d = std::fmod(std::abs(orientation_a - orientation_b), 180.0);
    return std::min(d, 180.0 - d);
}

int wavelet_bin(double coefficient)
{
    constexpr double width = 2.0 * kCoefficientLimit / kWaveletBins;
    const int bin = static_cast<int>(std::floor((coefficient + kCoefficientLimit) / width));
    return std::clamp(bin, 0, kWaveletBins - 1);
}

std::vector<double> block_wavelet_features(const raster::GrayImage& img, int block_size)
{
    if (block_size < 2 || block_size % 2 != 0) {
        throw Error(ErrorCode::InvalidArgument, "block size must be even and >= 2");
    }
    if (block_size > img.width() || block_size > img.height()) {
        throw Error(ErrorCode::BlockTooLarge,
                    "block size " + std::to_string(block_size) + " exceeds image " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    const int padded_w = (img.width() + block_size - 1) / block_size * block_size;
    const int padded_h = (img.height() + block_size - 1) / block_size * block_size;
    auto px = [&](int r, int c) {
        return static_cast<double>(
            img.at(std::min(r, img.height() - 1), std::min(c, img.width() - 1)));
    };

    // LH, HL, HH histograms in that order
    std::vector<double> hist(kIsDim, 0.0);
    long cells = 0;
    for (int br = 0; br < padded_h; br += block_size) {
        for (int bc = 0; bc < padded_w; bc += block_size) {
            for (int r = br; r < br + block_size; r += 2) {
                for (int c = bc; c < bc + block_size; c += 2) {
                    const double a = px(r, c);
                    const double b = px(r, c + 1);
                    const double cc = px(r + 1, c);
                    const double d = px(r + 1, c + 1);
                    const double lh = (a + b - cc - d) / 2.0;
                    const double hl = (a - b + cc - d) / 2.0;
                    const double hh = (a - b - cc + d) / 2.0;
                    hist[wavelet_bin(lh)] += 1;
                    hist[kWaveletBins + wavelet_bin(hl)] += 1;
                    hist[2 * kWaveletBins + wavelet_bin(hh)] += 1;
                    ++cells;
                }
            }
        }
    }
    for (auto& h : hist) {
        h /= static_cast<double>(cells);
    }
    return hist;
}

std::vector<LineSegment> hough_lines(const raster::BinaryImage& img, const HoughParams& params)
{
    if (params.theta_step <= 0 || params.rho_step <= 0) {
        throw Error(ErrorCode::InvalidArgument, "hough steps must be positive");
    }
    const int n_theta = static_cast<int>(std::lround(180.0 / params.theta_step));
    if (n_theta < 1 || std::abs(n_theta * params.theta_step - 180.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "theta step must divide 180");
    }
    if (params.min_votes < 1) {
        throw Error(ErrorCode::InvalidArgument, "min_votes must be >= 1");
    }
    const double rho_max = std::hypot(img.width() - 1, img.height() - 1);
    const int half = static_cast<int>(std::ceil(rho_max / params.rho_step));
    const int n_rho = 2 * half + 1;

    std::vector<double> cos_t(n_theta);
    std::vector<double> sin_t(n_theta);
    for (int k = 0; k < n_theta; ++k) {
        cos_t[k] = std::cos(k * params.theta_step * kDegToRad);
        sin_t[k] = std::sin(k * params.theta_step * kDegToRad);
    }
    std::vector<int> acc(static_cast<std::size_t>(n_theta) * n_rho, 0);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            if (!img.at(r, c)) {
                continue;
            }
            for (int k = 0; k < n_theta; ++k) {
                const double rho = c * cos_t[k] + r * sin_t[k];
                const int idx = static_cast<int>(std::lround(rho / params.rho_step)) + half;
                ++acc[static_cast<std::size_t>(k) * n_rho + idx];
            }
        }
    }

    auto cell = [&](int k, int idx) { return acc[static_cast<std::size_t>(k) * n_rho + idx]; };
    // theta wraps at 180 with rho negated
    auto neighbour = [&](int k, int idx, int dk, int dr, int& nk, int& nidx) {
        nk = k + dk;
        nidx = idx + dr;
        if (nk < 0 || nk >= n_theta) {
            nk = (nk + n_theta) % n_theta;
            nidx = n_rho - 1 - nidx;
        }
        return nidx >= 0 && nidx < n_rho;
    };

    std::vector<LineSegment> peaks;
    for (int k = 0; k < n_theta; ++k) {
        for (int idx = 0; idx < n_rho; ++idx) {
            const int v = cell(k, idx);
            if (v < params.min_votes) {
                continue;
            }
            bool is_max = true;
            for (int dk = -1; dk <= 1 && is_max; ++dk) {
                for (int dr = -1; dr <= 1 && is_max; ++dr) {
                    if (dk == 0 && dr == 0) {
                        continue;
                    }
                    int nk = 0;
                    int nidx = 0;
                    if (!neighbour(k, idx, dk, dr, nk, nidx) || (nk == k && nidx == idx)) {
                        continue;
                    }
                    const int nv = cell(nk, nidx);
                    // plateaus keep only their first cell in (theta, rho) order
                    if (nv > v || (nv == v && std::pair(nk, nidx) < std::pair(k, idx))) {
                        is_max = false;
                    }
                }
            }
            if (is_max) {
                LineSegment line;
                line.theta_deg = k * params.theta_step;
                line.rho = (idx - half) * params.rho_step;
                line.votes = v;
                line.orientation_deg = orientation_from_theta(line.theta_deg);
                peaks.push_back(line);
            }
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const LineSegment& a, const LineSegment& b) {
        if (a.votes != b.votes) {
            return a.votes > b.votes;
        }
        if (a.theta_deg != b.theta_deg) {
            return a.theta_deg < b.theta_deg;
        }
        return a.rho < b.rho;
    });
    if (params.top_k >= 0 && peaks.size() > static_cast<std::size_t>(params.top_k)) {
        peaks.resize(params.top_k);
    }
    return peaks;
}

std::vector<double> axes_features(const std::vector<LineSegment>& lines, double img_diag)
{
    if (img_diag <= 0) {
        throw Error(ErrorCode::InvalidArgument, "image diagonal must be positive");
    }
    std::vector<double> out(kCaDim, 0.0);
    if (!lines.empty()) {
        out[0] = lines[0].votes / img_diag;
    }
    if (lines.size() >= 2) {
        out[1] = lines[1].votes / img_diag;
        out[2] = mutual_angle(lines[0].orientation_deg, lines[1].orientation_deg) / 90.0;
    }
    return out;
}

std::vector<std::string> default_lexicon()
{
    return {"distribution", "slope", "axes", "plot", "range"};
}

std::vector<std::string> load_lexicon(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::UnreadableFile, path.string());
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = tokenize_caption(line);
        if (!tokens.empty()) {
            words.push_back(tokens.front());
        }
    }
    return words;
}

std::vector<std::string> tokenize_caption(std::string_view caption)
{
    std::string norm(caption);
    for (auto& ch : norm) {
        const auto u = static_cast<unsigned char>(ch);
        ch = std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ';
    }
    std::istringstream in(norm);
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) {
        tokens.push_back(tok);
    }
    return tokens;
}

std::vector<bool> caption_features(std::string_view caption,
                                   const std::vector<std::string>& lexicon)
{
    const auto tokens = tokenize_caption(caption);
    std::vector<bool> out(lexicon.size(), false);
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
        out[i] = std::any_of(tokens.begin(), tokens.end(),
                             [&](const std::string& t) { return token_matches(t, lexicon[i]); });
    }
    return out;
}

std::string FamilyMask::to_string() const
{
    std::string out;
    for (auto [fam, name] : {std::pair{Family::IS, "IS"}, std::pair{Family::CA, "CA"},
                             std::pair{Family::CT, "CT"}}) {
        if (has(fam)) {
            out += out.empty() ? "" : "+";
            out += name;
        }
    }
    return out.empty() ? "none" : out;
}

FamilyMask FamilyMask::parse(std::string_view text)
{
    std::string upper(text);
    for (auto& ch : upper) {
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    if (upper == "ALL") {
        return all();
    }
    FamilyMask mask;
    std::size_t start = 0;
    while (start <= upper.size()) {
        const auto end = std::min(upper.find('+', start), upper.size());
        const std::string part = upper.substr(start, end - start);
        if (part == "IS") {
            mask = mask.with(Family::IS);
        } else if (part == "CA") {
            mask = mask.with(Family::CA);
        } else if (part == "CT") {
            mask = mask.with(Family::CT);
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown feature family '" + part + "'");
        }
        start = end + 1;
    }
    return mask;
}

std::vector<double> FeatureVector::dense() const
{
    std::vector<double> out;
    out.reserve(dimension());
    out.insert(out.end(), is_features.begin(), is_features.end());
    out.insert(out.end(), ca_features.begin(), ca_features.end());
    for (bool b : ct_features) {
        out.push_back(b ? 1.0 : 0.0);
    }
    return out;
}

FeatureVector assemble_feature_vector(const std::optional<std::vector<double>>& is,
                                      const std::optional<std::vector<double>>& ca,
                                      const std::optional<std::vector<bool>>& ct,
                                      std::size_t lexicon_size)
{
    if (!is && !ca && !ct) {
        throw Error(ErrorCode::EmptyFeatureSet, "no feature family supplied");
    }
    FeatureVector fv;
    fv.is_features.assign(kIsDim, 0.0);
    fv.ca_features.assign(kCaDim, 0.0);
    fv.ct_features.assign(lexicon_size, false);
    if (is) {
        if (is->size() != static_cast<std::size_t>(kIsDim)) {
            throw Error(ErrorCode::DimensionMismatch, "IS family must have 48 entries");
        }
        fv.is_features = *is;
        fv.mask = fv.mask.with(Family::IS);
    }
    if (ca) {
        if (ca->size() != static_cast<std::size_t>(kCaDim)) {
            throw Error(ErrorCode::DimensionMismatch, "CA family must have 3 entries");
        }
        fv.ca_features = *ca;
        fv.mask = fv.mask.with(Family::CA);
    }
    if (ct) {
        if (ct->size() != lexicon_size) {
            throw Error(ErrorCode::DimensionMismatch, "CT family size differs from lexicon");
        }
        fv.ct_features = *ct;
        fv.mask = fv.mask.with(Family::CT);
    }
    return fv;
}

FeatureVector restrict_to(const FeatureVector& fv, FamilyMask keep)
{
    FeatureVector out = fv;
    out.mask = FamilyMask{fv.mask.bits & keep.bits};
    if (!out.mask.has(Family::IS)) {
        std::fill(out.is_features.begin(), out.is_features.end(), 0.0);
    }
    if (!out.mask.has(Family::CA)) {
        std::fill(out.ca_features.begin(), out.ca_features.end(), 0.0);
    }
    if (!out.mask.has(Family::CT)) {
        std::fill(out.ct_features.begin(), out.ct_features.end(), false);
    }
    return out;
}

FeatureVector extract_features(const raster::GrayImage& img,
                               const std::optional<std::string>& caption,
                               const FeatureConfig& config, bool invert)
{
    auto is = block_wavelet_features(img, config.block_size);
    const auto bin = raster::binarize(img, std::nullopt, invert);
    const auto lines = hough_lines(bin, config.hough);
    auto ca = axes_features(lines, std::hypot(img.width(), img.height()));
    std::optional<std::vector<bool>> ct;
    if (caption) {
        ct = caption_features(*caption, config.lexicon);
    }
    return assemble_feature_vector(std::move(is), std::move(ca), ct, config.lexicon.size());
}

}  // namespace plotminer::features
