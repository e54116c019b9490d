#include "carcensus/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "carcensus/errors.hpp"

namespace carcensus {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}  // namespace

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

void SpatialWeights::add_symmetric(size_t i, size_t j, double w) {
    rows_[i].emplace_back(static_cast<std::uint32_t>(j), w);
    rows_[j].emplace_back(static_cast<std::uint32_t>(i), w);
}

double SpatialWeights::total() const {
    double t = 0.0;
    for (const auto& row : rows_)
        for (const auto& [j, w] : row) t += w;
    return t;
}

SpatialWeights SpatialWeights::row_standardized() const {
    SpatialWeights out(size());
    for (size_t i = 0; i < size(); ++i) {
        double s = 0.0;
        for (const auto& [j, w] : rows_[i]) s += w;
        out.rows_[i] = rows_[i];
        if (s > 0.0)
            for (auto& [j, w] : out.rows_[i]) w /= s;
    }
    return out;
}

SpatialWeights build_weights(std::span<const SpatialPoint> points, const WeightScheme& scheme) {
    const size_t n = points.size();
    if (n < 2) throw std::invalid_argument("build_weights: need at least 2 points");

    SpatialWeights w(n);
    bool any_positive_distance = false;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double d = haversine_m(points[i].latitude, points[i].longitude,
                                         points[j].latitude, points[j].longitude);
            if (d > 0.0) any_positive_distance = true;
            if (const auto* inv = std::get_if<InverseDistanceSquared>(&scheme)) {
                const double dc = std::max(d, inv->d_floor_m);
                w.add_symmetric(i, j, 1.0 / (dc * dc));
            } else {
                const auto& band = std::get<DistanceBand>(scheme);
                if (d <= band.band_m) w.add_symmetric(i, j, 1.0);
            }
        }
    }
    if (!any_positive_distance)
        throw DegenerateError("build_weights: all points coincident");
    if (w.total() <= 0.0)
        throw DegenerateError("build_weights: no positive weights (band too narrow?)");
    return w;
}

double morans_i(std::span<const double> values, const SpatialWeights& weights) {
    const size_t n = values.size();
    if (n < 2 || n != weights.size())
        throw std::invalid_argument("morans_i: need N >= 2 values matching the weight matrix");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    if (ss <= 0.0) throw DegenerateError("morans_i: values are constant (zero variance)");

    double cross = 0.0;
    double wsum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double di = values[i] - mean;
        for (const auto& [j, w] : weights.row(i)) {
            cross += w * di * (values[j] - mean);
            wsum += w;
        }
    }
    return static_cast<double>(n) * cross / (wsum * ss);
}

double morans_i(const PointPattern& pattern, const SpatialWeights& weights) {
    std::vector<double> values;
    values.reserve(pattern.size());
    for (const SpatialPoint& p : pattern) values.push_back(p.value);
    return morans_i(values, weights);
}

double morans_i_significance(const PointPattern& pattern, const SpatialWeights& weights,
                             int permutations, std::uint64_t seed) {
    if (permutations < 99)
        throw std::invalid_argument("morans_i_significance: need at least 99 permutations");
    std::vector<double> values;
    values.reserve(pattern.size());
    for (const SpatialPoint& p : pattern) values.push_back(p.value);
    const double observed = std::abs(morans_i(values, weights));

    std::mt19937_64 rng(seed);
    int at_least = 0;
    std::vector<double> perm = values;
    for (int k = 0; k < permutations; ++k) {
        std::shuffle(perm.begin(), perm.end(), rng);
        if (std::abs(morans_i(perm, weights)) >= observed) ++at_least;
    }
    return (1.0 + at_least) / (1.0 + permutations);
}

std::vector<std::optional<double>> getis_ord_gistar(const PointPattern& pattern,
                                                    const SpatialWeights& weights) {
    const size_t n = pattern.size();
    if (n < 2 || n != weights.size())
        throw std::invalid_argument("getis_ord_gistar: need N >= 2 points matching the weights");
    double mean = 0.0;
    for (const SpatialPoint& p : pattern) mean += p.value;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const SpatialPoint& p : pattern) ss += (p.value - mean) * (p.value - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));  // population form

    std::vector<std::optional<double>> z(n);
    for (size_t i = 0; i < n; ++i) {
        // Self-inclusion: w_ii = 1 for the starred statistic.
        double wx = pattern[i].value;
        double wsum = 1.0;
        double wsq = 1.0;
        for (const auto& [j, w] : weights.row(i)) {
            wx += w * pattern[j].value;
            wsum += w;
            wsq += w * w;
        }
        const double var_term =
            (static_cast<double>(n) * wsq - wsum * wsum) / (static_cast<double>(n) - 1.0);
        const double denom = sd * std::sqrt(std::max(var_term, 0.0));
        if (denom > 0.0) z[i] = (wx - mean * wsum) / denom;
    }
    return z;
}

const std::string& cluster_label_name(ClusterLabel label) {
    static const std::string names[3] = {"hot", "cold", "none"};
    return names[static_cast<int>(label)];
}

std::vector<ClusterLabel> classify_clusters(std::span<const std::optional<double>> zscores,
                                            double hot_threshold, double cold_threshold) {
    if (!(hot_threshold > 0.0) || !(cold_threshold < 0.0))
        throw std::invalid_argument("classify_clusters: need hot > 0 > cold");
    std::vector<ClusterLabel> labels;
    labels.reserve(zscores.size());
    for (const auto& z : zscores) {
        if (z && *z >= hot_threshold)
            labels.push_back(ClusterLabel::Hot);
        else if (z && *z <= cold_threshold)
            labels.push_back(ClusterLabel::Cold);
        else
            labels.push_back(ClusterLabel::None);
    }
    return labels;
}

PointPattern read_point_pattern_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open point file: " + path);
    PointPattern out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        SpatialPoint p;
        const char* s = line.c_str();
        const char* end = s + line.size();
        auto read_field = [&](double& v) {
            while (s != end && (*s == '\t' || *s == ' ')) ++s;
            auto [np, ec] = std::from_chars(s, end, v);
            if (ec != std::errc())
                throw ParseError("line " + std::to_string(line_no) + ": bad point field");
            s = np;
        };
        read_field(p.latitude);
        read_field(p.longitude);
        read_field(p.value);
        out.push_back(p);
    }
    return out;
}

void write_point_pattern_file(const std::string& path, const PointPattern& pattern) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    const auto put = [&out](double v) {
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, p - buf);
    };
    for (const SpatialPoint& p : pattern) {
        put(p.latitude);
        out << '\t';
        put(p.longitude);
        out << '\t';
        put(p.value);
        out << '\n';
    }
}

}  // namespace carcensus
