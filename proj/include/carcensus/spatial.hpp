#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace carcensus {

struct SpatialPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    double value = 0.0;
};

using PointPattern = std::vector<SpatialPoint>;

// Great-circle distance in meters (mean Earth radius 6,371 km).
double haversine_m(double lat1, double lon1, double lat2, double lon2);

struct InverseDistanceSquared {
    double d_floor_m = 1.0;  // cap for coincident points
};
struct DistanceBand {
    double band_m = 0.0;
};
using WeightScheme = std::variant<InverseDistanceSquared, DistanceBand>;

// Symmetric pairwise weights, stored as sparse rows with zero diagonal.
class SpatialWeights {
public:
    explicit SpatialWeights(size_t n) : rows_(n) {}

    size_t size() const { return rows_.size(); }
    const std::vector<std::pair<std::uint32_t, double>>& row(size_t i) const { return rows_[i]; }
    void add_symmetric(size_t i, size_t j, double w);
    double total() const;

    // Divides each row by its row sum (rows with zero sum left untouched).
    // This makes the matrix asymmetric; Moran's I stays well-defined.
    SpatialWeights row_standardized() const;

private:
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows_;
};

SpatialWeights build_weights(std::span<const SpatialPoint> points, const WeightScheme& scheme);

// Global Moran's I of the pattern's values under the given weights.
// Null expectation is -1/(N-1), reported by morans_i_expectation.
double morans_i(std::span<const double> values, const SpatialWeights& weights);
double morans_i(const PointPattern& pattern, const SpatialWeights& weights);

inline double morans_i_expectation(size_t n) { return -1.0 / (static_cast<double>(n) - 1.0); }

// Two-sided pseudo p-value: (1 + #{|I_perm| >= |I_obs|}) / (1 + permutations).
double morans_i_significance(const PointPattern& pattern, const SpatialWeights& weights,
                             int permutations, std::uint64_t seed);

// Getis-Ord Gi* z-score per point (self-inclusion with w_ii = 1, population
// standard deviation). Points with a zero denominator come back as nullopt.
std::vector<std::optional<double>> getis_ord_gistar(const PointPattern& pattern,
                                                    const SpatialWeights& weights);

enum class ClusterLabel { Hot, Cold, None };
const std::string& cluster_label_name(ClusterLabel label);

std::vector<ClusterLabel> classify_clusters(std::span<const std::optional<double>> zscores,
                                            double hot_threshold = 1.96,
                                            double cold_threshold = -1.96);

// Per-point file: lat <tab> lon <tab> value, no header.
PointPattern read_point_pattern_file(const std::string& path);
void write_point_pattern_file(const std::string& path, const PointPattern& pattern);

}  // namespace carcensus
