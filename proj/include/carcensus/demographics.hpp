#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carcensus/census.hpp"

namespace carcensus {

// Ordered car-feature layout for one region. The default composition is
// avg_mpg, avg_price, cars_per_image, pct_foreign, 12 body-type percentages,
// the configured make percentages and one pooled "other make" slot.
struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<std::string> makes;

    int dimension() const { return static_cast<int>(names.size()); }

    static FeatureSchema with_makes(std::vector<std::string> makes);
    // Configured makes taken from the table in declaration order, capped at
    // max_makes (71 gives the default 88-dimensional layout).
    static FeatureSchema from_table(const ClassTable& table, int max_makes = 71);
};

// Regions with zero expected cars are rejected (throws DegenerateError).
std::vector<double> build_features(const RegionStats& stats, const FeatureSchema& schema);

struct RidgeModel {
    std::vector<double> weights;  // per standardized feature; 0 for dropped columns
    double intercept = 0.0;
    double lambda = 0.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_sd;      // 1 for dropped columns
    std::vector<int> dropped_columns;    // zero-variance columns excluded from the fit
    std::vector<std::string> feature_names;
};

// Penalized least squares on standardized features with an unpenalized
// intercept: w = (Z'Z + lambda I)^-1 Z'y on centered targets.
RidgeModel fit_ridge(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     double lambda);

double predict(const RidgeModel& model, std::span<const double> x);

// K-fold CV over the grid minimizing mean validation RMSE; ties break toward
// the larger lambda. Fold assignment is a seeded shuffle.
double select_lambda(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     std::span<const double> grid, int folds = 5, std::uint64_t seed = 0);

double pearson_r(std::span<const double> a, std::span<const double> b);

struct AttributeCorrelation {
    std::string name;
    std::optional<double> r;  // nullopt for constant columns
    std::optional<double> p;  // two-sided, t-distribution
};

// Pearson r of every feature column against the target, with p-values from
// t = r * sqrt((n-2)/(1-r^2)).
std::vector<AttributeCorrelation> correlate_attributes(
    const std::vector<std::vector<double>>& features, std::span<const std::string> names,
    std::span<const double> target);

void save_ridge_model(const RidgeModel& model, std::ostream& out);
RidgeModel load_ridge_model(std::istream& in);

}  // namespace carcensus
