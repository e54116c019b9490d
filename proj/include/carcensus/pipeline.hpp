#pragma once

#include <cstdint>
#include <vector>

#include "carcensus/census.hpp"
#include "carcensus/demographics.hpp"
#include "carcensus/spatial.hpp"
#include "carcensus/synth.hpp"

namespace carcensus {

// Calibrates a synthetic city end to end: isotonic fit on a validation slice
// of images (matched to planted truth at the IOU threshold), then applies the
// model to every detection. Returns the calibrated records, sorted by image.
std::vector<DetectionRecord> calibrate_city(const SyntheticCity& city,
                                            double validation_fraction = 0.2,
                                            double iou_threshold = 0.5);

// Per-zip point pattern: zip centroid with the zip's estimated average price.
PointPattern zip_price_pattern(const SyntheticCity& city,
                               const std::vector<RegionStats>& stats);

struct DemoConfig {
    std::uint64_t seed = 1;
    int zip_count = 100;
    int images_per_zip = 60;
    double price_coupling = 0.9;
    double train_fraction = 0.18;
    int segregated_zip_count = 64;
    int value_shuffles = 100;
};

struct DemoResult {
    double holdout_income_r = 0.0;
    int avg_price_correlation_rank = 0;  // 1-based rank of avg_price by |r|
    double morans_i_segregated = 0.0;
    double morans_i_expect = 0.0;
    int shuffles_below = 0;  // of value_shuffles, how many had smaller I
    double permutation_p = 1.0;
    int train_regions = 0;
    int eval_regions = 0;
};

// The full post-detection pipeline against the synthetic oracle:
// synth -> calibrate -> aggregate -> features -> ridge -> held-out Pearson r,
// plus Moran's I of a segregated city against value shuffles.
DemoResult run_demo(const DemoConfig& config);

}  // namespace carcensus
