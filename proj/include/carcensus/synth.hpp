#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "carcensus/records.hpp"
#include "carcensus/taxonomy.hpp"

namespace carcensus {

// How zip median incomes are laid out over the zip grid.
enum class IncomeLayout {
    Random,    // seeded uniform draw per zip
    Gradient,  // income increases with the zip's grid column
    TwoBlock,  // west half rich, east half poor (for segregation tests)
};

struct SyntheticCityConfig {
    int zip_count = 100;
    int images_per_zip = 60;
    double income_min = 20000.0;
    double income_max = 120000.0;
    // 0 decouples car price from income; 1 ties class choice tightly to it.
    double price_coupling = 1.0;
    IncomeLayout layout = IncomeLayout::Random;

    // Planted car population.
    double cars_per_image = 2.0;
    int make_count = 24;
    int classes_per_make = 10;

    // Detector noise.
    double true_score_mean = 2.0;
    double true_score_sd = 1.0;
    double false_score_mean = -1.0;
    double false_score_sd = 1.0;
    double false_boxes_per_image = 1.0;
    double class_prob_top = 0.7;  // softmax mass on the true class
    // True boxes follow a concentrated location/size distribution when set,
    // making the location prior informative; uniform placement otherwise.
    bool planted_location_prior = true;

    std::uint64_t seed = 1;

    int image_width = 640;
    int image_height = 480;
};

struct SyntheticCity {
    ClassTable taxonomy;
    std::vector<GeoImage> images;          // sorted by image_id
    std::vector<DetectionRecord> detections;  // sorted by image_id, car_probability unset
    // Planted car boxes per image with their true class, for calibration and
    // AP evaluation.
    std::unordered_map<std::string, std::vector<std::pair<BBox, int>>> truth_boxes;
    std::vector<GroundTruthRow> ground_truth;  // exact planted per-zip averages
};

// Deterministic per seed: the same config yields byte-identical outputs.
SyntheticCity synth_city(const SyntheticCityConfig& config);

// Convenience for ImageDetections-based APIs (AP, calibration, histograms).
std::vector<struct ImageDetections> to_image_detections(const SyntheticCity& city);

}  // namespace carcensus
