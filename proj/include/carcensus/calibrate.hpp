#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carcensus/geometry.hpp"

namespace carcensus {

struct ScoredBox {
    double score = 0.0;
    BBox box;
};

// Detections and ground truth of one image, used by AP evaluation, alpha
// learning and calibration-pair extraction.
struct ImageDetections {
    std::string image_id;
    double image_width = 0.0;
    double image_height = 0.0;
    std::vector<ScoredBox> detections;
    std::vector<BBox> truths;
};

// 3-D histogram over (x_center/width, y_center/height, log area), with a
// pseudo-count of 1 in every bin and a learned weight alpha on the log prior.
class LocationPrior {
public:
    LocationPrior() = default;
    LocationPrior(int bins_per_axis, std::vector<double> counts, double log_area_min,
                  double log_area_max, double alpha);

    int bins_per_axis() const { return bins_; }
    int total_bins() const { return bins_ * bins_ * bins_; }
    double alpha() const { return alpha_; }
    void set_alpha(double a) { alpha_ = a; }
    double log_area_min() const { return log_area_min_; }
    double log_area_max() const { return log_area_max_; }
    const std::vector<double>& counts() const { return counts_; }

    // Flat bin index for a box; out-of-range coordinates clamp to edge bins.
    int bin_index(const BBox& box, double image_width, double image_height) const;
    double bin_probability(int flat_index) const;

private:
    int bins_ = 0;
    std::vector<double> counts_;
    double log_area_min_ = 0.0;
    double log_area_max_ = 1.0;
    double alpha_ = 0.0;
    double total_ = 0.0;
};

struct TrainingBox {
    BBox box;
    double image_width = 0.0;
    double image_height = 0.0;
};

LocationPrior fit_location_prior(std::span<const TrainingBox> boxes, int bins_per_axis = 20);

double prior_log_prob(const LocationPrior& prior, const BBox& box, double image_width,
                      double image_height);

// score + alpha * log P(x, y, log area)
double augment_score(const LocationPrior& prior, double raw_score, const BBox& box,
                     double image_width, double image_height);

// All-points interpolated AP with greedy score-descending matching at the given
// IOU threshold. Throws DegenerateError when there is no ground truth at all.
double average_precision(std::span<const ImageDetections> images, double iou_threshold);

// Grid search maximizing AP of augmented scores; ties break toward smaller alpha.
double learn_alpha(const LocationPrior& prior, std::span<const ImageDetections> validation,
                   double iou_threshold, std::span<const double> alpha_grid);

inline std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 20; ++i) g.push_back(0.1 * i);
    return g;
}

// Monotone non-decreasing step function fitted by pool-adjacent-violators.
struct IsotonicModel {
    std::vector<double> breakpoints;  // strictly increasing block start scores
    std::vector<double> values;       // non-decreasing, one per block
};

// Least-squares monotone fit of label on score. Equal scores are pre-merged by
// label mean. Labels must be in {0, 1}.
IsotonicModel fit_isotonic(std::span<const std::pair<double, double>> score_label_pairs);

// Step evaluation with clamping below the first and above the last breakpoint.
double apply_isotonic(const IsotonicModel& model, double score);

// Greedy matching shared with fit_iou_hist: returns (detection index within
// image, truth index, iou) triples per image, in match order.
struct MatchedPair {
    double score = 0.0;
    double iou = 0.0;
};
std::vector<MatchedPair> greedy_match(const ImageDetections& image, double iou_threshold);

// (score, label) pairs for calibration: every detection labeled 1 when greedily
// matched to a truth at IOU >= threshold, else 0.
std::vector<std::pair<double, double>> calibration_pairs(std::span<const ImageDetections> images,
                                                         double iou_threshold);

void save_prior(const LocationPrior& prior, std::ostream& out);
LocationPrior load_prior(std::istream& in);
void save_isotonic(const IsotonicModel& model, std::ostream& out);
IsotonicModel load_isotonic(std::istream& in);

}  // namespace carcensus
