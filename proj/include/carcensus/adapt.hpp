#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "carcensus/calibrate.hpp"
#include "carcensus/geometry.hpp"

namespace carcensus {

// Equal-width histogram with explicit edges; probabilities sum to 1.
struct Histogram {
    std::vector<double> edges;  // bins + 1, strictly increasing
    std::vector<double> probs;

    int bins() const { return static_cast<int>(probs.size()); }
    // Bin containing v, clamped to the edge bins.
    int bin_of(double v) const;
};

using ResolutionHistogram = Histogram;
using IouHistogram = Histogram;

// Histogram of box resolution r = sqrt(width * height) over [min r, max r].
ResolutionHistogram fit_resolution_hist(std::span<const BBox> boxes, int bins = 35);

// Picks a bin by probability, then a value uniform within it.
double sample_resolution(const ResolutionHistogram& hist, std::mt19937_64& rng);

// Histogram of matched detection-truth IOUs (greedy matching at the threshold).
IouHistogram fit_iou_hist(std::span<const ImageDetections> images, double iou_threshold,
                          int bins = 10);

// Jitters the truth box until its IOU with the truth lands in a bin sampled
// from the histogram. Throws after 10,000 rejected proposals.
BBox sample_crop(const BBox& truth, double image_width, double image_height,
                 const IouHistogram& hist, std::mt19937_64& rng);

// Each street-view id `factor` times plus every product id once, in a seeded
// shuffled order.
std::vector<std::string> rebalance(std::span<const std::string> streetview_ids,
                                   std::span<const std::string> product_ids, int factor = 10,
                                   std::uint64_t seed = 0);

void save_histogram(const Histogram& hist, std::ostream& out);
Histogram load_histogram(std::istream& in);

}  // namespace carcensus
