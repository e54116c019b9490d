#include "carcensus/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "carcensus/errors.hpp"

namespace carcensus {

int Histogram::bin_of(double v) const {
    const double lo = edges.front();
    const double hi = edges.back();
    const double width = (hi - lo) / bins();
    const int b = static_cast<int>(std::floor((v - lo) / width));
    return std::clamp(b, 0, bins() - 1);
}

ResolutionHistogram fit_resolution_hist(std::span<const BBox> boxes, int bins) {
    if (boxes.empty()) throw DegenerateError("fit_resolution_hist: empty input");
    if (bins <= 0) throw std::invalid_argument("fit_resolution_hist: bins must be positive");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::vector<double> res;
    res.reserve(boxes.size());
    for (const BBox& b : boxes) {
        const double r = std::sqrt(b.width * b.height);
        res.push_back(r);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (hi <= lo) {  // all boxes identical: one half-unit bin either side
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + (hi - lo) * i / bins);
    h.probs.assign(bins, 0.0);
    for (double r : res) h.probs[h.bin_of(r)] += 1.0;
    for (double& p : h.probs) p /= static_cast<double>(res.size());
    return h;
}

namespace {

int sample_bin(const Histogram& hist, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double cum = 0.0;
    for (int b = 0; b < hist.bins(); ++b) {
        cum += hist.probs[b];
        if (x < cum) return b;
    }
    // Residual rounding mass lands in the last non-empty bin.
    for (int b = hist.bins() - 1; b >= 0; --b)
        if (hist.probs[b] > 0.0) return b;
    return hist.bins() - 1;
}

}  // namespace

double sample_resolution(const ResolutionHistogram& hist, std::mt19937_64& rng) {
    const int b = sample_bin(hist, rng);
    std::uniform_real_distribution<double> u(hist.edges[b], hist.edges[b + 1]);
    return u(rng);
}

IouHistogram fit_iou_hist(std::span<const ImageDetections> images, double iou_threshold,
                          int bins) {
    if (bins <= 0) throw std::invalid_argument("fit_iou_hist: bins must be positive");
    Histogram h;
    for (int i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / bins);
    h.probs.assign(bins, 0.0);
    size_t matches = 0;
    for (const ImageDetections& img : images) {
        for (const MatchedPair& m : greedy_match(img, iou_threshold)) {
            h.probs[h.bin_of(m.iou)] += 1.0;
            ++matches;
        }
    }
    if (matches == 0) throw DegenerateError("fit_iou_hist: no matched detection-truth pairs");
    for (double& p : h.probs) p /= static_cast<double>(matches);
    return h;
}

BBox sample_crop(const BBox& truth, double image_width, double image_height,
                 const IouHistogram& hist, std::mt19937_64& rng) {
    constexpr int kBudget = 10000;
    const int target = sample_bin(hist, rng);
    const double lo = hist.edges[target];
    const double hi = hist.edges[target + 1];
    // Proposal spread shrinks for high-IOU targets; full spread (shifts up to
    // +-50% of box size, scale in [0.5, 2]) reaches bins down to ~0.1.
    const double spread = std::clamp(2.0 * (1.0 - lo), 0.05, 1.0);
    std::uniform_real_distribution<double> shift(-0.5 * spread, 0.5 * spread);
    std::uniform_real_distribution<double> log_scale(spread * std::log(0.5),
                                                     spread * std::log(2.0));
    for (int it = 0; it < kBudget; ++it) {
        BBox prop = truth;
        const double s = std::exp(log_scale(rng));
        prop.width = truth.width * s;
        prop.height = truth.height * s;
        prop.x_center = truth.x_center + shift(rng) * truth.width;
        prop.y_center = truth.y_center + shift(rng) * truth.height;
        prop = clamp_to_image(prop, image_width, image_height);
        const double ov = iou(prop, truth);
        // Top bin is closed at 1.0 so an exact-match crop is accepted.
        const bool in_bin = ov >= lo && (ov < hi || (target == hist.bins() - 1 && ov <= hi));
        if (in_bin) return prop;
    }
    throw DegenerateError("sample_crop: rejection budget exhausted for IOU bin [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
}

std::vector<std::string> rebalance(std::span<const std::string> streetview_ids,
                                   std::span<const std::string> product_ids, int factor,
                                   std::uint64_t seed) {
    if (factor < 1) throw std::invalid_argument("rebalance: factor must be >= 1");
    std::vector<std::string> out;
    out.reserve(streetview_ids.size() * factor + product_ids.size());
    for (const std::string& id : streetview_ids)
        for (int k = 0; k < factor; ++k) out.push_back(id);
    out.insert(out.end(), product_ids.begin(), product_ids.end());
    std::mt19937_64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

void save_histogram(const Histogram& hist, std::ostream& out) {
    out << "histogram v1\n" << hist.bins() << '\n';
    out.precision(17);
    for (int b = 0; b < hist.bins(); ++b)
        out << hist.edges[b] << ' ' << hist.edges[b + 1] << ' ' << hist.probs[b] << '\n';
}

Histogram load_histogram(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "histogram" || version != "v1") throw ParseError("not a histogram v1 file");
    int bins = 0;
    in >> bins;
    if (!in || bins <= 0) throw ParseError("malformed histogram header");
    Histogram h;
    h.probs.resize(bins);
    h.edges.resize(bins + 1);
    for (int b = 0; b < bins; ++b) {
        double lo = 0, hi = 0;
        if (!(in >> lo >> hi >> h.probs[b])) throw ParseError("truncated histogram");
        h.edges[b] = lo;
        h.edges[b + 1] = hi;
    }
    return h;
}

}  // namespace carcensus
