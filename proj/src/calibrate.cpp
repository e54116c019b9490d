#include "carcensus/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "carcensus/errors.hpp"

namespace carcensus {

namespace {

// Per-image greedy matching: detections in descending score order each claim
// the unmatched truth with the largest IOU, if that IOU clears the threshold.
// Returns one TP flag per detection (original order).
std::vector<char> match_flags(const ImageDetections& image, double iou_threshold) {
    const size_t nd = image.detections.size();
    std::vector<size_t> order(nd);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return image.detections[a].score > image.detections[b].score;
    });
    std::vector<char> truth_used(image.truths.size(), 0);
    std::vector<char> tp(nd, 0);
    for (size_t d : order) {
        double best = 0.0;
        int best_t = -1;
        for (size_t t = 0; t < image.truths.size(); ++t) {
            if (truth_used[t]) continue;
            const double ov = iou(image.detections[d].box, image.truths[t]);
            if (ov > best) {
                best = ov;
                best_t = static_cast<int>(t);
            }
        }
        if (best_t >= 0 && best >= iou_threshold) {
            truth_used[best_t] = 1;
            tp[d] = 1;
        }
    }
    return tp;
}

}  // namespace

LocationPrior::LocationPrior(int bins_per_axis, std::vector<double> counts, double log_area_min,
                             double log_area_max, double alpha)
    : bins_(bins_per_axis),
      counts_(std::move(counts)),
      log_area_min_(log_area_min),
      log_area_max_(log_area_max),
      alpha_(alpha) {
    if (bins_ <= 0) throw std::invalid_argument("bins_per_axis must be positive");
    if (static_cast<int>(counts_.size()) != total_bins())
        throw std::invalid_argument("count array size does not match bins_per_axis^3");
    total_ = std::accumulate(counts_.begin(), counts_.end(), 0.0);
}

int LocationPrior::bin_index(const BBox& box, double image_width, double image_height) const {
    auto axis_bin = [this](double v) {
        const int b = static_cast<int>(std::floor(v * bins_));
        return std::clamp(b, 0, bins_ - 1);
    };
    const int bx = axis_bin(box.x_center / image_width);
    const int by = axis_bin(box.y_center / image_height);
    const double span = log_area_max_ - log_area_min_;
    const double la = span > 0.0 ? (std::log(box.area()) - log_area_min_) / span : 0.0;
    const int bz = axis_bin(la);
    return (bx * bins_ + by) * bins_ + bz;
}

double LocationPrior::bin_probability(int flat_index) const {
    return counts_[flat_index] / total_;
}

LocationPrior fit_location_prior(std::span<const TrainingBox> boxes, int bins_per_axis) {
    if (bins_per_axis <= 0) throw std::invalid_argument("bins_per_axis must be positive");
    double la_min = 0.0;
    double la_max = 1.0;
    if (!boxes.empty()) {
        la_min = std::numeric_limits<double>::infinity();
        la_max = -std::numeric_limits<double>::infinity();
        for (const TrainingBox& b : boxes) {
            const double la = std::log(b.box.area());
            la_min = std::min(la_min, la);
            la_max = std::max(la_max, la);
        }
        if (la_max <= la_min) la_max = la_min + 1.0;
    }
    const int total = bins_per_axis * bins_per_axis * bins_per_axis;
    std::vector<double> counts(total, 1.0);  // pseudo-count
    LocationPrior prior(bins_per_axis, std::move(counts), la_min, la_max, 0.0);
    std::vector<double> filled = prior.counts();
    for (const TrainingBox& b : boxes)
        filled[prior.bin_index(b.box, b.image_width, b.image_height)] += 1.0;
    return LocationPrior(bins_per_axis, std::move(filled), la_min, la_max, 0.0);
}

double prior_log_prob(const LocationPrior& prior, const BBox& box, double image_width,
                      double image_height) {
    return std::log(prior.bin_probability(prior.bin_index(box, image_width, image_height)));
}

double augment_score(const LocationPrior& prior, double raw_score, const BBox& box,
                     double image_width, double image_height) {
    return raw_score + prior.alpha() * prior_log_prob(prior, box, image_width, image_height);
}

double average_precision(std::span<const ImageDetections> images, double iou_threshold) {
    if (iou_threshold <= 0.0 || iou_threshold >= 1.0)
        throw std::invalid_argument("iou_threshold must be in (0,1)");
    size_t total_truths = 0;
    struct Entry {
        double score;
        size_t image;
        size_t det;
        char tp;
    };
    std::vector<Entry> entries;
    for (size_t i = 0; i < images.size(); ++i) {
        total_truths += images[i].truths.size();
        const auto flags = match_flags(images[i], iou_threshold);
        for (size_t d = 0; d < flags.size(); ++d)
            entries.push_back({images[i].detections[d].score, i, d, flags[d]});
    }
    if (total_truths == 0) throw DegenerateError("average_precision: no ground-truth boxes");
    std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.image != b.image) return images[a.image].image_id < images[b.image].image_id;
        return a.det < b.det;
    });

    // Precision-recall sweep; AP is the area under the right-continuous
    // precision envelope (all-points interpolation).
    std::vector<double> precision, recall;
    size_t tp = 0, fp = 0;
    for (const Entry& e : entries) {
        if (e.tp)
            ++tp;
        else
            ++fp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(total_truths));
    }
    double ap = 0.0;
    double max_prec = 0.0;
    double prev_recall = recall.empty() ? 0.0 : recall.back();
    for (size_t i = entries.size(); i-- > 0;) {
        max_prec = std::max(max_prec, precision[i]);
        const double r_lo = i == 0 ? 0.0 : recall[i - 1];
        ap += (recall[i] - r_lo) * max_prec;
        prev_recall = r_lo;
    }
    (void)prev_recall;
    return ap;
}

double learn_alpha(const LocationPrior& prior, std::span<const ImageDetections> validation,
                   double iou_threshold, std::span<const double> alpha_grid) {
    if (alpha_grid.empty()) throw std::invalid_argument("learn_alpha: empty alpha grid");
    std::vector<double> grid(alpha_grid.begin(), alpha_grid.end());
    std::sort(grid.begin(), grid.end());

    double best_alpha = grid.front();
    double best_ap = -1.0;
    std::vector<ImageDetections> augmented(validation.begin(), validation.end());
    for (double alpha : grid) {
        LocationPrior p = prior;
        p.set_alpha(alpha);
        for (size_t i = 0; i < validation.size(); ++i)
            for (size_t d = 0; d < validation[i].detections.size(); ++d)
                augmented[i].detections[d].score =
                    augment_score(p, validation[i].detections[d].score,
                                  validation[i].detections[d].box, validation[i].image_width,
                                  validation[i].image_height);
        const double ap = average_precision(augmented, iou_threshold);
        if (ap > best_ap) {  // strict: ties keep the smaller alpha
            best_ap = ap;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

IsotonicModel fit_isotonic(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("fit_isotonic: empty input");
    for (const auto& [s, y] : pairs)
        if (y != 0.0 && y != 1.0)
            throw std::invalid_argument("fit_isotonic: labels must be 0 or 1");

    std::vector<std::pair<double, double>> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end());

    // Merge equal scores into weighted points (label mean).
    std::vector<double> score, value, weight;
    for (const auto& [s, y] : sorted) {
        if (!score.empty() && score.back() == s) {
            value.back() = (value.back() * weight.back() + y) / (weight.back() + 1.0);
            weight.back() += 1.0;
        } else {
            score.push_back(s);
            value.push_back(y);
            weight.push_back(1.0);
        }
    }

    // Pool adjacent violators over blocks of merged points.
    struct Block {
        double value, weight;
        size_t first;  // index into `score`
    };
    std::vector<Block> blocks;
    for (size_t i = 0; i < score.size(); ++i) {
        blocks.push_back({value[i], weight[i], i});
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].value >= blocks.back().value) {
            Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
        }
    }

    IsotonicModel model;
    for (const Block& b : blocks) {
        model.breakpoints.push_back(score[b.first]);
        model.values.push_back(b.value);
    }
    return model;
}

double apply_isotonic(const IsotonicModel& model, double score) {
    if (model.breakpoints.empty()) throw StateError("apply_isotonic: unfitted model");
    auto it = std::upper_bound(model.breakpoints.begin(), model.breakpoints.end(), score);
    if (it == model.breakpoints.begin()) return model.values.front();
    return model.values[static_cast<size_t>(it - model.breakpoints.begin()) - 1];
}

std::vector<MatchedPair> greedy_match(const ImageDetections& image, double iou_threshold) {
    const auto flags = match_flags(image, iou_threshold);
    std::vector<MatchedPair> out;
    for (size_t d = 0; d < flags.size(); ++d) {
        if (!flags[d]) continue;
        // Recompute the matched IOU: best overlap among truths, same criterion
        // the matcher used when it claimed the truth.
        double best = 0.0;
        for (const BBox& t : image.truths) best = std::max(best, iou(image.detections[d].box, t));
        out.push_back({image.detections[d].score, best});
    }
    return out;
}

std::vector<std::pair<double, double>> calibration_pairs(std::span<const ImageDetections> images,
                                                         double iou_threshold) {
    std::vector<std::pair<double, double>> out;
    for (const ImageDetections& img : images) {
        const auto flags = match_flags(img, iou_threshold);
        for (size_t d = 0; d < flags.size(); ++d)
            out.emplace_back(img.detections[d].score, flags[d] ? 1.0 : 0.0);
    }
    return out;
}

void save_prior(const LocationPrior& prior, std::ostream& out) {
    out << "location_prior v1\n";
    out << "bins " << prior.bins_per_axis() << '\n';
    out.precision(17);
    out << "log_area_min " << prior.log_area_min() << '\n';
    out << "log_area_max " << prior.log_area_max() << '\n';
    out << "alpha " << prior.alpha() << '\n';
    const auto& c = prior.counts();
    for (size_t i = 0; i < c.size(); ++i) out << c[i] << (i + 1 == c.size() ? '\n' : ' ');
}

LocationPrior load_prior(std::istream& in) {
    std::string magic, version, key;
    in >> magic >> version;
    if (magic != "location_prior" || version != "v1")
        throw ParseError("not a location_prior v1 file");
    int bins = 0;
    double la_min = 0, la_max = 0, alpha = 0;
    in >> key >> bins >> key >> la_min >> key >> la_max >> key >> alpha;
    if (!in || bins <= 0) throw ParseError("malformed location_prior header");
    std::vector<double> counts(static_cast<size_t>(bins) * bins * bins);
    for (double& c : counts)
        if (!(in >> c)) throw ParseError("truncated location_prior count block");
    return LocationPrior(bins, std::move(counts), la_min, la_max, alpha);
}

void save_isotonic(const IsotonicModel& model, std::ostream& out) {
    out << "isotonic v1\n" << model.breakpoints.size() << '\n';
    out.precision(17);
    for (size_t i = 0; i < model.breakpoints.size(); ++i)
        out << model.breakpoints[i] << ' ' << model.values[i] << '\n';
}

IsotonicModel load_isotonic(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "isotonic" || version != "v1") throw ParseError("not an isotonic v1 file");
    size_t n = 0;
    in >> n;
    IsotonicModel model;
    model.breakpoints.resize(n);
    model.values.resize(n);
    for (size_t i = 0; i < n; ++i)
        if (!(in >> model.breakpoints[i] >> model.values[i]))
            throw ParseError("truncated isotonic model");
    return model;
}

}  // namespace carcensus
