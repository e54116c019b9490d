#include "carcensus/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "carcensus/calibrate.hpp"
#include "carcensus/errors.hpp"

namespace carcensus {

std::vector<DetectionRecord> calibrate_city(const SyntheticCity& city,
                                            double validation_fraction, double iou_threshold) {
    const std::vector<ImageDetections> per_image = to_image_detections(city);
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(per_image.size() *
                                                                 validation_fraction));
    // Validation slice: every k-th image so all zips contribute.
    const size_t stride = std::max<size_t>(1, per_image.size() / n_val);
    std::vector<ImageDetections> validation;
    for (size_t i = 0; i < per_image.size(); i += stride) validation.push_back(per_image[i]);

    const auto pairs = calibration_pairs(validation, iou_threshold);
    const IsotonicModel model = fit_isotonic(pairs);

    std::vector<DetectionRecord> calibrated = city.detections;
    for (DetectionRecord& rec : calibrated)
        rec.car_probability = apply_isotonic(model, rec.raw_score);
    return calibrated;
}

PointPattern zip_price_pattern(const SyntheticCity& city,
                               const std::vector<RegionStats>& stats) {
    struct Centroid {
        double lat = 0.0, lon = 0.0;
        int n = 0;
    };
    std::unordered_map<std::string, Centroid> centroids;
    for (const GeoImage& img : city.images) {
        Centroid& c = centroids[img.zip_code];
        c.lat += img.latitude;
        c.lon += img.longitude;
        c.n += 1;
    }
    PointPattern pattern;
    for (const RegionStats& s : stats) {
        auto it = centroids.find(s.region_id);
        if (it == centroids.end() || !s.avg_price) continue;
        pattern.push_back({it->second.lat / it->second.n, it->second.lon / it->second.n,
                           *s.avg_price});
    }
    return pattern;
}

namespace {

std::vector<RegionStats> aggregate_city(const SyntheticCity& city,
                                        const std::vector<DetectionRecord>& calibrated) {
    std::unordered_map<std::string, const GeoImage*> meta;
    for (const GeoImage& img : city.images) meta[img.image_id] = &img;
    RegionAggregator agg;
    size_t i = 0;
    while (i < calibrated.size()) {
        size_t j = i;
        while (j < calibrated.size() && calibrated[j].image_id == calibrated[i].image_id) ++j;
        const std::span<const DetectionRecord> group(calibrated.data() + i, j - i);
        agg.add_image(meta.at(calibrated[i].image_id)->zip_code, expected_class_count(group));
        i = j;
    }
    // Zero-detection images still count.
    std::unordered_map<std::string, char> seen;
    for (const DetectionRecord& r : calibrated) seen[r.image_id] = 1;
    static const ClassExpectation kEmpty;
    for (const GeoImage& img : city.images)
        if (!seen.count(img.image_id)) agg.add_image(img.zip_code, kEmpty);
    return agg.finalize(city.taxonomy);
}

}  // namespace

DemoResult run_demo(const DemoConfig& config) {
    DemoResult result;

    SyntheticCityConfig cfg;
    cfg.seed = config.seed;
    cfg.zip_count = config.zip_count;
    cfg.images_per_zip = config.images_per_zip;
    cfg.price_coupling = config.price_coupling;
    cfg.layout = IncomeLayout::Random;
    const SyntheticCity city = synth_city(cfg);

    const auto calibrated = calibrate_city(city);
    const auto stats = aggregate_city(city, calibrated);

    std::unordered_map<std::string, const GroundTruthRow*> truth;
    for (const GroundTruthRow& row : city.ground_truth) truth[row.region_id] = &row;

    const FeatureSchema schema = FeatureSchema::from_table(city.taxonomy);
    std::vector<std::vector<double>> X;
    std::vector<double> income;
    for (const RegionStats& s : stats) {
        auto it = truth.find(s.region_id);
        if (it == truth.end() || s.total_expected_cars <= 0.0) continue;
        X.push_back(build_features(s, schema));
        income.push_back(it->second->median_income);
    }

    // Seeded 18% train split, evaluation on held-out regions only.
    const size_t n = X.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(config.seed ^ 0x5eedf00dULL);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n_train = std::max<size_t>(5, static_cast<size_t>(n * config.train_fraction));

    std::vector<std::vector<double>> Xtr, Xev;
    std::vector<double> ytr, yev;
    for (size_t i = 0; i < n; ++i) {
        if (i < n_train) {
            Xtr.push_back(X[order[i]]);
            ytr.push_back(income[order[i]]);
        } else {
            Xev.push_back(X[order[i]]);
            yev.push_back(income[order[i]]);
        }
    }
    result.train_regions = static_cast<int>(Xtr.size());
    result.eval_regions = static_cast<int>(Xev.size());

    const std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    const double lambda =
        select_lambda(Xtr, ytr, grid, std::min<int>(5, static_cast<int>(Xtr.size())), config.seed);
    const RidgeModel model = fit_ridge(Xtr, ytr, lambda);
    std::vector<double> pred;
    pred.reserve(Xev.size());
    for (const auto& x : Xev) pred.push_back(predict(model, x));
    result.holdout_income_r = pearson_r(pred, yev);

    // Rank of avg_price among all features by |r| against income.
    const auto correlations = correlate_attributes(X, schema.names, income);
    double price_abs_r = 0.0;
    for (const auto& c : correlations)
        if (c.name == "avg_price" && c.r) price_abs_r = std::abs(*c.r);
    int rank = 1;
    for (const auto& c : correlations)
        if (c.name != "avg_price" && c.r && std::abs(*c.r) > price_abs_r) ++rank;
    result.avg_price_correlation_rank = rank;

    // Segregated city: two income blocks; Moran's I on per-zip average price
    // versus value shuffles and a permutation pseudo p.
    SyntheticCityConfig seg = cfg;
    seg.zip_count = config.segregated_zip_count;
    seg.layout = IncomeLayout::TwoBlock;
    seg.seed = config.seed + 1;
    const SyntheticCity seg_city = synth_city(seg);
    const auto seg_stats = aggregate_city(seg_city, calibrate_city(seg_city));
    const PointPattern pattern = zip_price_pattern(seg_city, seg_stats);

    const SpatialWeights weights = build_weights(pattern, InverseDistanceSquared{});
    result.morans_i_segregated = morans_i(pattern, weights);
    result.morans_i_expect = morans_i_expectation(pattern.size());

    std::vector<double> values;
    for (const SpatialPoint& p : pattern) values.push_back(p.value);
    std::mt19937_64 shuffle_rng(config.seed ^ 0xabcdULL);
    std::vector<double> shuffled = values;
    result.shuffles_below = 0;
    for (int k = 0; k < config.value_shuffles; ++k) {
        std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
        if (morans_i(shuffled, weights) < result.morans_i_segregated) ++result.shuffles_below;
    }
    result.permutation_p = morans_i_significance(pattern, weights, 999, config.seed);
    return result;
}

}  // namespace carcensus
