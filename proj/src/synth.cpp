#include "carcensus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "carcensus/calibrate.hpp"
#include "carcensus/errors.hpp"
#include "carcensus/geometry.hpp"

namespace carcensus {

namespace {

constexpr double kGridSpacingM = 25.0;  // GPS sampling interval
constexpr double kBaseLat = 37.0;
constexpr double kBaseLon = -122.0;
constexpr double kMetersPerDegLat = 111320.0;

std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

ClassTable make_taxonomy(const SyntheticCityConfig& cfg) {
    std::vector<CarClass> classes;
    const int total = cfg.make_count * cfg.classes_per_make;
    for (int m = 0; m < cfg.make_count; ++m) {
        // Upper-half makes are foreign and priced higher, giving the planted
        // population an income/foreign-share association.
        const bool foreign = m >= cfg.make_count / 2;
        const double make_level =
            cfg.make_count > 1 ? static_cast<double>(m) / (cfg.make_count - 1) : 0.5;
        for (int k = 0; k < cfg.classes_per_make; ++k) {
            CarClass c;
            c.class_id = m * cfg.classes_per_make + k;
            c.make = "Make" + zero_pad(m, 2);
            c.model = "Model" + zero_pad(k, 2);
            c.submodel = "Std";
            c.year_start = 2000;
            c.year_end = 2005;
            c.trim = "Base";
            c.body_type = static_cast<BodyType>((m + k) % kBodyTypeCount);
            const double class_level =
                cfg.classes_per_make > 1 ? static_cast<double>(k) / (cfg.classes_per_make - 1)
                                         : 0.5;
            const double level = 0.7 * make_level + 0.3 * class_level;
            c.price_usd = 4000.0 + 80000.0 * level;
            c.mpg = 38.0 - 22.0 * level;
            c.country = foreign ? "Germany" : "USA";
            c.is_foreign = foreign;
            classes.push_back(std::move(c));
        }
    }
    (void)total;
    return ClassTable(std::move(classes));
}

}  // namespace

SyntheticCity synth_city(const SyntheticCityConfig& cfg) {
    if (cfg.zip_count <= 0) throw std::invalid_argument("synth_city: zip_count must be positive");
    if (cfg.images_per_zip <= 0)
        throw std::invalid_argument("synth_city: images_per_zip must be positive");
    if (cfg.make_count <= 0 || cfg.classes_per_make <= 0)
        throw std::invalid_argument("synth_city: taxonomy size must be positive");

    SyntheticCity city;
    city.taxonomy = make_taxonomy(cfg);
    const int C = city.taxonomy.size();
    std::mt19937_64 rng(cfg.seed);

    // Zip incomes over a square grid of zips.
    const int zip_side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.zip_count))));
    std::vector<double> income(cfg.zip_count);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int z = 0; z < cfg.zip_count; ++z) {
        const int col = z % zip_side;
        const double colf = zip_side > 1 ? static_cast<double>(col) / (zip_side - 1) : 0.5;
        switch (cfg.layout) {
            case IncomeLayout::Random:
                income[z] = cfg.income_min + (cfg.income_max - cfg.income_min) * u01(rng);
                break;
            case IncomeLayout::Gradient:
                income[z] = cfg.income_min + (cfg.income_max - cfg.income_min) *
                                                 (0.9 * colf + 0.1 * u01(rng));
                break;
            case IncomeLayout::TwoBlock:
                income[z] = col < zip_side / 2
                                ? cfg.income_max * (0.9 + 0.1 * u01(rng))
                                : cfg.income_min * (1.0 + 0.1 * u01(rng));
                break;
        }
    }

    // Per-zip class sampling weights: a Gaussian preference around an
    // income-linked target price, blended with uniform by the coupling knob.
    std::vector<std::discrete_distribution<int>> class_dist;
    class_dist.reserve(cfg.zip_count);
    double price_lo = 1e18, price_hi = -1e18;
    for (const CarClass& c : city.taxonomy.classes()) {
        price_lo = std::min(price_lo, *c.price_usd);
        price_hi = std::max(price_hi, *c.price_usd);
    }
    constexpr double kPriceSigma = 9000.0;
    for (int z = 0; z < cfg.zip_count; ++z) {
        const double frac = (income[z] - cfg.income_min) /
                            std::max(1.0, cfg.income_max - cfg.income_min);
        const double target = price_lo + (price_hi - price_lo) * std::clamp(frac, 0.0, 1.0);
        std::vector<double> w(C);
        double gauss_total = 0.0;
        for (int c = 0; c < C; ++c) {
            const double d = (*city.taxonomy.at(c).price_usd - target) / kPriceSigma;
            w[c] = std::exp(-0.5 * d * d);
            gauss_total += w[c];
        }
        for (int c = 0; c < C; ++c)
            w[c] = cfg.price_coupling * (w[c] / gauss_total) +
                   (1.0 - cfg.price_coupling) * (1.0 / C);
        class_dist.emplace_back(w.begin(), w.end());
    }

    const int points_per_zip = (cfg.images_per_zip + 5) / 6;
    const int point_side = static_cast<int>(std::ceil(std::sqrt(points_per_zip)));
    const double zip_extent_m = point_side * kGridSpacingM;
    const double m_per_deg_lon = kMetersPerDegLat * std::cos(kBaseLat * M_PI / 180.0);

    std::poisson_distribution<int> n_cars(cfg.cars_per_image);
    std::poisson_distribution<int> n_false(cfg.false_boxes_per_image);
    std::normal_distribution<double> true_score(cfg.true_score_mean, cfg.true_score_sd);
    std::normal_distribution<double> false_score(cfg.false_score_mean, cfg.false_score_sd);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_int_distribution<int> any_class(0, C - 1);

    const double W = cfg.image_width;
    const double H = cfg.image_height;
    const int id_width = static_cast<int>(std::to_string(cfg.zip_count * cfg.images_per_zip).size());

    struct ZipTally {
        double cars = 0.0, price = 0.0, mpg = 0.0, foreign = 0.0;
    };
    std::vector<ZipTally> tally(cfg.zip_count);

    int image_index = 0;
    for (int z = 0; z < cfg.zip_count; ++z) {
        const int zr = z / zip_side;
        const int zc = z % zip_side;
        const std::string zip_id = "z" + zero_pad(z, 3);
        for (int i = 0; i < cfg.images_per_zip; ++i) {
            const int p = i / 6;
            const int rot = i % 6;
            const double y_m = zr * zip_extent_m + (p / point_side) * kGridSpacingM;
            const double x_m = zc * zip_extent_m + (p % point_side) * kGridSpacingM;

            GeoImage img;
            img.image_id = "img_" + zero_pad(image_index++, id_width);
            img.latitude = kBaseLat + y_m / kMetersPerDegLat;
            img.longitude = kBaseLon + x_m / m_per_deg_lon;
            img.rotation = rot;
            img.city_id = "synthcity";
            img.zip_code = zip_id;
            img.width_px = cfg.image_width;
            img.height_px = cfg.image_height;

            auto& truths = city.truth_boxes[img.image_id];
            const int cars = n_cars(rng);
            for (int k = 0; k < cars; ++k) {
                const int cls = class_dist[z](rng);
                const CarClass& cc = city.taxonomy.at(cls);
                tally[z].cars += 1.0;
                tally[z].price += *cc.price_usd;
                tally[z].mpg += *cc.mpg;
                tally[z].foreign += cc.is_foreign ? 1.0 : 0.0;

                BBox box;
                if (cfg.planted_location_prior) {
                    box.x_center = std::clamp(0.5 * W + 0.07 * W * n01(rng), 0.05 * W, 0.95 * W);
                    box.y_center = std::clamp(0.65 * H + 0.05 * H * n01(rng), 0.05 * H, 0.95 * H);
                    box.width = 90.0 * std::exp(0.25 * n01(rng));
                } else {
                    box.x_center = W * (0.1 + 0.8 * u01(rng));
                    box.y_center = H * (0.1 + 0.8 * u01(rng));
                    box.width = 30.0 * std::exp(std::log(200.0 / 30.0) * u01(rng));
                }
                box.height = box.width * 0.75 * std::exp(0.1 * n01(rng));
                box = clamp_to_image(box, W, H);
                truths.emplace_back(box, cls);

                // One detection per planted car: a jittered box, a score from
                // the true-box distribution, and top-heavy class probabilities.
                DetectionRecord det;
                det.image_id = img.image_id;
                BBox db = box;
                db.x_center += 0.05 * box.width * n01(rng);
                db.y_center += 0.05 * box.height * n01(rng);
                db.width *= std::exp(0.05 * n01(rng));
                db.height *= std::exp(0.05 * n01(rng));
                det.bbox = clamp_to_image(db, W, H);
                det.raw_score = true_score(rng);
                const double p_top = cfg.class_prob_top;
                const double rem = std::max(0.0, 0.95 - p_top);
                det.class_probs.emplace_back(cls, p_top);
                double geo = 0.5;
                double geo_total = 0.0;
                std::vector<std::pair<int, double>> extra;
                for (int e = 0; e < 8; ++e) {
                    int other = any_class(rng);
                    if (other == cls) other = (other + 1) % C;
                    extra.emplace_back(other, geo);
                    geo_total += geo;
                    geo *= 0.5;
                }
                for (auto& [ocid, op] : extra) {
                    bool merged = false;
                    const double share = rem * op / geo_total;
                    for (auto& [cid2, p2] : det.class_probs)
                        if (cid2 == ocid) {
                            p2 += share;
                            merged = true;
                            break;
                        }
                    if (!merged) det.class_probs.emplace_back(ocid, share);
                }
                city.detections.push_back(std::move(det));
            }

            const int falses = n_false(rng);
            for (int k = 0; k < falses; ++k) {
                DetectionRecord det;
                det.image_id = img.image_id;
                BBox box;
                box.x_center = W * (0.05 + 0.9 * u01(rng));
                box.y_center = H * (0.05 + 0.9 * u01(rng));
                box.width = 20.0 * std::exp(std::log(250.0 / 20.0) * u01(rng));
                box.height = box.width * (0.4 + 1.2 * u01(rng));
                det.bbox = clamp_to_image(box, W, H);
                det.raw_score = false_score(rng);
                const int c0 = any_class(rng);
                det.class_probs.emplace_back(c0, 0.3);
                for (int e = 0; e < 4; ++e) {
                    int other = any_class(rng);
                    bool dup = false;
                    for (auto& [cid2, p2] : det.class_probs)
                        if (cid2 == other) {
                            p2 += 0.05;
                            dup = true;
                            break;
                        }
                    if (!dup) det.class_probs.emplace_back(other, 0.05);
                }
                city.detections.push_back(std::move(det));
            }

            city.images.push_back(std::move(img));
        }

        GroundTruthRow row;
        row.region_id = zip_id;
        row.median_income = income[z];
        row.burglary_rate =
            100.0 * (1.0 - (income[z] - cfg.income_min) /
                               std::max(1.0, cfg.income_max - cfg.income_min)) +
            3.0 * n01(rng);
        if (tally[z].cars > 0.0) {
            row.true_avg_price = tally[z].price / tally[z].cars;
            row.true_avg_mpg = tally[z].mpg / tally[z].cars;
            row.true_pct_foreign = tally[z].foreign / tally[z].cars;
        }
        row.true_cars_per_image = tally[z].cars / cfg.images_per_zip;
        city.ground_truth.push_back(std::move(row));
    }
    return city;
}

std::vector<ImageDetections> to_image_detections(const SyntheticCity& city) {
    std::vector<ImageDetections> out;
    out.reserve(city.images.size());
    size_t det_idx = 0;
    for (const GeoImage& img : city.images) {
        ImageDetections id;
        id.image_id = img.image_id;
        id.image_width = img.width_px;
        id.image_height = img.height_px;
        while (det_idx < city.detections.size() &&
               city.detections[det_idx].image_id == img.image_id) {
            id.detections.push_back(
                {city.detections[det_idx].raw_score, city.detections[det_idx].bbox});
            ++det_idx;
        }
        auto it = city.truth_boxes.find(img.image_id);
        if (it != city.truth_boxes.end())
            for (const auto& [box, cls] : it->second) id.truths.push_back(box);
        out.push_back(std::move(id));
    }
    return out;
}

}  // namespace carcensus
