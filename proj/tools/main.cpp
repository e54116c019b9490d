#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "carcensus/adapt.hpp"
#include "carcensus/calibrate.hpp"
#include "carcensus/census.hpp"
#include "carcensus/demographics.hpp"
#include "carcensus/errors.hpp"
#include "carcensus/manifest.hpp"
#include "carcensus/pipeline.hpp"
#include "carcensus/records.hpp"
#include "carcensus/spatial.hpp"
#include "carcensus/synth.hpp"
#include "carcensus/taxonomy.hpp"

namespace cc = carcensus;

namespace {

// Collects inputs/outputs/config of one subcommand run and writes the manifest
// next to the primary output.
class RunContext {
public:
    RunContext(std::string command, std::uint64_t seed) {
        manifest_.command = std::move(command);
        manifest_.seed = seed;
        manifest_.tool_version = cc::kToolVersion;
        start_ = std::chrono::steady_clock::now();
    }
    void input(const std::string& path) { manifest_.inputs[path] = cc::file_digest(path); }
    void config(const std::string& key, const std::string& value) { manifest_.config[key] = value; }
    void output(const std::string& path, const std::string& content) {
        cc::atomic_write_file(path, content);
        output_existing(path);
    }
    // Registers a file some other writer already produced.
    void output_existing(const std::string& path) {
        manifest_.outputs[path] = cc::file_digest(path);
        if (primary_.empty()) primary_ = path;
    }
    void finish() {
        if (primary_.empty()) return;
        manifest_.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        cc::write_manifest(manifest_, primary_);
    }

private:
    cc::PipelineManifest manifest_;
    std::string primary_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<cc::ImageDetections> assemble_image_detections(
    const std::vector<cc::DetectionRecord>& detections, const std::vector<cc::TruthBox>& truths,
    const std::vector<cc::GeoImage>& images) {
    std::unordered_map<std::string, size_t> index;
    std::vector<cc::ImageDetections> out;
    out.reserve(images.size());
    for (const cc::GeoImage& img : images) {
        index[img.image_id] = out.size();
        cc::ImageDetections id;
        id.image_id = img.image_id;
        id.image_width = img.width_px;
        id.image_height = img.height_px;
        out.push_back(std::move(id));
    }
    for (const cc::DetectionRecord& d : detections) {
        auto it = index.find(d.image_id);
        if (it == index.end())
            throw cc::ValidationError("detection references unknown image " + d.image_id);
        out[it->second].detections.push_back({d.raw_score, d.bbox});
    }
    for (const cc::TruthBox& t : truths) {
        auto it = index.find(t.image_id);
        if (it == index.end())
            throw cc::ValidationError("truth box references unknown image " + t.image_id);
        out[it->second].truths.push_back(t.bbox);
    }
    return out;
}

cc::WeightScheme parse_weight_scheme(const std::string& spec) {
    if (spec == "inverse-sq") return cc::InverseDistanceSquared{};
    if (spec.rfind("band:", 0) == 0) return cc::DistanceBand{std::stod(spec.substr(5))};
    throw std::invalid_argument("unknown --weights scheme '" + spec +
                                "' (expected inverse-sq or band:<meters>)");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cc::ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual census engine: detection aggregation, calibration, spatial "
                 "statistics and demographic regression"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic city with known demographics");
    std::string synth_dir;
    cc::SyntheticCityConfig synth_cfg;
    std::string synth_layout = "random";
    std::uint64_t synth_seed = 0;
    synth->add_option("--output-dir", synth_dir, "Directory for generated files")->required();
    synth->add_option("--zips", synth_cfg.zip_count, "Number of zip codes");
    synth->add_option("--images-per-zip", synth_cfg.images_per_zip, "Images per zip");
    synth->add_option("--coupling", synth_cfg.price_coupling, "Price-income coupling in [0,1]");
    synth->add_option("--layout", synth_layout, "Income layout: random|gradient|twoblock");
    synth->add_option("--false-rate", synth_cfg.false_boxes_per_image, "False boxes per image");
    synth->add_option("--seed", synth_seed, "Random seed")->required();

    // ---- fit-prior ----
    auto* fitprior = app.add_subcommand("fit-prior", "Fit the location/size histogram prior");
    std::string fp_truths, fp_images, fp_out;
    int fp_bins = 20;
    fitprior->add_option("--truths", fp_truths, "Truth box file")->required();
    fitprior->add_option("--images", fp_images, "Image metadata file")->required();
    fitprior->add_option("--bins", fp_bins, "Bins per axis");
    fitprior->add_option("--output", fp_out, "Prior model output")->required();

    // ---- learn-alpha ----
    auto* learnalpha = app.add_subcommand("learn-alpha", "Grid-search the prior weight alpha");
    std::string la_prior, la_det, la_truths, la_images, la_out;
    double la_iou = 0.5;
    learnalpha->add_option("--prior", la_prior, "Fitted prior file")->required();
    learnalpha->add_option("--input", la_det, "Validation detections")->required();
    learnalpha->add_option("--truths", la_truths, "Validation truth boxes")->required();
    learnalpha->add_option("--images", la_images, "Image metadata")->required();
    learnalpha->add_option("--iou-threshold", la_iou, "Matching IOU threshold");
    learnalpha->add_option("--output", la_out, "Prior with learned alpha")->required();

    // ---- fit-calibration ----
    auto* fitcal = app.add_subcommand("fit-calibration", "Fit isotonic score calibration");
    std::string fc_det, fc_truths, fc_images, fc_out;
    double fc_iou = 0.5;
    fitcal->add_option("--input", fc_det, "Validation detections")->required();
    fitcal->add_option("--truths", fc_truths, "Validation truth boxes")->required();
    fitcal->add_option("--images", fc_images, "Image metadata")->required();
    fitcal->add_option("--iou-threshold", fc_iou, "Matching IOU threshold");
    fitcal->add_option("--output", fc_out, "Isotonic model output")->required();

    // ---- calibrate ----
    auto* calib = app.add_subcommand("calibrate", "Attach calibrated car probabilities");
    std::string cb_in, cb_model, cb_out;
    calib->add_option("--input", cb_in, "Detections to calibrate")->required();
    calib->add_option("--model", cb_model, "Isotonic model")->required();
    calib->add_option("--output", cb_out, "Calibrated detections")->required();

    // ---- eval-ap ----
    auto* evalap = app.add_subcommand("eval-ap", "Detection average precision");
    std::string ea_det, ea_truths, ea_images, ea_prior;
    double ea_iou = 0.5;
    evalap->add_option("--input", ea_det, "Detections")->required();
    evalap->add_option("--truths", ea_truths, "Truth boxes")->required();
    evalap->add_option("--images", ea_images, "Image metadata")->required();
    evalap->add_option("--iou-threshold", ea_iou, "Matching IOU threshold");
    evalap->add_option("--prior", ea_prior, "Augment scores with this prior first");

    // ---- aggregate ----
    auto* agg = app.add_subcommand("aggregate", "Roll calibrated detections up into regions");
    std::string ag_in, ag_images, ag_tax, ag_by = "zip", ag_out;
    agg->add_option("--input", ag_in, "Calibrated detections (sorted by image_id)")->required();
    agg->add_option("--images", ag_images, "Image metadata")->required();
    agg->add_option("--taxonomy", ag_tax, "Taxonomy file")->required();
    agg->add_option("--by", ag_by, "Region key: city|zip");
    agg->add_option("--output", ag_out, "Region stats output")->required();

    // ---- moran ----
    auto* moran = app.add_subcommand("moran", "Global Moran's I of a point pattern");
    std::string mo_in, mo_weights = "inverse-sq";
    int mo_perms = 0;
    std::uint64_t mo_seed = 0;
    bool mo_row_std = false;
    moran->add_option("--input", mo_in, "Point file: lat<TAB>lon<TAB>value")->required();
    moran->add_option("--weights", mo_weights, "inverse-sq | band:<meters>");
    moran->add_option("--permutations", mo_perms, "Permutation count for a pseudo p-value");
    moran->add_option("--seed", mo_seed, "Seed for the permutation test");
    moran->add_flag("--row-standardize", mo_row_std, "Row-standardize weights first");

    // ---- gistar ----
    auto* gistar = app.add_subcommand("gistar", "Getis-Ord Gi* hot/cold spot z-scores");
    std::string gi_in, gi_weights = "inverse-sq", gi_out;
    double gi_hot = 1.96, gi_cold = -1.96;
    gistar->add_option("--input", gi_in, "Point file: lat<TAB>lon<TAB>value")->required();
    gistar->add_option("--weights", gi_weights, "inverse-sq | band:<meters>");
    gistar->add_option("--hot", gi_hot, "Hot z threshold");
    gistar->add_option("--cold", gi_cold, "Cold z threshold");
    gistar->add_option("--output", gi_out, "Per-point z-scores and labels")->required();

    // ---- features ----
    auto* feats = app.add_subcommand("features", "Region feature vectors for regression");
    std::string ft_regions, ft_tax, ft_out;
    int ft_makes = 71;
    feats->add_option("--regions", ft_regions, "Region stats file")->required();
    feats->add_option("--taxonomy", ft_tax, "Taxonomy file")->required();
    feats->add_option("--max-makes", ft_makes, "Configured make slots");
    feats->add_option("--output", ft_out, "Feature table output")->required();

    // ---- train ----
    auto* train = app.add_subcommand("train", "Fit ridge regression on region features");
    std::string tr_regions, tr_tax, tr_truth, tr_target = "income", tr_out;
    std::vector<double> tr_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    std::uint64_t tr_seed = 0;
    int tr_makes = 71;
    train->add_option("--regions", tr_regions, "Region stats file")->required();
    train->add_option("--taxonomy", tr_tax, "Taxonomy file")->required();
    train->add_option("--truth", tr_truth, "Ground-truth join file")->required();
    train->add_option("--target", tr_target, "income|burglary");
    train->add_option("--lambda-grid", tr_grid, "Ridge penalty grid");
    train->add_option("--max-makes", tr_makes, "Configured make slots");
    train->add_option("--seed", tr_seed, "CV fold seed")->required();
    train->add_option("--output", tr_out, "Model output")->required();

    // ---- predict ----
    auto* pred = app.add_subcommand("predict", "Predict the target for each region");
    std::string pr_regions, pr_tax, pr_model, pr_out;
    int pr_makes = 71;
    pred->add_option("--regions", pr_regions, "Region stats file")->required();
    pred->add_option("--taxonomy", pr_tax, "Taxonomy file")->required();
    pred->add_option("--model", pr_model, "Ridge model file")->required();
    pred->add_option("--max-makes", pr_makes, "Configured make slots");
    pred->add_option("--output", pr_out, "Predictions output")->required();

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Pearson r of predictions against ground truth");
    std::string ev_regions, ev_tax, ev_model, ev_truth, ev_target = "income";
    int ev_makes = 71;
    eval->add_option("--regions", ev_regions, "Region stats file")->required();
    eval->add_option("--taxonomy", ev_tax, "Taxonomy file")->required();
    eval->add_option("--model", ev_model, "Ridge model file")->required();
    eval->add_option("--truth", ev_truth, "Ground-truth join file")->required();
    eval->add_option("--target", ev_target, "income|burglary");
    eval->add_option("--max-makes", ev_makes, "Configured make slots");

    // ---- correlate ----
    auto* corr = app.add_subcommand("correlate", "Per-feature correlation with a target");
    std::string co_regions, co_tax, co_truth, co_target = "income", co_out;
    int co_makes = 71;
    corr->add_option("--regions", co_regions, "Region stats file")->required();
    corr->add_option("--taxonomy", co_tax, "Taxonomy file")->required();
    corr->add_option("--truth", co_truth, "Ground-truth join file")->required();
    corr->add_option("--target", co_target, "income|burglary");
    corr->add_option("--max-makes", co_makes, "Configured make slots");
    corr->add_option("--output", co_out, "Correlation table output")->required();

    // ---- fit-res-hist ----
    auto* resh = app.add_subcommand("fit-res-hist", "Bounding-box resolution histogram");
    std::string rh_truths, rh_out;
    int rh_bins = 35;
    resh->add_option("--truths", rh_truths, "Truth box file")->required();
    resh->add_option("--bins", rh_bins, "Bin count");
    resh->add_option("--output", rh_out, "Histogram output")->required();

    // ---- fit-iou-hist ----
    auto* iouh = app.add_subcommand("fit-iou-hist", "Matched detection/truth IOU histogram");
    std::string ih_det, ih_truths, ih_images, ih_out;
    double ih_iou = 0.5;
    int ih_bins = 10;
    iouh->add_option("--input", ih_det, "Detections")->required();
    iouh->add_option("--truths", ih_truths, "Truth boxes")->required();
    iouh->add_option("--images", ih_images, "Image metadata")->required();
    iouh->add_option("--iou-threshold", ih_iou, "Matching IOU threshold");
    iouh->add_option("--bins", ih_bins, "Bin count");
    iouh->add_option("--output", ih_out, "Histogram output")->required();

    // ---- sample-crops ----
    auto* crops = app.add_subcommand("sample-crops", "IOU-matched jittered crops of truth boxes");
    std::string sc_truths, sc_images, sc_hist, sc_out;
    std::uint64_t sc_seed = 0;
    crops->add_option("--truths", sc_truths, "Truth boxes")->required();
    crops->add_option("--images", sc_images, "Image metadata")->required();
    crops->add_option("--hist", sc_hist, "IOU histogram")->required();
    crops->add_option("--seed", sc_seed, "Random seed")->required();
    crops->add_option("--output", sc_out, "Sampled crops output")->required();

    // ---- demo ----
    auto* demo = app.add_subcommand("demo", "Synthetic end-to-end census run");
    cc::DemoConfig demo_cfg;
    demo->add_option("--seed", demo_cfg.seed, "Random seed")->required();
    demo->add_option("--zips", demo_cfg.zip_count, "Zip count");
    demo->add_option("--images-per-zip", demo_cfg.images_per_zip, "Images per zip");
    demo->add_option("--coupling", demo_cfg.price_coupling, "Price-income coupling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth) {
            if (synth_layout == "gradient")
                synth_cfg.layout = cc::IncomeLayout::Gradient;
            else if (synth_layout == "twoblock")
                synth_cfg.layout = cc::IncomeLayout::TwoBlock;
            else if (synth_layout != "random")
                throw std::invalid_argument("unknown --layout '" + synth_layout + "'");
            synth_cfg.seed = synth_seed;
            RunContext ctx("synth", synth_cfg.seed);
            ctx.config("zips", std::to_string(synth_cfg.zip_count));
            ctx.config("images-per-zip", std::to_string(synth_cfg.images_per_zip));
            ctx.config("coupling", std::to_string(synth_cfg.price_coupling));
            ctx.config("layout", synth_layout);
            const cc::SyntheticCity city = cc::synth_city(synth_cfg);
            std::filesystem::create_directories(synth_dir);
            {
                std::ostringstream os;
                cc::save_taxonomy(city.taxonomy, os);
                ctx.output(synth_dir + "/taxonomy.tsv", os.str());
            }
            {
                std::ostringstream os;
                for (const auto& d : city.detections) cc::write_detection(os, d);
                ctx.output(synth_dir + "/detections.tsv", os.str());
            }
            cc::write_images_file(synth_dir + "/images.tsv", city.images);
            ctx.output_existing(synth_dir + "/images.tsv");
            std::vector<cc::TruthBox> truths;
            for (const cc::GeoImage& img : city.images) {
                auto it = city.truth_boxes.find(img.image_id);
                if (it == city.truth_boxes.end()) continue;
                for (const auto& [box, cls] : it->second)
                    truths.push_back({img.image_id, box, cls});
            }
            cc::write_truth_boxes_file(synth_dir + "/truths.tsv", truths);
            ctx.output_existing(synth_dir + "/truths.tsv");
            cc::write_ground_truth_file(synth_dir + "/groundtruth.tsv", city.ground_truth);
            ctx.output_existing(synth_dir + "/groundtruth.tsv");
            ctx.finish();
            std::cout << "images=" << city.images.size() << " detections="
                      << city.detections.size() << " zips=" << city.ground_truth.size() << '\n';
        } else if (*fitprior) {
            RunContext ctx("fit-prior", 0);
            ctx.input(fp_truths);
            ctx.input(fp_images);
            const auto truths = cc::read_truth_boxes_file(fp_truths);
            const auto images = cc::read_images_file(fp_images);
            std::unordered_map<std::string, const cc::GeoImage*> meta;
            for (const auto& img : images) meta[img.image_id] = &img;
            std::vector<cc::TrainingBox> boxes;
            for (const auto& t : truths) {
                const auto* img = meta.at(t.image_id);
                boxes.push_back({t.bbox, static_cast<double>(img->width_px),
                                 static_cast<double>(img->height_px)});
            }
            const cc::LocationPrior prior = cc::fit_location_prior(boxes, fp_bins);
            std::ostringstream os;
            cc::save_prior(prior, os);
            ctx.output(fp_out, os.str());
            ctx.finish();
        } else if (*learnalpha) {
            RunContext ctx("learn-alpha", 0);
            ctx.input(la_prior);
            ctx.input(la_det);
            ctx.input(la_truths);
            ctx.input(la_images);
            std::ifstream pin(la_prior);
            cc::LocationPrior prior = cc::load_prior(pin);
            const auto per_image = assemble_image_detections(
                cc::read_detections_file(la_det), cc::read_truth_boxes_file(la_truths),
                cc::read_images_file(la_images));
            const auto grid = cc::default_alpha_grid();
            const double alpha = cc::learn_alpha(prior, per_image, la_iou, grid);
            prior.set_alpha(alpha);
            std::ostringstream os;
            cc::save_prior(prior, os);
            ctx.output(la_out, os.str());
            ctx.finish();
            std::cout << "alpha=" << alpha << '\n';
        } else if (*fitcal) {
            RunContext ctx("fit-calibration", 0);
            ctx.input(fc_det);
            ctx.input(fc_truths);
            ctx.input(fc_images);
            const auto per_image = assemble_image_detections(
                cc::read_detections_file(fc_det), cc::read_truth_boxes_file(fc_truths),
                cc::read_images_file(fc_images));
            const auto pairs = cc::calibration_pairs(per_image, fc_iou);
            const cc::IsotonicModel model = cc::fit_isotonic(pairs);
            std::ostringstream os;
            cc::save_isotonic(model, os);
            ctx.output(fc_out, os.str());
            ctx.finish();
        } else if (*calib) {
            RunContext ctx("calibrate", 0);
            ctx.input(cb_in);
            ctx.input(cb_model);
            std::ifstream min(cb_model);
            const cc::IsotonicModel model = cc::load_isotonic(min);
            auto records = cc::read_detections_file(cb_in);
            std::ostringstream os;
            for (auto& rec : records) {
                rec.car_probability = cc::apply_isotonic(model, rec.raw_score);
                cc::write_detection(os, rec);
            }
            ctx.output(cb_out, os.str());
            ctx.finish();
        } else if (*evalap) {
            auto per_image = assemble_image_detections(cc::read_detections_file(ea_det),
                                                       cc::read_truth_boxes_file(ea_truths),
                                                       cc::read_images_file(ea_images));
            if (!ea_prior.empty()) {
                std::ifstream pin(ea_prior);
                const cc::LocationPrior prior = cc::load_prior(pin);
                for (auto& img : per_image)
                    for (auto& d : img.detections)
                        d.score = cc::augment_score(prior, d.score, d.box, img.image_width,
                                                    img.image_height);
            }
            std::cout << "ap=" << cc::average_precision(per_image, ea_iou) << '\n';
        } else if (*agg) {
            if (ag_by != "city" && ag_by != "zip")
                throw std::invalid_argument("--by must be city or zip");
            RunContext ctx("aggregate", 0);
            ctx.input(ag_in);
            ctx.input(ag_images);
            ctx.input(ag_tax);
            ctx.config("by", ag_by);
            const cc::ClassTable table = cc::load_taxonomy_file(ag_tax);
            const auto images = cc::read_images_file(ag_images);
            const auto stats = cc::aggregate_detections_file(
                ag_in, images, table, ag_by == "city" ? cc::GroupBy::City : cc::GroupBy::Zip);
            std::ostringstream os;
            cc::write_region_stats(os, stats, table);
            ctx.output(ag_out, os.str());
            ctx.finish();
        } else if (*moran) {
            const cc::PointPattern pattern = cc::read_point_pattern_file(mo_in);
            cc::SpatialWeights weights =
                cc::build_weights(pattern, parse_weight_scheme(mo_weights));
            if (mo_row_std) weights = weights.row_standardized();
            const double I = cc::morans_i(pattern, weights);
            std::cout << "moran_i=" << I << '\n'
                      << "null_expectation=" << cc::morans_i_expectation(pattern.size()) << '\n';
            if (mo_perms > 0)
                std::cout << "pseudo_p="
                          << cc::morans_i_significance(pattern, weights, mo_perms, mo_seed) << '\n';
        } else if (*gistar) {
            RunContext ctx("gistar", 0);
            ctx.input(gi_in);
            const cc::PointPattern pattern = cc::read_point_pattern_file(gi_in);
            const cc::SpatialWeights weights =
                cc::build_weights(pattern, parse_weight_scheme(gi_weights));
            const auto z = cc::getis_ord_gistar(pattern, weights);
            const auto labels = cc::classify_clusters(z, gi_hot, gi_cold);
            std::ostringstream os;
            os.precision(12);
            os << "lat\tlon\tvalue\tz\tlabel\n";
            for (size_t i = 0; i < pattern.size(); ++i) {
                os << pattern[i].latitude << '\t' << pattern[i].longitude << '\t'
                   << pattern[i].value << '\t';
                if (z[i])
                    os << *z[i];
                else
                    os << "undefined";
                os << '\t' << cc::cluster_label_name(labels[i]) << '\n';
            }
            ctx.output(gi_out, os.str());
            ctx.finish();
        } else if (*feats || *train || *pred || *eval || *corr) {
            // Shared feature-table plumbing for the regression subcommands.
            const std::string regions_path = *feats   ? ft_regions
                                             : *train ? tr_regions
                                             : *pred  ? pr_regions
                                             : *eval  ? ev_regions
                                                      : co_regions;
            const std::string tax_path = *feats   ? ft_tax
                                         : *train ? tr_tax
                                         : *pred  ? pr_tax
                                         : *eval  ? ev_tax
                                                  : co_tax;
            const int max_makes = *feats   ? ft_makes
                                  : *train ? tr_makes
                                  : *pred  ? pr_makes
                                  : *eval  ? ev_makes
                                           : co_makes;
            const cc::ClassTable table = cc::load_taxonomy_file(tax_path);
            const cc::FeatureSchema schema = cc::FeatureSchema::from_table(table, max_makes);
            const auto stats = cc::read_region_stats_file(regions_path);
            std::vector<std::string> region_ids;
            std::vector<std::vector<double>> X;
            for (const auto& s : stats) {
                if (s.region_id == cc::kUnassignedRegion || s.total_expected_cars <= 0.0) continue;
                region_ids.push_back(s.region_id);
                X.push_back(cc::build_features(s, schema));
            }

            auto join_target = [&](const std::string& truth_path, const std::string& target,
                                   std::vector<std::vector<double>>& Xj,
                                   std::vector<double>& yj) {
                const auto truth = cc::read_ground_truth_file(truth_path);
                std::unordered_map<std::string, double> by_region;
                for (const auto& row : truth)
                    by_region[row.region_id] =
                        target == "burglary" ? row.burglary_rate : row.median_income;
                for (size_t i = 0; i < region_ids.size(); ++i) {
                    auto it = by_region.find(region_ids[i]);
                    if (it == by_region.end()) continue;
                    Xj.push_back(X[i]);
                    yj.push_back(it->second);
                }
            };

            if (*feats) {
                RunContext ctx("features", 0);
                ctx.input(regions_path);
                ctx.input(tax_path);
                std::ostringstream os;
                os.precision(12);
                os << "region_id";
                for (const auto& n : schema.names) os << '\t' << n;
                os << '\n';
                for (size_t i = 0; i < region_ids.size(); ++i) {
                    os << region_ids[i];
                    for (double v : X[i]) os << '\t' << v;
                    os << '\n';
                }
                ctx.output(ft_out, os.str());
                ctx.finish();
            } else if (*train) {
                RunContext ctx("train", tr_seed);
                ctx.input(regions_path);
                ctx.input(tax_path);
                ctx.input(tr_truth);
                ctx.config("target", tr_target);
                std::vector<std::vector<double>> Xj;
                std::vector<double> yj;
                join_target(tr_truth, tr_target, Xj, yj);
                const double lambda = cc::select_lambda(
                    Xj, yj, tr_grid, std::min<int>(5, static_cast<int>(Xj.size())), tr_seed);
                cc::RidgeModel model = cc::fit_ridge(Xj, yj, lambda);
                model.feature_names = schema.names;
                std::ostringstream os;
                cc::save_ridge_model(model, os);
                ctx.output(tr_out, os.str());
                ctx.finish();
                std::cout << "lambda=" << lambda << " regions=" << Xj.size() << '\n';
            } else if (*pred) {
                RunContext ctx("predict", 0);
                ctx.input(regions_path);
                ctx.input(tax_path);
                ctx.input(pr_model);
                std::ifstream min(pr_model);
                const cc::RidgeModel model = cc::load_ridge_model(min);
                std::ostringstream os;
                os.precision(12);
                os << "region_id\tprediction\n";
                for (size_t i = 0; i < region_ids.size(); ++i)
                    os << region_ids[i] << '\t' << cc::predict(model, X[i]) << '\n';
                ctx.output(pr_out, os.str());
                ctx.finish();
            } else if (*eval) {
                std::ifstream min(ev_model);
                const cc::RidgeModel model = cc::load_ridge_model(min);
                std::vector<std::vector<double>> Xj;
                std::vector<double> yj;
                join_target(ev_truth, ev_target, Xj, yj);
                std::vector<double> preds;
                for (const auto& x : Xj) preds.push_back(cc::predict(model, x));
                std::cout << "pearson_r=" << cc::pearson_r(preds, yj) << " regions=" << Xj.size()
                          << '\n';
            } else {
                RunContext ctx("correlate", 0);
                ctx.input(regions_path);
                ctx.input(tax_path);
                ctx.input(co_truth);
                std::vector<std::vector<double>> Xj;
                std::vector<double> yj;
                join_target(co_truth, co_target, Xj, yj);
                const auto corrs = cc::correlate_attributes(Xj, schema.names, yj);
                std::ostringstream os;
                os.precision(12);
                os << "feature\tr\tp\n";
                for (const auto& c : corrs) {
                    os << c.name << '\t';
                    if (c.r)
                        os << *c.r << '\t' << *c.p;
                    else
                        os << "undefined\tundefined";
                    os << '\n';
                }
                ctx.output(co_out, os.str());
                ctx.finish();
            }
        } else if (*resh) {
            RunContext ctx("fit-res-hist", 0);
            ctx.input(rh_truths);
            const auto truths = cc::read_truth_boxes_file(rh_truths);
            std::vector<cc::BBox> boxes;
            for (const auto& t : truths) boxes.push_back(t.bbox);
            const auto hist = cc::fit_resolution_hist(boxes, rh_bins);
            std::ostringstream os;
            cc::save_histogram(hist, os);
            ctx.output(rh_out, os.str());
            ctx.finish();
        } else if (*iouh) {
            RunContext ctx("fit-iou-hist", 0);
            ctx.input(ih_det);
            ctx.input(ih_truths);
            ctx.input(ih_images);
            const auto per_image = assemble_image_detections(
                cc::read_detections_file(ih_det), cc::read_truth_boxes_file(ih_truths),
                cc::read_images_file(ih_images));
            const auto hist = cc::fit_iou_hist(per_image, ih_iou, ih_bins);
            std::ostringstream os;
            cc::save_histogram(hist, os);
            ctx.output(ih_out, os.str());
            ctx.finish();
        } else if (*crops) {
            RunContext ctx("sample-crops", sc_seed);
            ctx.input(sc_truths);
            ctx.input(sc_images);
            ctx.input(sc_hist);
            const auto truths = cc::read_truth_boxes_file(sc_truths);
            const auto images = cc::read_images_file(sc_images);
            std::unordered_map<std::string, const cc::GeoImage*> meta;
            for (const auto& img : images) meta[img.image_id] = &img;
            std::ifstream hin(sc_hist);
            const cc::Histogram hist = cc::load_histogram(hin);
            std::mt19937_64 rng(sc_seed);
            std::vector<cc::TruthBox> crops;
            for (const auto& t : truths) {
                const auto* img = meta.at(t.image_id);
                const cc::BBox crop =
                    cc::sample_crop(t.bbox, img->width_px, img->height_px, hist, rng);
                crops.push_back({t.image_id, crop, t.class_id});
            }
            std::ostringstream os;
            for (const auto& c : crops) {
                os << c.image_id << '\t' << c.bbox.x_center << '\t' << c.bbox.y_center << '\t'
                   << c.bbox.width << '\t' << c.bbox.height << '\t' << c.class_id << '\n';
            }
            ctx.output(sc_out, os.str());
            ctx.finish();
        } else if (*demo) {
            const cc::DemoResult r = cc::run_demo(demo_cfg);
            std::cout << "holdout_income_r=" << r.holdout_income_r << '\n'
                      << "train_regions=" << r.train_regions
                      << " eval_regions=" << r.eval_regions << '\n'
                      << "avg_price_correlation_rank=" << r.avg_price_correlation_rank << '\n'
                      << "morans_i_segregated=" << r.morans_i_segregated
                      << " null_expectation=" << r.morans_i_expect << '\n'
                      << "shuffles_below=" << r.shuffles_below << "/100 permutation_p="
                      << r.permutation_p << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error=" << e.what() << '\n';
        return 1;
    }
    return 0;
}
