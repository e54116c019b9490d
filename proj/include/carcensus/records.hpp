#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carcensus/geometry.hpp"
#include "carcensus/taxonomy.hpp"

namespace carcensus {

inline constexpr int kTopK = 20;

struct GeoImage {
    std::string image_id;
    double latitude = 0.0;
    double longitude = 0.0;
    int rotation = 0;  // [0, 6)
    std::string city_id;
    std::string zip_code;
    int width_px = 0;
    int height_px = 0;
};

struct DetectionRecord {
    std::string image_id;
    BBox bbox;
    double raw_score = 0.0;
    std::optional<double> car_probability;          // set by calibration
    std::vector<std::pair<int, double>> class_probs;  // truncated top-K, not renormalized
};

// One record per line, tab separated:
//   image_id  x_center  y_center  width  height  raw_score  car_probability  cid:prob ...
// car_probability is the empty field before calibration. Lines are expected
// sorted by image_id so aggregation can stream.
void write_detection(std::ostream& out, const DetectionRecord& rec);

// Single-pass streaming reader; constant memory in file size.
class DetectionReader {
public:
    explicit DetectionReader(std::istream& in, const ClassTable* validate_against = nullptr);

    // Returns the next record, or nullopt at end of stream.
    // Throws ParseError (with byte offset) or ValidationError.
    std::optional<DetectionRecord> next();

    std::uint64_t byte_offset() const { return offset_; }

private:
    std::istream& in_;
    const ClassTable* table_;
    std::uint64_t offset_ = 0;
};

std::vector<DetectionRecord> read_detections(std::istream& in,
                                             const ClassTable* validate_against = nullptr);
std::vector<DetectionRecord> read_detections_file(const std::string& path,
                                                  const ClassTable* validate_against = nullptr);
void write_detections_file(const std::string& path, const std::vector<DetectionRecord>& recs);

// Image metadata: image_id lat lon rotation city_id zip_code width_px height_px (TSV, no header).
std::vector<GeoImage> read_images(std::istream& in);
std::vector<GeoImage> read_images_file(const std::string& path);
void write_images_file(const std::string& path, const std::vector<GeoImage>& images);

// Ground-truth box file: image_id x_center y_center width height class_id (TSV).
struct TruthBox {
    std::string image_id;
    BBox bbox;
    int class_id = -1;
};

std::vector<TruthBox> read_truth_boxes_file(const std::string& path);
void write_truth_boxes_file(const std::string& path, const std::vector<TruthBox>& boxes);

// Per-region planted truth emitted by the synthetic generator.
struct GroundTruthRow {
    std::string region_id;  // zip code
    double median_income = 0.0;
    double burglary_rate = 0.0;
    double true_avg_price = 0.0;
    double true_avg_mpg = 0.0;
    double true_pct_foreign = 0.0;
    double true_cars_per_image = 0.0;
};

std::vector<GroundTruthRow> read_ground_truth(std::istream& in);
std::vector<GroundTruthRow> read_ground_truth_file(const std::string& path);
void write_ground_truth_file(const std::string& path, const std::vector<GroundTruthRow>& rows);

}  // namespace carcensus
