#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carcensus/records.hpp"
#include "carcensus/taxonomy.hpp"

namespace carcensus {

// Sparse expected car count per class for one image.
using ClassExpectation = std::map<int, double>;

// Keeps the k largest entries of a full class distribution, un-renormalized.
// Ties at the cutoff break toward the smaller class id.
std::vector<std::pair<int, double>> truncate_topk(std::span<const double> full, int k = kTopK);

// E[#class c | I] = sum over boxes of P(car|b,I) * P(class c|car,b,I).
// Every record must carry a calibrated car_probability.
ClassExpectation expected_class_count(std::span<const DetectionRecord> image_detections);

// Expectation-weighted mean of a numeric attribute; classes with missing values
// are excluded from numerator and denominator. Empty when no mass has a value.
std::optional<double> expected_attribute_numeric(const ClassExpectation& expectation,
                                                 const ClassTable& table, AttributeKind kind);

// Expectation mass per category of a categorical attribute.
std::map<std::string, double> expected_attribute_mass(const ClassExpectation& expectation,
                                                      const ClassTable& table, AttributeKind kind);

struct RegionStats {
    std::string region_id;
    long image_count = 0;
    double total_expected_cars = 0.0;
    std::map<int, double> class_counts;
    // Derived:
    std::optional<double> avg_price;
    std::optional<double> avg_mpg;
    double pct_foreign = 0.0;
    double cars_per_image = 0.0;
    std::map<std::string, double> pct_by_make;
    std::map<std::string, double> pct_by_body_type;
};

inline constexpr const char* kUnassignedRegion = "(unassigned)";

// Streaming per-region accumulator. Shards merge deterministically: regions in
// ascending id order, shards in the order given, compensated summation
// throughout.
class RegionAggregator {
public:
    void add_image(const std::string& region_id, const ClassExpectation& expectation);
    void merge_from(const RegionAggregator& other);

    // Computes derived attributes; regions sorted by id.
    std::vector<RegionStats> finalize(const ClassTable& table) const;

    long image_count() const { return images_; }

private:
    struct Kahan {
        double sum = 0.0;
        double carry = 0.0;
        void add(double v) {
            const double y = v - carry;
            const double t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
    };
    struct Region {
        long images = 0;
        std::map<int, Kahan> counts;
    };
    std::map<std::string, Region> regions_;
    long images_ = 0;
};

enum class GroupBy { City, Zip };

// Streams a sorted-by-image_id detection file, computes the expected class
// counts per image and
// rolls up into regions. Images with no metadata row land in "(unassigned)".
// Images listed in the metadata but absent from the detection file still count
// toward image_count (zero cars seen).
std::vector<RegionStats> aggregate_detections_stream(std::istream& detections,
                                                     const std::vector<GeoImage>& images,
                                                     const ClassTable& table, GroupBy by);

std::vector<RegionStats> aggregate_detections_file(const std::string& detections_path,
                                                   const std::vector<GeoImage>& images,
                                                   const ClassTable& table, GroupBy by);

void write_region_stats(std::ostream& out, std::span<const RegionStats> stats,
                        const ClassTable& table);

// Reads the table written by write_region_stats. class_counts are not part of
// the file and come back empty; derived columns round-trip.
std::vector<RegionStats> read_region_stats(std::istream& in);
std::vector<RegionStats> read_region_stats_file(const std::string& path);

}  // namespace carcensus
