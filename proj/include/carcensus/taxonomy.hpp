#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace carcensus {

enum class BodyType {
    Sedan,
    Coupe,
    Suv,
    Hatchback,
    Convertible,
    Wagon,
    Minivan,
    Van,
    ExtendedCabTruck,
    CrewCabTruck,
    RegularCabTruck,
    Other,
};
inline constexpr int kBodyTypeCount = 12;

const std::string& body_type_name(BodyType t);
// Unknown labels map to BodyType::Other (a warning is written to stderr once per label).
BodyType body_type_from_label(const std::string& label);

enum class AttributeKind {
    Make,
    Model,
    Submodel,
    BodyTypeKind,
    Price,
    Mpg,
    Country,
    Foreign,
};

bool attribute_is_numeric(AttributeKind kind);

// One attribute value: numeric kinds carry `num`, categorical kinds carry `cat`.
// A numeric value may be missing (price/MPG unknown for the class).
struct AttributeValue {
    bool numeric = false;
    std::optional<double> num;
    std::string cat;

    friend bool operator==(const AttributeValue& a, const AttributeValue& b) {
        if (a.numeric != b.numeric) return false;
        return a.numeric ? a.num == b.num : a.cat == b.cat;
    }
};

struct CarClass {
    int class_id = -1;
    std::string make;
    std::string model;
    std::string submodel;
    int year_start = 0;
    int year_end = 0;
    std::string trim;
    BodyType body_type = BodyType::Other;
    std::optional<double> price_usd;  // >= 0 when present
    std::optional<double> mpg;        // > 0 when present
    std::string country;
    bool is_foreign = false;
};

// Immutable after load; ids are dense in [0, size()).
class ClassTable {
public:
    ClassTable() = default;
    explicit ClassTable(std::vector<CarClass> classes);

    int size() const { return static_cast<int>(classes_.size()); }
    const CarClass& at(int class_id) const;  // throws ValidationError when out of range
    const std::vector<CarClass>& classes() const { return classes_; }

    // Distinct make names in first-appearance order.
    const std::vector<std::string>& makes() const { return makes_; }

private:
    std::vector<CarClass> classes_;
    std::vector<std::string> makes_;
};

// Parses the taxonomy file: header row, delimited columns class_id, make, model,
// submodel, year_start, year_end, trim, body_type, price_usd, mpg, country,
// is_foreign. Tab or comma delimited (sniffed from the header). Empty numeric
// fields mean "missing"; an empty class_id column assigns ids by file order.
ClassTable load_taxonomy(std::istream& in);
ClassTable load_taxonomy_file(const std::string& path);

void save_taxonomy(const ClassTable& table, std::ostream& out);

AttributeValue attribute_of(const ClassTable& table, int class_id, AttributeKind kind);

// Fraction of positions whose predicted attribute equals the true attribute.
double attribute_accuracy(std::span<const int> predictions, std::span<const int> truths,
                          AttributeKind kind, const ClassTable& table);

struct ConfusionMatrix {
    std::vector<std::string> labels;         // row/column order
    std::vector<std::vector<double>> counts; // raw pair counts
    std::vector<std::vector<double>> rows;   // row-normalized; empty rows stay zero
};

// Confusion over the categories of a categorical attribute kind, rows = truth.
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> truths,
                                 AttributeKind kind, const ClassTable& table);

}  // namespace carcensus
