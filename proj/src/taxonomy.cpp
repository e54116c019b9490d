#include "carcensus/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "carcensus/errors.hpp"

namespace carcensus {

namespace {

const std::array<std::string, kBodyTypeCount> kBodyTypeNames = {
    "sedan",          "coupe",          "SUV",
    "hatchback",      "convertible",    "wagon",
    "minivan",        "van",            "extended-cab truck",
    "crew-cab truck", "regular-cab truck", "other",
};

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::optional<double> parse_optional_double(const std::string& s, int line_no, const char* col) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad numeric value '" + s +
                         "' in column " + col);
    return v;
}

int parse_int(const std::string& s, int line_no, const char* col) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + s +
                         "' in column " + col);
    return v;
}

}  // namespace

const std::string& body_type_name(BodyType t) {
    return kBodyTypeNames[static_cast<int>(t)];
}

BodyType body_type_from_label(const std::string& label) {
    static const std::unordered_map<std::string, BodyType> lut = [] {
        std::unordered_map<std::string, BodyType> m;
        for (int i = 0; i < kBodyTypeCount; ++i)
            m[to_lower(kBodyTypeNames[i])] = static_cast<BodyType>(i);
        return m;
    }();
    auto it = lut.find(to_lower(label));
    if (it != lut.end()) return it->second;
    static std::set<std::string> warned;
    if (warned.insert(label).second)
        std::cerr << "warning: unknown body type '" << label << "' mapped to 'other'\n";
    return BodyType::Other;
}

bool attribute_is_numeric(AttributeKind kind) {
    return kind == AttributeKind::Price || kind == AttributeKind::Mpg;
}

ClassTable::ClassTable(std::vector<CarClass> classes) : classes_(std::move(classes)) {
    std::unordered_set<std::string> seen;
    for (int i = 0; i < static_cast<int>(classes_.size()); ++i) {
        const CarClass& c = classes_[i];
        if (c.class_id != i)
            throw ValidationError("class ids must be dense in file order; got id " +
                                  std::to_string(c.class_id) + " at position " + std::to_string(i));
        if (c.price_usd && *c.price_usd < 0.0)
            throw ValidationError("class " + std::to_string(i) + ": negative price");
        if (c.mpg && *c.mpg <= 0.0)
            throw ValidationError("class " + std::to_string(i) + ": non-positive MPG");
        if (c.year_start > c.year_end)
            throw ValidationError("class " + std::to_string(i) + ": year range reversed");
        if (c.is_foreign != (c.country != "USA"))
            throw ValidationError("class " + std::to_string(i) +
                                  ": is_foreign inconsistent with country '" + c.country + "'");
        if (seen.insert(c.make).second) makes_.push_back(c.make);
    }
}

const CarClass& ClassTable::at(int class_id) const {
    if (class_id < 0 || class_id >= size())
        throw ValidationError("class_id " + std::to_string(class_id) + " out of range [0, " +
                              std::to_string(size()) + ")");
    return classes_[class_id];
}

ClassTable load_taxonomy(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("taxonomy file is empty (missing header)");
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    const std::vector<std::string> header = split(line, delim);

    static const std::array<const char*, 12> kColumns = {
        "class_id", "make",      "model",     "submodel", "year_start", "year_end",
        "trim",     "body_type", "price_usd", "mpg",      "country",    "is_foreign"};
    std::array<int, 12> col{};
    col.fill(-1);
    for (size_t i = 0; i < header.size(); ++i) {
        for (size_t k = 0; k < kColumns.size(); ++k)
            if (header[i] == kColumns[k]) col[k] = static_cast<int>(i);
    }
    for (size_t k = 0; k < kColumns.size(); ++k)
        if (col[k] < 0) throw ParseError(std::string("missing required column '") + kColumns[k] + "'");

    std::vector<CarClass> classes;
    std::unordered_set<int> ids;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, delim);
        if (f.size() < header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        CarClass c;
        const std::string& id_field = f[col[0]];
        c.class_id = id_field.empty() ? static_cast<int>(classes.size())
                                      : parse_int(id_field, line_no, "class_id");
        if (!ids.insert(c.class_id).second)
            throw ValidationError("duplicate class_id " + std::to_string(c.class_id) + " at line " +
                                  std::to_string(line_no));
        c.make = f[col[1]];
        c.model = f[col[2]];
        c.submodel = f[col[3]];
        c.year_start = parse_int(f[col[4]], line_no, "year_start");
        c.year_end = parse_int(f[col[5]], line_no, "year_end");
        c.trim = f[col[6]];
        c.body_type = body_type_from_label(f[col[7]]);
        c.price_usd = parse_optional_double(f[col[8]], line_no, "price_usd");
        c.mpg = parse_optional_double(f[col[9]], line_no, "mpg");
        c.country = f[col[10]];
        c.is_foreign = f[col[11]] == "1" || to_lower(f[col[11]]) == "true";
        classes.push_back(std::move(c));
    }
    std::sort(classes.begin(), classes.end(),
              [](const CarClass& a, const CarClass& b) { return a.class_id < b.class_id; });
    return ClassTable(std::move(classes));
}

ClassTable load_taxonomy_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open taxonomy file: " + path);
    return load_taxonomy(in);
}

void save_taxonomy(const ClassTable& table, std::ostream& out) {
    out << "class_id\tmake\tmodel\tsubmodel\tyear_start\tyear_end\ttrim\tbody_type\t"
           "price_usd\tmpg\tcountry\tis_foreign\n";
    for (const CarClass& c : table.classes()) {
        out << c.class_id << '\t' << c.make << '\t' << c.model << '\t' << c.submodel << '\t'
            << c.year_start << '\t' << c.year_end << '\t' << c.trim << '\t'
            << body_type_name(c.body_type) << '\t';
        if (c.price_usd) out << *c.price_usd;
        out << '\t';
        if (c.mpg) out << *c.mpg;
        out << '\t' << c.country << '\t' << (c.is_foreign ? 1 : 0) << '\n';
    }
}

AttributeValue attribute_of(const ClassTable& table, int class_id, AttributeKind kind) {
    const CarClass& c = table.at(class_id);
    AttributeValue v;
    switch (kind) {
        case AttributeKind::Make: v.cat = c.make; break;
        case AttributeKind::Model: v.cat = c.model; break;
        case AttributeKind::Submodel: v.cat = c.submodel; break;
        case AttributeKind::BodyTypeKind: v.cat = body_type_name(c.body_type); break;
        case AttributeKind::Country: v.cat = c.country; break;
        case AttributeKind::Foreign: v.cat = c.is_foreign ? "foreign" : "domestic"; break;
        case AttributeKind::Price:
            v.numeric = true;
            v.num = c.price_usd;
            break;
        case AttributeKind::Mpg:
            v.numeric = true;
            v.num = c.mpg;
            break;
    }
    return v;
}

double attribute_accuracy(std::span<const int> predictions, std::span<const int> truths,
                          AttributeKind kind, const ClassTable& table) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw std::invalid_argument("attribute_accuracy: sequences must be equal-length, non-empty");
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (attribute_of(table, predictions[i], kind) == attribute_of(table, truths[i], kind))
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> truths,
                                 AttributeKind kind, const ClassTable& table) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw std::invalid_argument("confusion_matrix: sequences must be equal-length, non-empty");
    if (attribute_is_numeric(kind))
        throw std::invalid_argument("confusion_matrix requires a categorical attribute kind");

    ConfusionMatrix m;
    if (kind == AttributeKind::BodyTypeKind) {
        for (int i = 0; i < kBodyTypeCount; ++i) m.labels.push_back(kBodyTypeNames[i]);
    } else {
        std::set<std::string> cats;
        for (size_t i = 0; i < predictions.size(); ++i) {
            cats.insert(attribute_of(table, predictions[i], kind).cat);
            cats.insert(attribute_of(table, truths[i], kind).cat);
        }
        m.labels.assign(cats.begin(), cats.end());
    }
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < m.labels.size(); ++i) index[m.labels[i]] = static_cast<int>(i);

    const size_t n = m.labels.size();
    m.counts.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < predictions.size(); ++i) {
        const int r = index.at(attribute_of(table, truths[i], kind).cat);
        const int c = index.at(attribute_of(table, predictions[i], kind).cat);
        m.counts[r][c] += 1.0;
    }
    m.rows = m.counts;
    for (auto& row : m.rows) {
        double total = 0.0;
        for (double v : row) total += v;
        if (total > 0.0)
            for (double& v : row) v /= total;
    }
    return m;
}

}  // namespace carcensus
