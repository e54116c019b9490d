#include "carcensus/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "carcensus/errors.hpp"

namespace carcensus {

namespace {

// Splits a line on tabs into string_views without copying.
std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

double parse_double(std::string_view s, std::uint64_t offset, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError(std::string("byte ") + std::to_string(offset) + ": bad " + what + " '" +
                         std::string(s) + "'");
    return v;
}

int parse_int(std::string_view s, std::uint64_t offset, const char* what) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError(std::string("byte ") + std::to_string(offset) + ": bad " + what + " '" +
                         std::string(s) + "'");
    return v;
}

void write_double(std::ostream& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, p - buf);
}

}  // namespace

void write_detection(std::ostream& out, const DetectionRecord& rec) {
    out << rec.image_id << '\t';
    write_double(out, rec.bbox.x_center);
    out << '\t';
    write_double(out, rec.bbox.y_center);
    out << '\t';
    write_double(out, rec.bbox.width);
    out << '\t';
    write_double(out, rec.bbox.height);
    out << '\t';
    write_double(out, rec.raw_score);
    out << '\t';
    if (rec.car_probability) write_double(out, *rec.car_probability);
    for (const auto& [cid, p] : rec.class_probs) {
        out << '\t' << cid << ':';
        write_double(out, p);
    }
    out << '\n';
}

DetectionReader::DetectionReader(std::istream& in, const ClassTable* validate_against)
    : in_(in), table_(validate_against) {}

std::optional<DetectionRecord> DetectionReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        const std::uint64_t line_start = offset_;
        offset_ += line.size() + 1;
        if (line.empty()) continue;

        const auto f = split_tabs(line);
        if (f.size() < 7)
            throw ParseError("byte " + std::to_string(line_start) +
                             ": detection record needs at least 7 fields, got " +
                             std::to_string(f.size()));
        DetectionRecord rec;
        rec.image_id = std::string(f[0]);
        rec.bbox.x_center = parse_double(f[1], line_start, "x_center");
        rec.bbox.y_center = parse_double(f[2], line_start, "y_center");
        rec.bbox.width = parse_double(f[3], line_start, "width");
        rec.bbox.height = parse_double(f[4], line_start, "height");
        rec.raw_score = parse_double(f[5], line_start, "raw_score");
        if (!rec.bbox.valid())
            throw ValidationError("byte " + std::to_string(line_start) + ": invalid bbox");
        if (!f[6].empty()) {
            const double p = parse_double(f[6], line_start, "car_probability");
            if (p < 0.0 || p > 1.0)
                throw ValidationError("byte " + std::to_string(line_start) +
                                      ": car_probability " + std::to_string(p) +
                                      " outside [0,1]");
            rec.car_probability = p;
        }
        double mass = 0.0;
        for (size_t i = 7; i < f.size(); ++i) {
            const size_t colon = f[i].find(':');
            if (colon == std::string_view::npos)
                throw ParseError("byte " + std::to_string(line_start) +
                                 ": class_probs field missing ':' separator");
            const int cid = parse_int(f[i].substr(0, colon), line_start, "class_id");
            const double p = parse_double(f[i].substr(colon + 1), line_start, "class probability");
            if (p <= 0.0 || p > 1.0)
                throw ValidationError("byte " + std::to_string(line_start) +
                                      ": class probability " + std::to_string(p) +
                                      " outside (0,1]");
            if (table_ && (cid < 0 || cid >= table_->size()))
                throw ValidationError("byte " + std::to_string(line_start) + ": unknown class_id " +
                                      std::to_string(cid));
            mass += p;
            rec.class_probs.emplace_back(cid, p);
        }
        if (rec.class_probs.size() > kTopK)
            throw ValidationError("byte " + std::to_string(line_start) + ": more than " +
                                  std::to_string(kTopK) + " class probabilities");
        if (mass > 1.0 + 1e-9)
            throw ValidationError("byte " + std::to_string(line_start) +
                                  ": class probabilities sum to " + std::to_string(mass) + " > 1");
        return rec;
    }
    return std::nullopt;
}

std::vector<DetectionRecord> read_detections(std::istream& in, const ClassTable* table) {
    DetectionReader reader(in, table);
    std::vector<DetectionRecord> out;
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
    return out;
}

std::vector<DetectionRecord> read_detections_file(const std::string& path,
                                                  const ClassTable* table) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open detections file: " + path);
    return read_detections(in, table);
}

void write_detections_file(const std::string& path, const std::vector<DetectionRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    for (const auto& r : recs) write_detection(out, r);
}

std::vector<GeoImage> read_images(std::istream& in) {
    std::vector<GeoImage> out;
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        const std::uint64_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 8)
            throw ParseError("byte " + std::to_string(line_start) +
                             ": image metadata needs 8 fields");
        GeoImage img;
        img.image_id = std::string(f[0]);
        img.latitude = parse_double(f[1], line_start, "latitude");
        img.longitude = parse_double(f[2], line_start, "longitude");
        img.rotation = parse_int(f[3], line_start, "rotation");
        img.city_id = std::string(f[4]);
        img.zip_code = std::string(f[5]);
        img.width_px = parse_int(f[6], line_start, "width_px");
        img.height_px = parse_int(f[7], line_start, "height_px");
        if (img.latitude < -90.0 || img.latitude > 90.0 || img.longitude < -180.0 ||
            img.longitude > 180.0)
            throw ValidationError("byte " + std::to_string(line_start) +
                                  ": coordinates out of range");
        if (img.rotation < 0 || img.rotation >= 6)
            throw ValidationError("byte " + std::to_string(line_start) +
                                  ": rotation outside [0,6)");
        if (img.width_px <= 0 || img.height_px <= 0)
            throw ValidationError("byte " + std::to_string(line_start) +
                                  ": non-positive image dimensions");
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<GeoImage> read_images_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open image metadata file: " + path);
    return read_images(in);
}

void write_images_file(const std::string& path, const std::vector<GeoImage>& images) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    for (const auto& img : images) {
        out << img.image_id << '\t';
        write_double(out, img.latitude);
        out << '\t';
        write_double(out, img.longitude);
        out << '\t' << img.rotation << '\t' << img.city_id << '\t' << img.zip_code << '\t'
            << img.width_px << '\t' << img.height_px << '\n';
    }
}

std::vector<TruthBox> read_truth_boxes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open truth box file: " + path);
    std::vector<TruthBox> out;
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        const std::uint64_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 6)
            throw ParseError("byte " + std::to_string(line_start) + ": truth box needs 6 fields");
        TruthBox t;
        t.image_id = std::string(f[0]);
        t.bbox.x_center = parse_double(f[1], line_start, "x_center");
        t.bbox.y_center = parse_double(f[2], line_start, "y_center");
        t.bbox.width = parse_double(f[3], line_start, "width");
        t.bbox.height = parse_double(f[4], line_start, "height");
        t.class_id = parse_int(f[5], line_start, "class_id");
        if (!t.bbox.valid())
            throw ValidationError("byte " + std::to_string(line_start) + ": invalid truth bbox");
        out.push_back(std::move(t));
    }
    return out;
}

void write_truth_boxes_file(const std::string& path, const std::vector<TruthBox>& boxes) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    for (const TruthBox& t : boxes) {
        out << t.image_id << '\t';
        write_double(out, t.bbox.x_center);
        out << '\t';
        write_double(out, t.bbox.y_center);
        out << '\t';
        write_double(out, t.bbox.width);
        out << '\t';
        write_double(out, t.bbox.height);
        out << '\t' << t.class_id << '\n';
    }
}

std::vector<GroundTruthRow> read_ground_truth(std::istream& in) {
    std::vector<GroundTruthRow> out;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("ground truth file is empty");
    if (line.rfind("zip_code", 0) != 0)
        throw ParseError("ground truth file missing expected header");
    std::uint64_t offset = line.size() + 1;
    while (std::getline(in, line)) {
        const std::uint64_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 7)
            throw ParseError("byte " + std::to_string(line_start) +
                             ": ground truth row needs 7 fields");
        GroundTruthRow row;
        row.region_id = std::string(f[0]);
        row.median_income = parse_double(f[1], line_start, "median_income");
        row.burglary_rate = parse_double(f[2], line_start, "burglary_rate");
        row.true_avg_price = parse_double(f[3], line_start, "true_avg_price");
        row.true_avg_mpg = parse_double(f[4], line_start, "true_avg_mpg");
        row.true_pct_foreign = parse_double(f[5], line_start, "true_pct_foreign");
        row.true_cars_per_image = parse_double(f[6], line_start, "true_cars_per_image");
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<GroundTruthRow> read_ground_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ground truth file: " + path);
    return read_ground_truth(in);
}

void write_ground_truth_file(const std::string& path, const std::vector<GroundTruthRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    out << "zip_code\tmedian_income\tburglary_rate\ttrue_avg_price\ttrue_avg_mpg\t"
           "true_pct_foreign\ttrue_cars_per_image\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.region_id << '\t' << r.median_income << '\t' << r.burglary_rate << '\t'
            << r.true_avg_price << '\t' << r.true_avg_mpg << '\t' << r.true_pct_foreign << '\t'
            << r.true_cars_per_image << '\n';
    }
}

}  // namespace carcensus
