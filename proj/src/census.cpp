#include "carcensus/census.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "carcensus/errors.hpp"

namespace carcensus {

std::vector<std::pair<int, double>> truncate_topk(std::span<const double> full, int k) {
    if (k <= 0) throw std::invalid_argument("truncate_topk: k must be positive");
    std::vector<std::pair<int, double>> entries;
    entries.reserve(full.size());
    for (size_t i = 0; i < full.size(); ++i)
        if (full[i] > 0.0) entries.emplace_back(static_cast<int>(i), full[i]);
    auto better = [](const std::pair<int, double>& a, const std::pair<int, double>& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    if (entries.size() > static_cast<size_t>(k)) {
        std::nth_element(entries.begin(), entries.begin() + k - 1, entries.end(), better);
        entries.resize(static_cast<size_t>(k));
    }
    std::sort(entries.begin(), entries.end());
    return entries;
}

ClassExpectation expected_class_count(std::span<const DetectionRecord> image_detections) {
    ClassExpectation exp;
    for (const DetectionRecord& rec : image_detections) {
        if (!rec.car_probability)
            throw StateError("expected_class_count: record lacks calibrated car_probability");
        for (const auto& [cid, p] : rec.class_probs) exp[cid] += *rec.car_probability * p;
    }
    return exp;
}

std::optional<double> expected_attribute_numeric(const ClassExpectation& expectation,
                                                 const ClassTable& table, AttributeKind kind) {
    if (!attribute_is_numeric(kind))
        throw std::invalid_argument("expected_attribute_numeric: kind is categorical");
    double num = 0.0, den = 0.0;
    for (const auto& [cid, mass] : expectation) {
        const CarClass& c = table.at(cid);
        const std::optional<double>& v = kind == AttributeKind::Price ? c.price_usd : c.mpg;
        if (!v) continue;  // missing values stay out of both sums
        num += mass * *v;
        den += mass;
    }
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

std::map<std::string, double> expected_attribute_mass(const ClassExpectation& expectation,
                                                      const ClassTable& table,
                                                      AttributeKind kind) {
    if (attribute_is_numeric(kind))
        throw std::invalid_argument("expected_attribute_mass: kind is numeric");
    std::map<std::string, double> mass;
    for (const auto& [cid, m] : expectation) mass[attribute_of(table, cid, kind).cat] += m;
    return mass;
}

void RegionAggregator::add_image(const std::string& region_id, const ClassExpectation& exp) {
    Region& r = regions_[region_id];
    r.images += 1;
    for (const auto& [cid, v] : exp) r.counts[cid].add(v);
    ++images_;
}

void RegionAggregator::merge_from(const RegionAggregator& other) {
    for (const auto& [rid, src] : other.regions_) {
        Region& dst = regions_[rid];
        dst.images += src.images;
        for (const auto& [cid, acc] : src.counts) dst.counts[cid].add(acc.sum);
    }
    images_ += other.images_;
}

std::vector<RegionStats> RegionAggregator::finalize(const ClassTable& table) const {
    std::vector<RegionStats> out;
    for (const auto& [rid, region] : regions_) {
        RegionStats s;
        s.region_id = rid;
        s.image_count = region.images;
        ClassExpectation exp;
        Kahan total;
        for (const auto& [cid, acc] : region.counts) {
            exp[cid] = acc.sum;
            total.add(acc.sum);
        }
        s.class_counts = exp;
        s.total_expected_cars = total.sum;
        s.cars_per_image =
            region.images > 0 ? s.total_expected_cars / static_cast<double>(region.images) : 0.0;
        s.avg_price = expected_attribute_numeric(exp, table, AttributeKind::Price);
        s.avg_mpg = expected_attribute_numeric(exp, table, AttributeKind::Mpg);
        if (s.total_expected_cars > 0.0) {
            const auto foreign = expected_attribute_mass(exp, table, AttributeKind::Foreign);
            auto it = foreign.find("foreign");
            s.pct_foreign = it == foreign.end() ? 0.0 : it->second / s.total_expected_cars;
            for (auto& [k, v] : expected_attribute_mass(exp, table, AttributeKind::Make))
                s.pct_by_make[k] = v / s.total_expected_cars;
            for (auto& [k, v] : expected_attribute_mass(exp, table, AttributeKind::BodyTypeKind))
                s.pct_by_body_type[k] = v / s.total_expected_cars;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RegionStats> aggregate_detections_stream(std::istream& detections,
                                                     const std::vector<GeoImage>& images,
                                                     const ClassTable& table, GroupBy by) {
    std::unordered_map<std::string, const GeoImage*> meta;
    meta.reserve(images.size());
    for (const GeoImage& img : images) meta[img.image_id] = &img;
    auto region_of = [&](const std::string& image_id) -> std::string {
        auto it = meta.find(image_id);
        if (it == meta.end()) return kUnassignedRegion;
        return by == GroupBy::City ? it->second->city_id : it->second->zip_code;
    };

    RegionAggregator agg;
    DetectionReader reader(detections, &table);
    std::vector<DetectionRecord> group;
    std::string current_id;
    std::unordered_map<std::string, char> seen;
    auto flush = [&]() {
        if (group.empty()) return;
        agg.add_image(region_of(current_id), expected_class_count(group));
        seen[current_id] = 1;
        group.clear();
    };
    while (auto rec = reader.next()) {
        if (rec->image_id != current_id) {
            flush();
            current_id = rec->image_id;
        }
        group.push_back(std::move(*rec));
    }
    flush();

    // Images with zero detections still count toward cars_per_image.
    static const ClassExpectation kEmpty;
    for (const GeoImage& img : images)
        if (!seen.count(img.image_id))
            agg.add_image(by == GroupBy::City ? img.city_id : img.zip_code, kEmpty);
    return agg.finalize(table);
}

std::vector<RegionStats> aggregate_detections_file(const std::string& detections_path,
                                                   const std::vector<GeoImage>& images,
                                                   const ClassTable& table, GroupBy by) {
    std::ifstream in(detections_path);
    if (!in) throw ParseError("cannot open detections file: " + detections_path);
    return aggregate_detections_stream(in, images, table, by);
}

void write_region_stats(std::ostream& out, std::span<const RegionStats> stats,
                        const ClassTable& table) {
    out << "region_id\timage_count\ttotal_expected_cars\tcars_per_image\tavg_price\tavg_mpg\t"
           "pct_foreign";
    for (const std::string& make : table.makes()) out << "\tpct_make:" << make;
    for (int b = 0; b < kBodyTypeCount; ++b)
        out << "\tpct_body:" << body_type_name(static_cast<BodyType>(b));
    out << '\n';
    out.precision(12);
    for (const RegionStats& s : stats) {
        out << s.region_id << '\t' << s.image_count << '\t' << s.total_expected_cars << '\t'
            << s.cars_per_image << '\t';
        if (s.avg_price) out << *s.avg_price;
        out << '\t';
        if (s.avg_mpg) out << *s.avg_mpg;
        out << '\t' << s.pct_foreign;
        for (const std::string& make : table.makes()) {
            auto it = s.pct_by_make.find(make);
            out << '\t' << (it == s.pct_by_make.end() ? 0.0 : it->second);
        }
        for (int b = 0; b < kBodyTypeCount; ++b) {
            auto it = s.pct_by_body_type.find(body_type_name(static_cast<BodyType>(b)));
            out << '\t' << (it == s.pct_by_body_type.end() ? 0.0 : it->second);
        }
        out << '\n';
    }
}

std::vector<RegionStats> read_region_stats(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("region stats file is empty");
    std::vector<std::string> header;
    {
        size_t start = 0;
        while (true) {
            const size_t tab = line.find('\t', start);
            header.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
    }
    if (header.empty() || header[0] != "region_id")
        throw ParseError("region stats file missing expected header");

    std::vector<RegionStats> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        size_t start = 0;
        while (true) {
            const size_t tab = line.find('\t', start);
            f.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (f.size() != header.size())
            throw ParseError("region stats line " + std::to_string(line_no) +
                             ": field count mismatch");
        RegionStats s;
        auto num = [&](const std::string& v) { return v.empty() ? 0.0 : std::stod(v); };
        for (size_t i = 0; i < header.size(); ++i) {
            const std::string& h = header[i];
            if (h == "region_id")
                s.region_id = f[i];
            else if (h == "image_count")
                s.image_count = static_cast<long>(num(f[i]));
            else if (h == "total_expected_cars")
                s.total_expected_cars = num(f[i]);
            else if (h == "cars_per_image")
                s.cars_per_image = num(f[i]);
            else if (h == "avg_price") {
                if (!f[i].empty()) s.avg_price = num(f[i]);
            } else if (h == "avg_mpg") {
                if (!f[i].empty()) s.avg_mpg = num(f[i]);
            } else if (h == "pct_foreign")
                s.pct_foreign = num(f[i]);
            else if (h.rfind("pct_make:", 0) == 0)
                s.pct_by_make[h.substr(9)] = num(f[i]);
            else if (h.rfind("pct_body:", 0) == 0)
                s.pct_by_body_type[h.substr(9)] = num(f[i]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RegionStats> read_region_stats_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open region stats file: " + path);
    return read_region_stats(in);
}

}  // namespace carcensus
