#include "carcensus/manifest.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "carcensus/errors.hpp"

namespace carcensus {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("file_digest: cannot open " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("atomic_write_file: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ParseError("atomic_write_file: short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string manifest_to_json(const PipelineManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["inputs"] = m.inputs;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    j["outputs"] = m.outputs;
    j["duration_seconds"] = m.duration_seconds;
    return j.dump(2) + "\n";
}

void write_manifest(const PipelineManifest& m, const std::string& output_path) {
    atomic_write_file(output_path + ".manifest.json", manifest_to_json(m));
}

}  // namespace carcensus
