#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace carcensus {

// 64-bit FNV-1a over the file's bytes, hex encoded. Content fingerprint for
// reproducibility checks, not a cryptographic hash.
std::string file_digest(const std::string& path);

// Writes via a temp file in the same directory plus rename, so readers never
// see a partial output.
void atomic_write_file(const std::string& path, const std::string& content);

struct PipelineManifest {
    std::string command;
    std::map<std::string, std::string> inputs;   // path -> digest
    std::map<std::string, std::string> config;   // flag -> value
    std::uint64_t seed = 0;
    std::string tool_version;
    std::map<std::string, std::string> outputs;  // path -> digest
    double duration_seconds = 0.0;
};

// Serialized as JSON next to the primary output (<output>.manifest.json).
std::string manifest_to_json(const PipelineManifest& m);
void write_manifest(const PipelineManifest& m, const std::string& output_path);

inline constexpr const char* kToolVersion = "carcensus 0.1.0";

}  // namespace carcensus
