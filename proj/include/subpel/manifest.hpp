#ifndef SUBPEL_MANIFEST_HPP
#define SUBPEL_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace subpel {

inline constexpr const char* kToolVersion = "0.1.0";

// CRC32 (zlib polynomial) of a whole file.
std::uint32_t file_crc32(const std::filesystem::path& path);

struct ManifestInput {
    std::string path;
    std::uint32_t crc = 0;
    std::uint64_t bytes = 0;
};

// Record of one command invocation. Contains no timestamps, so a re-run with
// identical arguments writes identical bytes.
struct RunManifest {
    std::string command;
    nlohmann::json config;  // fully resolved, defaults included
    std::uint64_t seed = 0;
    std::vector<ManifestInput> inputs;
    std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

// Input hashes recorded in a manifest file, for overlap checks.
std::vector<std::uint32_t> manifest_input_crcs(const std::filesystem::path& path);

} // namespace subpel

#endif
