#include "subpel/manifest.hpp"

#include <cstdio>
#include <fstream>

#include <zlib.h>

#include "subpel/errors.hpp"

namespace subpel {

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for hashing: " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
        if (in.eof()) break;
    }
    return static_cast<std::uint32_t>(crc);
}

namespace {

std::string crc_hex(std::uint32_t crc) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", crc);
    return buf;
}

} // namespace

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["seed"] = m.seed;
    nlohmann::json inputs = nlohmann::json::array();
    for (const ManifestInput& in : m.inputs) {
        inputs.push_back({{"path", in.path}, {"crc32", crc_hex(in.crc)}, {"bytes", in.bytes}});
    }
    j["inputs"] = inputs;
    j["outputs"] = m.outputs;
    j["tool_version"] = kToolVersion;
    return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open manifest for writing: " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
    if (!out) throw DataError("failed writing manifest: " + path.string());
}

std::vector<std::uint32_t> manifest_input_crcs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what(), 0);
    }
    std::vector<std::uint32_t> crcs;
    if (!j.contains("inputs") || !j["inputs"].is_array()) return crcs;
    for (const auto& entry : j["inputs"]) {
        if (!entry.contains("crc32")) continue;
        const std::string hex = entry["crc32"].get<std::string>();
        crcs.push_back(static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16)));
    }
    return crcs;
}

} // namespace subpel
