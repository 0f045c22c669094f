#include "mir/manifest.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

namespace mir {

void append_manifest(const std::string& out_dir, const ManifestEntry& entry) {
    std::filesystem::create_directories(out_dir);
    json inputs = json::array();
    for (const auto& [path, digest] : entry.inputs) inputs.push_back(json{{"path", path}, {"sha256", digest}});
    json artifacts = json::array();
    for (const auto& [path, digest] : entry.artifacts) {
        artifacts.push_back(json{{"path", path}, {"sha256", digest}});
    }
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    json record{{"command", entry.command},
                {"tool_version", kToolVersion},
                {"timestamp_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
                {"config", entry.config},
                {"inputs", inputs},
                {"artifacts", artifacts}};
    std::ofstream out(out_dir + "/manifest.jsonl", std::ios::app);
    if (!out) throw std::runtime_error("cannot append manifest in " + out_dir);
    out << record.dump() << '\n';
}

void emit_artifact(ManifestEntry& entry, const std::string& path, std::string_view content) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    write_file(path, content);
    entry.artifacts.emplace_back(path, sha256_hex(content));
}

void record_input(ManifestEntry& entry, const std::string& path) {
    entry.inputs.emplace_back(path, sha256_file_hex(path));
}

}  // namespace mir
