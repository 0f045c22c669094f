#pragma once

#include <string>
#include <vector>

#include "mir/util.hpp"

namespace mir {

inline constexpr const char* kToolVersion = "0.1.0";

// One manifest entry per command run, appended to <out>/manifest.jsonl.
// Records the config snapshot plus input and artifact digests so a run can
// be replayed byte-for-byte (judge calls replay from the transcript cache).
struct ManifestEntry {
    std::string command;
    json config = json::object();
    std::vector<std::pair<std::string, std::string>> inputs;     // path, sha256
    std::vector<std::pair<std::string, std::string>> artifacts;  // path, sha256
};

void append_manifest(const std::string& out_dir, const ManifestEntry& entry);

// Writes an artifact and records it in the entry.
void emit_artifact(ManifestEntry& entry, const std::string& path, std::string_view content);

void record_input(ManifestEntry& entry, const std::string& path);

}  // namespace mir
