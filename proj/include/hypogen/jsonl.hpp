#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace hypogen::jsonl {

/// Reads a line-delimited record file; blank lines are skipped. Throws
/// InvalidInput with the line number on malformed lines.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path);

/// Writes one compact object per line (keys in nlohmann's sorted order).
void write_file(const std::filesystem::path& path, std::span<const nlohmann::json> records);

void append_line(std::ofstream& out, const nlohmann::json& record);

}  // namespace hypogen::jsonl
