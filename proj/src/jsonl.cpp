#include "hypogen/jsonl.hpp"

#include <string>

#include "hypogen/errors.hpp"

namespace hypogen::jsonl {

std::vector<nlohmann::json> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open file: " + path.string());
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                               ": malformed record");
        }
        records.push_back(std::move(parsed));
    }
    return records;
}

void write_file(const std::filesystem::path& path, std::span<const nlohmann::json> records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidInput("cannot write file: " + path.string());
    for (const auto& record : records) append_line(out, record);
}

void append_line(std::ofstream& out, const nlohmann::json& record) {
    out << record.dump() << '\n';
}

}  // namespace hypogen::jsonl
