#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small string and file helpers shared by the modules.
namespace agentflow::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Trim, ASCII casefold and collapse internal whitespace runs to one space.
std::string normalize(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Format with a fixed number of decimals, independent of the global locale.
std::string fixed(double value, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace agentflow::text
