#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kgperc::tsv {

std::vector<std::string_view> split(std::string_view line, char sep);

// Splits on `sep`, trimming whitespace and dropping empty pieces.
std::vector<std::string> split_list(std::string_view field, char sep);

double parse_double(std::string_view field, const std::string& where);
long long parse_int(std::string_view field, const std::string& where);

// Calls `fn(line, line_number)` for every non-empty line that does not start
// with '#'. Line numbers are 1-based. Trailing '\r' is stripped.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

std::ofstream open_for_write(const std::filesystem::path& path);

}  // namespace kgperc::tsv
