#pragma once

#include <filesystem>
#include <string>

namespace cycleuq {

// Shortest round-trippable decimal form; "nan"/"inf" for non-finite values.
std::string fmt_num(double v);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cycleuq
