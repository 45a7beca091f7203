#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ovdprobe {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// One entry per non-empty line, surrounding whitespace trimmed. Lines starting with '#' are skipped.
std::vector<std::string> read_list_file(const std::filesystem::path& path);
std::vector<std::string> parse_list(std::string_view text);

}  // namespace ovdprobe
