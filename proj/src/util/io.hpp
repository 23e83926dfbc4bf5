#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/serialize.hpp"

namespace policysimp {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Returns the byte offset of the first invalid UTF-8 sequence, or npos.
std::size_t find_invalid_utf8(std::string_view s) noexcept;

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames, so readers never observe a
// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const Json> records);

/// One JSON value per line, LF-terminated, UTF-8, no trailing whitespace.
std::string to_jsonl_line(const Json& record);

}  // namespace policysimp
