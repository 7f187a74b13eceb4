#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzsl/linalg.hpp"

namespace gzsl::io {

inline constexpr char kGzmMagic[8] = {'G', 'Z', 'S', 'L', 'M', 'A', 'T', '1'};

/// Writes the binary matrix format: 8-byte magic "GZSLMAT1", rows and cols as little-endian
/// uint64, then rows*cols little-endian float32 in row-major order. A ".csv" extension selects
/// headerless CSV instead (full double precision).
void save_matrix(const std::filesystem::path& path, const Matrix& m);

/// Reads either format; binary files are recognised by their magic, anything else is parsed as
/// CSV. float32 payloads are widened to double.
Matrix load_matrix(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_gzm(const Matrix& m);
Matrix decode_gzm(const std::vector<std::uint8_t>& bytes);

std::vector<std::int64_t> load_int_lines(const std::filesystem::path& path);
void save_int_lines(const std::filesystem::path& path, const std::vector<std::int64_t>& values);

nlohmann::json load_json(const std::filesystem::path& path);
/// Keys come out sorted (nlohmann::json uses std::map), so equal values give equal bytes.
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gzsl::io
