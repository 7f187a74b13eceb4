#include "gzsl/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gzsl/error.hpp"

namespace gzsl::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "the GZM1 reader/writer assumes a little-endian host");

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("GZM1: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

Matrix parse_csv(std::istream& in, const std::string& name) {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t n = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        data.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError(name + ": bad CSV value '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) throw ShapeError(name + ": ragged CSV row " + std::to_string(rows + 1));
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace

std::vector<std::uint8_t> encode_gzm(const Matrix& m) {
  std::vector<std::uint8_t> out(kGzmMagic, kGzmMagic + 8);
  out.reserve(24 + 4 * m.size());
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  for (double v : m.values()) {
    if (std::abs(v) > std::numeric_limits<float>::max()) {
      throw ArgumentError("GZM1: value out of float32 range");
    }
    put<float>(out, static_cast<float>(v));
  }
  return out;
}

Matrix decode_gzm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kGzmMagic, 8) != 0) {
    throw IoError("GZM1: bad magic");
  }
  std::size_t pos = 8;
  const auto rows = get<std::uint64_t>(bytes, pos);
  const auto cols = get<std::uint64_t>(bytes, pos);
  if (cols != 0 && rows > (bytes.size() - pos) / 4 / cols) throw IoError("GZM1: truncated file");
  if (bytes.size() - pos != rows * cols * 4) throw IoError("GZM1: payload size mismatch");
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = static_cast<double>(get<float>(bytes, pos));
  return Matrix(rows, cols, std::move(data));
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (path.extension() == ".csv") {
    auto out = open_out(path, std::ios::out);
    out << std::setprecision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << m(r, c);
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
    return;
  }
  const auto bytes = encode_gzm(m);
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kGzmMagic, 8) == 0) return decode_gzm(bytes);
  std::istringstream text(std::string(bytes.begin(), bytes.end()));
  try {
    return parse_csv(text, path.string());
  } catch (const ArgumentError& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
}

std::vector<std::int64_t> load_int_lines(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  std::vector<std::int64_t> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stoll(line, &used));
      if (line.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": not an integer: '" + line + "'");
    }
  }
  return values;
}

void save_int_lines(const std::filesystem::path& path, const std::vector<std::int64_t>& values) {
  auto out = open_out(path, std::ios::out);
  for (auto v : values) out << v << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

nlohmann::json load_json(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  save_text(path, j.dump(2) + "\n");
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gzsl::io
