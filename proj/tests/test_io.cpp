#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "gzsl/error.hpp"
#include "gzsl/io.hpp"

using namespace gzsl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "gzsl_test_io" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("GZM1 header layout") {
  const Matrix m = Matrix::from_rows({{1.5, -2.0, 0.25}, {4.0, 5.0, 6.0}});
  const auto bytes = io::encode_gzm(m);
  REQUIRE(bytes.size() == 8 + 16 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "GZSLMAT1", 8) == 0);
  CHECK(bytes[8] == 2);
  for (int i = 9; i < 16; ++i) CHECK(bytes[i] == 0);
  CHECK(bytes[16] == 3);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 24, 4);
  CHECK(first == 1.5f);
  CHECK(io::decode_gzm(bytes) == m);
}

TEST_CASE("GZM1 round trip is bit-identical for float32-representable data") {
  const auto dir = scratch_dir("roundtrip");
  Matrix m(17, 9);
  double x = -3.0;
  for (double& v : m.values()) {
    v = static_cast<double>(static_cast<float>(x));
    x += 0.3711;
  }
  io::save_matrix(dir / "m.gzm", m);
  const Matrix back = io::load_matrix(dir / "m.gzm");
  CHECK(back == m);
  io::save_matrix(dir / "m2.gzm", back);
  std::ifstream a(dir / "m.gzm", std::ios::binary), b(dir / "m2.gzm", std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("CSV matrices") {
  const auto dir = scratch_dir("csv");
  io::save_text(dir / "a.csv", "1, 2,3\n4,5,6\n\n");
  CHECK(io::load_matrix(dir / "a.csv") == Matrix::from_rows({{1, 2, 3}, {4, 5, 6}}));
  io::save_text(dir / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::load_matrix(dir / "ragged.csv"), ShapeError);
  io::save_text(dir / "nan.csv", "1,nan\n");
  CHECK_THROWS_AS(io::load_matrix(dir / "nan.csv"), ValidationError);
  io::save_text(dir / "junk.csv", "1,abc\n");
  CHECK_THROWS_AS(io::load_matrix(dir / "junk.csv"), IoError);

  const Matrix m = Matrix::from_rows({{0.1, 1e-300}, {-7.25, 3.0}});
  io::save_matrix(dir / "full.csv", m);
  CHECK(io::load_matrix(dir / "full.csv") == m);
}

TEST_CASE("malformed binary files") {
  const auto dir = scratch_dir("bad");
  auto bytes = io::encode_gzm(Matrix(3, 3, 1.0));
  bytes.pop_back();
  CHECK_THROWS_AS(io::decode_gzm(bytes), IoError);
  auto nan_bytes = io::encode_gzm(Matrix(1, 1, 0.0));
  const float nan = NAN;
  std::memcpy(nan_bytes.data() + 24, &nan, 4);
  CHECK_THROWS_AS(io::decode_gzm(nan_bytes), ArgumentError);
  CHECK_THROWS_AS(io::load_matrix(dir / "missing.gzm"), IoError);
  CHECK_THROWS_AS(io::encode_gzm(Matrix(1, 1, 1e300)), ArgumentError);
}

TEST_CASE("integer line files") {
  const auto dir = scratch_dir("ints");
  io::save_int_lines(dir / "l.txt", {3, -1, 0, 42});
  CHECK(io::load_int_lines(dir / "l.txt") == std::vector<std::int64_t>{3, -1, 0, 42});
  io::save_text(dir / "bad.txt", "1\n2.5\n");
  CHECK_THROWS_AS(io::load_int_lines(dir / "bad.txt"), IoError);
}
