#include "crossview/matrix.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

static_assert(std::endian::native == std::endian::little,
              "GFKM I/O assumes a little-endian host");

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) {
    throw DataError(what + ": non-finite entries");
  }
}

namespace {

constexpr char kMagic[4] = {'G', 'F', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void write_gfkm(const std::string& path, const Matrix& m) {
  require_finite(m, "write_gfkm(" + path + ")");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw DataError("cannot open for writing: " + path);
  }
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      write_pod<double>(os, m(r, c));
    }
  }
  if (!os) {
    throw DataError("short write: " + path);
  }
}

Matrix read_gfkm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot open: " + path);
  }
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError("not a GFKM file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) {
    throw DataError("unsupported GFKM version " + std::to_string(version) +
                    ": " + path);
  }
  const auto rows = read_pod<std::uint64_t>(is);
  const auto cols = read_pod<std::uint64_t>(is);
  if (!is || rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
    throw DataError("bad GFKM header: " + path);
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::uint64_t r = 0; r < rows; ++r) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(cols * sizeof(double)));
    if (!is) {
      throw DataError("truncated GFKM payload: " + path);
    }
    for (std::uint64_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  require_finite(m, "read_gfkm(" + path + ")");
  return m;
}

void write_gfkm_atomic(const std::string& path, const Matrix& m) {
  const std::string tmp = path + ".tmp";
  write_gfkm(tmp, m);
  std::filesystem::rename(tmp, path);
}

}  // namespace crossview
