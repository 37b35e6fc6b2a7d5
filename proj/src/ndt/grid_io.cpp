#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/ndt/ndt.hpp"

// Layout (little-endian):
//   char[8]  magic "GTFNDT\0\0"
//   u32      version
//   f64      cell_size
//   f64[3]   origin
//   u64      cell count
//   per cell, sorted by key: i64[3] key, u64 count, f64[3] mean,
//                            f64[9] covariance, f64[9] inverse (row-major)

namespace gtforge {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'T', 'F', 'N', 'D', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::Parse, fmt::format("{}: truncated NDT grid file", path.string()));
  return v;
}

void put_matrix(std::ofstream& out, const Eigen::Matrix3d& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) put(out, m(r, c));
}

Eigen::Matrix3d get_matrix(std::ifstream& in, const std::filesystem::path& path) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = get<double>(in, path);
  return m;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const NdtGrid& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, grid.cell_size());
  for (int i = 0; i < 3; ++i) put(out, grid.origin()(i));

  std::vector<VoxelKey> keys;
  keys.reserve(grid.size());
  for (const auto& [key, cell] : grid.cells()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  put(out, static_cast<std::uint64_t>(keys.size()));
  for (const VoxelKey& key : keys) {
    const NdtCell& cell = *grid.find(key);
    put(out, key.x);
    put(out, key.y);
    put(out, key.z);
    put(out, cell.count);
    for (int i = 0; i < 3; ++i) put(out, cell.mean(i));
    put_matrix(out, cell.covariance);
    put_matrix(out, cell.inv_covariance);
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

NdtGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw Error(ErrorCode::Parse, fmt::format("{}: not an NDT grid file", path.string()));
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw Error(ErrorCode::Parse,
                fmt::format("{}: unsupported NDT grid version {}", path.string(), version));
  }
  const double cell_size = get<double>(in, path);
  Eigen::Vector3d origin;
  for (int i = 0; i < 3; ++i) origin(i) = get<double>(in, path);
  NdtGrid grid(cell_size, origin);
  const auto n = get<std::uint64_t>(in, path);
  for (std::uint64_t c = 0; c < n; ++c) {
    VoxelKey key;
    key.x = get<std::int64_t>(in, path);
    key.y = get<std::int64_t>(in, path);
    key.z = get<std::int64_t>(in, path);
    NdtCell cell;
    cell.count = get<std::uint64_t>(in, path);
    for (int i = 0; i < 3; ++i) cell.mean(i) = get<double>(in, path);
    cell.covariance = get_matrix(in, path);
    cell.inv_covariance = get_matrix(in, path);
    grid.insert(key, cell);
  }
  return grid;
}

}  // namespace gtforge
