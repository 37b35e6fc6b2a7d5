#include "gtforge/geom/scan_sequence.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pcd_io.hpp"

namespace gtforge {

double read_pcd_stamp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key, tag;
    ls >> key;
    if (key == "DATA") break;
    if (key != "#") continue;
    ls >> tag;
    double stamp = 0.0;
    if (tag == "stamp" && (ls >> stamp)) return stamp;
  }
  throw Error(ErrorCode::Parse, fmt::format("{}: no '# stamp' header line", path.string()));
}

PcdDirectoryScans::PcdDirectoryScans(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::MissingInput, fmt::format("scan directory {} not found", dir.string()));
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pcd") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  stamps_.reserve(files_.size());
  for (const auto& f : files_) {
    stamps_.push_back(read_pcd_stamp(f));
    if (stamps_.size() > 1 && !(stamps_.back() > stamps_[stamps_.size() - 2])) {
      throw Error(ErrorCode::UnorderedTimestamps,
                  fmt::format("{}: stamp does not increase over the previous file", f.string()));
    }
  }
}

PointCloud PcdDirectoryScans::at(std::size_t i) const {
  PointCloud c = read_pcd(files_[i]);
  c.stamp = stamps_[i];
  return c;
}

}  // namespace gtforge
