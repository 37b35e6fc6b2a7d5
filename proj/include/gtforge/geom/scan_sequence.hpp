#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "gtforge/geom/point_cloud.hpp"

namespace gtforge {

/// Time-ordered scans that are materialised on demand.
class ScanSequence {
 public:
  virtual ~ScanSequence() = default;
  virtual std::size_t size() const = 0;
  virtual double stamp(std::size_t i) const = 0;
  virtual PointCloud at(std::size_t i) const = 0;

  bool empty() const { return size() == 0; }
};

class InMemoryScans final : public ScanSequence {
 public:
  explicit InMemoryScans(std::vector<PointCloud> scans) : scans_(std::move(scans)) {}

  std::size_t size() const override { return scans_.size(); }
  double stamp(std::size_t i) const override { return scans_[i].stamp; }
  PointCloud at(std::size_t i) const override { return scans_[i]; }
  const std::vector<PointCloud>& scans() const { return scans_; }

 private:
  std::vector<PointCloud> scans_;
};

/// Non-owning view over scans held elsewhere.
class SpanScans final : public ScanSequence {
 public:
  explicit SpanScans(std::span<const PointCloud> scans) : scans_(scans) {}

  std::size_t size() const override { return scans_.size(); }
  double stamp(std::size_t i) const override { return scans_[i].stamp; }
  PointCloud at(std::size_t i) const override { return scans_[i]; }

 private:
  std::span<const PointCloud> scans_;
};

/// *.pcd files of a directory in name order. Stamps come from each file's
/// `# stamp` header line, read once on construction.
class PcdDirectoryScans final : public ScanSequence {
 public:
  explicit PcdDirectoryScans(const std::filesystem::path& dir);

  std::size_t size() const override { return files_.size(); }
  double stamp(std::size_t i) const override { return stamps_[i]; }
  PointCloud at(std::size_t i) const override;
  const std::filesystem::path& file(std::size_t i) const { return files_[i]; }

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<double> stamps_;
};

/// Reads only the header of a PCD file and returns its `# stamp` value.
/// Throws Parse if the file carries no stamp.
double read_pcd_stamp(const std::filesystem::path& path);

}  // namespace gtforge
