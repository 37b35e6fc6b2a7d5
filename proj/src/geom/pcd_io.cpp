#include "gtforge/geom/pcd_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge {

namespace {

struct Field {
  std::string name;
  int size = 4;
  char type = 'F';
  int count = 1;
  std::size_t offset = 0;
};

double read_scalar(const char* data, const Field& f) {
  switch (f.type) {
    case 'F':
      if (f.size == 4) {
        float v;
        std::memcpy(&v, data, 4);
        return v;
      }
      if (f.size == 8) {
        double v;
        std::memcpy(&v, data, 8);
        return v;
      }
      break;
    case 'U':
      if (f.size == 1) return static_cast<std::uint8_t>(*data);
      if (f.size == 2) {
        std::uint16_t v;
        std::memcpy(&v, data, 2);
        return v;
      }
      if (f.size == 4) {
        std::uint32_t v;
        std::memcpy(&v, data, 4);
        return v;
      }
      break;
    case 'I':
      if (f.size == 1) return static_cast<std::int8_t>(*data);
      if (f.size == 2) {
        std::int16_t v;
        std::memcpy(&v, data, 2);
        return v;
      }
      if (f.size == 4) {
        std::int32_t v;
        std::memcpy(&v, data, 4);
        return v;
      }
      break;
    default:
      break;
  }
  throw Error(ErrorCode::Parse, fmt::format("unsupported PCD field type {}{}", f.type, f.size));
}

}  // namespace

PointCloud read_pcd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));

  PointCloud cloud;
  std::vector<Field> fields;
  std::size_t points = 0;
  std::string data_mode;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "#") {
      std::string tag;
      ls >> tag;
      if (tag == "stamp") ls >> cloud.stamp;
      if (tag == "frame_id") ls >> cloud.frame_id;
      continue;
    }
    if (key[0] == '#') continue;
    if (key == "FIELDS") {
      std::string name;
      while (ls >> name) fields.push_back({name});
    } else if (key == "SIZE") {
      for (auto& f : fields) ls >> f.size;
    } else if (key == "TYPE") {
      for (auto& f : fields) ls >> f.type;
    } else if (key == "COUNT") {
      for (auto& f : fields) ls >> f.count;
    } else if (key == "POINTS") {
      ls >> points;
    } else if (key == "DATA") {
      ls >> data_mode;
      break;
    }
  }
  if (fields.empty() || data_mode.empty()) {
    throw Error(ErrorCode::Parse, fmt::format("{}: incomplete PCD header", path.string()));
  }

  std::size_t stride = 0;
  int ix = -1, iy = -1, iz = -1, ii = -1;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    fields[k].offset = stride;
    stride += static_cast<std::size_t>(fields[k].size) * fields[k].count;
    const auto& n = fields[k].name;
    if (n == "x") ix = int(k);
    if (n == "y") iy = int(k);
    if (n == "z") iz = int(k);
    if (n == "intensity") ii = int(k);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw Error(ErrorCode::Parse, fmt::format("{}: PCD lacks x/y/z fields", path.string()));
  }

  cloud.points.reserve(points);
  if (ii >= 0) cloud.intensity.reserve(points);

  if (data_mode == "ascii") {
    // Column index of each field's first element.
    std::vector<std::size_t> column(fields.size());
    std::vector<bool> single;  // F4 columns are narrowed like their binary form
    std::size_t col = 0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      column[k] = col;
      col += fields[k].count;
      single.insert(single.end(), fields[k].count, fields[k].type == 'F' && fields[k].size == 4);
    }
    std::vector<double> values(col);
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t c = 0; c < col; ++c) {
        std::string tok;
        if (!(in >> tok)) {
          throw Error(ErrorCode::Parse, fmt::format("{}: truncated ascii data", path.string()));
        }
        values[c] = single[c] ? double(std::strtof(tok.c_str(), nullptr)) : std::strtod(tok.c_str(), nullptr);
      }
      cloud.points.emplace_back(values[column[ix]], values[column[iy]], values[column[iz]]);
      if (ii >= 0) cloud.intensity.push_back(static_cast<float>(values[column[ii]]));
    }
  } else if (data_mode == "binary") {
    std::vector<char> buf(stride * points);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      throw Error(ErrorCode::Parse, fmt::format("{}: truncated binary data", path.string()));
    }
    for (std::size_t p = 0; p < points; ++p) {
      const char* row = buf.data() + p * stride;
      cloud.points.emplace_back(read_scalar(row + fields[ix].offset, fields[ix]),
                                read_scalar(row + fields[iy].offset, fields[iy]),
                                read_scalar(row + fields[iz].offset, fields[iz]));
      if (ii >= 0) {
        cloud.intensity.push_back(static_cast<float>(read_scalar(row + fields[ii].offset, fields[ii])));
      }
    }
  } else {
    throw Error(ErrorCode::Parse,
                fmt::format("{}: unsupported PCD data mode '{}'", path.string(), data_mode));
  }
  remove_non_finite(cloud);
  return cloud;
}

void write_pcd(const std::filesystem::path& path, const PointCloud& cloud, PcdEncoding encoding) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));

  const bool with_i = cloud.has_intensity();
  const std::size_t n = cloud.size();
  out << "# .PCD v0.7 - Point Cloud Data file format\n";
  out << fmt::format("# stamp {:.9f}\n", cloud.stamp);
  if (!cloud.frame_id.empty()) out << "# frame_id " << cloud.frame_id << '\n';
  out << "VERSION 0.7\n";
  out << (with_i ? "FIELDS x y z intensity\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n"
                 : "FIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n");
  out << "WIDTH " << n << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << n << '\n';
  if (encoding == PcdEncoding::Ascii) {
    out << "DATA ascii\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = cloud.points[i];
      // float32 values printed with round-trip precision.
      out << fmt::format("{} {} {}", float(p.x()), float(p.y()), float(p.z()));
      if (with_i) out << fmt::format(" {}", cloud.intensity[i]);
      out << '\n';
    }
  } else {
    out << "DATA binary\n";
    const std::size_t stride = with_i ? 4 : 3;
    std::vector<float> buf(stride * n);
    for (std::size_t i = 0; i < n; ++i) {
      buf[i * stride + 0] = static_cast<float>(cloud.points[i].x());
      buf[i * stride + 1] = static_cast<float>(cloud.points[i].y());
      buf[i * stride + 2] = static_cast<float>(cloud.points[i].z());
      if (with_i) buf[i * stride + 3] = cloud.intensity[i];
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace gtforge
