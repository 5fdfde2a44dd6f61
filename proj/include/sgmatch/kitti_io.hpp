#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "sgmatch/error.hpp"
#include "sgmatch/types.hpp"

namespace sgm {

namespace detail {

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline uint32_t decode_u32_le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

inline float decode_f32_le(const uint8_t* p) { return std::bit_cast<float>(decode_u32_le(p)); }

inline void encode_u32_le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

inline void encode_f32_le(std::vector<uint8_t>& out, float v) {
  encode_u32_le(out, std::bit_cast<uint32_t>(v));
}

}  // namespace detail

// ---- velodyne scans + per-point labels ---------------------------------------
// Scan: flat little-endian float32 records (x, y, z, reflectance).
// Label: flat little-endian uint32 per point; semantic class = low 16 bits
// (the high 16 bits carry an instance id this pipeline re-derives and drops).

inline LabeledPointCloud load_velodyne_scan(const std::filesystem::path& scan_path,
                                            const std::filesystem::path& label_path,
                                            SceneId scene_id = {}) {
  const auto scan = detail::read_file_bytes(scan_path);
  const auto labels = detail::read_file_bytes(label_path);
  constexpr size_t kScanStride = 16;
  constexpr size_t kLabelStride = 4;
  if (scan.size() % kScanStride != 0) {
    throw ParseError("truncated scan " + scan_path.string() + ": " +
                     std::to_string(scan.size()) + " bytes is not a multiple of " +
                     std::to_string(kScanStride));
  }
  if (labels.size() % kLabelStride != 0) {
    throw ParseError("truncated label file " + label_path.string() + ": " +
                     std::to_string(labels.size()) + " bytes is not a multiple of " +
                     std::to_string(kLabelStride));
  }
  const size_t n_points = scan.size() / kScanStride;
  const size_t n_labels = labels.size() / kLabelStride;
  if (n_points != n_labels) {
    throw ParseError("scan/label record count mismatch: " + std::to_string(n_points) +
                     " points vs " + std::to_string(n_labels) + " labels");
  }
  LabeledPointCloud cloud;
  cloud.scene_id = scene_id;
  cloud.points.reserve(n_points);
  cloud.labels.reserve(n_points);
  for (size_t i = 0; i < n_points; ++i) {
    const uint8_t* rec = scan.data() + i * kScanStride;
    cloud.points.emplace_back(detail::decode_f32_le(rec), detail::decode_f32_le(rec + 4),
                              detail::decode_f32_le(rec + 8));
    cloud.labels.push_back(
        static_cast<int>(detail::decode_u32_le(labels.data() + i * kLabelStride) & 0xFFFFu));
  }
  cloud.validate();
  return cloud;
}

inline void save_velodyne_scan(const LabeledPointCloud& cloud,
                               const std::filesystem::path& scan_path,
                               const std::filesystem::path& label_path) {
  std::vector<uint8_t> scan;
  scan.reserve(cloud.size() * 16);
  std::vector<uint8_t> labels;
  labels.reserve(cloud.size() * 4);
  for (size_t i = 0; i < cloud.size(); ++i) {
    detail::encode_f32_le(scan, static_cast<float>(cloud.points[i].x()));
    detail::encode_f32_le(scan, static_cast<float>(cloud.points[i].y()));
    detail::encode_f32_le(scan, static_cast<float>(cloud.points[i].z()));
    detail::encode_f32_le(scan, 0.0f);  // reflectance, not modeled
    detail::encode_u32_le(labels, static_cast<uint32_t>(cloud.labels[i]) & 0xFFFFu);
  }
  detail::write_file_bytes(scan_path, scan);
  detail::write_file_bytes(label_path, labels);
}

// ---- poses -------------------------------------------------------------------
// Text, one frame per line, 12 floats: the row-major top 3x4 of the pose
// matrix. Translation is elements 4, 8, 12.

inline std::vector<PoseRecord> load_poses(const std::filesystem::path& path, int sequence = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PoseRecord> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    double v[12];
    int got = 0;
    while (got < 12 && (ss >> v[got])) ++got;
    double extra;
    if (got != 12 || (ss >> extra)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 12 numbers per pose line");
    }
    PoseRecord pose;
    pose.scene_id = SceneId{sequence, static_cast<int>(poses.size())};
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation << v[3], v[7], v[11];
    const double ortho_err =
        (pose.rotation.transpose() * pose.rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    if (ortho_err > 1e-6) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": rotation not orthonormal (deviation " + std::to_string(ortho_err) +
                       ")");
    }
    poses.push_back(pose);
  }
  return poses;
}

inline void save_poses(const std::filesystem::path& path, const std::vector<PoseRecord>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : poses) {
    const auto& r = p.rotation;
    const auto& t = p.translation;
    out << r(0, 0) << ' ' << r(0, 1) << ' ' << r(0, 2) << ' ' << t(0) << ' ' << r(1, 0) << ' '
        << r(1, 1) << ' ' << r(1, 2) << ' ' << t(1) << ' ' << r(2, 0) << ' ' << r(2, 1) << ' '
        << r(2, 2) << ' ' << t(2) << '\n';
  }
}

// ---- PNM rasters ---------------------------------------------------------------
// Label maps are binary PGM (P5), one class id per pixel, 1- or 2-byte
// samples (big-endian when maxval > 255, per the format). RGB uses binary
// PPM (P6) with channels scaled to [0,1].

namespace detail {

inline int next_pnm_token(const std::vector<uint8_t>& bytes, size_t& pos) {
  // skip whitespace and '#' comments
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
    throw ParseError("malformed PNM header");
  }
  int value = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    ++pos;
  }
  return value;
}

}  // namespace detail

inline Eigen::MatrixXi load_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError(path.string() + ": not a binary PGM (P5) file");
  }
  size_t pos = 2;
  const int width = detail::next_pnm_token(bytes, pos);
  const int height = detail::next_pnm_token(bytes, pos);
  const int maxval = detail::next_pnm_token(bytes, pos);
  ++pos;  // single whitespace byte after maxval
  const int sample_bytes = maxval > 255 ? 2 : 1;
  const size_t expected = static_cast<size_t>(width) * height * sample_bytes;
  if (bytes.size() - pos < expected) {
    throw ParseError(path.string() + ": PGM payload truncated");
  }
  Eigen::MatrixXi img(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const size_t at = pos + (static_cast<size_t>(r) * width + c) * sample_bytes;
      img(r, c) = sample_bytes == 1 ? bytes[at] : (bytes[at] << 8 | bytes[at + 1]);
    }
  }
  return img;
}

inline void save_pgm(const std::filesystem::path& path, const Eigen::MatrixXi& img) {
  const int maxcoeff = img.size() > 0 ? img.maxCoeff() : 0;
  if (img.size() > 0 && (img.minCoeff() < 0 || maxcoeff > 65535)) {
    throw ConfigError("PGM samples must lie in [0, 65535]");
  }
  const int maxval = maxcoeff > 255 ? 65535 : 255;
  const int sample_bytes = maxval > 255 ? 2 : 1;
  std::ostringstream header;
  header << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
  const std::string head = header.str();
  std::vector<uint8_t> bytes(head.begin(), head.end());
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      const int v = img(r, c);
      if (sample_bytes == 2) bytes.push_back(static_cast<uint8_t>(v >> 8));
      bytes.push_back(static_cast<uint8_t>(v & 0xFF));
    }
  }
  detail::write_file_bytes(path, bytes);
}

inline std::array<Eigen::MatrixXd, 3> load_ppm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError(path.string() + ": not a binary PPM (P6) file");
  }
  size_t pos = 2;
  const int width = detail::next_pnm_token(bytes, pos);
  const int height = detail::next_pnm_token(bytes, pos);
  const int maxval = detail::next_pnm_token(bytes, pos);
  ++pos;
  if (maxval > 255) throw ParseError(path.string() + ": 2-byte PPM not supported");
  if (bytes.size() - pos < static_cast<size_t>(width) * height * 3) {
    throw ParseError(path.string() + ": PPM payload truncated");
  }
  std::array<Eigen::MatrixXd, 3> rgb;
  for (auto& ch : rgb) ch.resize(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const size_t at = pos + (static_cast<size_t>(r) * width + c) * 3;
      for (int ch = 0; ch < 3; ++ch) rgb[ch](r, c) = bytes[at + ch] / 255.0;
    }
  }
  return rgb;
}

inline void save_ppm(const std::filesystem::path& path,
                     const std::array<Eigen::MatrixXd, 3>& rgb) {
  const int height = static_cast<int>(rgb[0].rows());
  const int width = static_cast<int>(rgb[0].cols());
  std::ostringstream header;
  header << "P6\n" << width << ' ' << height << "\n255\n";
  const std::string head = header.str();
  std::vector<uint8_t> bytes(head.begin(), head.end());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(rgb[ch](r, c), 0.0, 1.0);
        bytes.push_back(static_cast<uint8_t>(std::lround(v * 255.0)));
      }
    }
  }
  detail::write_file_bytes(path, bytes);
}

inline SemanticImage load_semantic_image(const std::filesystem::path& label_path,
                                         SceneId scene_id = {},
                                         const std::filesystem::path& rgb_path = {}) {
  SemanticImage img;
  img.labels = load_pgm(label_path);
  img.height = static_cast<int>(img.labels.rows());
  img.width = static_cast<int>(img.labels.cols());
  img.scene_id = scene_id;
  if (!rgb_path.empty()) img.rgb = load_ppm(rgb_path);
  img.validate();
  return img;
}

// ---- dataset layout ------------------------------------------------------------
// root/poses/SS.txt
// root/sequences/SS/velodyne/FFFFFF.bin
// root/sequences/SS/labels/FFFFFF.label
// root/sequences/SS/semantic/FFFFFF.pgm      (label raster)
// root/sequences/SS/image_2/FFFFFF.ppm       (optional RGB)

struct DatasetLayout {
  std::filesystem::path root;

  static std::string seq_name(int seq) {
    std::ostringstream s;
    s << std::setw(2) << std::setfill('0') << seq;
    return s.str();
  }
  static std::string frame_name(int frame) {
    std::ostringstream s;
    s << std::setw(6) << std::setfill('0') << frame;
    return s.str();
  }

  std::filesystem::path poses_path(int seq) const {
    return root / "poses" / (seq_name(seq) + ".txt");
  }
  std::filesystem::path scan_path(SceneId id) const {
    return root / "sequences" / seq_name(id.sequence) / "velodyne" /
           (frame_name(id.frame) + ".bin");
  }
  std::filesystem::path label_path(SceneId id) const {
    return root / "sequences" / seq_name(id.sequence) / "labels" /
           (frame_name(id.frame) + ".label");
  }
  std::filesystem::path semantic_path(SceneId id) const {
    return root / "sequences" / seq_name(id.sequence) / "semantic" /
           (frame_name(id.frame) + ".pgm");
  }
  std::filesystem::path rgb_path(SceneId id) const {
    return root / "sequences" / seq_name(id.sequence) / "image_2" /
           (frame_name(id.frame) + ".ppm");
  }

  std::vector<int> sequences() const {
    std::vector<int> ids;
    const auto dir = root / "sequences";
    if (!std::filesystem::is_directory(dir)) {
      throw IoError("no sequences directory under " + root.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_directory()) ids.push_back(std::stoi(entry.path().filename().string()));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  LabeledPointCloud load_cloud(SceneId id) const {
    return load_velodyne_scan(scan_path(id), label_path(id), id);
  }
  SemanticImage load_image(SceneId id) const {
    const auto rgb = rgb_path(id);
    return load_semantic_image(semantic_path(id), id,
                               std::filesystem::exists(rgb) ? rgb : std::filesystem::path{});
  }
};

}  // namespace sgm
