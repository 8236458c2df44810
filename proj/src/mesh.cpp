#include "synthasm/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include <Eigen/Geometry>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

constexpr std::size_t kHeaderSize = 80;
constexpr std::size_t kRecordSize = 50;

std::uint32_t read_u32_le(const std::byte* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

float read_f32_le(const std::byte* p) { return std::bit_cast<float>(read_u32_le(p)); }

void write_u32_le(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xFF));
}

void write_f32_le(std::vector<std::byte>& out, float f) { write_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

// Adds one facet. A file normal is kept when it is already unit length,
// otherwise the geometric normal replaces it.
void add_facet(TriangleMesh& mesh, const Vec3& file_normal, const std::array<Vec3, 3>& corners, double scale) {
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (const auto& c : corners) mesh.vertices.push_back(c * scale);
  mesh.triangles.push_back({base, base + 1, base + 2});
  const double len = file_normal.norm();
  if (std::isfinite(len) && std::abs(len - 1.0) < 1e-3) {
    mesh.normals.push_back(file_normal / len);
  } else {
    mesh.normals.push_back(triangle_normal(mesh.vertices[base], mesh.vertices[base + 1], mesh.vertices[base + 2]));
  }
}

bool is_binary_layout(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderSize + 4) return false;
  const std::uint64_t count = read_u32_le(bytes.data() + kHeaderSize);
  return bytes.size() == kHeaderSize + 4 + count * kRecordSize;
}

bool looks_ascii(std::span<const std::byte> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos || !iequals(text.substr(start, 5), "solid")) return false;
  return text.find("facet") != std::string_view::npos || text.find("FACET") != std::string_view::npos;
}

TriangleMesh parse_binary(std::span<const std::byte> bytes, double scale) {
  if (bytes.size() < kHeaderSize + 4) {
    throw DataError("binary STL truncated: " + std::to_string(bytes.size()) + " bytes, header needs 84");
  }
  const std::uint64_t count = read_u32_le(bytes.data() + kHeaderSize);
  if (count == 0) throw DataError("STL declares zero triangles");
  const std::uint64_t needed = kHeaderSize + 4 + count * kRecordSize;
  if (bytes.size() < needed) {
    throw DataError("binary STL truncated: declares " + std::to_string(count) + " triangles (" +
                    std::to_string(needed) + " bytes) but has " + std::to_string(bytes.size()) + " bytes");
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(count * 3);
  mesh.triangles.reserve(count);
  mesh.normals.reserve(count);
  const std::byte* p = bytes.data() + kHeaderSize + 4;
  for (std::uint64_t t = 0; t < count; ++t, p += kRecordSize) {
    float f[12];
    for (int i = 0; i < 12; ++i) f[i] = read_f32_le(p + 4 * i);
    for (int i = 3; i < 12; ++i) {
      if (!std::isfinite(f[i])) throw DataError("binary STL triangle " + std::to_string(t) + " has a non-finite vertex");
    }
    add_facet(mesh, Vec3(f[0], f[1], f[2]),
              {Vec3(f[3], f[4], f[5]), Vec3(f[6], f[7], f[8]), Vec3(f[9], f[10], f[11])}, scale);
  }
  return mesh;
}

struct Token {
  std::string_view text;
  std::size_t line;
};

class AsciiParser {
 public:
  explicit AsciiParser(std::string_view text) {
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else {
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        tokens_.push_back({text.substr(start, i - start), line});
      }
    }
  }

  TriangleMesh parse(double scale) {
    TriangleMesh mesh;
    expect_keyword("solid");
    skip_rest_of_line();
    while (!at_end()) {
      const Token& tok = peek();
      if (iequals(tok.text, "facet")) {
        parse_facet(mesh, scale);
      } else if (iequals(tok.text, "endsolid")) {
        ++pos_;
        skip_rest_of_line();
        if (!at_end()) {
          expect_keyword("solid");
          skip_rest_of_line();
        }
      } else {
        fail(tok, "expected 'facet' or 'endsolid', found '" + std::string(tok.text) + "'");
      }
    }
    if (mesh.triangles.empty()) throw DataError("STL declares zero triangles");
    return mesh;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token& peek() const { return tokens_[pos_]; }

  [[noreturn]] void fail(const Token& at, const std::string& what) const {
    throw DataError("ASCII STL line " + std::to_string(at.line) + ": " + what);
  }

  [[noreturn]] void fail_eof(const std::string& what) const {
    const std::size_t line = tokens_.empty() ? 1 : tokens_.back().line;
    throw DataError("ASCII STL line " + std::to_string(line) + ": unexpected end of file, " + what);
  }

  void expect_keyword(std::string_view keyword) {
    if (at_end()) fail_eof("expected '" + std::string(keyword) + "'");
    const Token& tok = peek();
    if (!iequals(tok.text, keyword)) {
      fail(tok, "expected '" + std::string(keyword) + "', found '" + std::string(tok.text) + "'");
    }
    ++pos_;
  }

  double expect_number() {
    if (at_end()) fail_eof("expected a number");
    const Token& tok = peek();
    double value = 0.0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail(tok, "expected a number, found '" + std::string(tok.text) + "'");
    if (!std::isfinite(value)) fail(tok, "non-finite coordinate");
    ++pos_;
    return value;
  }

  Vec3 expect_vec3() {
    const double x = expect_number();
    const double y = expect_number();
    const double z = expect_number();
    return {x, y, z};
  }

  void skip_rest_of_line() {
    if (pos_ == 0) return;
    const std::size_t line = tokens_[pos_ - 1].line;
    while (!at_end() && peek().line == line) ++pos_;
  }

  void parse_facet(TriangleMesh& mesh, double scale) {
    expect_keyword("facet");
    expect_keyword("normal");
    const Vec3 normal = expect_vec3();
    expect_keyword("outer");
    expect_keyword("loop");
    std::array<Vec3, 3> corners;
    for (auto& c : corners) {
      expect_keyword("vertex");
      c = expect_vec3();
    }
    expect_keyword("endloop");
    expect_keyword("endfacet");
    add_facet(mesh, normal, corners, scale);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

double Aabb::intersection_volume(const Aabb& other) const {
  const Vec3 lo = min.cwiseMax(other.min);
  const Vec3 hi = max.cwiseMin(other.max);
  const Vec3 overlap = (hi - lo).cwiseMax(0.0);
  return overlap.x() * overlap.y() * overlap.z();
}

Pose Pose::inverse() const {
  const Mat3 r_inv = rotation_matrix(rotation).transpose();
  return {-(r_inv * translation), euler_from_matrix(r_inv)};
}

RigidTransform RigidTransform::from_pose(const Pose& pose) {
  return {rotation_matrix(pose.rotation), pose.translation};
}

Mat3 rotation_matrix(const Vec3& euler_xyz) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(euler_xyz.z(), Vec3::UnitZ()) * AngleAxisd(euler_xyz.y(), Vec3::UnitY()) *
          AngleAxisd(euler_xyz.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 euler_from_matrix(const Mat3& r) {
  // r = Rz(c) Ry(b) Rx(a): r(2,0) = -sin b, r(1,0) = sin c cos b, r(0,0) = cos c cos b.
  const double b = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  const double c = std::atan2(r(1, 0), r(0, 0));
  // Whatever c leaves over is an X rotation; near gimbal lock it absorbs the error in c.
  const Mat3 rx = (Eigen::AngleAxisd(b, Vec3::UnitY()).inverse() * Eigen::AngleAxisd(c, Vec3::UnitZ()).inverse())
                      .toRotationMatrix() *
                  r;
  return {std::atan2(rx(2, 1), rx(1, 1)), b, c};
}

TriangleMesh parse_stl(std::span<const std::byte> bytes, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("STL scale must be a positive finite number");
  }
  if (looks_ascii(bytes) && !is_binary_layout(bytes)) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return AsciiParser(text).parse(scale);
  }
  return parse_binary(bytes, scale);
}

TriangleMesh load_stl(const std::string& path, double scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open STL file '" + path + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_stl(std::as_bytes(std::span(raw)), scale);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::byte> write_binary_stl(const TriangleMesh& mesh) {
  std::vector<std::byte> out(kHeaderSize, std::byte{0});
  write_u32_le(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 n = t < mesh.normals.size() ? mesh.normals[t] : Vec3::Zero();
    for (int i = 0; i < 3; ++i) write_f32_le(out, static_cast<float>(n[i]));
    for (auto idx : mesh.triangles[t]) {
      for (int i = 0; i < 3; ++i) write_f32_le(out, static_cast<float>(mesh.vertices[idx][i]));
    }
    out.push_back(std::byte{0});
    out.push_back(std::byte{0});
  }
  return out;
}

TriangleMesh transform(const TriangleMesh& mesh, const RigidTransform& xf) {
  TriangleMesh out;
  out.triangles = mesh.triangles;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(xf.apply(v));
  out.normals.reserve(mesh.normals.size());
  for (const auto& n : mesh.normals) out.normals.push_back(xf.rotation * n);
  return out;
}

TriangleMesh transform(const TriangleMesh& mesh, const Pose& pose) {
  return transform(mesh, RigidTransform::from_pose(pose));
}

Aabb aabb(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw ValidationError("bounding box of an empty mesh");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) return Vec3::Zero();
  return n / len;
}

}  // namespace synthasm
