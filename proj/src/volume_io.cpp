#include "defreg/volume_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

namespace defreg {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

namespace {

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string fmt_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& magic, const std::string& dtype,
                const Geometry& g, const char* payload, std::size_t bytes) {
  std::ostringstream h;
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08" PRIx32, crc_of(payload, bytes));
  h << magic << '\n'
    << "dtype " << dtype << '\n'
    << "dims " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n'
    << "spacing " << fmt_real(g.spacing[0]) << ' ' << fmt_real(g.spacing[1]) << ' '
    << fmt_real(g.spacing[2]) << '\n'
    << "origin " << fmt_real(g.origin[0]) << ' ' << fmt_real(g.origin[1]) << ' '
    << fmt_real(g.origin[2]) << '\n'
    << "crc32 " << crc << '\n';
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  const std::string head = h.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload, static_cast<std::streamsize>(bytes));
  if (!out) throw Error("write failed: " + path.string());
}

struct Parsed {
  std::string magic;
  std::string dtype;
  Geometry geom;
  std::string payload;
};

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string("missing header line: ") + what);
  return line;
}

template <class... T>
void expect_fields(const std::string& line, const char* key, T&... out) {
  std::istringstream ls(line);
  std::string k;
  ls >> k;
  if (k != key) throw FormatError(std::string("expected '") + key + "' header line, got '" + line + "'");
  ((ls >> out), ...);
  std::string extra;
  if (ls.fail() || (ls >> extra)) throw FormatError(std::string("malformed '") + key + "' line");
}

Parsed parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  Parsed p;
  p.magic = next_line(in, "magic");
  if (p.magic != "DVOL1" && p.magic != "DVEC1") throw FormatError("unknown magic '" + p.magic + "'");
  expect_fields(next_line(in, "dtype"), "dtype", p.dtype);
  if (p.dtype != "f32" && p.dtype != "u16") throw FormatError("unknown dtype '" + p.dtype + "'");
  long long dims[3];
  expect_fields(next_line(in, "dims"), "dims", dims[0], dims[1], dims[2]);
  expect_fields(next_line(in, "spacing"), "spacing", p.geom.spacing[0], p.geom.spacing[1], p.geom.spacing[2]);
  expect_fields(next_line(in, "origin"), "origin", p.geom.origin[0], p.geom.origin[1], p.geom.origin[2]);
  std::string crc_hex;
  expect_fields(next_line(in, "crc32"), "crc32", crc_hex);
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0 || dims[a] > (1 << 20)) throw FormatError("dims out of range");
    p.geom.dims[a] = static_cast<int>(dims[a]);
  }
  try {
    p.geom.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  std::uint32_t crc = 0;
  try {
    std::size_t used = 0;
    crc = static_cast<std::uint32_t>(std::stoul(crc_hex, &used, 16));
    if (used != crc_hex.size()) throw FormatError("bad crc32 field");
  } catch (const std::logic_error&) {
    throw FormatError("bad crc32 field");
  }

  std::size_t elem = p.dtype == "f32" ? 4 : 2;
  if (p.magic == "DVEC1") {
    if (p.dtype != "f32") throw FormatError("DVEC1 requires dtype f32");
    elem = 12;
  }
  const std::size_t bytes = p.geom.voxel_count() * elem;
  p.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (p.payload.size() < bytes) throw FormatError("truncated payload");
  if (p.payload.size() > bytes) throw FormatError("trailing bytes after payload");
  if (crc_of(p.payload.data(), bytes) != crc) throw FormatError("checksum mismatch");
  return p;
}

template <class T>
Grid<T> unpack(const Parsed& p) {
  Grid<T> v(p.geom);
  std::memcpy(static_cast<void*>(v.voxels().data()), p.payload.data(), p.payload.size());
  return v;
}

}  // namespace

void write_volume(const ScalarVolume& v, const std::filesystem::path& path) {
  write_file(path, "DVOL1", "f32", v.geometry(), reinterpret_cast<const char*>(v.voxels().data()),
             v.size() * sizeof(float));
}

void write_volume(const LabelVolume& v, const std::filesystem::path& path) {
  write_file(path, "DVOL1", "u16", v.geometry(), reinterpret_cast<const char*>(v.voxels().data()),
             v.size() * sizeof(std::uint16_t));
}

void write_deformation(const DenseDeformation& d, const std::filesystem::path& path) {
  static_assert(sizeof(Vec3f) == 12);
  write_file(path, "DVEC1", "f32", d.geometry(), reinterpret_cast<const char*>(d.voxels().data()),
             d.size() * sizeof(Vec3f));
}

AnyVolume read_volume(const std::filesystem::path& path) {
  const Parsed p = parse(path);
  if (p.magic != "DVOL1") throw FormatError("expected DVOL1, got " + p.magic);
  if (p.dtype == "f32") return unpack<float>(p);
  return unpack<std::uint16_t>(p);
}

ScalarVolume read_scalar_volume(const std::filesystem::path& path) {
  auto v = read_volume(path);
  if (auto* s = std::get_if<ScalarVolume>(&v)) return std::move(*s);
  throw FormatError(path.string() + ": expected dtype f32");
}

LabelVolume read_label_volume(const std::filesystem::path& path) {
  auto v = read_volume(path);
  if (auto* l = std::get_if<LabelVolume>(&v)) return std::move(*l);
  throw FormatError(path.string() + ": expected dtype u16");
}

DenseDeformation read_deformation(const std::filesystem::path& path) {
  const Parsed p = parse(path);
  if (p.magic != "DVEC1") throw FormatError("expected DVEC1, got " + p.magic);
  return unpack<Vec3f>(p);
}

}  // namespace defreg
