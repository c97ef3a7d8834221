#include "screloc/library_store.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "screloc/errors.hpp"

namespace screloc {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'T', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* data, std::size_t len) {
    buf_.insert(buf_.end(), data, data + len);
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const std::uint8_t* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return size_ - offset_; }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (offset_ + n > size_)
      throw FormatError("truncated library: needed " + std::to_string(n) + " bytes at offset " +
                        std::to_string(offset_));
    const std::uint8_t* p = data_ + offset_;
    offset_ += n;
    return p;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t offset_ = 0;
};

std::uint32_t checksum(const std::uint8_t* data, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

}  // namespace

DescriptorParams TemplateLibrary::descriptor_params(double height_offset,
                                                    double confidence_ratio) const {
  DescriptorParams p;
  p.rows = rows;
  p.cols = cols;
  p.max_radius = max_radius;
  p.height_offset = height_offset;
  p.confidence_ratio = confidence_ratio;
  return p;
}

void TemplateLibrary::validate() const {
  if (rows < 1 || cols < 2) throw IntegrityError("library: bad descriptor shape");
  const std::size_t n = templates.size();
  const std::size_t cell_count = static_cast<std::size_t>(rows) * cols;
  for (std::size_t i = 0; i < n; ++i) {
    const Template& t = templates[i];
    if (t.id != i) throw IntegrityError("library: template ids must be dense indices");
    if (t.descriptor.rows != rows || t.descriptor.cols != cols ||
        t.descriptor.cells.size() != cell_count)
      throw IntegrityError("library: descriptor shape mismatch at template " + std::to_string(i));
    for (const float v : t.descriptor.cells)
      if (!(v >= 0.f))
        throw IntegrityError("library: negative descriptor cell at template " + std::to_string(i));
    if (t.cnz != compute_cnz(t.descriptor))
      throw IntegrityError("library: stored occupancy vector disagrees with the descriptor at template " +
                           std::to_string(i));
  }

  std::vector<bool> seen(n, false);
  for (const Cluster& c : clusters.clusters) {
    if (c.members.empty()) throw IntegrityError("library: empty cluster");
    bool rep_found = false;
    for (const std::uint32_t id : c.members) {
      if (id >= n) throw IntegrityError("library: cluster member id out of range");
      if (seen[id]) throw IntegrityError("library: template in more than one cluster");
      seen[id] = true;
      rep_found |= id == c.representative;
    }
    if (!rep_found) throw IntegrityError("library: representative outside its cluster");
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) throw IntegrityError("library: template " + std::to_string(i) + " unclustered");

  if (hash_families.size() != static_cast<std::size_t>(index_params.tables))
    throw IntegrityError("library: hash family count does not match table count");
  for (const HashFamily& f : hash_families) {
    if (f.dim != rows || f.bits != index_params.bits)
      throw IntegrityError("library: hash family shape mismatch");
    if (f.center.size() != static_cast<std::size_t>(rows) ||
        f.basis.size() != static_cast<std::size_t>(f.bits) * rows)
      throw IntegrityError("library: hash family storage mismatch");
    for (int b = 0; b < f.bits; ++b) {
      double norm = 0.0;
      for (int d = 0; d < rows; ++d) {
        const double v = f.basis[static_cast<std::size_t>(b) * rows + d];
        norm += v * v;
      }
      // bases are unit in double before the one-time f32 rounding
      if (std::abs(std::sqrt(norm) - 1.0) > 1e-6)
        throw IntegrityError("library: hash basis row is not unit length");
    }
  }
}

void save_library(const TemplateLibrary& lib, const std::string& path) {
  lib.validate();

  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(lib.rows));
  w.u32(static_cast<std::uint32_t>(lib.cols));
  w.f32(lib.max_radius);
  w.u32(static_cast<std::uint32_t>(lib.templates.size()));
  for (const Template& t : lib.templates) {
    w.u32(t.id);
    w.f32(t.x);
    w.f32(t.y);
    w.f32(t.pca_angle);
    w.f32(t.eigen_gap);
    w.u8(t.confident ? 1 : 0);
    for (const float v : t.descriptor.cells) w.f32(v);
    for (const float v : t.cnz) w.f32(v);
  }
  w.u32(static_cast<std::uint32_t>(lib.clusters.clusters.size()));
  for (const Cluster& c : lib.clusters.clusters) {
    w.u32(c.representative);
    w.u32(static_cast<std::uint32_t>(c.members.size()));
    for (const std::uint32_t id : c.members) w.u32(id);
  }
  w.u32(static_cast<std::uint32_t>(lib.index_params.bits));
  w.u32(static_cast<std::uint32_t>(lib.index_params.tables));
  w.u64(lib.index_params.seed);
  for (const HashFamily& f : lib.hash_families) {
    w.u8(static_cast<std::uint8_t>(f.kind));
    for (const float v : f.center) w.f32(v);
    for (const float v : f.basis) w.f32(v);
  }

  Writer trailer;
  trailer.u32(checksum(w.bytes().data(), w.bytes().size()));

  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp.string());
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
    out.write(reinterpret_cast<const char*>(trailer.bytes().data()),
              static_cast<std::streamsize>(trailer.bytes().size()));
    if (!out) throw ConfigError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

TemplateLibrary load_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  if (bytes.size() < 4) throw FormatError("truncated library: no checksum at offset 0");
  const std::size_t body = bytes.size() - 4;
  {
    Reader crc_reader(bytes.data() + body, 4);
    const std::uint32_t stored = crc_reader.u32();
    const std::uint32_t actual = checksum(bytes.data(), body);
    if (stored != actual)
      throw FormatError("checksum mismatch at offset " + std::to_string(body) + " (stored " +
                        std::to_string(stored) + ", computed " + std::to_string(actual) + ")");
  }

  Reader r(bytes.data(), body);
  char magic[4];
  for (int i = 0; i < 4; ++i) magic[i] = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic at offset 0 (not a template library)");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported version " + std::to_string(version) + " at offset 4");

  TemplateLibrary lib;
  lib.rows = static_cast<int>(r.u32());
  lib.cols = static_cast<int>(r.u32());
  lib.max_radius = r.f32();
  if (lib.rows < 1 || lib.rows > 4096 || lib.cols < 2 || lib.cols > 65536)
    throw FormatError("implausible descriptor shape at offset 8");

  const std::uint32_t n_templates = r.u32();
  const std::size_t cell_count = static_cast<std::size_t>(lib.rows) * lib.cols;
  lib.templates.reserve(n_templates);
  for (std::uint32_t i = 0; i < n_templates; ++i) {
    Template t;
    t.id = r.u32();
    t.x = r.f32();
    t.y = r.f32();
    t.pca_angle = r.f32();
    t.eigen_gap = r.f32();
    const std::uint8_t confident = r.u8();
    if (confident > 1)
      throw FormatError("confident flag out of range at offset " + std::to_string(r.offset() - 1));
    t.confident = confident == 1;
    t.descriptor.rows = lib.rows;
    t.descriptor.cols = lib.cols;
    t.descriptor.max_radius = lib.max_radius;
    t.descriptor.cells.resize(cell_count);
    for (std::size_t c = 0; c < cell_count; ++c) t.descriptor.cells[c] = r.f32();
    t.cnz.resize(lib.rows);
    for (int c = 0; c < lib.rows; ++c) t.cnz[c] = r.f32();
    lib.templates.push_back(std::move(t));
  }

  const std::uint32_t n_clusters = r.u32();
  lib.clusters.clusters.reserve(n_clusters);
  for (std::uint32_t i = 0; i < n_clusters; ++i) {
    Cluster c;
    c.representative = r.u32();
    const std::uint32_t n_members = r.u32();
    c.members.reserve(n_members);
    for (std::uint32_t j = 0; j < n_members; ++j) c.members.push_back(r.u32());
    lib.clusters.clusters.push_back(std::move(c));
  }

  lib.index_params.bits = static_cast<int>(r.u32());
  lib.index_params.tables = static_cast<int>(r.u32());
  lib.index_params.seed = r.u64();
  if (lib.index_params.bits < 1 || lib.index_params.bits > 64 || lib.index_params.tables < 1 ||
      lib.index_params.tables > 1024)
    throw FormatError("implausible index parameters at offset " + std::to_string(r.offset() - 16));
  lib.hash_families.reserve(lib.index_params.tables);
  for (int t = 0; t < lib.index_params.tables; ++t) {
    HashFamily f;
    const std::uint8_t kind = r.u8();
    if (kind > 1)
      throw FormatError("unknown hash family kind at offset " + std::to_string(r.offset() - 1));
    f.kind = static_cast<HashKind>(kind);
    f.dim = lib.rows;
    f.bits = lib.index_params.bits;
    f.center.resize(lib.rows);
    for (int d = 0; d < lib.rows; ++d) f.center[d] = r.f32();
    f.basis.resize(static_cast<std::size_t>(f.bits) * lib.rows);
    for (std::size_t d = 0; d < f.basis.size(); ++d) f.basis[d] = r.f32();
    lib.hash_families.push_back(std::move(f));
  }

  if (r.remaining() != 0)
    throw FormatError(std::to_string(r.remaining()) + " unexpected trailing bytes at offset " +
                      std::to_string(r.offset()));

  lib.validate();
  return lib;
}

}  // namespace screloc
