#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "screloc/clustering.hpp"
#include "screloc/errors.hpp"
#include "screloc/index.hpp"
#include "screloc/library_store.hpp"
#include "screloc/rng.hpp"
#include "test_util.hpp"

using namespace screloc;
using namespace screloc::testutil;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

/// Recomputes the trailing checksum so a deliberate corruption reaches the
/// parser instead of tripping the integrity gate.
void fix_checksum(std::vector<std::uint8_t>& bytes) {
  REQUIRE(bytes.size() >= 4);
  const std::size_t body = bytes.size() - 4;
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) bytes[body + i] = static_cast<std::uint8_t>(crc >> (8 * i));
}

/// Small but fully populated library assembled through the real pipeline.
TemplateLibrary sample_library(std::uint64_t seed = 101, int n = 24) {
  std::mt19937_64 rng(seed);
  TemplateLibrary lib;
  lib.rows = 10;
  lib.cols = 24;
  lib.max_radius = 30.f;
  for (int i = 0; i < n; ++i)
    lib.templates.push_back(random_template(rng, static_cast<std::uint32_t>(i),
                                            uniform_range(rng, 0, 8), uniform_range(rng, 0, 8),
                                            uniform_unit(rng) < 0.7, lib.rows, lib.cols));

  NeighborGraph graph = build_neighbor_graph(lib.templates, 5);
  SparseDistances distances = sparse_descriptor_distances(lib.templates, graph);
  lib.clusters = agglomerate(distances, Linkage::Max, 0.75);
  select_representatives(lib.clusters, lib.templates);

  std::vector<std::vector<float>> rep_cnz;
  std::vector<std::uint32_t> rep_ids;
  for (const Cluster& c : lib.clusters.clusters) {
    rep_cnz.push_back(lib.templates[c.representative].cnz);
    rep_ids.push_back(c.representative);
  }
  lib.index_params.bits = 6;
  lib.index_params.tables = 3;
  lib.index_params.seed = 99;
  lib.hash_families = make_hash_families(rep_cnz, lib.rows, lib.index_params);
  lib.provenance.world_hash = 0xDEADBEEFu;
  lib.provenance.spacing = 0.25;
  return lib;
}

void expect_equal(const TemplateLibrary& a, const TemplateLibrary& b) {
  CHECK(a.rows == b.rows);
  CHECK(a.cols == b.cols);
  CHECK(a.max_radius == b.max_radius);
  REQUIRE(a.templates.size() == b.templates.size());
  for (std::size_t i = 0; i < a.templates.size(); ++i) {
    const Template& x = a.templates[i];
    const Template& y = b.templates[i];
    CHECK(x.id == y.id);
    CHECK(x.x == y.x);
    CHECK(x.y == y.y);
    CHECK(x.pca_angle == y.pca_angle);
    CHECK(x.eigen_gap == y.eigen_gap);
    CHECK(x.confident == y.confident);
    CHECK(x.descriptor.cells == y.descriptor.cells);
    CHECK(x.cnz == y.cnz);
  }
  REQUIRE(a.clusters.clusters.size() == b.clusters.clusters.size());
  for (std::size_t i = 0; i < a.clusters.clusters.size(); ++i) {
    CHECK(a.clusters.clusters[i].members == b.clusters.clusters[i].members);
    CHECK(a.clusters.clusters[i].representative == b.clusters.clusters[i].representative);
  }
  CHECK(a.index_params.bits == b.index_params.bits);
  CHECK(a.index_params.tables == b.index_params.tables);
  CHECK(a.index_params.seed == b.index_params.seed);
  REQUIRE(a.hash_families.size() == b.hash_families.size());
  for (std::size_t t = 0; t < a.hash_families.size(); ++t) {
    CHECK(a.hash_families[t].kind == b.hash_families[t].kind);
    CHECK(a.hash_families[t].dim == b.hash_families[t].dim);
    CHECK(a.hash_families[t].bits == b.hash_families[t].bits);
    CHECK(a.hash_families[t].center == b.hash_families[t].center);
    CHECK(a.hash_families[t].basis == b.hash_families[t].basis);
  }
}

struct TempGuard {
  std::filesystem::path path;
  explicit TempGuard(const std::string& name) : path(temp_file(name)) {
    std::filesystem::remove(path);
  }
  ~TempGuard() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("save and load round trip every stored field") {
  TempGuard file("screloc_store_roundtrip.sctl");
  TemplateLibrary lib = sample_library();
  save_library(lib, file.path.string());
  TemplateLibrary loaded = load_library(file.path.string());
  expect_equal(lib, loaded);
  CHECK_NOTHROW(loaded.validate());
  // build metadata lives in memory only
  CHECK(loaded.provenance.world_hash == 0);
  CHECK(loaded.provenance.spacing == 0.0);
}

TEST_CASE("repeated saves are byte identical") {
  TempGuard a("screloc_store_a.sctl");
  TempGuard b("screloc_store_b.sctl");
  TemplateLibrary lib = sample_library();
  save_library(lib, a.path.string());
  save_library(lib, b.path.string());
  CHECK(read_bytes(a.path) == read_bytes(b.path));

  // and a load-save cycle reproduces the original file exactly
  TempGuard c("screloc_store_c.sctl");
  save_library(load_library(a.path.string()), c.path.string());
  CHECK(read_bytes(a.path) == read_bytes(c.path));

  // no leftover temporary from the atomic write
  CHECK_FALSE(std::filesystem::exists(a.path.string() + ".tmp"));
}

TEST_CASE("missing file is a configuration error") {
  CHECK_THROWS_AS(load_library(temp_file("screloc_store_missing.sctl").string()), ConfigError);
}

TEST_CASE("truncation is reported with the failing offset") {
  TempGuard file("screloc_store_trunc.sctl");
  save_library(sample_library(), file.path.string());
  const auto full = read_bytes(file.path);

  for (const std::size_t keep :
       {std::size_t{0}, std::size_t{3}, std::size_t{10}, std::size_t{50}, full.size() / 2,
        full.size() - 5}) {
    std::vector<std::uint8_t> cut(full.begin(), full.begin() + keep);
    if (keep >= 4) fix_checksum(cut);  // isolate the truncation from the checksum
    write_bytes(file.path, cut);
    try {
      load_library(file.path.string());
      FAIL("expected a format error for a file cut at " << keep << " bytes");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
  }
}

TEST_CASE("wrong magic is rejected") {
  TempGuard file("screloc_store_magic.sctl");
  save_library(sample_library(), file.path.string());
  auto bytes = read_bytes(file.path);
  bytes[0] = 'X';
  fix_checksum(bytes);
  write_bytes(file.path, bytes);
  CHECK_THROWS_WITH_AS(load_library(file.path.string()),
                       doctest::Contains("bad magic"), FormatError);
}

TEST_CASE("unsupported version is rejected") {
  TempGuard file("screloc_store_version.sctl");
  save_library(sample_library(), file.path.string());
  auto bytes = read_bytes(file.path);
  bytes[4] = 2;  // version lives right after the magic
  fix_checksum(bytes);
  write_bytes(file.path, bytes);
  CHECK_THROWS_WITH_AS(load_library(file.path.string()),
                       doctest::Contains("unsupported version"), FormatError);
}

TEST_CASE("corrupted payload fails the checksum") {
  TempGuard file("screloc_store_crc.sctl");
  save_library(sample_library(), file.path.string());
  auto bytes = read_bytes(file.path);
  bytes[bytes.size() / 2] ^= 0x40;
  write_bytes(file.path, bytes);
  CHECK_THROWS_WITH_AS(load_library(file.path.string()),
                       doctest::Contains("checksum mismatch"), FormatError);
}

TEST_CASE("trailing garbage is rejected") {
  TempGuard file("screloc_store_trailing.sctl");
  save_library(sample_library(), file.path.string());
  auto bytes = read_bytes(file.path);
  // splice junk between the payload and the checksum, then re-sign
  std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  bytes.insert(bytes.end() - 4, junk.begin(), junk.end());
  fix_checksum(bytes);
  write_bytes(file.path, bytes);
  CHECK_THROWS_WITH_AS(load_library(file.path.string()),
                       doctest::Contains("trailing bytes"), FormatError);
}

TEST_CASE("semantic corruption that passes the checksum still fails validation") {
  TempGuard file("screloc_store_semantic.sctl");
  TemplateLibrary lib = sample_library();
  save_library(lib, file.path.string());
  auto bytes = read_bytes(file.path);

  // first template's first occupancy entry sits right after its descriptor
  const std::size_t header = 4 + 4 + 4 + 4 + 4 + 4;  // magic..template count
  const std::size_t record = 4 + 4 + 4 + 4 + 4 + 1;  // id..confident flag
  const std::size_t cells = static_cast<std::size_t>(lib.rows) * lib.cols * 4;
  const std::size_t cnz_at = header + record + cells;
  float wrong = 0.123f;
  std::memcpy(bytes.data() + cnz_at, &wrong, 4);
  fix_checksum(bytes);
  write_bytes(file.path, bytes);
  CHECK_THROWS_WITH_AS(load_library(file.path.string()),
                       doctest::Contains("occupancy"), IntegrityError);
}

TEST_CASE("saving an invalid library never touches the target file") {
  TempGuard file("screloc_store_atomic.sctl");
  TemplateLibrary good = sample_library();
  save_library(good, file.path.string());
  const auto before = read_bytes(file.path);

  TemplateLibrary bad = sample_library();
  bad.templates[3].cnz[0] += 0.5f;  // derived vector out of sync
  CHECK_THROWS_AS(save_library(bad, file.path.string()), IntegrityError);
  CHECK(read_bytes(file.path) == before);  // old contents intact
}

TEST_CASE("validation catches structural damage") {
  TemplateLibrary lib = sample_library();
  CHECK_NOTHROW(lib.validate());

  SUBCASE("non-dense template ids") {
    lib.templates[5].id = 99;
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("descriptor shape mismatch") {
    lib.templates[0].descriptor.cells.pop_back();
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("negative descriptor cell") {
    lib.templates[0].descriptor.cells[7] = -0.25f;
    lib.templates[0].cnz = compute_cnz(lib.templates[0].descriptor);
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("member id out of range") {
    lib.clusters.clusters[0].members.push_back(1000);
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("template in two clusters") {
    REQUIRE(lib.clusters.clusters.size() >= 2);
    lib.clusters.clusters[1].members.push_back(lib.clusters.clusters[0].members[0]);
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("representative outside the cluster") {
    REQUIRE(lib.clusters.clusters.size() >= 2);
    lib.clusters.clusters[0].representative = lib.clusters.clusters[1].members[0];
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("missing template") {
    REQUIRE(lib.clusters.clusters.back().members.size() >= 1);
    lib.clusters.clusters.back().members.pop_back();
    if (lib.clusters.clusters.back().members.empty()) lib.clusters.clusters.pop_back();
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("family count disagrees with the table count") {
    lib.hash_families.pop_back();
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
  SUBCASE("non-unit basis row") {
    lib.hash_families[0].basis[0] += 0.5f;
    CHECK_THROWS_AS(lib.validate(), IntegrityError);
  }
}
