#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "screloc/clustering.hpp"
#include "screloc/index.hpp"

namespace screloc {

/// Build metadata carried in memory. The serialized container intentionally
/// does not include it, so it is zero after a load.
struct Provenance {
  std::uint64_t world_hash = 0;  // FNV-1a of the world file text
  double spacing = 0.0;          // sampling grid spacing, meters
};

/// The complete persistent state of one map: templates, their clustering,
/// and the hash families of the candidate index. Template ids are dense
/// indices (templates[i].id == i).
struct TemplateLibrary {
  int rows = 20;
  int cols = 60;
  float max_radius = 80.f;
  std::vector<Template> templates;
  ClusterSet clusters;
  IndexParams index_params;
  std::vector<HashFamily> hash_families;
  Provenance provenance;

  /// Checks every stored invariant (partitioning, derived vectors, family
  /// shapes); throws IntegrityError on the first violation.
  void validate() const;

  /// Descriptor parameters a query scan must be extracted with to be
  /// comparable against this library.
  DescriptorParams descriptor_params(double height_offset = 0.5,
                                     double confidence_ratio = 1.2) const;
};

// Binary container (.sctl), little-endian throughout:
//   magic "SCTL", version u32 (= 1)
//   rows u32, cols u32, max_radius f32, template count u32
//   per template: id u32, x f32, y f32, pca_angle f32, eigen_gap f32,
//                 confident u8, descriptor rows*cols f32 row-major,
//                 cnz rows f32
//   cluster count u32
//   per cluster: representative u32, member count u32, member ids u32[]
//   index params: bits u32, tables u32, seed u64
//   per table: kind u8, center rows f32, basis bits*rows f32
//   crc32 u32 over all preceding bytes
//
// Saves are atomic (write to a temporary, then rename) and contain no
// timestamps, so saving the same library twice produces identical bytes.

void save_library(const TemplateLibrary& lib, const std::string& path);

/// Verifies the checksum, parses, validates invariants, and recomputes the
/// derived structures. FormatError messages name the byte offset at which
/// reading failed.
TemplateLibrary load_library(const std::string& path);

}  // namespace screloc
