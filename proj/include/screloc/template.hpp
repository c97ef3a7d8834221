#pragma once

#include <cstdint>

#include "screloc/descriptor.hpp"

namespace screloc {

/// One library entry: a descriptor anchored at its collection position.
/// Scalar fields are stored at single precision to match the on-disk record,
/// so a round trip through the store is lossless.
struct Template {
  std::uint32_t id = 0;
  float x = 0.f;  // map-frame collection position
  float y = 0.f;
  float pca_angle = 0.f;   // alignment angle baked into the descriptor
  float eigen_gap = 1.f;   // +inf when the minor eigenvalue vanished
  bool confident = false;  // principal axis usable for narrow shift search
  ScanContextDescriptor descriptor;
  CnzVector cnz;
};

/// Extracts a template from a sensor-frame cloud collected at pose.
Template make_template(std::uint32_t id, const Pose2D& pose, const PointCloud& cloud,
                       const DescriptorParams& params);

/// Same extraction for a query scan; the position fields stay zero.
Template make_query(const PointCloud& cloud, const DescriptorParams& params);

}  // namespace screloc
