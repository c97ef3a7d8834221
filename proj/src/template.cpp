#include "screloc/template.hpp"

namespace screloc {

Template make_template(std::uint32_t id, const Pose2D& pose, const PointCloud& cloud,
                       const DescriptorParams& params) {
  ExtractedDescriptor ex = extract_descriptor(cloud, params);
  Template t;
  t.id = id;
  t.x = static_cast<float>(pose.x);
  t.y = static_cast<float>(pose.y);
  t.pca_angle = static_cast<float>(ex.frame.angle);
  t.eigen_gap = static_cast<float>(ex.frame.eigen_gap);
  t.confident = ex.frame.confident;
  t.descriptor = std::move(ex.descriptor);
  t.cnz = compute_cnz(t.descriptor);
  return t;
}

Template make_query(const PointCloud& cloud, const DescriptorParams& params) {
  return make_template(0, Pose2D{}, cloud, params);
}

}  // namespace screloc
