#pragma once

#include <vector>

#include "screloc/geometry.hpp"

namespace screloc {

/// Binning and gating parameters for descriptor extraction.
struct DescriptorParams {
  int rows = 20;   // radial rings
  int cols = 60;   // angular sectors; must be even so a half turn is a whole
                   // number of columns
  double max_radius = 80.0;       // planar radius covered by the rings
  double height_offset = 0.5;     // added to sensor-frame z before clamping,
                                  // normally the sensor height above ground
  double confidence_ratio = 1.2;  // eigenvalue ratio gate for a usable axis

  void validate() const;  // throws ConfigError
};

/// Polar-grid height descriptor: rows x cols matrix of per-bin maximum
/// heights, row-major. Cells are nonnegative and exactly 0 for empty bins.
struct ScanContextDescriptor {
  int rows = 0;
  int cols = 0;
  float max_radius = 0.f;
  std::vector<float> cells;

  float& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
};

/// Principal-axis frame of the XY-projected cloud.
struct PCAFrame {
  double angle = 0.0;      // dominant eigenvector direction, sensor frame
  double eigen_gap = 1.0;  // lambda1/lambda2, +inf when lambda2 == 0
  bool confident = false;  // eigen_gap >= confidence ratio
};

/// Per-ring fraction of occupied sectors; rotation of the cloud about the
/// sensor axis permutes sectors within a ring, so this is exactly invariant.
using CnzVector = std::vector<float>;

/// Principal axis of the XY covariance. Needs >= 3 points
/// (DegenerateInputError otherwise). The returned angle is the canonical
/// representative in [-pi/2, pi/2); the half-turn ambiguity is resolved later
/// from descriptor cell mass (see extract_descriptor).
PCAFrame compute_pca_frame(const PointCloud& cloud, double confidence_ratio = 1.2);

/// Bins the cloud into the polar grid after rotating XY by -frame.angle.
/// Points with planar radius > max_radius are discarded; a cell is the
/// maximum of (z + height_offset) over its points, clamped at zero.
ScanContextDescriptor compute_scan_context(const PointCloud& cloud, const PCAFrame& frame,
                                           const DescriptorParams& params);

struct ExtractedDescriptor {
  ScanContextDescriptor descriptor;
  PCAFrame frame;  // angle already includes the half-turn correction
};

/// Full extraction: PCA frame, binning, then the half-turn disambiguation -
/// the orientation is flipped when the first half of the columns carries less
/// cell mass than the second half, so the heavier side always maps to
/// sectors [0, cols/2).
ExtractedDescriptor extract_descriptor(const PointCloud& cloud, const DescriptorParams& params);

CnzVector compute_cnz(const ScanContextDescriptor& desc);

/// Mean column-pair cosine over valid columns (both column norms non-zero);
/// 0 when no column is valid. Range [0, 1]; exactly 1 for identical
/// descriptors with at least one valid column. Throws std::invalid_argument
/// on dimension mismatch.
double similarity(const ScanContextDescriptor& x, const ScanContextDescriptor& y);

/// 1 - similarity; the two honor distance + similarity == 1 exactly.
double distance(const ScanContextDescriptor& x, const ScanContextDescriptor& y);

/// Cyclic column rotation: result(r, c) = d(r, (c + shift) mod cols).
/// Negative shifts wrap.
ScanContextDescriptor rotate_columns(const ScanContextDescriptor& d, int shift);

struct ShiftResult {
  double s_max = 0.0;
  int best_shift = 0;
};

/// Maximum similarity over candidate column shifts of the query. Equal
/// scores prefer the smaller circular shift magnitude, then the smaller
/// shift value. shifts must be non-empty with each value in [0, cols).
ShiftResult shifted_similarity(const ScanContextDescriptor& query,
                               const ScanContextDescriptor& target,
                               const std::vector<int>& shifts);

/// Candidate shifts for matching: when both frames are confident only a
/// +/-2 column window around 0 and around the half turn; otherwise every
/// column. Sorted ascending.
std::vector<int> shift_policy(bool query_confident, bool target_confident, int cols);
std::vector<int> full_shift_range(int cols);

// ---------------------------------------------------------------------------
// Repeated-evaluation fast path. MatchView is a column-contiguous copy with
// cached column norms; the kernels below produce bit-identical results to the
// plain entry points above, which are implemented on top of them.

struct MatchView {
  int rows = 0;
  int cols = 0;
  std::vector<float> col_major;  // cols x rows
  std::vector<double> norm_sq;   // per-column sum of squared cells

  MatchView() = default;
  explicit MatchView(const ScanContextDescriptor& d);
};

double similarity_at_shift(const MatchView& x, const MatchView& y, int shift);
ShiftResult shifted_similarity(const MatchView& x, const MatchView& y,
                               const std::vector<int>& shifts);

}  // namespace screloc
