#include "screloc/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "screloc/errors.hpp"

namespace screloc {

void DescriptorParams::validate() const {
  if (rows < 1) throw ConfigError("descriptor: rows must be >= 1");
  if (cols < 2) throw ConfigError("descriptor: cols must be >= 2");
  if (cols % 2 != 0) throw ConfigError("descriptor: cols must be even");
  if (!(max_radius > 0.0)) throw ConfigError("descriptor: max_radius must be > 0");
  if (!(confidence_ratio >= 1.0)) throw ConfigError("descriptor: confidence_ratio must be >= 1");
}

PCAFrame compute_pca_frame(const PointCloud& cloud, double confidence_ratio) {
  if (cloud.size() < 3)
    throw DegenerateInputError("principal axis needs at least 3 points, got " +
                               std::to_string(cloud.size()));

  double mx = 0.0, my = 0.0;
  for (const Point3& p : cloud) {
    mx += p.x;
    my += p.y;
  }
  const double inv_n = 1.0 / static_cast<double>(cloud.size());
  mx *= inv_n;
  my *= inv_n;

  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
  for (const Point3& p : cloud) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    cxx += dx * dx;
    cxy += dx * dy;
    cyy += dy * dy;
  }
  cxx *= inv_n;
  cxy *= inv_n;
  cyy *= inv_n;

  // closed-form 2x2 symmetric eigen decomposition
  const double mean = 0.5 * (cxx + cyy);
  const double disc = std::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
  const double lambda1 = mean + disc;
  const double lambda2 = std::max(0.0, mean - disc);

  PCAFrame frame;
  frame.angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);  // (-pi/2, pi/2]
  if (frame.angle >= M_PI / 2.0) frame.angle -= M_PI;
  frame.eigen_gap =
      lambda2 > 0.0 ? lambda1 / lambda2 : std::numeric_limits<double>::infinity();
  frame.confident = frame.eigen_gap >= confidence_ratio;
  return frame;
}

ScanContextDescriptor compute_scan_context(const PointCloud& cloud, const PCAFrame& frame,
                                           const DescriptorParams& params) {
  params.validate();
  ScanContextDescriptor desc;
  desc.rows = params.rows;
  desc.cols = params.cols;
  desc.max_radius = static_cast<float>(params.max_radius);
  desc.cells.assign(static_cast<std::size_t>(params.rows) * params.cols, 0.f);

  const double two_pi = 2.0 * M_PI;
  for (const Point3& p : cloud) {
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    if (r > params.max_radius) continue;

    double phi = std::atan2(p.y, p.x) - frame.angle;  // aligned azimuth
    phi -= two_pi * std::floor(phi / two_pi);         // [0, 2*pi)
    int sector = static_cast<int>(phi / two_pi * params.cols);
    if (sector >= params.cols) sector = params.cols - 1;
    if (sector < 0) sector = 0;

    int ring = static_cast<int>(r / params.max_radius * params.rows);
    if (ring >= params.rows) ring = params.rows - 1;

    const double h = p.z + params.height_offset;
    if (h > 0.0) {
      float& cell = desc.at(ring, sector);
      cell = std::max(cell, static_cast<float>(h));
    }
  }
  return desc;
}

ExtractedDescriptor extract_descriptor(const PointCloud& cloud, const DescriptorParams& params) {
  ExtractedDescriptor out;
  out.frame = compute_pca_frame(cloud, params.confidence_ratio);
  out.descriptor = compute_scan_context(cloud, out.frame, params);

  // Half-turn disambiguation: keep the heavier column half in [0, cols/2).
  // Rotating the columns by cols/2 is exactly the descriptor of the frame
  // rotated by pi, so no re-binning is needed.
  double first = 0.0, second = 0.0;
  const int half = params.cols / 2;
  for (int r = 0; r < params.rows; ++r) {
    for (int c = 0; c < half; ++c) first += out.descriptor.at(r, c);
    for (int c = half; c < params.cols; ++c) second += out.descriptor.at(r, c);
  }
  if (first < second) {
    out.descriptor = rotate_columns(out.descriptor, half);
    out.frame.angle = normalize_angle(out.frame.angle + M_PI);
  }
  return out;
}

CnzVector compute_cnz(const ScanContextDescriptor& desc) {
  CnzVector cnz(desc.rows);
  for (int r = 0; r < desc.rows; ++r) {
    int nonzero = 0;
    for (int c = 0; c < desc.cols; ++c)
      if (desc.at(r, c) > 0.f) ++nonzero;
    cnz[r] = static_cast<float>(static_cast<double>(nonzero) / desc.cols);
  }
  return cnz;
}

MatchView::MatchView(const ScanContextDescriptor& d)
    : rows(d.rows), cols(d.cols), col_major(d.cells.size()), norm_sq(d.cols) {
  for (int c = 0; c < cols; ++c) {
    float* col = col_major.data() + static_cast<std::size_t>(c) * rows;
    double nsq = 0.0;
    for (int r = 0; r < rows; ++r) {
      const float v = d.at(r, c);
      col[r] = v;
      nsq += static_cast<double>(v) * static_cast<double>(v);
    }
    norm_sq[c] = nsq;
  }
}

double similarity_at_shift(const MatchView& x, const MatchView& y, int shift) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw std::invalid_argument("descriptor dimension mismatch");
  const int n = x.cols;
  const int m = x.rows;

  double sum = 0.0;
  int valid = 0;
  for (int c = 0; c < n; ++c) {
    int xc = c + shift;
    if (xc >= n) xc -= n;
    const double nx = x.norm_sq[xc];
    const double ny = y.norm_sq[c];
    if (nx > 0.0 && ny > 0.0) {
      const float* xa = x.col_major.data() + static_cast<std::size_t>(xc) * m;
      const float* ya = y.col_major.data() + static_cast<std::size_t>(c) * m;
      double dot = 0.0;
      for (int r = 0; r < m; ++r) dot += static_cast<double>(xa[r]) * static_cast<double>(ya[r]);
      double cs = dot / std::sqrt(nx * ny);
      if (cs > 1.0) cs = 1.0;
      sum += cs;
      ++valid;
    }
  }
  if (valid == 0) return 0.0;
  const double s = sum / valid;
  return s > 1.0 ? 1.0 : s;
}

namespace {

/// Circular magnitude of a column shift; used for tie-breaking.
int circular_magnitude(int shift, int cols) { return std::min(shift, cols - shift); }

}  // namespace

ShiftResult shifted_similarity(const MatchView& x, const MatchView& y,
                               const std::vector<int>& shifts) {
  if (shifts.empty()) throw std::invalid_argument("shift set must be non-empty");
  ShiftResult best{-1.0, 0};
  int best_mag = 0;
  for (const int s : shifts) {
    if (s < 0 || s >= x.cols) throw std::invalid_argument("shift out of range [0, cols)");
    const double sim = similarity_at_shift(x, y, s);
    const int mag = circular_magnitude(s, x.cols);
    if (sim > best.s_max ||
        (sim == best.s_max && (mag < best_mag || (mag == best_mag && s < best.best_shift)))) {
      best.s_max = sim;
      best.best_shift = s;
      best_mag = mag;
    }
  }
  return best;
}

double similarity(const ScanContextDescriptor& x, const ScanContextDescriptor& y) {
  return similarity_at_shift(MatchView(x), MatchView(y), 0);
}

double distance(const ScanContextDescriptor& x, const ScanContextDescriptor& y) {
  return 1.0 - similarity(x, y);
}

ScanContextDescriptor rotate_columns(const ScanContextDescriptor& d, int shift) {
  ScanContextDescriptor out;
  out.rows = d.rows;
  out.cols = d.cols;
  out.max_radius = d.max_radius;
  out.cells.resize(d.cells.size());
  const int n = d.cols;
  int s = shift % n;
  if (s < 0) s += n;
  for (int r = 0; r < d.rows; ++r)
    for (int c = 0; c < n; ++c) out.at(r, c) = d.at(r, (c + s) % n);
  return out;
}

ShiftResult shifted_similarity(const ScanContextDescriptor& query,
                               const ScanContextDescriptor& target,
                               const std::vector<int>& shifts) {
  return shifted_similarity(MatchView(query), MatchView(target), shifts);
}

std::vector<int> full_shift_range(int cols) {
  std::vector<int> shifts(cols);
  for (int i = 0; i < cols; ++i) shifts[i] = i;
  return shifts;
}

std::vector<int> shift_policy(bool query_confident, bool target_confident, int cols) {
  if (!(query_confident && target_confident)) return full_shift_range(cols);
  // +/-2 columns around identity and around the half turn
  const int half = cols / 2;
  std::vector<int> shifts;
  for (int d = -2; d <= 2; ++d) {
    shifts.push_back(((d % cols) + cols) % cols);
    shifts.push_back(((half + d) % cols + cols) % cols);
  }
  std::sort(shifts.begin(), shifts.end());
  shifts.erase(std::unique(shifts.begin(), shifts.end()), shifts.end());
  return shifts;
}

}  // namespace screloc
