#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/geometry.hpp"
#include "facade3d/ortho.hpp"

namespace facade3d {

/// Similarity without rotation: maps source pixel (x, y) to reference pixel
/// (scale*x + tx, scale*y + ty). Ortho views of one plane cluster share
/// in-plane axes by construction, so rotation is structurally zero.
struct Alignment2D {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  Vec2 apply(const Vec2& src) const {
    return {scale * src.x + tx, scale * src.y + ty};
  }
  Vec2 invert(const Vec2& ref) const {
    return {(ref.x - tx) / scale, (ref.y - ty) / scale};
  }
};

struct Correspondence {
  Vec2 src;
  Vec2 ref;
  double score = 0.0;  // in [0, 1]
};

struct MatchOptions {
  int max_features = 500;
  int patch_radius = 4;        // descriptor patch = (2r+1)^2 grayscale
  int nms_radius = 4;
  double response_rel_threshold = 0.01;
  double ratio = 0.75;         // nearest/second-nearest distance ratio gate
};

/// Corner-like features (minimum-eigenvalue of the local gradient structure
/// tensor) with mean-free normalized patch descriptors; matches pass the
/// ratio test and a symmetric cross-check. May return an empty list.
std::vector<Correspondence> detect_and_match(const OrthoImage& ref,
                                             const OrthoImage& src,
                                             const MatchOptions& opts = {});

struct AlignRansacOptions {
  int iterations = 500;
  double inlier_px = 2.0;
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 0;
};

struct AlignmentEstimate {
  Alignment2D transform;
  double inlier_ratio = 0.0;
  int num_inliers = 0;
};

/// RANSAC over (scale, tx, ty), minimal sample of 2 correspondences, final
/// least-squares refit on the inliers. Throws InsufficientMatches (< 4
/// correspondences) and AlignmentFailed (best inlier ratio < 0.5).
AlignmentEstimate estimate_alignment(const std::vector<Correspondence>& corrs,
                                     const AlignRansacOptions& opts = {});

struct AlignGroupOptions {
  MatchOptions match;
  AlignRansacOptions ransac;
  int num_threads = 0;
};

struct AlignedGroup {
  std::vector<OrthoImage> images;
  nlohmann::json report;  // per source: transform, inlier ratio, status
};

/// Registers every image onto the one with the largest foreground area (star
/// topology) and resamples it into the reference grid. Failed alignments are
/// dropped and recorded in the report; background alpha never turns into
/// foreground during resampling.
AlignedGroup align_group(const std::vector<OrthoImage>& images,
                         const AlignGroupOptions& opts = {});

}  // namespace facade3d
