#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/dataset.hpp"
#include "facade3d/geometry.hpp"

namespace facade3d {

struct SegmentRef {
  std::string pano_id;
  int plane_idx = 0;

  bool operator==(const SegmentRef& o) const {
    return pano_id == o.pano_id && plane_idx == o.plane_idx;
  }
  bool operator<(const SegmentRef& o) const {
    return pano_id != o.pano_id ? pano_id < o.pano_id : plane_idx < o.plane_idx;
  }
  std::string id() const { return pano_id + ":" + std::to_string(plane_idx); }
};

struct PlaneCluster {
  int cluster_id = 0;
  std::vector<SegmentRef> members;
  /// Representative: median member offset, normalized mean of member normals.
  Plane world_plane;
};

/// Custom plane metric: D = (1 - n1.n2) + 0.01 * |d1 - d2|
/// (orientation weight 1.0, offset weight 0.01 per meter).
double plane_distance(const Plane& p1, const Plane& p2);

/// False for horizontal planes (|n_z| > 0.9); ground and roof are not facades.
bool is_facade_candidate(const Plane& p);
/// Also rejects zero padding rows (raw normal magnitude < 1e-9).
bool is_facade_candidate(const PlaneRecord& p);

/// Groups plane segments across panoramas that describe the same physical
/// facade: candidate planes go to the world frame, pairwise distances use
/// plane_distance, and naive average-linkage agglomerative clustering merges
/// until the closest pair is >= threshold. Singleton clusters are kept.
/// Throws EmptyClusterSet when no candidate plane survives filtering.
std::vector<PlaneCluster> cluster_planes(const std::vector<PanoRecord>& panos,
                                         double threshold = 1e-5);

/// Debug report: cluster id -> member refs + representative plane.
nlohmann::json cluster_report(const std::vector<PlaneCluster>& clusters);
std::vector<PlaneCluster> clusters_from_report(const nlohmann::json& j);

}  // namespace facade3d
