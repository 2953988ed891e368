#include "facade3d/plane_clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

double plane_distance(const Plane& p1, const Plane& p2) {
  const double cosine = p1.normal.dot(p2.normal.vec());
  return (1.0 - cosine) + 0.01 * std::abs(p1.d - p2.d);
}

bool is_facade_candidate(const Plane& p) { return std::abs(p.normal.z()) <= 0.9; }

bool is_facade_candidate(const PlaneRecord& p) {
  if (p.is_zero()) return false;
  return is_facade_candidate(p.to_plane());
}

namespace {

struct Candidate {
  SegmentRef ref;
  Plane world;
};

/// Average-linkage agglomerative clustering with a distance cutoff, exact
/// via running cross-cluster distance sums (Lance-Williams update).
std::vector<std::vector<int>> average_linkage(const std::vector<Candidate>& cand,
                                              double threshold) {
  const int n = static_cast<int>(cand.size());
  std::vector<std::vector<int>> members(n);
  std::vector<bool> active(n, true);
  for (int i = 0; i < n; ++i) members[i] = {i};

  // sum[i][j] = total pairwise distance between members of clusters i and j.
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      sum[i][j] = sum[j][i] = plane_distance(cand[i].world, cand[j].world);
    }
  }

  while (true) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double avg = sum[i][j] / (static_cast<double>(members[i].size()) *
                                        static_cast<double>(members[j].size()));
        if (avg < best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best >= threshold) break;

    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    active[bj] = false;
    for (int l = 0; l < n; ++l) {
      if (l == bi || l == bj) continue;
      sum[bi][l] += sum[bj][l];
      sum[l][bi] = sum[bi][l];
    }
  }

  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    if (active[i]) out.push_back(std::move(members[i]));
  }
  return out;
}

Plane representative_plane(const std::vector<Candidate>& cand,
                           const std::vector<int>& member_idx) {
  const Plane& first = cand[member_idx.front()].world;
  Vec3 normal_sum;
  std::vector<double> offsets;
  offsets.reserve(member_idx.size());
  for (int idx : member_idx) {
    Plane p = cand[idx].world;
    if (p.normal.dot(first.normal.vec()) < 0.0) {
      p = Plane(-p.normal, -p.d);  // same plane, flipped orientation
    }
    normal_sum += p.normal.vec();
    offsets.push_back(p.d);
  }
  return Plane(UnitVec3::normalized(normal_sum), median(std::move(offsets)));
}

}  // namespace

std::vector<PlaneCluster> cluster_planes(const std::vector<PanoRecord>& panos,
                                         double threshold) {
  std::vector<Candidate> cand;
  for (const PanoRecord& pano : panos) {
    for (std::size_t i = 0; i < pano.planes.size(); ++i) {
      const PlaneRecord& rec = pano.planes[i];
      if (!is_facade_candidate(rec)) continue;
      Candidate c;
      c.ref = SegmentRef{pano.pano_id, static_cast<int>(i)};
      c.world = transform_plane(rec.to_plane(), pano.transform);
      cand.push_back(std::move(c));
    }
  }
  if (cand.empty()) {
    throw EmptyClusterSet("no facade-candidate planes after filtering");
  }

  // Canonical processing order makes the result invariant to pano order.
  std::sort(cand.begin(), cand.end(),
            [](const Candidate& a, const Candidate& b) { return a.ref < b.ref; });

  std::vector<std::vector<int>> groups = average_linkage(cand, threshold);
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(),
            [&](const std::vector<int>& a, const std::vector<int>& b) {
              return cand[a.front()].ref < cand[b.front()].ref;
            });

  std::vector<PlaneCluster> clusters;
  clusters.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    PlaneCluster cl;
    cl.cluster_id = static_cast<int>(g);
    for (int idx : groups[g]) cl.members.push_back(cand[idx].ref);
    cl.world_plane = representative_plane(cand, groups[g]);
    clusters.push_back(std::move(cl));
  }
  return clusters;
}

nlohmann::json cluster_report(const std::vector<PlaneCluster>& clusters) {
  Json out;
  out["clusters"] = Json::array();
  for (const PlaneCluster& cl : clusters) {
    Json members = Json::array();
    for (const SegmentRef& ref : cl.members) {
      members.push_back(Json{{"pano_id", ref.pano_id}, {"plane_idx", ref.plane_idx}});
    }
    out["clusters"].push_back(Json{{"cluster_id", cl.cluster_id},
                                   {"world_plane", cl.world_plane},
                                   {"members", members}});
  }
  return out;
}

std::vector<PlaneCluster> clusters_from_report(const nlohmann::json& j) {
  std::vector<PlaneCluster> clusters;
  for (const Json& cj : require_field(j, "clusters", "cluster report")) {
    PlaneCluster cl;
    cl.cluster_id = require_field(cj, "cluster_id", "cluster").get<int>();
    cl.world_plane = require_field(cj, "world_plane", "cluster").get<Plane>();
    for (const Json& mj : require_field(cj, "members", "cluster")) {
      cl.members.push_back(SegmentRef{
          require_field(mj, "pano_id", "cluster member").get<std::string>(),
          require_field(mj, "plane_idx", "cluster member").get<int>()});
    }
    clusters.push_back(std::move(cl));
  }
  return clusters;
}

}  // namespace facade3d
