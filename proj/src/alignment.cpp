#include "facade3d/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "facade3d/util.hpp"

namespace facade3d {

namespace {

struct Feature {
  double x = 0.0, y = 0.0;
  std::vector<float> desc;
};

/// Shi-Tomasi style corners: minimum eigenvalue of the 5x5 structure tensor,
/// greedy non-max suppression, parabolic sub-pixel refinement along x and y.
std::vector<Feature> detect_features(const ImageRGBA& img,
                                     const MatchOptions& opts) {
  const int w = img.width();
  const int h = img.height();
  const int pr = opts.patch_radius;
  std::vector<Feature> features;
  if (w < 2 * pr + 3 || h < 2 * pr + 3) return features;

  const std::vector<float> gray = to_gray(img);
  auto g = [&](int x, int y) -> float {
    return gray[static_cast<std::size_t>(y) * w + x];
  };

  std::vector<float> gx(gray.size(), 0.0f), gy(gray.size(), 0.0f);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = 0.5f * (g(x + 1, y) - g(x - 1, y));
      gy[i] = 0.5f * (g(x, y + 1) - g(x, y - 1));
    }
  }

  const int win = 2;  // 5x5 structure tensor window
  std::vector<float> response(gray.size(), 0.0f);
  float max_response = 0.0f;
  const int border = std::max(win + 1, pr + 1);
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dy = -win; dy <= win; ++dy) {
        for (int dx = -win; dx <= win; ++dx) {
          const std::size_t i = static_cast<std::size_t>(y + dy) * w + (x + dx);
          sxx += gx[i] * gx[i];
          sxy += gx[i] * gy[i];
          syy += gy[i] * gy[i];
        }
      }
      const double tr = sxx + syy;
      const double det = sxx * syy - sxy * sxy;
      const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
      const float lambda_min = static_cast<float>(tr / 2.0 - disc);
      response[static_cast<std::size_t>(y) * w + x] = lambda_min;
      max_response = std::max(max_response, lambda_min);
    }
  }
  if (max_response <= 0.0f) return features;

  const float thr = static_cast<float>(opts.response_rel_threshold) * max_response;
  struct Cand {
    int x, y;
    float r;
  };
  std::vector<Cand> cands;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const float r = response[static_cast<std::size_t>(y) * w + x];
      if (r > thr) cands.push_back(Cand{x, y, r});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.r != b.r) return a.r > b.r;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<Cand> picked;
  const int nms2 = opts.nms_radius * opts.nms_radius;
  for (const Cand& c : cands) {
    bool ok = true;
    for (const Cand& p : picked) {
      const int dx = c.x - p.x, dy = c.y - p.y;
      if (dx * dx + dy * dy <= nms2) {
        ok = false;
        break;
      }
    }
    if (ok) {
      picked.push_back(c);
      if (static_cast<int>(picked.size()) >= opts.max_features) break;
    }
  }

  auto resp = [&](int x, int y) -> double {
    return response[static_cast<std::size_t>(y) * w + x];
  };
  for (const Cand& c : picked) {
    Feature f;
    // Parabolic sub-pixel refinement; offset clamps to half a pixel.
    const double dx_den = resp(c.x - 1, c.y) - 2.0 * resp(c.x, c.y) + resp(c.x + 1, c.y);
    const double dy_den = resp(c.x, c.y - 1) - 2.0 * resp(c.x, c.y) + resp(c.x, c.y + 1);
    double ox = 0.0, oy = 0.0;
    if (std::abs(dx_den) > 1e-12) {
      ox = 0.5 * (resp(c.x - 1, c.y) - resp(c.x + 1, c.y)) / dx_den;
    }
    if (std::abs(dy_den) > 1e-12) {
      oy = 0.5 * (resp(c.x, c.y - 1) - resp(c.x, c.y + 1)) / dy_den;
    }
    f.x = c.x + std::clamp(ox, -0.5, 0.5) + 0.5;
    f.y = c.y + std::clamp(oy, -0.5, 0.5) + 0.5;

    f.desc.reserve((2 * pr + 1) * (2 * pr + 1));
    double mean = 0.0;
    for (int dy = -pr; dy <= pr; ++dy) {
      for (int dx = -pr; dx <= pr; ++dx) {
        const float v = g(c.x + dx, c.y + dy);
        f.desc.push_back(v);
        mean += v;
      }
    }
    mean /= static_cast<double>(f.desc.size());
    double norm2 = 0.0;
    for (float& v : f.desc) {
      v -= static_cast<float>(mean);
      norm2 += static_cast<double>(v) * v;
    }
    if (norm2 < 1e-6) continue;  // textureless patch
    const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
    for (float& v : f.desc) v *= inv;
    features.push_back(std::move(f));
  }
  return features;
}

double desc_dist2(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

/// For each query feature: (best index, best dist2, second dist2).
struct NearestPair {
  int best = -1;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
};

std::vector<NearestPair> nearest_neighbors(const std::vector<Feature>& from,
                                           const std::vector<Feature>& to) {
  std::vector<NearestPair> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    NearestPair np;
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double d = desc_dist2(from[i].desc, to[j].desc);
      if (d < np.d1) {
        np.d2 = np.d1;
        np.d1 = d;
        np.best = static_cast<int>(j);
      } else if (d < np.d2) {
        np.d2 = d;
      }
    }
    out[i] = np;
  }
  return out;
}

}  // namespace

std::vector<Correspondence> detect_and_match(const OrthoImage& ref,
                                             const OrthoImage& src,
                                             const MatchOptions& opts) {
  const std::vector<Feature> ref_feats = detect_features(ref.image, opts);
  const std::vector<Feature> src_feats = detect_features(src.image, opts);
  std::vector<Correspondence> corrs;
  if (ref_feats.empty() || src_feats.empty()) return corrs;

  const std::vector<NearestPair> s2r = nearest_neighbors(src_feats, ref_feats);
  const std::vector<NearestPair> r2s = nearest_neighbors(ref_feats, src_feats);

  // Distances are squared, so the ratio test compares against ratio^2.
  const double ratio2 = opts.ratio * opts.ratio;
  for (std::size_t i = 0; i < src_feats.size(); ++i) {
    const NearestPair& np = s2r[i];
    if (np.best < 0) continue;
    if (np.d2 > 0.0 && np.d1 > ratio2 * np.d2) continue;
    if (r2s[np.best].best != static_cast<int>(i)) continue;  // cross-check
    Correspondence c;
    c.src = Vec2(src_feats[i].x, src_feats[i].y);
    c.ref = Vec2(ref_feats[np.best].x, ref_feats[np.best].y);
    c.score = np.d2 > 1e-12 ? std::clamp(1.0 - std::sqrt(np.d1 / np.d2), 0.0, 1.0)
                            : 1.0;
    corrs.push_back(c);
  }
  return corrs;
}

namespace {

Alignment2D fit_similarity(const std::vector<Correspondence>& corrs,
                           const std::vector<int>& idx) {
  // Least squares for ref = s * src + t over the given subset.
  Vec2 mean_src(0, 0), mean_ref(0, 0);
  for (int i : idx) {
    mean_src = mean_src + corrs[i].src;
    mean_ref = mean_ref + corrs[i].ref;
  }
  const double n = static_cast<double>(idx.size());
  mean_src = mean_src * (1.0 / n);
  mean_ref = mean_ref * (1.0 / n);

  double num = 0.0, den = 0.0;
  for (int i : idx) {
    const Vec2 ds = corrs[i].src - mean_src;
    const Vec2 dr = corrs[i].ref - mean_ref;
    num += ds.dot(dr);
    den += ds.dot(ds);
  }
  Alignment2D a;
  a.scale = den > 1e-12 ? num / den : 1.0;
  a.tx = mean_ref.x - a.scale * mean_src.x;
  a.ty = mean_ref.y - a.scale * mean_src.y;
  return a;
}

std::vector<int> inliers_of(const std::vector<Correspondence>& corrs,
                            const Alignment2D& a, double tol_px) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec2 p = a.apply(corrs[i].src);
    if ((p - corrs[i].ref).norm() <= tol_px) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

}  // namespace

AlignmentEstimate estimate_alignment(const std::vector<Correspondence>& corrs,
                                     const AlignRansacOptions& opts) {
  if (corrs.size() < 4) {
    throw InsufficientMatches("need >= 4 correspondences, have " +
                              std::to_string(corrs.size()));
  }
  Rng rng = make_rng(opts.seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(corrs.size()) - 1);

  std::vector<int> best_inliers;
  for (int it = 0; it < opts.iterations; ++it) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) continue;
    const Vec2 dp = corrs[j].src - corrs[i].src;
    if (dp.norm() < 1e-6) continue;  // degenerate sample
    const Alignment2D cand = fit_similarity(corrs, {i, j});
    if (!(cand.scale > 0.0)) continue;
    std::vector<int> inl = inliers_of(corrs, cand, opts.inlier_px);
    if (inl.size() > best_inliers.size()) best_inliers = std::move(inl);
  }

  const double n = static_cast<double>(corrs.size());
  if (best_inliers.size() < 2 ||
      static_cast<double>(best_inliers.size()) / n < opts.min_inlier_ratio) {
    throw AlignmentFailed("best inlier ratio " +
                          std::to_string(best_inliers.size() / n) + " < " +
                          std::to_string(opts.min_inlier_ratio));
  }

  AlignmentEstimate est;
  est.transform = fit_similarity(corrs, best_inliers);
  const std::vector<int> final_inliers =
      inliers_of(corrs, est.transform, opts.inlier_px);
  est.num_inliers = static_cast<int>(final_inliers.size());
  est.inlier_ratio = static_cast<double>(final_inliers.size()) / n;
  if (est.inlier_ratio < opts.min_inlier_ratio || !(est.transform.scale > 0.0)) {
    throw AlignmentFailed("refit inlier ratio " + std::to_string(est.inlier_ratio) +
                          " < " + std::to_string(opts.min_inlier_ratio));
  }
  return est;
}

namespace {

/// Resamples src into the reference grid under alignment a. A pixel stays
/// foreground only when all four bilinear neighbors are foreground, so
/// background never bleeds into invented content.
ImageRGBA resample_to_reference(const ImageRGBA& src, const Alignment2D& a,
                                int ref_w, int ref_h) {
  ImageRGBA out(ref_w, ref_h, RGBA{0, 0, 0, 0});
  for (int y = 0; y < ref_h; ++y) {
    for (int x = 0; x < ref_w; ++x) {
      const Vec2 sp = a.invert(Vec2(x + 0.5, y + 0.5));
      const double xf = sp.x - 0.5;
      const double yf = sp.y - 0.5;
      const int x0 = static_cast<int>(std::floor(xf));
      const int y0 = static_cast<int>(std::floor(yf));
      if (x0 < 0 || y0 < 0 || x0 + 1 >= src.width() || y0 + 1 >= src.height()) {
        continue;
      }
      if (src.at(x0, y0).a != 255 || src.at(x0 + 1, y0).a != 255 ||
          src.at(x0, y0 + 1).a != 255 || src.at(x0 + 1, y0 + 1).a != 255) {
        continue;
      }
      RGBA c = sample_bilinear(src, sp.x, sp.y);
      c.a = 255;
      out.at(x, y) = c;
    }
  }
  return out;
}

}  // namespace

AlignedGroup align_group(const std::vector<OrthoImage>& images,
                         const AlignGroupOptions& opts) {
  if (images.empty()) throw DomainError("align_group on empty input");

  std::size_t ref_idx = 0;
  std::size_t best_area = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t area = images[i].image.foreground_area();
    if (area > best_area) {
      best_area = area;
      ref_idx = i;
    }
  }
  const OrthoImage& ref = images[ref_idx];

  AlignedGroup out;
  out.report = nlohmann::json::array();
  std::vector<std::optional<OrthoImage>> aligned(images.size());
  std::vector<nlohmann::json> entries(images.size());

  parallel_for(0, static_cast<int>(images.size()), opts.num_threads, [&](int i) {
    const OrthoImage& src = images[i];
    nlohmann::json entry{{"source_id", src.source_id}};
    if (static_cast<std::size_t>(i) == ref_idx) {
      entry["status"] = "reference";
      entry["scale"] = 1.0;
      entry["tx"] = 0.0;
      entry["ty"] = 0.0;
      entry["inlier_ratio"] = 1.0;
      aligned[i] = src;
      entries[i] = std::move(entry);
      return;
    }
    try {
      const std::vector<Correspondence> corrs =
          detect_and_match(ref, src, opts.match);
      AlignRansacOptions ropts = opts.ransac;
      ropts.seed = derive_seed(opts.ransac.seed, "align", static_cast<std::uint64_t>(i));
      const AlignmentEstimate est = estimate_alignment(corrs, ropts);
      OrthoImage res;
      res.image = resample_to_reference(src.image, est.transform, ref.width(),
                                        ref.height());
      res.pixel_size = ref.pixel_size;
      res.plane = ref.plane;
      res.basis = ref.basis;
      res.grid_origin2d = ref.grid_origin2d;
      res.source_id = src.source_id;
      aligned[i] = std::move(res);
      entry["status"] = "ok";
      entry["scale"] = est.transform.scale;
      entry["tx"] = est.transform.tx;
      entry["ty"] = est.transform.ty;
      entry["inlier_ratio"] = est.inlier_ratio;
    } catch (const Error& e) {
      entry["status"] = "failed";
      entry["reason"] = e.what();
    }
    entries[i] = std::move(entry);
  });

  // Reference first, then the other images in input order.
  out.images.push_back(*aligned[ref_idx]);
  out.report.push_back(entries[ref_idx]);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (i == ref_idx) continue;
    out.report.push_back(entries[i]);
    if (aligned[i]) out.images.push_back(std::move(*aligned[i]));
  }
  return out;
}

}  // namespace facade3d
