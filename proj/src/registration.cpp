#include "omnidepth/registration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "omnidepth/error.hpp"

namespace omnidepth {

using json = nlohmann::json;

double scale_factor(double d_ij, double d_ik) {
  if (!std::isfinite(d_ij) || !std::isfinite(d_ik) || d_ij <= 0.0 ||
      d_ik <= 0.0) {
    throw InvalidArgument("invalid depth: scale factor needs positive finite depths");
  }
  return d_ij / d_ik;
}

ScaleEstimate cluster_scales(std::span<const double> samples, double kappa) {
  if (samples.empty()) throw InvalidArgument("no samples to cluster");
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  // Inclusive radius with a relative allowance so that decimal inputs such
  // as 1.01 - 1.00 count as exactly kappa apart.
  const double radius = kappa * (1.0 + 1e-9);

  const auto neighbourhood = [&](double s) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), s - radius);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), s + radius);
    return std::pair<std::size_t, std::size_t>(lo - sorted.begin(), hi - sorted.begin());
  };

  std::size_t best_count = 0;
  std::vector<double> tied;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0 && sorted[k] == sorted[k - 1]) continue;
    const auto [lo, hi] = neighbourhood(sorted[k]);
    const std::size_t count = hi - lo;
    if (count > best_count) {
      best_count = count;
      tied.assign(1, sorted[k]);
    } else if (count == best_count) {
      tied.push_back(sorted[k]);
    }
  }

  double chosen = tied.front();
  if (tied.size() > 1) {
    std::set<std::size_t> members;
    for (double s : tied) {
      const auto [lo, hi] = neighbourhood(s);
      for (std::size_t k = lo; k < hi; ++k) members.insert(k);
    }
    std::vector<double> pool;
    for (std::size_t k : members) pool.push_back(sorted[k]);
    const std::size_t n = pool.size();
    const double median =
        n % 2 == 1 ? pool[n / 2] : 0.5 * (pool[n / 2 - 1] + pool[n / 2]);
    double best_gap = std::numeric_limits<double>::infinity();
    for (double s : tied) {  // ascending, so equal gaps keep the smaller value
      const double gap = std::abs(s - median);
      if (gap < best_gap) {
        best_gap = gap;
        chosen = s;
      }
    }
  }

  ScaleEstimate est;
  est.samples.assign(samples.begin(), samples.end());
  est.scale = chosen;
  est.cluster_size = static_cast<int>(best_count);
  est.kappa = kappa;
  return est;
}

const RigView& Rig::view(int index) const {
  for (const RigView& v : views) {
    if (v.index == index) return v;
  }
  throw InvalidArgument("rig has no view " + std::to_string(index));
}

RigView& Rig::view(int index) {
  return const_cast<RigView&>(std::as_const(*this).view(index));
}

bool Rig::has_view(int index) const {
  return std::any_of(views.begin(), views.end(),
                     [index](const RigView& v) { return v.index == index; });
}

Rig Rig::without_scaling() const {
  Rig out = *this;
  for (RigView& v : out.views) {
    if (v.index != reference) v.scale = 1.0;
  }
  return out;
}

Rig Rig::subset(std::span<const int> keep) const {
  Rig out = *this;
  out.views.clear();
  for (const RigView& v : views) {
    if (v.index == reference ||
        std::find(keep.begin(), keep.end(), v.index) != keep.end()) {
      out.views.push_back(v);
    }
  }
  return out;
}

namespace {

using BearingKey = std::tuple<double, double, double>;

BearingKey key_of(const Bearing& b) { return {b.x(), b.y(), b.z()}; }

// Depth along the reference bearing, in units of the pair's unit baseline.
std::optional<double> pair_depth(const Vec3& b_ref, const Vec3& b_other,
                                 const RelativePose& pose) {
  const Mat3& r = pose.rotation;
  const Vec3 center = -(r.transpose() * pose.translation);
  return try_triangulate_initial_depth(b_ref, r.transpose() * b_other, center);
}

bool is_inlier(const PairObservation& p, std::size_t k) {
  return p.pose.inlier_mask.empty() || p.pose.inlier_mask[k];
}

}  // namespace

RegistrationResult register_rig(std::span<const PairObservation> pairs,
                                const RegistrationConfig& cfg) {
  if (pairs.empty()) throw InvalidArgument("register_rig needs at least one view pair");
  for (const PairObservation& p : pairs) {
    if (p.view == cfg.reference) {
      throw InvalidArgument("pair list must not contain the reference view");
    }
    if (!p.pose.inlier_mask.empty() &&
        p.pose.inlier_mask.size() != p.matches.matches.size()) {
      throw InvalidArgument("inlier mask does not match correspondences");
    }
    if (!(p.pose.translation.norm() > 1e-12)) {
      throw DegenerateError("degenerate rig: view " + std::to_string(p.view) +
                            " has zero translation");
    }
  }

  const PairObservation* base = nullptr;
  if (cfg.baseline_view) {
    for (const PairObservation& p : pairs) {
      if (p.view == *cfg.baseline_view) base = &p;
    }
    if (!base) {
      throw InvalidArgument("baseline view " + std::to_string(*cfg.baseline_view) +
                            " has no pose");
    }
  } else {
    for (const PairObservation& p : pairs) {
      if (!base || p.pose.inlier_count > base->pose.inlier_count ||
          (p.pose.inlier_count == base->pose.inlier_count && p.view < base->view)) {
        base = &p;
      }
    }
  }

  RegistrationResult result;
  Rig& rig = result.rig;
  rig.reference = cfg.reference;
  rig.baseline_view = base->view;
  rig.kappa = cfg.kappa;
  rig.baseline_length = cfg.baseline_length;
  rig.views.push_back({cfg.reference, Mat3::Identity(), Vec3::Zero(), 1.0, {}});

  // Reference bearing -> bearing in the baseline view, inliers only.
  std::map<BearingKey, Vec3> baseline_track;
  for (std::size_t k = 0; k < base->matches.matches.size(); ++k) {
    if (!is_inlier(*base, k)) continue;
    const Match& m = base->matches.matches[k];
    baseline_track.emplace(key_of(m.a), m.b.vec());
  }

  std::vector<const PairObservation*> ordered;
  for (const PairObservation& p : pairs) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* l, auto* r) { return l->view < r->view; });

  for (const PairObservation* p : ordered) {
    RigView view;
    view.index = p->view;
    view.rotation = p->pose.rotation;
    view.translation = p->pose.translation.normalized();
    if (p == base) {
      view.scale = 1.0;
      rig.views.push_back(view);
      continue;
    }
    std::vector<double> samples;
    std::size_t tracks = 0;
    for (std::size_t k = 0; k < p->matches.matches.size(); ++k) {
      if (!is_inlier(*p, k)) continue;
      const Match& m = p->matches.matches[k];
      const auto it = baseline_track.find(key_of(m.a));
      if (it == baseline_track.end()) continue;
      ++tracks;
      const auto d_ij = pair_depth(m.a.vec(), it->second, base->pose);
      const auto d_ik = pair_depth(m.a.vec(), m.b.vec(), p->pose);
      if (!d_ij || !d_ik || !(*d_ij > 0.0) || !(*d_ik > 0.0) ||
          !std::isfinite(*d_ij) || !std::isfinite(*d_ik)) {
        continue;
      }
      samples.push_back(scale_factor(*d_ij, *d_ik));
    }
    if (tracks == 0) {
      throw DataError("unregistrable view " + std::to_string(p->view) +
                      ": no feature tracks shared with views " +
                      std::to_string(cfg.reference) + " and " +
                      std::to_string(base->view));
    }
    if (samples.empty()) {
      throw DegenerateError("view " + std::to_string(p->view) +
                            ": every shared track is degenerate");
    }
    ScaleEstimate est = cluster_scales(samples, cfg.kappa);
    view.scale = est.scale;
    result.scales.emplace(p->view, std::move(est));
    rig.views.push_back(view);
  }
  return result;
}

RegistrationResult register_from_correspondences(const CorrespondenceSet& set,
                                                 const RegistrationConfig& cfg,
                                                 const RansacConfig& ransac) {
  std::vector<PairObservation> pairs;
  for (int view : set.views) {
    if (view == cfg.reference) continue;
    PairObservation p;
    p.view = view;
    p.matches = set.pair(cfg.reference, view);
    if (p.matches.size() < 8) {
      throw DataError("unregistrable view " + std::to_string(view) +
                      ": fewer than 8 matches with the reference");
    }
    RansacConfig per_view = ransac;
    per_view.seed = ransac.seed + static_cast<std::uint64_t>(view);
    p.pose = estimate_relative_pose(p.matches.matches, per_view);
    pairs.push_back(std::move(p));
  }
  return register_rig(pairs, cfg);
}

namespace {

json mat_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 mat_from(const json& a, const std::string& what) {
  if (!a.is_array() || a.size() != 9) throw DataError(what + ": expected 9 numbers");
  Mat3 m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = a.at(k).get<double>();
  return m;
}

Vec3 vec_from(const json& a, const std::string& what) {
  if (!a.is_array() || a.size() != 3) throw DataError(what + ": expected 3 numbers");
  return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
}

}  // namespace

void save_rig(const Rig& rig, const std::filesystem::path& path) {
  json j;
  j["schema"] = 1;
  j["reference"] = rig.reference;
  j["baseline"] = json::array({rig.reference, rig.baseline_view});
  j["kappa"] = rig.kappa;
  j["baseline_length"] = rig.baseline_length;
  json views = json::array();
  for (const RigView& v : rig.views) {
    json e;
    e["index"] = v.index;
    e["R"] = mat_json(v.rotation);
    e["t"] = vec_json(v.translation);
    e["s"] = v.scale;
    e["t_scaled"] = vec_json(v.scaled_translation());
    if (!v.image.empty()) e["image"] = v.image;
    views.push_back(e);
  }
  j["views"] = views;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path.string());
}

Rig load_rig(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("rig file not found: " + path.string());
  }
  std::ifstream in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed rig file " + path.string() + ": " + e.what());
  }
  Rig rig;
  try {
    if (j.value("schema", 0) != 1) {
      throw DataError("unsupported rig schema in " + path.string());
    }
    rig.reference = j.at("reference").get<int>();
    const json& base = j.at("baseline");
    if (!base.is_array() || base.size() != 2) {
      throw DataError("rig baseline must be a pair");
    }
    rig.baseline_view = base.at(1).get<int>();
    rig.kappa = j.value("kappa", kDefaultKappa);
    rig.baseline_length = j.value("baseline_length", 1.0);
    for (const json& e : j.at("views")) {
      RigView v;
      v.index = e.at("index").get<int>();
      v.rotation = mat_from(e.at("R"), "R");
      v.translation = vec_from(e.at("t"), "t");
      v.scale = e.at("s").get<double>();
      v.image = e.value("image", std::string());
      const double orth = (v.rotation.transpose() * v.rotation - Mat3::Identity()).norm();
      if (orth > 1e-6 || std::abs(v.rotation.determinant() - 1.0) > 1e-6) {
        throw DataError("view " + std::to_string(v.index) + ": R is not a rotation");
      }
      if (!(v.scale > 0.0) || !std::isfinite(v.scale)) {
        throw DataError("view " + std::to_string(v.index) + ": scale must be positive");
      }
      if (v.index != rig.reference &&
          std::abs(v.translation.norm() - 1.0) > 1e-6) {
        throw DataError("view " + std::to_string(v.index) + ": t must be unit length");
      }
      rig.views.push_back(v);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed rig file " + path.string() + ": " + e.what());
  }
  if (!rig.has_view(rig.reference)) {
    throw DataError("rig file lacks the reference view");
  }
  return rig;
}

}  // namespace omnidepth
