#include "omnidepth/correspondence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "omnidepth/error.hpp"

namespace omnidepth {

namespace {

// Bresenham circle of radius 3 used by FAST-9.
constexpr std::array<std::array<int, 2>, 16> kCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

class GrayView {
 public:
  GrayView(const std::vector<float>& g, int w, int h) : g_(g), w_(w), h_(h) {}

  float at(int x, int y) const {
    x %= w_;
    if (x < 0) x += w_;
    y = std::clamp(y, 0, h_ - 1);
    return g_[static_cast<std::size_t>(y) * w_ + x];
  }

  float bilinear(double u, double v) const {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const double ax = u - fu;
    const double ay = v - fv;
    const int x0 = static_cast<int>(fu);
    const int y0 = static_cast<int>(fv);
    const double top = at(x0, y0) + ax * (at(x0 + 1, y0) - at(x0, y0));
    const double bot = at(x0, y0 + 1) + ax * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
    return static_cast<float>(top + ay * (bot - top));
  }

  int width() const { return w_; }
  int height() const { return h_; }

 private:
  const std::vector<float>& g_;
  int w_;
  int h_;
};

std::vector<float> gaussian_blur(const std::vector<float>& src, int w, int h,
                                 double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  std::vector<float> tmp(src.size());
  std::vector<float> dst(src.size());
  GrayView sv(src, w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * sv.at(x + i, y);
      tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  }
  GrayView tv(tmp, w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tv.at(x, y + i);
      dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  }
  return dst;
}

bool is_fast_corner(const GrayView& g, int x, int y, float threshold) {
  const float p = g.at(x, y);
  const float hi = p + threshold;
  const float lo = p - threshold;
  // Quick rejection on the four compass points: a 9-arc covers at least two.
  int brighter = 0;
  int darker = 0;
  for (int k : {0, 4, 8, 12}) {
    const float q = g.at(x + kCircle[k][0], y + kCircle[k][1]);
    brighter += q > hi;
    darker += q < lo;
  }
  if (brighter < 2 && darker < 2) return false;

  std::array<int, 16> state{};
  for (int k = 0; k < 16; ++k) {
    const float q = g.at(x + kCircle[k][0], y + kCircle[k][1]);
    state[k] = q > hi ? 1 : (q < lo ? -1 : 0);
  }
  for (int sign : {1, -1}) {
    int run = 0;
    for (int k = 0; k < 32; ++k) {
      if (state[k % 16] == sign) {
        if (++run >= 9) return true;
      } else {
        run = 0;
      }
    }
  }
  return false;
}

double harris_response(const GrayView& g, int x, int y) {
  constexpr int kR = 3;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (int dy = -kR; dy <= kR; ++dy) {
    for (int dx = -kR; dx <= kR; ++dx) {
      const double ix = 0.5 * (g.at(x + dx + 1, y + dy) - g.at(x + dx - 1, y + dy));
      const double iy = 0.5 * (g.at(x + dx, y + dy + 1) - g.at(x + dx, y + dy - 1));
      sxx += ix * ix;
      syy += iy * iy;
      sxy += ix * iy;
    }
  }
  return sxx * syy - sxy * sxy - 0.04 * (sxx + syy) * (sxx + syy);
}

// Vertex of the parabola through three samples at -1, 0, +1.
double subpixel_offset(double left, double center, double right) {
  const double curv = left - 2.0 * center + right;
  if (!(curv < 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / curv, -0.5, 0.5);
}

struct PatternPair {
  double x1, y1, x2, y2;
};

// Fixed sampling pattern in units of the patch radius.
const std::array<PatternPair, 256>& brief_pattern() {
  static const std::array<PatternPair, 256> pattern = [] {
    std::array<PatternPair, 256> p{};
    std::mt19937 rng(0x5eedu);
    std::normal_distribution<double> n(0.0, 0.4);
    auto draw = [&] {
      double v = 0.0;
      do {
        v = n(rng);
      } while (std::abs(v) > 0.95);
      return v;
    };
    for (auto& q : p) q = {draw(), draw(), draw(), draw()};
    return p;
  }();
  return pattern;
}

struct Candidate {
  int x, y;
  double response;
};

}  // namespace

int BandLayout::band_of_row(int row) const {
  if (row < first_row || row > last_row || bands <= 0) return -1;
  const int span = last_row - first_row + 1;
  return std::min(bands - 1, (row - first_row) * bands / span);
}

double BandLayout::band_center_phi(int band, int height) const {
  const double span = last_row - first_row + 1;
  const double lo = first_row + span * band / bands;
  const double hi = first_row + span * (band + 1) / bands;
  return kPi * (0.5 * (lo + hi) - 0.5) / height;
}

BandLayout band_layout(int height, const DetectorConfig& cfg) {
  BandLayout layout;
  layout.first_row = static_cast<int>(std::ceil(cfg.pole_margin * height));
  layout.last_row = height - 1 - layout.first_row;
  layout.bands = std::max(1, cfg.latitude_bands);
  if (layout.last_row < layout.first_row) layout.bands = 0;
  return layout;
}

std::vector<int> band_budgets(const BandLayout& layout, int height,
                              int max_features) {
  std::vector<double> weight(layout.bands);
  for (int b = 0; b < layout.bands; ++b) {
    weight[b] = std::sin(layout.band_center_phi(b, height));
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<int> budget(layout.bands, 0);
  if (total <= 0.0) return budget;
  std::vector<std::pair<double, int>> remainder;
  int assigned = 0;
  for (int b = 0; b < layout.bands; ++b) {
    const double exact = max_features * weight[b] / total;
    budget[b] = static_cast<int>(std::floor(exact));
    assigned += budget[b];
    remainder.emplace_back(-(exact - budget[b]), b);
  }
  std::sort(remainder.begin(), remainder.end());
  for (int i = 0; assigned < max_features && i < layout.bands; ++i, ++assigned) {
    ++budget[remainder[i].second];
  }
  return budget;
}

std::vector<Feature> detect_features(const EquirectImage& img,
                                     const DetectorConfig& cfg) {
  if (cfg.max_features < 8) {
    throw InvalidArgument("detect_features: max_features must be >= 8");
  }
  const int w = img.width();
  const int h = img.height();
  const std::vector<float> gray = img.gray();
  const GrayView g(gray, w, h);
  const BandLayout layout = band_layout(h, cfg);
  if (layout.bands == 0) return {};
  const float threshold = static_cast<float>(cfg.fast_threshold);

  // Corner candidates with Harris score, per row so the parallel pass writes
  // disjoint slots.
  std::vector<std::vector<Candidate>> rows(h);
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = layout.first_row; y <= layout.last_row; ++y) {
    for (int x = 0; x < w; ++x) {
      if (is_fast_corner(g, x, y, threshold)) {
        rows[y].push_back({x, y, harris_response(g, x, y)});
      }
    }
  }

  // 3x3 non-maximum suppression on the response (ties keep the earlier pixel).
  std::vector<double> score(static_cast<std::size_t>(w) * h,
                            -std::numeric_limits<double>::infinity());
  for (const auto& row : rows) {
    for (const auto& c : row) score[static_cast<std::size_t>(c.y) * w + c.x] = c.response;
  }
  auto score_at = [&](int x, int y) {
    x = (x % w + w) % w;
    if (y < 0 || y >= h) return -std::numeric_limits<double>::infinity();
    return score[static_cast<std::size_t>(y) * w + x];
  };
  std::vector<std::vector<Candidate>> per_band(layout.bands);
  for (const auto& row : rows) {
    for (const auto& c : row) {
      if (c.response <= 0.0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double o = score_at(c.x + dx, c.y + dy);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (o > c.response || (o == c.response && earlier)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) per_band[layout.band_of_row(c.y)].push_back(c);
    }
  }

  const std::vector<int> budget = band_budgets(layout, h, cfg.max_features);
  std::vector<Candidate> selected;
  for (int b = 0; b < layout.bands; ++b) {
    auto& cands = per_band[b];
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& l, const Candidate& r) {
                       if (l.response != r.response) return l.response > r.response;
                       return std::tie(l.y, l.x) < std::tie(r.y, r.x);
                     });
    const int n = std::min<int>(budget[b], static_cast<int>(cands.size()));
    selected.insert(selected.end(), cands.begin(), cands.begin() + n);
  }
  std::sort(selected.begin(), selected.end(),
            [](const Candidate& l, const Candidate& r) {
              return std::tie(l.y, l.x) < std::tie(r.y, r.x);
            });

  const std::vector<float> smooth = gaussian_blur(gray, w, h, 1.5);
  const GrayView sg(smooth, w, h);
  const int patch = cfg.patch_radius > 0 ? cfg.patch_radius
                                          : std::clamp(h / 16, 6, 15);
  const auto& pattern = brief_pattern();
  const ImageDims dims = img.dims();

  std::vector<Feature> features(selected.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const Candidate& c = selected[i];
    const double phi = kPi * c.y / h;
    const double stretch = 1.0 / std::max(std::sin(phi), 1e-3);

    double m10 = 0.0;
    double m01 = 0.0;
    for (int dy = -patch; dy <= patch; ++dy) {
      for (int dx = -patch; dx <= patch; ++dx) {
        if (dx * dx + dy * dy > patch * patch) continue;
        const double val = sg.bilinear(c.x + dx * stretch, c.y + dy);
        m10 += dx * val;
        m01 += dy * val;
      }
    }
    const double angle = std::atan2(m01, m10);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);

    Feature f;
    f.pixel = {c.x + subpixel_offset(harris_response(g, c.x - 1, c.y), c.response,
                                     harris_response(g, c.x + 1, c.y)),
               c.y + subpixel_offset(harris_response(g, c.x, c.y - 1), c.response,
                                     harris_response(g, c.x, c.y + 1))};
    f.pixel.u = std::fmod(f.pixel.u + w, static_cast<double>(w));
    f.bearing = pixel_to_bearing(f.pixel, dims);
    f.response = c.response;
    f.angle = angle;
    for (int bit = 0; bit < 256; ++bit) {
      const PatternPair& p = pattern[bit];
      const double ax = patch * (ca * p.x1 - sa * p.y1);
      const double ay = patch * (sa * p.x1 + ca * p.y1);
      const double bx = patch * (ca * p.x2 - sa * p.y2);
      const double by = patch * (sa * p.x2 + ca * p.y2);
      const float ia = sg.bilinear(c.x + ax * stretch, c.y + ay);
      const float ib = sg.bilinear(c.x + bx * stretch, c.y + by);
      if (ia < ib) f.descriptor[bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
    features[i] = f;
  }
  return features;
}

int hamming(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

namespace {

// Nearest neighbour of every query; ties resolve to the lowest index.
std::vector<int> nearest(const std::vector<Feature>& query,
                         const std::vector<Feature>& train, Exec exec) {
  std::vector<int> best(query.size(), -1);
  const auto body = [&](std::size_t i) {
    int best_d = 257;
    for (std::size_t j = 0; j < train.size(); ++j) {
      const int d = hamming(query[i].descriptor, train[j].descriptor);
      if (d < best_d) {
        best_d = d;
        best[i] = static_cast<int>(j);
      }
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < query.size(); ++i) body(i);
  } else {
    for (std::size_t i = 0; i < query.size(); ++i) body(i);
  }
  return best;
}

}  // namespace

CorrespondenceSet match_features(const std::vector<Feature>& a,
                                 const std::vector<Feature>& b, int view_a,
                                 int view_b, Exec exec) {
  CorrespondenceSet out;
  if (a.empty() || b.empty()) return out;
  const std::vector<int> ab = nearest(a, b, exec);
  const std::vector<int> ba = nearest(b, a, exec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = ab[i];
    if (j < 0 || ba[j] != static_cast<int>(i)) continue;
    Match m;
    m.view_a = view_a;
    m.view_b = view_b;
    m.a = a[i].bearing;
    m.b = b[j].bearing;
    m.distance = hamming(a[i].descriptor, b[j].descriptor);
    m.index_a = static_cast<int>(i);
    m.index_b = j;
    out.matches.push_back(m);
  }
  std::stable_sort(out.matches.begin(), out.matches.end(),
                   [](const Match& l, const Match& r) {
                     return std::tie(l.distance, l.index_a) <
                            std::tie(r.distance, r.index_a);
                   });
  out.views = view_a == view_b ? std::vector<int>{view_a}
                               : std::vector<int>{std::min(view_a, view_b),
                                                  std::max(view_a, view_b)};
  return out;
}

CorrespondenceSet CorrespondenceSet::pair(int a, int b) const {
  CorrespondenceSet out;
  for (const Match& m : matches) {
    if (m.view_a == a && m.view_b == b) {
      out.matches.push_back(m);
    } else if (m.view_a == b && m.view_b == a) {
      Match f = m;
      std::swap(f.view_a, f.view_b);
      std::swap(f.a, f.b);
      std::swap(f.index_a, f.index_b);
      out.matches.push_back(f);
    }
  }
  if (!out.matches.empty()) {
    out.views = a == b ? std::vector<int>{a}
                       : std::vector<int>{std::min(a, b), std::max(a, b)};
  }
  return out;
}

void CorrespondenceSet::append(const CorrespondenceSet& other) {
  matches.insert(matches.end(), other.matches.begin(), other.matches.end());
  std::set<int> ids(views.begin(), views.end());
  ids.insert(other.views.begin(), other.views.end());
  views.assign(ids.begin(), ids.end());
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open correspondence file: " + path.string());
  CorrespondenceSet out;
  std::set<int> ids;
  std::set<std::tuple<int, int, double, double, double, double, double, double>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream row(line);
    std::vector<std::string> tokens;
    for (std::string tok; row >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const auto fail = [&](const std::string& why) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": " << why;
      throw DataError(os.str());
    };
    if (tokens.size() != 8 && tokens.size() != 9) {
      fail("expected 8 or 9 fields, got " + std::to_string(tokens.size()));
    }
    Match m;
    try {
      std::size_t used = 0;
      m.view_a = std::stoi(tokens[0], &used);
      if (used != tokens[0].size()) fail("bad view id");
      m.view_b = std::stoi(tokens[1], &used);
      if (used != tokens[1].size()) fail("bad view id");
      double v[6];
      for (int k = 0; k < 6; ++k) {
        v[k] = std::stod(tokens[2 + k], &used);
        if (used != tokens[2 + k].size()) fail("bad number '" + tokens[2 + k] + "'");
      }
      m.a = Bearing::normalized(v[0], v[1], v[2]);
      m.b = Bearing::normalized(v[3], v[4], v[5]);
      if (tokens.size() == 9) {
        m.distance = std::stoi(tokens[8], &used);
        if (used != tokens[8].size()) fail("bad distance");
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("parse error: ") + e.what());
    }
    const auto key = std::make_tuple(m.view_a, m.view_b, m.a.x(), m.a.y(),
                                     m.a.z(), m.b.x(), m.b.y(), m.b.z());
    if (!seen.insert(key).second) continue;
    ids.insert(m.view_a);
    ids.insert(m.view_b);
    out.matches.push_back(m);
  }
  out.views.assign(ids.begin(), ids.end());
  return out;
}

void save_correspondences(const CorrespondenceSet& set,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "# viewA viewB bxA byA bzA bxB byB bzB [distance]\n";
  char buf[512];
  for (const Match& m : set.matches) {
    int n = std::snprintf(buf, sizeof(buf),
                          "%d %d %.17g %.17g %.17g %.17g %.17g %.17g", m.view_a,
                          m.view_b, m.a.x(), m.a.y(), m.a.z(), m.b.x(), m.b.y(),
                          m.b.z());
    out.write(buf, n);
    if (m.distance >= 0) out << ' ' << m.distance;
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace omnidepth
