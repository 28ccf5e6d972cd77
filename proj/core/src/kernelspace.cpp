#include "rgflow/kernelspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rg {

namespace {

int mono_deg(int idx) { return idx == 0 ? 0 : (idx < 5 ? 1 : 2); }

// Index of the product of two monomials of degrees summing to <= 2.
int mono_mul(int a, int b) {
  if (a == 0) return b;
  if (b == 0) return a;
  return 5 + Jet2::hidx(a - 1, b - 1);
}

constexpr double kTwoSqrtPi = 3.5449077018110318;  // 2 sqrt(pi)

}  // namespace

XPoly15 mul_trunc2(const XPoly15& a, const XPoly15& b) {
  XPoly15 r;
  for (int i = 0; i < 15; ++i) {
    if (a.c[i] == 0.0) continue;
    for (int j = 0; j < 15; ++j) {
      if (b.c[j] == 0.0) continue;
      if (mono_deg(i) + mono_deg(j) > 2) continue;
      r.c[mono_mul(i, j)] += a.c[i] * b.c[j];
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Radial grids
// ---------------------------------------------------------------------------

RadialGrid::Stencil RadialGrid::stencil(double xq) const {
  // Locate segment.
  int s = 0;
  const int nseg = static_cast<int>(seg_hi.size());
  while (s + 1 < nseg && xq > seg_hi[s]) ++s;
  const int a = seg_first[s];
  const int b = (s + 1 < nseg) ? seg_first[s + 1] : size();
  Stencil st;
  st.first = a;
  st.count = b - a;
  // Exact node hit.
  for (int i = a; i < b; ++i) {
    if (std::abs(x[i] - xq) < 1e-13) {
      st.w.fill(0.0);
      st.w[i - a] = 1.0;
      return st;
    }
  }
  // Barycentric weights with capacity scaling.
  const double cap = 4.0 / std::max(x[b - 1] - x[a], 1e-12);
  std::array<double, 24> lam{};
  for (int i = a; i < b; ++i) {
    double prod = 1.0;
    for (int j = a; j < b; ++j)
      if (j != i) prod *= (x[i] - x[j]) * cap;
    lam[i - a] = 1.0 / prod;
  }
  double denom = 0.0;
  for (int i = 0; i < st.count; ++i) {
    st.w[i] = lam[i] / (xq - x[a + i]);
    denom += st.w[i];
  }
  for (int i = 0; i < st.count; ++i) st.w[i] /= denom;
  return st;
}

std::shared_ptr<const RadialGrid> make_radial_grid(
    const Rule1D& rule, std::span<const double> breakpoints) {
  auto g = std::make_shared<RadialGrid>();
  g->rule = rule;
  g->x.push_back(0.0);
  g->x.insert(g->x.end(), rule.x.begin(), rule.x.end());
  if (!std::is_sorted(g->x.begin(), g->x.end()))
    throw std::invalid_argument("make_radial_grid: nodes not ascending");

  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  std::sort(cuts.begin(), cuts.end());
  std::erase_if(cuts, [&](double c) { return c <= 0.0 || c >= g->x.back(); });

  // Segment boundaries, then split any segment holding more than 16 nodes.
  std::vector<double> hi = cuts;
  hi.push_back(g->x.back() + 1.0);
  std::vector<int> first;
  std::vector<double> seg_hi;
  int idx = 0;
  for (double h : hi) {
    first.push_back(idx);
    int cnt = 0;
    while (idx < g->size() && g->x[idx] <= h) {
      ++idx;
      ++cnt;
    }
    seg_hi.push_back(h);
    (void)cnt;
  }
  // first[i] .. first[i+1]-1 belong to segment i; now enforce the node cap.
  std::vector<int> f2;
  std::vector<double> h2;
  for (std::size_t s = 0; s < first.size(); ++s) {
    int a = first[s];
    int b = (s + 1 < first.size()) ? first[s + 1] : g->size();
    while (b - a > 16) {
      int mid = a + (b - a) / 2;
      f2.push_back(a);
      h2.push_back(0.5 * (g->x[mid - 1] + g->x[mid]));
      a = mid;
    }
    if (b > a) {
      f2.push_back(a);
      h2.push_back(seg_hi[s]);
    }
  }
  h2.back() = g->x.back() + 1.0;
  g->seg_first = std::move(f2);
  g->seg_hi = std::move(h2);
  return g;
}

// ---------------------------------------------------------------------------
// Tags
// ---------------------------------------------------------------------------

int tag_count(int deg) { return deg == 1 ? 2 : 5; }

int tag_xdeg(int deg, int tag) {
  if (deg == 1) return tag == kEX ? 1 : 0;
  switch (tag) {
    case kEE:
    case kEKK:
      return 0;
    case kEKX:
    case kEXK:
      return 1;
    case kEXEX:
      return 2;
    default:
      throw std::invalid_argument("tag_xdeg: bad tag");
  }
}

XPoly15 tag_poly(int deg, int tag, const Eigen::Vector3d& eps1,
                 const Eigen::Vector3d& khat1, const Eigen::Vector3d& eps2,
                 const Eigen::Vector3d& khat2, const Eigen::Vector3d& phat) {
  XPoly15 p;
  if (deg == 1) {
    if (tag == kEX) {
      for (int i = 0; i < 3; ++i) p.lin(1 + i) = eps1[i];
    } else {
      p.c[0] = eps1.dot(phat);
    }
    return p;
  }
  switch (tag) {
    case kEE:
      p.c[0] = eps1.dot(eps2);
      break;
    case kEXEX:
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p.quad(1 + i, 1 + j) += eps1[i] * eps2[j];
      break;
    case kEKK:
      p.c[0] = eps1.dot(khat2) * eps2.dot(khat1);
      break;
    case kEKX: {
      const double s = eps1.dot(khat2);
      for (int i = 0; i < 3; ++i) p.lin(1 + i) = s * eps2[i];
      break;
    }
    case kEXK: {
      const double s = eps2.dot(khat1);
      for (int i = 0; i < 3; ++i) p.lin(1 + i) = s * eps1[i];
      break;
    }
    default:
      throw std::invalid_argument("tag_poly: bad tag");
  }
  return p;
}

// ---------------------------------------------------------------------------
// WickKernel
// ---------------------------------------------------------------------------

WickKernel WickKernel::zero(int M, int N, double sigma,
                            std::shared_ptr<const RadialGrid> grid) {
  WickKernel k;
  k.M = M;
  k.N = N;
  k.sigma = sigma;
  k.grid = std::move(grid);
  const int n = k.grid->size();
  const int flat = (M + N == 1) ? n : n * n;
  k.f.assign(tag_count(M + N), std::vector<XPoly15>(flat));
  return k;
}

std::vector<XPoly15> WickKernel::collapse_at(
    std::span<const double> leg_x) const {
  const int nt = tag_count(deg());
  std::vector<XPoly15> out(nt);
  if (deg() == 1) {
    const auto st = grid->stencil(leg_x[0]);
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < st.count; ++i) {
        if (st.w[i] == 0.0) continue;
        out[t] += f[t][st.first + i] * st.w[i];
      }
    return out;
  }
  const auto s1 = grid->stencil(leg_x[0]);
  const auto s2 = grid->stencil(leg_x[1]);
  const int n = grid->size();
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < s1.count; ++i) {
      if (s1.w[i] == 0.0) continue;
      for (int j = 0; j < s2.count; ++j) {
        if (s2.w[j] == 0.0) continue;
        out[t] += f[t][(s1.first + i) * n + (s2.first + j)] * (s1.w[i] * s2.w[j]);
      }
    }
  return out;
}

std::vector<XPoly15> WickKernel::collapse_nodes(int r1, int r2) const {
  const int nt = tag_count(deg());
  std::vector<XPoly15> out(nt);
  for (int t = 0; t < nt; ++t) out[t] = f[t][flat(r1, r2)];
  return out;
}

WickKernel rescale_kernel(const WickKernel& w, double rho) {
  WickKernel out = WickKernel::zero(w.M, w.N, w.sigma, w.grid);
  const int deg = w.deg();
  const double base = std::pow(rho, deg - 1 + w.sigma * deg);
  const int n = w.grid->size();
  if (deg == 1) {
    for (int r = 0; r < n; ++r) {
      const double xr = rho * w.grid->x[r];
      const auto cols = w.collapse_at(std::array<double, 1>{xr});
      for (int t = 0; t < tag_count(1); ++t) {
        const double s = base * std::pow(rho, tag_xdeg(1, t));
        out.f[t][r] = cols[t].arg_scaled(rho) * s;
      }
    }
    return out;
  }
  for (int r1 = 0; r1 < n; ++r1)
    for (int r2 = 0; r2 < n; ++r2) {
      const std::array<double, 2> xs{rho * w.grid->x[r1], rho * w.grid->x[r2]};
      const auto cols = w.collapse_at(xs);
      for (int t = 0; t < tag_count(2); ++t) {
        const double s = base * std::pow(rho, tag_xdeg(2, t));
        out.f[t][r1 * n + r2] = cols[t].arg_scaled(rho) * s;
      }
    }
  return out;
}

WickKernel mirror_kernel(const WickKernel& w) {
  WickKernel out = w;
  std::swap(out.M, out.N);
  return out;
}

namespace {
int swap_tag2(int t) {
  switch (t) {
    case kEKX:
      return kEXK;
    case kEXK:
      return kEKX;
    default:
      return t;
  }
}
}  // namespace

void symmetrize_creation_legs(WickKernel& w) {
  if (w.deg() != 2) return;
  const int n = w.grid->size();
  auto old = w.f;
  for (int t = 0; t < 5; ++t)
    for (int r1 = 0; r1 < n; ++r1)
      for (int r2 = 0; r2 < n; ++r2) {
        XPoly15 a = old[t][r1 * n + r2];
        XPoly15 b = old[swap_tag2(t)][r2 * n + r1];
        w.f[t][r1 * n + r2] = (a + b) * 0.5;
      }
}

void symmetrize_11(WickKernel& w) { symmetrize_creation_legs(w); }

// ---------------------------------------------------------------------------
// Norm lattices and norms
// ---------------------------------------------------------------------------

NormLattice default_norm_lattice() {
  NormLattice lat;
  const double x0s[] = {0.02, 0.1, 0.2, 0.3, 0.4, 0.5,  0.6,
                        0.7,  0.74, 0.78, 0.85, 0.92, 0.97, 0.999};
  const double fr[] = {0.0, 0.5, 1.0};
  const double s3 = 1.0 / std::sqrt(3.0), s2 = 1.0 / std::sqrt(2.0);
  const Eigen::Vector3d dirs[] = {{0, 0, 1},  {0, 0, -1},       {1, 0, 0},
                                  {s2, 0, s2}, {s3, s3, s3},    {0, 1, 0}};
  for (double x0 : x0s) {
    lat.X.push_back({x0, 0.0, 0.0, 0.0});
    for (double f : fr) {
      if (f == 0.0) continue;
      for (const auto& d : dirs) {
        const Eigen::Vector3d v = f * x0 * d;
        lat.X.push_back({x0, v[0], v[1], v[2]});
      }
    }
  }
  lat.khat = {{0, 0, 1}, {0, 0, -1}, {1, 0, 0}, {0, 1, 0},
              {s3, s3, s3}, {s2, -s2, 0}, {s2, 0, s2}, {-s3, s3, s3}};
  return lat;
}

namespace {

struct DerivSups {
  double val = 0.0, d0 = 0.0;
  std::array<double, 3> d1{};
  std::array<double, 6> d2{};  // spatial pairs (i<=j)
  double total() const {
    double s = val + d0;
    for (double v : d1) s += v;
    for (double v : d2) s += v;
    return s;
  }
};

// Sups of |P|, |dP/dX0|, |dP/dXi|, |d2P/dXidXj| (spatial) over the lattice.
void accumulate_poly_sups(const XPoly15& P, const NormLattice& lat,
                          DerivSups& a) {
  std::array<XPoly15, 4> dP;
  for (int i = 0; i < 4; ++i) dP[i] = P.ddx(i);
  for (const auto& X : lat.X) {
    const std::array<double, 4> xa{X[0], X[1], X[2], X[3]};
    a.val = std::max(a.val, std::abs(P.eval(xa)));
    a.d0 = std::max(a.d0, std::abs(dP[0].eval(xa)));
    for (int i = 0; i < 3; ++i)
      a.d1[i] = std::max(a.d1[i], std::abs(dP[1 + i].eval(xa)));
  }
  int p = 0;
  for (int i = 1; i < 4; ++i)
    for (int j = i; j < 4; ++j, ++p) {
      const double v = P.quad(i, j) * (i == j ? 2.0 : 1.0);
      a.d2[p] = std::max(a.d2[p], std::abs(v));
    }
}

// All angular/polarization leg configurations used for kernel norm sweeps.
template <class Fn>
void for_each_leg_config(const WickKernel& w, const NormLattice& lat,
                         const Eigen::Vector3d& phat, Fn&& fn) {
  if (w.deg() == 1) {
    for (const auto& kh : lat.khat) {
      const auto pol = polarization_pair(kh);
      for (const auto& ep : pol) {
        std::vector<XPoly15> tp(2);
        for (int t = 0; t < 2; ++t)
          tp[t] = tag_poly(1, t, ep, kh, ep, kh, phat);
        fn(tp);
      }
    }
    return;
  }
  const int nk = std::min<int>(4, static_cast<int>(lat.khat.size()));
  for (int a = 0; a < nk; ++a)
    for (int b = 0; b < nk; ++b) {
      const auto p1 = polarization_pair(lat.khat[a]);
      const auto p2 = polarization_pair(lat.khat[b]);
      for (const auto& e1 : p1)
        for (const auto& e2 : p2) {
          std::vector<XPoly15> tp(5);
          for (int t = 0; t < 5; ++t)
            tp[t] = tag_poly(2, t, e1, lat.khat[a], e2, lat.khat[b], phat);
          fn(tp);
        }
    }
}

}  // namespace

double norm_sigma(const WickKernel& w, const NormLattice& lat,
                  const Eigen::Vector3d& phat) {
  const int n = w.grid->size();
  const double pref = std::pow(kTwoSqrtPi, w.deg());
  double sup = 0.0;
  auto sweep = [&](const std::vector<XPoly15>& cols) {
    for_each_leg_config(w, lat, phat, [&](const std::vector<XPoly15>& tp) {
      XPoly15 P;
      for (std::size_t t = 0; t < tp.size(); ++t)
        P += mul_trunc2(tp[t], cols[t]);
      for (const auto& X : lat.X) {
        const std::array<double, 4> xa{X[0], X[1], X[2], X[3]};
        sup = std::max(sup, std::abs(P.eval(xa)));
      }
    });
  };
  if (w.deg() == 1) {
    for (int r = 0; r < n; ++r) sweep(w.collapse_nodes(r));
  } else {
    for (int r1 = 0; r1 < n; ++r1)
      for (int r2 = 0; r2 < n; ++r2) sweep(w.collapse_nodes(r1, r2));
  }
  return pref * sup;
}

KernelNorms norm_sigma_sharp(const WickKernel& w, const NormLattice& lat,
                             const Eigen::Vector3d& phat) {
  const int n = w.grid->size();
  const double pref = std::pow(kTwoSqrtPi, w.deg());
  DerivSups acc;
  double leg_sup = 0.0;

  // Node-derivative weights along one leg within its segment.
  auto leg_deriv_fields = [&](int leg, int r_other) {
    // Returns d/dx of each tag field at all nodes, holding the other leg at
    // node r_other (ignored for deg 1).
    std::vector<std::vector<XPoly15>> d(tag_count(w.deg()),
                                        std::vector<XPoly15>(n));
    const auto& g = *w.grid;
    for (std::size_t s = 0; s < g.seg_first.size(); ++s) {
      const int a = g.seg_first[s];
      const int b = (s + 1 < g.seg_first.size()) ? g.seg_first[s + 1] : n;
      const int cnt = b - a;
      // Barycentric lambda with capacity scaling.
      const double cap = 4.0 / std::max(g.x[b - 1] - g.x[a], 1e-12);
      std::vector<double> lam(cnt);
      for (int i = 0; i < cnt; ++i) {
        double prod = 1.0;
        for (int j = 0; j < cnt; ++j)
          if (j != i) prod *= (g.x[a + i] - g.x[a + j]) * cap;
        lam[i] = 1.0 / prod;
      }
      for (int i = 0; i < cnt; ++i) {
        // D[i][j] entries of the differentiation matrix, row i.
        double diag = 0.0;
        for (int j = 0; j < cnt; ++j) {
          if (i == j) continue;
          const double dij = (lam[j] / lam[i]) / (g.x[a + i] - g.x[a + j]);
          diag -= dij;
          for (int t = 0; t < tag_count(w.deg()); ++t) {
            const int fi = (w.deg() == 1) ? (a + j)
                           : (leg == 0 ? (a + j) * n + r_other
                                       : r_other * n + (a + j));
            d[t][a + i] += w.f[t][fi] * dij;
          }
        }
        for (int t = 0; t < tag_count(w.deg()); ++t) {
          const int fi = (w.deg() == 1) ? (a + i)
                         : (leg == 0 ? (a + i) * n + r_other
                                     : r_other * n + (a + i));
          d[t][a + i] += w.f[t][fi] * diag;
        }
      }
    }
    return d;
  };

  auto sweep = [&](const std::vector<XPoly15>& cols) {
    for_each_leg_config(w, lat, phat, [&](const std::vector<XPoly15>& tp) {
      XPoly15 P;
      for (std::size_t t = 0; t < tp.size(); ++t)
        P += mul_trunc2(tp[t], cols[t]);
      accumulate_poly_sups(P, lat, acc);
    });
  };
  auto sweep_leg = [&](const std::vector<XPoly15>& cols) {
    for_each_leg_config(w, lat, phat, [&](const std::vector<XPoly15>& tp) {
      XPoly15 P;
      for (std::size_t t = 0; t < tp.size(); ++t)
        P += mul_trunc2(tp[t], cols[t]);
      for (const auto& X : lat.X) {
        const std::array<double, 4> xa{X[0], X[1], X[2], X[3]};
        leg_sup = std::max(leg_sup, std::abs(P.eval(xa)));
      }
    });
  };

  if (w.deg() == 1) {
    for (int r = 0; r < n; ++r) sweep(w.collapse_nodes(r));
    const auto d = leg_deriv_fields(0, 0);
    for (int r = 0; r < n; ++r) {
      std::vector<XPoly15> cols(tag_count(1));
      for (int t = 0; t < tag_count(1); ++t) cols[t] = d[t][r];
      sweep_leg(cols);
    }
  } else {
    for (int r1 = 0; r1 < n; ++r1)
      for (int r2 = 0; r2 < n; ++r2) sweep(w.collapse_nodes(r1, r2));
    for (int leg = 0; leg < 2; ++leg)
      for (int ro = 0; ro < n; ++ro) {
        const auto d = leg_deriv_fields(leg, ro);
        for (int r = 0; r < n; ++r) {
          std::vector<XPoly15> cols(tag_count(2));
          for (int t = 0; t < tag_count(2); ++t) cols[t] = d[t][r];
          sweep_leg(cols);
        }
      }
  }

  KernelNorms out;
  out.plain = pref * acc.val;
  out.sharp = pref * (acc.total() + leg_sup);
  return out;
}

double norm_T_sharp(const XPoly15& T, const NormLattice& lat) {
  DerivSups acc;
  accumulate_poly_sups(T, lat, acc);
  return acc.total() - acc.val;  // no sup|T| term
}

double norm_T_region(const XPoly15& T, const NormLattice& lat, double K_Theta) {
  NormLattice inner, outer;
  inner.khat = outer.khat = lat.khat;
  for (const auto& X : lat.X)
    (X[0] < 0.75 ? inner : outer).X.push_back(X);
  DerivSups ai, ao;
  if (!inner.X.empty()) accumulate_poly_sups(T, inner, ai);
  if (!outer.X.empty()) accumulate_poly_sups(T, outer, ao);
  const double ni = ai.total() - ai.val;
  const double no = ao.total() - ao.val;
  return std::max(ni, no / K_Theta);
}

double family_w1_norm(const KernelFamily& fam, const NormLattice& lat,
                      double xi, bool sharp) {
  double acc = 0.0;
  for (const auto& [mn, ker] : fam.w) {
    const double weight = std::pow(xi, -(mn.first + mn.second));
    if (sharp) {
      acc += weight * norm_sigma_sharp(ker, lat, fam.phat).sharp;
    } else {
      acc += weight * norm_sigma(ker, lat, fam.phat);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Tag projector
// ---------------------------------------------------------------------------

std::vector<TagSample1> default_tag_samples1() {
  std::vector<TagSample1> out;
  const double s3 = 1.0 / std::sqrt(3.0);
  const Eigen::Vector3d dirs[] = {{0, 0, 1},    {0, 0, -1}, {1, 0, 0},
                                  {0, 1, 0},    {s3, s3, s3},
                                  {-s3, s3, -s3}, {s3, -s3, s3}, {0.6, 0, 0.8}};
  for (const auto& d : dirs) {
    const Eigen::Vector3d kh = d.normalized();
    const auto pol = polarization_pair(kh);
    for (const auto& e : pol) out.push_back({kh, e});
  }
  return out;
}

std::vector<TagSample2> default_tag_samples2() {
  std::vector<TagSample2> out;
  const double s3 = 1.0 / std::sqrt(3.0), s2 = 1.0 / std::sqrt(2.0);
  const Eigen::Vector3d dirs[] = {{0, 0, 1}, {1, 0, 0}, {s3, s3, s3},
                                  {s2, -s2, 0}, {0.6, 0, 0.8}};
  for (const auto& d1 : dirs)
    for (const auto& d2 : dirs) {
      const Eigen::Vector3d k1 = d1.normalized(), k2 = d2.normalized();
      const auto p1 = polarization_pair(k1);
      const auto p2 = polarization_pair(k2);
      for (const auto& e1 : p1)
        for (const auto& e2 : p2) out.push_back({k1, e1, k2, e2});
    }
  return out;
}

TagProjector::TagProjector(int deg, bool with_p, const Eigen::Vector3d& phat)
    : deg_(deg), with_p_(with_p) {
  if (deg == 1) {
    s1_ = default_tag_samples1();
    n_samples_ = static_cast<int>(s1_.size());
  } else {
    s2_ = default_tag_samples2();
    n_samples_ = static_cast<int>(s2_.size());
  }
  const int nt = tag_count(deg);
  for (int t = 0; t < nt; ++t) {
    if (deg == 1 && t == kEP && !with_p_) continue;
    const int cap = 2 - tag_xdeg(deg, t);
    for (int m = 0; m < 15; ++m)
      if (mono_deg(m) <= cap) cols_.emplace_back(t, m);
  }
  A_.resize(15 * n_samples_, static_cast<Eigen::Index>(cols_.size()));
  for (int s = 0; s < n_samples_; ++s) {
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const auto [t, m] = cols_[c];
      XPoly15 tp =
          (deg == 1)
              ? tag_poly(1, t, s1_[s].eps, s1_[s].khat, s1_[s].eps, s1_[s].khat,
                         phat)
              : tag_poly(2, t, s2_[s].eps1, s2_[s].khat1, s2_[s].eps2,
                         s2_[s].khat2, phat);
      XPoly15 mono;
      mono.c[m] = 1.0;
      const XPoly15 col = mul_trunc2(tp, mono);
      for (int i = 0; i < 15; ++i) A_(15 * s + i, c) = col.c[i];
    }
  }
  qr_.compute(A_);
}

TagProjector::Result TagProjector::project(std::span<const Jet2> jets) const {
  if (static_cast<int>(jets.size()) != n_samples_)
    throw std::invalid_argument("TagProjector::project: sample count");
  Eigen::VectorXd rhs(15 * n_samples_);
  for (int s = 0; s < n_samples_; ++s) {
    const XPoly15 p = XPoly15::from_jet(jets[s]);
    for (int i = 0; i < 15; ++i) rhs(15 * s + i) = p.c[i];
  }
  const Eigen::VectorXd sol = qr_.solve(rhs);
  Result res;
  res.fields.assign(tag_count(deg_), XPoly15{});
  for (std::size_t c = 0; c < cols_.size(); ++c)
    res.fields[cols_[c].first].c[cols_[c].second] = sol(c);
  res.residual_abs = (A_ * sol - rhs).lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace rg
