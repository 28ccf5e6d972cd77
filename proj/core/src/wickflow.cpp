#include "rgflow/wickflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace rg {

namespace {

constexpr double kTwoPi = 6.283185307179586;

long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// ---------------------------------------------------------------------------
// Factor patterns and contraction schemes
// ---------------------------------------------------------------------------

struct Factor {
  int m = 0, p = 0, n = 0, q = 0;  // external/internal creation, external/internal annihilation
  int km() const { return m + p; }
  int kn() const { return n + q; }
};
using Pattern = std::vector<Factor>;
// A contraction scheme: one (annihilating factor, creating factor) per pair,
// la < lc, enumerated over labeled legs (Wick multiplicities).
using Matching = std::vector<std::pair<int, int>>;

void enumerate_matchings_rec(const Pattern& pat, std::vector<int>& q_left,
                             std::vector<int>& p_left, Matching& cur,
                             std::vector<Matching>& out) {
  // Find first factor with an unmatched annihilation leg.
  int la = -1;
  for (std::size_t l = 0; l < q_left.size(); ++l)
    if (q_left[l] > 0) {
      la = static_cast<int>(l);
      break;
    }
  if (la < 0) {
    out.push_back(cur);
    return;
  }
  --q_left[la];
  for (std::size_t lc = la + 1; lc < p_left.size(); ++lc) {
    if (p_left[lc] == 0) continue;
    --p_left[lc];
    cur.emplace_back(la, static_cast<int>(lc));
    enumerate_matchings_rec(pat, q_left, p_left, cur, out);
    cur.pop_back();
    ++p_left[lc];
  }
  ++q_left[la];
}

std::vector<Matching> enumerate_matchings(const Pattern& pat) {
  std::vector<int> q_left(pat.size()), p_left(pat.size());
  for (std::size_t l = 0; l < pat.size(); ++l) {
    q_left[l] = pat[l].q;
    p_left[l] = pat[l].p;
  }
  std::vector<Matching> out;
  Matching cur;
  enumerate_matchings_rec(pat, q_left, p_left, cur, out);
  // Remove leg-label duplicates: matchings listing the same multiset of
  // (la, lc) arcs are distinct Wick pairings and all kept; the recursion
  // above enumerates each labeled pairing exactly once because annihilation
  // legs are consumed in a fixed order.
  return out;
}

void enumerate_patterns_rec(int L, int l, int Mrem, int Nrem, int psum,
                            int qsum, int c_cap, const KernelFamily& fam,
                            Pattern& cur, std::vector<Pattern>& out) {
  if (l == L) {
    if (Mrem == 0 && Nrem == 0 && psum == qsum && psum <= c_cap) {
      if (psum == 0 || !enumerate_matchings(cur).empty()) out.push_back(cur);
    }
    return;
  }
  for (int m = 0; m <= Mrem; ++m)
    for (int n = 0; n <= Nrem; ++n)
      for (int p = 0; p + psum <= c_cap; ++p) {
        if (l == 0 && p > 0) continue;  // nothing earlier to pair with
        for (int q = 0; q + qsum <= c_cap; ++q) {
          if (l == L - 1 && q > 0) continue;  // nothing later to pair with
          if (m + p + n + q < 1) continue;
          if (m + p > 2 || n + q > 2 || m + p + n + q > 2) continue;
          if (!fam.has(m + p, n + q)) continue;
          cur.push_back({m, p, n, q});
          enumerate_patterns_rec(L, l + 1, Mrem - m, Nrem - n, psum + p,
                                 qsum + q, c_cap, fam, cur, out);
          cur.pop_back();
        }
      }
}

std::vector<Pattern> enumerate_patterns(int L, int M, int N, int c_cap,
                                        const KernelFamily& fam) {
  std::vector<Pattern> out;
  Pattern cur;
  enumerate_patterns_rec(L, 0, M, N, 0, 0, c_cap, fam, cur, out);
  return out;
}

// ---------------------------------------------------------------------------
// Point evaluation helpers (scalar / jet with closed-form polynomial jets)
// ---------------------------------------------------------------------------

template <class T>
T poly_shifted(const XPoly15& P, const EvalPoint& at,
               const std::array<double, 4>& s) {
  const std::array<double, 4> y{at.x[0] + s[0], at.x[1] + s[1], at.x[2] + s[2],
                                at.x[3] + s[3]};
  if constexpr (std::is_same_v<T, double>) {
    return P.eval(y);
  } else {
    Jet2 r(P.eval(y));
    const double sc = at.jet_scale;
    for (int i = 0; i < 4; ++i) {
      double d = P.c[1 + i];
      for (int j = 0; j < 4; ++j) {
        const double cq = P.c[5 + Jet2::hidx(i, j)];
        d += (i == j) ? 2.0 * cq * y[j] : cq * y[j];
      }
      r.g[i] = sc * d;
    }
    int pk = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j, ++pk) {
        const double cq = P.c[5 + pk];
        r.h[pk] = sc * sc * ((i == j) ? 2.0 * cq : cq);
      }
    return r;
  }
}

template <class T>
T var0_at(const EvalPoint& at, double shift0) {
  if constexpr (std::is_same_v<T, double>) {
    return at.x[0] + shift0;
  } else {
    return Jet2::var(at.x[0] + shift0, 0, at.jet_scale);
  }
}

// ---------------------------------------------------------------------------
// The assembly engine
// ---------------------------------------------------------------------------

struct LegData {
  double x = 0.0;
  Eigen::Vector3d khat{0, 0, 1};
  Eigen::Vector3d eps{1, 0, 0};
};

template <class T>
class Engine {
 public:
  Engine(const KernelFamily& fam, const FlowOptions& opt, const EvalPoint& at,
         double E_slot, AssemblyStats* stats)
      : fam_(fam), opt_(opt), at_(at), E_(E_slot), stats_(stats) {
    reduced_ = fam.sector == Sector::reduced;
    chi_rho_ = fam.chi1.scaled(reduced_ ? fam.rho : 1.0);
    Tt_ = fam.T;
    Tt_.c[1] -= 1.0;  // Ttilde = T - X0
    den_floor_ = (reduced_ ? fam.rho : 1.0) / 100.0;
    for (const auto& [mn, ker] : fam.w) {
      double px = 0.0;
      for (const auto& tf : ker.f)
        for (const auto& poly : tf) {
          double s = 0.0;
          for (double c : poly.c) s += std::abs(c);
          px = std::max(px, s);
        }
      proxy_[mn] = px;
    }
  }

  double kernel_proxy(int M, int N) const {
    auto it = proxy_.find({M, N});
    return it == proxy_.end() ? 0.0 : it->second;
  }

  // chibar_rho^2 chi_1^2 (reduced) or chibar_1^2 (physical) applied to Y0.
  T cutoff_prod(const T& Y0) const {
    if (reduced_) return chi_rho_.chibar2(Y0) * fam_.chi1.chi2(Y0);
    return fam_.chi1.chibar2(Y0);
  }

  bool ir_flat(double y0) const { return y0 <= chi_rho_.lo; }

  T ups_end(const std::array<double, 4>& s) const {
    const double y0v = at_.x[0] + s[0];
    if (ir_flat(y0v)) return T(1.0);
    const T Y0 = var0_at<T>(at_, s[0]);
    const T cb = cutoff_prod(Y0);
    const T tpe = poly_shifted<T>(Tt_, at_, s) + E_;
    const T den = Y0 + cb * tpe;
    guard(value_of(den), y0v);
    return 1.0 - cb * tpe * inv(den);
  }

  T f_mid(const std::array<double, 4>& s) const {
    const double y0v = at_.x[0] + s[0];
    if (ir_flat(y0v)) return T(0.0);
    const T Y0 = var0_at<T>(at_, s[0]);
    const T cb = cutoff_prod(Y0);
    const T tpe = poly_shifted<T>(Tt_, at_, s) + E_;
    const T den = Y0 + cb * tpe;
    guard(value_of(den), y0v);
    return cb * inv(den);
  }

  T kernel_factor(const WickKernel& ker, const LegData* legs, int nlegs,
                  const std::array<double, 4>& s) const {
    // Interpolated tag fields at the leg radii.
    std::array<XPoly15, 5> cols{};
    collapse(ker, legs, nlegs, cols.data());
    XPoly15 P;
    const int deg = ker.deg();
    for (int t = 0; t < tag_count(deg); ++t) {
      const XPoly15 tp =
          (deg == 1)
              ? tag_poly(1, t, legs[0].eps, legs[0].khat, legs[0].eps,
                         legs[0].khat, fam_.phat)
              : tag_poly(2, t, legs[0].eps, legs[0].khat, legs[1].eps,
                         legs[1].khat, fam_.phat);
      P += mul_trunc2(tp, cols[t]);
    }
    return poly_shifted<T>(P, at_, s);
  }

  // sum_{L>=Lmin} (-1)^{L-1} sum_{patterns} prefactors * V^(L). The term set
  // for a channel key is enumerated once per engine; skipped-pattern bounds
  // are recorded once per key, not per evaluation point.
  T channel(int M, int N, std::span<const ExtLeg> cre,
            std::span<const ExtLeg> ann, int Lmin) const {
    const TermSet& ts = terms(M, N, Lmin);
    if (stats_ && skips_recorded_.insert(std::tuple{M, N, Lmin}).second)
      stats_->budget.skipped_patterns += ts.skipped;
    T total(0.0);
    for (const Term& t : ts.terms)
      for (const Matching& match : t.matchings)
        total +=
            (t.sign * t.pref) * integrate_term(t.pat, match, cre, ann, t.c);
    return total;
  }

  // Pre-rescale (0,0) decimation value.
  T w00() const {
    const T X0 = var0_at<T>(at_, 0.0);
    const T c2 = fam_.chi1.chi2(X0);
    const std::array<double, 4> zero{};
    const T tpe = poly_shifted<T>(Tt_, at_, zero) + E_;
    const T ups = ups_end(zero);
    const T vsum = channel(0, 0, {}, {}, 2);
    return X0 + c2 * (tpe * ups + vsum);
  }

 private:
  struct Term {
    Pattern pat;
    double pref = 1.0;
    double sign = 1.0;
    int c = 0;
    std::vector<Matching> matchings;  // pre-filtered by max_gap_photons
  };
  struct TermSet {
    std::vector<Term> terms;
    double skipped = 0.0;  // a-priori bounds of everything not evaluated
  };

  const TermSet& terms(int M, int N, int Lmin) const {
    const auto key = std::tuple{M, N, Lmin};
    if (auto it = terms_cache_.find(key); it != terms_cache_.end())
      return it->second;
    TermSet ts;
    const int deg = M + N;
    const int c_cap = (deg == 0)   ? opt_.c_max
                      : (deg == 1) ? std::min(opt_.c_max, 1)
                      : (opt_.deg2_L2 ? std::min(opt_.c_max, 1) : 0);
    for (int L = std::max(1, Lmin); L <= opt_.L_max; ++L) {
      const double sign = (L % 2 == 1) ? 1.0 : -1.0;
      for (const Pattern& pat : enumerate_patterns(L, M, N, c_cap, fam_)) {
        double pref = 1.0;
        int c = 0;
        for (const Factor& f : pat) {
          pref *= static_cast<double>(binom(f.m + f.p, f.p)) *
                  static_cast<double>(binom(f.n + f.q, f.q));
          // The matching recursion enumerates ordered annihilation-leg
          // assignments; labeled Wick pairings additionally distinguish the
          // internal creation legs, giving p! per factor.
          if (f.p == 2) pref *= 2.0;
          c += f.p;
        }
        // Zero-proxy patterns (absent or vanished kernels) are exact zeros;
        // otherwise the a-priori bound gates evaluation.
        const double bound = pattern_bound(pat, c, pref);
        if (bound <= opt_.pattern_floor) {
          ts.skipped += bound;
          continue;
        }
        Term t{pat, pref, sign, c, {}};
        for (const Matching& match : enumerate_matchings(pat))
          if (max_gap_occupancy(pat, match) <= opt_.max_gap_photons)
            t.matchings.push_back(match);
        if (!t.matchings.empty()) ts.terms.push_back(std::move(t));
      }
      // Record the skipped two-contraction corrections of two-leg channels.
      if (deg == 2 && !opt_.deg2_L2 && L >= 2) {
        for (const Pattern& pat :
             enumerate_patterns(L, M, N, std::min(opt_.c_max, 2), fam_)) {
          int c = 0;
          double pref = 1.0;
          for (const Factor& f : pat) {
            c += f.p;
            pref *= static_cast<double>(binom(f.m + f.p, f.p)) *
                    static_cast<double>(binom(f.n + f.q, f.q));
          }
          if (c >= 1) ts.skipped += pattern_bound(pat, c, pref);
        }
      }
    }
    return terms_cache_.emplace(key, std::move(ts)).first->second;
  }

  void guard(double den, double y0) const {
    if (stats_)
      stats_->min_denominator = std::min(stats_->min_denominator, std::abs(den));
    if (std::abs(den) < den_floor_) {
      std::ostringstream os;
      os << "resolvent denominator " << den << " below floor " << den_floor_
         << " at Y0 = " << y0;
      throw DomainViolation(os.str());
    }
  }

  void collapse(const WickKernel& ker, const LegData* legs, int nlegs,
                XPoly15* out) const {
    const int nt = tag_count(ker.deg());
    if (nlegs == 1) {
      const auto st = ker.grid->stencil(legs[0].x);
      for (int t = 0; t < nt; ++t) {
        XPoly15 acc;
        for (int i = 0; i < st.count; ++i)
          if (st.w[i] != 0.0) acc += ker.f[t][st.first + i] * st.w[i];
        out[t] = acc;
      }
      return;
    }
    const auto s1 = ker.grid->stencil(legs[0].x);
    const auto s2 = ker.grid->stencil(legs[1].x);
    const int n = ker.grid->size();
    for (int t = 0; t < nt; ++t) {
      XPoly15 acc;
      for (int i = 0; i < s1.count; ++i) {
        if (s1.w[i] == 0.0) continue;
        for (int j = 0; j < s2.count; ++j) {
          if (s2.w[j] == 0.0) continue;
          acc += ker.f[t][(s1.first + i) * n + (s2.first + j)] *
                 (s1.w[i] * s2.w[j]);
        }
      }
      out[t] = acc;
    }
  }

  static int max_gap_occupancy(const Pattern& pat, const Matching& match) {
    int mx = 0;
    for (int gap = 0; gap < static_cast<int>(pat.size()); ++gap) {
      int c = 0;
      for (const auto& [la, lc] : match)
        if (la <= gap && gap < lc) ++c;
      mx = std::max(mx, c);
    }
    return mx;
  }

  double pattern_bound(const Pattern& pat, int c, double pref) const {
    const double rho_eff = reduced_ ? fam_.rho : 1.0;
    double b = pref * std::pow(opt_.C_Theta_hint, static_cast<int>(pat.size()) + 1) *
               std::pow(rho_eff, -(static_cast<int>(pat.size()) - 1)) *
               std::pow(kTwoPi, c);
    for (const Factor& f : pat) b *= kernel_proxy(f.km(), f.kn());
    return b;
  }

  // One pattern/matching term: loop integral over the contracted photons of
  // the resolvent-kernel chain. Chain factors not touched by any contraction
  // arc are evaluated once and hoisted out of the loop.
  T integrate_term(const Pattern& pat, const Matching& match,
                   std::span<const ExtLeg> cre, std::span<const ExtLeg> ann,
                   int c) const {
    const ChainPlan pl = plan_chain(pat, match, cre, ann);
    if (c == 0) return pl.const_prod;
    const Rule1D* rad;
    const AngularRule* ang;
    if (c >= 2) {
      rad = &opt_.loop_c2;
      ang = &opt_.ang_c2;
    } else if (cre.size() + ann.size() == 0) {
      rad = &opt_.loop_00;
      ang = &opt_.ang_00;
    } else {
      rad = &opt_.loop_deg1;
      ang = &opt_.ang_deg1;
    }
    std::vector<LegData> pairleg(c);
    T acc(0.0);
    const double sig2 = 2.0 * sigma();
    // Nested loop over the c contracted photons.
    auto rec = [&](auto&& self, int pi, double wacc) -> void {
      if (pi == c) {
        acc += eval_chain(pl, pairleg.data()) * wacc;
        return;
      }
      for (int r = 0; r < rad->size(); ++r) {
        const double q = rad->x[r];
        if (q <= 0.0) continue;
        const double wr = rad->w[r] * 0.5 * q *
                          (sig2 != 0.0 ? std::pow(q, sig2) : 1.0);
        for (int a = 0; a < ang->size(); ++a) {
          const auto pol = polarization_pair(ang->dir[a]);
          for (const auto& e : pol) {
            pairleg[pi] = LegData{q, ang->dir[a], e};
            self(self, pi + 1, wacc * wr * ang->w[a]);
          }
        }
      }
    };
    rec(rec, 0, 1.0);
    return acc;
  }

  double sigma() const {
    if (fam_.w.empty()) return 0.0;
    return fam_.w.begin()->second.sigma;
  }

  // Chain evaluation is split into a per-term plan (external-leg base shifts,
  // masks saying which factors see a contracted photon, and the product of
  // the unchanging factors) and a cheap per-quadrature-point evaluation of
  // the remaining factors. Factor products commute (truncated polynomial
  // arithmetic), so hoisting preserves the value up to rounding.
  struct ChainPlan {
    const Pattern* pat = nullptr;
    const Matching* match = nullptr;
    std::span<const ExtLeg> cre, ann;
    std::array<int, 8> moff{}, noff{};
    std::array<std::array<double, 4>, 9> gap_base{}, fac_base{};
    std::array<bool, 9> gap_var{}, fac_var{};
    std::array<bool, 8> ker_var{};
    T const_prod{1.0};
  };

  static std::array<double, 4> leg4(const LegData& d) {
    return {d.x, d.x * d.khat[0], d.x * d.khat[1], d.x * d.khat[2]};
  }
  static std::array<double, 4> ext4(const ExtLeg& d) {
    return {d.x, d.x * d.khat[0], d.x * d.khat[1], d.x * d.khat[2]};
  }
  static void add4(std::array<double, 4>& a, const std::array<double, 4>& b) {
    for (int i = 0; i < 4; ++i) a[i] += b[i];
  }

  ChainPlan plan_chain(const Pattern& pat, const Matching& match,
                       std::span<const ExtLeg> cre,
                       std::span<const ExtLeg> ann) const {
    ChainPlan pl;
    pl.pat = &pat;
    pl.match = &match;
    pl.cre = cre;
    pl.ann = ann;
    const int L = static_cast<int>(pat.size());
    {
      int mo = 0, no = 0;
      for (int l = 0; l < L; ++l) {
        pl.moff[l] = mo;
        pl.noff[l] = no;
        mo += pat[l].m;
        no += pat[l].n;
      }
    }
    // Base shifts carry the external legs only; gap ell sits after factor
    // ell, factor shifts see annihilation externals strictly earlier.
    for (int ell = 0; ell <= L; ++ell) {
      std::array<double, 4> s{};
      for (int l = 0; l < L; ++l) {
        for (int j = 0; j < pat[l].m; ++j)
          if (l + 1 > ell) add4(s, ext4(cre[pl.moff[l] + j]));
        for (int j = 0; j < pat[l].n; ++j)
          if (l + 1 <= ell) add4(s, ext4(ann[pl.noff[l] + j]));
      }
      pl.gap_base[ell] = s;
    }
    for (int ell = 1; ell <= L; ++ell) {
      std::array<double, 4> s{};
      for (int l = 0; l < L; ++l) {
        for (int j = 0; j < pat[l].m; ++j)
          if (l + 1 > ell) add4(s, ext4(cre[pl.moff[l] + j]));
        for (int j = 0; j < pat[l].n; ++j)
          if (l + 1 < ell) add4(s, ext4(ann[pl.noff[l] + j]));
      }
      pl.fac_base[ell] = s;
    }
    for (const auto& [la, lc] : match) {
      for (int ell = 0; ell <= L; ++ell) {
        if (la + 1 <= ell && ell < lc + 1) pl.gap_var[ell] = true;
        if (ell >= 1 && la + 1 < ell && ell < lc + 1) pl.fac_var[ell] = true;
      }
      pl.ker_var[la] = true;
      pl.ker_var[lc] = true;
    }

    T cp = pl.gap_var[0] ? T(1.0) : ups_end(pl.gap_base[0]);
    for (int ell = 1; ell <= L; ++ell) {
      if (!pl.ker_var[ell - 1] && !pl.fac_var[ell])
        cp = cp * kernel_at(pl, ell, nullptr);
      if (!pl.gap_var[ell])
        cp = cp * ((ell < L) ? f_mid(pl.gap_base[ell])
                             : ups_end(pl.gap_base[ell]));
    }
    pl.const_prod = cp;
    return pl;
  }

  // Kernel factor of chain slot ell; pairleg may be null when no contracted
  // photon touches this factor.
  T kernel_at(const ChainPlan& pl, int ell, const LegData* pairleg) const {
    const Pattern& pat = *pl.pat;
    const Matching& match = *pl.match;
    const Factor& f = pat[ell - 1];
    // Kernel legs: creation externals, creation internals, annihilation
    // externals, annihilation internals (kernels are leg-symmetric within
    // each block after symmetrization).
    std::array<LegData, 2> legs;
    int nl = 0;
    for (int j = 0; j < f.m; ++j) {
      const ExtLeg& e = pl.cre[pl.moff[ell - 1] + j];
      legs[nl++] = LegData{e.x, e.khat, e.eps};
    }
    for (std::size_t pi = 0; pi < match.size(); ++pi)
      if (match[pi].second == ell - 1) legs[nl++] = pairleg[pi];
    for (int j = 0; j < f.n; ++j) {
      const ExtLeg& e = pl.ann[pl.noff[ell - 1] + j];
      legs[nl++] = LegData{e.x, e.khat, e.eps};
    }
    for (std::size_t pi = 0; pi < match.size(); ++pi)
      if (match[pi].first == ell - 1) legs[nl++] = pairleg[pi];

    std::array<double, 4> s = pl.fac_base[ell];
    if (pairleg != nullptr)
      for (std::size_t pi = 0; pi < match.size(); ++pi) {
        const auto [la, lc] = match[pi];
        if (la + 1 < ell && ell < lc + 1) add4(s, leg4(pairleg[pi]));
      }
    return kernel_factor(fam_.at(f.km(), f.kn()), legs.data(), nl, s);
  }

  T eval_chain(const ChainPlan& pl, const LegData* pairleg) const {
    const Pattern& pat = *pl.pat;
    const Matching& match = *pl.match;
    const int L = static_cast<int>(pat.size());
    T v = pl.const_prod;
    auto gap_at = [&](int ell) {
      std::array<double, 4> s = pl.gap_base[ell];
      for (std::size_t pi = 0; pi < match.size(); ++pi) {
        const auto [la, lc] = match[pi];
        if (la + 1 <= ell && ell < lc + 1) add4(s, leg4(pairleg[pi]));
      }
      return s;
    };
    if (pl.gap_var[0]) v = v * ups_end(gap_at(0));
    for (int ell = 1; ell <= L; ++ell) {
      if (pl.ker_var[ell - 1] || pl.fac_var[ell])
        v = v * kernel_at(pl, ell, pairleg);
      if (pl.gap_var[ell]) {
        const auto s = gap_at(ell);
        v = v * ((ell < L) ? f_mid(s) : ups_end(s));
      }
    }
    return v;
  }

  const KernelFamily& fam_;
  const FlowOptions& opt_;
  EvalPoint at_;
  double E_;
  AssemblyStats* stats_;
  bool reduced_ = true;
  Cutoff chi_rho_;
  XPoly15 Tt_;
  double den_floor_;
  std::map<std::pair<int, int>, double> proxy_;
  mutable std::map<std::tuple<int, int, int>, TermSet> terms_cache_;
  mutable std::set<std::tuple<int, int, int>> skips_recorded_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

FlowOptions default_flow_options(const KernelFamily& fam) {
  FlowOptions opt;
  // A kernel-free family never enters a loop integral; any rule will do.
  const Rule1D loop = fam.w.empty() ? composite_gauss(16, {})
                                    : fam.w.begin()->second.grid->rule;
  // The angular integrands are low-degree in the loop direction (products of
  // at most two tags and a mildly anisotropic resolvent); the refinement
  // probe in rg_step tracks what these rules miss.
  opt.loop_00 = loop;
  opt.ang_00 = sphere_product(4, 8);
  opt.loop_deg1 = loop;
  opt.ang_deg1 = sphere_product(3, 6);
  // Double contractions are O(g^4)-small; a plain rule over the full range
  // suffices and its error is tracked by the refinement probe.
  opt.loop_c2 = composite_gauss(6, {});
  opt.ang_c2 = sphere_product(2, 3);
  return opt;
}

double channel_value(const KernelFamily& fam, const FlowOptions& opt, int M,
                     int N, std::span<const ExtLeg> cre,
                     std::span<const ExtLeg> ann, const EvalPoint& at,
                     AssemblyStats* stats, int Lmin) {
  Engine<double> e(fam, opt, at, fam.E, stats);
  return e.channel(M, N, cre, ann, Lmin);
}

Jet2 channel_jet(const KernelFamily& fam, const FlowOptions& opt, int M, int N,
                 std::span<const ExtLeg> cre, std::span<const ExtLeg> ann,
                 const EvalPoint& at, AssemblyStats* stats, int Lmin) {
  Engine<Jet2> e(fam, opt, at, fam.E, stats);
  return e.channel(M, N, cre, ann, Lmin);
}

double w00_value(const KernelFamily& fam, const FlowOptions& opt,
                 const EvalPoint& at, AssemblyStats* stats) {
  Engine<double> e(fam, opt, at, fam.E, stats);
  return e.w00();
}

Jet2 w00_jet(const KernelFamily& fam, const FlowOptions& opt,
             const EvalPoint& at, AssemblyStats* stats) {
  Engine<Jet2> e(fam, opt, at, fam.E, stats);
  return e.w00();
}

double E_of_z(const KernelFamily& fam, const FlowOptions& opt, double z,
              AssemblyStats* stats) {
  Engine<double> e(fam, opt, EvalPoint{}, z, stats);
  return e.w00();
}

double upsilon_value(const KernelFamily& fam, const EvalPoint& at) {
  FlowOptions opt;  // no loops needed
  Engine<double> e(fam, opt, at, fam.E, nullptr);
  return e.ups_end({0.0, 0.0, 0.0, 0.0});
}

namespace {

// Truncated-representation spill of the (0,0) channel: compare the scalar
// decimation values at a few interior points against the quadratic model.
double measure_degree_spill(const KernelFamily& fam, const FlowOptions& opt,
                            const XPoly15& That, double Ehat, double rho_eff) {
  const std::array<std::array<double, 4>, 5> pts{{{0.35, 0.0, 0.0, 0.2},
                                                  {0.55, 0.3, 0.0, 0.0},
                                                  {0.81, 0.0, 0.2, 0.3},
                                                  {0.15, 0.0, 0.0, -0.1},
                                                  {0.92, 0.4, 0.4, 0.4}}};
  double spill = 0.0;
  for (const auto& X : pts) {
    EvalPoint at;
    for (int i = 0; i < 4; ++i) at.x[i] = rho_eff * X[i];
    double v;
    try {
      v = w00_value(fam, opt, at);
    } catch (const DomainViolation&) {
      continue;
    }
    const double model =
        That.eval(X) + Ehat * fam.chi1.chi2(X[0]);
    spill = std::max(spill, std::abs(v / rho_eff - model));
  }
  return spill;
}

}  // namespace

KernelFamily rg_step(const KernelFamily& fam, const FlowOptions& opt,
                     StepRecord* rec) {
  const bool physical = fam.sector == Sector::physical;
  const double rho_eff = physical ? 1.0 : fam.rho;
  AssemblyStats stats;

  KernelFamily out;
  out.sector = Sector::reduced;
  out.scale = fam.scale + 1;
  out.p = fam.p;
  out.phat = fam.phat;
  out.g = fam.g;
  out.rho = fam.rho;
  out.kappa = fam.kappa;
  out.chi1 = fam.chi1;

  // (0,0): one unscaled-seed jet gives Ehat, That and the mass increment.
  const Jet2 P0 = w00_jet(fam, opt, EvalPoint{{0, 0, 0, 0}, 1.0}, &stats);
  const double Ehat = P0.v / rho_eff;
  XPoly15 That;
  for (int i = 0; i < 4; ++i) That.c[1 + i] = P0.g[i];
  {
    int k = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b, ++k)
        That.c[5 + k] = rho_eff * ((a == b) ? 0.5 : 1.0) * P0.h[k];
  }
  out.E = Ehat;
  out.z = Ehat;
  out.T = That;

  if (rec != nullptr) {
    rec->scale_from = fam.scale;
    rec->E_new = Ehat;
    rec->z_new = out.z;
    // Delta-gamma at the origin: renormalized (0,0) jet (pre-rescale,
    // unscaled seed) minus the current one. Near the origin the cutoffs are
    // flat, so gamma * Upsilon-tilde collapses to T + E exactly.
    Jet2 dg = P0;
    const Jet2 tj = fam.T.to_jet_at_zero();
    dg -= tj;
    dg -= fam.E;
    rec->dgamma = dg;
  }

  if (fam.w.empty()) {
    if (rec) {
      rec->budget = stats.budget;
      rec->min_denominator = stats.min_denominator;
    }
    return out;
  }

  // Output kernels on the same grid.
  const auto& grid = fam.w.begin()->second.grid;
  const double sig = fam.w.begin()->second.sigma;
  const int nn = grid->size();
  const double p_norm = fam.p;

  // One engine per projection block: the evaluation point, slot, and term
  // sets are shared by every sample, only the external legs change.
  const EvalPoint at0{{0, 0, 0, 0}, rho_eff};

  // Degree-1 channels.
  {
    TagProjector proj(1, p_norm > 0.0, fam.phat);
    WickKernel k10 = WickKernel::zero(1, 0, sig, grid);
    const double scale_fac = std::pow(rho_eff, 0.0 + sig * 1.0);  // rho^{M+N-1+sigma(M+N)}
    Engine<Jet2> eng(fam, opt, at0, fam.E, &stats);
    std::vector<Jet2> jets(proj.samples1().size());
    double resid = 0.0;
    for (int r = 0; r < nn; ++r) {
      const double kx = rho_eff * grid->x[r];
      for (std::size_t s = 0; s < proj.samples1().size(); ++s) {
        const auto& smp = proj.samples1()[s];
        const ExtLeg leg{kx, smp.khat, smp.eps};
        jets[s] = eng.channel(1, 0, std::span(&leg, 1), {}, 1) * scale_fac;
      }
      auto res = proj.project(jets);
      for (int t = 0; t < tag_count(1); ++t) k10.f[t][r] = res.fields[t];
      resid = std::max(resid, res.residual_abs);
    }
    if (rec) rec->proj_residual1 = resid;
    stats.budget.projection_residual += resid;
    WickKernel k01 = mirror_kernel(k10);
    out.w.emplace(std::make_pair(1, 0), std::move(k10));
    out.w.emplace(std::make_pair(0, 1), std::move(k01));
  }

  // Degree-2 channels.
  {
    TagProjector proj(2, false, fam.phat);
    WickKernel k20 = WickKernel::zero(2, 0, sig, grid);
    WickKernel k11 = WickKernel::zero(1, 1, sig, grid);
    const double scale_fac = std::pow(rho_eff, 1.0 + sig * 2.0);
    Engine<Jet2> eng(fam, opt, at0, fam.E, &stats);
    std::vector<Jet2> jets(proj.samples2().size());
    double resid = 0.0;
    for (int r1 = 0; r1 < nn; ++r1)
      for (int r2 = 0; r2 < nn; ++r2) {
        const double x1 = rho_eff * grid->x[r1];
        const double x2 = rho_eff * grid->x[r2];
        // (2,0)
        for (std::size_t s = 0; s < proj.samples2().size(); ++s) {
          const auto& smp = proj.samples2()[s];
          const std::array<ExtLeg, 2> legs{ExtLeg{x1, smp.khat1, smp.eps1},
                                           ExtLeg{x2, smp.khat2, smp.eps2}};
          jets[s] = eng.channel(2, 0, legs, {}, 1) * scale_fac;
        }
        auto res20 = proj.project(jets);
        for (int t = 0; t < tag_count(2); ++t)
          k20.f[t][r1 * nn + r2] = res20.fields[t];
        resid = std::max(resid, res20.residual_abs);
        // (1,1): creation leg 1, annihilation leg 2.
        for (std::size_t s = 0; s < proj.samples2().size(); ++s) {
          const auto& smp = proj.samples2()[s];
          const ExtLeg c{x1, smp.khat1, smp.eps1};
          const ExtLeg a{x2, smp.khat2, smp.eps2};
          jets[s] =
              eng.channel(1, 1, std::span(&c, 1), std::span(&a, 1), 1) *
              scale_fac;
        }
        auto res11 = proj.project(jets);
        for (int t = 0; t < tag_count(2); ++t)
          k11.f[t][r1 * nn + r2] = res11.fields[t];
        resid = std::max(resid, res11.residual_abs);
      }
    if (rec) rec->proj_residual2 = resid;
    stats.budget.projection_residual += resid;
    symmetrize_creation_legs(k20);
    symmetrize_11(k11);
    WickKernel k02 = mirror_kernel(k20);
    out.w.emplace(std::make_pair(2, 0), std::move(k20));
    out.w.emplace(std::make_pair(1, 1), std::move(k11));
    out.w.emplace(std::make_pair(0, 2), std::move(k02));
  }

  // Neumann tail beyond L_max from the geometric machinery with measured
  // norm proxies.
  {
    Engine<double> probe(fam, opt, EvalPoint{}, fam.E, nullptr);
    double wmax = 0.0;
    for (const auto& [mn, ker] : fam.w) {
      (void)ker;
      wmax = std::max(wmax, probe.kernel_proxy(mn.first, mn.second));
    }
    const double B = 4.0 * opt.C_Theta_hint * wmax / rho_eff;
    double tail = 0.0;
    if (B < 0.9) {
      for (int L = opt.L_max + 1; L <= 40; ++L)
        tail += 10.0 * opt.C_Theta_hint * opt.C_Theta_hint * (L + 1.0) *
                (L + 1.0) * std::pow(B, L);
    } else {
      tail = std::numeric_limits<double>::infinity();
    }
    stats.budget.neumann_tail += std::min(tail, 1e30);
  }

  // Quadrature error estimate: re-evaluate one representative configuration
  // of each loop-bearing assembly under refined angular rules.
  {
    FlowOptions fine = opt;
    fine.ang_00 = sphere_product(opt.ang_00.n_cos + 3, opt.ang_00.n_phi + 6);
    fine.ang_deg1 =
        sphere_product(opt.ang_deg1.n_cos + 3, opt.ang_deg1.n_phi + 6);
    auto jdiff = [](const Jet2& a, const Jet2& b) {
      double d = std::abs(a.v - b.v);
      for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a.g[i] - b.g[i]));
      for (int i = 0; i < 10; ++i) d = std::max(d, std::abs(a.h[i] - b.h[i]));
      return d;
    };
    try {
      const Jet2 a = w00_jet(fam, opt, EvalPoint{{0, 0, 0, 0}, 1.0});
      const Jet2 b = w00_jet(fam, fine, EvalPoint{{0, 0, 0, 0}, 1.0});
      stats.budget.quadrature += jdiff(a, b) / rho_eff;
      if (!fam.w.empty()) {
        const auto s1 = default_tag_samples1();
        const ExtLeg leg{0.5 * rho_eff, s1[0].khat, s1[0].eps};
        const EvalPoint at{{0, 0, 0, 0}, rho_eff};
        const Jet2 c = channel_jet(fam, opt, 1, 0, std::span(&leg, 1), {}, at);
        const Jet2 d = channel_jet(fam, fine, 1, 0, std::span(&leg, 1), {}, at);
        stats.budget.quadrature += jdiff(c, d);
      }
    } catch (const DomainViolation&) {
    }
  }

  const double spill = measure_degree_spill(fam, opt, That, Ehat, rho_eff);
  stats.budget.degree_spill += spill;
  if (rec) {
    rec->degree_spill = spill;
    rec->budget = stats.budget;
    rec->min_denominator = stats.min_denominator;
  }
  return out;
}

double measure_C_Theta(const KernelFamily& fam, const FlowOptions& opt) {
  const double rho_eff = fam.sector == Sector::physical ? 1.0 : fam.rho;
  double cmax = 1.0;
  AssemblyStats stats;
  for (double x0 : {0.0, 0.2, 0.4, 0.6, 0.7, 0.76, 0.82, 0.9, 0.97, 1.05}) {
    for (double xr : {0.0, 0.5 * x0, 0.9 * x0}) {
      EvalPoint at{{x0, 0.0, 0.0, xr}, 1.0};
      Engine<Jet2> e(fam, opt, at, fam.E, &stats);
      auto dsum = [](const Jet2& j) {
        double s = std::abs(j.g[0]);
        for (int i = 1; i < 4; ++i) s += std::abs(j.g[i]);
        for (int a = 1; a < 4; ++a)
          for (int b = a; b < 4; ++b) s += std::abs(j.h[Jet2::hidx(a, b)]);
        s += std::abs(j.v);
        return s;
      };
      try {
        const Jet2 ue = e.ups_end({0, 0, 0, 0});
        cmax = std::max(cmax, dsum(ue));
        const Jet2 fm = e.f_mid({0, 0, 0, 0});
        cmax = std::max(cmax, dsum(fm) * rho_eff);
      } catch (const DomainViolation&) {
        continue;
      }
    }
  }
  return cmax;
}

}  // namespace rg
