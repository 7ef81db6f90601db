#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "cps/criticality.hpp"

namespace cps {

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void enumerate_rec(const std::vector<int>& vars, size_t pos, int remaining,
                   std::vector<std::pair<int, int>>& cur,
                   std::vector<Monomial>& out) {
  if (pos == vars.size()) {
    out.push_back(Monomial(cur));
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    if (e > 0) cur.emplace_back(vars[pos], e);
    enumerate_rec(vars, pos + 1, remaining - e, cur, out);
    if (e > 0) cur.pop_back();
  }
}

std::vector<Monomial> monomial_basis(const std::vector<int>& vars, int maxdeg) {
  std::vector<Monomial> out;
  std::vector<std::pair<int, int>> cur;
  enumerate_rec(vars, 0, maxdeg, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

// One PSD block of the certificate. `factor` multiplies the block's SOS in
// the identity  sum_b sos_b(z) * factor_b(z) = objective - level;
// `factor_sup` bounds the factor on the constrained set, used when turning
// slightly indefinite Grams into a sound level correction.
struct Block {
  std::vector<Monomial> basis;
  Polynomial factor;
  double factor_sup = 1.0;
  int offset = 0;

  int n() const { return static_cast<int>(basis.size()); }
  int cols() const { return n() * (n() + 1) / 2; }
};

// Best iterate of one projection run, together with the sound correction
// (coefficient mismatch at sup one per monomial, plus eigenvalue slack per
// block) that its certified level has to pay.
struct Certificate {
  VectorXd g;
  std::vector<double> min_eigs;
  double residual_inf = 0.0;
  double backoff = kInfinity;
};

std::set<int> variables_of(const Polynomial& p) {
  std::set<int> vars;
  for (const auto& [mono, c] : p.terms())
    for (const auto& [var, exp] : mono.powers()) vars.insert(var);
  return vars;
}

// Symmetric blocks are stored svec-style (off-diagonals carry sqrt(2)) so
// the packed Euclidean metric equals the Frobenius metric: eigenvalue
// clamping and the least-squares coefficient match are then projections in
// the same inner product, which the splitting iteration requires.
const double kSqrt2 = std::sqrt(2.0);

MatrixXd unpack(const VectorXd& g, const Block& b) {
  MatrixXd S(b.n(), b.n());
  int k = b.offset;
  for (int a = 0; a < b.n(); ++a)
    for (int c = a; c < b.n(); ++c) {
      double val = (a == c) ? g(k) : g(k) / kSqrt2;
      S(a, c) = val;
      S(c, a) = val;
      ++k;
    }
  return S;
}

void pack(const MatrixXd& S, const Block& b, VectorXd& g) {
  int k = b.offset;
  for (int a = 0; a < b.n(); ++a)
    for (int c = a; c < b.n(); ++c) {
      double val = 0.5 * (S(a, c) + S(c, a));
      g(k++) = (a == c) ? val : kSqrt2 * val;
    }
}

// Drop main-basis monomials whose squared monomial no other product can
// reach: the matching row then forces that diagonal entry to zero, pinning
// every certificate to the PSD boundary and wrecking the projection rate.
// Control-affine objectives always trigger this on the pure input monomials.
void trim_main_basis(std::vector<Monomial>& basis,
                     const std::set<Monomial>& reachable_elsewhere) {
  bool removed = true;
  while (removed) {
    removed = false;
    std::map<Monomial, int> pair_count;
    for (size_t a = 0; a < basis.size(); ++a)
      for (size_t c = a; c < basis.size(); ++c)
        ++pair_count[basis[a] * basis[c]];
    for (size_t i = 0; i < basis.size(); ++i) {
      Monomial sq = basis[i] * basis[i];
      if (reachable_elsewhere.count(sq)) continue;
      if (pair_count[sq] > 1) continue;
      basis.erase(basis.begin() + static_cast<long>(i));
      removed = true;
      break;
    }
  }
}

constexpr int kStallWindow = 300;

}  // namespace

SegmentResult sci_sos(const Model& m, int subsystem, int segment,
                      const SosSettings& st, SosCertificate* certificate) {
  auto t0 = Clock::now();
  if (segment < 1 || segment > m.K)
    throw std::invalid_argument("sos engine: segment index out of range");
  if (st.multiplier_degree < 0 || st.multiplier_degree % 2 != 0)
    throw std::invalid_argument("sos engine: multiplier degree must be even");

  const double delta = m.segment_width();
  const double band_lo = (segment - 1) * delta;
  const double band_hi = segment * delta;
  const Polynomial obj0 = deviation_objective(m, subsystem);
  const Box box0 = joint_box(m);
  const int nv = m.nvars();

  std::set<int> pv = variables_of(obj0);
  for (int v : variables_of(m.h)) pv.insert(v);
  std::vector<int> pvars(pv.begin(), pv.end());

  // Rescale every program variable onto [-1,1]: conditions the projections
  // and makes every basis monomial's sup on the box exactly one.
  VectorXd shift = VectorXd::Zero(nv), scale = VectorXd::Ones(nv);
  for (int v : pvars) {
    shift(v) = 0.5 * (box0.lower(v) + box0.upper(v));
    scale(v) = 0.5 * (box0.upper(v) - box0.lower(v));
  }
  const Polynomial obj = substitute_affine(obj0, shift, scale);
  const Polynomial h = substitute_affine(m.h, shift, scale);

  const int md = st.multiplier_degree;
  int deg_e = std::max({obj.degree(), md + h.degree(), md + 1});
  if (deg_e % 2 != 0) ++deg_e;

  auto cpoly = [nv](double c) { return Polynomial::constant(nv, c); };
  std::vector<Block> blocks;
  blocks.push_back({monomial_basis(pvars, deg_e / 2), cpoly(1.0), 1.0});
  const auto mult_basis = monomial_basis(pvars, md / 2);
  blocks.push_back({mult_basis, cpoly(band_hi) - h, delta});
  blocks.push_back({mult_basis, h - cpoly(band_lo), delta});
  for (int v : pvars) {
    Polynomial xv = Polynomial::variable(nv, v);
    blocks.push_back({mult_basis, xv + cpoly(1.0), 2.0});
    blocks.push_back({mult_basis, cpoly(1.0) - xv, 2.0});
  }

  std::set<Monomial> reachable;
  reachable.insert(Monomial());
  for (const auto& [mono, coef] : obj.terms()) reachable.insert(mono);
  for (size_t b = 1; b < blocks.size(); ++b)
    for (int a = 0; a < blocks[b].n(); ++a)
      for (int c = a; c < blocks[b].n(); ++c) {
        Monomial prod = blocks[b].basis[a] * blocks[b].basis[c];
        for (const auto& [mono, coef] : blocks[b].factor.terms())
          reachable.insert(prod * mono);
      }
  trim_main_basis(blocks[0].basis, reachable);

  int total_cols = 0;
  for (Block& b : blocks) {
    b.offset = total_cols;
    total_cols += b.cols();
  }

  const auto row_monos = monomial_basis(pvars, deg_e);
  std::map<Monomial, int> row_of;
  for (size_t r = 0; r < row_monos.size(); ++r)
    row_of.emplace(row_monos[r], static_cast<int>(r));
  const int rows = static_cast<int>(row_monos.size());

  MatrixXd A = MatrixXd::Zero(rows, total_cols);
  for (const Block& b : blocks) {
    int col = b.offset;
    for (int a = 0; a < b.n(); ++a)
      for (int c = a; c < b.n(); ++c, ++col) {
        Polynomial prod(nv);
        prod.add_term(b.basis[a] * b.basis[c], 1.0);
        prod = prod * b.factor;
        double mult = (a == c) ? 1.0 : kSqrt2;
        for (const auto& [mono, coef] : prod.terms())
          A(row_of.at(mono), col) += mult * coef;
      }
  }

  VectorXd t_base = VectorXd::Zero(rows);
  for (const auto& [mono, coef] : obj.terms()) t_base(row_of.at(mono)) = coef;
  const int const_row = row_of.at(Monomial());

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);

  // Projection splitting between the affine coefficient-match space and the
  // product of PSD cones (reflect through the affine space, project onto the
  // cone, average). The affine shadow is the certificate candidate each
  // sweep; a level is accepted as soon as some shadow's sound correction
  // drops below backoff_tol, because boundary-exact feasibility only arrives
  // asymptotically.
  auto psd_project = [&](const VectorXd& v,
                         std::vector<Eigen::SelfAdjointEigenSolver<MatrixXd>>&
                             eigs) {
    VectorXd z = v;
    for (size_t b = 0; b < blocks.size(); ++b) {
      eigs[b].compute(unpack(v, blocks[b]));
      VectorXd lam = eigs[b].eigenvalues().cwiseMax(0.0);
      MatrixXd S = eigs[b].eigenvectors() * lam.asDiagonal() *
                   eigs[b].eigenvectors().transpose();
      pack(S, blocks[b], z);
    }
    return z;
  };

  auto attempt = [&](double level, VectorXd x, Certificate& out) -> bool {
    VectorXd t = t_base;
    t(const_row) -= level;
    out.backoff = kInfinity;
    int since_improve = 0;
    std::vector<Eigen::SelfAdjointEigenSolver<MatrixXd>> eigs(blocks.size());
    for (int it = 0; it < st.max_iterations; ++it) {
      VectorXd y = x - cod.solve(A * x - t);
      VectorXd r = A * y - t;
      double resid_inf = r.lpNorm<Eigen::Infinity>();
      double backoff = r.lpNorm<1>();
      std::vector<double> mineigs(blocks.size());
      for (size_t b = 0; b < blocks.size(); ++b) {
        eigs[b].compute(unpack(y, blocks[b]));
        mineigs[b] = eigs[b].eigenvalues()(0);
        backoff += std::max(0.0, -mineigs[b]) * blocks[b].n() *
                   blocks[b].factor_sup;
      }
      double improve_below =
          std::isfinite(out.backoff)
              ? out.backoff - std::max(1e-15, 1e-6 * out.backoff)
              : kInfinity;
      if (resid_inf <= st.feas_tol && backoff < improve_below) {
        out.g = y;
        out.min_eigs = mineigs;
        out.residual_inf = resid_inf;
        out.backoff = backoff;
        since_improve = 0;
      } else if (++since_improve >= kStallWindow) {
        break;
      }
      if (out.backoff <= st.backoff_tol) return true;
      x += psd_project(2.0 * y - x, eigs) - y;
    }
    return out.backoff <= st.backoff_tol;
  };

  SegmentResult res;
  res.engine = (md == 0 && deg_e == 2) ? "quadratic-exact" : "sos";

  // Band-restricted sampling in original coordinates: seeds the bisection
  // floor, then cross-checks the final certificate (a sound lower bound can
  // never beat a feasible sample).
  std::mt19937_64 rng(0x5eed0001u + 131 * subsystem + segment);
  double sampled_min = kInfinity;
  int found = 0;
  VectorXd z = box0.center();
  for (int s = 0; s < st.sample_check; ++s) {
    for (int v : pvars) {
      std::uniform_real_distribution<double> d(box0.lower(v), box0.upper(v));
      z(v) = d(rng);
    }
    double hv = m.h.eval(z);
    if (hv < band_lo || hv > band_hi) continue;
    ++found;
    sampled_min = std::min(sampled_min, obj0.eval(z));
  }

  Certificate cert;
  double level = 0.0;
  bool have = false;
  {
    Certificate c0;
    if (attempt(0.0, VectorXd::Zero(total_cols), c0)) {
      cert = std::move(c0);
      have = true;
    }
  }
  if (!have) {
    double lo = found > 0 ? sampled_min - 10.0 * std::abs(sampled_min)
                          : -(sup_abs_bound(
                                obj, Box(VectorXd::Constant(nv, -1.0),
                                         VectorXd::Constant(nv, 1.0))) +
                              1.0);
    Certificate cl;
    if (lo >= 0.0 || !attempt(lo, VectorXd::Zero(total_cols), cl)) {
      res.status = "NOT_CONVERGED";
      res.walltime = seconds_since(t0);
      return res;
    }
    cert = std::move(cl);
    level = lo;
    double hi = 0.0;
    VectorXd warm = cert.g;
    int steps = 0;
    while (hi - lo > st.bisect_tol && steps++ < 60) {
      double mid = 0.5 * (lo + hi);
      Certificate cm;
      if (attempt(mid, warm, cm)) {
        lo = mid;
        level = mid;
        cert = std::move(cm);
        warm = cert.g;
      } else {
        hi = mid;
      }
    }
  }

  double rho_cert = level - cert.backoff;

  // Independent cross-check: no feasible sample may undercut a sound bound.
  if (found > 0 && sampled_min < rho_cert - 1e-6) {
    res.status = "CERTIFICATE_REJECTED";
    res.rho = 0.0;
    res.margin = 0.0;
  } else {
    res.status = "ok";
    res.rho = rho_cert;
    res.margin = cert.backoff;
    if (certificate) {
      certificate->rho = rho_cert;
      certificate->multiplier_degrees = {md, md, md, md};
      certificate->gram.clear();
      for (const Block& b : blocks) certificate->gram.push_back(unpack(cert.g, b));
      certificate->residual = cert.residual_inf;
      certificate->min_eig =
          *std::min_element(cert.min_eigs.begin(), cert.min_eigs.end());
    }
  }
  res.walltime = seconds_since(t0);
  return res;
}

SciTable compute_sci_table(const Model& m, Engine engine,
                           const GridSettings& grid_settings,
                           const SosSettings& sos_settings) {
  SciTable table;
  table.delta = m.segment_width();
  table.rows.resize(m.N());
  for (int i = 0; i < m.N(); ++i) {
    for (int j = 1; j <= m.K; ++j) {
      SegmentResult r = (engine == Engine::grid)
                            ? sci_grid(m, i, j, grid_settings)
                            : sci_sos(m, i, j, sos_settings);
      if (engine == Engine::sos && r.status != "ok") {
        SegmentResult fb = sci_grid(m, i, j, grid_settings);
        fb.engine = "grid(fallback)";
        fb.walltime += r.walltime;
        r = fb;
      }
      table.rows[i].push_back(std::move(r));
    }
  }
  return table;
}

}  // namespace cps
