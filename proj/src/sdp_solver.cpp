#include "fairlds/sdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fairlds::sdp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void Block::set(int r, int c, LinearForm f) {
  if (r > c) std::swap(r, c);
  entries[{r, c}] = std::move(f);
}

const LinearForm& Block::at(int r, int c) const {
  static const LinearForm zero;
  if (r > c) std::swap(r, c);
  auto it = entries.find({r, c});
  return it == entries.end() ? zero : it->second;
}

void SdpInstance::validate() const {
  auto check_form = [&](const LinearForm& f) {
    for (const auto& [v, c] : f.terms) {
      (void)c;
      if (v < 0 || v >= num_vars) throw std::invalid_argument("sdp: variable index out of range");
    }
  };
  check_form(objective);
  for (const auto& b : blocks) {
    if (b.dim <= 0) throw std::invalid_argument("sdp: nonpositive block dimension");
    for (const auto& [rc, f] : b.entries) {
      if (rc.first > rc.second || rc.first < 0 || rc.second >= b.dim)
        throw std::invalid_argument("sdp: block entry out of range");
      check_form(f);
    }
  }
  for (const auto& e : equalities) check_form(e);
  if (!adjoint_pair.empty()) {
    if (static_cast<int>(adjoint_pair.size()) != num_vars)
      throw std::invalid_argument("sdp: adjoint_pair size mismatch");
    for (int i = 0; i < num_vars; ++i) {
      int p = adjoint_pair[i];
      if (p < 0 || p >= num_vars || adjoint_pair[p] != i)
        throw std::invalid_argument("sdp: adjoint_pair is not an involution");
    }
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalTrouble: return "NumericalTrouble";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reduction to standard primal form.
//
// The instance is an LMI over free scalars y. Internally we solve
//     min sum_b <C_b, X_b> + cfree'v + c0
//     s.t. sum_b <A_jb, X_b> + efree_j'v = d_j,   X_b PSD,  v free,
// where the X_b are the symbolic blocks themselves. Adjoint-paired moment
// variables are merged into one unknown first. Every merged variable whose
// first single-variable block entry is found becomes an affine function of
// that entry ("home"); remaining variables stay as free scalars. All other
// block entries, and the original equality rows, turn into equality
// constraints on (X, v). This keeps the Schur complement at the size of the
// constraint count rather than the moment count.
// ---------------------------------------------------------------------------

struct MatCoef {
  int blk, r, c;  // r <= c
  double w;       // contributes w * X(r,c); off-diagonals counted once
};

struct Reduction {
  std::vector<int> dims;
  std::vector<std::vector<std::pair<std::pair<int, int>, double>>> C;  // per block
  double c0 = 0.0;
  int nfree = 0;
  Eigen::VectorXd cfree;

  int m = 0;
  std::vector<std::vector<MatCoef>> rowmat;
  std::vector<std::vector<std::pair<int, double>>> rowfree;
  Eigen::VectorXd d;

  // back-map: variable -> class -> home
  struct Home {
    bool free = false;
    int blk = -1, r = -1, c = -1;
    double alpha = 1.0, gamma = 0.0;
    int free_idx = -1;
  };
  std::vector<int> cls;    // original var -> class
  std::vector<Home> home;  // per class
  double max_coeff = 0.0;
};

namespace {

struct ClassForm {
  std::map<int, double> terms;  // class -> coeff
  double constant = 0.0;
};

Reduction reduce(const SdpInstance& ins) {
  Reduction red;
  const int n = ins.num_vars;

  // adjoint-pair classes, numbered by first representative
  red.cls.assign(n, -1);
  int nclass = 0;
  for (int i = 0; i < n; ++i) {
    int rep = std::min(i, ins.pair_of(i));
    if (rep == i)
      red.cls[i] = nclass++;
    else
      red.cls[i] = red.cls[rep];
  }
  red.home.assign(nclass, {});

  auto rewrite = [&](const LinearForm& f) {
    ClassForm g;
    g.constant = f.constant;
    for (const auto& [v, c] : f.terms) {
      double& slot = g.terms[red.cls[v]];
      slot += c;
      if (slot == 0.0) g.terms.erase(red.cls[v]);
    }
    return g;
  };

  auto track = [&](double v) { red.max_coeff = std::max(red.max_coeff, std::fabs(v)); };

  // pass A: home = first single-variable entry of each class
  std::vector<char> homed(nclass, 0);
  for (size_t b = 0; b < ins.blocks.size(); ++b) {
    red.dims.push_back(ins.blocks[b].dim);
    for (const auto& [rc, f] : ins.blocks[b].entries) {
      ClassForm g = rewrite(f);
      if (g.terms.size() == 1) {
        int t = g.terms.begin()->first;
        if (!homed[t]) {
          homed[t] = 1;
          auto& h = red.home[t];
          h.free = false;
          h.blk = static_cast<int>(b);
          h.r = rc.first;
          h.c = rc.second;
          h.alpha = g.terms.begin()->second;
          h.gamma = g.constant;
        }
      }
    }
  }
  for (int t = 0; t < nclass; ++t) {
    if (!homed[t]) {
      red.home[t].free = true;
      red.home[t].free_idx = red.nfree++;
    }
  }

  // expand a class form into (matrix coefficients, free coefficients, moved constant)
  auto expand = [&](const ClassForm& g, std::map<std::tuple<int, int, int>, double>& mat,
                    std::map<int, double>& fr) {
    double shift = 0.0;  // sum of c * gamma/alpha to move to the rhs side
    for (const auto& [t, c] : g.terms) {
      const auto& h = red.home[t];
      if (h.free) {
        fr[h.free_idx] += c;
      } else {
        mat[{h.blk, h.r, h.c}] += c / h.alpha;
        shift += c * h.gamma / h.alpha;
      }
    }
    return shift;
  };

  auto push_row = [&](std::map<std::tuple<int, int, int>, double>& mat,
                      std::map<int, double>& fr, double rhs) {
    std::vector<MatCoef> mc;
    for (const auto& [k, w] : mat)
      if (w != 0.0) {
        mc.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), w});
        track(w);
      }
    std::vector<std::pair<int, double>> fc;
    for (const auto& [i, w] : fr)
      if (w != 0.0) {
        fc.push_back({i, w});
        track(w);
      }
    red.rowmat.push_back(std::move(mc));
    red.rowfree.push_back(std::move(fc));
    red.d.conservativeResize(red.m + 1);
    red.d[red.m] = rhs;
    track(rhs);
    ++red.m;
  };

  // pass B: every non-home position becomes an equality with X(r,c)
  for (size_t b = 0; b < ins.blocks.size(); ++b) {
    const Block& blk = ins.blocks[b];
    for (int r = 0; r < blk.dim; ++r) {
      for (int c = r; c < blk.dim; ++c) {
        auto it = blk.entries.find({r, c});
        if (it == blk.entries.end()) {
          // implicit zero entry: pin it
          std::map<std::tuple<int, int, int>, double> mat;
          std::map<int, double> fr;
          mat[{static_cast<int>(b), r, c}] += 1.0;
          push_row(mat, fr, 0.0);
          continue;
        }
        ClassForm g = rewrite(it->second);
        if (g.terms.size() == 1) {
          int t = g.terms.begin()->first;
          const auto& h = red.home[t];
          if (!h.free && h.blk == static_cast<int>(b) && h.r == r && h.c == c) continue;  // home
        }
        // X(r,c) - expand(form) = 0
        std::map<std::tuple<int, int, int>, double> mat;
        std::map<int, double> fr;
        mat[{static_cast<int>(b), r, c}] += 1.0;
        std::map<std::tuple<int, int, int>, double> matf;
        std::map<int, double> frf;
        double shift = expand(g, matf, frf);
        for (const auto& [k, w] : matf) mat[k] -= w;
        for (const auto& [i, w] : frf) fr[i] -= w;
        push_row(mat, fr, g.constant - shift);
      }
    }
  }

  // original equality rows: form(y) == 0
  for (const auto& e : ins.equalities) {
    ClassForm g = rewrite(e);
    std::map<std::tuple<int, int, int>, double> mat;
    std::map<int, double> fr;
    double shift = expand(g, mat, fr);
    push_row(mat, fr, -g.constant + shift);
  }

  // objective
  red.C.assign(ins.blocks.size(), {});
  red.cfree = Eigen::VectorXd::Zero(red.nfree);
  red.c0 = ins.objective.constant;
  {
    ClassForm g = rewrite(ins.objective);
    std::map<std::tuple<int, int, int>, double> mat;
    std::map<int, double> fr;
    double shift = expand(g, mat, fr);
    red.c0 -= shift;
    for (const auto& [k, w] : mat) {
      red.C[std::get<0>(k)].push_back({{std::get<1>(k), std::get<2>(k)}, w});
      track(w);
    }
    for (const auto& [i, w] : fr) {
      red.cfree[i] = w;
      track(w);
    }
  }

  for (const auto& b : ins.blocks)
    for (const auto& [rc, f] : b.entries) {
      (void)rc;
      track(f.constant);
      for (const auto& [v, c] : f.terms) (void)v, track(c);
    }

  return red;
}

// <A, M> where A is given by entry coefficients (w on (r,c), r<=c, counted
// once) and M is a possibly nonsymmetric dense matrix.
double coef_dot(const std::vector<MatCoef>& coefs, int blk,
                const std::vector<Eigen::MatrixXd>& M) {
  double s = 0.0;
  for (const auto& a : coefs) {
    if (a.blk != blk) continue;
    if (a.r == a.c)
      s += a.w * M[blk](a.r, a.c);
    else
      s += 0.5 * a.w * (M[blk](a.r, a.c) + M[blk](a.c, a.r));
  }
  return s;
}

double coef_dot_all(const std::vector<MatCoef>& coefs,
                    const std::vector<Eigen::MatrixXd>& M) {
  double s = 0.0;
  for (const auto& a : coefs) {
    if (a.r == a.c)
      s += a.w * M[a.blk](a.r, a.c);
    else
      s += 0.5 * a.w * (M[a.blk](a.r, a.c) + M[a.blk](a.c, a.r));
  }
  return s;
}

// dense symmetric matrix from entry coefficients
Eigen::MatrixXd coef_matrix(const std::vector<MatCoef>& coefs, int blk, int dim) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& a : coefs) {
    if (a.blk != blk) continue;
    if (a.r == a.c)
      A(a.r, a.r) += a.w;
    else {
      A(a.r, a.c) += 0.5 * a.w;
      A(a.c, a.r) += 0.5 * a.w;
    }
  }
  return A;
}

double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& dS) {
  // sup { a : S + a dS >= 0 } = -1/lambda_min(L^-1 dS L^-T) when negative
  Eigen::MatrixXd B = llt.matrixL().solve(dS);
  Eigen::MatrixXd W = llt.matrixL().solve(B.transpose());
  W = 0.5 * (W + W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return kInf;
  return -1.0 / lmin;
}

// least-squares path for instances without PSD blocks
SdpSolution solve_linear_only(const SdpInstance& ins, const Reduction& red,
                              const SolverConfig& cfg) {
  SdpSolution sol;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(red.m, red.nfree);
  for (int j = 0; j < red.m; ++j)
    for (const auto& [i, w] : red.rowfree[j]) E(j, i) = w;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(red.nfree);
  if (red.m > 0 && red.nfree > 0)
    v = E.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(red.d);
  double feas = red.m > 0 ? (E * v - red.d).lpNorm<Eigen::Infinity>() : 0.0;
  double scale = 1.0 + (red.m > 0 ? red.d.lpNorm<Eigen::Infinity>() : 0.0);

  sol.iterations = 0;
  if (feas > cfg.feas_tol * scale) {
    sol.status = SolveStatus::Infeasible;
  } else if (red.nfree > 0) {
    // bounded iff cfree is orthogonal to the null space of E
    Eigen::VectorXd proj = red.cfree;
    if (red.m > 0) {
      Eigen::VectorXd lam =
          E.transpose().bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(red.cfree);
      proj = red.cfree - E.transpose() * lam;
    }
    sol.status = proj.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + red.cfree.norm())
                     ? SolveStatus::Unbounded
                     : SolveStatus::Optimal;
  } else {
    sol.status = SolveStatus::Optimal;
  }

  sol.y.assign(ins.num_vars, 0.0);
  for (int i = 0; i < ins.num_vars; ++i) {
    const auto& h = red.home[red.cls[i]];
    if (h.free) sol.y[i] = v[h.free_idx];
  }
  sol.objective = ins.objective.eval(sol.y);
  sol.equality_residual = feas;
  sol.dual_objective = sol.objective;
  return sol;
}

}  // namespace

namespace {

double form_scale(const LinearForm& f) {
  double m = std::fabs(f.constant);
  for (const auto& [v, c] : f.terms) {
    (void)v;
    m = std::max(m, std::fabs(c));
  }
  return m;
}

void scale_form(LinearForm& f, double s) {
  f.constant *= s;
  for (auto& [v, c] : f.terms) {
    (void)v;
    c *= s;
  }
}

// equilibration: unit max coefficient per block, per equality row, and for
// the objective; PSD constraints and equations are invariant under positive
// scaling, so the y semantics are unchanged
double equilibrate(SdpInstance& ins) {
  for (auto& b : ins.blocks) {
    double m = 0.0;
    for (const auto& [rc, f] : b.entries) {
      (void)rc;
      m = std::max(m, form_scale(f));
    }
    if (m > 0.0)
      for (auto& [rc, f] : b.entries) {
        (void)rc;
        scale_form(f, 1.0 / m);
      }
  }
  for (auto& e : ins.equalities) {
    double m = form_scale(e);
    if (m > 0.0) scale_form(e, 1.0 / m);
  }
  double obj_scale = form_scale(ins.objective);
  if (obj_scale > 0.0) scale_form(ins.objective, 1.0 / obj_scale);
  return obj_scale > 0.0 ? obj_scale : 1.0;
}

}  // namespace

SdpSolution solve(const SdpInstance& original, const SolverConfig& cfg) {
  original.validate();
  SdpInstance ins = original;
  const double obj_scale = equilibrate(ins);
  Reduction red = reduce(ins);
  const int B = static_cast<int>(red.dims.size());
  const int m = red.m;
  const int f = red.nfree;

  if (B == 0) return solve_linear_only(original, red, cfg);

  SdpSolution sol;
  sol.status = SolveStatus::MaxIterations;

  if (m == 0 && f > 0 && red.cfree.lpNorm<Eigen::Infinity>() > 0.0) {
    // free scalars without any coupling row: cost ray
    sol.status = SolveStatus::Unbounded;
    sol.y.assign(ins.num_vars, 0.0);
    return sol;
  }

  const double tau = 1.0 + red.max_coeff;
  std::vector<Eigen::MatrixXd> X(B), Z(B), Cmat(B);
  double Nsum = 0;
  for (int b = 0; b < B; ++b) {
    X[b] = tau * Eigen::MatrixXd::Identity(red.dims[b], red.dims[b]);
    Z[b] = X[b];
    Nsum += red.dims[b];
    Cmat[b] = Eigen::MatrixXd::Zero(red.dims[b], red.dims[b]);
    for (const auto& [rc, w] : red.C[b]) {
      if (rc.first == rc.second)
        Cmat[b](rc.first, rc.first) += w;
      else {
        Cmat[b](rc.first, rc.second) += 0.5 * w;
        Cmat[b](rc.second, rc.first) += 0.5 * w;
      }
    }
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(f);

  Eigen::MatrixXd Ef = Eigen::MatrixXd::Zero(m, f);
  for (int j = 0; j < m; ++j)
    for (const auto& [i, w] : red.rowfree[j]) Ef(j, i) = w;

  const double dmax = m > 0 ? red.d.lpNorm<Eigen::Infinity>() : 0.0;
  const double scale0 = 1.0 + red.max_coeff + dmax;
  const double big = 1e9 * scale0;

  auto pobj_of = [&]() {
    double s = red.c0 + red.cfree.dot(v);
    for (int b = 0; b < B; ++b) s += (Cmat[b].array() * X[b].array()).sum();
    return s;
  };

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // factor Z, invert
    std::vector<Eigen::LLT<Eigen::MatrixXd>> Zllt(B);
    std::vector<Eigen::MatrixXd> Zinv(B);
    bool zfail = false;
    for (int b = 0; b < B; ++b) {
      Zllt[b].compute(Z[b]);
      if (Zllt[b].info() != Eigen::Success) { zfail = true; break; }
      Zinv[b] = Zllt[b].solve(Eigen::MatrixXd::Identity(red.dims[b], red.dims[b]));
    }
    if (zfail) { sol.status = SolveStatus::NumericalTrouble; break; }

    double gap = 0.0;
    for (int b = 0; b < B; ++b) gap += (X[b].array() * Z[b].array()).sum();
    double mu = gap / Nsum;

    // residuals
    Eigen::VectorXd rp(m);
    for (int j = 0; j < m; ++j)
      rp[j] = red.d[j] - coef_dot_all(red.rowmat[j], X) -
              (f > 0 ? Ef.row(j).dot(v) : 0.0);
    std::vector<Eigen::MatrixXd> Rd(B);
    for (int b = 0; b < B; ++b) Rd[b] = Cmat[b] - Z[b];
    for (int j = 0; j < m; ++j)
      for (const auto& a : red.rowmat[j]) {
        double w = a.r == a.c ? a.w : 0.5 * a.w;
        Rd[a.blk](a.r, a.c) -= u[j] * w;
        if (a.r != a.c) Rd[a.blk](a.c, a.r) -= u[j] * w;
      }
    // proximal term on the free scalars keeps flat optimal faces from
    // drifting; the bias it adds is far below the gap tolerance
    const double prox = 1e-10;
    Eigen::VectorXd rf = red.cfree;
    if (f > 0) rf += prox * v - Ef.transpose() * u;

    double pobj = pobj_of();
    double dobj = red.c0 + (m > 0 ? red.d.dot(u) : 0.0);
    double relgap = gap / (1.0 + std::fabs(pobj) + std::fabs(dobj));
    double rp_abs = m > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0;
    double rp_rel = rp_abs / (1.0 + dmax);
    double rd_abs = 0.0;
    for (int b = 0; b < B; ++b) rd_abs = std::max(rd_abs, Rd[b].lpNorm<Eigen::Infinity>());
    double rd_rel = rd_abs / (1.0 + red.max_coeff);
    double rf_abs = f > 0 ? rf.lpNorm<Eigen::Infinity>() : 0.0;
    double rf_rel = rf_abs / (1.0 + red.max_coeff);
    double xnorm = 0.0, znorm = 0.0;
    for (int b = 0; b < B; ++b) {
      xnorm = std::max(xnorm, X[b].lpNorm<Eigen::Infinity>());
      znorm = std::max(znorm, Z[b].lpNorm<Eigen::Infinity>());
    }

    if (!std::isfinite(pobj) || !std::isfinite(mu) || !std::isfinite(rp_abs)) {
      sol.status = SolveStatus::NumericalTrouble;
      break;
    }
    sol.iterate_log.push_back({pobj * obj_scale, (pobj - gap) * obj_scale});
    if (cfg.verbose)
      std::fprintf(stderr, "it %3d pobj % .9e dobj % .9e mu %.2e rp %.2e rd %.2e rf %.2e\n", it,
                   pobj, dobj, mu, rp_rel, rd_rel, rf_rel);

    if (relgap <= cfg.gap_tol && rp_rel <= cfg.feas_tol && rd_rel <= cfg.feas_tol &&
        rf_rel <= cfg.feas_tol) {
      sol.status = SolveStatus::Optimal;
      break;
    }
    // divergence heuristics: a dual ray (objective explodes while the dual
    // residual vanishes relative to the iterate) flags the primal side
    if (dobj > big && (rd_abs + rf_abs) / (1.0 + znorm) < 1e-8) {
      sol.status = SolveStatus::Infeasible;
      break;
    }
    if (pobj < -big && rp_abs / (1.0 + xnorm) < 1e-8) {
      sol.status = SolveStatus::Unbounded;
      break;
    }
    if (mu < 1e-14 * scale0 && (rp_rel > 1e-5 || rd_rel > 1e-5)) {
      sol.status = rp_rel > rd_rel ? SolveStatus::Infeasible : SolveStatus::NumericalTrouble;
      break;
    }

    // Schur complement H_jl = sum_b tr(A_j Zinv A_l X)
    std::vector<std::vector<Eigen::MatrixXd>> P(m);  // P[j][b] = Zinv A_j X (touched blocks)
    std::vector<std::vector<int>> touched(m);
    for (int j = 0; j < m; ++j) {
      std::vector<char> seen(B, 0);
      for (const auto& a : red.rowmat[j])
        if (!seen[a.blk]) { seen[a.blk] = 1; touched[j].push_back(a.blk); }
      P[j].resize(B);
      for (int b : touched[j]) {
        Eigen::MatrixXd A = coef_matrix(red.rowmat[j], b, red.dims[b]);
        P[j][b] = Zinv[b] * (A * X[b]);
      }
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      for (int l = 0; l < m; ++l) {
        double s = 0.0;
        for (int b : touched[j]) s += coef_dot(red.rowmat[l], b, P[j]);
        H(j, l) = s;
      }
    }
    H = 0.5 * (H + H.transpose()).eval();

    // factor with escalating diagonal regularization
    double hscale = 1.0 + H.diagonal().lpNorm<Eigen::Infinity>();
    Eigen::LLT<Eigen::MatrixXd> Hllt;
    double delta = 1e-12 * hscale;
    bool ok = false;
    for (; delta <= 1e-6 * hscale * 10.0; delta *= 10.0) {
      Eigen::MatrixXd Hr = H + delta * Eigen::MatrixXd::Identity(m, m);
      Hllt.compute(Hr);
      if (Hllt.info() == Eigen::Success) { ok = true; break; }
    }
    if (!ok && m > 0) { sol.status = SolveStatus::NumericalTrouble; break; }

    // refinement against the unregularized matrix recovers the digits the
    // diagonal shift takes away
    auto refined_solve = [](const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& b) {
      Eigen::VectorXd x = llt.solve(b);
      for (int r = 0; r < 2; ++r) x += llt.solve(b - A * x).eval();
      return x;
    };

    Eigen::MatrixXd HiEf, G;
    Eigen::LLT<Eigen::MatrixXd> Gllt;
    if (f > 0) {
      if (m > 0) {
        HiEf = Hllt.solve(Ef);
        for (int r = 0; r < 2; ++r) HiEf += Hllt.solve(Ef - H * HiEf).eval();
      } else {
        HiEf = Eigen::MatrixXd::Zero(0, f);
      }
      G = m > 0 ? Eigen::MatrixXd(Ef.transpose() * HiEf) : Eigen::MatrixXd::Zero(f, f);
      G += prox * Eigen::MatrixXd::Identity(f, f);
      double gscale = 1.0 + G.diagonal().lpNorm<Eigen::Infinity>();
      double dg = 1e-12 * gscale;
      bool gok = false;
      for (; dg <= 1e-5 * gscale * 10.0; dg *= 10.0) {
        Eigen::MatrixXd Gr = G + dg * Eigen::MatrixXd::Identity(f, f);
        Gllt.compute(Gr);
        if (Gllt.info() == Eigen::Success) { gok = true; break; }
      }
      if (!gok) { sol.status = SolveStatus::NumericalTrouble; break; }
    }

    // direction solve for a given (sigma, corrector K); returns steps too
    std::vector<Eigen::MatrixXd> dX(B), dZ(B);
    Eigen::VectorXd du(m), dv(f);
    auto direction = [&](double sigma, const std::vector<Eigen::MatrixXd>* K) {
      std::vector<Eigen::MatrixXd> Mc(B);
      for (int b = 0; b < B; ++b) {
        Mc[b] = sigma * mu * Zinv[b] - X[b] - X[b] * Rd[b] * Zinv[b];
        if (K) Mc[b] -= (*K)[b] * Zinv[b];
      }
      Eigen::VectorXd rhs(m);
      for (int j = 0; j < m; ++j) rhs[j] = rp[j] - coef_dot_all(red.rowmat[j], Mc);
      if (f > 0) {
        Eigen::VectorXd t = m > 0 ? Eigen::VectorXd(HiEf.transpose() * rhs)
                                  : Eigen::VectorXd::Zero(f);
        dv = refined_solve(Gllt, G, t - rf);
        if (m > 0) du = refined_solve(Hllt, H, rhs - Ef * dv);
      } else if (m > 0) {
        du = refined_solve(Hllt, H, rhs);
      }
      for (int b = 0; b < B; ++b) {
        Eigen::MatrixXd sumA = Eigen::MatrixXd::Zero(red.dims[b], red.dims[b]);
        for (int j = 0; j < m; ++j)
          for (const auto& a : red.rowmat[j]) {
            if (a.blk != b) continue;
            double w = a.r == a.c ? a.w : 0.5 * a.w;
            sumA(a.r, a.c) += du[j] * w;
            if (a.r != a.c) sumA(a.c, a.r) += du[j] * w;
          }
        dZ[b] = Rd[b] - sumA;
        dX[b] = Mc[b] + X[b] * sumA * Zinv[b];
        dX[b] = 0.5 * (dX[b] + dX[b].transpose()).eval();
      }
    };

    auto step_lengths = [&]() {
      double ap = kInf, ad = kInf;
      for (int b = 0; b < B; ++b) {
        Eigen::LLT<Eigen::MatrixXd> Xllt(X[b]);
        if (Xllt.info() != Eigen::Success) return std::pair<double, double>{0.0, 0.0};
        ap = std::min(ap, max_step(Xllt, dX[b]));
        ad = std::min(ad, max_step(Zllt[b], dZ[b]));
      }
      return std::pair<double, double>{ap, ad};
    };

    // predictor
    direction(0.0, nullptr);
    auto [ap_aff, ad_aff] = step_lengths();
    double ap = std::min(1.0, cfg.step_fraction * ap_aff);
    double ad = std::min(1.0, cfg.step_fraction * ad_aff);
    double gap_aff = 0.0;
    for (int b = 0; b < B; ++b)
      gap_aff += ((X[b] + ap * dX[b]).array() * (Z[b] + ad * dZ[b]).array()).sum();
    double mu_aff = std::max(gap_aff, 0.0) / Nsum;
    double sigma = std::pow(std::min(1.0, mu_aff / mu), 3.0);
    // keep the barrier up while feasibility lags the gap, otherwise the
    // Newton systems lose the digits needed to restore it; the Mehrotra
    // corrector belongs to the predictor's sigma, so a pure centering step
    // is taken instead when the safeguard overrides it
    double infeas = std::max(rp_rel, std::max(rd_rel, rf_rel));
    bool hold_barrier = false;
    if (infeas > cfg.feas_tol) {
      if (relgap <= infeas) {
        sigma = 1.0;
        hold_barrier = true;
      } else if (relgap <= 10.0 * infeas) {
        sigma = std::max(sigma, 0.5);
      }
    }

    // corrector
    std::vector<Eigen::MatrixXd> K(B);
    for (int b = 0; b < B; ++b) K[b] = dX[b] * dZ[b];
    direction(sigma, hold_barrier ? nullptr : &K);
    auto [ap2, ad2] = step_lengths();
    ap = std::min(1.0, cfg.step_fraction * ap2);
    ad = std::min(1.0, cfg.step_fraction * ad2);
    if (cfg.verbose)
      std::fprintf(stderr, "      sigma %.3g hold %d ap %.3g ad %.3g\n", sigma, int(hold_barrier),
                   ap, ad);
    if (ap <= 1e-12 && ad <= 1e-12) {
      sol.status = SolveStatus::NumericalTrouble;
      break;
    }

    for (int b = 0; b < B; ++b) {
      X[b] += ap * dX[b];
      Z[b] += ad * dZ[b];
      X[b] = 0.5 * (X[b] + X[b].transpose()).eval();
      Z[b] = 0.5 * (Z[b] + Z[b].transpose()).eval();
    }
    u += ad * du;
    if (f > 0) v += ap * dv;
  }
  sol.iterations = it;

  // map back to the original moment variables
  sol.y.assign(ins.num_vars, 0.0);
  for (int i = 0; i < ins.num_vars; ++i) {
    const auto& h = red.home[red.cls[i]];
    if (h.free)
      sol.y[i] = v[h.free_idx];
    else
      sol.y[i] = (X[h.blk](h.r, h.c) - h.gamma) / h.alpha;
  }
  sol.objective = original.objective.eval(sol.y);
  sol.dual_objective = (red.c0 + (m > 0 ? red.d.dot(u) : 0.0)) * obj_scale;
  {
    double gap = 0.0;
    for (int b = 0; b < B; ++b) gap += (X[b].array() * Z[b].array()).sum();
    gap *= obj_scale;
    sol.duality_gap =
        gap / (1.0 + std::fabs(sol.objective) + std::fabs(sol.dual_objective));
  }

  // public residuals re-evaluated from the symbolic instance at y
  CertifyReport rep = certify(original, sol.y);
  double worst = 0.0;
  for (double e : rep.block_min_eig) worst = std::max(worst, std::max(0.0, -e));
  sol.primal_residual = worst;
  sol.equality_residual = rep.equality_residual;
  {
    double rd_abs = 0.0;
    for (int b = 0; b < B; ++b) {
      Eigen::MatrixXd Rb = Cmat[b] - Z[b];
      for (int j = 0; j < m; ++j)
        for (const auto& a : red.rowmat[j]) {
          if (a.blk != b) continue;
          double w = a.r == a.c ? a.w : 0.5 * a.w;
          Rb(a.r, a.c) -= u[j] * w;
          if (a.r != a.c) Rb(a.c, a.r) -= u[j] * w;
        }
      rd_abs = std::max(rd_abs, Rb.lpNorm<Eigen::Infinity>());
    }
    sol.dual_residual = rd_abs / (1.0 + red.max_coeff);
  }
  return sol;
}

CertifyReport certify(const SdpInstance& ins, const std::vector<double>& y) {
  CertifyReport rep;
  for (const auto& b : ins.blocks) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(b.dim, b.dim);
    for (const auto& [rc, form] : b.entries) {
      double val = form.eval(y);
      S(rc.first, rc.second) = val;
      S(rc.second, rc.first) = val;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    rep.block_min_eig.push_back(b.dim > 0 ? es.eigenvalues().minCoeff() : 0.0);
  }
  double r = 0.0;
  for (const auto& e : ins.equalities) r = std::max(r, std::fabs(e.eval(y)));
  rep.equality_residual = r;
  rep.objective = ins.objective.eval(y);
  return rep;
}

std::string dump(const SdpInstance& ins) {
  std::ostringstream os;
  os << "sdp num_vars " << ins.num_vars << " blocks " << ins.blocks.size()
     << " equalities " << ins.equalities.size() << "\n";
  if (ins.objective.constant != 0.0)
    os << "objective const " << fmt(ins.objective.constant) << "\n";
  for (const auto& [v, c] : ins.objective.terms)
    os << "objective " << v << " " << fmt(c) << "\n";
  for (size_t b = 0; b < ins.blocks.size(); ++b) {
    os << "block " << b << " dim " << ins.blocks[b].dim << "\n";
    for (const auto& [rc, form] : ins.blocks[b].entries) {
      if (form.constant != 0.0)
        os << "entry " << b << " " << rc.first << " " << rc.second << " const "
           << fmt(form.constant) << "\n";
      for (const auto& [v, c] : form.terms)
        os << "entry " << b << " " << rc.first << " " << rc.second << " " << v << " "
           << fmt(c) << "\n";
    }
  }
  for (size_t j = 0; j < ins.equalities.size(); ++j) {
    const auto& e = ins.equalities[j];
    if (e.constant != 0.0) os << "equality " << j << " const " << fmt(e.constant) << "\n";
    for (const auto& [v, c] : e.terms)
      os << "equality " << j << " " << v << " " << fmt(c) << "\n";
  }
  return os.str();
}

}  // namespace fairlds::sdp
