#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fairlds::sdp {

/// Sparse affine form  sum_i coeff_i * y_i + constant.
struct LinearForm {
  std::map<int, double> terms;
  double constant = 0.0;

  LinearForm() = default;
  explicit LinearForm(double c) : constant(c) {}

  void add(int var, double coeff) {
    if (coeff == 0.0) return;
    auto [it, inserted] = terms.emplace(var, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0.0) terms.erase(it);
    }
  }
  double eval(const std::vector<double>& y) const {
    double v = constant;
    for (const auto& [i, c] : terms) v += c * y[i];
    return v;
  }
  bool operator==(const LinearForm& o) const {
    return constant == o.constant && terms == o.terms;
  }
  bool operator<(const LinearForm& o) const {
    if (constant != o.constant) return constant < o.constant;
    return terms < o.terms;
  }
};

/// Symbolic symmetric matrix; only the upper triangle (r <= c) is stored.
struct Block {
  int dim = 0;
  std::map<std::pair<int, int>, LinearForm> entries;

  void set(int r, int c, LinearForm f);
  /// Symmetric accessor; missing entries read as the zero form.
  const LinearForm& at(int r, int c) const;
};

/// A block-diagonal SDP over free scalar variables y:
///   minimize objective(y)  s.t.  every block is PSD at y,
///   every equality form evaluates to zero.
/// The moment assembler sets adjoint_pair to identify y_w with y_{w^dag};
/// pairs are solved as a single unknown and both entries of the returned
/// solution vector carry the shared value.
struct SdpInstance {
  int num_vars = 0;
  LinearForm objective;
  std::vector<Block> blocks;
  std::vector<LinearForm> equalities;  // form(y) == 0, rhs folded as constant
  std::vector<int> adjoint_pair;       // partner index; empty means identity

  int pair_of(int v) const {
    return adjoint_pair.empty() ? v : adjoint_pair[v];
  }
  void validate() const;  // dims, indices, pairing involution
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  MaxIterations,
  NumericalTrouble,
};

std::string to_string(SolveStatus s);

struct SolverConfig {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iters = 200;
  double step_fraction = 0.98;
  int verbose = 0;  // 1: one line per iteration on stderr
};

struct SdpSolution {
  std::vector<double> y;
  double objective = 0.0;
  SolveStatus status = SolveStatus::NumericalTrouble;
  int iterations = 0;
  double duality_gap = 0.0;      // relative
  double primal_residual = 0.0;  // worst block PSD violation
  double dual_residual = 0.0;
  double equality_residual = 0.0;
  double dual_objective = 0.0;
  /// (primal objective, dual bound) per iteration; the dual bound is
  /// primal - <X,Z>, so it never exceeds the primal value.
  std::vector<std::pair<double, double>> iterate_log;
};

/// Primal-dual path-following interior-point solve (Mehrotra
/// predictor-corrector, HKM direction). Deterministic for a fixed
/// instance and config.
SdpSolution solve(const SdpInstance& instance, const SolverConfig& config = {});

/// From-scratch feasibility check at a solution, independent of the
/// iteration internals: per-block minimum eigenvalues plus residuals.
struct CertifyReport {
  std::vector<double> block_min_eig;
  double equality_residual = 0.0;  // max |row(y)|
  double objective = 0.0;
};

CertifyReport certify(const SdpInstance& instance, const std::vector<double>& y);

/// Sparse text dump: one line per block nonzero (block row col var coeff)
/// plus objective and equality sections, deterministically ordered.
std::string dump(const SdpInstance& instance);

}  // namespace fairlds::sdp
