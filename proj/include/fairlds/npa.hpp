#pragma once

#include <map>
#include <vector>

#include "fairlds/ncpoly.hpp"
#include "fairlds/sdp.hpp"

namespace fairlds::npa {

/// One operator-valued optimisation problem instance: minimize the
/// objective over bounded Hermitian operators subject to q(X) >= 0 for
/// every inequality and q(X) == 0 for every equality.
struct NcProblem {
  std::vector<OperatorSymbol> variables;
  Polynomial objective;
  std::vector<Polynomial> inequalities;
  std::vector<Polynomial> equalities;

  void validate() const;
};

/// Bijection between canonical words of degree <= 2k and dense moment
/// indices. Index 0 is the identity word (y_1).
struct MomentIndex {
  int order = 0;
  std::vector<int> alphabet;  // symbol ids, ascending
  std::vector<Monomial> words;
  std::map<Monomial, int> position;
  std::vector<int> adjoint_pair;

  static MomentIndex build(const std::vector<OperatorSymbol>& symbols, int order);

  int size() const { return static_cast<int>(words.size()); }
  int at(const Monomial& m) const;
  /// All canonical words of degree <= deg over the alphabet, canonical order.
  std::vector<Monomial> basis(int deg) const;
};

/// All canonical words of degree <= k, in canonical (graded lex) order;
/// size is sum_{i=0..k} n^i for n Hermitian symbols.
std::vector<Monomial> enumerate_basis(const std::vector<OperatorSymbol>& symbols, int k);

/// The moment indexed by a moment-matrix position: canonical(adjoint(nu) * omega).
Monomial moment_word(const Monomial& nu, const Monomial& omega);

/// Symbolic moment matrix over the given basis. Entry (nu, omega) carries
/// the shared symmetric representation  (y_{nu^dag omega} + y_{omega^dag nu})/2,
/// which makes the block exactly symmetric as a symbolic object.
sdp::Block build_moment_matrix(const std::vector<Monomial>& basis, const MomentIndex& index);

/// Localising matrix M_{k-d}(q y) with d = ceil(deg(q)/2); entries are the
/// symmetrized forms of sum_mu q_mu y_{nu^dag mu omega}. Throws if
/// deg(q) > 2k.
sdp::Block build_localizing_matrix(const Polynomial& q, int k, const MomentIndex& index);

/// Linear moment rows y(nu^dag q omega) = 0 for all pairs with
/// deg(nu) + deg(q) + deg(omega) <= 2k, duplicates removed.
std::vector<sdp::LinearForm> build_equality_constraints(const Polynomial& q, int k,
                                                        const MomentIndex& index);

struct Relaxation {
  sdp::SdpInstance instance;
  MomentIndex index;
};

/// Order-k moment relaxation: one moment block, one localising block per
/// inequality, equality rows per equality polynomial plus y_1 = 1, and the
/// objective vector from the objective coefficients (adjoint-symmetrized).
Relaxation assemble(const NcProblem& problem, int k);

/// Degree-1 moment readout; requires an Optimal solution.
std::map<int, double> extract_estimates(const sdp::SdpSolution& solution,
                                        const MomentIndex& index,
                                        const std::vector<OperatorSymbol>& variables);

/// Numeric moment matrix M_j(y) over the order-j basis.
void eval_moment_matrix(const std::vector<double>& y, const MomentIndex& index, int j,
                        std::vector<double>& out, int& dim);

/// True iff numerical rank of M_k equals that of M_{k-d} at tolerance tol
/// (singular values below tol * sigma_max count as zero).
bool rank_loop_flag(const std::vector<double>& y, const MomentIndex& index, int k, int d,
                    double tol);

}  // namespace fairlds::npa
