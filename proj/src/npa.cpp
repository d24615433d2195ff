#include "fairlds/npa.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fairlds::npa {

void NcProblem::validate() const {
  std::set<int> ids;
  for (const auto& s : variables) {
    if (s.label.empty()) throw std::invalid_argument("nc problem: empty symbol label");
    if (!ids.insert(s.id).second)
      throw std::invalid_argument("nc problem: duplicate symbol id " + std::to_string(s.id));
  }
  auto check = [&](const Polynomial& p, const char* what) {
    for (const auto& [m, c] : p.terms()) {
      (void)c;
      for (int id : m.word())
        if (!ids.count(id))
          throw std::invalid_argument(std::string("nc problem: undeclared symbol in ") + what);
    }
  };
  check(objective, "objective");
  for (const auto& q : inequalities) check(q, "inequality");
  for (const auto& q : equalities) check(q, "equality");
}

namespace {

std::vector<Monomial> words_over(const std::vector<int>& alphabet, int k) {
  std::vector<Monomial> out;
  out.push_back(Monomial::identity());
  std::vector<Monomial> layer = out;
  for (int d = 1; d <= k; ++d) {
    std::vector<Monomial> next;
    next.reserve(layer.size() * alphabet.size());
    for (const auto& w : layer)
      for (int a : alphabet) next.push_back(mono_mul(w, Monomial::symbol(a)));
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Monomial> enumerate_basis(const std::vector<OperatorSymbol>& symbols, int k) {
  if (k < 0) throw std::invalid_argument("enumerate_basis: negative order");
  std::vector<int> alphabet;
  for (const auto& s : symbols) alphabet.push_back(s.id);
  std::sort(alphabet.begin(), alphabet.end());
  return words_over(alphabet, k);
}

Monomial moment_word(const Monomial& nu, const Monomial& omega) {
  return mono_mul(nu.adjoint(), omega);
}

MomentIndex MomentIndex::build(const std::vector<OperatorSymbol>& symbols, int order) {
  if (order < 1) throw std::invalid_argument("moment index: order must be >= 1");
  MomentIndex idx;
  idx.order = order;
  for (const auto& s : symbols) idx.alphabet.push_back(s.id);
  std::sort(idx.alphabet.begin(), idx.alphabet.end());
  idx.words = words_over(idx.alphabet, 2 * order);
  for (size_t i = 0; i < idx.words.size(); ++i)
    idx.position[idx.words[i]] = static_cast<int>(i);
  idx.adjoint_pair.resize(idx.words.size());
  for (size_t i = 0; i < idx.words.size(); ++i)
    idx.adjoint_pair[i] = idx.position.at(idx.words[i].adjoint());
  return idx;
}

int MomentIndex::at(const Monomial& m) const {
  auto it = position.find(m);
  if (it == position.end())
    throw std::out_of_range("moment index: word of degree " + std::to_string(m.degree()) +
                            " not covered at order " + std::to_string(order));
  return it->second;
}

std::vector<Monomial> MomentIndex::basis(int deg) const { return words_over(alphabet, deg); }

sdp::Block build_moment_matrix(const std::vector<Monomial>& basis, const MomentIndex& index) {
  sdp::Block block;
  block.dim = static_cast<int>(basis.size());
  for (int r = 0; r < block.dim; ++r) {
    for (int c = r; c < block.dim; ++c) {
      sdp::LinearForm f;
      f.add(index.at(moment_word(basis[r], basis[c])), 0.5);
      f.add(index.at(moment_word(basis[c], basis[r])), 0.5);
      block.set(r, c, std::move(f));
    }
  }
  return block;
}

sdp::Block build_localizing_matrix(const Polynomial& q, int k, const MomentIndex& index) {
  int d = (q.degree() + 1) / 2;
  if (q.degree() > 2 * k)
    throw std::invalid_argument("localising matrix: polynomial degree " +
                                std::to_string(q.degree()) + " exceeds 2k = " +
                                std::to_string(2 * k));
  std::vector<Monomial> basis = index.basis(k - d);
  sdp::Block block;
  block.dim = static_cast<int>(basis.size());
  for (int r = 0; r < block.dim; ++r) {
    for (int c = r; c < block.dim; ++c) {
      sdp::LinearForm f;
      for (const auto& [mu, coeff] : q.terms()) {
        f.add(index.at(mono_mul(mono_mul(basis[r].adjoint(), mu), basis[c])), 0.5 * coeff);
        f.add(index.at(mono_mul(mono_mul(basis[c].adjoint(), mu), basis[r])), 0.5 * coeff);
      }
      block.set(r, c, std::move(f));
    }
  }
  return block;
}

std::vector<sdp::LinearForm> build_equality_constraints(const Polynomial& q, int k,
                                                        const MomentIndex& index) {
  if (q.degree() > 2 * k)
    throw std::invalid_argument("equality rows: polynomial degree exceeds 2k");
  int budget = 2 * k - q.degree();
  std::vector<Monomial> left = index.basis(budget);
  std::vector<sdp::LinearForm> rows;
  std::set<sdp::LinearForm> seen;
  for (const auto& nu : left) {
    for (const auto& omega : left) {
      if (nu.degree() + omega.degree() > budget) continue;
      sdp::LinearForm row;
      for (const auto& [mu, coeff] : q.terms())
        row.add(index.at(mono_mul(mono_mul(nu.adjoint(), mu), omega)), coeff);
      if (row.terms.empty() && row.constant == 0.0) continue;
      if (seen.insert(row).second) rows.push_back(std::move(row));
    }
  }
  return rows;
}

Relaxation assemble(const NcProblem& problem, int k) {
  problem.validate();
  if (2 * k < problem.objective.degree())
    throw std::invalid_argument("relaxation order too low for objective of degree " +
                                std::to_string(problem.objective.degree()));
  for (size_t i = 0; i < problem.inequalities.size(); ++i)
    if (problem.inequalities[i].degree() > 2 * k)
      throw std::invalid_argument("relaxation order too low for inequality #" +
                                  std::to_string(i));
  for (size_t i = 0; i < problem.equalities.size(); ++i)
    if (problem.equalities[i].degree() > 2 * k)
      throw std::invalid_argument("relaxation order too low for equality #" +
                                  std::to_string(i));

  Relaxation rel;
  rel.index = MomentIndex::build(problem.variables, k);
  const MomentIndex& idx = rel.index;

  sdp::SdpInstance& ins = rel.instance;
  ins.num_vars = idx.size();
  ins.adjoint_pair = idx.adjoint_pair;

  ins.blocks.push_back(build_moment_matrix(idx.basis(k), idx));
  for (const auto& q : problem.inequalities)
    ins.blocks.push_back(build_localizing_matrix(q, k, idx));

  std::set<sdp::LinearForm> seen;
  for (const auto& q : problem.equalities) {
    for (auto& row : build_equality_constraints(q, k, idx))
      if (seen.insert(row).second) ins.equalities.push_back(std::move(row));
  }
  sdp::LinearForm unit;  // y_1 = 1
  unit.add(idx.at(Monomial::identity()), 1.0);
  unit.constant = -1.0;
  ins.equalities.push_back(std::move(unit));

  for (const auto& [m, c] : problem.objective.terms()) {
    if (m.is_identity()) {
      ins.objective.constant += c;
      continue;
    }
    ins.objective.add(idx.at(m), 0.5 * c);
    ins.objective.add(idx.at(m.adjoint()), 0.5 * c);
  }
  ins.validate();
  return rel;
}

std::map<int, double> extract_estimates(const sdp::SdpSolution& solution,
                                        const MomentIndex& index,
                                        const std::vector<OperatorSymbol>& variables) {
  if (solution.status != sdp::SolveStatus::Optimal)
    throw std::runtime_error("extract_estimates: solver status " +
                             sdp::to_string(solution.status));
  std::map<int, double> est;
  for (const auto& s : variables)
    est[s.id] = solution.y[index.at(Monomial::symbol(s.id))];
  return est;
}

void eval_moment_matrix(const std::vector<double>& y, const MomentIndex& index, int j,
                        std::vector<double>& out, int& dim) {
  std::vector<Monomial> basis = index.basis(j);
  dim = static_cast<int>(basis.size());
  out.assign(static_cast<size_t>(dim) * dim, 0.0);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      double v = 0.5 * (y[index.at(moment_word(basis[r], basis[c]))] +
                        y[index.at(moment_word(basis[c], basis[r]))]);
      out[static_cast<size_t>(r) * dim + c] = v;
    }
  }
}

namespace {
int numeric_rank(const std::vector<double>& m, int dim, double tol) {
  Eigen::MatrixXd M(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) M(r, c) = m[static_cast<size_t>(r) * dim + c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double smax = sv.maxCoeff();
  if (smax == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * smax) ++rank;
  return rank;
}
}  // namespace

bool rank_loop_flag(const std::vector<double>& y, const MomentIndex& index, int k, int d,
                    double tol) {
  if (d < 0 || k - d < 0) throw std::invalid_argument("rank loop: invalid orders");
  std::vector<double> mk, ms;
  int dk = 0, dsub = 0;
  eval_moment_matrix(y, index, k, mk, dk);
  eval_moment_matrix(y, index, k - d, ms, dsub);
  return numeric_rank(mk, dk, tol) == numeric_rank(ms, dsub, tol);
}

}  // namespace fairlds::npa
