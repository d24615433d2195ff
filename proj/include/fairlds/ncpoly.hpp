#pragma once

#include <map>
#include <string>
#include <vector>

namespace fairlds {

/// A bounded Hermitian operator variable. Ids are dense, assigned by the
/// problem that declares the symbol.
struct OperatorSymbol {
  int id = 0;
  std::string label;
  bool hermitian = true;
};

/// A word over operator-symbol ids; the empty word is the identity.
///
/// Every symbol in this artifact is Hermitian, so daggered letters collapse
/// and a word is its own canonical representative. The canonical order is
/// graded lexicographic: degree first, then the id sequence.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> word) : word_(std::move(word)) {}

  static Monomial identity() { return Monomial(); }
  static Monomial symbol(int id) { return Monomial(std::vector<int>{id}); }

  const std::vector<int>& word() const { return word_; }
  int degree() const { return static_cast<int>(word_.size()); }
  bool is_identity() const { return word_.empty(); }

  /// Word reversal: (x1 x2 ... xn)^dag = xn ... x2 x1 for Hermitian letters.
  Monomial adjoint() const {
    return Monomial(std::vector<int>(word_.rbegin(), word_.rend()));
  }

  bool operator==(const Monomial& o) const { return word_ == o.word_; }
  bool operator!=(const Monomial& o) const { return word_ != o.word_; }
  bool operator<(const Monomial& o) const {
    if (word_.size() != o.word_.size()) return word_.size() < o.word_.size();
    return word_ < o.word_;
  }

  std::string str(const std::vector<std::string>& labels) const;

 private:
  std::vector<int> word_;
};

/// Word concatenation; degrees add.
Monomial mono_mul(const Monomial& a, const Monomial& b);

/// Real-coefficient noncommutative polynomial as a canonical-monomial ->
/// coefficient map. Zero coefficients are never stored; values are
/// immutable once built (all operations return new polynomials).
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(double c);              // c * identity
  explicit Polynomial(const Monomial& m);     // 1 * m
  Polynomial(const Monomial& m, double c);

  static Polynomial zero() { return Polynomial(); }

  const std::map<Monomial, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;  // max term degree; 0 for the zero polynomial
  double coeff(const Monomial& m) const;

  Polynomial adjoint() const;  // term-wise adjoint

  friend Polynomial operator+(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator-(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(double s, const Polynomial& p);
  friend Polynomial operator-(const Polynomial& p);

  std::string str(const std::vector<std::string>& labels) const;

 private:
  void add_term(const Monomial& m, double c);
  std::map<Monomial, double> terms_;
};

inline Polynomial poly_symbol(int id) { return Polynomial(Monomial::symbol(id)); }

}  // namespace fairlds
