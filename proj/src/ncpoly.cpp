#include "fairlds/ncpoly.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fairlds {

std::string Monomial::str(const std::vector<std::string>& labels) const {
  if (word_.empty()) return "1";
  std::ostringstream os;
  for (size_t i = 0; i < word_.size(); ++i) {
    if (i) os << '.';
    int id = word_[i];
    if (id >= 0 && id < static_cast<int>(labels.size()))
      os << labels[id];
    else
      os << "X" << id;
  }
  return os.str();
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  std::vector<int> w;
  w.reserve(a.word().size() + b.word().size());
  w.insert(w.end(), a.word().begin(), a.word().end());
  w.insert(w.end(), b.word().begin(), b.word().end());
  return Monomial(std::move(w));
}

Polynomial::Polynomial(double c) { add_term(Monomial::identity(), c); }

Polynomial::Polynomial(const Monomial& m) { add_term(m, 1.0); }

Polynomial::Polynomial(const Monomial& m, double c) { add_term(m, c); }

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  if (terms_.empty()) return 0;
  // graded order: the last key has maximal degree
  return terms_.rbegin()->first.degree();
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

Polynomial Polynomial::adjoint() const {
  Polynomial r;
  for (const auto& [m, c] : terms_) r.add_term(m.adjoint(), c);
  return r;
}

Polynomial operator+(const Polynomial& p, const Polynomial& q) {
  Polynomial r = p;
  for (const auto& [m, c] : q.terms_) r.add_term(m, c);
  return r;
}

Polynomial operator-(const Polynomial& p, const Polynomial& q) {
  Polynomial r = p;
  for (const auto& [m, c] : q.terms_) r.add_term(m, -c);
  return r;
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  Polynomial r;
  for (const auto& [mp, cp] : p.terms_)
    for (const auto& [mq, cq] : q.terms_) r.add_term(mono_mul(mp, mq), cp * cq);
  return r;
}

Polynomial operator*(double s, const Polynomial& p) {
  Polynomial r;
  for (const auto& [m, c] : p.terms_) r.add_term(m, s * c);
  return r;
}

Polynomial operator-(const Polynomial& p) { return -1.0 * p; }

std::string Polynomial::str(const std::vector<std::string>& labels) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    first = false;
    double a = std::fabs(c);
    if (a != 1.0 || m.is_identity()) os << a;
    if (!m.is_identity()) {
      if (a != 1.0) os << "*";
      os << m.str(labels);
    }
  }
  return os.str();
}

}  // namespace fairlds
