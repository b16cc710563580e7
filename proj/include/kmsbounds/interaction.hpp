#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kmsbounds/operators.hpp"

namespace kmsbounds {

/// Finite family of self-adjoint potentials Lambda -> Phi_Lambda. Singleton
/// terms form the single-site part Psi, the rest the multilocal part Phibar.
class InteractionFamily {
 public:
  explicit InteractionFamily(int local_dim) : local_dim_(local_dim) {
    if (local_dim < 2) throw invalid_argument_error("InteractionFamily: local dimension must be >= 2");
  }

  /// Adds `term` to the potential of its region (terms on the same region accumulate).
  void add(const LocalOperator& term) {
    if (term.local_dim() != local_dim_) throw invalid_argument_error("InteractionFamily::add: local dimension mismatch");
    if (term.region().empty()) throw invalid_argument_error("InteractionFamily::add: Phi_empty must vanish");
    if (!term.is_hermitian()) throw not_hermitian_error("InteractionFamily::add: potential is not Hermitian");
    auto it = terms_.find(term.region());
    if (it == terms_.end()) {
      terms_.emplace(term.region(), term);
    } else {
      it->second = it->second + term;
    }
  }

  int local_dim() const { return local_dim_; }
  const std::map<Region, LocalOperator>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  LocalOperator psi(const Site& x) const {
    const Region r = Region::single(x);
    auto it = terms_.find(r);
    return it == terms_.end() ? LocalOperator::zero(r, local_dim_) : it->second;
  }

  LocalOperator phibar(const Region& r) const {
    if (r.size() >= 2) {
      auto it = terms_.find(r);
      if (it != terms_.end()) return it->second;
    }
    return LocalOperator::zero(r, local_dim_);
  }

  /// Multilocal terms (|Lambda| >= 2) in region order.
  std::vector<const LocalOperator*> multilocal_terms() const {
    std::vector<const LocalOperator*> out;
    for (const auto& [r, op] : terms_) {
      if (r.size() >= 2) out.push_back(&op);
    }
    return out;
  }

  std::vector<const LocalOperator*> single_site_terms() const {
    std::vector<const LocalOperator*> out;
    for (const auto& [r, op] : terms_) {
      if (r.size() == 1) out.push_back(&op);
    }
    return out;
  }

  Region support() const {
    Region s;
    for (const auto& [r, op] : terms_) s = s.unite(r);
    return s;
  }

  /// max over (Lambda, x) of ||[Phibar_Lambda, Psi_x]||.
  double max_psi_phibar_commutator() const {
    double worst = 0.0;
    for (const auto* phi : multilocal_terms()) {
      for (const auto* psi : single_site_terms()) {
        if (!phi->region().includes(psi->region())) continue;
        worst = std::max(worst, operator_norm(commutator(*phi, *psi).matrix()));
      }
    }
    return worst;
  }

  /// Family with every multilocal term scaled by c; single-site part untouched.
  InteractionFamily with_scaled_multilocal(double c) const {
    InteractionFamily out(local_dim_);
    for (const auto& [r, op] : terms_) out.add(r.size() >= 2 ? c * op : op);
    return out;
  }

 private:
  int local_dim_;
  std::map<Region, LocalOperator> terms_;
};

/// One translation class of potentials: `cell` contains the origin and is
/// repeated over Z^nu. The norm comes from `bond` or from `norm`; when both
/// are given they must agree.
struct Motif {
  Region cell;
  std::optional<LocalOperator> bond;
  std::optional<double> norm;
  double coefficient = 1.0;

  double weight() const {
    std::optional<double> from_bond;
    if (bond) from_bond = operator_norm(*bond);
    if (from_bond && norm && std::abs(*from_bond - *norm) > 1e-10 * std::max(1.0, *norm)) {
      throw invalid_argument_error("Motif: supplied norm disagrees with the bond operator norm");
    }
    if (!from_bond && !norm) throw invalid_argument_error("Motif: needs a bond operator or a norm");
    return std::abs(coefficient) * (from_bond ? *from_bond : *norm);
  }
};

/// Translation-invariant interaction on Z^nu, one motif per translation class.
/// `psi_site_norm` is the (site-independent) value of ||Psi_x||.
struct TIInteractionSpec {
  int nu = 1;
  std::vector<Motif> motifs;
  double psi_site_norm = 0.0;

  void validate() const {
    if (nu < 1) throw invalid_argument_error("TIInteractionSpec: nu must be >= 1");
    if (psi_site_norm < 0 || !std::isfinite(psi_site_norm)) {
      throw invalid_argument_error("TIInteractionSpec: psi_site_norm must be finite and >= 0");
    }
    const Site o = origin(nu);
    for (const auto& m : motifs) {
      if (!m.cell.contains(o)) throw invalid_argument_error("TIInteractionSpec: motif does not contain the origin");
      if (m.cell.size() < 2) throw invalid_argument_error("TIInteractionSpec: motifs must be multilocal");
      if (!std::isfinite(m.coefficient)) throw invalid_argument_error("TIInteractionSpec: non-finite coefficient");
    }
  }
};

}  // namespace kmsbounds
