#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "kmsbounds/interaction.hpp"

namespace kmsbounds {

/// Weights of ||Phibar||_{eps,zeta}; zeta = 0 gives the plain eps-norm.
struct NormParams {
  double eps;
  double zeta = 0.0;

  void validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw invalid_argument_error("NormParams: eps must be > 0");
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw invalid_argument_error("NormParams: zeta must be >= 0");
  }
};

/// ||Psi||_X = sum_{x in X} ||Psi_x||.
inline double psi_norm_sum(const InteractionFamily& fam, const Region& x) {
  double s = 0.0;
  for (const auto& site : x) s += operator_norm(fam.psi(site));
  return s;
}

/// Finite-window norm: sup over interior sites, plus the sup over the
/// remaining (boundary) sites reported separately.
struct WindowNorm {
  double interior = 0.0;
  double boundary = 0.0;
  std::optional<Site> argmax;
};

/// Caches per-term operator norms so the weighted sum can be re-evaluated
/// cheaply over (eps, zeta) grids and inside root searches.
class NormEvaluator {
 public:
  explicit NormEvaluator(const InteractionFamily& fam, std::optional<Region> interior = std::nullopt) {
    const Region support = fam.support();
    sites_ = interior ? support.unite(*interior).sites() : support.sites();
    const Region all(sites_);
    interior_.assign(sites_.size(), !interior.has_value());
    if (interior) {
      for (const auto& s : *interior) interior_[*all.index_of(s)] = true;
    }
    for (const auto* op : fam.multilocal_terms()) {
      Term t;
      for (const auto& s : op->region()) t.sites.push_back(*all.index_of(s));
      t.size = op->region().size();
      t.norm = operator_norm(*op);
      t.psi_norm = psi_norm_sum(fam, op->region());
      if (t.norm > 0.0) terms_.push_back(std::move(t));
    }
  }

  bool has_multilocal() const { return !terms_.empty(); }

  WindowNorm evaluate(NormParams p) const {
    p.validate();
    std::vector<double> per_site(sites_.size(), 0.0);
    for (const auto& t : terms_) {
      const double w = std::exp(p.eps * static_cast<double>(t.size - 1) + p.zeta * t.psi_norm) * t.norm;
      for (auto i : t.sites) per_site[i] += w;
    }
    WindowNorm out;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (interior_[i]) {
        if (!out.argmax || per_site[i] > out.interior) {
          out.interior = per_site[i];
          out.argmax = sites_[i];
        }
      } else {
        out.boundary = std::max(out.boundary, per_site[i]);
      }
    }
    return out;
  }

  double value(NormParams p) const { return evaluate(p).interior; }

 private:
  struct Term {
    std::vector<std::size_t> sites;
    std::size_t size = 0;
    double norm = 0.0;
    double psi_norm = 0.0;
  };
  std::vector<Site> sites_;
  std::vector<bool> interior_;
  std::vector<Term> terms_;
};

/// ||Phibar||_{eps,zeta} over a finite family. An empty family gives 0.
inline WindowNorm norm_eps_zeta(const InteractionFamily& fam, NormParams p,
                                std::optional<Region> interior = std::nullopt) {
  return NormEvaluator(fam, std::move(interior)).evaluate(p);
}

/// Closed-form motif sum: each motif M has |M| translates containing a given site.
inline double norm_eps_zeta(const TIInteractionSpec& spec, NormParams p) {
  p.validate();
  spec.validate();
  double total = 0.0;
  for (const auto& m : spec.motifs) {
    const auto size = static_cast<double>(m.cell.size());
    total += size * std::exp(p.eps * (size - 1.0) + p.zeta * size * spec.psi_site_norm) * m.weight();
  }
  return total;
}

}  // namespace kmsbounds
