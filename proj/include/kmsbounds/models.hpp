#pragma once

#include <cmath>
#include <functional>

#include "kmsbounds/interaction.hpp"

namespace kmsbounds {

using Coupling = std::function<double(const Site&, const Site&)>;

/// delta (S1 S1 + S2 S2) + S3 S3 on two sites.
inline Matrix heisenberg_bond_matrix(SpinRep rep, double delta) {
  const auto s = spin_matrix_set(rep);
  return delta * (kron(s[0], s[0]) + kron(s[1], s[1])) + kron(s[2], s[2]);
}

inline Matrix ising_bond_matrix(SpinRep rep) {
  const auto s = spin_matrix_set(rep);
  return kron(s[2], s[2]);
}

/// Anisotropic Heisenberg model: Phi_{x,y} = -J(x,y) (delta (S1S1 + S2S2) + S3S3)
/// on nearest-neighbour bonds of `window`; no single-site part.
inline InteractionFamily build_heisenberg(const Coupling& coupling, double delta, SpinRep rep,
                                          const Region& window) {
  InteractionFamily fam(rep.dim());
  const Matrix bond = heisenberg_bond_matrix(rep, delta);
  for (const auto& b : nearest_neighbor_bonds(window)) {
    const double j = coupling(b[0], b[1]);
    if (!std::isfinite(j)) throw invalid_argument_error("build_heisenberg: non-finite coupling");
    if (j == 0.0) continue;
    fam.add(LocalOperator(b, -j * bond, rep.dim()));
  }
  return fam;
}

inline InteractionFamily build_heisenberg(double coupling, double delta, SpinRep rep, const Region& window) {
  return build_heisenberg([coupling](const Site&, const Site&) { return coupling; }, delta, rep, window);
}

/// Ising model with staggered field: J S3S3 on bonds and (-1)^{d(x,0)} B S3 on sites.
inline InteractionFamily build_ising_staggered(double coupling, double field, SpinRep rep, const Region& window) {
  InteractionFamily fam(rep.dim());
  if (window.empty()) return fam;
  const Matrix bond = ising_bond_matrix(rep);
  const Matrix sz = spin_matrix_set(rep)[2];
  if (coupling != 0.0) {
    for (const auto& b : nearest_neighbor_bonds(window)) fam.add(LocalOperator(b, coupling * bond, rep.dim()));
  }
  if (field != 0.0) {
    const Site o = origin(window[0].dimension());
    for (const auto& x : window) {
      const double sign = graph_distance(x, o) % 2 == 0 ? 1.0 : -1.0;
      fam.add(LocalOperator(Region::single(x), sign * field * sz, rep.dim()));
    }
  }
  return fam;
}

/// Unit vector e_k in Z^nu.
inline Site unit_vector(int nu, int k) {
  Site s = origin(nu);
  s.coords[static_cast<std::size_t>(k)] = 1;
  return s;
}

inline TIInteractionSpec heisenberg_ti_spec(int nu, double coupling, double delta, SpinRep rep) {
  TIInteractionSpec spec;
  spec.nu = nu;
  const Matrix bond = heisenberg_bond_matrix(rep, delta);
  for (int k = 0; k < nu; ++k) {
    Region cell{origin(nu), unit_vector(nu, k)};
    spec.motifs.push_back(Motif{cell, LocalOperator(cell, bond, rep.dim()), std::nullopt, -coupling});
  }
  spec.validate();
  return spec;
}

inline TIInteractionSpec ising_staggered_ti_spec(int nu, double coupling, double field, SpinRep rep) {
  TIInteractionSpec spec;
  spec.nu = nu;
  const Matrix bond = ising_bond_matrix(rep);
  for (int k = 0; k < nu; ++k) {
    Region cell{origin(nu), unit_vector(nu, k)};
    spec.motifs.push_back(Motif{cell, LocalOperator(cell, bond, rep.dim()), std::nullopt, coupling});
  }
  spec.psi_site_norm = std::abs(field) * rep.j();
  spec.validate();
  return spec;
}

/// Classical Heisenberg bond -J(delta(s1s1' + s2s2') + s3s3') on S^2 x S^2 has sup-norm |J| max{|delta|,1}.
inline TIInteractionSpec classical_heisenberg_ti_spec(int nu, double coupling, double delta,
                                                      double psi_site_norm = 0.0) {
  TIInteractionSpec spec;
  spec.nu = nu;
  for (int k = 0; k < nu; ++k) {
    Region cell{origin(nu), unit_vector(nu, k)};
    spec.motifs.push_back(Motif{cell, std::nullopt, std::max(std::abs(delta), 1.0), coupling});
  }
  spec.psi_site_norm = psi_site_norm;
  spec.validate();
  return spec;
}

}  // namespace kmsbounds
