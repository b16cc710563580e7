"""Independent reference values for the C++ tests (numpy/scipy only).

Run: python3 tests/oracles/compute_oracles.py
Every printed constant is frozen into the matching test file.
"""
import itertools
import math

import numpy as np
from scipy import linalg, optimize

np.set_printoptions(precision=17)


def spin(two_j):
    j = two_j / 2
    m = np.array([j - k for k in range(two_j + 1)])
    sp = np.zeros((two_j + 1, two_j + 1))
    for k in range(1, two_j + 1):
        sp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    sx = (sp + sp.T) / 2
    sy = (sp - sp.T) / 2j
    return sx, sy, np.diag(m)


def opnorm(a):
    return np.linalg.svd(a, compute_uv=False)[0]


def out(name, value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
    print(f"{name} = {value!r}")


def fixed_matrix(dim):
    a = np.zeros((dim, dim), dtype=complex)
    for r in range(dim):
        for c in range(dim):
            a[r, c] = math.sin(r + 2 * c) + 0.5j * math.cos(3 * r - c)
    return a


def golden_max(f, lo=1e-6, hi=10.0):
    res = optimize.minimize_scalar(lambda e: -f(e), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    return res.x, f(res.x)


def gibbs1(psi, beta):
    w, v = np.linalg.eigh(psi)
    e = np.exp(-beta * (w - w.min()))
    e /= e.sum()
    return (v * e) @ v.conj().T


def eta_on(a, d, n, pos, rho):
    """Contract leg `pos` of an n-leg operator against rho."""
    t = a.reshape([d] * (2 * n))
    t = np.tensordot(t, rho, axes=([n + pos, pos], [0, 1]))
    rest = n - 1
    return t.reshape(d ** rest, d ** rest) if rest else t.reshape(1, 1)


print("# lattice / operators")
for delta in (0.3, 1.0, 2.0, -1.5):
    sx, sy, sz = spin(1)
    b = delta * (np.kron(sx, sx) + np.kron(sy, sy)) + np.kron(sz, sz)
    out(f"bond_norm_half_delta_{delta}", float(np.max(np.abs(np.linalg.eigvalsh(b)))))
sx, sy, sz = spin(2)
out("bond_norm_spin1_delta_0.5", float(np.max(np.abs(np.linalg.eigvalsh(
    0.5 * (np.kron(sx, sx) + np.kron(sy, sy)) + np.kron(sz, sz))))))
out("fixed_matrix_6_norm", float(opnorm(fixed_matrix(6))))
out("fixed_matrix_8_norm", float(opnorm(fixed_matrix(8))))

print("# norms")
eps = 0.607
out("ti_heis_nu1_half_eps_plus_log3", 3 * math.exp(eps) * 2 * 0.75)
out("ti_heis_nu2_spin1_J0.7_d0.5_eps0.4_plus_log3",
    3 * math.exp(0.4) * 4 * 0.7 * float(np.max(np.abs(np.linalg.eigvalsh(
        0.5 * (np.kron(sx, sx) + np.kron(sy, sy)) + np.kron(sz, sz))))))
out("ising_half_eps0.1_zeta0.2", 2 * math.exp(0.1 + 0.2 * 1.0) * 0.25)
out("chain5_center_eps0.5", 2 * math.exp(0.5) * 0.75)

print("# bounds")
obj = lambda e: e * math.exp(-e) / (1 + math.exp(e))
eb, peak = golden_max(obj)
out("eps_bar", eb)
out("objective_peak", peak)
out("target_at_1", 1 / (6 * (1 + math.e)))
out("heis_half_beta_at_0.5", 0.5 * math.exp(-0.5) / (27 * (1 + math.exp(0.5))))


def br645(two_j):
    d = two_j + 1
    j = two_j / 2
    return golden_max(lambda e: e * math.exp(-e) / (1 + math.exp(e) * d ** 3 / (2 * j)))


e645, v645 = br645(1)
out("br645_eps_half", e645)
s_half = 2 * 0.75
beta_ours = peak / (18 * s_half)
beta_br = v645 / (2 * 4 * s_half)
out("br645_ratio_half", beta_br / beta_ours)
out("br645_eps_j8", br645(16)[0])
e646, v646 = golden_max(lambda e: e * math.exp(-e) / (1 + 2 * 2 ** 4 * math.exp(e)))
out("br646_eps_half", e646)
out("br646_ratio_half", (v646 / (8 * 8)) / (peak / 36))


def ising_general(eps, B, J=1.0, j=0.5):
    target = eps / (6 * (1 + math.exp(eps)))
    g = lambda b: b * 2 * 3 * math.exp(eps) * math.exp(2 * b * 2 * B * j) * abs(J) * j * j - target
    return optimize.brentq(g, 0, 10, xtol=1e-15)


out("ising_general_eps0.6_B1", ising_general(0.6, 1.0))
out("ising_commuting_eps0.6", 0.6 / (6 * (1 + math.exp(0.6))) / (2 * 3 * math.exp(0.6) * 0.25))
out("fv_ratio_nu1", 18 * math.log1p(1 / (2 * math.exp(6))))
out("fv_beta_J1_d2_nu2_eps0.1", math.log1p(1 / (4 * math.exp(6.2))) / 2)
out("fv_sup", 9 / math.exp(6))
out("combined_hat_psi0", peak / 36)


def combined_hat(psi, J=1.0, nu=1, delta=1.0):
    m = J * max(abs(delta), 1)

    def beta_of(eps):
        target = eps / (6 * (1 + math.exp(eps)))
        g = lambda b: b * 2 * nu * 3 * math.exp(eps) * math.exp(2 * b * 2 * psi) * m - target
        return optimize.brentq(g, 0, 10, xtol=1e-15)

    return golden_max(beta_of)


out("combined_hat_psi0.5", combined_hat(0.5)[1])
out("classical_theorem_J1_nu1_d1", math.log(2) / 36)

print("# eta_free")
sx, sy, sz = spin(1)
I2 = np.eye(2)
A = np.kron(sx, sz) + 0.3 * np.kron(sz, I2) + 0.2 * np.kron(sx, sx) + 0.7 * np.kron(I2, sy)
rho0 = gibbs1(sz, 1.0)
rho1 = gibbs1(0.5 * sx - 0.3 * sz, 1.0)


def eta_site(a, site):
    rho = rho0 if site == 0 else rho1
    return eta_on(a, 2, 2, site, rho)


# A~_{0} = eta_1(A) - eta_{01}(A), A~_{01} = A - eta_1 A - eta_0 A + eta_01 A (embedded)
e1 = eta_site(A, 1)           # operator on site 0
e0 = eta_site(A, 0)           # operator on site 1
e01 = complex(np.trace(e0 @ rho1))
comp0 = np.kron(e1, I2) - e01 * np.eye(4)
comp1 = np.kron(I2, e0) - e01 * np.eye(4)
comp01 = A - np.kron(e1, I2) - np.kron(I2, e0) + e01 * np.eye(4)
out("decomp_empty", e01.real)
out("decomp_comp0_fro", float(np.linalg.norm(comp0)))
out("decomp_comp1_fro", float(np.linalg.norm(comp1)))
out("decomp_comp01_fro", float(np.linalg.norm(comp01)))

print("# quantum_lab")
out("sz_beta2", -math.tanh(1) / 2)


def chain_h(n, J, delta, two_j=1):
    sx, sy, sz = spin(two_j)
    d = two_j + 1
    h = np.zeros((d ** n, d ** n), dtype=complex)
    for k in range(n - 1):
        for s in (sx, sy, sz):
            coef = delta if s is not sz else 1.0
            ops = [np.eye(d)] * n
            ops[k] = s
            ops[k + 1] = s
            t = ops[0]
            for o in ops[1:]:
                t = np.kron(t, o)
            h -= J * coef * t
    return h


h3 = chain_h(3, 1.0, 0.5)
sx, sy, sz = spin(1)
obs = np.kron(np.kron(sz, sz), I2)
g = linalg.expm(-0.7 * h3)
out("chain3_zz01_beta0.7", float(np.real(np.trace(g @ obs) / np.trace(g))))
h2 = chain_h(2, 1.0, 1.0)
out("heis2_eigs", sorted(np.linalg.eigvalsh(h2).tolist()))

# lemma1 on a 3-site chain with fixed alpha
sites = [0, 1, 2]
alpha = {(0,): 0.3, (1,): 0.2, (0, 1): 0.5, (1, 2): 0.4, (0, 1, 2): 0.1}
regions = list(alpha)


def lhs(lam, n):
    total = 0.0
    for tup in itertools.product(regions, repeat=n):
        s = set(lam)
        ok = True
        for r in tup:
            if not s & set(r):
                ok = False
                break
            s |= set(r)
        if ok:
            total += math.prod(alpha[r] for r in tup)
    return total


def rhs(lam, n, eps):
    per = {x: sum(math.exp(eps * (len(r) - 1)) * v for r, v in alpha.items() if x in r) for x in sites}
    return math.factorial(n) * eps ** (-n) * math.exp(eps * len(lam)) * max(per.values()) ** n


out("lemma1_lhs_n2", lhs((0,), 2))
out("lemma1_rhs_n2_eps0.5", rhs((0,), 2, 0.5))
out("lemma1_lhs_n3_lam12", lhs((1, 2), 3))
out("lemma1_rhs_n3_lam12_eps0.7", rhs((1, 2), 3, 0.7))

print("# classical_lab")
out("langevin_beta1", -(1 / math.tanh(1) - 1))


def classical_bond_sup(J, delta, n=256):
    th = np.arccos(np.linspace(-1, 1, n))
    ph = np.linspace(0, 2 * np.pi, n, endpoint=False)
    T, P = np.meshgrid(th, ph)
    v = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3)
    M = np.diag([delta, delta, 1.0])
    # for fixed s1 the best s2 is M s1 / |M s1|
    return J * float(np.max(np.linalg.norm(v @ M, axis=1)))


out("classical_sup_J3_d0.5_grid256", classical_bond_sup(3, 0.5))


# <s1.s2> for the isotropic bond depends only on beta J: coth(bJ) - 1/(bJ)
out("classical_bond_corr_beta0.5", 1 / math.tanh(0.5) - 1 / 0.5)
