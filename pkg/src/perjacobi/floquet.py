"""Fundamental solutions, monodromy matrix, discriminant and multipliers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpoly import CPoly, RootSet, max_coeff_diff, roots
from .operator import JacobiOperator

CROSS_CHECK_TOL = 1e-8
POLE_TOL = 1e-9


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class FloquetPoleError(ValueError):
    """The Floquet solution has a pole at a Dirichlet eigenvalue."""


class PolySequence:
    """Polynomials indexed by lattice site ``n = start .. start+len-1``."""

    def __init__(self, polys, start=-1):
        self._p = tuple(polys)
        self.start = start

    def __getitem__(self, n):
        i = n - self.start
        if not 0 <= i < len(self._p):
            raise IndexError(f"site {n} outside [{self.start}, {self.stop - 1}]")
        return self._p[i]

    @property
    def stop(self):
        return self.start + len(self._p)

    def sites(self):
        return range(self.start, self.stop)

    def __len__(self):
        return len(self._p)


@dataclass(frozen=True)
class FundamentalSolutions:
    """Solutions of ``L w = λ w`` as λ-polynomials on sites ``-1 .. N+1``.

    ``u(-1)=0, u(0)=1``; ``v(-1)=-1/a(-1), v(0)=0``; ``chi(0)=1, chi(1)=0``;
    ``gamma(0)=0, gamma(1)=1``.
    """

    op: JacobiOperator
    u: PolySequence
    v: PolySequence
    chi: PolySequence
    gamma: PolySequence


def _propagate(op, w_prev, w_cur, n_cur, n_last):
    """Run the recursion from sites (n_cur-1, n_cur) up to ``n_last``."""
    out = [w_prev, w_cur]
    for n in range(n_cur, n_last):
        w_next = (CPoly([-op.b_at(n), 1.0]) * out[-1] - op.a_at(n - 1) * out[-2]) / op.a_at(n)
        out.append(w_next)
    return out


def fundamental_solutions(op):
    """Fundamental solutions via ``w(n+1) = [(λ-b(n))w(n) - a(n-1)w(n-1)] / a(n)``."""
    N = op.N
    zero, one = CPoly(), CPoly([1.0])
    u = _propagate(op, zero, one, 0, N + 1)
    v = _propagate(op, CPoly([-1.0 / op.a_at(-1)]), zero, 0, N + 1)
    # chi and gamma start at sites 0, 1; site -1 follows from the equation at n = 0
    chi = _propagate(op, one, zero, 1, N + 1)
    gam = _propagate(op, zero, one, 1, N + 1)
    chi_m1 = CPoly([-op.b_at(0), 1.0]) / op.a_at(-1)
    gam_m1 = CPoly([-op.a_at(0) / op.a_at(-1)])
    return FundamentalSolutions(
        op=op,
        u=PolySequence(u, -1),
        v=PolySequence(v, -1),
        chi=PolySequence([chi_m1] + chi, -1),
        gamma=PolySequence([gam_m1] + gam, -1),
    )


def wronskian(fs, n):
    """``a(n)[u(n)v(n+1) - u(n+1)v(n)]``; identically 1."""
    a = fs.op.a_at(n)
    return a * (fs.u[n] * fs.v[n + 1] - fs.u[n + 1] * fs.v[n])


def chi_gamma_wronskian(fs, n):
    """``chi(n)gamma(n+1) - gamma(n)chi(n+1)``; identically ``a(0)/a(n)``."""
    return fs.chi[n] * fs.gamma[n + 1] - fs.gamma[n] * fs.chi[n + 1]


@dataclass(frozen=True)
class MonodromyData:
    """Monodromy matrix in the ``(u, v)`` basis and the discriminant."""

    op: JacobiOperator
    fs: FundamentalSolutions
    S: tuple
    delta: CPoly
    delta_squared_minus_4: CPoly

    def det_S(self):
        (s11, s12), (s21, s22) = self.S
        return s11 * s22 - s12 * s21

    def S_at(self, lam):
        return np.array([[p(lam) for p in row] for row in self.S], dtype=complex)

    @property
    def dirichlet(self):
        """``v(N; λ)``, whose zeros are the Dirichlet eigenvalues."""
        return self.fs.v[self.op.N]


def monodromy(op):
    """Monodromy matrix and discriminant, cross-checked in two bases.

    Raises
    ------
    ConsistencyError
        If ``u(N) - a(-1)v(N-1)`` and ``chi(N) + gamma(N+1)`` disagree.
    """
    N = op.N
    fs = fundamental_solutions(op)
    am1 = op.a_at(-1)
    S = (
        (fs.u[N], fs.v[N]),
        (-am1 * fs.u[N - 1], -am1 * fs.v[N - 1]),
    )
    delta = S[0][0] + S[1][1]
    delta_alt = fs.chi[N] + fs.gamma[N + 1]
    scale = max(1.0, float(np.abs(delta.coeffs).max()))
    gap = max_coeff_diff(delta, delta_alt)
    if gap > CROSS_CHECK_TOL * scale:
        raise ConsistencyError(f"discriminant forms disagree by {gap:.3e}")
    return MonodromyData(op, fs, S, delta, delta * delta - 4.0)


def unperturbed_discriminant(N):
    """Discriminant of the free operator from ``D_{k+1} = -λ D_k - D_{k-1}``."""
    if N < 1:
        raise ValueError("period must be at least 1")
    prev, cur = CPoly([2.0]), CPoly([0.0, -1.0])
    lam = CPoly.identity()
    for _ in range(N - 1):
        prev, cur = cur, -(lam * cur) - prev
    return cur


@dataclass(frozen=True)
class MultiplierPair:
    r1: complex
    r2: complex
    at: complex


def multipliers_at(md, lam):
    """Roots of ``r^2 - Δ(λ) r + 1`` ordered by modulus, then by argument."""
    d = complex(md.delta(lam))
    root = np.sqrt(d * d - 4 + 0j)
    r1 = (d + root) / 2 if abs(d + root) >= abs(d - root) else (d - root) / 2
    r2 = 1 / r1
    if abs(abs(r1) - abs(r2)) <= 1e-12 * max(1.0, abs(r1)) and np.angle(r2) > np.angle(r1):
        r1, r2 = r2, r1
    return MultiplierPair(complex(r1), complex(r2), complex(lam))


@dataclass(frozen=True)
class BranchPoints:
    """Odd-multiplicity zeros of ``Δ^2 - 4`` plus the full root lists."""

    points: RootSet
    periodic: RootSet
    antiperiodic: RootSet

    @property
    def all_roots(self):
        v = np.concatenate([self.periodic.values, self.antiperiodic.values])
        m = np.concatenate([self.periodic.multiplicities, self.antiperiodic.multiplicities])
        order = np.lexsort((np.round(v.imag, 9), np.round(v.real, 9)))
        res = max(self.periodic.residual, self.antiperiodic.residual)
        return RootSet(v[order], m[order], res)


def branch_points(md):
    """Branch points of the multiplier.

    ``Δ^2 - 4 = (Δ - 2)(Δ + 2)`` and the factors have no common zero, so
    the two factors are solved separately, which halves the multiplicities
    the root finder has to resolve.
    """
    per = roots(md.delta - 2.0)
    anti = roots(md.delta + 2.0)
    allr = BranchPoints(per, per, anti).all_roots
    odd = allr.multiplicities % 2 == 1
    pts = RootSet(allr.values[odd], allr.multiplicities[odd], allr.residual)
    return BranchPoints(pts, per, anti)


def scalar_solutions(op, lam, n_last):
    """``u(n; λ)`` and ``v(n; λ)`` at a number, for ``n = -1 .. n_last``."""
    lam = complex(lam)
    u = [0j, 1 + 0j]
    v = [-1 / op.a_at(-1), 0j]
    for n in range(n_last):
        for w in (u, v):
            w.append(((lam - op.b_at(n)) * w[-1] - op.a_at(n - 1) * w[-2]) / op.a_at(n))
    return np.array(u), np.array(v)


def floquet_solution_at(op, lam, branch=1):
    """Floquet solution ``φ(n; λ)`` for ``n = 0 .. 2N`` with ``φ(0) = 1``.

    Raises
    ------
    FloquetPoleError
        If ``λ`` is a Dirichlet eigenvalue (``v(N; λ) = 0``).
    """
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    N = op.N
    u, v = scalar_solutions(op, lam, 2 * N)
    uN, vN = u[N + 1], v[N + 1]
    if abs(vN) < POLE_TOL * (1 + abs(lam)) ** (N - 1):
        raise FloquetPoleError(
            f"pole of Floquet solution: λ = {complex(lam)} is a Dirichlet point (v(N; λ) = {vN:.3e})"
        )
    am1 = op.a_at(-1)
    delta = uN - am1 * v[N]
    pair = multipliers_at(_ScalarDelta(delta), lam)
    r = pair.r1 if branch == 1 else pair.r2
    coef = (uN - r) / vN
    phi1 = u[2] - coef * v[2]
    lam = complex(lam)
    phi = np.empty(2 * N + 2, dtype=complex)
    if abs(r) >= 1:
        phi[0], phi[1] = 1.0, phi1
        for n in range(1, 2 * N + 1):
            phi[n + 1] = ((lam - op.b_at(n)) * phi[n] - op.a_at(n - 1) * phi[n - 1]) / op.a_at(n)
    else:
        # the decaying solution is computed downwards, where it grows
        phi[2 * N], phi[2 * N + 1] = r * r, r * r * phi1
        for n in range(2 * N, 0, -1):
            phi[n - 1] = ((lam - op.b_at(n)) * phi[n] - op.a_at(n) * phi[n + 1]) / op.a_at(n - 1)
        phi /= phi[0]
    return phi[: 2 * N + 1]


class _ScalarDelta:
    # lets multipliers_at run on a precomputed Δ(λ)
    def __init__(self, value):
        self.delta = lambda lam: value
