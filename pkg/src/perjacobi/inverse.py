"""Inverse spectral problems for the discrete Schrödinger case ``a = -1``.

Potentials are N-vectors ``(b_1, ..., b_N)``; as an operator the entry
``b_N`` sits at site 0 (``b(0) = b(N)``).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .cpoly import CPoly, RootSet, max_coeff_diff
from .floquet import fundamental_solutions, monodromy
from .operator import JacobiOperator

DEDUP_RADIUS = 1e-6
RESIDUAL_TOL = 1e-10
SINGULAR_RCOND = 1e-6
NEWTON_ITERS = 60
MAX_HALVINGS = 8
MAX_REFINEMENTS = 50
CHUNK = 4096

_EPS = np.finfo(float).eps


class InverseSolverError(RuntimeError):
    """No start converged to a solution."""


class InconsistentSpectraError(ValueError):
    """Two root sets do not come from one Schrödinger operator."""


def potential_to_operator(b):
    """Operator with ``a = -1`` and diagonal ``(b_N, b_1, ..., b_{N-1})``."""
    b = np.asarray(b, dtype=complex)
    return JacobiOperator(-np.ones(len(b)), np.roll(b, 1))


def operator_to_potential(op):
    return np.roll(op.b, -1)


def schrodinger_discriminant(b):
    """Discriminant of the operator ``a = -1`` with potential ``b_1 .. b_N``."""
    return monodromy(potential_to_operator(b)).delta


def _disc_and_jac(b):
    """Batched discriminant coefficients and their Jacobian.

    Runs ``w(n+1) = (b_n - λ) w(n) - w(n-1)`` for ``chi`` and ``gamma`` on
    coefficient arrays together with forward sensitivities.

    Parameters
    ----------
    b : ndarray, shape (S, N)

    Returns
    -------
    coeffs : ndarray, shape (S, N+1)
        Ascending coefficients of the discriminant.
    jac : ndarray, shape (S, N, N)
        ``jac[s, k, j] = d c_k / d b_{j+1}`` for ``k < N``.
    """
    S, N = b.shape
    D = N + 2
    chi_prev = np.zeros((S, D), complex)
    chi = np.zeros((S, D), complex)
    gam_prev = np.zeros((S, D), complex)
    gam = np.zeros((S, D), complex)
    chi_prev[:, 0] = 1
    gam[:, 0] = 1
    dchi_prev = np.zeros((S, N, D), complex)
    dchi = np.zeros((S, N, D), complex)
    dgam_prev = np.zeros((S, N, D), complex)
    dgam = np.zeros((S, N, D), complex)

    def step(wp, w, dwp, dw, n):
        bn = b[:, n - 1]
        lw = np.zeros_like(w)
        lw[:, 1:] = w[:, :-1]
        new = bn[:, None] * w - lw - wp
        ldw = np.zeros_like(dw)
        ldw[:, :, 1:] = dw[:, :, :-1]
        dnew = bn[:, None, None] * dw - ldw - dwp
        dnew[:, n - 1, :] += w
        return w, new, dw, dnew

    for n in range(1, N + 1):
        if n <= N - 1:
            chi_prev, chi, dchi_prev, dchi = step(chi_prev, chi, dchi_prev, dchi, n)
        gam_prev, gam, dgam_prev, dgam = step(gam_prev, gam, dgam_prev, dgam, n)
    delta = chi + gam
    ddelta = dchi + dgam
    return delta[:, : N + 1], ddelta[:, :, :N].transpose(0, 2, 1)


def discriminant_jacobian(b):
    """``J[k, j] = ∂c_k/∂b_{j+1}`` for the coefficients ``c_0 .. c_{N-1}``."""
    b = np.asarray(b, dtype=complex)[None, :]
    return _disc_and_jac(b)[1][0]


@dataclass(frozen=True)
class InverseProblem:
    """Find all potentials whose discriminant equals ``target``."""

    N: int
    target: CPoly

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("period must be at least 1")
        if self.target.degree != self.N:
            raise ValueError(f"target must have degree {self.N}")
        if self.target.leading != (-1) ** self.N:
            raise ValueError(f"target leading coefficient must be (-1)^N = {(-1) ** self.N}")

    @classmethod
    def from_dict(cls, d):
        try:
            N = int(d["N"])
            target = [complex(float(re), float(im)) for re, im in d["target"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed inverse problem: {exc}") from exc
        return cls(N, CPoly(target))


@dataclass
class InverseSolutionSet:
    """Distinct potentials solving an inverse problem.

    ``complete`` is a saturation heuristic: the second half of the starts
    found nothing new and the count does not exceed ``N!``.
    """

    solutions: list
    residuals: list
    complete: bool
    starts_used: int
    dedup_radius: float = DEDUP_RADIUS
    diagnostics: list = field(default_factory=list)

    def __len__(self):
        return len(self.solutions)

    def to_dict(self):
        return {
            "solutions": [[[float(z.real), float(z.imag)] for z in s] for s in self.solutions],
            "residuals": [float(r) for r in self.residuals],
            "complete": bool(self.complete),
            "starts_used": self.starts_used,
            "dedup_radius": self.dedup_radius,
        }

    def contains(self, b, tol=DEDUP_RADIUS):
        b = np.asarray(b, dtype=complex)
        return any(np.abs(s - b).max() <= tol for s in self.solutions)

    def orbits(self):
        """Group solutions into orbits of cyclic shifts and conjugation."""
        left = list(range(len(self.solutions)))
        groups = []
        while left:
            i = left.pop(0)
            s = self.solutions[i]
            images = [np.roll(s, k) for k in range(len(s))]
            images += [np.conj(x) for x in images]
            group = [i]
            for j in list(left):
                if any(np.abs(self.solutions[j] - x).max() <= self.dedup_radius for x in images):
                    group.append(j)
                    left.remove(j)
            groups.append(group)
        return groups


def _newton(b, target, iters):
    """Damped Newton on many starts at once.

    A step is accepted when it lowers the max-norm residual; otherwise it
    is halved up to ``MAX_HALVINGS`` times and the last trial is taken.
    """
    N = b.shape[1]

    def F(x):
        c, J = _disc_and_jac(x)
        return c[:, :N] - target[:N], J

    f, J = F(b)
    nf = np.abs(f).max(1)
    idx = np.arange(len(b))
    for _ in range(iters):
        try:
            step = np.linalg.solve(J, f[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = (np.linalg.pinv(J) @ f[..., None])[..., 0]
        t = 1.0
        bnew = b - step
        fc, _ = F(bnew)
        acc = np.abs(fc).max(1) < nf
        for _ in range(MAX_HALVINGS):
            rem = idx[~acc]
            if len(rem) == 0:
                break
            t /= 2
            cand = b[rem] - t * step[rem]
            fc, _ = F(cand)
            ok = np.abs(fc).max(1) < nf[rem]
            bnew[rem[ok]] = cand[ok]
            acc[rem[ok]] = True
            bnew[rem[~ok]] = cand[~ok]
        b = bnew
        f, J = F(b)
        nf = np.abs(f).max(1)
    return b, nf, J


def _mp_disc_jac(b, N):
    D = N + 2

    def zeros():
        return [mp.mpc(0)] * D

    chi_p, chi = zeros(), zeros()
    chi_p[0] = mp.mpc(1)
    gam_p, gam = zeros(), zeros()
    gam[0] = mp.mpc(1)
    dchi_p = [zeros() for _ in range(N)]
    dchi = [zeros() for _ in range(N)]
    dgam_p = [zeros() for _ in range(N)]
    dgam = [zeros() for _ in range(N)]

    def step(wp, w, dwp, dw, n):
        bn = b[n - 1]
        new = [bn * w[k] - (w[k - 1] if k else 0) - wp[k] for k in range(D)]
        dnew = [
            [
                bn * dw[j][k] - (dw[j][k - 1] if k else 0) - dwp[j][k] + (w[k] if j == n - 1 else 0)
                for k in range(D)
            ]
            for j in range(N)
        ]
        return w, new, dw, dnew

    for n in range(1, N + 1):
        if n <= N - 1:
            chi_p, chi, dchi_p, dchi = step(chi_p, chi, dchi_p, dchi, n)
        gam_p, gam, dgam_p, dgam = step(gam_p, gam, dgam_p, dgam, n)
    c = [chi[k] + gam[k] for k in range(N)]
    J = mp.matrix(N, N)
    for k in range(N):
        for j in range(N):
            J[k, j] = dchi[j][k] + dgam[j][k]
    return c, J


def _mp_refine(x, target, dps=60, iters=400):
    """Newton in extended precision, for roots where the Jacobian is singular.

    Double-precision Newton stalls at distance about ``eps^(1/N)`` from such
    roots; the extended run converges (linearly) to the root itself.
    """
    N = len(x)
    with mp.workdps(dps):
        b = [mp.mpc(complex(v)) for v in x]
        tg = [mp.mpc(complex(v)) for v in target[:N]]
        small = mp.mpf(10) ** (-(dps // 2))
        converged = False
        for _ in range(iters):
            c, J = _mp_disc_jac(b, N)
            f = mp.matrix([c[k] - tg[k] for k in range(N)])
            try:
                s = mp.lu_solve(J, f)
            except ZeroDivisionError:
                converged = mp.norm(f, mp.inf) < small
                break
            b = [b[j] - s[j] for j in range(N)]
            if mp.norm(s, mp.inf) < small:
                converged = True
                break
        return np.array([complex(v) for v in b]), converged


def _residuals(x, target):
    N = x.shape[1]
    c, _ = _disc_and_jac(x)
    return np.abs(c[:, :N] - target[:N]).max(1)


def _snap(x):
    x = np.array(x, dtype=complex)
    x.real[np.abs(x.real) < 1e-14] = 0.0
    x.imag[np.abs(x.imag) < 1e-14] = 0.0
    return x


def _leaders(points, radius):
    """Greedy clustering in lexicographic order.

    Returns leader indices and, for each point, the index of its leader.
    """
    n = len(points)
    owner = -np.ones(n, dtype=int)
    leaders = []
    for i in range(n):
        if owner[i] >= 0:
            continue
        d = np.abs(points - points[i]).max(1)
        m = (owner < 0) & (d <= radius)
        owner[m] = i
        leaders.append(i)
    return leaders, owner


def default_starts(N):
    return 200 * math.factorial(N)


def solve_inverse(problem, n_starts=None, seed=0, threads=1, newton_iters=NEWTON_ITERS):
    """All potentials with the prescribed discriminant, by multistart Newton.

    Starts are uniform in the complex disk of radius
    ``2 + max|c_k|^(1/N)``.  Converged points (residual <= 1e-10) with a
    well-conditioned Jacobian are deduplicated directly at radius 1e-6.
    Points next to a root with singular Jacobian are refined in extended
    precision and merged with every point within the stall distance.

    Raises
    ------
    InverseSolverError
        If no start converges.
    """
    N = problem.N
    target = problem.target.coeffs
    n_starts = default_starts(N) if n_starts is None else int(n_starts)
    if n_starts < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(seed)
    R = 2 + np.abs(target[:N]).max() ** (1.0 / N)
    starts = R * np.sqrt(rng.random((n_starts, N))) * np.exp(2j * np.pi * rng.random((n_starts, N)))

    chunks = [starts[i : i + CHUNK] for i in range(0, n_starts, CHUNK)]

    def run(chunk):
        return _newton(chunk.copy(), target, newton_iters)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    x = np.concatenate([r[0] for r in results])
    nf = np.concatenate([r[1] for r in results])
    J = np.concatenate([r[2] for r in results])

    ok = np.isfinite(nf) & (nf <= RESIDUAL_TOL)
    start_idx = np.flatnonzero(ok)
    x, nf, J = x[ok], nf[ok], J[ok]
    diagnostics = [f"{len(x)} of {n_starts} starts converged"]
    if len(x) == 0:
        raise InverseSolverError("no start converged; a solution always exists, so this is a solver failure")

    sv = np.linalg.svd(J, compute_uv=False)
    rc = sv[:, -1] / sv[:, 0]
    regular = rc >= SINGULAR_RCOND

    found = []  # (vector, first start index)

    xr, sr = x[regular], start_idx[regular]
    keys = []
    for j in range(N):
        keys += [xr[:, j].real, xr[:, j].imag]
    order = np.lexsort(keys[::-1])
    xr, sr = xr[order], sr[order]
    lead, owner = _leaders(xr, DEDUP_RADIUS)
    for i in lead:
        found.append((xr[i], int(sr[owner == i].min())))

    xs, ss, ns = x[~regular], start_idx[~regular], nf[~regular]
    if len(xs):
        order = np.argsort(ns, kind="stable")
        xs, ss = xs[order], ss[order]
        unassigned = np.ones(len(xs), dtype=bool)
        refined = 0
        stall = 20 * _EPS ** (1.0 / N)
        while unassigned.any() and refined < MAX_REFINEMENTS:
            i = int(np.argmax(unassigned))
            root, conv = _mp_refine(xs[i], target)
            refined += 1
            rho = stall * (1 + np.abs(root).max())
            members = unassigned & (np.abs(xs - root).max(1) <= rho)
            members[i] = True
            unassigned &= ~members
            if not conv:
                diagnostics.append("extended-precision refinement did not converge; cluster dropped")
                continue
            root = _snap(root)
            first = int(ss[members].min())
            hit = [k for k, (v, _) in enumerate(found) if np.abs(v - root).max() <= DEDUP_RADIUS]
            if hit:
                v, f0 = found[hit[0]]
                found[hit[0]] = (v, min(f0, first))
            else:
                found.append((root, first))
        if unassigned.any():
            diagnostics.append(f"{int(unassigned.sum())} near-singular points left unrefined (cap reached)")
        diagnostics.append(f"{refined} extended-precision refinements")

    if not found:
        raise InverseSolverError("no solution survived deduplication")
    sols = np.array([v for v, _ in found])
    res = _residuals(sols, target)
    keep = res <= RESIDUAL_TOL
    if not keep.all():
        diagnostics.append(f"{int((~keep).sum())} candidates rejected after polishing")
    firsts = np.array([f for _, f in found])[keep]
    sols, res = sols[keep], res[keep]
    keys = []
    for j in range(N):
        keys += [np.round(sols[:, j].real, 9), np.round(sols[:, j].imag, 9)]
    order = np.lexsort(keys[::-1])
    sols, res, firsts = sols[order], res[order], firsts[order]
    complete = bool(len(firsts) and firsts.max() < n_starts / 2 and len(sols) <= math.factorial(N))
    return InverseSolutionSet(
        solutions=[s for s in sols],
        residuals=[float(r) for r in res],
        complete=complete,
        starts_used=n_starts,
        diagnostics=diagnostics,
    )


def _sum_of_roots(p):
    if p.degree < 1:
        return 0j
    return -p.coeff(p.degree - 1) / p.leading


def two_spectra_reconstruct(zeros_n, zeros_n1, tol=1e-6):
    """Potential from the zeros of ``v(N; λ)`` and ``v(N+1; λ)``.

    With ``a = -1`` the polynomial ``v(n)`` has leading coefficient
    ``(-1)^(n-1)``, so both are rebuilt from their zeros.  Then
    ``b(n) = Σroots v(n+1) - Σroots v(n)`` and
    ``v(n-1) = (b(n) - λ) v(n) - v(n+1)`` for ``n = N .. 1``.

    Returns
    -------
    ndarray
        ``(b_1, ..., b_N)``.

    Raises
    ------
    InconsistentSpectraError
        If a back-substituted polynomial has the wrong degree.
    """
    mu = zeros_n.expanded() if isinstance(zeros_n, RootSet) else np.asarray(zeros_n, dtype=complex)
    nu = zeros_n1.expanded() if isinstance(zeros_n1, RootSet) else np.asarray(zeros_n1, dtype=complex)
    N = len(nu)
    if N < 1 or len(mu) != N - 1:
        raise ValueError("need N-1 zeros of v(N) and N zeros of v(N+1)")
    v_hi = CPoly.from_roots(nu, (-1.0) ** N)
    v_cur = CPoly.from_roots(mu, (-1.0) ** (N - 1))
    b = np.zeros(N, dtype=complex)
    lam = CPoly.identity()
    for n in range(N, 0, -1):
        b[n - 1] = _sum_of_roots(v_hi) - _sum_of_roots(v_cur)
        v_lo = (b[n - 1] - lam) * v_cur - v_hi
        scale = max(1.0, float(np.abs(v_hi.coeffs).max()))
        expected = n - 2
        c = np.array(v_lo.coeffs)
        if expected < 0:
            if len(c) and np.abs(c).max() > tol * scale:
                raise InconsistentSpectraError(f"v(0) should vanish but has size {np.abs(c).max():.3e}")
            break
        if len(c) > expected + 1 and np.abs(c[expected + 1 :]).max() > tol * scale:
            raise InconsistentSpectraError(f"v({n - 1}) has degree above {expected}")
        c = c[: expected + 1]
        lead = c[expected] if len(c) > expected else 0j
        if abs(lead - (-1) ** expected) > tol * scale:
            raise InconsistentSpectraError(
                f"v({n - 1}) has leading coefficient {complex(lead):.6g}, expected {(-1) ** expected}"
            )
        v_hi, v_cur = v_cur, CPoly(c)
    return b


def dirichlet_pair(b):
    """``v(N; λ)`` and ``v(N+1; λ)`` for the potential ``b_1 .. b_N``."""
    op = potential_to_operator(b)
    fs = fundamental_solutions(op)
    return fs.v[op.N], fs.v[op.N + 1]


@dataclass(frozen=True)
class AmbiguityReport:
    """Two period-4 potentials sharing their Dirichlet and Neumann-type data.

    ``shared`` lists the polynomials that agree for both signs; ``expected``
    is ``-λ³ + 3αλ² - (3α² - 7/2)λ + α³ - 7α/2``.
    """

    alpha: complex
    potentials: tuple
    expected: CPoly
    dirichlet: tuple
    neumann: tuple
    v4: tuple
    u5: tuple
    dirichlet_gap: float
    neumann_gap: float
    potentials_differ: bool

    @property
    def ok(self):
        return self.dirichlet_gap <= 1e-9 and self.neumann_gap <= 1e-9 and self.potentials_differ


def ambiguity_potentials(alpha):
    """Potentials ``b_1 .. b_4`` for the signs ``+1`` and ``-1``."""
    r2 = np.sqrt(2.0)
    out = []
    for sigma in (1, -1):
        hi = alpha + sigma * r2
        lo = alpha - sigma * r2 / 2
        out.append(np.array([hi, lo, lo, hi], dtype=complex))
    return tuple(out)


def ambiguity_demo(alpha):
    """Show that the sign of the potential is not recoverable from its data.

    For each sign the zero-boundary solution ``gamma(4; λ)`` (zero at sites
    0 and 4) and the solution ``chi(5; λ)`` are compared with the expected
    cubic; ``gamma(4) = -chi(5) =`` the cubic for both signs.
    """
    alpha = complex(alpha)
    expected = CPoly([alpha**3 - 3.5 * alpha, -(3 * alpha**2 - 3.5), 3 * alpha, -1.0])
    pots = ambiguity_potentials(alpha)
    fss = [fundamental_solutions(potential_to_operator(b)) for b in pots]
    dirichlet = tuple(fs.gamma[4] for fs in fss)
    neumann = tuple(fs.chi[5] for fs in fss)
    dgap = max(max_coeff_diff(p, expected) for p in dirichlet)
    ngap = max(max_coeff_diff(p, -expected) for p in neumann)
    differ = bool(np.all(np.abs(pots[0] - pots[1]) > 1e-12))
    return AmbiguityReport(
        alpha=alpha,
        potentials=pots,
        expected=expected,
        dirichlet=dirichlet,
        neumann=neumann,
        v4=tuple(fs.v[4] for fs in fss),
        u5=tuple(fs.u[5] for fs in fss),
        dirichlet_gap=dgap,
        neumann_gap=ngap,
        potentials_differ=differ,
    )
