"""Spectra of periodic Jacobi operators.

Covers the spectrum as arcs in the complex plane, Floquet spectra and the
matrix ``M_κ``, periodic/antiperiodic eigenvalues and the double-period
matrix ``L_2N``, the Dirichlet spectrum with its trace formulas, Jordan
structure and coexistence, and the interval-spectrum classification.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cpoly import CPoly, RootSet, cluster_radius, interpolate, max_coeff_diff, roots
from .floquet import branch_points, monodromy, unperturbed_discriminant
from .operator import is_essentially_unperturbed

RANK_TOL = 1e-7
COEXISTENCE_TOL = 1e-7
PERIODIC_TOL = 1e-6
SEGMENT_TOL = 1e-4
TIE_TOL = 1e-9


@dataclass(frozen=True)
class EigenvalueFamily:
    """Eigenvalues of one kind.

    ``kind`` is ``"periodic"``, ``"antiperiodic"``, ``"dirichlet"`` or
    ``"floquet"`` (with ``kappa`` set).
    """

    kind: str
    values: RootSet
    kappa: float | None = None
    factored_residual: float | None = None

    def to_dict(self):
        d = {
            "kind": self.kind if self.kappa is None else f"floquet({self.kappa!r})",
            "values": [
                {"re": float(z.real), "im": float(z.imag), "mult": int(m)} for z, m in self.values
            ],
        }
        if self.factored_residual is not None:
            d["factored_residual"] = self.factored_residual
        return d


def floquet_spectrum(md, kappa):
    """Zeros of ``Δ(λ) - 2 cos κ`` for ``κ`` in ``[0, π]``."""
    if not -1e-12 <= kappa <= np.pi + 1e-12:
        raise ValueError(f"kappa must lie in [0, pi], got {kappa}")
    return EigenvalueFamily("floquet", roots(md.delta - 2 * np.cos(kappa)), kappa=float(kappa))


def periodic_eigenvalues(md):
    return EigenvalueFamily("periodic", roots(md.delta - 2.0))


def antiperiodic_eigenvalues(md):
    return EigenvalueFamily("antiperiodic", roots(md.delta + 2.0))


def exceptional_kappas(md, tol=1e-8):
    """Values of ``κ`` at which ``Δ - 2 cos κ`` has a multiple zero."""
    dd = md.delta.derivative()
    if dd.degree < 1:
        return []
    out = []
    for lam, _ in roots(dd):
        d = complex(md.delta(lam))
        if abs(d.imag) <= tol and -2 - tol <= d.real <= 2 + tol:
            k = float(np.arccos(np.clip(d.real / 2, -1.0, 1.0)))
            if all(abs(k - q) > 1e-9 for q in out):
                out.append(k)
    return sorted(out)


def _num(x):
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class Arc:
    arc_id: int
    kappa: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True)
class SpectrumArcs:
    """The spectrum as κ-parametrized polylines."""

    arcs: list
    exceptional_kappas: list
    diagnostics: list = field(default_factory=list)

    def points(self):
        if not self.arcs:
            return np.zeros(0, dtype=complex)
        return np.concatenate([a.lam for a in self.arcs])

    def to_csv(self):
        lines = ["kappa,re,im,arc_id"]
        for arc in self.arcs:
            for k, z in zip(arc.kappa, arc.lam):
                lines.append(f"{_num(k)},{_num(z.real)},{_num(z.imag)},{arc.arc_id}")
        return "\n".join(lines) + "\n"


def _kappa_grid(slices, special):
    grid = np.linspace(0.0, np.pi, slices)
    step = np.pi / max(slices - 1, 1)
    extra = []
    for ke in special:
        lo, hi = max(0.0, ke - np.pi / 256), min(np.pi, ke + np.pi / 256)
        extra.append(np.arange(lo, hi + step / 16, step / 8))
        extra.append([ke])
    grid = np.concatenate([grid] + [np.asarray(e, dtype=float) for e in extra])
    grid = np.unique(np.clip(grid, 0.0, np.pi))
    keep = np.concatenate([[True], np.diff(grid) > 1e-13])
    return grid[keep]


def _match(prev, cur, diagnostics, kappa):
    """Greedy nearest-neighbour assignment of ``cur`` to the order of ``prev``."""
    n = len(prev)
    d = np.abs(prev[:, None] - cur[None, :])
    out = np.empty(n, dtype=complex)
    free_p = np.ones(n, dtype=bool)
    free_c = np.ones(n, dtype=bool)
    for _ in range(n):
        sub = np.where(free_p[:, None] & free_c[None, :], d, np.inf)
        best = sub.min()
        i, j = np.unravel_index(np.argmin(sub), sub.shape)
        near = np.flatnonzero(sub[i] <= best + TIE_TOL)
        if len(near) > 1:
            near = sorted(near, key=lambda c: (cur[c].real, cur[c].imag))
            j = near[0]
            diagnostics.append(f"tie at kappa={kappa:.12g}: {len(near)} candidates, lexicographic choice")
        out[i] = cur[j]
        free_p[i] = False
        free_c[j] = False
    return out


def trace_spectrum(md, slices=512, threads=1):
    """Trace the spectrum as arcs over a κ grid of ``[0, π]``.

    The grid is refined eightfold within ``π/256`` of each exceptional κ,
    slices are linked by greedy nearest-neighbour matching, and arcs are
    split at exceptional κ where eigenvalues collide.
    """
    if slices < 2:
        raise ValueError("need at least two kappa slices")
    special = exceptional_kappas(md)
    grid = _kappa_grid(slices, special)

    def slice_roots(k):
        return roots(md.delta - 2 * np.cos(k)).expanded()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            layers = list(pool.map(slice_roots, grid))
    else:
        layers = [slice_roots(k) for k in grid]

    diagnostics = []
    arcs = []
    next_id = 0
    cur_k = [grid[0]]
    cur = [np.array(sorted(layers[0], key=lambda z: (z.real, z.imag)))]

    def flush():
        nonlocal next_id
        block = np.array(cur)
        ks = np.array(cur_k)
        for col in range(block.shape[1]):
            arcs.append(Arc(next_id, ks, block[:, col]))
            next_id += 1

    for idx in range(1, len(grid)):
        k = grid[idx]
        row = _match(cur[-1], layers[idx], diagnostics, k)
        cur.append(row)
        cur_k.append(k)
        if any(abs(k - ke) <= 1e-13 for ke in special) and idx < len(grid) - 1:
            flush()
            cur_k, cur = [k], [row]
    flush()
    return SpectrumArcs(arcs, special, diagnostics)


def floquet_matrix(op, kappa):
    """Matrix ``M_κ`` with ``det(M_κ - λI) = Δ(λ) - 2cos κ`` for a normalized operator.

    In general the determinant is ``(-1)^N prod(a) (Δ - 2cos κ)``.

    Neighbour couplings carry phases ``e^{±iκ/N}``; for ``N = 1, 2`` the
    corner and neighbour entries land on the same positions and add up.
    """
    N = op.N
    ph = np.exp(1j * kappa / N)
    M = np.zeros((N, N), dtype=complex)
    for n in range(N):
        M[n, n] += op.b[n]
        M[n, (n + 1) % N] += op.a[n] * ph
        M[(n + 1) % N, n] += op.a[n] / ph
    return M


def double_period_matrix(op):
    """Symmetric ``2N x 2N`` matrix of the operator on ``2N``-periodic sequences.

    Rows correspond to sites ``1 .. 2N``.  For a normalized operator
    ``det(L - λI) = Δ^2 - 4``; in general the factor ``prod(a)^2`` appears.
    """
    N = op.N
    size = 2 * N
    L = np.zeros((size, size), dtype=complex)
    for i in range(size):
        n = i + 1
        j = (i + 1) % size
        L[i, i] += op.b_at(n)
        L[i, j] += op.a_at(n)
        L[j, i] += op.a_at(n)
    return L


def characteristic_polynomial(A):
    """``det(A - λI)`` from LU determinants sampled on the unit circle."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    x = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
    eye = np.eye(n)
    y = [np.linalg.det(A - xi * eye) for xi in x]
    return interpolate(np.column_stack([x, y]), n)


@dataclass(frozen=True)
class JordanInfo:
    value: complex
    algebraic: int
    geometric: int
    generalized: int
    borderline: bool


def _rank(B, tol=RANK_TOL):
    s = np.linalg.svd(B, compute_uv=False)
    if s[0] == 0:
        return 0, False
    thr = tol * s[0]
    borderline = bool(np.any((s > thr / 10) & (s < thr * 10)))
    return int(np.sum(s > thr)), borderline


def jordan_structure(A, eigenvalues, tol=RANK_TOL):
    """Geometric multiplicity and generalized-eigenspace dimension per eigenvalue.

    Ranks are decided from singular values with threshold ``tol`` times the
    largest singular value; ``borderline`` flags a singular value within a
    factor 10 of the threshold.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    out = []
    for lam, m in eigenvalues:
        B = A - lam * np.eye(n)
        r1, b1 = _rank(B, tol)
        Bp = np.linalg.matrix_power(B, max(2, int(m)))
        r2, b2 = _rank(Bp, tol)
        out.append(JordanInfo(complex(lam), int(m), n - r1, n - r2, b1 or b2))
    return out


def is_diagonalizable(info):
    return all(j.geometric == j.algebraic for j in info)


@dataclass(frozen=True)
class EigenClassification:
    lam: complex
    multiplier: int
    structure: str
    branch_point: bool
    pathology_second_kind: bool
    S_deviation: float


def classify_eigenvalue(op, lam, md=None):
    """Coexistence or Jordan anomaly at a periodic/antiperiodic eigenvalue."""
    md = monodromy(op) if md is None else md
    d = complex(md.delta(lam))
    if abs(d - 2) <= PERIODIC_TOL:
        sign = 1
    elif abs(d + 2) <= PERIODIC_TOL:
        sign = -1
    else:
        raise ValueError(f"λ = {complex(lam)} is neither periodic nor antiperiodic (Δ = {d})")
    dev = float(np.abs(md.S_at(lam) - sign * np.eye(2)).max())
    structure = "coexistence" if dev <= COEXISTENCE_TOL else "jordan"
    rs = roots(md.delta - 2.0 * sign)
    i = int(np.argmin(np.abs(rs.values - lam)))
    branch = bool(rs.multiplicities[i] % 2 == 1)
    return EigenClassification(
        complex(lam), sign, structure, branch, structure == "jordan" and not branch, dev
    )


def dirichlet_spectrum(op, md=None):
    """Zeros of ``v(N; λ)`` and the residual of its factored form."""
    if op.N < 2:
        raise ValueError("the Dirichlet problem needs N >= 2")
    md = monodromy(op) if md is None else md
    vN = md.dirichlet
    rs = roots(vN)
    lead = 1.0 / np.prod(op.a)
    factored = CPoly.from_roots(rs.expanded(), lead)
    return EigenvalueFamily("dirichlet", rs, factored_residual=max_coeff_diff(vN, factored))


def dirichlet_interlacing(op, md=None):
    """True when real simple zeros of ``v(N)`` strictly interlace those of ``v(N+1)``."""
    md = monodromy(op) if md is None else md
    mu = roots(md.fs.v[op.N])
    nu = roots(md.fs.v[op.N + 1])
    if np.any(mu.multiplicities > 1) or np.any(nu.multiplicities > 1):
        return False
    if np.any(np.abs(mu.values.imag) > 1e-8) or np.any(np.abs(nu.values.imag) > 1e-8):
        return False
    m = np.sort(mu.values.real)
    v = np.sort(nu.values.real)
    return bool(np.all(v[:-1] < m) and np.all(m < v[1:]))


@dataclass(frozen=True)
class TraceReport:
    sum_dirichlet: complex
    sum_periodic_antiperiodic: complex
    residuals: dict

    def max_residual(self):
        return max(self.residuals.values())


def trace_identities(op, md=None):
    """Residuals of the trace formulas tying eigenvalue sums to ``b``."""
    if op.N < 2:
        raise ValueError("trace formulas need N >= 2")
    md = monodromy(op) if md is None else md
    N = op.N
    mu = roots(md.dirichlet).total()
    bp = branch_points(md)
    lam = bp.periodic.total() + bp.antiperiodic.total()
    B0N = complex(np.sum(op.b))
    b0 = complex(op.b[0])
    res = {
        "dirichlet_vs_b": abs(mu - complex(np.sum(op.b[1:N]))),
        "dirichlet_vs_mean": abs(mu - (B0N - b0)),
        "periodic_vs_mean": abs(lam - 2 * B0N),
        "periodic_vs_dirichlet": abs(lam - 2 * mu - 2 * b0),
    }
    return TraceReport(mu, lam, res)


@dataclass
class IntervalVerdict:
    verdict: str
    endpoints: tuple = ()
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def _segment_distance(z, p, q):
    d = q - p
    t = np.clip(((z - p) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (p + t * d))


def interval_spectrum_check(op, slices=256, md=None):
    """Check the consequences of the spectrum being a segment.

    With exactly two branch points ``η, θ`` the spectrum must be the segment
    joining them and ``((η-θ)/4)^N = ±1``; for ``{η, θ} = {-2, 2}`` the
    discriminant must be the free one and the first two coefficient
    moments are fixed.
    """
    md = monodromy(op) if md is None else md
    N = op.N
    pts = branch_points(md).points
    if pts.count != 2 or len(pts) != 2:
        return IntervalVerdict("not an interval", details={"branch_points": list(pts.expanded())})
    eta, theta = (complex(z) for z in pts.values)
    checks, details = {}, {}
    w = ((eta - theta) / 4) ** N
    details["endpoint_power"] = w
    checks["endpoint_power"] = min(abs(w - 1), abs(w + 1)) <= 1e-6
    checks["endpoint_distance"] = abs(abs(eta - theta) - 4) <= 1e-6
    arcs = trace_spectrum(md, slices)
    dist = float(_segment_distance(arcs.points(), eta, theta).max())
    details["max_distance_to_segment"] = dist
    checks["spectrum_on_segment"] = dist <= SEGMENT_TOL
    ends = sorted([eta, theta], key=lambda z: (z.real, z.imag))
    if abs(ends[0] + 2) <= 1e-6 and abs(ends[1] - 2) <= 1e-6:
        gap = max_coeff_diff(md.delta, unperturbed_discriminant(N))
        details["free_discriminant_gap"] = gap
        checks["free_discriminant"] = gap <= 1e-7
        B0 = complex(np.mean(op.b))
        checks["moment_mean"] = abs(B0 - (eta + theta) / 2) <= 1e-7
        b = op.b
        pair_sum = (np.sum(b) ** 2 - np.sum(b**2)) / 2
        lhs = pair_sum - np.sum(op.a**2)
        rhs = ((2 * N - 3) * N * (eta**2 + theta**2) + 2 * (2 * N - 1) * N * eta * theta) / 16
        details["moment_second"] = (complex(lhs), complex(rhs))
        checks["moment_second"] = abs(lhs - rhs) <= 1e-7 * max(1.0, abs(rhs))
    verdict = "interval" if all(checks.values()) else "inconsistent"
    return IntervalVerdict(verdict, (ends[0], ends[1]), checks, details)


@dataclass
class BorgClassification:
    outcome: str
    reason: str = ""
    diagonalizable: bool | None = None
    s: complex | None = None
    k: int | None = None
    s_squared_residual: float | None = None
    checks: dict = field(default_factory=dict)


def borg_classify(op, slices=256):
    """Classify an operator whose spectrum is ``[-2, 2]``.

    When ``L_2N`` is diagonalizable, ``b`` must vanish and ``a(n)^2`` must be
    ``1`` (odd N) or ``1 + (-1)^n s`` with ``s^2 = 1 - e^{2kπi/M}`` (N = 2M).
    Premises that fail give the outcome ``"hypothesis not met"``.
    """
    md = monodromy(op)
    iv = interval_spectrum_check(op, slices, md=md)
    if iv.verdict != "interval":
        return BorgClassification("hypothesis not met", f"interval check verdict: {iv.verdict}")
    lo, hi = iv.endpoints
    if abs(lo + 2) > 1e-6 or abs(hi - 2) > 1e-6:
        return BorgClassification("hypothesis not met", "spectrum is not [-2, 2]")
    L = double_period_matrix(op)
    info = jordan_structure(L, branch_points(md).all_roots)
    if not is_diagonalizable(info):
        return BorgClassification(
            "hypothesis not met", "double-period matrix is not diagonalizable", diagonalizable=False
        )
    N = op.N
    a2 = op.a**2
    checks = {"b_zero": bool(np.all(np.abs(op.b) <= 1e-7))}
    out = BorgClassification("classified", diagonalizable=True, checks=checks)
    if N % 2 == 1:
        checks["a_squared_one"] = bool(np.all(np.abs(a2 - 1) <= 1e-7))
        out.s, out.k = 0j, 0
    else:
        M = N // 2
        s = complex(a2[0] - 1)
        n = np.arange(N)
        checks["alternating_a_squared"] = bool(np.all(np.abs(a2 - (1 + (-1.0) ** n * s)) <= 1e-7))
        rho = 1 - s * s
        k = int(np.round(np.angle(rho) * M / (2 * np.pi))) % M
        out.s, out.k = s, k
        out.s_squared_residual = float(abs(rho - np.exp(2j * np.pi * k / M)))
        checks["s_squared_root_of_unity"] = out.s_squared_residual <= 1e-6
    if op.is_real(1e-12):
        checks["essentially_unperturbed"] = is_essentially_unperturbed(op, 1e-7)
    if not all(checks.values()):
        out.outcome = "violated"
    return out


def cluster_match(x, y, tol=1e-6):
    """Largest distance in a greedy one-to-one matching of two multisets."""
    x = list(np.asarray(x, dtype=complex))
    y = list(np.asarray(y, dtype=complex))
    if len(x) != len(y):
        return np.inf
    worst = 0.0
    for z in x:
        d = [abs(z - w) for w in y]
        i = int(np.argmin(d))
        worst = max(worst, d[i])
        y.pop(i)
    return worst


__all__ = [
    "Arc",
    "BorgClassification",
    "EigenClassification",
    "EigenvalueFamily",
    "IntervalVerdict",
    "JordanInfo",
    "SpectrumArcs",
    "TraceReport",
    "antiperiodic_eigenvalues",
    "borg_classify",
    "characteristic_polynomial",
    "classify_eigenvalue",
    "cluster_match",
    "cluster_radius",
    "dirichlet_interlacing",
    "dirichlet_spectrum",
    "double_period_matrix",
    "exceptional_kappas",
    "floquet_matrix",
    "floquet_spectrum",
    "interval_spectrum_check",
    "is_diagonalizable",
    "jordan_structure",
    "periodic_eigenvalues",
    "trace_identities",
    "trace_spectrum",
]
