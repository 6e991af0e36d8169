"""Toda flow on the squared off-diagonal ``c = a^2`` and the diagonal ``b``.

    c_n' = 2 c_n (b_{n+1} - b_n),    b_n' = 2 (c_n - c_{n-1})

The flow is isospectral: the discriminant is a constant of motion.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .cpoly import max_coeff_diff, roots
from .floquet import fundamental_solutions, monodromy
from .operator import JacobiOperator

COLLAPSE_TOL = 1e-12
COLLISION_TOL = 1e-4
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class TodaState:
    t: float
    c: np.ndarray
    b: np.ndarray


@dataclass
class TodaTrajectory:
    """Saved states of an RK4 run.

    ``reference_product`` is ``prod a`` of the initial operator; it is a
    flow invariant and fixes the overall sign when ``a`` is rebuilt from ``c``.
    """

    states: list
    h: float
    discriminant_drift: float
    reference_product: complex
    aborted: bool = False
    diagnostic: str = ""

    @property
    def times(self):
        return np.array([s.t for s in self.states])


def toda_rhs(state):
    """``(c', b')`` at a state, indices read modulo N."""
    c, b = state.c, state.b
    return 2 * c * (np.roll(b, -1) - b), 2 * (c - np.roll(c, 1))


def _rhs(c, b):
    return 2 * c * (np.roll(b, -1) - b), 2 * (c - np.roll(c, 1))


def _rk4(c, b, h):
    k1 = _rhs(c, b)
    k2 = _rhs(c + h / 2 * k1[0], b + h / 2 * k1[1])
    k3 = _rhs(c + h / 2 * k2[0], b + h / 2 * k2[1])
    k4 = _rhs(c + h * k3[0], b + h * k3[1])
    c = c + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    b = b + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return c, b


def state_operator(state, reference_product):
    """Operator with ``a = sqrt(c)`` (principal root).

    A single sign change negates the discriminant, so ``a(0)`` is flipped
    when the rebuilt product is closer to ``-reference_product``.
    """
    a = np.sqrt(np.asarray(state.c, dtype=complex))
    p = np.prod(a)
    if abs(p + reference_product) < abs(p - reference_product):
        a[0] = -a[0]
    return JacobiOperator(a, state.b)


def integrate(op0, t_end, h):
    """Classical RK4 from ``(a^2, b)`` of ``op0`` up to ``t_end``.

    States are saved every ``max(1, floor(t_end / (100 h)))`` steps and at
    the end.  If some ``|c_n|`` drops below 1e-12 the run stops and the
    partial trajectory is returned with ``aborted`` set.
    """
    if not (h > 0 and t_end > 0):
        raise ValueError("need h > 0 and t_end > 0")
    steps = int(np.ceil(t_end / h - 1e-9))
    every = max(1, int(np.floor(t_end / (100 * h))))
    c = np.array(op0.a, dtype=complex) ** 2
    b = np.array(op0.b, dtype=complex)
    ref = complex(np.prod(op0.a))
    states = [TodaState(0.0, c.copy(), b.copy())]
    aborted, diag = False, ""
    for k in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            c, b = _rk4(c, b, h)
        t = k * h
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))):
            aborted, diag = True, f"state left the finite range (blowup) at t = {t:.6g}"
            break
        if np.abs(c).min() < COLLAPSE_TOL:
            aborted, diag = True, f"|c_n| fell below {COLLAPSE_TOL:g} at t = {t:.6g}"
            break
        if k % every == 0 or k == steps:
            states.append(TodaState(t, c.copy(), b.copy()))
    d0 = monodromy(op0).delta
    drift = max(max_coeff_diff(monodromy(state_operator(s, ref)).delta, d0) for s in states)
    return TodaTrajectory(states, h, drift, ref, aborted, diag)


def flow_invariants(traj):
    """Drift of ``sum b`` and of the ``λ^(N-2)`` discriminant coefficient."""
    s0 = traj.states[0]
    N = len(s0.b)
    out = {"sum_b": max(abs(np.sum(s.b) - np.sum(s0.b)) for s in traj.states)}
    if N >= 2:
        ops = [state_operator(s, traj.reference_product) for s in traj.states]
        c = [monodromy(op).delta.coeff(N - 2) for op in ops]
        out["lambda_n_minus_2"] = max(abs(x - c[0]) for x in c)
    return out


def sign_consistency(traj, rng=None, patterns=4):
    """Max discriminant change under even-parity sign flips of the rebuilt ``a``."""
    rng = np.random.default_rng(0) if rng is None else rng
    s = traj.states[-1]
    op = state_operator(s, traj.reference_product)
    d = monodromy(op).delta
    N = op.N
    worst = 0.0
    for _ in range(patterns):
        tau = rng.choice([-1.0, 1.0], size=N)
        if np.prod(tau) < 0:
            tau[0] = -tau[0]
        worst = max(worst, max_coeff_diff(monodromy(JacobiOperator(tau * op.a, op.b)).delta, d))
    return worst


@dataclass
class DirichletEvolutionReport:
    """Squared Dirichlet evolution check ``(μ_j')^2 = 4 P^2 (Δ(μ_j)^2-4)/prod_{k≠j}(μ_j-μ_k)^2``.

    ``P = prod a`` is a flow invariant; it is ``±1`` for a normalized operator.
    """

    max_relative_residual: float
    checked: int
    skipped: int
    diagnostics: list = field(default_factory=list)


def _dirichlet_points(state, ref):
    op = state_operator(state, ref)
    fs = fundamental_solutions(op)
    return roots(fs.v[op.N]).expanded(), monodromy(op).delta


def _match(prev, cur):
    """Reorder ``cur`` to follow ``prev`` by greedy nearest neighbours."""
    left = list(range(len(cur)))
    out = np.empty_like(cur)
    for i, p in enumerate(prev):
        j = min(left, key=lambda k: abs(cur[k] - p))
        out[i] = cur[j]
        left.remove(j)
    return out


def _stencil(n, k):
    width = min(5, n)
    lo = min(max(k - width // 2, 0), n - width)
    return np.arange(lo, lo + width)


def _derivative(t, mus, k):
    """``dμ/dt`` at saved state ``k`` from up to five nearby states.

    The stencil is centred on ``k`` where possible; weights are exact for
    polynomials of degree ``len(stencil) - 1``, so uneven steps are fine.
    """
    idx = _stencil(len(t), k)
    width = len(idx)
    x = (t[idx] - t[k]) / (t[idx[-1]] - t[idx[0]])
    V = np.vander(x, width, increasing=True).T
    rhs = np.zeros(width)
    rhs[1] = 1.0 / (t[idx[-1]] - t[idx[0]])
    w = np.linalg.solve(V, rhs)
    return sum(wi * mus[i] for wi, i in zip(w, idx))


def dirichlet_evolution_check(traj):
    """Compare finite-difference ``dμ/dt`` with the squared evolution law.

    Derivatives use a five-point stencil; near turning points (``μ' = 0``)
    the error of a three-point stencil would dominate the relative residual.

    The discriminant of each state's own operator is used on the right,
    scaled by the invariant ``prod(a)^2``.
    Stencil windows where two Dirichlet points come within 1e-4 are skipped; a
    window where both sides vanish (below 1e-10) counts as agreeing.
    """
    if len(traj.states) < 3:
        raise ValueError("need at least 3 saved states")
    N = len(traj.states[0].b)
    if N < 2:
        return DirichletEvolutionReport(0.0, 0, 0, ["no Dirichlet points for N = 1"])
    data = [_dirichlet_points(s, traj.reference_product) for s in traj.states]
    mus = [data[0][0]]
    for m, _ in data[1:]:
        mus.append(_match(mus[-1], m))
    t = traj.times
    p2 = traj.reference_product**2
    worst, checked, skipped, diags = 0.0, 0, 0, []
    for k in range(1, len(mus) - 1):
        window = np.array([mus[i] for i in _stencil(len(mus), k)])
        gaps = [
            abs(row[i] - row[j]) for row in window for i in range(N - 1) for j in range(i + 1, N - 1)
        ]
        if gaps and min(gaps) < COLLISION_TOL:
            skipped += 1
            if not diags or not diags[-1].startswith("collision"):
                diags.append(f"collision near t = {t[k]:.6g}; window skipped")
            continue
        dmu = _derivative(t, mus, k)
        m, delta = mus[k], data[k][1]
        for j in range(N - 1):
            prod = np.prod([m[j] - m[i] for i in range(N - 1) if i != j])
            lhs = dmu[j] ** 2
            rhs = 4 * p2 * (delta(m[j]) ** 2 - 4) / prod**2
            scale = max(abs(lhs), abs(rhs))
            if scale < ZERO_TOL:
                continue
            worst = max(worst, abs(lhs - rhs) / scale)
        checked += 1
    return DirichletEvolutionReport(float(worst), checked, skipped, diags)


def _num(x):
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def trajectory_csv(traj):
    """CSV with ``t`` then re/im of each ``c_n`` and each ``b_n``."""
    N = len(traj.states[0].b)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["t"]
    for name in ("c", "b"):
        for n in range(N):
            head += [f"{name}{n}_re", f"{name}{n}_im"]
    w.writerow(head)
    for s in traj.states:
        row = [_num(s.t)]
        for arr in (s.c, s.b):
            for z in arr:
                row += [_num(z.real), _num(z.imag)]
        w.writerow(row)
    return buf.getvalue()
