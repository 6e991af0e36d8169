"""Complex polynomials in the spectral parameter.

Coefficients are stored in ascending order of degree.  Arithmetic that can
cancel (add, subtract, multiply, scale) snaps coefficients below
``TRIM_TOL`` to exact zero so that degrees stay honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRIM_TOL = 1e-14
CLUSTER_TOL = 1e-6
MAX_SWEEPS = 200
POLISH_STEPS = 50
DEFAULT_SEED = 20240607

_EPS = np.finfo(float).eps


class RootFindingError(RuntimeError):
    """Raised when the simultaneous iteration fails to converge.

    The best iterate is kept on ``best`` for inspection.
    """

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def _as_coeffs(coeffs):
    c = np.array(coeffs, dtype=complex).ravel()
    if not np.all(np.isfinite(c)):
        raise ValueError("polynomial coefficients must be finite")
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(0, dtype=complex)
    return c[: nz[-1] + 1]


def _clean(c):
    c = np.array(c, dtype=complex)
    c.real[np.abs(c.real) < TRIM_TOL] = 0.0
    c.imag[np.abs(c.imag) < TRIM_TOL] = 0.0
    return _as_coeffs(c)


class CPoly:
    """Immutable complex polynomial with ascending coefficients."""

    __slots__ = ("_c",)

    def __init__(self, coeffs=()):
        c = _as_coeffs(coeffs)
        c.flags.writeable = False
        self._c = c

    @classmethod
    def _raw(cls, c):
        p = cls.__new__(cls)
        c = np.asarray(c, dtype=complex)
        c.flags.writeable = False
        p._c = c
        return p

    @classmethod
    def constant(cls, value):
        return cls([value])

    @classmethod
    def identity(cls):
        """The polynomial ``λ``."""
        return cls([0.0, 1.0])

    @classmethod
    def from_roots(cls, roots, leading=1.0):
        c = np.array([leading], dtype=complex)
        for r in np.asarray(roots, dtype=complex).ravel():
            c = np.convolve(c, [-r, 1.0])
        return cls(c)

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        """Degree, with ``-1`` for the zero polynomial."""
        return len(self._c) - 1

    @property
    def leading(self):
        return self._c[-1] if len(self._c) else 0j

    def is_zero(self):
        return len(self._c) == 0

    def coeff(self, k):
        return self._c[k] if 0 <= k < len(self._c) else 0j

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -_lift(other))

    def __rsub__(self, other):
        return add(_lift(other), -self)

    def __neg__(self):
        return CPoly._raw(-self._c)

    def __mul__(self, other):
        if isinstance(other, CPoly):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return scale(self, 1.0 / complex(scalar))

    def __eq__(self, other):
        if not isinstance(other, CPoly):
            return NotImplemented
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def __len__(self):
        return len(self._c)

    def __repr__(self):
        return f"CPoly({np.array2string(self._c, precision=6, separator=', ')})"

    def derivative(self):
        return derivative(self)

    def roots(self, tol=CLUSTER_TOL, seed=DEFAULT_SEED):
        return roots(self, tol=tol, seed=seed)


def _lift(x):
    return x if isinstance(x, CPoly) else CPoly([x])


def add(p, q):
    """Coefficient-wise sum with cancellation trimming."""
    n = max(len(p.coeffs), len(q.coeffs))
    c = np.zeros(n, dtype=complex)
    c[: len(p.coeffs)] += p.coeffs
    c[: len(q.coeffs)] += q.coeffs
    return CPoly._raw(_clean(c))


def mul(p, q):
    """Convolution product."""
    if p.is_zero() or q.is_zero():
        return CPoly()
    return CPoly._raw(_clean(np.convolve(p.coeffs, q.coeffs)))


def scale(p, s):
    return CPoly._raw(_clean(p.coeffs * complex(s)))


def evaluate(p, z):
    """Horner evaluation; ``z`` may be a scalar or an array."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    for ck in p.coeffs[::-1]:
        acc = acc * z + ck
    return acc[()] if acc.ndim == 0 else acc


def derivative(p):
    if p.degree < 1:
        return CPoly()
    k = np.arange(1, len(p.coeffs))
    return CPoly._raw(_as_coeffs(p.coeffs[1:] * k))


def max_coeff_diff(p, q):
    """Infinity norm of the coefficient difference."""
    n = max(len(p.coeffs), len(q.coeffs), 1)
    d = np.zeros(n, dtype=complex)
    d[: len(p.coeffs)] += p.coeffs
    d[: len(q.coeffs)] -= q.coeffs
    return float(np.abs(d).max())


@dataclass(frozen=True)
class RootSet:
    """Clustered roots with multiplicities.

    ``residual`` bounds ``|p(root)|`` over the reported roots.
    """

    values: np.ndarray
    multiplicities: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        m = np.asarray(self.multiplicities, dtype=int).ravel()
        if v.shape != m.shape:
            raise ValueError("values and multiplicities differ in length")
        if np.any(m < 1):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", m)

    @property
    def count(self):
        """Number of roots counted with multiplicity."""
        return int(self.multiplicities.sum())

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.values, self.multiplicities))

    def expanded(self):
        return np.repeat(self.values, self.multiplicities)

    def total(self):
        """Sum of the roots counted with multiplicity."""
        return complex(np.sum(self.values * self.multiplicities))

    def multiplicity_near(self, z, radius=None):
        """Multiplicity of the cluster containing ``z`` (0 if none)."""
        if len(self.values) == 0:
            return 0
        d = np.abs(self.values - z)
        i = int(np.argmin(d))
        r = cluster_radius(z, CLUSTER_TOL) if radius is None else radius
        return int(self.multiplicities[i]) if d[i] <= r else 0


def cluster_radius(z, tol=CLUSTER_TOL):
    return max(tol, tol * (1.0 + abs(z)))


def _horner2(a, z):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for ck in a[::-1]:
        dp = dp * z + p
        p = p * z + ck
    return p, dp


def _eval_bound(a, z):
    # rounding-error scale of Horner evaluation
    absz = np.abs(z)
    s = np.zeros_like(absz)
    for ck in np.abs(a)[::-1]:
        s = s * absz + ck
    return s


def _aberth(a, rng, max_sweeps):
    n = len(a) - 1
    a = a / a[-1]
    k = np.arange(n)
    radius = np.max(np.abs(a[:-1]) ** (1.0 / (n - k)))
    radius = max(radius, 1e-12)
    theta = 2 * np.pi * k / n + 0.4 + 0.2 * rng.random(n)
    z = radius * (1.0 + 0.05 * rng.random(n)) * np.exp(1j * theta)
    active = np.ones(n, dtype=bool)
    for _ in range(max_sweeps):
        p, dp = _horner2(a, z)
        bound = 4 * n * _EPS * _eval_bound(a, z)
        active &= np.abs(p) > bound
        if not active.any():
            return z, True
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, p / (_EPS * (1 + np.abs(z))))
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, ratio)
        z = np.where(active, z - w, z)
    p, _ = _horner2(a, z)
    bound = _eval_bound(a, z)
    ok = np.all(np.abs(p) <= 1e-8 * bound)
    return z, ok


def _newton_polish(a, z, steps):
    fz = abs(_horner2(a, np.array(z))[0])
    for _ in range(steps):
        p, dp = _horner2(a, np.array(z))
        if dp == 0:
            break
        step = p / dp
        cand = z - step
        fc = abs(_horner2(a, np.array(cand))[0])
        if fc >= fz:
            break
        z, fz = cand, fc
        if abs(step) <= 4 * _EPS * abs(z):
            break
    return complex(z)


def _cluster(a, z, tol):
    """Group iterates whose disks overlap.

    A disk has the larger of the fixed clustering radius and the
    rounding-level inclusion radius of the simultaneous iteration, so that
    roots that cannot be separated in double precision merge.
    """
    n = len(z)
    if n == 1:
        return [np.array([0])]
    p, _ = _horner2(a, z)
    floor = 4 * n * _EPS * _eval_bound(a, z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    prod = np.abs(np.prod(diff, axis=1)) * abs(a[-1])
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        incl = n * np.maximum(np.abs(p), floor) / prod
    incl = np.minimum(np.nan_to_num(incl, nan=0.0, posinf=0.0), 1e-4 * (1 + np.abs(z)))
    fixed = np.maximum(tol, tol * (1 + np.abs(z)))
    r = np.maximum(fixed, incl)
    d = np.abs(z[:, None] - z[None, :])
    adj = d <= (r[:, None] + r[None, :]) / 2
    adj |= d <= np.maximum(fixed[:, None], fixed[None, :])
    label = -np.ones(n, dtype=int)
    groups = []
    for i in range(n):
        if label[i] >= 0:
            continue
        stack = [i]
        label[i] = len(groups)
        members = []
        while stack:
            j = stack.pop()
            members.append(j)
            for k in np.flatnonzero(adj[j] & (label < 0)):
                label[k] = len(groups)
                stack.append(k)
        groups.append(np.array(sorted(members)))
    return groups


def _derivative_coeffs(a, m):
    c = np.array(a, dtype=complex)
    for _ in range(m):
        c = c[1:] * np.arange(1, len(c))
    return c


def _sort_roots(values, mults):
    key = np.lexsort((np.round(values.imag, 9), np.round(values.real, 9)))
    return values[key], mults[key]


def roots(p, tol=CLUSTER_TOL, seed=DEFAULT_SEED, max_sweeps=MAX_SWEEPS, polish_steps=POLISH_STEPS):
    """All complex roots of ``p`` with clustered multiplicities.

    Parameters
    ----------
    p : CPoly
        Polynomial of degree at least one.
    tol : float
        Relative clustering radius; iterates closer than
        ``max(tol, tol*(1+|z|))`` are merged.
    seed : int
        Seed for the perturbation of the initial circle.

    Returns
    -------
    RootSet
    """
    if p.degree < 1:
        raise ValueError("roots need a polynomial of degree >= 1")
    c = p.coeffs
    nzero = int(np.flatnonzero(c)[0])
    a = c[nzero:]
    rng = np.random.default_rng(seed)
    found = []
    if len(a) == 2:
        found = [-a[0] / a[1]]
    elif len(a) > 2:
        z, ok = _aberth(a, rng, max_sweeps)
        if not ok:
            raise RootFindingError("root finder did not converge", z)
        found = list(z)
    z = np.array([0j] * nzero + found, dtype=complex)

    groups = _cluster(c, z, tol)
    values, mults = [], []
    for g in groups:
        m = len(g)
        centre = complex(np.mean(z[g]))
        if m == 1:
            centre = _newton_polish(c, centre, polish_steps)
        elif np.all(z[g] == 0):
            centre = 0j
        else:
            # the (m-1)th derivative has a simple root at the cluster
            dm = _derivative_coeffs(c, m - 1)
            cand = _newton_polish(dm, centre, polish_steps)
            if abs(cand - centre) <= cluster_radius(centre, max(tol, 1e-4)):
                centre = cand
        values.append(centre)
        mults.append(m)
    values = np.array(values, dtype=complex)
    mults = np.array(mults, dtype=int)
    values, mults = _sort_roots(values, mults)
    residual = float(np.abs(evaluate(p, values)).max()) if len(values) else 0.0
    return RootSet(values, mults, residual)


def _leja_order(x):
    x = np.asarray(x, dtype=complex)
    n = len(x)
    order = [int(np.argmax(np.abs(x)))]
    logd = np.zeros(n)
    used = np.zeros(n, dtype=bool)
    used[order[0]] = True
    for _ in range(n - 1):
        with np.errstate(divide="ignore"):
            logd += np.log(np.abs(x - x[order[-1]]))
        cand = np.where(used, -np.inf, logd)
        i = int(np.argmax(cand))
        order.append(i)
        used[i] = True
    return np.array(order)


def interpolate(samples, degree):
    """Polynomial of the given degree through ``(x, y)`` samples.

    Uses Newton divided differences on a Leja ordering of the abscissae,
    which keeps the conversion to monomial form well conditioned.

    Raises
    ------
    ValueError
        On too few samples or duplicate abscissae.
    """
    pts = np.asarray(samples, dtype=complex)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("samples must be (x, y) pairs")
    if len(pts) < degree + 1:
        raise ValueError(f"need at least {degree + 1} samples, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    d = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(d, np.inf)
    if np.any(d == 0):
        raise ValueError("duplicate abscissae in interpolation samples")
    order = _leja_order(x)[: degree + 1]
    x, y = x[order], y[order].copy()
    n = degree + 1
    for j in range(1, n):
        y[j:] = (y[j:] - y[j - 1 : -1]) / (x[j:] - x[: n - j])
    c = np.array([y[-1]], dtype=complex)
    for k in range(n - 2, -1, -1):
        c = np.convolve(c, [-x[k], 1.0])
        c[0] += y[k]
    return CPoly._raw(_clean(c))
