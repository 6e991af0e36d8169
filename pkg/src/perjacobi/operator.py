"""Periodic Jacobi operators and their isospectral transforms.

The operator acts on two-sided sequences by

    (L w)(n) = a(n) w(n+1) + a(n-1) w(n-1) + b(n) w(n)

with N-periodic complex coefficients stored as ``a[0..N-1]`` and
``b[0..N-1]``; every index is read modulo N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-12


def _frozen(x):
    x = np.array(x, dtype=complex).ravel()
    x.flags.writeable = False
    return x


@dataclass(frozen=True)
class JacobiOperator:
    """N-periodic Jacobi operator with off-diagonal ``a`` and diagonal ``b``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        b = _frozen(self.b)
        if a.size < 1:
            raise ValueError("period must be at least 1")
        if a.shape != b.shape:
            raise ValueError(f"a has {a.size} entries but b has {b.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        if np.any(a == 0):
            raise ValueError("off-diagonal coefficients a(n) must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def N(self):
        return self.a.size

    def a_at(self, n):
        return self.a[n % self.N]

    def b_at(self, n):
        return self.b[n % self.N]

    def __eq__(self, other):
        if not isinstance(other, JacobiOperator):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.a.tobytes(), self.b.tobytes()))

    def conj(self):
        return JacobiOperator(np.conj(self.a), np.conj(self.b))

    def is_real(self, tol=0.0):
        return bool(np.all(np.abs(self.a.imag) <= tol) and np.all(np.abs(self.b.imag) <= tol))

    def is_normalized(self, tol=NORMALIZATION_TOL):
        return abs(np.prod(self.a) - (-1) ** self.N) <= tol


@dataclass(frozen=True)
class FourierCoeffs:
    """Discrete Fourier coefficients ``a(n) = sum_k A_k omega^(k n)``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def N(self):
        return len(self.A)

    @property
    def omega(self):
        return np.exp(2j * np.pi / self.N)


@dataclass(frozen=True)
class SignPattern:
    """Signs tau(n) in {+1, -1}; ``nu`` counts the minus signs."""

    tau: tuple

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        if any(t not in (1, -1) for t in tau):
            raise ValueError("sign pattern entries must be +1 or -1")
        object.__setattr__(self, "tau", tau)

    @property
    def nu(self):
        return sum(1 for t in self.tau if t == -1)


def _principal_root(z, n):
    """Principal n-th root, taking the real root of a negative real for odd n."""
    z = complex(z)
    if n % 2 == 1 and z.imag == 0 and z.real < 0:
        return complex(-((-z.real) ** (1.0 / n)))
    return z ** (1.0 / n)


def normalize(op):
    """Scale ``L`` to ``cL`` so that the product of the ``a(j)`` is ``(-1)^N``.

    Returns
    -------
    (JacobiOperator, complex)
        The scaled operator and the constant ``c``.
    """
    N = op.N
    if op.is_normalized():
        return op, 1 + 0j
    c = _principal_root((-1) ** N / np.prod(op.a), N)
    return JacobiOperator(c * op.a, c * op.b), c


def fourier(op):
    N = op.N
    return FourierCoeffs(A=np.fft.fft(op.a) / N, B=np.fft.fft(op.b) / N)


def synthesize(fc):
    N = fc.N
    return JacobiOperator(np.fft.ifft(fc.A) * N, np.fft.ifft(fc.B) * N)


def shift(op, l):
    """Shifted operator with ``a^l(n) = a(n+l)`` and ``b^l(n) = b(n+l)``."""
    return JacobiOperator(np.roll(op.a, -l), np.roll(op.b, -l))


def reflect(op):
    """Reflected operator ``a#(n) = a(-n-1)``, ``b#(n) = b(-n)``.

    ``a(n)`` lives on the bond between sites ``n`` and ``n+1``, so reversing
    the lattice sends bond ``n`` to bond ``-n-1``.  Taking ``a(-n)`` instead
    shifts the bonds against the sites and changes the discriminant.
    """
    N = op.N
    n = np.arange(N)
    return JacobiOperator(op.a[(-n - 1) % N], op.b[(-n) % N])


def sign_flip(op, pattern):
    tau = np.asarray(pattern.tau, dtype=float)
    if tau.size != op.N:
        raise ValueError("sign pattern length must equal the period")
    return JacobiOperator(tau * op.a, op.b)


def unperturbed(N):
    """Free operator ``a = -1``, ``b = 0``."""
    if N < 1:
        raise ValueError("period must be at least 1")
    return JacobiOperator(-np.ones(N), np.zeros(N))


def is_essentially_unperturbed(op, tol=1e-10):
    return bool(np.all(np.abs(op.a**2 - 1) <= tol) and np.all(np.abs(op.b) <= tol))


def borg_family(M, k, signs=None):
    """Operator of period ``2M`` with ``b = 0`` and ``a(n)^2 = 1 + (-1)^n s``.

    ``s`` is the principal square root of ``1 - exp(2 k pi i / M)``.  With
    ``signs`` omitted every ``a(n)`` is the principal root, except that the
    last sign is flipped when needed to reach ``prod a = 1``.
    """
    if M < 1 or not 0 <= k < M:
        raise ValueError("need M >= 1 and 0 <= k < M")
    N = 2 * M
    s = np.sqrt(1 - np.exp(2j * np.pi * k / M) + 0j)
    n = np.arange(N)
    a = np.sqrt(1 + (-1.0) ** n * s)
    if signs is None:
        if np.prod(a).real < 0:
            a[-1] = -a[-1]
    else:
        a = a * np.asarray(signs, dtype=float)
    op = JacobiOperator(a, np.zeros(N))
    if not op.is_normalized(1e-10):
        raise ValueError("sign choices break the normalization prod a = 1")
    return op


def operator_to_dict(op):
    return {
        "N": op.N,
        "a": [[float(z.real), float(z.imag)] for z in op.a],
        "b": [[float(z.real), float(z.imag)] for z in op.b],
    }


def _complex_list(items, name):
    out = []
    for item in items:
        if isinstance(item, (list, tuple)) and len(item) == 2:
            out.append(complex(float(item[0]), float(item[1])))
        else:
            raise ValueError(f"entries of '{name}' must be [re, im] pairs")
    return out


def operator_from_dict(d):
    try:
        N = int(d["N"])
        a = _complex_list(d["a"], "a")
        b = _complex_list(d["b"], "b")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed operator description: {exc}") from exc
    if len(a) != N or len(b) != N:
        raise ValueError(f"expected {N} entries in 'a' and 'b'")
    return JacobiOperator(a, b)


def load_operator(path):
    with open(path) as fh:
        return operator_from_dict(json.load(fh))


def save_operator(op, path):
    with open(path, "w") as fh:
        json.dump(operator_to_dict(op), fh, indent=2)
        fh.write("\n")
