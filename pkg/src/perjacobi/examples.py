"""Named operators and solution tables used by the demos and tests.

Potentials are written as ``(b_1, ..., b_N)``; use
:func:`perjacobi.inverse.potential_to_operator` to obtain the operator.
"""

from __future__ import annotations

import numpy as np

from .inverse import potential_to_operator
from .operator import JacobiOperator

SQRT2 = np.sqrt(2.0)

# rho = sqrt(sqrt5 + 2)/2 + i sqrt(sqrt5 - 2)/2
RHO = np.sqrt(np.sqrt(5) + 2) / 2 + 1j * np.sqrt(np.sqrt(5) - 2) / 2


def example_2i():
    """Period 2, ``a(n) = i(-1)^n``, ``b(n) = 2(-1)^n``; spectrum ``[-2, 2]``."""
    n = np.arange(2)
    return JacobiOperator(1j * (-1.0) ** n, 2 * (-1.0) ** n)


def example_2ii():
    """Period 4, ``a(n) = (1+i) i^n / sqrt2``, ``b(n) = (-1)^n sqrt2``; spectrum ``[-2, 2]``."""
    n = np.arange(4)
    return JacobiOperator((1 + 1j) * 1j**n / SQRT2, (-1.0) ** n * SQRT2)


def free_spectrum_solutions_n4():
    """The eight nonzero period-4 potentials with the free discriminant.

    The first four are ``(1+i, 1-i, -1+i, -1-i)`` rotated right by
    0, 1, 2, 3 places, the last four their complex conjugates.
    """
    base = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
    first = [np.roll(base, k) for k in range(4)]
    return first + [np.conj(x) for x in first]


def example_3ii():
    """Schrödinger operator with potential ``(1+i, 1-i, -1+i, -1-i)``."""
    return potential_to_operator(free_spectrum_solutions_n4()[0])


def pathological():
    """``a ≡ -1``, ``b(n) = (i^n - (-i)^n)/sqrt2``: Dirichlet point 0 of multiplicity 3."""
    n = np.arange(4)
    return JacobiOperator(-np.ones(4), (1j**n - (-1j) ** n) / SQRT2)


def rho_family_printed():
    """The four period-5 vectors exactly as tabulated with the constant ``RHO``.

    Only the first and last of these have the free discriminant; see
    :func:`rho_family_verified`.
    """
    p, m = 1 + 1j, 1 - 1j
    cols = [(p, m, -m, -p), (m, -p, p, -m), (-m, p, -p, m), (-p, -m, m, p)]
    return [np.array([*(RHO * np.array(c)), 0]) for c in cols]


def rho_family_verified():
    """Period-5 potentials ``(x, ±ix, ∓ix, -x, 0)`` built from ``RHO`` that do solve.

    These are the first and last printed vectors and their conjugates.
    """
    printed = rho_family_printed()
    good = [printed[0], printed[3]]
    return good + [np.conj(x) for x in good]
