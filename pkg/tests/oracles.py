"""Independent high-precision reference values shared by several test modules."""

import mpmath
import pytest

from cpk.units import C, EPS0, HBAR, K_B


def approx(expected, rel=1e-6, abs=0.0):
    """pytest.approx without its 1e-12 absolute floor, which hides any
    relative error in quantities of order 1e-30 J."""
    return pytest.approx(expected, rel=rel, abs=abs)


def perfect_mirror_two_level(omega, d2, z, T, dps=40):
    """(U_nr, U_ev, U_total) of a two-level system near a perfect mirror.

    Evaluates the Matsubara sum with the b-integral done analytically, and the
    evanescent term, in ``dps``-digit arithmetic.  ``omega`` is signed: a
    negative value describes the upper level of the pair.
    """
    with mpmath.workdps(dps):
        hbar, kb, c, eps0 = (mpmath.mpf(v) for v in (HBAR, K_B, C, EPS0))
        w, d2, z, T = mpmath.mpf(omega), mpmath.mpf(d2), mpmath.mpf(z), mpmath.mpf(T)
        xi = 2 * mpmath.pi * kb * T / hbar
        a = z * xi / c

        def term(j):
            return w * mpmath.exp(-2 * j * a) * (1 + 2 * j * a + 2 * j * j * a * a) / (w * w + j * j * xi * xi)

        s = term(0) / 2 + mpmath.nsum(term, [1, mpmath.inf])
        u_nr = -kb * T / (12 * mpmath.pi * eps0 * hbar * z**3) * d2 * s
        x = hbar * abs(w) / (kb * T)
        n_up = 1 / mpmath.expm1(x)
        n = n_up if w > 0 else -(n_up + 1)
        u_ev = n * d2 / (24 * mpmath.pi * eps0 * z**3)
        return float(u_nr), float(u_ev), float(u_nr + u_ev)
