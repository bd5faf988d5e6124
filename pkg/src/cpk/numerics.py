"""Quadrature and summation engines for the Casimir-Polder integrals.

Two workhorses live here:

* :func:`integrate_decaying` -- adaptive Gauss-Kronrod (7/15) quadrature of
  integrands that decay like ``exp(-(b - lower)/scale)`` on ``[lower, inf)``.
  It accepts a *batch* of integrands sharing one panel partition so that a
  whole block of Matsubara terms is integrated in a single numpy pass.
* :func:`sum_matsubara` -- the primed Matsubara sum (``j = 0`` at half
  weight) with a lookahead stop rule and compensated final accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from cpk.errors import MatsubaraConvergenceError, QuadratureError


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-9
    abs_floor: float = 1e-45  # J; quantities below this count as zero
    max_matsubara_terms: int = 1_000_000
    max_quad_depth: int = 60

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol!r}")
        if self.abs_floor < 0:
            raise ValueError("abs_floor must be >= 0")
        if self.max_matsubara_terms < 1 or self.max_quad_depth < 1:
            raise ValueError("term and depth limits must be positive")


DEFAULT_TOLERANCES = Tolerances()

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss points are the odd-indexed Kronrod points (x[1], x[3], x[5], x[7]).
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]


def _resolve(tol: Optional[Tolerances], **overrides) -> Tolerances:
    tol = tol or DEFAULT_TOLERANCES
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        tol = Tolerances(**{**tol.__dict__, **overrides})
    return tol


# Smooth integrands never need more than a few hundred live panels; an
# unresolvable singularity would otherwise grow the working set without bound.
MAX_ACTIVE_PANELS = 1 << 14


def _adaptive_gk(g, lo, hi, batch, tol, initial_panels=8):
    """Globally adaptive GK15 on ``[lo, hi]``.

    ``g(x)`` receives a flat node array of length N and returns shape (N,)
    for ``batch is None`` or (batch, N) otherwise.  A panel is accepted once
    every batch member's ``|K15 - G7|`` is below ``rel_tol * |I| * width/(hi-lo)``.
    """
    m = 1 if batch is None else batch
    span = hi - lo
    left = lo + span * np.arange(initial_panels) / initial_panels
    width = np.full(initial_panels, span / initial_panels)
    depth = np.zeros(initial_panels, dtype=int)

    acc_val = np.zeros(m)
    acc_err = np.zeros(m)
    accepted_vals = []

    while left.size:
        half = 0.5 * width
        x = (left + half)[:, None] + half[:, None] * KRONROD_NODES[None, :]
        fx = np.asarray(g(x.ravel()), dtype=float)
        fx = fx.reshape(m, left.size, 15)
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("integrand returned a non-finite value")
        kron = (fx @ KRONROD_WEIGHTS) * half
        gauss = (fx @ GAUSS_WEIGHTS) * half
        err = np.abs(kron - gauss)

        estimate = acc_val + kron.sum(axis=1)
        ref = np.maximum(np.abs(estimate), tol.abs_floor)
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(err > 0, err / ref[:, None], 0.0)
        worst = scaled.max(axis=0)
        ok = worst <= tol.rel_tol * width / span
        if np.all(np.abs(estimate) < tol.abs_floor):
            ok[:] = True

        if ok.any():
            accepted_vals.append(kron[:, ok])
            acc_val = acc_val + kron[:, ok].sum(axis=1)
            acc_err = acc_err + err[:, ok].sum(axis=1)

        bad = ~ok
        if not bad.any():
            break
        too_deep = np.any(depth[bad] >= tol.max_quad_depth)
        if too_deep or 2 * bad.sum() > MAX_ACTIVE_PANELS:
            total_err = acc_err + err[:, bad].sum(axis=1)
            value = estimate if batch is not None else float(estimate[0])
            error = total_err if batch is not None else float(total_err[0])
            what = (f"depth limit {tol.max_quad_depth}" if too_deep
                    else f"panel limit {MAX_ACTIVE_PANELS}")
            raise QuadratureError(
                f"quadrature {what} exceeded; the integrand may be singular",
                value=value,
                error=error,
            )
        left_bad, half_bad, depth_bad = left[bad], half[bad], depth[bad] + 1
        left = np.concatenate([left_bad, left_bad + half_bad])
        width = np.concatenate([half_bad, half_bad])
        depth = np.concatenate([depth_bad, depth_bad])

    # Re-add panel contributions in one pass; the running acc_val was only a guide.
    if accepted_vals:
        allv = np.concatenate(accepted_vals, axis=1)
        value = np.array([math.fsum(row) for row in allv])
    else:
        value = acc_val
    if batch is None:
        return float(value[0]), float(acc_err[0])
    return value, acc_err


def integrate_decaying(
    f: Callable[[np.ndarray], np.ndarray],
    lower,
    scale,
    tol: Optional[Tolerances] = None,
    *,
    rel_tol: Optional[float] = None,
    abs_floor: Optional[float] = None,
):
    """Integrate ``f`` over ``[lower, inf)`` for an exponentially decaying integrand.

    The variable is mapped as ``u = (b - lower) / scale`` followed by
    ``t = u / (1 + u)``, and the finite ``t``-interval is integrated
    adaptively.  ``scale`` is the decay length of the integrand.

    ``lower`` (and optionally ``scale``) may be 1-D arrays of length ``m``.  In
    that case ``f`` is called with ``b`` of shape ``(m, N)`` and must return
    the same shape; the result is a pair of length-``m`` arrays.

    Returns
    -------
    value, error_estimate
    """
    tol = _resolve(tol, rel_tol=rel_tol, abs_floor=abs_floor)
    batched = np.ndim(lower) > 0
    if batched:
        lower = np.asarray(lower, dtype=float)
        scale = np.broadcast_to(np.asarray(scale, dtype=float), lower.shape)
        if np.any(scale <= 0):
            raise ValueError("scale must be positive")

        def g(t):
            u = t / (1.0 - t)
            b = lower[:, None] + scale[:, None] * u[None, :]
            jac = scale[:, None] / (1.0 - t)[None, :] ** 2
            return f(b) * jac

        return _adaptive_gk(g, 0.0, 1.0, lower.size, tol)

    lower = float(lower)
    scale = float(scale)
    if not scale > 0:
        raise ValueError("scale must be positive")

    def g1(t):
        u = t / (1.0 - t)
        return f(lower + scale * u) * (scale / (1.0 - t) ** 2)

    return _adaptive_gk(g1, 0.0, 1.0, None, tol)


def integrate_interval(f, a: float, b: float, tol: Optional[Tolerances] = None, *,
                       rel_tol=None, abs_floor=None):
    """Adaptive GK15 over the finite interval ``[a, b]``; returns (value, error)."""
    tol = _resolve(tol, rel_tol=rel_tol, abs_floor=abs_floor)
    if not b > a:
        raise ValueError("need a < b")
    return _adaptive_gk(f, float(a), float(b), None, tol)


def compensated_sum(values) -> float:
    """Correctly rounded sum of ``values`` (Shewchuk error-free transformations)."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def _power_tail(vals: np.ndarray, J: int):
    """Tail estimate ``sum_{j>J} t_j`` if ``t_j`` follows a clean power law.

    The local exponent is measured on [J/4, J/2] and [J/2, J]; the law is
    accepted only if both agree to 1 %.  Returns None otherwise.
    """
    if J < 64:
        return None
    t0, t1, t2 = vals[J // 4], vals[J // 2], vals[J]
    if t2 == 0 or not (np.sign(t0) == np.sign(t1) == np.sign(t2)):
        return None
    p1 = math.log(t1 / t2) / math.log(J / (J // 2))
    p2 = math.log(t0 / t1) / math.log((J // 2) / (J // 4))
    if p1 <= 1.05 or abs(p1 - p2) > 0.01 * p1:
        return None
    # Euler-Maclaurin: int_J^inf - t_J/2 - t'(J)/12
    return float(t2) * (J / (p1 - 1.0) - 0.5 + p1 / (12.0 * J))


def sum_matsubara(
    term: Callable,
    tol: Optional[Tolerances] = None,
    *,
    vectorized: bool = False,
    tail: Optional[Callable[[int], float]] = None,
    accelerate: bool = True,
    lookahead: int = 20,
    block: int = 256,
    max_block: int = 4096,
    rel_tol: Optional[float] = None,
    abs_floor: Optional[float] = None,
) -> float:
    """Primed sum ``term(0)/2 + sum_{j>=1} term(j)``.

    Terms are pulled in blocks and accumulated without rounding loss
    (:func:`math.fsum`).  A stop is considered once ``lookahead``
    consecutive terms each satisfy ``|t_j| <= rel_tol * |S_j|``.  What
    happens then depends on how the tail is handled:

    * ``tail(J)`` given: it must return ``sum_{j>J} t_j`` and is added.
    * ``accelerate`` and the terms follow a power law: an Euler-Maclaurin
      estimate of the algebraic tail is added.
    * otherwise summation continues until additionally
      ``j * |t_j| <= rel_tol * |S_j|`` (a tail bound for anything that decays
      at least like ``1/j**2``).

    With ``vectorized=True`` the callable receives an integer array of
    indices and must return an array of the same length.
    """
    tol = _resolve(tol, rel_tol=rel_tol, abs_floor=abs_floor)
    chunks = []
    partial = 0.0
    run = 0
    j0 = 0
    n = block
    last = 0.0
    while True:
        n = min(n, tol.max_matsubara_terms - j0)
        if n <= 0:
            raise MatsubaraConvergenceError(
                f"Matsubara sum not converged after {j0} terms "
                f"(last term {last:.3e}, partial sum {partial:.6e})",
                partial_sum=partial, last_term=last, n_terms=j0,
            )
        js = np.arange(j0, j0 + n)
        if vectorized:
            vals = np.array(term(js), dtype=float).reshape(n)
        else:
            vals = np.array([term(int(j)) for j in js], dtype=float)
        if j0 == 0:
            vals[0] *= 0.5
        if not np.all(np.isfinite(vals)):
            bad = int(js[~np.isfinite(vals)][0])
            raise MatsubaraConvergenceError(
                f"non-finite Matsubara term at j={bad}", partial_sum=partial, n_terms=j0
            )
        chunks.append(vals)
        sums = partial + np.cumsum(vals)
        bound = np.maximum(tol.rel_tol * np.abs(sums), tol.abs_floor)
        small = np.abs(vals) <= bound
        idx = np.arange(n)
        last_false = np.maximum.accumulate(np.where(small, -1, idx))
        runlen = np.where(last_false < 0, idx + 1 + run, idx - last_false)
        cand = runlen >= lookahead

        def finish(stop, extra=0.0):
            kept = np.concatenate(chunks[:-1] + [vals[: stop + 1]])
            return compensated_sum(kept) + extra

        if cand.any():
            first = int(np.argmax(cand))
            if tail is not None:
                return finish(first, tail(j0 + first))
            negligible = cand & (np.abs(vals) * np.maximum(js, 1) <= bound)
            stop_plain = int(np.argmax(negligible)) if negligible.any() else None
            if accelerate:
                allv = np.concatenate(chunks)
                for c in (first, n - 1):
                    if stop_plain is not None and stop_plain <= c:
                        break
                    if cand[c]:
                        est = _power_tail(allv, j0 + c)
                        if est is not None:
                            return finish(c, est)
            if stop_plain is not None:
                return finish(stop_plain)
        partial = float(sums[-1])
        last = float(vals[-1])
        run = int(runlen[-1])
        j0 += n
        n = min(2 * n, max_block)


def coth_sum_identity(a: float) -> float:
    """Closed form of ``sum'_{j>=0} 1/(a**2 + j**2) = pi/(2a) coth(pi a)``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if a < 1e-4:
        return 0.5 / a**2 + math.pi**2 / 6 - math.pi**4 * a**2 / 90
    return math.pi / (2 * a) / math.tanh(math.pi * a)


def exp_weighted_sum_identity(a: float) -> float:
    """Closed form of ``sum'_{j>=0} exp(-2ja) (1 + 2ja + 2j**2 a**2)``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if a < 1e-4:
        return 1.5 / a - a**3 / 90 + 2 * a**5 / 315
    coth = 1.0 / math.tanh(a)
    # a/(2 sinh^2 a) written with exp(-2a) so that large a does not overflow
    q = math.exp(-2 * a)
    second = 2 * a * (1 + a * coth) * q / (-math.expm1(-2 * a)) ** 2
    return 0.5 * coth + second
