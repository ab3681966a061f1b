"""Nested estimation problems.

A nested problem is an outer expectation over y of f(y, gamma(y)), where
gamma(y) is itself an inner expectation of phi(y, z).  This module defines
the problem container, a numeric validator for its declared invariants, and
a deterministic quadrature oracle for gamma used to cross-check closed-form
ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import roots_hermite, roots_legendre

from .rng import RngStream, make_root, split

__all__ = [
    "InnerKind",
    "GaussianInner",
    "BoundedInner",
    "NestedProblem",
    "ProblemTree",
    "validate",
    "gamma_quadrature",
]


class InnerKind(Enum):
    """Whether inner draws condition on the outer draw or ignore it."""

    CONDITIONAL = "conditional"  # z ~ p(z|y)
    MARGINAL = "marginal"        # z ~ p(z), independent of y


@dataclass(frozen=True)
class GaussianInner:
    """Inner density z|y ~ Normal(mean(y), sd(y)^2); integrated by Gauss-Hermite."""

    mean: Callable[[float], float]
    sd: Callable[[float], float]


@dataclass(frozen=True)
class BoundedInner:
    """Inner density supported on [lo, hi] with pdf(y, z); integrated by Gauss-Legendre."""

    lo: float
    hi: float
    pdf: Callable[[float, float], float]


@dataclass(frozen=True)
class NestedProblem:
    """A nested expectation E_y[ f(y, E_{z}[phi(y, z)]) ].

    Samplers receive their stream explicitly and must consume a fixed number
    of draws per call.  ``phi`` and ``f`` must accept numpy arrays and
    broadcast; all built-in models are scalar-valued.

    Optional oracle fields (``gamma_exact``, ``truth``, ``linear_g``) enable
    testing and the linear-collapse estimator but are not required by the
    estimators themselves.  ``outer_batch`` / ``inner_batch`` are optional
    vectorized samplers drawing one value per stream of a batch; when absent
    the estimators fall back to per-stream scalar sampling with identical
    output.
    """

    outer_sampler: Callable[[RngStream], float]
    inner_kind: InnerKind
    inner_sampler: Callable[[RngStream, float], float]
    phi: Callable
    f: Callable
    name: str
    gamma_exact: Optional[Callable] = None
    truth: Optional[float] = None
    linear_g: Optional[Callable] = None
    # Quadrature description of the inner density; None disables gamma_quadrature.
    inner_quad: Union[GaussianInner, BoundedInner, None] = None
    # Vectorized samplers: outer_batch(batch) and inner_batch(batch, y) draw one
    # value per stream in the batch.
    outer_batch: Optional[Callable] = None
    inner_batch: Optional[Callable] = None
    # Closed-form E[I_{N,M}] as a function of M, for models where the estimator
    # expectation is known exactly (the quadratic bias pair).
    expected_nmc_value: Optional[Callable[[int], float]] = None


@dataclass(frozen=True)
class ProblemTree:
    """A recursively nested problem: one sampler and integrand per depth.

    ``sampler(stream, ancestors)`` draws this level's variable given the tuple
    of ancestor draws.  For a leaf, ``integrand(ancestors, x)`` maps the draw
    to a value; for an internal level, ``integrand(ancestors, x, w)`` also
    receives the child subtree's estimate ``w``.  A depth-1 tree is a single
    expectation; a depth-2 tree is an ordinary NestedProblem.
    """

    sampler: Callable
    integrand: Callable
    child: Optional["ProblemTree"] = None
    name: str = "tree"

    @property
    def depth(self) -> int:
        return 1 if self.child is None else 1 + self.child.depth

    @staticmethod
    def from_problem(p: NestedProblem) -> "ProblemTree":
        """Depth-2 tree with the same samplers, phi and f as ``p``."""
        leaf = ProblemTree(
            sampler=lambda s, anc: p.inner_sampler(s, anc[-1]),
            integrand=lambda anc, z: p.phi(anc[-1], z),
            name=p.name + "/inner",
        )
        return ProblemTree(
            sampler=lambda s, anc: p.outer_sampler(s),
            integrand=lambda anc, y, w: p.f(y, w),
            child=leaf,
            name=p.name,
        )


# Probe-point generation for validate(): draws come from the problem's own
# samplers on a fixed root seed, so the checks work on any sample space.
_PROBE_SEED = 0
_N_PROBES = 5


def _probe_points(p: NestedProblem):
    root = make_root(_PROBE_SEED)
    ys, zs = [], []
    for i in range(_N_PROBES):
        s = split(root, i)
        y = p.outer_sampler(s)
        z = p.inner_sampler(s, y)
        ys.append(y)
        zs.append(z)
    return ys, zs


def validate(p: NestedProblem) -> list:
    """Check a problem's declared invariants numerically.

    Returns a list of violation descriptions; an empty list means every
    declared invariant held on the probe grid.  Violations never raise.

    Checks performed:

    * if ``linear_g`` is declared, f(y, a*v + b*w) must match
      a*f(y,v) + b*f(y,w) to 1e-12 relative tolerance;
    * if both ``gamma_exact`` and quadrature support are declared, they must
      agree to 1e-8 absolute on the probe points;
    * ``f`` must accept ``phi``'s output (dimension agreement).
    """
    report = []
    ys, zs = _probe_points(p)

    # Dimension agreement: f must consume phi's output at every probe.
    for y, z in zip(ys, zs):
        try:
            w = p.phi(y, z)
            v = p.f(y, w)
        except Exception as exc:  # noqa: BLE001 - report, don't fault
            report.append(f"f(y, phi(y, z)) failed at probe y={y!r}: {exc}")
            break
        if np.ndim(v) != 0 or not np.isfinite(v):
            report.append(f"f output not a finite scalar at probe y={y!r}")
            break

    if p.linear_g is not None:
        tol = 1e-12
        coeffs = [(1.0, 1.0), (0.5, 2.0), (-1.0, 0.25)]
        for y, z in zip(ys, zs):
            w0 = float(p.phi(y, z))
            for v0 in (w0, 0.5 * w0 + 0.1):
                for a, b in coeffs:
                    lhs = p.f(y, a * v0 + b * w0)
                    rhs = a * p.f(y, v0) + b * p.f(y, w0)
                    scale = max(1.0, abs(lhs), abs(rhs))
                    if abs(lhs - rhs) > tol * scale:
                        report.append(
                            "linear_g declared but f is not linear in w: "
                            f"f({y!r}, {a}*{v0!r}+{b}*{w0!r}) = {lhs!r} != {rhs!r}"
                        )
                        break
                else:
                    continue
                break
        # g(y)*w must actually reproduce f(y, w).
        for y, z in zip(ys, zs):
            w0 = float(p.phi(y, z))
            fv = p.f(y, w0)
            gv = p.linear_g(y) * w0
            if abs(fv - gv) > 1e-12 * max(1.0, abs(fv)):
                report.append(
                    f"linear_g(y)*w disagrees with f(y, w) at y={y!r}: {gv!r} vs {fv!r}"
                )
                break

    if p.gamma_exact is not None and p.inner_quad is not None:
        for y in ys:
            approx = gamma_quadrature(p, y, 2000)
            exact = p.gamma_exact(y)
            if abs(approx - exact) > 1e-8:
                report.append(
                    f"gamma_exact({y!r}) = {exact!r} disagrees with quadrature {approx!r}"
                )

    return report


@lru_cache(maxsize=8)
def _hermite_nodes(n: int):
    return roots_hermite(n)


@lru_cache(maxsize=8)
def _legendre_nodes(n: int):
    return roots_legendre(n)


def gamma_quadrature(p: NestedProblem, y, nodes: int):
    """Deterministic quadrature approximation of gamma(y) = E_z[phi(y, z)].

    Uses Gauss-Hermite when the inner density is Gaussian and Gauss-Legendre
    when it is bounded.  Serves as the independent oracle for ``gamma_exact``
    and for ground-truth computation; quadrature error is spectrally small
    and negligible against any Monte Carlo error in play.

    Parameters
    ----------
    p : NestedProblem
        Problem declaring quadrature support through ``inner_quad``.
    y : float
        Outer point at which to evaluate gamma.
    nodes : int
        Number of quadrature nodes, at least 2.

    Raises
    ------
    ValueError
        If the model declares no quadrature support or ``nodes < 2``.
    """
    if nodes < 2:
        raise ValueError(f"need at least 2 quadrature nodes, got {nodes}")
    q = p.inner_quad
    if q is None:
        raise ValueError(f"model {p.name!r} declares no quadrature support")
    if isinstance(q, GaussianInner):
        # E[phi(y, mu + sd*Z)] with Z std normal: substitute z = mu + sd*sqrt(2)*x.
        x, w = _hermite_nodes(nodes)
        z = q.mean(y) + q.sd(y) * np.sqrt(2.0) * x
        return float(np.sum(w * p.phi(y, z)) / np.sqrt(np.pi))
    # Bounded density on [lo, hi]: plain Gauss-Legendre against the pdf.
    x, w = _legendre_nodes(nodes)
    half = 0.5 * (q.hi - q.lo)
    z = 0.5 * (q.hi + q.lo) + half * x
    return float(np.sum(w * p.phi(y, z) * q.pdf(y, z)) * half)
