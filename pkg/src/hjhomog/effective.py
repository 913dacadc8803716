"""Effective (homogenized) Hamiltonian for 1D mechanical multiscale problems.

For the oscillatory part H1(y, p) = -W(y) + p^2/2 with a 1-periodic well
W >= 0, min W = 0, the homogenized Hamiltonian has a flat piece at zero and,
above the critical momentum, is the unique level lam > 0 of

    int_0^1 sqrt(2 (lam + W(y))) dy = |p|.

The full effective Hamiltonian separates as Hbar(x, p) = -f(x) + Hbar1(p).

Two independent routes are implemented: quadrature plus a bracketing root
find (mechanical_effective), and a discounted cell problem solved by dynamic
programming on the torus (ergodic_cell_check). They must agree, and the test
suite enforces that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .errors import DomainError, NumericalError, RangeError
from .problem import FunctionTable1D, Potential, ProblemSpec, legendre_transform

_BASE_PANELS = 1 << 14
_MAX_PANELS = 1 << 18


def _check_micro(W: Potential) -> None:
    if not W.periodic:
        raise DomainError("micro potential must be 1-periodic")
    if W.min_value != 0.0:
        raise DomainError("micro potential must have min W = 0")


def _panel_samples(W: Potential, n_panels: int) -> np.ndarray:
    y = (np.arange(n_panels) + 0.5) / n_panels
    w = np.asarray(W(y), dtype=np.float64)
    if w.min() < -1e-12:
        raise DomainError("micro potential takes negative values")
    return np.maximum(w, 0.0)


# Richardson factor for the h^{3/2} error of the midpoint rule across the
# square-root kink at the well bottom; it also shrinks the smooth O(h^2) part.
_RICHARDSON = 2.0**1.5 - 1.0


def _level_curve_samples(W: Potential, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Coarse/fine midpoint samples of W for the level-curve quadrature.

    The doubling probe runs at lam = 0, the worst case (square-root kink at
    the well bottom). Extrapolation of the coarse/fine pair then puts the
    quadrature error two to three orders below the probe.
    """
    n = _BASE_PANELS
    coarse = _panel_samples(W, n // 2)
    while True:
        fine = _panel_samples(W, n)
        probe = abs(_flux_raw(0.0, fine) - _flux_raw(0.0, coarse))
        if probe <= 100.0 * tol:
            return coarse, fine
        if n >= _MAX_PANELS:
            raise NumericalError("quadrature for the level curve did not settle")
        coarse, n = fine, 2 * n


def _flux_raw(lam: float, w: np.ndarray) -> float:
    return float(np.mean(np.sqrt(2.0 * (lam + w))))


def _flux(lam: float, pair: tuple[np.ndarray, np.ndarray]) -> float:
    coarse, fine = pair
    i_coarse = _flux_raw(lam, coarse)
    i_fine = _flux_raw(lam, fine)
    return i_fine + (i_fine - i_coarse) / _RICHARDSON


def _effective_from_samples(pair: tuple[np.ndarray, np.ndarray], w_max: float, p: float, tol: float) -> float:
    q = abs(p)
    if q <= _flux(0.0, pair):
        return 0.0
    # +1 keeps the upper end strictly above the level when W vanishes,
    # where flux(p^2/2) = |p| exactly and the bracket would degenerate
    hi = 0.5 * p * p + w_max + 1.0
    return float(brentq(lambda lam: _flux(lam, pair) - q, 0.0, hi, xtol=tol))


def p_critical(W: Potential, tol: float = 1e-8) -> float:
    """Critical momentum int_0^1 sqrt(2 W(y)) dy bounding the flat piece."""
    _check_micro(W)
    return _flux(0.0, _level_curve_samples(W, tol))


def mechanical_effective(W: Potential, p: float, tol: float = 1e-8) -> float:
    """Homogenized oscillatory Hamiltonian Hbar1(p) for H1 = -W + p^2/2.

    Returns exactly 0.0 on the flat piece |p| <= p_critical, else the root of
    the level-curve equation, bracketed in [0, p^2/2 + max W].
    """
    _check_micro(W)
    pair = _level_curve_samples(W, tol)
    return _effective_from_samples(pair, W.max_value, p, tol)


def ergodic_cell_check(
    W: Potential,
    p: float,
    delta: float,
    grid: int = 1024,
    reach: int = 48,
    speed_margin: float = 1.0,
    max_iterations: int = 500,
) -> float:
    """Independent check of Hbar1(p) through the discounted cell problem.

    Solves delta v + H1(y, p + Dv) = 0 on the torus by dynamic programming on
    its control form: transitions move to grid nodes within reach steps, the
    running cost is W(y) + a^2/2 + p a at the quantized velocity a, and the
    fixed point is found by policy iteration (exact policy evaluation through
    a sparse solve, greedy improvement with smallest-index tie breaking).
    Returns -delta * mean(v), which approaches Hbar1(p) as delta -> 0.
    """
    _check_micro(W)
    if delta <= 0.0:
        raise DomainError("discount rate must be positive")
    n = int(grid)
    h = 1.0 / n
    y = np.arange(n) * h
    w = np.asarray(W(y), dtype=np.float64)
    m_cell = math.sqrt(p * p + 4.0 * W.max_value) + speed_margin
    dt = reach * h / m_cell
    beta = math.exp(-delta * dt)
    moves = np.arange(-reach, reach + 1)
    a = moves * (h / dt)
    move_cost = dt * (0.5 * a * a + p * a)
    state_cost = dt * w

    rows = np.arange(n)
    pi = np.zeros(n, dtype=np.int64)

    def evaluate(policy: np.ndarray) -> np.ndarray:
        cols = (rows + policy) % n
        transition = sp.coo_matrix((np.full(n, -beta), (rows, cols)), shape=(n, n))
        system = (sp.eye(n) + transition).tocsc()
        rhs = state_cost + move_cost[policy + reach]
        return spsolve(system, rhs)

    def bellman(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = np.empty((moves.size, n))
        for k, j in enumerate(moves):
            q[k] = move_cost[k] + beta * np.roll(v, -j)
        idx = np.argmin(q, axis=0)
        return state_cost + q[idx, rows], idx - reach

    v = evaluate(pi)
    for _ in range(max_iterations):
        tv, pi_new = bellman(v)
        residual = float(np.max(np.abs(tv - v)))
        if np.array_equal(pi_new, pi) and residual < delta * 1e-8:
            return float(-delta * np.mean(v))
        pi = pi_new
        v = evaluate(pi)
    raise NumericalError("policy iteration for the cell problem did not converge")


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian1D:
    """Tabulated Hbar1 on a symmetric momentum grid plus the macro potential."""

    micro_table: FunctionTable1D
    p_crit: float
    macro: Potential
    spec_name: str

    @classmethod
    def build(
        cls,
        spec: ProblemSpec,
        p_max: float | None = None,
        n_p: int = 2049,
        tol: float = 1e-8,
    ) -> "EffectiveHamiltonian1D":
        """Tabulate Hbar1 over [-p_max, p_max].

        The default range extends past the solver speed bound so conjugates
        at admissible velocities stay inside the table.
        """
        _check_micro(spec.micro)
        if p_max is None:
            p_max = spec.speed_bound() + 1.0
        if n_p % 2 == 0:
            n_p += 1  # keep p = 0 on the grid
        pair = _level_curve_samples(spec.micro, tol)
        pc = _flux(0.0, pair)
        p_half = np.linspace(0.0, p_max, (n_p + 1) // 2)
        vals_half = np.array([_effective_from_samples(pair, spec.micro.max_value, q, tol) for q in p_half])
        vals = np.concatenate([vals_half[:0:-1], vals_half])
        table = FunctionTable1D(-p_max, p_max, vals, convex_flag=True, even_flag=True)
        return cls(table, pc, spec.macro, spec.name)

    def oscillatory_at(self, p):
        """Interpolated Hbar1(p)."""
        return self.micro_table(p)

    def lagrangian_at(self, v):
        """Exact discrete conjugate Lbar1(v) = max_p (p v - Hbar1(p)) over the table grid."""
        pgrid = self.micro_table.grid()
        hvals = self.micro_table.values
        vv = np.atleast_1d(np.asarray(v, dtype=np.float64))
        out = np.max(vv[:, None] * pgrid[None, :] - hvals[None, :], axis=1)
        if np.ndim(v) == 0:
            return float(out[0])
        return out


def effective_macro(eff: EffectiveHamiltonian1D, x, p):
    """Full effective Hamiltonian Hbar(x, p) = -f(x) + Hbar1(p)."""
    parr = np.asarray(p, dtype=np.float64)
    if np.any(np.abs(parr) > eff.micro_table.hi + 1e-12):
        raise RangeError("momentum outside the tabulated range")
    return -eff.macro(x) + eff.micro_table(p)


def effective_lagrangian(eff: EffectiveHamiltonian1D, v_lo: float, v_hi: float, n_v: int) -> FunctionTable1D:
    """Tabulated effective Lagrangian Lbar1 = conjugate of Hbar1.

    The full Lbar(x, v) = f(x) + Lbar1(v) is assembled on demand by callers.
    """
    return legendre_transform(eff.micro_table, v_lo, v_hi, n_v)
