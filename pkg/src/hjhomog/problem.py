"""Problem data for 1D multiscale convex Hamilton-Jacobi equations.

Everything here is restricted to the mechanical separable form

    H(x, y, p) = -f(x) - W(y) + p^2 / 2

with a macro potential f on the line, a 1-periodic micro potential W, and the
exact Legendre dual

    L(x, y, v) = f(x) + W(y) + v^2 / 2.

The module provides the potential catalog used by the solvers and metric
computations, sampled 1D function tables, and a discrete Legendre transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

CATALOG_NAMES = ("free", "prop41", "prop42", "prop43_cauchy", "prop43_static")

_POTENTIAL_KINDS = ("zero", "constant", "tent_well", "vee_barrier", "clipped_power", "table")


@dataclass(frozen=True, eq=False)
class FunctionTable1D:
    """Uniformly sampled scalar function on [lo, hi] with linear interpolation.

    Outside [lo, hi] evaluation clamps to the endpoint values, unless
    periodic_flag is set, in which case the argument wraps modulo (hi - lo).
    """

    lo: float
    hi: float
    values: np.ndarray
    convex_flag: bool = False
    even_flag: bool = False
    periodic_flag: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 2:
            raise ConfigError("table needs at least two samples")
        if not self.hi > self.lo:
            raise ConfigError("table range must satisfy hi > lo")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def __call__(self, x):
        arr = np.asarray(x, dtype=np.float64)
        if self.periodic_flag:
            arr = self.lo + np.mod(arr - self.lo, self.hi - self.lo)
        out = np.interp(arr, self.grid(), self.values)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def second_differences(self) -> np.ndarray:
        return np.diff(self.values, 2)

    def is_convex(self, tol: float) -> bool:
        return bool(np.all(self.second_differences() >= -tol))

    def max_slope(self) -> float:
        return float(np.max(np.abs(np.diff(self.values)))) / self.spacing


def legendre_transform(table: FunctionTable1D, out_lo: float, out_hi: float, out_n: int) -> FunctionTable1D:
    """Discrete Legendre-Fenchel conjugate of a sampled function.

    Returns the table v -> max_p (p v - table(p)) with the max over the input
    sample grid. The output is convex by construction; noncoercive inputs
    (e.g. |p|) simply yield finite values that grow linearly from the edge of
    the input grid, so the caller restricts the output range to the region of
    interest.
    """
    if out_n < 2:
        raise ConfigError("conjugate table needs at least two samples")
    p = table.grid()
    v = np.linspace(out_lo, out_hi, out_n)
    vals = np.max(v[:, None] * p[None, :] - table.values[None, :], axis=1)
    even = table.even_flag and math.isclose(out_lo, -out_hi)
    return FunctionTable1D(out_lo, out_hi, vals, convex_flag=True, even_flag=even)


@dataclass(frozen=True, eq=False)
class Potential:
    """Scalar potential with evaluation metadata.

    kind selects the formula; params holds its scalar parameters. The
    metadata fields (lipschitz_constant, min_value, max_value) describe the
    exact function, with math.inf marking an unbounded Lipschitz constant.
    Micro potentials carry periodic=True and must be exactly 1-periodic.
    """

    kind: str
    params: tuple = ()
    lipschitz_constant: float = 0.0
    min_value: float = 0.0
    max_value: float = 0.0
    periodic: bool = False
    table: FunctionTable1D | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if self.kind == "table" and self.table is None:
            raise ConfigError("table potential requires a table")

    def _eval(self, y: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(y)
        if self.kind == "constant":
            return np.full_like(y, self.params[0])
        if self.kind == "tent_well":
            # W(y) = 1/2 - dist(y, Z), the 1-periodic tent with wells at half-integers
            return 0.5 - np.abs(y - np.round(y))
        if self.kind == "vee_barrier":
            # V(y) = min(1, 6 dist(y, 1/2 + Z)): zero at half-integer wells,
            # equal to 1 on the third of the period around the integers
            u = y - 0.5
            return np.minimum(1.0, 6.0 * np.abs(u - np.round(u)))
        if self.kind == "clipped_power":
            a = self.params[0]
            return np.minimum(np.abs(y), 1.0) ** a
        return np.asarray(self.table(y), dtype=np.float64)

    def __call__(self, y):
        arr = np.asarray(y, dtype=np.float64)
        out = self._eval(arr)
        if np.ndim(y) == 0:
            return float(out)
        return out

    @staticmethod
    def zero() -> "Potential":
        return Potential("zero", (), 0.0, 0.0, 0.0, periodic=True)

    @staticmethod
    def constant(a: float) -> "Potential":
        return Potential("constant", (float(a),), 0.0, float(a), float(a), periodic=True)

    @staticmethod
    def tent_well() -> "Potential":
        return Potential("tent_well", (), 1.0, 0.0, 0.5, periodic=True)

    @staticmethod
    def vee_barrier() -> "Potential":
        return Potential("vee_barrier", (), 6.0, 0.0, 1.0, periodic=True)

    @staticmethod
    def clipped_power(exponent: float) -> "Potential":
        if not 0.0 < exponent <= 1.0:
            raise ConfigError("clipped_power exponent must lie in (0, 1]")
        lip = 1.0 if exponent == 1.0 else math.inf
        return Potential("clipped_power", (float(exponent),), lip, 0.0, 1.0, periodic=False)

    @staticmethod
    def from_table(table: FunctionTable1D) -> "Potential":
        vals = table.values
        return Potential(
            "table",
            (),
            table.max_slope(),
            float(vals.min()),
            float(vals.max()),
            periodic=table.periodic_flag,
            table=table,
        )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A multiscale problem: macro potential f, micro potential W, initial data g."""

    name: str
    macro: Potential
    micro: Potential
    initial: Potential

    def __post_init__(self):
        if not self.micro.periodic:
            raise ConfigError("micro potential must be 1-periodic")

    @property
    def k0(self) -> float:
        """Uniform bound max f + max W on the potential part of the running cost."""
        return self.macro.max_value + self.micro.max_value

    @property
    def lip_macro(self) -> float:
        return self.macro.lipschitz_constant

    def speed_bound(self) -> float:
        """Default velocity truncation for dynamic programming.

        Large enough that optimal velocities stay strictly inside; the
        a-posteriori interiority check in the DP layers guards the choice.
        """
        lip_g = self.initial.lipschitz_constant
        if not math.isfinite(lip_g):
            raise ConfigError("initial data must be Lipschitz for the default speed bound")
        return 2.0 * math.sqrt(2.0 * (self.k0 + lip_g**2 + 1.0))


def eval_H(spec: ProblemSpec, x, y, p):
    """Hamiltonian H(x, y, p) = -f(x) - W(y) + p^2/2, vectorized."""
    return -spec.macro(x) - spec.micro(y) + 0.5 * np.square(p)


def eval_L(spec: ProblemSpec, x, y, v):
    """Lagrangian L(x, y, v) = f(x) + W(y) + v^2/2, the exact Legendre dual of eval_H."""
    return spec.macro(x) + spec.micro(y) + 0.5 * np.square(v)


def catalog(name: str) -> ProblemSpec:
    """Named problem instances used throughout the tests and experiments.

    free          f = 0, W = 0; exactly solvable baseline.
    prop41        f = 0, W = vee barrier (wells at half-integers, unit plateau
                  around the integers); oscillation-dominated lower-bound example.
    prop42        f = |x|^{1/4} clipped at 1, W = tent well; macro potential is
                  not Lipschitz at the origin, degrading the convergence rate.
    prop43_cauchy f = |x| clipped at 1, W = tent well; Lipschitz example whose
                  error sits at the eps scale.
    prop43_static same Hamiltonian as prop43_cauchy, used in discounted form.

    Initial data is identically zero in every entry.
    """
    zero = Potential.zero()
    if name == "free":
        return ProblemSpec(name, Potential.zero(), zero, zero)
    if name == "prop41":
        return ProblemSpec(name, Potential.zero(), Potential.vee_barrier(), zero)
    if name == "prop42":
        return ProblemSpec(name, Potential.clipped_power(0.25), Potential.tent_well(), zero)
    if name in ("prop43_cauchy", "prop43_static"):
        return ProblemSpec(name, Potential.clipped_power(1.0), Potential.tent_well(), zero)
    raise ConfigError(f"unknown catalog name {name!r}; expected one of {CATALOG_NAMES}")


def with_initial(spec: ProblemSpec, g: Potential, name: str | None = None) -> ProblemSpec:
    """Copy of a problem spec with different initial data."""
    return ProblemSpec(name or spec.name, spec.macro, spec.micro, g)
