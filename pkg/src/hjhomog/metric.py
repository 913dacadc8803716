"""Minimal-action metrics between space-time points.

Each quantity is an infimum of running cost over curves joining (t1, x) to
(t2, y), computed by backward dynamic programming over piecewise-linear
curves on a grid anchored at integer multiples of h. Per slice a curve at
node z moves to z' with |z' - z| <= M*dt and pays dt * L(z, z/eps,
-(z' - z)/dt); variants freeze the slow argument at c, replace the running
cost by the effective Lagrangian, or weight each slice by exp(-lam * s) at
its left endpoint. Minimizers come from backpointers with smallest-index
tie-breaking, so every result is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dp_core import metric_curve
from .effective import EffectiveHamiltonian1D
from .errors import ConfigError, InfeasibleQueryError, NumericalError
from .problem import ProblemSpec

KINDS = ("m_eps", "m_eps_frozen", "m_bar", "m_bar_frozen", "m_eps_disc", "m_bar_disc")

_SATURATION_LIMIT = 0.01
_MICRO_CELLS = 32  # minimum grid cells per oscillation period


@dataclass(frozen=True)
class DPConfig:
    """Discretization for metric queries.

    speed_bound None lets each query derive M from an energy bound on its
    own minimizers; an explicit value is taken as-is (the interiority check
    catches values that are too small). domain_radius None sizes the grid to
    the query's reachable cone, which finite speed of propagation makes
    value-identical to any larger domain containing it.
    """

    dt: float
    h: float
    speed_bound: float | None = None
    domain_radius: float | None = None
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.dt <= 0.0 or self.h <= 0.0:
            raise ConfigError("dt and h must be positive")
        if self.speed_bound is not None and self.speed_bound <= 0.0:
            raise ConfigError("speed_bound must be positive")
        if self.domain_radius is not None and self.domain_radius <= 0.0:
            raise ConfigError("domain_radius must be positive")
        if self.tol <= 0.0:
            raise ConfigError("tol must be positive")

    @staticmethod
    def for_scale(eps: float, dt_over_eps: float = 0.1,
                  h_over_eps: float = 1.0 / 64.0, **kw) -> "DPConfig":
        """Steps proportional to the oscillation scale entering the query."""
        if eps <= 0.0:
            raise ConfigError("eps must be positive")
        return DPConfig(dt=eps * dt_over_eps, h=eps * h_over_eps, **kw)

    def scaled(self, factor: float) -> "DPConfig":
        """Same physical settings with dt and h multiplied by factor."""
        return DPConfig(dt=self.dt * factor, h=self.h * factor,
                        speed_bound=self.speed_bound,
                        domain_radius=self.domain_radius, tol=self.tol)

    def refined(self) -> "DPConfig":
        return self.scaled(0.5)

    def quantization_tol(self, t_span: float, speed: float) -> float:
        """Declared convergence tolerance for one query at this resolution.

        Reachable velocities are quantized at h/dt, biasing a quadratic
        kinetic cost by at most (h/dt)^2 / 8 per unit time; endpoint
        snapping adds speed * h.
        """
        sigma = self.h / self.dt
        return 0.125 * sigma * sigma * t_span + speed * self.h


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Grid curve sampled at uniform times start_time + k*dt."""

    start_time: float
    dt: float
    nodes: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(self.nodes.size)

    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def max_speed(self) -> float:
        if self.nodes.size < 2:
            return 0.0
        return float(np.max(np.abs(self.steps()))) / self.dt


@dataclass(frozen=True, eq=False)
class MetricResult:
    """Value of one metric query with its minimizing curve and diagnostics.

    snap_error estimates the effect of moving each endpoint to its nearest
    node (values are speed_bound-Lipschitz in the endpoints); tol is the
    declared convergence tolerance of the discretization.
    """

    value: float
    kind: str
    minimizer: DiscreteCurve
    snap_error: float
    saturation_fraction: float
    tol: float
    query: dict

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "snap_error": self.snap_error,
            "saturation_fraction": self.saturation_fraction,
            "tol": self.tol,
            "query": dict(self.query),
            "curve_times": self.minimizer.times.tolist(),
            "curve_nodes": self.minimizer.nodes.tolist(),
        }


@dataclass(frozen=True)
class _Geometry:
    i_lo: int
    xg: np.ndarray
    i_start: int
    i_end: int
    K: int
    dt: float
    J: int
    M: float
    x_snap: float
    y_snap: float
    span: float


def _auto_speed(spec: ProblemSpec, x: float, y: float, span: float, lam: float) -> float:
    # Energy bound: a minimizer beating the straight line keeps
    # v^2/2 <= vbar^2/2 + 2*k0 (discounting distorts by at most exp(lam*span)).
    vbar = abs(y - x) / span
    return math.sqrt((vbar * vbar + 4.0 * spec.k0) * math.exp(lam * span)) + 1.0


def _geometry(t1: float, t2: float, x: float, y: float, cfg: DPConfig, M: float) -> _Geometry:
    span = t2 - t1
    if span <= 0.0:
        raise ConfigError("query needs t2 > t1")
    if abs(y - x) > M * span * (1.0 + 1e-12):
        raise InfeasibleQueryError(
            f"|y - x| = {abs(y - x):g} exceeds M*(t2 - t1) = {M * span:g}")
    K = max(1, round(span / cfg.dt))
    dt = span / K
    h = cfg.h
    J = int(math.floor(M * dt / h + 1e-12))
    if J < 1:
        raise ConfigError("h exceeds M*dt; no admissible move on the grid")
    ix = round(x / h)
    iy = round(y / h)
    if abs(iy - ix) > J * K:
        raise InfeasibleQueryError(
            "snapped endpoints unreachable on the move lattice; "
            "refine dt or raise speed_bound")
    if cfg.domain_radius is not None:
        R = cfg.domain_radius
        if R < max(abs(x), abs(y)) + M * span - 1e-9:
            raise ConfigError(
                f"domain_radius {R:g} below max(|x|,|y|) + M*(t2 - t1) = "
                f"{max(abs(x), abs(y)) + M * span:g}")
        i_lo = -int(math.ceil(R / h))
        i_hi = -i_lo
    else:
        # whole-cell bound on how far any admissible path can leave [x, y]
        slack = (J * K - abs(iy - ix) + 1) // 2 + 2
        i_lo = min(ix, iy) - slack
        i_hi = max(ix, iy) + slack
    xg = np.arange(i_lo, i_hi + 1, dtype=np.float64) * h
    return _Geometry(i_lo=i_lo, xg=xg, i_start=ix - i_lo, i_end=iy - i_lo,
                     K=K, dt=dt, J=J, M=M, x_snap=ix * h, y_snap=iy * h, span=span)


def _solve(kind: str, t1: float, t2: float, x: float, y: float,
           spec: ProblemSpec, cfg: DPConfig, *, eps: float | None = None,
           c: float | None = None, lam: float = 0.0,
           eff: EffectiveHamiltonian1D | None = None) -> MetricResult:
    if t2 <= t1:
        raise ConfigError("query needs t2 > t1")
    if eps is not None and cfg.h > eps / _MICRO_CELLS * (1.0 + 1e-9):
        raise ConfigError(
            f"h = {cfg.h:g} under-resolves the oscillation scale eps = {eps:g}; "
            f"need h <= eps/{_MICRO_CELLS}")
    M = cfg.speed_bound
    if M is None:
        M = _auto_speed(spec, x, y, t2 - t1, lam)
    g = _geometry(t1, t2, x, y, cfg, M)
    moves = np.arange(-g.J, g.J + 1, dtype=np.float64)
    vel = -(moves * cfg.h) / g.dt

    if kind in ("m_bar", "m_bar_frozen", "m_bar_disc"):
        B = g.dt * eff.lagrangian_at(vel)
    else:
        B = g.dt * 0.5 * vel * vel

    if kind in ("m_eps", "m_eps_disc"):
        state = spec.macro(g.xg) + spec.micro(g.xg / eps)
    elif kind == "m_eps_frozen":
        state = float(spec.macro(c)) + spec.micro(g.xg / eps)
    elif kind in ("m_bar", "m_bar_disc"):
        state = spec.macro(g.xg)
    elif kind == "m_bar_frozen":
        state = np.full(g.xg.size, float(spec.macro(c)))
    else:
        raise ConfigError(f"unknown metric kind {kind!r}")
    A = g.dt * np.asarray(state, dtype=np.float64)

    if lam > 0.0:
        weights = np.exp(-lam * (t1 + g.dt * np.arange(g.K)))
    else:
        weights = np.ones(g.K)
    terminal = np.full(g.xg.size, np.inf)
    terminal[g.i_end] = 0.0

    value, idx = metric_curve(A, B, g.J, g.K, weights, terminal, g.i_start)
    if not math.isfinite(value):
        raise NumericalError("no admissible path found; grid or move set too small")
    steps = np.diff(idx)
    sat = float(np.mean(np.abs(steps) == g.J)) if steps.size else 0.0
    if sat > _SATURATION_LIMIT:
        raise NumericalError(
            f"minimizer saturates the speed bound M = {g.M:g} on {sat:.1%} of "
            "steps; raise speed_bound or refine dt")
    curve = DiscreteCurve(start_time=t1, dt=g.dt,
                          nodes=(idx + g.i_lo) * cfg.h)
    query = {"kind": kind, "spec": spec.name, "t1": t1, "t2": t2, "x": x,
             "y": y, "x_snap": g.x_snap, "y_snap": g.y_snap, "eps": eps,
             "c": c, "lam": lam if lam > 0.0 else None, "dt": g.dt,
             "h": cfg.h, "J": g.J, "K": g.K, "M": g.M}
    return MetricResult(value=float(value), kind=kind, minimizer=curve,
                        snap_error=g.M * cfg.h, saturation_fraction=sat,
                        tol=cfg.quantization_tol(g.span, g.M), query=query)


def m_eps(t1: float, t2: float, x: float, y: float, eps: float,
          spec: ProblemSpec, cfg: DPConfig) -> MetricResult:
    """Minimal action between (t1, x) and (t2, y) with oscillation scale eps."""
    return _solve("m_eps", t1, t2, x, y, spec, cfg, eps=eps)


def m_eps_frozen(c: float, t1: float, t2: float, x: float, y: float, eps: float,
                 spec: ProblemSpec, cfg: DPConfig) -> MetricResult:
    """Same as m_eps with the slow argument of the running cost pinned to c."""
    return _solve("m_eps_frozen", t1, t2, x, y, spec, cfg, eps=eps, c=c)


def m_bar(t1: float, t2: float, x: float, y: float, spec: ProblemSpec,
          eff: EffectiveHamiltonian1D, cfg: DPConfig) -> MetricResult:
    """Minimal action for the homogenized running cost f(z) + effective kinetic part."""
    return _solve("m_bar", t1, t2, x, y, spec, cfg, eff=eff)


def m_bar_frozen(c: float, t1: float, t2: float, x: float, y: float,
                 spec: ProblemSpec, eff: EffectiveHamiltonian1D,
                 cfg: DPConfig) -> MetricResult:
    """Homogenized action with the slow argument pinned to c."""
    return _solve("m_bar_frozen", t1, t2, x, y, spec, cfg, c=c, eff=eff)


def m_discounted(kind: str, lam: float, t1: float, t2: float, x: float,
                 y: float, eps: float | None, spec: ProblemSpec,
                 eff: EffectiveHamiltonian1D | None, cfg: DPConfig) -> MetricResult:
    """Discounted variants: slice costs carry weight exp(-lam * s_k).

    kind selects the running cost: "m_eps_disc" uses the oscillatory one
    (eps required), "m_bar_disc" the homogenized one (eff required).
    """
    if lam <= 0.0:
        raise ConfigError("discount rate lam must be positive")
    if kind == "m_eps_disc":
        if eps is None:
            raise ConfigError("m_eps_disc needs eps")
        return _solve("m_eps_disc", t1, t2, x, y, spec, cfg, eps=eps, lam=lam)
    if kind == "m_bar_disc":
        if eff is None:
            raise ConfigError("m_bar_disc needs the effective Hamiltonian")
        return _solve("m_bar_disc", t1, t2, x, y, spec, cfg, lam=lam, eff=eff)
    raise ConfigError(f"unknown discounted kind {kind!r}")


def curve_running_cost(curve: DiscreteCurve, kind: str, spec: ProblemSpec, *,
                       eps: float | None = None, c: float | None = None,
                       lam: float = 0.0,
                       eff: EffectiveHamiltonian1D | None = None) -> float:
    """Re-integrate the running cost along a curve.

    Uses the same rule as the dynamic program: state cost at the left node
    of each slice, velocity -(z' - z)/dt, discount weight at the slice's
    left endpoint time. Reproduces MetricResult.value up to rounding.
    """
    z = curve.nodes
    dt = curve.dt
    vel = -np.diff(z) / dt
    left = z[:-1]
    if kind in ("m_eps", "m_eps_disc"):
        state = spec.macro(left) + spec.micro(left / eps)
    elif kind == "m_eps_frozen":
        state = float(spec.macro(c)) + spec.micro(left / eps)
    elif kind in ("m_bar", "m_bar_disc"):
        state = spec.macro(left)
    elif kind == "m_bar_frozen":
        state = np.full(left.size, float(spec.macro(c)))
    else:
        raise ConfigError(f"unknown metric kind {kind!r}")
    if kind in ("m_bar", "m_bar_frozen", "m_bar_disc"):
        kinetic = eff.lagrangian_at(vel)
    else:
        kinetic = 0.5 * vel * vel
    if lam > 0.0:
        w = np.exp(-lam * (curve.start_time + dt * np.arange(vel.size)))
    else:
        w = np.ones(vel.size)
    return float(np.sum(w * dt * (np.asarray(state) + kinetic)))


def check_scaling_lemma(c: float, t: float, y: float, spec: ProblemSpec,
                        cfg: DPConfig, reverse: bool = False) -> float:
    """Gap of the curve-doubling inequality at unit oscillation scale.

    Returns m_frozen(0, 2t, 0, 2y) - 2 * m_frozen(0, t, 0, y); the doubling
    inequality asserts this stays below a constant independent of c and t.
    reverse=True returns the negated gap, covering the opposite inequality.
    """
    big = m_eps_frozen(c, 0.0, 2.0 * t, 0.0, 2.0 * y, 1.0, spec, cfg)
    small = m_eps_frozen(c, 0.0, t, 0.0, y, 1.0, spec, cfg)
    gap = big.value - 2.0 * small.value
    return -gap if reverse else gap


def check_lemma_metric(c: float, t: float, x: float, y: float, eps_list,
                       spec: ProblemSpec, eff: EffectiveHamiltonian1D,
                       cfg: DPConfig) -> np.ndarray:
    """Deviation |m_eps_frozen - m_bar_frozen| across an eps sweep.

    cfg sets the resolution for the largest eps; a smaller entry at ratio
    r = eps/eps_max runs with dt scaled by r and h by r^2. Scaling h twice
    as fast shrinks the velocity quantum h/dt proportionally to eps, so the
    discretization residual of the difference scales like the O(eps) bound
    under test instead of drowning it at the small end of the sweep. Both
    quantities are evaluated on the same grid per eps. Returns rows
    (eps, deviation), largest eps first.
    """
    eps_sorted = sorted(float(e) for e in eps_list)
    if not eps_sorted:
        raise ConfigError("eps_list must be nonempty")
    eps_ref = eps_sorted[-1]
    rows = []
    for eps in reversed(eps_sorted):
        r = eps / eps_ref
        q = DPConfig(dt=cfg.dt * r, h=cfg.h * r * r, speed_bound=cfg.speed_bound,
                     domain_radius=cfg.domain_radius, tol=cfg.tol)
        osc = m_eps_frozen(c, 0.0, t, x, y, eps, spec, q)
        hom = m_bar_frozen(c, 0.0, t, x, y, spec, eff, q)
        rows.append((eps, abs(osc.value - hom.value)))
    return np.array(rows)
