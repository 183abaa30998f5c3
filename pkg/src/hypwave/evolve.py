"""Linear shifted-wave propagation and the split-step integrator for the critical equation.

States are carried as spectral coefficients. The linear flow is an exact
rotation per frequency; the nonlinearity is applied in physical space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import functionals as fn
from .specfun import as_dimension
from .transform import RadialField, TransformPlan, inverse, SpectralField, forward, _same_grid

BLOWUP_FACTOR = 1e3
SCATTER_EPS = 1e-3
NOISE_FLOOR = 1e-12


class BlowUp(ArithmeticError):
    """Raised by :func:`step` when the state stops being finite."""

    def __init__(self, time: float, norm: float, reason: str):
        super().__init__(f"blow-up at t={time:.6g}: {reason} (L^(p+1) norm {norm:.3e})")
        self.time = time
        self.norm = norm
        self.reason = reason


@dataclass(eq=False)
class StatePair:
    """Position/velocity pair at a fixed time, stored by spectral coefficients."""

    plan: TransformPlan
    u_hat: np.ndarray
    ut_hat: np.ndarray
    time: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_fields(cls, plan: TransformPlan, u: RadialField, ut: RadialField | None = None,
                    time: float = 0.0) -> "StatePair":
        _same_grid(plan.radial, u.grid)
        ut_hat = np.zeros(plan.spectral.size) if ut is None else forward(plan, ut).values
        return cls(plan, forward(plan, u).values, ut_hat, float(time))

    @classmethod
    def zero(cls, plan: TransformPlan) -> "StatePair":
        return cls(plan, np.zeros(plan.spectral.size), np.zeros(plan.spectral.size))

    @property
    def u(self) -> RadialField:
        if "u" not in self._cache:
            self._cache["u"] = inverse(self.plan, SpectralField(self.plan.spectral, self.u_hat))
        return self._cache["u"]

    @property
    def ut(self) -> RadialField:
        if "ut" not in self._cache:
            self._cache["ut"] = inverse(self.plan, SpectralField(self.plan.spectral, self.ut_hat))
        return self._cache["ut"]

    def energy_norm(self) -> float:
        """``||(u, ut)||_{H^{0,1} x L^2}``."""
        return energy_distance(self, None)


def energy_distance(a: StatePair, b: StatePair | None) -> float:
    """``||a - b||_{H^{0,1} x L^2}`` (or the norm of ``a`` when ``b`` is None)."""
    du, dv = (a.u_hat, a.ut_hat) if b is None else (a.u_hat - b.u_hat, a.ut_hat - b.ut_hat)
    lam = a.plan.spectral.nodes
    m = a.plan.spectral_measure
    return math.sqrt(float(np.dot(m, lam * lam * du * du + dv * dv)))


def _rotate(lam: np.ndarray, u_hat, ut_hat, t: float):
    c = np.cos(t * lam)
    s = np.sin(t * lam)
    return c * u_hat + (s / lam) * ut_hat, -lam * s * u_hat + c * ut_hat


def linear_propagate(plan: TransformPlan, state: StatePair, t: float) -> StatePair:
    """Exact free flow ``S_L(t)``: per-frequency rotation of ``(u~, ut~)``."""
    _same_grid(plan.spectral, state.plan.spectral)
    u_hat, ut_hat = _rotate(plan.spectral.nodes, state.u_hat, state.ut_hat, t)
    return StatePair(plan, u_hat, ut_hat, state.time + t)


def pullback(plan: TransformPlan, state: StatePair) -> StatePair:
    """Scattering profile candidate ``S_L(-t)(u(t), ut(t))``, returned at time 0."""
    back = linear_propagate(plan, state, -state.time)
    back.time = 0.0
    return back


def nonlinearity(u, zeta: float, dim):
    """``zeta |u|^{p_c - 1} u``; accepts a RadialField or an array."""
    d = as_dimension(dim)
    values = u.values if isinstance(u, RadialField) else np.asarray(u, dtype=float)
    if d.n == 3:
        sq = values * values
        out = sq * sq * values
    elif d.n == 4:
        out = values * values * values
    else:
        out = np.abs(values) ** (4.0 / 3.0) * values
    out = zeta * out
    return RadialField(u.grid, out) if isinstance(u, RadialField) else out


class _Stepper:
    """Strang splitting with the half-step rotation tables precomputed."""

    def __init__(self, plan: TransformPlan, h: float, zeta: float):
        lam = plan.spectral.nodes
        self.plan = plan
        self.h = h
        self.zeta = zeta
        self.dim = plan.dim
        self.c = np.cos(0.5 * h * lam)
        self.s = np.sin(0.5 * h * lam)
        self.s_over = self.s / lam
        self.lam_s = lam * self.s

    def half(self, u_hat, ut_hat):
        return (self.c * u_hat + self.s_over * ut_hat,
                self.c * ut_hat - self.lam_s * u_hat)

    def advance(self, u_hat, ut_hat):
        """One step; returns the new coefficients and the midpoint physical field."""
        # overflow is expected near blow-up; callers test for finiteness
        with np.errstate(over="ignore", invalid="ignore"):
            u_hat, ut_hat = self.half(u_hat, ut_hat)
            u_mid = self.plan.inverse_matrix @ u_hat
            if self.zeta != 0:
                force = nonlinearity(u_mid, self.zeta, self.dim)
                ut_hat = ut_hat + self.h * (self.plan.forward_matrix @ force)
            u_hat, ut_hat = self.half(u_hat, ut_hat)
        return u_hat, ut_hat, u_mid


def step(plan: TransformPlan, state: StatePair, h: float, zeta: float) -> StatePair:
    """Half free flow, velocity kick ``h F(u)`` at the midpoint, half free flow."""
    if h <= 0:
        raise ValueError("h must be positive")
    u_hat, ut_hat, _ = _Stepper(plan, h, zeta).advance(state.u_hat, state.ut_hat)
    if not (np.all(np.isfinite(u_hat)) and np.all(np.isfinite(ut_hat))):
        raise BlowUp(state.time + h, math.inf, "non-finite coefficients")
    return StatePair(plan, u_hat, ut_hat, state.time + h)


# ---------------------------------------------------------------------------
# driver

@dataclass(frozen=True)
class EvolveConfig:
    zeta: int = -1
    h: float = 0.01
    t_end: float = 10.0
    callback_stride: int = 10

    def __post_init__(self):
        if self.zeta not in (-1, 0, 1):
            raise ValueError("zeta must be -1, 0, or 1")
        if not 0 < self.h <= 0.1:
            raise ValueError("h must lie in (0, 0.1]")
        if self.callback_stride < 1:
            raise ValueError("callback_stride must be a positive integer")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy_total: float
    energy_kinetic: float
    energy_elastic: float
    energy_potential: float
    l2: float
    lpc1: float
    morawetz_acc: float
    morawetz_budget: float
    y_acc: float
    pullback_dist: float

    COLUMNS = ("t", "energy_total", "energy_kinetic", "energy_elastic", "energy_potential", "l2",
               "lpc1", "morawetz_acc", "morawetz_budget", "y_acc", "pullback_dist")

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    pullbacks: list = field(default_factory=list)
    status: str = "running"
    blowup: BlowUp | None = None
    final_state: StatePair | None = None
    morawetz: fn.MorawetzAccumulator | None = None
    ynorm: fn.YNormAccumulator | None = None
    l1l2_force: float = 0.0
    t_end: float = 0.0
    initial_energy: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _record(plan, state, zeta, traj: Trajectory, prev_pullback) -> StatePair:
    e = fn.energy(plan, state, zeta)
    u = state.u
    p = plan.dim.p_c_f
    pb = pullback(plan, state)
    dist = 0.0 if prev_pullback is None else energy_distance(pb, prev_pullback)
    traj.records.append(DiagnosticsRecord(
        state.time, e.total, e.kinetic, e.elastic, e.potential, fn.lq_norm(u, 2.0),
        fn.lq_norm(u, p + 1.0), traj.morawetz.value, traj.morawetz.budget, traj.ynorm.value, dist))
    traj.pullbacks.append(pb)
    return pb


def evolve(plan: TransformPlan, state: StatePair, cfg: EvolveConfig, observers=()) -> Trajectory:
    """Integrate from ``state.time`` to ``cfg.t_end``.

    Every step feeds the Morawetz and Y-norm accumulators with the midpoint
    field of the kick (a midpoint rule in time). Every ``callback_stride``
    steps a :class:`DiagnosticsRecord` and a pullback snapshot are stored and
    each observer is called as ``observer(state, trajectory)``.

    A non-finite state or an ``L^{p_c+1}`` norm above ``1e3 (1 + initial)``
    ends the run with ``status == "blowup"``; nothing is raised.
    """
    dim = plan.dim
    p = dim.p_c_f
    zeta = cfg.zeta
    e0 = fn.energy(plan, state, zeta).total
    traj = Trajectory(morawetz=fn.MorawetzAccumulator(budget=dim.n * e0),
                      ynorm=fn.YNormAccumulator(p), t_end=cfg.t_end, initial_energy=e0)
    sentinel = BLOWUP_FACTOR * (1.0 + fn.lq_norm(state.u, p + 1.0))
    stepper = _Stepper(plan, cfg.h, zeta)
    weight_m = fn.morawetz_weight(plan.radial)
    measure = plan.radial.measure
    r = plan.radial.nodes
    rho = dim.rho_f
    weight_mass = rho * (rho - 1.0) * np.cosh(r) / np.sinh(r) ** 3 * measure

    steps = int(round((cfg.t_end - state.time) / cfg.h))
    prev_pb = _record(plan, state, zeta, traj, None)
    for obs in observers:
        obs(state, traj)
    u_hat, ut_hat, t = state.u_hat, state.ut_hat, state.time
    for k in range(1, steps + 1):
        u_hat, ut_hat, u_mid = stepper.advance(u_hat, ut_hat)
        t = state.time + k * cfg.h
        a = np.abs(u_mid)
        lp1 = float(np.dot(measure, a ** (p + 1.0))) ** (1.0 / (p + 1.0))
        finite = np.isfinite(lp1) and np.all(np.isfinite(ut_hat))
        if not finite or lp1 > sentinel:
            reason = "non-finite state" if not finite else f"L^(p+1) norm above {sentinel:.3e}"
            traj.blowup = BlowUp(t, lp1, reason)
            traj.status = "blowup"
            return traj
        traj.morawetz.add(float(np.dot(weight_m, a ** (p + 1.0))), cfg.h,
                          float(np.dot(weight_mass, a * a)))
        y_rate = math.sqrt(float(np.dot(measure, a ** (2.0 * p))))
        traj.ynorm.value += y_rate * cfg.h
        traj.l1l2_force += abs(zeta) * y_rate * cfg.h
        if k % cfg.callback_stride == 0 or k == steps:
            current = StatePair(plan, u_hat, ut_hat, t)
            prev_pb = _record(plan, current, zeta, traj, prev_pb)
            for obs in observers:
                obs(current, traj)
    traj.status = "completed"
    traj.final_state = StatePair(plan, u_hat, ut_hat, t)
    return traj


@dataclass(frozen=True)
class ScatterVerdict:
    """Outcome of :func:`scattering_detect`.

    ``status`` is one of ``"scattered"``, ``"undecided"``, ``"blowup"``;
    ``limit`` is the final pullback when scattered.
    """

    status: str
    limit: StatePair | None
    increments: tuple
    threshold: float
    reason: str = ""

    @property
    def last_increment(self) -> float:
        return self.increments[-1] if self.increments else math.nan


def scattering_detect(traj: Trajectory, eps: float = SCATTER_EPS, samples: int = 5) -> ScatterVerdict:
    """Classify a trajectory by Cauchy convergence of its pullbacks.

    ``samples`` evenly spaced pullbacks are taken from the final quarter of
    the run. The run counts as scattered when successive differences are
    non-increasing and the last one is below ``eps (1 + sqrt(E))``.
    Differences below ``NOISE_FLOOR (1 + sqrt(E))`` are treated as zero, so
    roundoff jitter of an already converged run does not break monotonicity.
    A negative energy rules scattering out: the limit would be a free wave
    whose (nonnegative) linear energy equals E.
    """
    e = traj.initial_energy
    scale = 1.0 + math.sqrt(max(e, 0.0))
    threshold = eps * scale
    if traj.status == "blowup":
        return ScatterVerdict("blowup", None, (), threshold, traj.blowup.reason if traj.blowup else "")
    if not traj.records:
        return ScatterVerdict("undecided", None, (), threshold, "empty trajectory")
    times = traj.times
    t0, t1 = times[0], times[-1]
    idx = np.flatnonzero(times >= t0 + 0.75 * (t1 - t0))
    if idx.size < 4:
        return ScatterVerdict("undecided", None, (), threshold, "fewer than 4 pullbacks in final quarter")
    picks = np.unique(np.round(np.linspace(idx[0], idx[-1], min(samples, idx.size))).astype(int))
    snaps = [traj.pullbacks[i] for i in picks]
    inc = tuple(energy_distance(a, b) for a, b in zip(snaps[1:], snaps[:-1]))
    floor = NOISE_FLOOR * scale
    clipped = [0.0 if d < floor else d for d in inc]
    if e < 0:
        return ScatterVerdict("undecided", None, inc, threshold, "negative energy")
    if any(b > a for a, b in zip(clipped, clipped[1:])):
        return ScatterVerdict("undecided", None, inc, threshold, "pullback increments not monotone")
    if inc[-1] >= threshold:
        return ScatterVerdict("undecided", None, inc, threshold, "last increment above threshold")
    return ScatterVerdict("scattered", snaps[-1], inc, threshold)
