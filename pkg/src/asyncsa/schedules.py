"""Step-size policies and agent activation.

Conventions
-----------
* Ticks are global and 0-indexed.  At tick n an active agent i scales its
  update by a(v) where v is the number of ticks *before* n at which i was
  active.  With every agent active at every tick this reduces to a(n).
* Activation counters live in AgentSchedule and are advanced once per tick
  after the step sizes for that tick have been read.
* Every policy keeps a(n) in (0, 1]; constants are accepted for
  diagnostics only and are flagged as neither vanishing nor square
  summable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import DOMAIN_ACTIVATION, stream
from .errors import ConfigError, InsufficientActivationError

__all__ = [
    "HarmonicSteps",
    "PowerSteps",
    "ConstantSteps",
    "step_policy_from_config",
    "AllActive",
    "RoundRobin",
    "BernoulliActivation",
    "activation_from_config",
    "AgentSchedule",
    "effective_step",
    "timeline",
    "balance_ratio",
]


# ---------------------------------------------------------------------------
# step-size policies


@dataclass(frozen=True)
class HarmonicSteps:
    """a(n) = 1 / (n + c) with c >= 1 so that a(n) <= 1."""

    c: float = 1.0
    kind: str = field(default="harmonic", init=False)
    sum_diverges: bool = field(default=True, init=False)

    def __post_init__(self):
        if not self.c >= 1.0:
            raise ConfigError("harmonic steps need c >= 1")

    @property
    def square_summable(self) -> bool:
        return True

    def a(self, n) -> float:
        return 1.0 / (np.asarray(n, dtype=float) + self.c)

    def a_of(self, counts: np.ndarray) -> np.ndarray:
        return 1.0 / (counts + self.c)

    def to_config(self) -> dict:
        return {"kind": "harmonic", "c": float(self.c)}


@dataclass(frozen=True)
class PowerSteps:
    """a(n) = 1 / (n + c)^p for p in (0, 1].

    Square summability holds only for p > 0.5; smaller exponents are still
    constructible so the diagnostics can demonstrate the failure.
    """

    p: float
    c: float = 1.0
    kind: str = field(default="power", init=False)
    sum_diverges: bool = field(default=True, init=False)

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("power steps need p in (0, 1]")
        if not self.c >= 1.0:
            raise ConfigError("power steps need c >= 1")

    @property
    def square_summable(self) -> bool:
        return self.p > 0.5

    def a(self, n) -> float:
        return 1.0 / (np.asarray(n, dtype=float) + self.c) ** self.p

    def a_of(self, counts: np.ndarray) -> np.ndarray:
        return 1.0 / (counts + self.c) ** self.p

    def to_config(self) -> dict:
        return {"kind": "power", "p": float(self.p), "c": float(self.c)}


@dataclass(frozen=True)
class ConstantSteps:
    """a(n) = a0; diagnostics and deterministic reductions only."""

    a0: float
    kind: str = field(default="constant", init=False)
    sum_diverges: bool = field(default=True, init=False)

    def __post_init__(self):
        if not 0.0 < self.a0 <= 1.0:
            raise ConfigError("constant steps need a0 in (0, 1]")

    @property
    def square_summable(self) -> bool:
        return False

    def a(self, n) -> float:
        return np.full_like(np.asarray(n, dtype=float), self.a0) if np.ndim(n) else self.a0

    def a_of(self, counts: np.ndarray) -> np.ndarray:
        return np.full(len(counts), self.a0)

    def to_config(self) -> dict:
        return {"kind": "constant", "a0": float(self.a0)}


StepSizePolicy = HarmonicSteps | PowerSteps | ConstantSteps


def step_policy_from_config(spec: dict) -> StepSizePolicy:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("steps config must be a mapping with a 'kind' key")
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        if kind == "harmonic":
            policy = HarmonicSteps(c=float(spec.pop("c", 1.0)))
        elif kind == "power":
            policy = PowerSteps(p=float(spec.pop("p")), c=float(spec.pop("c", 1.0)))
        elif kind == "constant":
            policy = ConstantSteps(a0=float(spec.pop("a0")))
        else:
            raise ConfigError(f"unknown steps kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"steps config missing key {exc.args[0]!r}") from None
    if spec:
        raise ConfigError(f"unknown steps keys: {sorted(spec)}")
    return policy


# ---------------------------------------------------------------------------
# activation policies


@dataclass(frozen=True)
class AllActive:
    kind: str = field(default="all", init=False)

    def to_config(self) -> dict:
        return {"kind": "all"}


@dataclass(frozen=True)
class RoundRobin:
    """k agents per tick, cycling 0..d-1 in index order."""

    k: int = 1
    kind: str = field(default="round-robin", init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("round-robin needs k >= 1")

    def to_config(self) -> dict:
        return {"kind": "round-robin", "k": int(self.k)}


@dataclass(frozen=True, eq=False)
class BernoulliActivation:
    """Each agent active independently with probability q_i; empty draws
    are resampled so every tick updates at least one agent."""

    q: np.ndarray
    kind: str = field(default="bernoulli", init=False)

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if not np.all((q > 0) & (q <= 1)):
            raise ConfigError("bernoulli activation needs q in (0, 1]")
        object.__setattr__(self, "q", q)

    def to_config(self) -> dict:
        return {"kind": "bernoulli", "q": [float(v) for v in self.q]}


ActivationPolicy = AllActive | RoundRobin | BernoulliActivation


def activation_from_config(spec: dict | None) -> ActivationPolicy:
    if spec is None:
        return AllActive()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("activation config must be a mapping with a 'kind' key")
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        if kind == "all":
            policy = AllActive()
        elif kind == "round-robin":
            policy = RoundRobin(k=int(spec.pop("k", 1)))
        elif kind == "bernoulli":
            policy = BernoulliActivation(q=spec.pop("q"))
        else:
            raise ConfigError(f"unknown activation kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"activation config missing key {exc.args[0]!r}") from None
    if spec:
        raise ConfigError(f"unknown activation keys: {sorted(spec)}")
    return policy


class _AllSampler:
    def __init__(self, d: int):
        self._mask = np.ones(d, dtype=bool)

    def next(self, n: int) -> np.ndarray:
        return self._mask


class _RoundRobinSampler:
    def __init__(self, d: int, k: int):
        self._d = d
        self._k = min(k, d)

    def next(self, n: int) -> np.ndarray:
        mask = np.zeros(self._d, dtype=bool)
        start = (n * self._k) % self._d
        idx = (start + np.arange(self._k)) % self._d
        mask[idx] = True
        return mask


class _BernoulliSampler:
    _CHUNK = 4096

    def __init__(self, q: np.ndarray, d: int, seed: int):
        if q.size == 1:
            q = np.full(d, float(q[0]))
        if q.shape != (d,):
            raise ConfigError(f"bernoulli q must be scalar or length {d}")
        self._q = q
        self._rng = stream(seed, DOMAIN_ACTIVATION)
        self._buf = np.empty((0, d))
        self._i = 0

    def _row(self) -> np.ndarray:
        if self._i >= len(self._buf):
            self._buf = self._rng.random((self._CHUNK, len(self._q)))
            self._i = 0
        row = self._buf[self._i]
        self._i += 1
        return row

    def next(self, n: int) -> np.ndarray:
        while True:
            mask = self._row() < self._q
            if mask.any():
                return mask


def _make_sampler(policy: ActivationPolicy, d: int, seed: int):
    if isinstance(policy, AllActive):
        return _AllSampler(d)
    if isinstance(policy, RoundRobin):
        return _RoundRobinSampler(d, policy.k)
    return _BernoulliSampler(policy.q, d, seed)


@dataclass
class AgentSchedule:
    """Activation source plus per-agent update counters for one run."""

    d: int
    policy: ActivationPolicy
    seed: int
    counters: np.ndarray
    sampler: object

    @classmethod
    def create(cls, policy: ActivationPolicy, d: int, seed: int) -> "AgentSchedule":
        if d < 1:
            raise ConfigError("dimension must be >= 1")
        return cls(
            d=d,
            policy=policy,
            seed=int(seed),
            counters=np.zeros(d, dtype=np.int64),
            sampler=_make_sampler(policy, d, int(seed)),
        )

    def fresh_copy(self) -> "AgentSchedule":
        return AgentSchedule.create(self.policy, self.d, self.seed)

    def advance(self, mask: np.ndarray) -> None:
        self.counters += mask


# ---------------------------------------------------------------------------
# derived schedule quantities


def effective_step(
    n: int,
    active: np.ndarray,
    counters: np.ndarray,
    policy: StepSizePolicy,
) -> tuple[float, np.ndarray]:
    """Largest active step size and per-agent fractions for tick n.

    Returns (abar, q) with abar = max over active i of a(counters[i]) and
    q_i = a(counters[i]) / abar for active agents, 0 elsewhere.
    """
    active = np.asarray(active, dtype=bool)
    if not active.any():
        raise ValueError("effective_step needs at least one active agent")
    a = policy.a_of(np.asarray(counters))
    abar = float(a[active].max())
    q = np.where(active, a / abar, 0.0)
    return abar, q


def timeline(policy: StepSizePolicy, schedule: AgentSchedule, ticks: int) -> np.ndarray:
    """Cumulative rescaled time t(0..ticks), t(n) = sum of abar over m < n.

    Simulates a fresh copy of the schedule so the caller's counters and
    activation stream are untouched.
    """
    if ticks < 0:
        raise ValueError("ticks must be >= 0")
    sched = schedule.fresh_copy()
    t = np.zeros(ticks + 1)
    if isinstance(sched.policy, AllActive):
        # every counter equals the tick index, so abar(m) = a(m)
        t[1:] = np.cumsum(policy.a(np.arange(ticks)))
        return t
    acc = 0.0
    for m in range(ticks):
        mask = sched.sampler.next(m)
        abar, _ = effective_step(m, mask, sched.counters, policy)
        acc += abar
        t[m + 1] = acc
        sched.advance(mask)
    return t


def balance_ratio(
    counters_trace: np.ndarray,
    policy: StepSizePolicy,
    i: int,
    j: int,
    n: int,
) -> float:
    """Ratio of cumulative step sizes sum_{m<=n} a(v(m,i)) / a(v(m,j)).

    ``counters_trace`` holds one row per tick with the counter values the
    step sizes were read from (row m = counts before tick m).  Requires
    both agents to have updated at least once by tick n; the ratio is not
    meaningful as balance evidence otherwise.
    """
    counters_trace = np.asarray(counters_trace)
    if n < 0 or n >= len(counters_trace):
        raise ValueError("tick n outside the recorded trace")
    if i == j:
        return 1.0
    for agent in (i, j):
        if counters_trace[n, agent] == 0:
            raise InsufficientActivationError(
                f"agent {agent} never active in the first {n} ticks"
            )
    num = float(np.sum(policy.a_of(counters_trace[: n + 1, i])))
    den = float(np.sum(policy.a_of(counters_trace[: n + 1, j])))
    return num / den
