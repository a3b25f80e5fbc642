"""Measurement attacks: which streams are compromised and what they report.

A strategy is any callable ``strategy(t, streams, clean, theta, rows)``
returning the attacked values of ``streams``; ``clean`` holds their
unattacked values and ``rows`` their measurement vectors. Strategies must
be pure so that trials stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidCount


class NoAttack:
    kind = "none"

    def __call__(self, t, streams, clean, theta, rows):
        return clean

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ConstantValue:
    """Compromised streams report ``value`` regardless of the truth."""

    value: float
    kind = "constant"

    def __call__(self, t, streams, clean, theta, rows):
        return np.full(len(streams), float(self.value))

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class ScaledParameter:
    """Report ``factor * h_p . theta + noise`` (the noise of the clean reading)."""

    factor: float
    kind = "scaled"

    def __call__(self, t, streams, clean, theta, rows):
        return clean + (self.factor - 1.0) * (rows @ theta)

    def to_dict(self):
        return {"kind": self.kind, "factor": self.factor}


@dataclass(frozen=True, eq=False)
class FixedTarget:
    """Coordinated attack: every compromised stream measures a fake parameter."""

    target: np.ndarray
    kind = "fixed_target"

    def __post_init__(self):
        t = np.array(self.target, dtype=float).ravel()
        t.setflags(write=False)
        object.__setattr__(self, "target", t)

    def __call__(self, t, streams, clean, theta, rows):
        return clean + rows @ (self.target - theta)

    def to_dict(self):
        return {"kind": self.kind, "target": self.target.tolist()}


@dataclass(frozen=True, eq=False)
class CustomTimeSeries:
    """User-supplied table of reported values.

    ``table`` has one row per iteration and either one column (shared by all
    compromised streams) or one column per compromised stream, in increasing
    stream order. Past the last row the last row is repeated.
    """

    table: np.ndarray
    kind = "custom"

    def __post_init__(self):
        tab = np.array(self.table, dtype=float)
        if tab.ndim == 1:
            tab = tab[:, None]
        if tab.ndim != 2 or len(tab) == 0:
            raise ValueError("table must be a non-empty 1-D or 2-D array")
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    def __call__(self, t, streams, clean, theta, rows):
        row = self.table[min(t, len(self.table) - 1)]
        return np.broadcast_to(row, (len(streams),)).copy()

    def to_dict(self):
        return {"kind": self.kind, "table": self.table.tolist()}


def builtin_strategies() -> dict:
    """Constructors of the built-in strategies keyed by their JSON ``kind``."""
    return {
        NoAttack.kind: NoAttack,
        ConstantValue.kind: ConstantValue,
        ScaledParameter.kind: ScaledParameter,
        FixedTarget.kind: FixedTarget,
        CustomTimeSeries.kind: CustomTimeSeries,
    }


def strategy_from_dict(doc):
    doc = dict(doc)
    kind = doc.pop("kind")
    try:
        cls = builtin_strategies()[kind]
    except KeyError:
        raise ValueError(f"unknown attack strategy {kind!r}") from None
    return cls(**doc)


class AttackScenario:
    """A fixed set of compromised streams plus the strategy they follow.

    Attacking every stream is representable (it is needed to study consensus
    under total compromise); resilience analysis rejects it.
    """

    def __init__(self, compromised=(), strategy=None):
        comp = np.unique(np.asarray(list(compromised), dtype=np.int64))
        if comp.size and comp.min() < 0:
            raise ValueError("stream indices must be nonnegative")
        comp.setflags(write=False)
        self.compromised = comp
        self.strategy = strategy if strategy is not None else NoAttack()

    @classmethod
    def for_agents(cls, model, agents, strategy=None) -> "AttackScenario":
        """Compromise every stream of the listed agents."""
        return cls(model.agent_streams(sorted(set(int(a) for a in agents))), strategy)

    @property
    def size(self) -> int:
        return len(self.compromised)

    def __repr__(self):
        return f"AttackScenario(|A|={self.size}, strategy={self.strategy!r})"


def apply_attack(scenario: AttackScenario, t, y, theta, model) -> np.ndarray:
    """Return a copy of the stacked measurement ``y`` with compromised streams
    replaced by the strategy's output. ``y`` and ``theta`` are left untouched."""
    out = np.array(y, dtype=float)
    comp = scenario.compromised
    if comp.size == 0 or isinstance(scenario.strategy, NoAttack):
        return out
    if comp[-1] >= len(out):
        raise ValueError("compromised stream index beyond the measurement length")
    out[comp] = scenario.strategy(t, comp, out[comp], theta, model.rows(comp))
    return out


def random_compromised_set(P, count, rng) -> np.ndarray:
    """``count`` distinct streams out of ``P``, uniformly at random, sorted.

    The set is a prefix of one random permutation, so generators in the
    same state give nested sets for increasing ``count``.
    """
    if count < 0 or count >= P:
        raise InvalidCount(f"need 0 <= count < P={P}, got {count}")
    return np.sort(rng.permutation(P)[:count]).astype(np.int64)


def random_compromised_agents(n_agents, count, rng) -> np.ndarray:
    """Like :func:`random_compromised_set`, over agents."""
    if count < 0 or count >= n_agents:
        raise InvalidCount(f"need 0 <= count < N={n_agents}, got {count}")
    return np.sort(rng.permutation(n_agents)[:count]).astype(np.int64)


def scenario_from_dict(doc, model) -> AttackScenario:
    """``{"compromised_agents": [...] | "compromised_streams": [...], "strategy": {...}}``.

    Indices are 0-based.
    """
    strategy = strategy_from_dict(doc.get("strategy", {"kind": "none"}))
    if "compromised_agents" in doc and "compromised_streams" in doc:
        raise ValueError("give either compromised_agents or compromised_streams, not both")
    if "compromised_agents" in doc:
        return AttackScenario.for_agents(model, doc["compromised_agents"], strategy)
    return AttackScenario(doc.get("compromised_streams", []), strategy)
