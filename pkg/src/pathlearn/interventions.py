from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

from .errors import ValidationError


def _frozen_items(d) -> tuple:
    if d is None:
        return ()
    if isinstance(d, Mapping):
        d = d.items()
    return tuple(sorted((int(k), v) for k, v in d))


@dataclass(frozen=True)
class InterventionSpec:
    """A set of do-assignments, optionally imperfect.

    ``values`` maps node -> forced value. ``success`` maps node -> the
    probability phi that a discrete intervention lands on its target value
    (absent means perfect). ``spread`` maps node -> the variance nu^2 that
    an imperfect continuous intervention adds around its target value.
    Instances are hashable so samplers can cache on them.
    """

    values: tuple[tuple[int, float], ...] = ()
    success: tuple[tuple[int, float], ...] = field(default=())
    spread: tuple[tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        values = _frozen_items(self.values)
        success = _frozen_items(self.success)
        spread = _frozen_items(self.spread)
        nodes = [k for k, _ in values]
        if len(set(nodes)) != len(nodes):
            raise ValidationError("intervened nodes must be distinct")
        targets = set(nodes)
        for node, phi in success:
            if node not in targets:
                raise ValidationError(f"success probability given for non-intervened node {node}")
            if not 0.5 <= phi <= 1.0:
                raise ValidationError(f"success probability {phi} for node {node} outside [1/2, 1]")
        for node, nu2 in spread:
            if node not in targets:
                raise ValidationError(f"spread given for non-intervened node {node}")
            if nu2 < 0:
                raise ValidationError(f"negative spread {nu2} for node {node}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "success", success)
        object.__setattr__(self, "spread", spread)

    @classmethod
    def do(cls, values: Mapping[int, float] | None = None, **kw) -> InterventionSpec:
        return cls(values=_frozen_items(values), **kw)

    @property
    def targets(self) -> frozenset[int]:
        return frozenset(k for k, _ in self.values)

    def value_map(self) -> dict[int, float]:
        return dict(self.values)

    def success_map(self) -> dict[int, float]:
        return dict(self.success)

    def spread_map(self) -> dict[int, float]:
        return dict(self.spread)

    def is_perfect(self) -> bool:
        return all(p == 1.0 for _, p in self.success) and all(v == 0 for _, v in self.spread)

    def with_success(self, phi) -> InterventionSpec:
        """Attach a success probability to every target (scalar or per-node mapping)."""
        if phi is None:
            return self
        if isinstance(phi, Mapping):
            succ = {k: phi[k] for k in self.targets if k in phi}
        else:
            succ = {k: float(phi) for k in self.targets}
        return InterventionSpec(self.values, _frozen_items(succ), self.spread)

    def with_spread(self, nu2: Mapping[int, float]) -> InterventionSpec:
        sp = {k: float(nu2[k]) for k in self.targets if k in nu2}
        return InterventionSpec(self.values, self.success, _frozen_items(sp))


NO_INTERVENTION = InterventionSpec()
