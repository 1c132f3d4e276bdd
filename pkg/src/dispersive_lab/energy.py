from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class EnergyBreakdown:
    """Itemized energy functional, its dissipation and any balance terms.

    ``total`` sums the four named parts and ``extras``.  Entries of ``balance``
    (right-hand sides, bounds) are reported but never summed.
    """

    kinetic: float = 0.0
    gradient: float = 0.0
    confinement: float = 0.0
    potential: float = 0.0
    extras: dict[str, float] = field(default_factory=dict)
    dissipation: dict[str, float] = field(default_factory=dict)
    balance: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.kinetic + self.gradient + self.confinement + self.potential + sum(self.extras.values())

    @property
    def dissipation_total(self) -> float:
        return sum(self.dissipation.values())

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "gradient": self.gradient,
            "confinement": self.confinement,
            "potential": self.potential,
            "extras": dict(self.extras),
            "total": self.total,
            "dissipation": dict(self.dissipation),
            "dissipation_total": self.dissipation_total,
            "balance": dict(self.balance),
        }
