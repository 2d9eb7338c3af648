"""Composite (A pair) x (B atom) Fock basis with a total-quanta cutoff."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

EVEN, ODD = "even", "odd"


@dataclass(frozen=True, order=True)
class PairState:
    n1: int
    n2: int

    def __post_init__(self):
        if not 0 <= self.n1 <= self.n2:
            raise ValueError(f"need 0 <= n1 <= n2, got ({self.n1}, {self.n2})")

    @property
    def norm(self) -> float:
        """Coefficient of each ordered product in the symmetrized state."""
        return 1.0 if self.n1 == self.n2 else 1.0 / np.sqrt(2.0)

    def expand(self) -> list[tuple[float, int, int]]:
        if self.n1 == self.n2:
            return [(1.0, self.n1, self.n2)]
        return [(self.norm, self.n1, self.n2), (self.norm, self.n2, self.n1)]


@dataclass(frozen=True)
class CompositeState:
    pair: PairState
    m: int

    @property
    def quanta(self) -> int:
        return self.pair.n1 + self.pair.n2 + self.m

    @property
    def parity(self) -> str:
        return parity_of(self)

    def __str__(self):
        return f"({self.pair.n1},{self.pair.n2};{self.m})"


def parity_of(state: CompositeState) -> str:
    return EVEN if state.quanta % 2 == 0 else ODD


@dataclass(frozen=True)
class ManyBodyBasis:
    """Ordered composite basis; ordering is lexicographic in (quanta, n1, n2, m)."""

    n_max: int
    n_tot: int
    states: tuple[CompositeState, ...] = field(repr=False)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i) -> CompositeState:
        return self.states[i]

    @cached_property
    def table(self) -> np.ndarray:
        """Integer array of rows (n1, n2, m)."""
        return np.array([(s.pair.n1, s.pair.n2, s.m) for s in self.states], dtype=np.int64).reshape(-1, 3)

    @cached_property
    def position(self) -> dict[CompositeState, int]:
        return {s: i for i, s in enumerate(self.states)}

    def index(self, state: CompositeState) -> int:
        return self.position[state]

    @cached_property
    def quanta(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def block(self, parity: str) -> np.ndarray:
        """Basis positions belonging to a parity block."""
        if parity not in (EVEN, ODD):
            raise ValueError(f"unknown parity {parity!r}")
        return np.flatnonzero(self.quanta % 2 == (0 if parity == EVEN else 1))

    def manifest(self) -> str:
        lines = ["# index n1 n2 m quanta parity"]
        for i, s in enumerate(self.states):
            lines.append(f"{i} {s.pair.n1} {s.pair.n2} {s.m} {s.quanta} {s.parity}")
        return "\n".join(lines) + "\n"


def enumerate_basis(n_max: int, n_tot: int) -> ManyBodyBasis:
    if n_max < 0 or n_tot < 0:
        raise ValueError("n_max and n_tot must be non-negative")
    if n_tot > 3 * n_max:
        raise ValueError(f"n_tot={n_tot} exceeds 3*n_max={3 * n_max}")
    states = []
    for q in range(n_tot + 1):
        for n1 in range(min(n_max, q // 2) + 1):
            for n2 in range(n1, min(n_max, q - n1) + 1):
                m = q - n1 - n2
                if m <= n_max:
                    states.append(CompositeState(PairState(n1, n2), m))
    return ManyBodyBasis(n_max, n_tot, tuple(states))


def pair_sector(n_max: int, n_tot: int) -> list[PairState]:
    """Symmetrized two-boson states with n1 + n2 <= n_tot."""
    return [PairState(a, b) for a in range(n_max + 1) for b in range(a, n_max + 1) if a + b <= n_tot]
