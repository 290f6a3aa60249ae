"""Per-shot stochastic atom loss: environmental and measurement channels."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

from .arch import Site


@dataclass(frozen=True)
class LossRates:
    """Per-atom, per-shot loss probabilities."""

    p_env: float = 0.00068
    p_meas: float = 0.02

    def __post_init__(self):
        for p in (self.p_env, self.p_meas):
            if not 0 <= p <= 1:
                raise ValueError(f"loss probability must be in [0, 1], got {p}")


def sample_shot_losses(
    rng: random.Random,
    present: Iterable[Site],
    measured_sites: Iterable[Site],
    rates: LossRates,
) -> set[Site]:
    """Atoms newly lost during one shot.

    Every present atom is lost independently with p_env; measured atoms that
    survive that draw are additionally lost with p_meas. Sites are visited in
    row-major order, so the result is a pure function of the rng state.
    """
    newly: set[Site] = set()
    if rates.p_env > 0:
        for s in sorted(present):
            if rng.random() < rates.p_env:
                newly.add(s)
    if rates.p_meas > 0:
        for s in sorted(measured_sites):
            if s not in newly and rng.random() < rates.p_meas:
                newly.add(s)
    return newly
