"""Five-slot parameter ranges: construction, candidate grids, perturbation.

A range [inf_down, inf_up, center, sup_down, sup_up] anchors one grid-search
neighborhood at its center. Perturbation pushes the outer slots away from the
center (diversification) and pulls the inner slots toward it
(intensification), never moving the center itself.

All draws are uniform on half-open intervals [lo, hi) from a PCG64 generator
seeded with a 64-bit integer, so a (range, seed) pair fully determines the
output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .svm import HyperParams

__all__ = [
    "ParamRange",
    "SearchState",
    "initial_ranges",
    "ranges_around",
    "cartesian_candidates",
    "perturb",
    "perturb_state",
]

_REDRAW_LIMIT = 100


@dataclass(frozen=True)
class ParamRange:
    """Strictly ascending positive quintuple driving one parameter's grid."""

    inf_down: float
    inf_up: float
    center: float
    sup_down: float
    sup_up: float

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"range values must be finite, got {values}")
        if not (0 < values[0] < values[1] < values[2] < values[3] < values[4]):
            raise ValueError(
                f"range must be strictly ascending and positive, got {values}"
            )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.inf_down, self.inf_up, self.center, self.sup_down, self.sup_up)


@dataclass
class SearchState:
    """Coupled (gamma, C) ranges plus the PRNG stream that perturbs them.

    Both centers always equal the incumbent best (gamma, C).
    """

    range_gamma: ParamRange
    range_c: ParamRange
    rng: np.random.Generator


def ranges_around(p: float) -> ParamRange:
    """[p/100, p/10, p, 10p, 100p]: powers of ten straddling p."""
    if not (math.isfinite(p) and p > 0):
        raise ValueError(f"range anchor must be a positive finite real, got {p}")
    upper = 100.0 * p
    if not math.isfinite(upper):
        raise ValueError(f"range anchor {p} overflows at p * 100")
    return ParamRange(p / 100.0, p / 10.0, p, 10.0 * p, upper)


def initial_ranges() -> tuple[ParamRange, ParamRange]:
    """Both starting ranges: powers of 10 from -2 to 2, centered on 1."""
    return ranges_around(1.0), ranges_around(1.0)


def cartesian_candidates(rg: ParamRange, rc: ParamRange) -> list[HyperParams]:
    """All 25 (gamma, C) pairs in canonical order.

    The gamma index varies slowest, the C index fastest, each running from
    inf_down to sup_up; position 12 is the (center, center) pair.
    """
    return [
        HyperParams(c=c, gamma=gamma)
        for gamma in rg.as_tuple()
        for c in rc.as_tuple()
    ]


def _ordered(values: tuple[float, ...]) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


def perturb(r: ParamRange, rng: np.random.Generator) -> ParamRange:
    """Draw a new range around the unchanged center.

    Slots are drawn in field order: inf_down from [inf_down/10, inf_down),
    inf_up from [(center - inf_up)/2, center), sup_down from
    [center, center + (sup_down - center)/2), sup_up from [sup_up, 10*sup_up).
    If the result is not strictly ascending, the offending inner slot is
    re-drawn up to 100 times and finally clamped to the geometric mean of its
    neighbors, so a valid range is always returned.
    """
    c = r.center
    inf_down = rng.uniform(r.inf_down / 10.0, r.inf_down)
    inf_up = rng.uniform((c - r.inf_up) / 2.0, c)
    sup_down = rng.uniform(c, c + (r.sup_down - c) / 2.0)
    sup_up = rng.uniform(r.sup_up, 10.0 * r.sup_up)

    for _ in range(_REDRAW_LIMIT):
        if inf_down < inf_up < c:
            break
        inf_up = rng.uniform((c - r.inf_up) / 2.0, c)
    else:
        inf_up = math.sqrt(inf_down * c)
    for _ in range(_REDRAW_LIMIT):
        if c < sup_down < sup_up:
            break
        sup_down = rng.uniform(c, c + (r.sup_down - c) / 2.0)
    else:
        sup_down = math.sqrt(c * sup_up)

    values = (inf_down, inf_up, c, sup_down, sup_up)
    assert _ordered(values), f"perturbation repair failed to order {values}"
    return ParamRange(*values)


def perturb_state(s: SearchState) -> SearchState:
    """Perturb both ranges on the state's single stream, gamma range first."""
    range_gamma = perturb(s.range_gamma, s.rng)
    range_c = perturb(s.range_c, s.rng)
    return SearchState(range_gamma=range_gamma, range_c=range_c, rng=s.rng)
