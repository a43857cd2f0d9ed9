"""Bundled system presets.

* example-line      - three similarities on the line: one uniformly random
                      contraction fixed at 1, two deterministic maps x/3 and
                      x/4 fixed at 0.  The pressure root is exactly 1.
* four-corner       - four random rectangles anchored at the unit square's
                      corners, iid uniform(1/10, 1/2) side ratios, jointly
                      constrained so rectangles at one level stay disjoint.
* mod-four-corner   - the aligned variant: opposite corners reuse one ratio
                      draw per axis (shared-slot coupling).  Same root as
                      four-corner since all marginals agree.
"""

from __future__ import annotations

from .distributions import MaxSumConstraint, RatioVectorLaw, constant, uniform
from .rifs import SpongeSpec


def example_line() -> SpongeSpec:
    vlaw = RatioVectorLaw((uniform(1 / 3, 1 / 2), constant(1 / 3), constant(1 / 4)))
    return SpongeSpec(
        d=1, N=3,
        translations=((1.0,), (0.0,), (0.0,)),
        axis_laws=(vlaw,),
        alpha_lo=0.25, alpha_hi=0.5,
        smooth_indices=(1,), separated_indices=(2,),
        smoothing_lengths=(1,),
        name="example-line",
    )


def four_corner() -> SpongeSpec:
    marginals = tuple(uniform(0.1, 0.5) for _ in range(4))
    ax1 = RatioVectorLaw(marginals, coupling="joint_sampler",
                         constraint=MaxSumConstraint(((1, 2), (3, 4)), 1.0))
    ax2 = RatioVectorLaw(marginals, coupling="joint_sampler",
                         constraint=MaxSumConstraint(((1, 4), (2, 3)), 1.0))
    return SpongeSpec(
        d=2, N=4,
        translations=((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)),
        axis_laws=(ax1, ax2),
        alpha_lo=0.1, alpha_hi=0.5,
        smooth_indices=(1, 1), separated_indices=(4, 2),
        smoothing_lengths=(1, 1),
        name="four-corner",
    )


def mod_four_corner() -> SpongeSpec:
    marginals = tuple(uniform(0.1, 0.5) for _ in range(4))
    # per axis, opposite corners reuse one slot: x ratios (a1, a2, a1, a2),
    # y ratios (a3, a4, a4, a3)
    ax1 = RatioVectorLaw(marginals, coupling="shared_pairs", slots=(1, 2, 1, 2))
    ax2 = RatioVectorLaw(marginals, coupling="shared_pairs", slots=(1, 2, 2, 1))
    return SpongeSpec(
        d=2, N=4,
        translations=((0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)),
        axis_laws=(ax1, ax2),
        alpha_lo=0.1, alpha_hi=0.5,
        smooth_indices=(1, 1), separated_indices=(2, 3),
        smoothing_lengths=(1, 1),
        name="mod-four-corner",
    )


PRESETS = {
    "example-line": example_line,
    "four-corner": four_corner,
    "mod-four-corner": mod_four_corner,
}
