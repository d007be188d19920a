"""Smoothed-embedding support for the displacement threat model.

A smoothed encoder maps an input to the mean of the encoder outputs over
Gaussian input noise.  The mean of unit vectors lands inside the unit ball,
so the result is deliberately not re-normalized; its norm is at most 1 and
every distance stays within [0, 2].  The smoothed map is Lipschitz with
constant sqrt(2 / (pi * sigma^2)), which turns an l2 input perturbation of
radius r into a distance displacement of at most ``delta = L * r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import hoeffding_deviation, lipschitz_constant
from .core import Embedding, ThreatKind, ThreatModel, UNIT_NORM_TOL
from .errors import EmptySetError, NormViolationError, ShapeMismatchError, WrongThreatKindError

__all__ = ["NoisySampleSet", "smoothed_embedding", "dual_constraint_params"]


@dataclass(frozen=True)
class NoisySampleSet:
    """Unit-norm encoder outputs for one input under n noise draws."""

    samples: np.ndarray
    sigma: float
    denoised: bool = False

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatchError("samples must form an (n, d) matrix")
        if arr.shape[0] < 1:
            raise EmptySetError("a noisy sample set needs at least one sample")
        norms = np.linalg.norm(arr, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > UNIT_NORM_TOL:
            raise NormViolationError(f"sample norms deviate from 1 by up to {worst:.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def smoothed_embedding(s: NoisySampleSet) -> Embedding:
    """Coordinate-wise mean of the sample set; norm <= 1 by convexity."""
    mean = s.samples.mean(axis=0)
    return Embedding(mean, normalized=False)


def dual_constraint_params(threat: ThreatModel) -> tuple[float, float]:
    """(delta, hoeffding_t) for an l2-ball threat model.

    delta bounds how far one poisoned sample can move each of its distances;
    hoeffding_t bounds the estimation error of every distance computed from
    n_noise-sample smoothed means (distance range fixed at 2 because all
    participating vectors live in the unit ball).  With apply_hoeffding off
    the widening is zero, matching how the bound tables treat the flag.
    """
    if threat.kind != ThreatKind.L2_BALL:
        raise WrongThreatKindError(f"expected l2ball, got {threat.kind.value}")
    delta = lipschitz_constant(threat.sigma) * threat.r
    if not threat.apply_hoeffding:
        return delta, 0.0
    t = hoeffding_deviation(threat.n_noise, threat.alpha_conf, 2.0)
    return delta, t
