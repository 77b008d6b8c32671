"""
Channel and geometry model.

Nodes lie on a line, D -- R -- S, with ``d_DS = d_DR + d_RS``. Every link is
``h = d**(-exponent/2) * h_bar`` where ``h_bar`` has i.i.d. unit-variance
circularly-symmetric complex Gaussian entries. The R-D and D-R links are
reciprocal, so only ``h_RD`` is stored.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

__all__ = [
    "PATH_LOSS_EXPONENT",
    "Geometry",
    "PowerBudget",
    "NoiseModel",
    "ChannelRealization",
    "ChannelStreams",
    "sample_small_scale",
    "path_loss_amplitude",
    "realize_channels",
]

PATH_LOSS_EXPONENT = 3.0

# Sub-stream labels for the counter-based generator.
LINK_RS = 0
LINK_RD = 1


@dataclass(frozen=True)
class Geometry:
    """Node placement: D-S distance in meters and the fraction ``d_DR / d_DS``."""

    d_DS: float = 10.0
    ratio_DR: float = 0.5

    def __post_init__(self):
        if not (self.d_DS > 0 and math.isfinite(self.d_DS)):
            raise DomainError(f"d_DS must be positive, got {self.d_DS}")
        if not 0.0 < self.ratio_DR < 1.0:
            raise DomainError(f"ratio_DR must lie in (0, 1), got {self.ratio_DR}")

    @property
    def d_DR(self):
        return self.ratio_DR * self.d_DS

    @property
    def d_RS(self):
        return self.d_DS - self.d_DR

    def scaled(self, c):
        return Geometry(self.d_DS * c, self.ratio_DR)


@dataclass(frozen=True)
class PowerBudget:
    """Transmit power of the destination's energy flow and of the source, in watts."""

    P_D: float = 0.5
    P_S: float = 0.1

    def __post_init__(self):
        if not (self.P_D >= 0 and math.isfinite(self.P_D)):
            raise DomainError(f"P_D must be nonnegative, got {self.P_D}")
        if not (self.P_S > 0 and math.isfinite(self.P_S)):
            raise DomainError(f"P_S must be positive, got {self.P_S}")

    def without_ef(self):
        return PowerBudget(0.0, self.P_S)


@dataclass(frozen=True)
class NoiseModel:
    sigma_n_sq: float = 1e-6

    def __post_init__(self):
        if not (self.sigma_n_sq > 0 and math.isfinite(self.sigma_n_sq)):
            raise DomainError(f"sigma_n_sq must be positive, got {self.sigma_n_sq}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of the S-R and R-D channel vectors (length ``r`` each)."""

    h_RS: np.ndarray
    h_RD: np.ndarray

    def __post_init__(self):
        h_RS = np.atleast_1d(np.asarray(self.h_RS, dtype=complex))
        h_RD = np.atleast_1d(np.asarray(self.h_RD, dtype=complex))
        if h_RS.ndim != 1 or h_RS.shape != h_RD.shape or h_RS.size < 1:
            raise DomainError("h_RS and h_RD must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(h_RS)) and np.all(np.isfinite(h_RD))):
            raise DomainError("channel entries must be finite")
        h_RS.setflags(write=False)
        h_RD.setflags(write=False)
        object.__setattr__(self, "h_RS", h_RS)
        object.__setattr__(self, "h_RD", h_RD)

    @property
    def h_DR(self):
        # reciprocity: same entries as h_RD
        return self.h_RD

    @property
    def r(self):
        return self.h_RS.size

    def __eq__(self, other):
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return np.array_equal(self.h_RS, other.h_RS) and np.array_equal(self.h_RD, other.h_RD)

    __hash__ = None


def sample_small_scale(r, rng):
    """
    Draw ``r`` i.i.d. CN(0, 1) entries.

    Real and imaginary parts are drawn in interleaved pairs, so the first ``k``
    entries do not depend on ``r``: a larger array extends a smaller one.
    """
    if r < 1:
        raise DomainError(f"antenna count must be >= 1, got {r}")
    z = rng.standard_normal((r, 2))
    return (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)


def path_loss_amplitude(d, exponent=PATH_LOSS_EXPONENT):
    """Amplitude attenuation ``d**(-exponent/2)`` at distance ``d`` meters."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    return float(d) ** (-exponent / 2.0)


def realize_channels(geom, r, rng, exponent=PATH_LOSS_EXPONENT):
    """Draw both links from one generator (``h_RS`` first, then ``h_RD``)."""
    h_bar_RS = sample_small_scale(r, rng)
    h_bar_RD = sample_small_scale(r, rng)
    return ChannelRealization(
        path_loss_amplitude(geom.d_RS, exponent) * h_bar_RS,
        path_loss_amplitude(geom.d_DR, exponent) * h_bar_RD,
    )


class ChannelStreams:
    """
    Counter-based channel source keyed by ``(trial, link)``.

    Each link of each trial has its own generator derived from the master seed,
    so the small-scale fading of trial ``t`` is the same whatever the geometry,
    the protocol variant, or the order in which trials are evaluated. Draws
    for ``r`` antennas are the leading entries of draws for more antennas.

    Parameters
    ----------
    master_seed : int
    exponent : float
        Path-loss exponent.
    """

    def __init__(self, master_seed, exponent=PATH_LOSS_EXPONENT):
        self.master_seed = int(master_seed)
        self.exponent = exponent

    def rng(self, trial, link):
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(int(trial), int(link)))
        return np.random.Generator(np.random.Philox(seq))

    def small_scale(self, trial, r):
        return (
            sample_small_scale(r, self.rng(trial, LINK_RS)),
            sample_small_scale(r, self.rng(trial, LINK_RD)),
        )

    def realize(self, trial, geom, r):
        h_bar_RS, h_bar_RD = self.small_scale(trial, r)
        return ChannelRealization(
            path_loss_amplitude(geom.d_RS, self.exponent) * h_bar_RS,
            path_loss_amplitude(geom.d_DR, self.exponent) * h_bar_RD,
        )
