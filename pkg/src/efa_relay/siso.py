"""
Single-antenna EFA relay: SNR, rate and the optimal power-splitting ratio.

With the relay power constraint active, the amplification gain is tied to
the PS ratio ``rho`` and the SNR becomes, up to a positive constant,

    rho (1 - rho) / (a + b rho),   a = p1 + sigma^2,  b = p1 (|h_DR|^2 - 1).

Two independent solvers are provided: the stationary point in closed form,
and a barrier interior-point method on the Charnes-Cooper transform of the
concave-over-affine ratio.
"""

from dataclasses import dataclass
import math

import numpy as np

from .channel import ChannelRealization, PowerBudget
from .errors import DegenerateChannel, NoConvergence

__all__ = [
    "SisoChannel",
    "SisoSolution",
    "p1",
    "amplification_gain_sq",
    "snr_gamma1",
    "rate_from_snr",
    "substituted_objective",
    "stationary_ratio",
    "optimize_ps_closed_form",
    "optimize_ps_fractional",
    "optimize_no_ef",
    "solve_charnes_cooper",
]


@dataclass(frozen=True)
class SisoChannel:
    h_RS: complex
    h_RD: complex

    def __post_init__(self):
        object.__setattr__(self, "h_RS", complex(self.h_RS))
        object.__setattr__(self, "h_RD", complex(self.h_RD))
        if not (math.isfinite(abs(self.h_RS)) and math.isfinite(abs(self.h_RD))):
            raise ValueError("channel entries must be finite")

    @property
    def h_DR(self):
        return self.h_RD

    @classmethod
    def from_realization(cls, ch: ChannelRealization):
        if ch.r != 1:
            raise ValueError(f"expected a single-antenna realization, got r={ch.r}")
        return cls(ch.h_RS[0], ch.h_RD[0])


@dataclass(frozen=True)
class SisoSolution:
    rho_star: float
    f_sq: float
    gamma1: float
    rate: float


def p1(ch, pb):
    """Total received power at the relay, ``|h_RS|^2 P_S + |h_RD|^2 P_D``."""
    return abs(ch.h_RS) ** 2 * pb.P_S + abs(ch.h_RD) ** 2 * pb.P_D


def amplification_gain_sq(rho, p1, sigma_n_sq):
    """Largest ``|f|^2`` allowed by the harvested power at ratio ``rho``."""
    return rho * p1 / ((1.0 - rho) * p1 + sigma_n_sq)


def snr_gamma1(rho, f_sq, ch, pb, noise):
    """End-to-end SNR at the destination after self-interference cancellation."""
    g_DR = abs(ch.h_DR) ** 2
    g_RS = abs(ch.h_RS) ** 2
    num = (1.0 - rho) * g_DR * f_sq * g_RS * pb.P_S
    return num / ((1.0 + g_DR * f_sq) * noise.sigma_n_sq)


def rate_from_snr(gamma):
    """Half-duplex rate in bits per channel use."""
    return 0.5 * np.log2(1.0 + gamma)


def substituted_objective(rho, ch, pb, noise):
    """``rho (1 - rho) / psi(rho)``; proportional to the SNR once |f|^2 is eliminated."""
    p = p1(ch, pb)
    psi = (1.0 - rho) * p + noise.sigma_n_sq + abs(ch.h_DR) ** 2 * p * rho
    return rho * (1.0 - rho) / psi


def stationary_ratio(a, b):
    """
    Maximizer of ``rho (1 - rho) / (a + b rho)`` on [0, 1].

    Root of ``b rho^2 + 2 a rho - a = 0`` written as ``a / (a + sqrt(a (a + b)))``,
    which stays accurate as ``b -> 0``. Requires ``a > 0`` and ``a + b > 0``.
    """
    rho = a / (a + math.sqrt(a * (a + b)))
    return min(max(rho, 0.0), 1.0)


def _solution_at(rho, ch, pb, noise):
    f_sq = amplification_gain_sq(rho, p1(ch, pb), noise.sigma_n_sq)
    gamma = snr_gamma1(rho, f_sq, ch, pb, noise)
    return SisoSolution(rho, f_sq, gamma, float(rate_from_snr(gamma)))


def _check_channel(ch, pb, strict):
    p = p1(ch, pb)
    if p <= 0.0:
        if strict:
            raise DegenerateChannel("relay receives no power (p1 = 0)")
        return False
    return True


def optimize_ps_closed_form(ch, pb, noise, strict=False):
    """
    Optimal PS ratio from the stationarity condition.

    A channel with ``p1 = 0`` yields the all-zero solution, or raises
    :class:`DegenerateChannel` when ``strict`` is set.
    """
    if not _check_channel(ch, pb, strict):
        return SisoSolution(0.0, 0.0, 0.0, 0.0)
    p = p1(ch, pb)
    a = p + noise.sigma_n_sq
    b = p * (abs(ch.h_DR) ** 2 - 1.0)
    return _solution_at(stationary_ratio(a, b), ch, pb, noise)


def solve_charnes_cooper(a, b, tol=1e-9, max_newton=500):
    """
    Maximize ``rho (1 - rho) / (a + b rho)`` over [0, 1] by a log-barrier method.

    With ``s = rho / psi`` and ``t = 1 / psi`` the problem becomes

        minimize    -s + s^2 / t
        subject to  a t + b s <= 1,  0 <= s <= t,

    which is convex. The barrier weight grows until the duality-gap bound
    ``3 / mu`` falls below ``tol`` times the current objective magnitude.

    Returns
    -------
    rho : float
        ``s / t`` at the final central point.
    """
    # strictly feasible start at rho = 1/2 with the coupling constraint half slack
    t = 0.5 / (a + 0.5 * b)
    s = 0.5 * t

    def f0(s, t):
        return -s + s * s / t

    mu = 3.0 / abs(f0(s, t))
    n_newton = 0
    while True:
        for _ in range(100):
            n_newton += 1
            if n_newton > max_newton:
                raise NoConvergence(f"barrier method exceeded {max_newton} Newton steps")
            c1 = 1.0 - a * t - b * s
            c3 = t - s
            # gradient of mu*f0 - log(c1) - log(s) - log(c3)
            gs = mu * (-1.0 + 2.0 * s / t) + b / c1 - 1.0 / s + 1.0 / c3
            gt = mu * (-s * s / (t * t)) + a / c1 - 1.0 / c3
            # The Hessian is a sum of rank-one terms w_i u_i u_i^T; its inverse is
            # assembled from those terms because hss*htt - hst**2 cancels badly
            # once mu*f0 dominates.
            rho = s / t
            terms = (
                (mu * 2.0 / t, 1.0, -rho),
                (1.0 / c1**2, b, a),
                (1.0 / s**2, 1.0, 0.0),
                (1.0 / c3**2, 1.0, -1.0),
            )
            det = 0.0
            for i in range(4):
                wi, ui1, ui2 = terms[i]
                for j in range(i + 1, 4):
                    wj, uj1, uj2 = terms[j]
                    det += wi * wj * (ui1 * uj2 - ui2 * uj1) ** 2
            # adj(H) g = sum_i w_i u_perp (u_perp . g), u_perp = (u2, -u1)
            adj_s = adj_t = 0.0
            for wi, u1, u2 in terms:
                proj = wi * (u2 * gs - u1 * gt)
                adj_s += u2 * proj
                adj_t -= u1 * proj
            ds = -adj_s / det
            dt = -adj_t / det
            decrement = -(gs * ds + gt * dt)
            if decrement <= 1e-10:
                break

            def barrier(s_, t_):
                return mu * f0(s_, t_) - math.log(1.0 - a * t_ - b * s_) - math.log(s_) - math.log(t_ - s_)

            step = 1.0
            current = barrier(s, t)
            # inside the quadratic-convergence region the barrier value is
            # dominated by roundoff, so take the pure Newton step
            if decrement < 1e-6:
                s_new, t_new = s + ds, t + dt
                if s_new > 0 and t_new > s_new and a * t_new + b * s_new < 1.0:
                    s, t = s_new, t_new
                    continue
            while True:
                s_new = s + step * ds
                t_new = t + step * dt
                feasible = s_new > 0 and t_new > s_new and a * t_new + b * s_new < 1.0
                if feasible and barrier(s_new, t_new) <= current - 0.25 * step * decrement:
                    break
                step *= 0.5
                if step < 1e-16:
                    break
            if step < 1e-16:
                break
            s, t = s_new, t_new
        if 3.0 / mu <= tol * abs(f0(s, t)):
            return s / t
        mu *= 50.0


def optimize_ps_fractional(ch, pb, noise, tol=1e-9, strict=False):
    """Optimal PS ratio via the convex (Charnes-Cooper) reformulation."""
    if not _check_channel(ch, pb, strict):
        return SisoSolution(0.0, 0.0, 0.0, 0.0)
    p = p1(ch, pb)
    a = p + noise.sigma_n_sq
    b = p * (abs(ch.h_DR) ** 2 - 1.0)
    rho = solve_charnes_cooper(a, b, tol=tol)
    return _solution_at(min(max(rho, 0.0), 1.0), ch, pb, noise)


def optimize_no_ef(ch, P_S, noise, solver=optimize_ps_closed_form):
    """Relaying without energy flow: the EFA problem with ``P_D = 0``."""
    return solver(ch, PowerBudget(0.0, P_S), noise)
