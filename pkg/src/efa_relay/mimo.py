"""
Multiple-antenna EFA relay: relay-matrix optimization and baselines.

The relay processes its received signal with an ``r x r`` matrix ``F``. With
``f = vec(F)`` the SNR at the destination is a generalized Rayleigh quotient

    gamma2 = (P_S / sigma^2) * f^H K~ f / f^H J~ f,

valid whenever ``f`` spends exactly the harvested power. ``K~`` is rank one,
so the optimum is the dominant eigenvector of the ``J~``-whitened ``K~``; the
relay power constraint then fixes the norm.

Variants
--------
EFA
    Destination sends an energy flow; its leakage is forwarded by the relay.
NoEF
    No energy flow (``P_D = 0``).
GenieEFA
    Energy flow is harvested but the leakage is removed from the forwarded
    signal; an upper bound on EFA.
MrcMrtEFA, MrcMrtNoEF
    Rank-one MRC/MRT relay matrix, only the gain and the PS ratio optimized.
"""

from dataclasses import dataclass
from enum import Enum
import math
from typing import Optional

import numpy as np
import scipy.linalg

from . import siso
from .channel import ChannelRealization, NoiseModel, PowerBudget
from .errors import ConstraintViolated, DegenerateChannel, DomainError
from .linalg import cholesky_hermitian, dominant_eigenpair, kron, solve_hermitian, unvec, vec

__all__ = [
    "DEFAULT_PS_GRID",
    "Variant",
    "MimoProblem",
    "KroneckerOperators",
    "MimoSolution",
    "DiagnosticsReport",
    "harvested_power",
    "relay_covariance",
    "assemble_operators",
    "genie_operators",
    "forwarded_power",
    "forwarded_power_vec",
    "snr_matrix_form",
    "snr_quadratic_form",
    "snr_gamma2",
    "scale_to_constraint",
    "optimize_relay_matrix",
    "rank_one_solution",
    "mrcmrt_matrix",
    "optimize_mrcmrt",
    "optimize_mrcmrt_ps",
    "snr_curve",
    "rate_curve",
    "grid_search_ps",
    "diagnostics",
]

DEFAULT_PS_GRID = tuple(i / 100 for i in range(1, 100))


class Variant(str, Enum):
    EFA = "EFA"
    NO_EF = "NoEF"
    GENIE_EFA = "GenieEFA"
    MRCMRT_EFA = "MrcMrtEFA"
    MRCMRT_NO_EF = "MrcMrtNoEF"

    def __str__(self):
        return self.value

    @property
    def uses_ef(self):
        return self not in (Variant.NO_EF, Variant.MRCMRT_NO_EF)

    @property
    def is_mrcmrt(self):
        return self in (Variant.MRCMRT_EFA, Variant.MRCMRT_NO_EF)


@dataclass(frozen=True)
class MimoProblem:
    channels: ChannelRealization
    budgets: PowerBudget
    noise: NoiseModel
    rho: float
    variant: Variant = Variant.EFA

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")

    @property
    def effective_budgets(self):
        """Budgets seen by the variant: ``P_D`` is zeroed without energy flow."""
        return self.budgets if self.variant.uses_ef else self.budgets.without_ef()

    @property
    def P_R(self):
        return harvested_power(self.rho, self.channels, self.effective_budgets)

    def with_rho(self, rho):
        return MimoProblem(self.channels, self.budgets, self.noise, rho, self.variant)


@dataclass(frozen=True, eq=False)
class KroneckerOperators:
    Q_R: np.ndarray
    Q_tilde: np.ndarray
    K: np.ndarray
    K_tilde: np.ndarray
    J: np.ndarray
    J_tilde: np.ndarray
    L_J: np.ndarray
    k_vec: np.ndarray
    P_R: float


@dataclass(frozen=True, eq=False)
class MimoSolution:
    """
    Optimized relay processing at one PS ratio.

    ``g_dir``, ``g_norm`` and ``objective`` come from the whitened eigenproblem
    and are ``None``/NaN for the MRC/MRT variants, which carry ``eta`` instead.
    """

    F: np.ndarray
    f: np.ndarray
    gamma2: float
    rate: float
    rho: float
    variant: Variant
    g_dir: Optional[np.ndarray] = None
    g_norm: float = math.nan
    objective: float = math.nan
    eta: Optional[float] = None


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    singular_values: np.ndarray
    xi_1: np.ndarray
    xi_2: np.ndarray
    xi_3: np.ndarray
    theta_1: np.ndarray
    theta_2: np.ndarray
    theta_3: np.ndarray
    eps_1: float
    eps_2: float
    p2: float


def _norm_sq(h):
    return float(np.real(np.vdot(h, h)))


def harvested_power(rho, ch, pb):
    """Power available at the relay after splitting a fraction ``rho`` to the harvester."""
    return rho * (_norm_sq(ch.h_RD) * pb.P_D + _norm_sq(ch.h_RS) * pb.P_S)


def relay_covariance(p):
    """
    Covariance of the signal part that the relay re-amplifies.

    Full ``h_RS h_RS^H P_S + h_RD h_RD^H P_D`` except for the genie variant,
    whose forwarded signal contains no energy-flow leakage.
    """
    h_RS, h_RD = p.channels.h_RS, p.channels.h_RD
    pb = p.effective_budgets
    Q = np.outer(h_RS, h_RS.conj()) * pb.P_S
    if p.variant is not Variant.GENIE_EFA:
        Q = Q + np.outer(h_RD, h_RD.conj()) * pb.P_D
    return Q


def assemble_operators(p):
    """
    Build the vectorized operators of the relay problem.

    Raises
    ------
    DegenerateChannel
        If the relay harvests no power.
    """
    P_R = p.P_R
    if not P_R > 0.0:
        raise DegenerateChannel("relay harvests no power")
    ch, rho, s2 = p.channels, p.rho, p.noise.sigma_n_sq
    r = ch.r
    eye_r = np.eye(r)
    Q_R = relay_covariance(p)
    Q_tilde = kron(Q_R.T, eye_r)
    k_vec = np.conj(kron(ch.h_RS, ch.h_DR))
    K = np.outer(k_vec, k_vec.conj())
    J = kron(eye_r, np.outer(ch.h_DR.conj(), ch.h_DR))
    J_tilde = J + ((1.0 - rho) * Q_tilde + s2 * np.eye(r * r)) / P_R
    J_tilde = 0.5 * (J_tilde + J_tilde.conj().T)
    return KroneckerOperators(
        Q_R=Q_R,
        Q_tilde=Q_tilde,
        K=K,
        K_tilde=(1.0 - rho) * K,
        J=J,
        J_tilde=J_tilde,
        L_J=cholesky_hermitian(J_tilde),
        k_vec=k_vec,
        P_R=P_R,
    )


def genie_operators(p):
    if p.variant is not Variant.GENIE_EFA:
        raise ValueError(f"genie operators requested for variant {p.variant}")
    return assemble_operators(p)


def forwarded_power(F, p):
    """Relay transmit power in matrix form, ``(1-rho) Tr{F^H F Q} + sigma^2 Tr{F^H F}``."""
    F = np.asarray(F)
    FhF = F.conj().T @ F
    Q = relay_covariance(p)
    return float(
        (1.0 - p.rho) * np.real(np.trace(FhF @ Q)) + p.noise.sigma_n_sq * np.real(np.trace(FhF))
    )


def forwarded_power_vec(f, ops, p):
    """Same power as a quadratic form in ``f = vec(F)``."""
    f = np.asarray(f)
    M = (1.0 - p.rho) * ops.Q_tilde + p.noise.sigma_n_sq * np.eye(f.size)
    return float(np.real(np.vdot(f, M @ f)))


def snr_matrix_form(F, p):
    """Destination SNR from the matrix ``F`` directly."""
    F = np.asarray(F)
    ch = p.channels
    s2 = p.noise.sigma_n_sq
    signal = (1.0 - p.rho) * p.budgets.P_S * abs(ch.h_DR @ F @ ch.h_RS) ** 2
    a = F.conj().T @ ch.h_DR.conj()
    amplified_noise = _norm_sq(a) * s2
    return float(signal / (amplified_noise + s2))


def snr_quadratic_form(f, ops, p):
    """Destination SNR as ``P_S f^H K~ f / (sigma^2 f^H J~ f)``; needs the power equality."""
    f = np.asarray(f)
    num = np.real(np.vdot(f, ops.K_tilde @ f))
    den = np.real(np.vdot(f, ops.J_tilde @ f))
    return float(p.budgets.P_S * num / (p.noise.sigma_n_sq * den))


def snr_gamma2(f, p, rtol=1e-6):
    """
    SNR at ``f = vec(F)``, checking that ``f`` spends exactly the harvested power.

    Raises
    ------
    ConstraintViolated
        If the relative power residual exceeds ``rtol``.
    """
    F = unvec(f, p.channels.r)
    P_R = p.P_R
    resid = abs(forwarded_power(F, p) - P_R) / P_R
    if not resid <= rtol:
        raise ConstraintViolated(f"relative power residual {resid:.3e} exceeds {rtol:.1e}")
    return snr_matrix_form(F, p)


def scale_to_constraint(f, p):
    """Rescale a nonzero direction so that it spends exactly the harvested power."""
    f = np.asarray(f, dtype=complex)
    power = forwarded_power(unvec(f, p.channels.r), p)
    return f * math.sqrt(p.P_R / power)


def _check_direct_variant(p):
    if p.variant.is_mrcmrt:
        raise ValueError(f"variant {p.variant} has a fixed MRC/MRT structure; use optimize_mrcmrt")


def optimize_relay_matrix(p, ops=None):
    """
    Rate-optimal relay matrix at the PS ratio of ``p``.

    The quotient ``f^H K~ f / f^H J~ f`` is reduced to an ordinary Rayleigh
    quotient with ``J~ = L^H L`` and ``f = L^{-1} g``. The dominant eigenvector
    of ``L^{-H} K~ L^{-1}`` gives the direction of ``g`` and the relay power
    equality gives its norm.
    """
    _check_direct_variant(p)
    if ops is None:
        ops = assemble_operators(p)
    n = ops.k_vec.size
    L_inv = scipy.linalg.solve_triangular(ops.L_J, np.eye(n, dtype=complex), lower=False)
    W = L_inv.conj().T @ ops.K_tilde @ L_inv
    W = 0.5 * (W + W.conj().T)
    pair = dominant_eigenpair(W)
    g_dir = pair.vector

    d = L_inv @ g_dir
    unit_power = forwarded_power_vec(d, ops, p)
    g_norm = math.sqrt(ops.P_R / unit_power)
    f = d * g_norm
    F = unvec(f, p.channels.r)
    gamma2 = snr_matrix_form(F, p)
    return MimoSolution(
        F=F,
        f=f,
        gamma2=gamma2,
        rate=float(siso.rate_from_snr(gamma2)),
        rho=p.rho,
        variant=p.variant,
        g_dir=g_dir,
        g_norm=g_norm,
        objective=pair.value,
    )


def rank_one_solution(p, ops=None):
    """Optimal ``f`` through the rank-one shortcut ``f ~ J~^{-1} k``."""
    _check_direct_variant(p)
    if ops is None:
        ops = assemble_operators(p)
    f = scale_to_constraint(solve_hermitian(ops.J_tilde, ops.k_vec), p)
    F = unvec(f, p.channels.r)
    gamma2 = snr_matrix_form(F, p)
    return MimoSolution(F=F, f=f, gamma2=gamma2, rate=float(siso.rate_from_snr(gamma2)),
                        rho=p.rho, variant=p.variant)


def mrcmrt_matrix(eta, ch):
    """Rank-one MRC/MRT relay matrix ``eta * h_DR^* h_RS^H / (||h_DR|| ||h_RS||)``."""
    n_DR = math.sqrt(_norm_sq(ch.h_DR))
    n_RS = math.sqrt(_norm_sq(ch.h_RS))
    if n_DR == 0.0 or n_RS == 0.0:
        raise DegenerateChannel("MRC/MRT needs nonzero S-R and R-D channels")
    return eta * np.outer(ch.h_DR.conj() / n_DR, ch.h_RS.conj() / n_RS)


def _mrcmrt_scalars(ch, pb):
    """
    Scalar coefficients of the MRC/MRT problem.

    With ``F' = eta u v^H`` the signal term is ``eta^2 alpha^2 beta^2`` and the
    amplified noise ``eta^2 alpha^2`` (``alpha = ||h_DR||``, ``beta = ||h_RS||``).
    The relay power is ``eta^2 ((1-rho) q + sigma^2)`` where
    ``q = P_S beta^2 + P_D |h_RS^H h_RD|^2 / beta^2`` is the received power along
    the MRC direction; the harvested power is ``rho p2``.
    """
    alpha2 = _norm_sq(ch.h_DR)
    beta2 = _norm_sq(ch.h_RS)
    if alpha2 == 0.0 or beta2 == 0.0:
        raise DegenerateChannel("MRC/MRT needs nonzero S-R and R-D channels")
    cross = abs(np.vdot(ch.h_RS, ch.h_RD)) ** 2
    q = pb.P_S * beta2 + pb.P_D * cross / beta2
    p2 = _norm_sq(ch.h_RD) * pb.P_D + beta2 * pb.P_S
    return alpha2, beta2, q, p2


def _mrcmrt_eta_sq(rho, q, p2, s2):
    return rho * p2 / ((1.0 - rho) * q + s2)


def _mrcmrt_snr(rho, alpha2, beta2, q, p2, P_S, s2):
    eta_sq = _mrcmrt_eta_sq(rho, q, p2, s2)
    return (1.0 - rho) * P_S * alpha2 * beta2 * eta_sq / (s2 * (alpha2 * eta_sq + 1.0))


def optimize_mrcmrt(p):
    """
    MRC/MRT relay at the PS ratio of ``p``: the gain ``eta`` is set by the power equality.

    The returned ``gamma2`` is the scalarized SNR; it matches the generic
    matrix-form SNR at ``vec(F')``.
    """
    if not p.variant.is_mrcmrt:
        raise ValueError(f"variant {p.variant} is not an MRC/MRT variant")
    pb = p.effective_budgets
    s2 = p.noise.sigma_n_sq
    alpha2, beta2, q, p2 = _mrcmrt_scalars(p.channels, pb)
    eta = math.sqrt(_mrcmrt_eta_sq(p.rho, q, p2, s2))
    gamma2 = _mrcmrt_snr(p.rho, alpha2, beta2, q, p2, pb.P_S, s2)
    F = mrcmrt_matrix(eta, p.channels)
    return MimoSolution(F=F, f=vec(F), gamma2=gamma2, rate=float(siso.rate_from_snr(gamma2)),
                        rho=p.rho, variant=p.variant, eta=eta)


def optimize_mrcmrt_ps(channels, budgets, noise, variant=Variant.MRCMRT_EFA):
    """
    MRC/MRT relay with the PS ratio optimized over the continuum.

    After eliminating ``eta`` the SNR is proportional to
    ``rho (1 - rho) / ((1 - rho) q + sigma^2 + alpha^2 p2 rho)``, the same
    fractional form as the single-antenna problem.
    """
    variant = Variant(variant)
    pb = budgets if variant.uses_ef else budgets.without_ef()
    alpha2, _, q, p2 = _mrcmrt_scalars(channels, pb)
    a = q + noise.sigma_n_sq
    b = alpha2 * p2 - q
    rho = siso.stationary_ratio(a, b)
    return optimize_mrcmrt(MimoProblem(channels, budgets, noise, rho, variant))


def snr_curve(channels, budgets, noise, rhos, variant=Variant.EFA):
    """
    Optimal SNR of ``variant`` at each PS ratio in ``rhos``, vectorized.

    For the eigen-based variants the optimum is
    ``(1-rho) P_S / sigma^2 * k^H J~^{-1} k``. Since
    ``J~ = I kron A + B(rho) kron I`` with ``A = h_DR^* h_DR^T`` and
    ``B(rho) = ((1-rho) Q^T + sigma^2 I) / P_R``, both terms are diagonalized by
    ``V kron W`` (eigenvectors of ``Q^T`` and ``A``), so ``J~^{-1}`` costs one
    pair of ``r x r`` eigendecompositions for the whole grid.
    """
    variant = Variant(variant)
    rhos = np.asarray(rhos, dtype=float)
    pb = budgets if variant.uses_ef else budgets.without_ef()
    s2 = noise.sigma_n_sq

    if variant.is_mrcmrt:
        alpha2, beta2, q, p2 = _mrcmrt_scalars(channels, pb)
        return _mrcmrt_snr(rhos, alpha2, beta2, q, p2, pb.P_S, s2)

    h_RS, h_DR = channels.h_RS, channels.h_DR
    p2 = _norm_sq(h_DR) * pb.P_D + _norm_sq(h_RS) * pb.P_S
    if p2 == 0.0:
        return np.zeros_like(rhos)
    Q = np.outer(h_RS, h_RS.conj()) * pb.P_S
    if variant is not Variant.GENIE_EFA:
        Q = Q + np.outer(h_DR, h_DR.conj()) * pb.P_D
    q_vals, V = np.linalg.eigh(Q.T)
    a_vals, W = np.linalg.eigh(np.outer(h_DR.conj(), h_DR))
    q_vals = np.clip(q_vals, 0.0, None)
    a_vals = np.clip(a_vals, 0.0, None)
    k_vec = np.conj(kron(h_RS, h_DR))
    z = kron(V, W).conj().T @ k_vec
    weights = np.abs(z) ** 2

    P_R = rhos * p2
    c1 = ((1.0 - rhos) / P_R)[:, None]
    c2 = (s2 / P_R)[:, None]
    eig = c1 * np.repeat(q_vals, a_vals.size)[None, :] + c2 + np.tile(a_vals, q_vals.size)[None, :]
    quad = (weights[None, :] / eig).sum(axis=1)
    return (1.0 - rhos) * pb.P_S / s2 * quad


def rate_curve(channels, budgets, noise, rhos, variant=Variant.EFA):
    return siso.rate_from_snr(snr_curve(channels, budgets, noise, rhos, variant))


def _validate_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("PS grid must be a nonempty list of ratios")
    if not np.all((grid > 0.0) & (grid < 1.0)):
        raise DomainError("PS grid entries must lie in (0, 1)")
    return grid


def grid_search_ps(channels, budgets, noise, variant=Variant.EFA, grid=DEFAULT_PS_GRID):
    """
    Best PS ratio on ``grid`` and the optimized relay at that ratio.

    Ratios are scored with :func:`snr_curve`; on exact ties the first grid
    entry wins, i.e. the smallest ratio for an ascending grid.
    """
    variant = Variant(variant)
    grid = _validate_grid(grid)
    gammas = snr_curve(channels, budgets, noise, grid, variant)
    best = float(grid[int(np.argmax(gammas))])
    p = MimoProblem(channels, budgets, noise, best, variant)
    if variant.is_mrcmrt:
        return optimize_mrcmrt(p)
    return optimize_relay_matrix(p)


def diagnostics(F, ch, pb, rho):
    """
    Alignment of the relay matrix with the channel directions.

    From the SVD ``F / ||F||_F = U diag(lambda) V^H`` report the cosines ``xi``
    and pseudo-angles ``theta`` of the Hermitian angles between
    ``h_DR^*`` and ``u_i`` (family 1), ``h_RS`` and ``v_i`` (family 2), and
    ``h_RD`` and ``v_i`` (family 3), with the inner product ``<x, y> = x^H y``.
    """
    F = np.asarray(F, dtype=complex)
    fro = np.linalg.norm(F)
    if fro == 0.0:
        raise DomainError("diagnostics need a nonzero relay matrix")
    U, lam, Vh = np.linalg.svd(F / fro)
    V = Vh.conj().T

    def unit(h):
        return h / np.linalg.norm(h)

    inner_1 = unit(ch.h_DR.conj()).conj() @ U
    inner_2 = unit(ch.h_RS).conj() @ V
    inner_3 = unit(ch.h_RD).conj() @ V
    n_DR = _norm_sq(ch.h_DR)
    n_RS = _norm_sq(ch.h_RS)
    return DiagnosticsReport(
        singular_values=lam,
        xi_1=np.abs(inner_1),
        xi_2=np.abs(inner_2),
        xi_3=np.abs(inner_3),
        theta_1=np.angle(inner_1),
        theta_2=np.angle(inner_2),
        theta_3=np.angle(inner_3),
        eps_1=(1.0 - rho) * pb.P_S / (rho * n_DR),
        eps_2=(1.0 - rho) * pb.P_D / (rho * n_RS),
        p2=_norm_sq(ch.h_RD) * pb.P_D + n_RS * pb.P_S,
    )
