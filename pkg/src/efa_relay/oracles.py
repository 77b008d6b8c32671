"""
Brute-force and sampling verifiers for the optimizers.

Everything here works from the raw channel vectors and the matrix-form power
and SNR expressions; no operator assembly is shared with :mod:`efa_relay.mimo`
or :mod:`efa_relay.siso`, so agreement is meaningful.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import mimo
from .mimo import Variant

__all__ = [
    "DEFAULT_TOLERANCE",
    "OracleReport",
    "grid_oracle_siso",
    "random_direction_oracle_mimo",
    "perturbation_check",
    "mrcmrt_consistency",
    "relay_power_batch",
    "snr_batch",
]

DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class OracleReport:
    name: str
    instances: int
    worst_relative_gap: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.worst_relative_gap <= self.tolerance)

    def merge(self, other):
        """Combine two reports of the same check into one."""
        return OracleReport(
            self.name,
            self.instances + other.instances,
            max(self.worst_relative_gap, other.worst_relative_gap),
            max(self.tolerance, other.tolerance),
        )


def grid_oracle_siso(ch, pb, noise, step=1e-4):
    """
    Exhaustive search of the single-antenna SNR over ``{0, step, ..., 1}``.

    Evaluates the relay gain and SNR from their defining expressions at each
    grid point.

    Returns
    -------
    rho_best, gamma_best : float
    """
    n = int(round(1.0 / step))
    rho = np.arange(n + 1) * step
    g_RS = abs(ch.h_RS) ** 2
    g_DR = abs(ch.h_RD) ** 2
    received = g_RS * pb.P_S + g_DR * pb.P_D
    s2 = noise.sigma_n_sq
    f_sq = rho * received / ((1.0 - rho) * received + s2)
    gamma = (1.0 - rho) * g_DR * f_sq * g_RS * pb.P_S / ((1.0 + g_DR * f_sq) * s2)
    i = int(np.argmax(gamma))
    return float(rho[i]), float(gamma[i])


def _forwarded_covariance(ch, pb, variant):
    h_RS, h_RD = ch.h_RS, ch.h_RD
    P_D = pb.P_D if variant.uses_ef else 0.0
    Q = pb.P_S * np.outer(h_RS, h_RS.conj())
    if variant is not Variant.GENIE_EFA:
        Q = Q + P_D * np.outer(h_RD, h_RD.conj())
    return Q


def _harvest(rho, ch, pb, variant):
    P_D = pb.P_D if variant.uses_ef else 0.0
    return rho * (np.sum(np.abs(ch.h_RD) ** 2) * P_D + np.sum(np.abs(ch.h_RS) ** 2) * pb.P_S)


def relay_power_batch(Fs, ch, pb, noise, rho, variant):
    """Relay transmit power of each matrix in the stack ``Fs`` (shape ``(n, r, r)``)."""
    Q = _forwarded_covariance(ch, pb, Variant(variant))
    # Tr{F^H F Q} = sum conj(F) * (F Q), elementwise
    FQ = np.einsum("nij,jk->nik", Fs, Q)
    sig = np.real(np.einsum("nij,nij->n", Fs.conj(), FQ))
    return (1.0 - rho) * sig + noise.sigma_n_sq * np.sum(np.abs(Fs) ** 2, axis=(1, 2))


def snr_batch(Fs, ch, pb, noise, rho):
    """Destination SNR of each matrix in ``Fs`` after cancelling the self-interference."""
    h_DR = ch.h_RD
    s2 = noise.sigma_n_sq
    row = np.einsum("i,nij->nj", h_DR, Fs)
    signal = (1.0 - rho) * pb.P_S * np.abs(row @ ch.h_RS) ** 2
    amplified = np.sum(np.abs(row) ** 2, axis=1) * s2
    return signal / (amplified + s2)


def _rescale(Fs, ch, pb, noise, rho, variant):
    power = relay_power_batch(Fs, ch, pb, noise, rho, variant)
    return Fs * np.sqrt(_harvest(rho, ch, pb, variant) / power)[:, None, None]


def _isotropic(rng, n, r):
    z = rng.standard_normal((n, r * r)) + 1j * rng.standard_normal((n, r * r))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    # column-stacked vec -> matrix
    return z.reshape(n, r, r).transpose(0, 2, 1)


def random_direction_oracle_mimo(p, n, rng, solution=None, include_optimum=False,
                                 tol=DEFAULT_TOLERANCE, chunk=4096):
    """
    Compare the optimized SNR against ``n`` isotropic random feasible relay matrices.

    Each random direction is rescaled to spend exactly the harvested power.
    The reported gap is ``(best sampled - optimized) / optimized``, or the
    relative power residual of the optimum when that exceeds ``tol``.
    """
    if solution is None:
        solution = mimo.optimize_relay_matrix(p)
    ch, pb, noise, rho, variant = p.channels, p.budgets, p.noise, p.rho, p.variant
    best = -math.inf
    remaining = n
    while remaining > 0:
        m = min(chunk, remaining)
        Fs = _rescale(_isotropic(rng, m, ch.r), ch, pb, noise, rho, variant)
        best = max(best, float(snr_batch(Fs, ch, pb, noise, rho).max()))
        remaining -= m
    # the optimized matrix is scored by the same evaluator as the samples
    reference = float(snr_batch(np.asarray(solution.F)[None], ch, pb, noise, rho)[0])
    if include_optimum:
        best = max(best, reference)
    gap = (best - reference) / reference
    # an optimum that overspends the harvested power would inflate the reference
    power = float(relay_power_batch(np.asarray(solution.F)[None], ch, pb, noise, rho, variant)[0])
    harvested = _harvest(rho, ch, pb, variant)
    resid = abs(power - harvested) / harvested
    if resid > tol:
        gap = max(gap, resid)
    return OracleReport("random_direction_mimo", 1, gap, tol)


def perturbation_check(sol, p, n, radius, rng, tol=DEFAULT_TOLERANCE):
    """
    Local optimality test around ``sol.F``.

    Each trial moves ``f`` by ``radius * ||f||`` along an isotropic direction,
    rescales back onto the power-equality surface and compares SNRs.
    """
    ch, pb, noise, rho, variant = p.channels, p.budgets, p.noise, p.rho, p.variant
    F0 = np.asarray(sol.F, dtype=complex)
    Fs = F0[None] + radius * np.linalg.norm(F0) * _isotropic(rng, n, ch.r)
    Fs = _rescale(Fs, ch, pb, noise, rho, variant)
    base = float(snr_batch(_rescale(F0[None], ch, pb, noise, rho, variant), ch, pb, noise, rho)[0])
    best = float(snr_batch(Fs, ch, pb, noise, rho).max())
    return OracleReport("perturbation", n, max((best - base) / base, 0.0), tol)


def mrcmrt_consistency(p, tol=1e-9):
    """
    Check the scalarized MRC/MRT SNR against the matrix-form SNR at ``F'``.

    ``F'`` is rebuilt here from the channel vectors and the returned gain.
    The power residual of ``F'`` is folded into the gap as well.
    """
    sol = mimo.optimize_mrcmrt(p)
    ch = p.channels
    u = ch.h_RD.conj() / np.linalg.norm(ch.h_RD)
    v = ch.h_RS / np.linalg.norm(ch.h_RS)
    F = sol.eta * np.outer(u, v.conj())
    generic = float(snr_batch(F[None], ch, p.budgets, p.noise, p.rho)[0])
    power = float(relay_power_batch(F[None], ch, p.budgets, p.noise, p.rho, p.variant)[0])
    harvested = _harvest(p.rho, ch, p.budgets, p.variant)
    gap = float(max(abs(generic - sol.gamma2) / generic, abs(power - harvested) / harvested))
    return OracleReport("mrcmrt_consistency", 1, gap, tol)


ORACLE_STREAM = 0xD1CE


def _relgap(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def run_suite(seed, instances=40, samples=2000):
    """
    Run every verifier on freshly drawn instances.

    Channels come from :class:`~efa_relay.channel.ChannelStreams` under
    ``seed``; the verifiers' own random draws use a separate stream.

    Returns
    -------
    list of OracleReport
    """
    from . import siso
    from .channel import ChannelStreams, Geometry, NoiseModel, PowerBudget

    streams = ChannelStreams(seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ORACLE_STREAM,)))
    noise = NoiseModel()
    cases = (PowerBudget(0.5, 0.1), PowerBudget(5.0, 0.01))

    gaps = {name: 0.0 for name in (
        "siso_grid", "siso_solver_agreement", "siso_reduction", "vectorized_power",
        "vectorized_snr", "rank_one_shortcut", "mrcmrt_no_ef_optimality",
    )}
    tolerances = {
        "siso_grid": 1e-8,
        "siso_solver_agreement": 1e-6,
        "siso_reduction": 1e-10,
        "vectorized_power": 1e-9,
        "vectorized_snr": 1e-9,
        "rank_one_shortcut": 1e-8,
        "mrcmrt_no_ef_optimality": 1e-8,
    }
    merged = {}

    def add(report):
        merged[report.name] = merged[report.name].merge(report) if report.name in merged else report

    for i in range(instances):
        pb = cases[i % 2]
        geom = Geometry(10.0, float(rng.uniform(0.1, 0.9)))
        rho = float(rng.uniform(0.05, 0.95))

        sc = siso.SisoChannel.from_realization(streams.realize(2 * i, geom, 1))
        closed = siso.optimize_ps_closed_form(sc, pb, noise)
        _, gamma_grid = grid_oracle_siso(sc, pb, noise, 1e-4)
        gaps["siso_grid"] = max(gaps["siso_grid"], (gamma_grid - closed.gamma1) / closed.gamma1)
        numeric = siso.optimize_ps_fractional(sc, pb, noise)
        gaps["siso_solver_agreement"] = max(gaps["siso_solver_agreement"],
                                            _relgap(numeric.gamma1, closed.gamma1))

        ch1 = streams.realize(2 * i, geom, 1)
        p1 = mimo.MimoProblem(ch1, pb, noise, rho)
        f_sq = siso.amplification_gain_sq(rho, siso.p1(sc, pb), noise.sigma_n_sq)
        gamma_siso = siso.snr_gamma1(rho, f_sq, sc, pb, noise)
        gaps["siso_reduction"] = max(gaps["siso_reduction"],
                                     _relgap(mimo.optimize_relay_matrix(p1).gamma2, gamma_siso))

        ch = streams.realize(2 * i + 1, geom, 4)
        for variant in (Variant.EFA, Variant.NO_EF, Variant.GENIE_EFA):
            p = mimo.MimoProblem(ch, pb, noise, rho, variant)
            ops = mimo.assemble_operators(p)
            sol = mimo.optimize_relay_matrix(p, ops)
            add(random_direction_oracle_mimo(p, samples, rng, solution=sol))
            add(perturbation_check(sol, p, 200, 1e-3, rng))
            shortcut = mimo.rank_one_solution(p, ops)
            gaps["rank_one_shortcut"] = max(gaps["rank_one_shortcut"],
                                            _relgap(shortcut.gamma2, sol.gamma2))

            F = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            f = F.reshape(-1, order="F")
            gaps["vectorized_power"] = max(gaps["vectorized_power"], _relgap(
                mimo.forwarded_power_vec(f, ops, p), mimo.forwarded_power(F, p)))
            f = mimo.scale_to_constraint(f, p)
            gaps["vectorized_snr"] = max(gaps["vectorized_snr"], _relgap(
                mimo.snr_quadratic_form(f, ops, p), mimo.snr_gamma2(f, p)))

        for variant in (Variant.MRCMRT_EFA, Variant.MRCMRT_NO_EF):
            add(mrcmrt_consistency(mimo.MimoProblem(ch, pb, noise, rho, variant)))
        no_ef = mimo.optimize_relay_matrix(mimo.MimoProblem(ch, pb, noise, rho, Variant.NO_EF))
        mrc = mimo.optimize_mrcmrt(mimo.MimoProblem(ch, pb, noise, rho, Variant.MRCMRT_NO_EF))
        gaps["mrcmrt_no_ef_optimality"] = max(gaps["mrcmrt_no_ef_optimality"],
                                              _relgap(mrc.rate, no_ef.rate))

    reports = [OracleReport(name, instances, gap, tolerances[name]) for name, gap in gaps.items()]
    return reports + list(merged.values())
