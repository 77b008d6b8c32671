"""
Monte Carlo sweeps behind the rate figures.

Every trial index owns its own small-scale fading draw (see
:class:`efa_relay.channel.ChannelStreams`), shared by all sweep points and all
protocol variants, so comparisons between curves are paired. Per-trial rates
are collected in trial order before any averaging, which makes the result
independent of how trials are split across worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
from enum import Enum
import logging
import math

import numpy as np

from . import mimo, siso
from .channel import PATH_LOSS_EXPONENT, ChannelRealization, ChannelStreams, Geometry, NoiseModel, PowerBudget, path_loss_amplitude
from .errors import DomainError
from .mimo import DEFAULT_PS_GRID, Variant

__all__ = [
    "Family",
    "MonteCarloConfig",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "CSV_HEADER",
    "DEFAULT_SEED",
    "default_spec",
    "run_sweep",
    "run_rate_vs_rho",
    "run_rate_vs_antennas",
    "run_rate_vs_distance_siso",
    "run_rate_vs_distance_mimo",
    "emit_csv",
    "write_csv",
    "read_csv",
    "is_unimodal",
]

log = logging.getLogger(__name__)

DEFAULT_SEED = 20150601
CSV_HEADER = ("sweep_value", "variant", "mean_rate_bits", "std_error", "n_trials")


class Family(str, Enum):
    RATE_VS_RHO = "RateVsRho"
    RATE_VS_ANTENNAS = "RateVsAntennas"
    RATE_VS_DISTANCE_SISO = "RateVsDistanceSiso"
    RATE_VS_DISTANCE_MIMO = "RateVsDistanceMimo"

    def __str__(self):
        return self.value


_DISTANCES = tuple(i / 10 for i in range(1, 10))

DEFAULT_SWEEP_VALUES = {
    Family.RATE_VS_RHO: DEFAULT_PS_GRID,
    Family.RATE_VS_ANTENNAS: tuple(range(1, 9)),
    Family.RATE_VS_DISTANCE_SISO: _DISTANCES,
    Family.RATE_VS_DISTANCE_MIMO: _DISTANCES,
}

DEFAULT_VARIANTS = {
    Family.RATE_VS_RHO: (Variant.EFA, Variant.NO_EF, Variant.GENIE_EFA, Variant.MRCMRT_EFA),
    Family.RATE_VS_ANTENNAS: (Variant.GENIE_EFA, Variant.EFA, Variant.MRCMRT_EFA),
    Family.RATE_VS_DISTANCE_SISO: (Variant.EFA, Variant.NO_EF),
    Family.RATE_VS_DISTANCE_MIMO: (Variant.EFA, Variant.NO_EF, Variant.MRCMRT_EFA, Variant.MRCMRT_NO_EF),
}

ALLOWED_VARIANTS = {
    Family.RATE_VS_RHO: frozenset(DEFAULT_VARIANTS[Family.RATE_VS_RHO]),
    Family.RATE_VS_ANTENNAS: frozenset(Variant),
    Family.RATE_VS_DISTANCE_SISO: frozenset((Variant.EFA, Variant.NO_EF)),
    Family.RATE_VS_DISTANCE_MIMO: frozenset(Variant),
}


@dataclass(frozen=True)
class MonteCarloConfig:
    n_trials: int = 1000
    master_seed: int = DEFAULT_SEED
    parallelism: int = 1

    def __post_init__(self):
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise DomainError(f"n_trials must be a positive integer, got {self.n_trials}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise DomainError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if int(self.parallelism) != self.parallelism or self.parallelism < 1:
            raise DomainError(f"parallelism must be a positive integer, got {self.parallelism}")


@dataclass(frozen=True)
class SweepSpec:
    family: Family
    sweep_values: tuple
    geometry: Geometry = Geometry()
    budgets: PowerBudget = PowerBudget()
    noise: NoiseModel = NoiseModel()
    r: int = 4
    variants: tuple = ()
    ps_grid: tuple = DEFAULT_PS_GRID
    path_loss_exponent: float = PATH_LOSS_EXPONENT

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        variants = tuple(Variant(v) for v in (self.variants or DEFAULT_VARIANTS[family]))
        object.__setattr__(self, "variants", variants)
        bad = [str(v) for v in variants if v not in ALLOWED_VARIANTS[family]]
        if bad:
            raise DomainError(f"variants {bad} are not available for {family}")
        if len(set(variants)) != len(variants):
            raise DomainError("variants must be distinct")

        values = tuple(self.sweep_values)
        if not values:
            raise DomainError("sweep_values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DomainError("sweep_values must be strictly increasing")
        if family is Family.RATE_VS_ANTENNAS:
            if any(int(v) != v or v < 1 for v in values):
                raise DomainError("antenna counts must be positive integers")
            values = tuple(int(v) for v in values)
        elif not all(0.0 < v < 1.0 for v in values):
            raise DomainError(f"sweep values for {family} must lie in (0, 1)")
        object.__setattr__(self, "sweep_values", tuple(values))

        grid = tuple(float(x) for x in self.ps_grid)
        if not grid or not all(0.0 < x < 1.0 for x in grid):
            raise DomainError("ps_grid must be a nonempty list of ratios in (0, 1)")
        object.__setattr__(self, "ps_grid", grid)
        if int(self.r) != self.r or self.r < 1:
            raise DomainError(f"r must be a positive integer, got {self.r}")
        if not self.path_loss_exponent > 0:
            raise DomainError("path_loss_exponent must be positive")


def default_spec(family, **overrides):
    """Sweep with the default grid and variants of ``family`` at the reference scenario."""
    family = Family(family)
    kwargs = dict(family=family, sweep_values=DEFAULT_SWEEP_VALUES[family])
    kwargs.update(overrides)
    return SweepSpec(**kwargs)


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    variant: str
    mean_rate: float
    std_error: float
    n_trials: int


@dataclass
class SweepResult:
    """
    Averaged rates, one row per (sweep value, variant).

    ``samples`` keeps the per-trial rates in trial order for paired analysis;
    it is not written to CSV.
    """

    family: Family
    rows: list
    samples: dict = field(default_factory=dict, repr=False)

    def row(self, sweep_value, variant):
        variant = str(Variant(variant))
        for row in self.rows:
            if row.sweep_value == sweep_value and row.variant == variant:
                return row
        raise KeyError((sweep_value, variant))

    def sample(self, sweep_value, variant):
        return self.samples[(sweep_value, str(Variant(variant)))]

    def curve(self, variant):
        """Mean rate of ``variant`` across the sweep, in sweep order."""
        variant = str(Variant(variant))
        rows = sorted((r for r in self.rows if r.variant == variant), key=lambda r: r.sweep_value)
        return np.array([r.mean_rate for r in rows])


def _best_rate(ch, spec, variant):
    return float(mimo.rate_curve(ch, spec.budgets, spec.noise, spec.ps_grid, variant).max())


def _scaled(h_bar_RS, h_bar_RD, geom, exponent):
    return ChannelRealization(
        path_loss_amplitude(geom.d_RS, exponent) * h_bar_RS,
        path_loss_amplitude(geom.d_DR, exponent) * h_bar_RD,
    )


def _evaluate_trials(spec, master_seed, trials):
    """Rates with shape ``(len(sweep_values), len(variants), len(trials))``."""
    streams = ChannelStreams(master_seed, spec.path_loss_exponent)
    values = spec.sweep_values
    out = np.empty((len(values), len(spec.variants), len(trials)))
    for k, trial in enumerate(trials):
        if spec.family is Family.RATE_VS_ANTENNAS:
            h_bar = streams.small_scale(trial, max(values))
            for i, r in enumerate(values):
                ch = _scaled(h_bar[0][:r], h_bar[1][:r], spec.geometry, spec.path_loss_exponent)
                for j, v in enumerate(spec.variants):
                    out[i, j, k] = _best_rate(ch, spec, v)
            continue

        r = 1 if spec.family is Family.RATE_VS_DISTANCE_SISO else spec.r
        h_bar = streams.small_scale(trial, r)
        for i, ratio in enumerate(values):
            geom = Geometry(spec.geometry.d_DS, ratio)
            ch = _scaled(h_bar[0], h_bar[1], geom, spec.path_loss_exponent)
            if spec.family is Family.RATE_VS_DISTANCE_SISO:
                sc = siso.SisoChannel.from_realization(ch)
                for j, v in enumerate(spec.variants):
                    if v is Variant.EFA:
                        out[i, j, k] = siso.optimize_ps_closed_form(sc, spec.budgets, spec.noise).rate
                    else:
                        out[i, j, k] = siso.optimize_no_ef(sc, spec.budgets.P_S, spec.noise).rate
            else:
                for j, v in enumerate(spec.variants):
                    out[i, j, k] = _best_rate(ch, spec, v)
    return out


def _chunks(n, parts):
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _collect(spec, rates):
    """Turn a ``(values, variants, trials)`` array into a :class:`SweepResult`."""
    n = rates.shape[2]
    rows = []
    samples = {}
    for i, value in enumerate(spec.sweep_values):
        for j, variant in enumerate(spec.variants):
            x = rates[i, j]
            se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
            rows.append(SweepRow(value, str(variant), float(np.mean(x)), se, n))
            samples[(value, str(variant))] = x.copy()
    rows.sort(key=lambda r: (r.sweep_value, r.variant))
    return SweepResult(spec.family, rows, samples)


def _run_monte_carlo(spec, mc):
    chunks = _chunks(mc.n_trials, mc.parallelism)
    log.info("%s: %d trials x %d points x %d variants", spec.family, mc.n_trials,
             len(spec.sweep_values), len(spec.variants))
    if mc.parallelism == 1 or len(chunks) == 1:
        parts = [_evaluate_trials(spec, mc.master_seed, c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=mc.parallelism) as pool:
            parts = list(pool.map(_evaluate_trials, [spec] * len(chunks),
                                  [mc.master_seed] * len(chunks), chunks))
    return _collect(spec, np.concatenate(parts, axis=2))


def _require(spec, family):
    if spec.family is not family:
        raise DomainError(f"expected a {family} sweep, got {spec.family}")


def run_rate_vs_rho(spec, mc):
    """Rate against the PS ratio for a single channel realization (trial 0 of the seed)."""
    _require(spec, Family.RATE_VS_RHO)
    ch = ChannelStreams(mc.master_seed, spec.path_loss_exponent).realize(0, spec.geometry, spec.r)
    rhos = np.asarray(spec.sweep_values, dtype=float)
    rates = np.empty((len(rhos), len(spec.variants), 1))
    for j, v in enumerate(spec.variants):
        rates[:, j, 0] = mimo.rate_curve(ch, spec.budgets, spec.noise, rhos, v)
    return _collect(spec, rates)


def run_rate_vs_antennas(spec, mc):
    """Average rate against antenna count, each variant at its best grid PS ratio."""
    _require(spec, Family.RATE_VS_ANTENNAS)
    return _run_monte_carlo(spec, mc)


def run_rate_vs_distance_siso(spec, mc):
    """Average single-antenna rate against ``d_DR / d_DS`` with the optimal PS ratio."""
    _require(spec, Family.RATE_VS_DISTANCE_SISO)
    return _run_monte_carlo(spec, mc)


def run_rate_vs_distance_mimo(spec, mc):
    """Average multiple-antenna rate against ``d_DR / d_DS``, PS ratio grid-searched per trial."""
    _require(spec, Family.RATE_VS_DISTANCE_MIMO)
    return _run_monte_carlo(spec, mc)


_RUNNERS = {
    Family.RATE_VS_RHO: run_rate_vs_rho,
    Family.RATE_VS_ANTENNAS: run_rate_vs_antennas,
    Family.RATE_VS_DISTANCE_SISO: run_rate_vs_distance_siso,
    Family.RATE_VS_DISTANCE_MIMO: run_rate_vs_distance_mimo,
}


def run_sweep(spec, mc=None):
    return _RUNNERS[spec.family](spec, mc or MonteCarloConfig())


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(result, stream):
    """Write ``result`` as CSV to an open text stream, sorted by sweep value then variant."""
    rows = sorted(result.rows, key=lambda r: (r.sweep_value, r.variant))
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row.sweep_value), row.variant, _fmt(row.mean_rate),
                         _fmt(row.std_error), str(row.n_trials)])


def emit_csv(result, path):
    """Write ``result`` as CSV to ``path``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(result, fh)


def read_csv(path):
    """Parse a file written by :func:`emit_csv` back into rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for rec in reader:
            value = int(rec[0]) if rec[0].lstrip("-").isdigit() else float(rec[0])
            rows.append(SweepRow(value, rec[1], float(rec[2]), float(rec[3]), int(rec[4])))
    return rows


def is_unimodal(values, rtol=1e-12):
    """
    True if ``values`` rises (weakly) to a single peak and then falls (weakly).

    Steps smaller than ``rtol`` times the largest magnitude count as flat.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return True
    d = np.diff(x)
    d[np.abs(d) <= rtol * np.max(np.abs(x))] = 0.0
    falling = False
    for step in d:
        if step < 0:
            falling = True
        elif step > 0 and falling:
            return False
    return True
