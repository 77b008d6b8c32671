"""
Scenario files for the command-line tool.

A scenario is a JSON object with nested sections. Every key is optional;
omitted values fall back to the reference scenario (``d_DS = 10 m``,
``sigma_n^2 = 1 uW``, ``r = 4``, ``P_D = 0.5 W``, ``P_S = 0.1 W``). Unknown
keys are rejected. Example::

    {
      "geometry": {"d_DS": 10.0, "ratio_DR": 0.5},
      "budgets": {"P_D": 0.5, "P_S": 0.1},
      "noise": {"sigma_n_sq": 1e-6},
      "channel": {"r": 4, "path_loss_exponent": 3.0},
      "monte_carlo": {"n_trials": 1000, "seed": 20150601, "parallelism": 1},
      "sweep": {"values": [2, 4, 8], "variants": ["EFA", "NoEF"],
                "ps_grid": {"start": 0.01, "stop": 0.99, "step": 0.01}},
      "output": "out.csv"
    }
"""

from dataclasses import asdict, dataclass
import json
import math
from numbers import Real
from typing import Optional

from .channel import PATH_LOSS_EXPONENT, Geometry, NoiseModel, PowerBudget
from .errors import DomainError, ParseError, ValidationError
from .experiments import DEFAULT_SEED, DEFAULT_SWEEP_VALUES, Family, MonteCarloConfig, SweepSpec
from .mimo import DEFAULT_PS_GRID, Variant

__all__ = ["RunConfig", "parse_config", "parse_config_text", "config_from_dict", "dump_config"]

_SCHEMA = {
    "geometry": {"d_DS": "d_DS", "ratio_DR": "ratio_DR"},
    "budgets": {"P_D": "P_D", "P_S": "P_S"},
    "noise": {"sigma_n_sq": "sigma_n_sq"},
    "channel": {"r": "r", "path_loss_exponent": "path_loss_exponent"},
    "monte_carlo": {"n_trials": "n_trials", "seed": "seed", "parallelism": "parallelism"},
    "sweep": {"values": "sweep_values", "variants": "variants", "ps_grid": "ps_grid"},
}


@dataclass(frozen=True)
class RunConfig:
    d_DS: float = 10.0
    ratio_DR: float = 0.5
    P_D: float = 0.5
    P_S: float = 0.1
    sigma_n_sq: float = 1e-6
    r: int = 4
    path_loss_exponent: float = PATH_LOSS_EXPONENT
    n_trials: int = 1000
    seed: int = DEFAULT_SEED
    parallelism: int = 1
    sweep_values: Optional[tuple] = None
    variants: Optional[tuple] = None
    ps_grid: tuple = DEFAULT_PS_GRID
    output: Optional[str] = None

    def __post_init__(self):
        _guard("geometry", lambda: Geometry(self.d_DS, self.ratio_DR), ("d_DS", "ratio_DR"))
        _guard("budgets", lambda: PowerBudget(self.P_D, self.P_S), ("P_D", "P_S"))
        _guard("noise", lambda: NoiseModel(self.sigma_n_sq), ("sigma_n_sq",))
        _guard("monte_carlo", lambda: MonteCarloConfig(self.n_trials, self.seed, self.parallelism),
               ("n_trials", "seed", "parallelism"))
        if self.r < 1:
            raise ValidationError("channel.r", f"must be >= 1, got {self.r}")
        if not (self.path_loss_exponent > 0 and math.isfinite(self.path_loss_exponent)):
            raise ValidationError("channel.path_loss_exponent", "must be positive")
        if not self.ps_grid or not all(0.0 < x < 1.0 for x in self.ps_grid):
            raise ValidationError("sweep.ps_grid", "entries must lie in (0, 1)")
        if self.sweep_values is not None:
            vals = self.sweep_values
            if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValidationError("sweep.values", "must be nonempty and strictly increasing")

    @property
    def geometry(self):
        return Geometry(self.d_DS, self.ratio_DR)

    @property
    def budgets(self):
        return PowerBudget(self.P_D, self.P_S)

    @property
    def noise(self):
        return NoiseModel(self.sigma_n_sq)

    @property
    def monte_carlo(self):
        return MonteCarloConfig(self.n_trials, self.seed, self.parallelism)

    def sweep_spec(self, family):
        """Sweep of ``family`` described by this scenario."""
        family = Family(family)
        values = self.sweep_values if self.sweep_values is not None else DEFAULT_SWEEP_VALUES[family]
        return _guard("sweep", lambda: SweepSpec(
            family=family,
            sweep_values=values,
            geometry=self.geometry,
            budgets=self.budgets,
            noise=self.noise,
            r=self.r,
            variants=self.variants or (),
            ps_grid=self.ps_grid,
            path_loss_exponent=self.path_loss_exponent,
        ))

    def to_dict(self):
        flat = asdict(self)
        out = {}
        for section, keys in _SCHEMA.items():
            out[section] = {}
            for key, attr in keys.items():
                value = flat[attr]
                if isinstance(value, tuple):
                    value = list(value)
                out[section][key] = value
        out["output"] = self.output
        return out


def _guard(section, build, keys=()):
    """Run ``build``; report a domain failure against the offending key when it can be told."""
    try:
        return build()
    except DomainError as exc:
        message = str(exc)
        field = next((f"{section}.{k}" for k in keys if k in message), section)
        raise ValidationError(field, message) from None


def _number(field, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValidationError(field, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ValidationError(field, f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(field, "must be finite")
    return value


def _range(field, value):
    unknown = set(value) - {"start", "stop", "step"}
    if unknown:
        raise ValidationError(f"{field}.{sorted(unknown)[0]}", "unknown key")
    missing = {"start", "stop", "step"} - set(value)
    if missing:
        raise ValidationError(f"{field}.{sorted(missing)[0]}", "missing key")
    start = _number(f"{field}.start", value["start"])
    stop = _number(f"{field}.stop", value["stop"])
    step = _number(f"{field}.step", value["step"])
    if step <= 0 or stop < start:
        raise ValidationError(field, "need step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(n))


def _ps_grid(value):
    if isinstance(value, dict):
        return _range("sweep.ps_grid", value)
    if isinstance(value, list):
        return tuple(_number("sweep.ps_grid", x) for x in value)
    raise ValidationError("sweep.ps_grid", "expected a list or a {start, stop, step} object")


def config_from_dict(obj):
    """Validate a decoded scenario object and fill in defaults."""
    if not isinstance(obj, dict):
        raise ParseError("scenario must be a JSON object")
    kwargs = {}
    for key, value in obj.items():
        if key == "output":
            if value is not None and not isinstance(value, str):
                raise ValidationError("output", "expected a path string")
            kwargs["output"] = value
            continue
        if key not in _SCHEMA:
            raise ValidationError(key, "unknown key")
        if not isinstance(value, dict):
            raise ValidationError(key, "expected an object")
        for sub, item in value.items():
            field = f"{key}.{sub}"
            if sub not in _SCHEMA[key]:
                raise ValidationError(field, "unknown key")
            attr = _SCHEMA[key][sub]
            if item is None:
                continue
            if attr == "ps_grid":
                kwargs[attr] = _ps_grid(item)
            elif attr == "variants":
                if not isinstance(item, list):
                    raise ValidationError(field, "expected a list of variant names")
                try:
                    kwargs[attr] = tuple(str(Variant(v)) for v in item)
                except ValueError:
                    raise ValidationError(field, f"unknown variant in {item}") from None
            elif attr == "sweep_values":
                if isinstance(item, dict):
                    kwargs[attr] = _range(field, item)
                    continue
                if not isinstance(item, list):
                    raise ValidationError(field, "expected a list or a {start, stop, step} object")
                kwargs[attr] = tuple(
                    int(v) if isinstance(v, int) and not isinstance(v, bool) else _number(field, v)
                    for v in item
                )
            elif attr in ("r", "n_trials", "seed", "parallelism"):
                kwargs[attr] = _number(field, item, integer=True)
            else:
                kwargs[attr] = _number(field, item)
    return RunConfig(**kwargs)


def parse_config_text(text):
    try:
        obj = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed scenario: {exc}") from None
    return config_from_dict(obj)


def parse_config(path):
    """Read and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text)


def dump_config(cfg, path=None):
    text = json.dumps(cfg.to_dict(), indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
