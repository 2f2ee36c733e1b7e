"""Plain-text run configuration.

The format is deliberately small: one ``key = value`` pair per line,
``#`` starts a comment, blank lines are ignored.  An empty document is a
valid configuration and means "the generic preset with every default".
Keys are case-insensitive and ``-`` is accepted for ``_``.

Initial data is described by truncated trigonometric series.  For a field
``X`` the keys are

    X_cos = c0, c1, c2, ...     ->  c0 + c1*cos(x) + c2*cos(2x) + ...
    X_sin = s1, s2, ...         ->  s1*sin(x) + s2*sin(2x) + ...

(the cosine list starts at the constant term, the sine list at the first
mode).  Fields: ``u0``, ``omega0``, ``beta0``, ``k0``, ``gamma0``.  Give
either ``beta0`` or ``k0``, never both; ``k0`` is converted through a
pointwise square root and must be nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .model import Params
from .stepping import StepControl

__all__ = ["ScenarioConfig", "ConfigError", "parse_config", "load_config"]

SCENARIO_NAMES = ("generic", "uniform", "blowup", "toy", "custom")
SWEEP_PARAMETERS = ("epsilon", "n_points", "dt_max", "delta")

_FLOAT_KEYS = (
    "t_final",
    "nu", "alpha1", "alpha2", "alpha3", "alpha4", "ell_constant",
    "cfl_advective", "cfl_diffusive", "dt_min", "dt_max",
    "blowup_grad_threshold", "omega_floor", "beta_tol",
    "c_cal", "k_fit", "snapshot_dt",
)
_INT_KEYS = ("n_points", "audit_stride")
_BOOL_KEYS = ("symmetry_projection",)
_LIST_KEYS = (
    "u0_cos", "u0_sin", "omega0_cos", "omega0_sin",
    "beta0_cos", "beta0_sin", "k0_cos", "k0_sin",
    "gamma0_cos", "gamma0_sin", "sweep_values",
)
_STR_KEYS = ("scenario", "sweep_parameter")


class ConfigError(ValueError):
    """Raised for syntax or validation problems in a configuration."""


@dataclass
class ScenarioConfig:
    """Everything a run or sweep needs, with defaults filled in.

    ``explicit`` records which keys the document actually set; presets use
    it to avoid clobbering deliberate choices when they install their own
    step-control or initial-data defaults.
    """

    scenario: str = "generic"
    n_points: int = 256
    t_final: float = 1.0

    nu: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    alpha4: float = 1.0
    ell_constant: float = 1.0

    cfl_advective: float = 0.4
    cfl_diffusive: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1e-4
    blowup_grad_threshold: float = 1e6
    omega_floor: float = 1e-10
    beta_tol: float = 1e-8

    u0_cos: list[float] = field(default_factory=list)
    u0_sin: list[float] = field(default_factory=list)
    omega0_cos: list[float] = field(default_factory=list)
    omega0_sin: list[float] = field(default_factory=list)
    beta0_cos: list[float] = field(default_factory=list)
    beta0_sin: list[float] = field(default_factory=list)
    k0_cos: list[float] = field(default_factory=list)
    k0_sin: list[float] = field(default_factory=list)
    gamma0_cos: list[float] = field(default_factory=list)
    gamma0_sin: list[float] = field(default_factory=list)

    symmetry_projection: bool = False
    audit_stride: int = 1
    c_cal: float = 1e-2
    k_fit: float | None = None
    snapshot_dt: float = 5e-3

    sweep_parameter: str | None = None
    sweep_values: list[float] = field(default_factory=list)

    explicit: set[str] = field(default_factory=set)

    def params(self) -> Params:
        return Params(
            nu=self.nu, alpha1=self.alpha1, alpha2=self.alpha2,
            alpha3=self.alpha3, alpha4=self.alpha4,
            ell_constant=self.ell_constant,
        )

    def control(self) -> StepControl:
        return StepControl(
            cfl_advective=self.cfl_advective,
            cfl_diffusive=self.cfl_diffusive,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            blowup_grad_threshold=self.blowup_grad_threshold,
            omega_floor=self.omega_floor,
            beta_tol=self.beta_tol,
        )

    def is_sweep(self) -> bool:
        return self.sweep_parameter is not None

    def echo(self) -> dict:
        """JSON-ready copy of the configuration (explicit-key set sorted)."""
        d = asdict(self)
        d["explicit"] = sorted(self.explicit)
        return d


def _parse_scalar(key: str, text: str, lineno: int):
    if key in _FLOAT_KEYS:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects a number, got {text!r}") from None
    if key in _INT_KEYS:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects an integer, got {text!r}") from None
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"line {lineno}: {key} expects true/false, got {text!r}")
    if key in _LIST_KEYS:
        items = [part.strip() for part in text.split(",")]
        try:
            return [float(part) for part in items if part]
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key} expects comma-separated numbers, got {text!r}"
            ) from None
    # _STR_KEYS
    return text


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a configuration document.

    Raises ConfigError with a line number for syntax problems and with the
    offending key named for semantic ones.
    """
    cfg = ScenarioConfig()
    known = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_BOOL_KEYS) | set(_LIST_KEYS) | set(_STR_KEYS)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key_part, value_part = line.split("=", 1)
        key = key_part.strip().lower().replace("-", "_")
        value_text = value_part.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in cfg.explicit:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        setattr(cfg, key, _parse_scalar(key, value_text, lineno))
        cfg.explicit.add(key)

    _validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.scenario not in SCENARIO_NAMES:
        raise ConfigError(
            f"unknown scenario {cfg.scenario!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )
    if cfg.n_points < 8 or cfg.n_points % 2:
        raise ConfigError(f"n_points must be an even integer >= 8, got {cfg.n_points}")
    if not cfg.t_final > 0.0:
        raise ConfigError(f"t_final must be positive, got {cfg.t_final}")
    if cfg.audit_stride < 1:
        raise ConfigError(f"audit_stride must be >= 1, got {cfg.audit_stride}")
    if not cfg.snapshot_dt > 0.0:
        raise ConfigError(f"snapshot_dt must be positive, got {cfg.snapshot_dt}")
    if not cfg.c_cal > 0.0:
        raise ConfigError(f"c_cal must be positive, got {cfg.c_cal}")

    # Model coefficients and step control carry their own positivity rules;
    # surface those here so a bad document fails at parse time.
    cfg.params()
    cfg.control()

    has_beta = bool(cfg.beta0_cos or cfg.beta0_sin)
    has_k = bool(cfg.k0_cos or cfg.k0_sin)
    if has_beta and has_k:
        raise ConfigError("give initial data as beta0_* or k0_*, not both")
    if (cfg.gamma0_cos or cfg.gamma0_sin) and cfg.scenario != "toy":
        raise ConfigError("gamma0_* keys apply only to the toy scenario")
    if cfg.scenario == "toy" and (has_beta or has_k or cfg.omega0_cos or cfg.omega0_sin):
        raise ConfigError("the toy scenario has no omega or beta fields")

    if cfg.sweep_parameter is not None:
        if cfg.sweep_parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"unknown sweep_parameter {cfg.sweep_parameter!r}; "
                f"choose from {', '.join(SWEEP_PARAMETERS)}"
            )
        if not cfg.sweep_values:
            raise ConfigError("sweep_parameter set but sweep_values is empty")
        if cfg.sweep_parameter == "n_points":
            for v in cfg.sweep_values:
                if v != int(v) or int(v) < 8 or int(v) % 2:
                    raise ConfigError(
                        f"n_points sweep values must be even integers >= 8, got {v:g}"
                    )
        elif any(not v > 0.0 for v in cfg.sweep_values):
            raise ConfigError(f"{cfg.sweep_parameter} sweep values must be positive")
        if len(set(cfg.sweep_values)) != len(cfg.sweep_values):
            raise ConfigError("sweep_values contains duplicates")
    elif cfg.sweep_values:
        raise ConfigError("sweep_values set but sweep_parameter is missing")
