"""Channel parameter handling: Gaussian instances and bit-level depths.

A Gaussian instance is a K-user multiple access channel
``y = sum_i x_i + sum_i s_i + z`` with per-user power limit ``P_i``, one
additive interference ``s_i ~ N(0, Q_i)`` known non-causally to
transmitter i only, and noise ``z ~ N(0, noise)``.  Users are kept sorted
by descending power.

The matching deterministic bit-level instance keeps ``floor(log2(SNR)/2)``
signal levels and ``floor(log2(INR)/2)`` interference levels per user,
with word size equal to the largest depth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError

MAX_WORD_SIZE = 64


@dataclass(frozen=True)
class GaussianParams:
    """Validated Gaussian channel instance, users sorted by descending power.

    Powers are stored in linear scale; SNR/INR are always derived from the
    stored powers and noise, never cached separately.  ``permutation[j]``
    is the original (0-based) index of sorted user j.
    """

    powers: tuple[float, ...]
    interference: tuple[float, ...]
    noise: float
    permutation: tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.powers)

    @property
    def snr(self) -> tuple[float, ...]:
        return tuple(p / self.noise for p in self.powers)

    @property
    def inr(self) -> tuple[float, ...]:
        return tuple(q / self.noise for q in self.interference)

    def power(self, i: int) -> float:
        """P_i with the convention P_{K+1} = 0 (1-based user index)."""
        return self.powers[i - 1] if i <= self.K else 0.0


@dataclass(frozen=True)
class BitLevelParams:
    """Deterministic bit-level instance: per-user signal/interference depths."""

    signal_depths: tuple[int, ...]
    interference_depths: tuple[int, ...]

    def __post_init__(self):
        n, m = self.signal_depths, self.interference_depths
        if len(n) == 0 or len(m) != len(n):
            raise ValueError("need one signal and one interference depth per user")
        if any(d < 0 or d != int(d) for d in n + m):
            raise ValueError("depths must be nonnegative integers")
        if any(n[i] < n[i + 1] for i in range(len(n) - 1)):
            raise ValueError("signal depths must be nonincreasing")
        if max(n + m) > MAX_WORD_SIZE:
            raise ValueError(f"word size > {MAX_WORD_SIZE} is not supported")

    @property
    def K(self) -> int:
        return len(self.signal_depths)

    @property
    def word_size(self) -> int:
        """Number of levels in the channel output word."""
        return max(self.signal_depths + self.interference_depths)

    def signal_depth(self, i: int) -> int:
        """n_i with the convention n_{K+1} = 0 (1-based user index)."""
        return self.signal_depths[i - 1] if i <= self.K else 0


def validate_gaussian(powers: Sequence[float], interference: Sequence[float],
                      noise: float) -> GaussianParams:
    """Normalize raw channel parameters into a :class:`GaussianParams`.

    Sorts users by descending power (stable, so equal powers keep their
    original order) carrying each interference along with its owner, and
    records the permutation applied.
    """
    powers = [float(p) for p in powers]
    interference = [float(q) for q in interference]
    if not powers:
        raise ValueError("at least one user is required")
    if len(interference) != len(powers):
        raise ValueError(
            f"interference list has length {len(interference)}, expected {len(powers)}")
    noise = float(noise)
    if not (noise > 0 and math.isfinite(noise)):
        raise ValueError("noise variance must be positive and finite")
    for i, p in enumerate(powers):
        if p < 0 or not math.isfinite(p):
            raise ValueError(f"power of user {i + 1} must be finite and nonnegative")
    for i, q in enumerate(interference):
        if q < 0 or not math.isfinite(q):
            raise ValueError(
                f"interference power of user {i + 1} must be finite and nonnegative")
    order = sorted(range(len(powers)), key=lambda i: -powers[i])
    return GaussianParams(
        powers=tuple(powers[i] for i in order),
        interference=tuple(interference[i] for i in order),
        noise=noise,
        permutation=tuple(order),
    )


def half_log_floor(ratio: float) -> int:
    """floor(log2(ratio) / 2), clamped at zero for ratios below one.

    Exact powers of two take an integer path; otherwise a double-precision
    log is used with a guard that rounds up when the result lands within
    1e-9 below an integer, protecting boundary ratios from float
    underestimation.
    """
    if not ratio > 1.0:
        return 0
    mant, exp = math.frexp(ratio)
    if mant == 0.5:  # ratio == 2**(exp - 1) exactly
        return (exp - 1) // 2
    v = 0.5 * math.log2(ratio)
    f = math.floor(v)
    if v - f > 1.0 - 1e-9:
        f += 1
    return int(f)


def to_bit_levels(g: GaussianParams) -> BitLevelParams:
    """Bit-level depths of a Gaussian instance."""
    return BitLevelParams(
        signal_depths=tuple(half_log_floor(s) for s in g.snr),
        interference_depths=tuple(half_log_floor(q) for q in g.inr),
    )


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _config_group(cfg: dict, name: str, scalar: bool = False):
    """Resolve a linear/dB field pair; exactly one of the two must be present."""
    db_name = name + "_db"
    has_lin, has_db = name in cfg, db_name in cfg
    if has_lin and has_db:
        raise ConfigError(f"/{name}", f"give exactly one of '{name}' or '{db_name}'")
    if not has_lin and not has_db:
        raise ConfigError(f"/{name}", f"missing field '{name}' or '{db_name}'")
    key = name if has_lin else db_name
    raw = cfg[key]
    if scalar:
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise ConfigError(f"/{key}", "expected a number")
        return _db_to_linear(raw) if has_db else float(raw)
    if (not isinstance(raw, list) or not raw
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw)):
        raise ConfigError(f"/{key}", "expected a non-empty array of numbers")
    vals = [float(v) for v in raw]
    return [_db_to_linear(v) for v in vals] if has_db else vals


def params_from_config(cfg: dict) -> GaussianParams:
    """Build a validated instance from a parsed JSON config.

    Schema: ``{"K": int, "powers_db": [float], "interference_db": [float],
    "noise_db": float}`` or the linear variants (``powers``,
    ``interference``, ``noise``); exactly one of dB/linear per field group.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("", "config must be a JSON object")
    powers = _config_group(cfg, "powers")
    interference = _config_group(cfg, "interference")
    noise = _config_group(cfg, "noise", scalar=True)
    if "K" in cfg:
        if not isinstance(cfg["K"], int) or isinstance(cfg["K"], bool):
            raise ConfigError("/K", "expected an integer")
        if cfg["K"] != len(powers):
            raise ConfigError("/K", f"K={cfg['K']} but {len(powers)} powers given")
    if len(interference) != len(powers):
        raise ConfigError("/interference",
                          f"{len(interference)} entries, expected {len(powers)}")
    try:
        return validate_gaussian(powers, interference, noise)
    except ValueError as exc:
        raise ConfigError("", str(exc)) from exc


def load_config(path: str) -> GaussianParams:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}")
    return params_from_config(cfg)
