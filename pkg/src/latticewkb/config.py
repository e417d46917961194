"""Run configurations: JSON text in, validated :class:`RunConfig` out.

A configuration is one JSON object. Common keys:

``command``      one of ``solve``, ``compare``, ``classify``, ``green``, ``agmon``, ``ortho``
``potential``    potential descriptor (see :meth:`PotentialSpec.from_dict`)
``range``        ``[n_lo, n_hi]`` with ``n_lo < n_hi``
``tol``          positive tolerance (default ``1e-10``)
``output``       optional output path (stdout when absent)

Command specific keys are listed in :data:`COMMAND_KEYS`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .liouville_green import JStrategy
from .potentials import PotentialSpec

__all__ = ["COMMANDS", "COMMAND_KEYS", "RunConfig", "parse_config", "config_digest"]

COMMANDS = ("solve", "compare", "classify", "green", "agmon", "ortho")

_COMMON = ("command", "potential", "range", "tol", "output")

# optional keys accepted by each command
COMMAND_KEYS = {
    "solve": ("seed", "tail_pad"),
    "compare": ("regime", "strategy", "C", "V_inf", "target", "max_iter"),
    "classify": ("comparison", "mode", "seed", "N", "target", "max_iter"),
    "green": ("boundary", "C", "tail_pad"),
    "agmon": ("variant", "C", "tail_pad"),
    "ortho": ("E",),
}

REGIMES = ("bounded_slow", "bounded_general", "unbounded")
MODES = ("neumann", "forward")
BOUNDARIES = ("mirror", "dirichlet")
VARIANTS = ("K_A_form", "lg_form", "simplified_form")


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration.

    ``options`` holds the command specific keys after validation;
    ``digest`` is the SHA-256 of the config bytes it was parsed from.
    """

    command: str
    potential: PotentialSpec
    n_lo: int
    n_hi: int
    tol: float = 1e-10
    output: str | None = None
    options: dict = field(default_factory=dict)
    digest: str = ""

    def with_overrides(self, tol=None, range_=None, output=None) -> "RunConfig":
        """Apply command-line overrides, revalidating what they touch."""
        cfg = self
        if tol is not None:
            cfg = replace(cfg, tol=_check_tol(tol, "--tol"))
        if range_ is not None:
            lo, hi = _check_range(list(range_), "--range")
            cfg = replace(cfg, n_lo=lo, n_hi=hi)
        if output is not None:
            cfg = replace(cfg, output=output)
        return cfg

    def option(self, key, default=None):
        return self.options.get(key, default)


def config_digest(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return (isinstance(x, (int, float)) and not isinstance(x, bool)
            and math.isfinite(float(x)))


def _check_range(r, path):
    if not (isinstance(r, list) and len(r) == 2 and all(_is_int(v) for v in r)):
        raise ConfigError("expected [n_lo, n_hi] with two integers", path)
    lo, hi = r
    if not lo < hi:
        raise ConfigError(f"empty range [{lo}, {hi}]; need n_lo < n_hi", path)
    return lo, hi


def _check_tol(t, path):
    if not _is_num(t) or not float(t) > 0:
        raise ConfigError(f"tolerance must be a positive number, got {t!r}", path)
    return float(t)


def _num(d, key, positive=False):
    v = d[key]
    if not _is_num(v):
        raise ConfigError(f"expected a number, got {v!r}", key)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v!r}", key)
    return float(v)


def _int(d, key, minimum=None):
    v = d[key]
    if not _is_int(v):
        raise ConfigError(f"expected an integer, got {v!r}", key)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", key)
    return v


def _choice(d, key, choices):
    v = d[key]
    if v not in choices:
        raise ConfigError(f"unknown value {v!r}; expected one of {', '.join(choices)}", key)
    return v


def _seed(d, key="seed"):
    v = d[key]
    if not (isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v)):
        raise ConfigError("expected a pair of numbers", key)
    return (float(v[0]), float(v[1]))


def _options(command, d):
    opts = {}
    for key in COMMAND_KEYS[command]:
        if key not in d:
            continue
        if key == "seed":
            opts[key] = _seed(d)
        elif key in ("tail_pad", "max_iter"):
            opts[key] = _int(d, key, minimum=1)
        elif key == "N":
            opts[key] = _int(d, key)
        elif key in ("C", "target"):
            opts[key] = _num(d, key, positive=True)
        elif key in ("V_inf", "E"):
            opts[key] = _num(d, key)
        elif key == "regime":
            opts[key] = _choice(d, key, REGIMES)
        elif key == "strategy":
            opts[key] = _choice(d, key, tuple(s.value for s in JStrategy))
        elif key == "mode":
            opts[key] = _choice(d, key, MODES)
        elif key == "boundary":
            opts[key] = _choice(d, key, BOUNDARIES)
        elif key == "variant":
            opts[key] = _choice(d, key, VARIANTS)
        elif key == "comparison":
            if not isinstance(d[key], dict):
                raise ConfigError("expected a potential descriptor object", key)
            opts[key] = PotentialSpec.from_dict(d[key], path=key)
    if command == "classify" and "comparison" not in opts:
        raise ConfigError("classify needs a comparison potential", "comparison")
    if command == "classify" and opts.get("mode") == "forward" and "seed" not in opts:
        raise ConfigError("forward mode needs a seed (a+, a-) at the window start", "seed")
    if command == "agmon" and opts.get("variant") == "K_A_form" and "C" not in opts:
        raise ConfigError("variant K_A_form needs C", "C")
    if opts.get("target", 0.5) >= 1:
        raise ConfigError("target must be below 1", "target")
    return opts


def parse_config(text: str | bytes) -> RunConfig:
    """Parse and validate JSON configuration text.

    Raises :class:`ConfigError` for syntax errors (with line and column)
    and for semantic errors (with the dotted path of the offending field).
    """
    raw = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    try:
        d = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not UTF-8 text ({exc.reason})", "<config>") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"JSON syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}",
            "<config>") from None
    if not isinstance(d, dict):
        raise ConfigError("top level must be a JSON object", "<config>")
    if "command" not in d:
        raise ConfigError("missing required key", "command")
    command = d["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}",
                          "command")
    allowed = set(_COMMON) | set(COMMAND_KEYS[command])
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key for command {command!r}", key)
    for key in ("potential", "range"):
        if key not in d:
            raise ConfigError("missing required key", key)
    if not isinstance(d["potential"], dict):
        raise ConfigError("expected a potential descriptor object", "potential")
    V = PotentialSpec.from_dict(d["potential"], path="potential")
    lo, hi = _check_range(d["range"], "range")
    tol = _check_tol(d["tol"], "tol") if "tol" in d else 1e-10
    output = d.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("expected a path string", "output")
    return RunConfig(command, V, lo, hi, tol, output, _options(command, d), config_digest(raw))
