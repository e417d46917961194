"""Potential sequences V_n given by named families or explicit tables.

Every family is evaluated vectorized on absolute indices ``n >= origin``.
Families that can leave double range (the geometric perturbation) also
provide an exact log-magnitude so small differences never underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, WindowError

FAMILIES = (
    "constant",
    "power_decay",
    "threshold",
    "sparse",
    "fluctuating",
    "table",
    "shifted",
    "reflected",
    "perturbed",
    "geometric",
)

_NESTED = {"shifted": ("base",), "reflected": ("base",), "sparse": ("base",),
           "perturbed": ("base", "delta")}

_REQUIRED = {
    "constant": ("V",),
    "power_decay": ("gamma",),
    "threshold": ("alpha",),
    "sparse": ("base", "sites"),
    "fluctuating": ("a",),
    "table": ("values",),
    "shifted": ("base", "E"),
    "reflected": ("base",),
    "perturbed": ("base", "delta"),
    "geometric": ("V",),
}

_OPTIONAL = {
    "power_decay": ("tail",),
    "sparse": ("amplitude", "amplitudes", "decay"),
    "geometric": ("alternating", "scale"),
}


def exponential_root(v_inf):
    """Root x of x + 1/x = 2 + V with |x| < 1; requires V outside [-4, 0]."""
    b = 2.0 + v_inf
    if -4.0 <= v_inf <= 0.0:
        raise DomainError(f"V={v_inf} lies in [-4, 0]: no subdominant solution")
    # numerically stable small root of x^2 - b x + 1 = 0
    big = (b + np.sign(b) * np.sqrt(b * b - 4.0)) / 2.0
    return 1.0 / big


@dataclass(frozen=True)
class PotentialSpec:
    """A real potential on ``n >= origin``.

    Parameters
    ----------
    family : str
        One of ``FAMILIES``.
    params : dict
        Family parameters; nested potentials are ``PotentialSpec`` values.
    origin : int
        First index at which the potential is defined.
    """

    family: str
    params: dict = field(default_factory=dict)
    origin: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown potential family {self.family!r}")
        missing = [k for k in _REQUIRED[self.family] if k not in self.params]
        if missing:
            raise DomainError(f"{self.family}: missing parameters {missing}")
        allowed = set(_REQUIRED[self.family]) | set(_OPTIONAL.get(self.family, ()))
        extra = set(self.params) - allowed
        if extra:
            raise DomainError(f"{self.family}: unknown parameters {sorted(extra)}")
        object.__setattr__(self, "origin", int(self.origin))
        if self.family == "threshold" and self.origin < 2:
            raise DomainError("threshold potential needs origin >= 2")

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, V, origin=1):
        return cls("constant", {"V": float(V)}, origin)

    @classmethod
    def power_decay(cls, gamma, tail=None, origin=1):
        p = {"gamma": float(gamma)}
        if tail is not None:
            p["tail"] = tuple(float(t) for t in tail)
        return cls("power_decay", p, origin)

    @classmethod
    def threshold(cls, alpha, origin=2):
        return cls("threshold", {"alpha": float(alpha)}, origin)

    @classmethod
    def sparse(cls, base, sites, amplitude=None, amplitudes=None, decay=None):
        p = {"base": base, "sites": sites if isinstance(sites, str) else tuple(int(k) for k in sites)}
        if amplitude is not None:
            p["amplitude"] = float(amplitude)
        if amplitudes is not None:
            p["amplitudes"] = tuple(float(a) for a in amplitudes)
        if decay is not None:
            p["decay"] = float(decay)
        return cls("sparse", p, base.origin)

    @classmethod
    def fluctuating(cls, a, origin=1):
        return cls("fluctuating", {"a": float(a)}, origin)

    @classmethod
    def table(cls, values, origin=1):
        return cls("table", {"values": tuple(float(v) for v in values)}, origin)

    @classmethod
    def shifted(cls, base, E):
        return cls("shifted", {"base": base, "E": float(E)}, base.origin)

    @classmethod
    def reflected(cls, base):
        return cls("reflected", {"base": base}, base.origin)

    @classmethod
    def perturbed(cls, base, delta):
        return cls("perturbed", {"base": base, "delta": delta},
                   max(base.origin, delta.origin))

    @classmethod
    def geometric(cls, V, alternating=True, scale=1.0, origin=1):
        return cls("geometric", {"V": float(V), "alternating": bool(alternating),
                                 "scale": float(scale)}, origin)

    # evaluation ---------------------------------------------------------
    def _check(self, n):
        if n.size and n.min() < self.origin:
            raise WindowError(
                f"{self.family} potential evaluated at n={int(n.min())} "
                f"below origin {self.origin}"
            )
        if self.family == "table" and n.size:
            hi = self.origin + len(self.params["values"]) - 1
            if n.max() > hi:
                raise WindowError(f"table potential evaluated at n={int(n.max())} beyond {hi}")

    def sites(self, n_lo, n_hi):
        """Support of a sparse perturbation inside ``[n_lo, n_hi]``."""
        s = self.params["sites"]
        if s == "powers_of_2":
            out, k = [], 1
            while k <= n_hi:
                if k >= n_lo:
                    out.append(k)
                k *= 2
            return np.array(out, dtype=int)
        s = np.array(sorted(int(v) for v in s), dtype=int)
        return s[(s >= n_lo) & (s <= n_hi)]

    def _sparse_bumps(self, n_lo, n_hi):
        """Sites and exact bump sizes V - base on ``[n_lo, n_hi]``."""
        p = self.params
        sites = self.sites(n_lo, n_hi)
        if "amplitudes" in p:
            all_sites = self.sites(-np.iinfo(np.int64).max, np.iinfo(np.int64).max) \
                if p["sites"] != "powers_of_2" else None
            if all_sites is None:
                raise DomainError("amplitudes list needs an explicit site list")
            amp_of = dict(zip(all_sites.tolist(), p["amplitudes"]))
            amps = np.array([amp_of[int(s)] for s in sites], dtype=float)
        else:
            amps = np.full(sites.size, p.get("amplitude", 1.0))
        decay = p.get("decay", 0.0)
        return sites, amps / np.asarray(sites, dtype=float) ** decay

    def evaluate(self, n):
        """Values at absolute indices ``n`` (scalar or array)."""
        scalar = np.ndim(n) == 0
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        self._check(n)
        out = np.asarray(self._eval(n), dtype=float)
        return float(out[0]) if scalar else out

    def __call__(self, n):
        return self.evaluate(n)

    def values(self, n_lo, n_hi):
        return self.evaluate(np.arange(n_lo, n_hi + 1))

    def _eval(self, n):
        p, f = self.params, self.family
        k = n.astype(float)
        if f == "constant":
            return np.full(n.shape, float(p["V"]))
        if f == "power_decay":
            v = p["gamma"] / k**2
            tail = p.get("tail")
            if tail is not None:
                j = n - self.origin
                w = np.zeros_like(v)
                inside = j < len(tail)
                w[inside] = np.asarray(tail)[j[inside]]
                v = v + w
            return v
        if f == "threshold":
            # -2 + (k/(k+1))^a + (k/(k-1))^a without cancellation
            a = p["alpha"]
            s = -a * np.log1p(-1.0 / k**2)
            d = -2.0 * a * np.arctanh(1.0 / k)
            return 4.0 * np.exp(s / 2) * np.sinh(d / 4) ** 2 + 2.0 * np.expm1(s / 2)
        if f == "sparse":
            base = p["base"]._eval(n)
            sites, bumps = self._sparse_bumps(int(n.min()), int(n.max()))
            lookup = dict(zip(sites.tolist(), bumps.tolist()))
            return base + np.array([lookup.get(int(m), 0.0) for m in n])
        if f == "fluctuating":
            return np.where(n % 2 == 1, k ** p["a"], 1.0)
        if f == "table":
            return np.asarray(p["values"])[n - self.origin]
        if f == "shifted":
            return p["base"]._eval(n) - p["E"]
        if f == "reflected":
            return -4.0 - p["base"]._eval(n)
        if f == "perturbed":
            return p["base"]._eval(n) + p["delta"]._eval(n)
        if f == "geometric":
            la, sg = self._geometric_log(n)
            return sg * np.exp(la)
        raise AssertionError(f)

    def _geometric_log(self, n):
        p = self.params
        x = exponential_root(p["V"])
        w = 1.0 / x - x
        c = p.get("scale", 1.0) * w
        la = np.log(abs(c)) + 2.0 * n * np.log(abs(x)) if c != 0 else np.full(n.shape, -np.inf)
        sg = np.sign(c) * np.ones(n.shape)
        if p.get("alternating", True):
            sg = sg * np.where(n % 2 == 0, 1.0, -1.0)
        return np.asarray(la, dtype=float), sg

    def log_abs(self, n_lo, n_hi):
        """Log-magnitude and sign on ``[n_lo, n_hi]``, exact for geometric."""
        n = np.arange(n_lo, n_hi + 1)
        self._check(n)
        if self.family == "geometric":
            return self._geometric_log(n)
        v = self._eval(n)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(v)), np.sign(v)

    # serialization ------------------------------------------------------
    def to_dict(self):
        d = {"family": self.family}
        for key, val in self.params.items():
            if isinstance(val, PotentialSpec):
                d[key] = val.to_dict()
            elif isinstance(val, tuple):
                d[key] = list(val)
            else:
                d[key] = val
        if self.origin != _default_origin(self.family, self.params):
            d["origin"] = self.origin
        return d

    @classmethod
    def from_dict(cls, d, path="potential"):
        from .errors import ConfigError

        if not isinstance(d, dict):
            raise ConfigError("expected an object", path)
        if "family" not in d:
            raise ConfigError("missing key", f"{path}.family")
        fam = d["family"]
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}", f"{path}.family")
        allowed = set(_REQUIRED[fam]) | set(_OPTIONAL.get(fam, ())) | {"family", "origin"}
        for key in d:
            if key not in allowed:
                raise ConfigError("unknown key", f"{path}.{key}")
        for key in _REQUIRED[fam]:
            if key not in d:
                raise ConfigError("missing key", f"{path}.{key}")
        params = {}
        for key, val in d.items():
            if key in ("family", "origin"):
                continue
            if key in _NESTED.get(fam, ()):
                params[key] = cls.from_dict(val, f"{path}.{key}")
            elif isinstance(val, list):
                params[key] = tuple(val)
            else:
                params[key] = val
        origin = d.get("origin", _default_origin(fam, params))
        if not isinstance(origin, int) or isinstance(origin, bool):
            raise ConfigError("must be an integer", f"{path}.origin")
        try:
            return cls(fam, params, origin)
        except DomainError as exc:
            raise ConfigError(str(exc), path) from exc


def _default_origin(family, params):
    if family == "threshold":
        return 2
    if family in ("shifted", "reflected", "sparse"):
        return params["base"].origin
    if family == "perturbed":
        return max(params["base"].origin, params["delta"].origin)
    return 1


def difference_log(V, V0, n_lo, n_hi):
    """Log-magnitude and sign of ``V - V0`` on ``[n_lo, n_hi]``.

    When ``V`` is a perturbed or sparse potential over ``V0`` the
    difference is taken from the perturbation itself, so tiny differences
    keep full relative precision instead of cancelling.
    """
    if V.family == "perturbed" and V.params["base"] == V0:
        return V.params["delta"].log_abs(n_lo, n_hi)
    n = np.arange(n_lo, n_hi + 1)
    if V.family == "sparse" and V.params["base"] == V0:
        V._check(n)
        V0._check(n)
        sites, bumps = V._sparse_bumps(n_lo, n_hi)
        d = np.zeros(n.size)
        d[sites - n_lo] = bumps
    elif V == V0:
        d = np.zeros(n.size)
    else:
        d = V.values(n_lo, n_hi) - V0.values(n_lo, n_hi)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(d)), np.sign(d)
