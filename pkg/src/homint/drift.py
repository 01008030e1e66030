"""Piecewise-periodic drift fields and their potentials.

The drift b is periodic with period 1 outside an interface region
[-eta, eta]: b(x) = b_plus(x - eta) for x > eta and b(x) = b_minus(x + eta)
for x < -eta, with both periodic parts centred (zero mean over one period).
Each periodic part is a finite Fourier series, so its antiderivative is
available in closed form and the potential V(x) = int_0^x b is exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * np.pi

#: continuity tolerance for the drift across the interface endpoints
CONTINUITY_TOL = 1e-10


@dataclass(frozen=True)
class PeriodicDrift:
    """Centred period-1 drift b(u) = sum_k s_k sin(2 pi k u) + c_k cos(2 pi k u).

    The constant Fourier mode is structurally absent, which enforces the
    centering condition int_0^1 b = 0 and makes the antiderivative periodic.
    """

    sin: tuple = ()
    cos: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sin", tuple(float(a) for a in self.sin))
        object.__setattr__(self, "cos", tuple(float(a) for a in self.cos))

    @property
    def n_modes(self):
        return max(len(self.sin), len(self.cos))

    def _coeffs(self):
        n = self.n_modes
        s = np.zeros(n)
        c = np.zeros(n)
        s[: len(self.sin)] = self.sin
        c[: len(self.cos)] = self.cos
        k = np.arange(1, n + 1)
        return s, c, k

    def b(self, u):
        u = np.asarray(u, dtype=float)
        if self.n_modes == 0:
            return np.zeros_like(u)
        s, c, k = self._coeffs()
        ang = TWO_PI * u[..., None] * k
        return np.sin(ang) @ s + np.cos(ang) @ c

    def b_prime(self, u):
        u = np.asarray(u, dtype=float)
        if self.n_modes == 0:
            return np.zeros_like(u)
        s, c, k = self._coeffs()
        ang = TWO_PI * u[..., None] * k
        w = TWO_PI * k
        return np.cos(ang) @ (w * s) - np.sin(ang) @ (w * c)

    def b_second(self, u):
        u = np.asarray(u, dtype=float)
        if self.n_modes == 0:
            return np.zeros_like(u)
        s, c, k = self._coeffs()
        ang = TWO_PI * u[..., None] * k
        w = (TWO_PI * k) ** 2
        return -np.sin(ang) @ (w * s) - np.cos(ang) @ (w * c)

    def potential(self, u):
        """V_i(u) = int_0^u b_i, periodic with period 1 (centred drift)."""
        u = np.asarray(u, dtype=float)
        if self.n_modes == 0:
            return np.zeros_like(u)
        s, c, k = self._coeffs()
        ang = TWO_PI * u[..., None] * k
        w = 1.0 / (TWO_PI * k)
        return (1.0 - np.cos(ang)) @ (w * s) + np.sin(ang) @ (w * c)

    def coeff_bound(self):
        """Upper bound sum |coeff| >= max |b|."""
        return float(np.sum(np.abs(self.sin)) + np.sum(np.abs(self.cos)))


def _hermite_quintic(eta, left_vals, right_vals):
    """Quintic on [-eta, eta] matching (value, b', b'') at both endpoints."""
    rows = []
    rhs = []
    for x, (v, d, s) in ((-eta, left_vals), (eta, right_vals)):
        powers = np.array([x**j for j in range(6)], dtype=float)
        dpow = np.array([0.0] + [j * x ** (j - 1) for j in range(1, 6)])
        spow = np.array([0.0, 0.0] + [j * (j - 1) * x ** (j - 2) for j in range(2, 6)])
        rows += [powers, dpow, spow]
        rhs += [v, d, s]
    coef = np.linalg.solve(np.array(rows), np.array(rhs))
    return tuple(coef)


@dataclass(frozen=True)
class DriftSpec:
    """Full drift field: two periodic sides glued across [-eta, eta].

    interface_kind is one of "zero", "blend", "poly".  The interface drift
    is a polynomial in x in all cases: empty for "zero", a quintic Hermite
    interpolant matching value and first two derivatives of the sides for
    "blend", and user-supplied coefficients (low order first) for "poly".
    """

    left: PeriodicDrift
    right: PeriodicDrift
    eta: float = 0.5
    interface_kind: str = "zero"
    poly: tuple = ()
    _iface: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.interface_kind not in ("zero", "blend", "poly"):
            raise ConfigError(f"unknown interface kind {self.interface_kind!r}")
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        if self.interface_kind == "blend":
            coefs = _hermite_quintic(
                self.eta,
                (self.left.b(0.0), self.left.b_prime(0.0), self.left.b_second(0.0)),
                (self.right.b(0.0), self.right.b_prime(0.0), self.right.b_second(0.0)),
            )
        elif self.interface_kind == "poly":
            coefs = self.poly
        else:
            coefs = ()
        object.__setattr__(self, "_iface", tuple(coefs))
        # C^0 matching at the interface endpoints is a hard requirement.
        bl = float(self._iface_eval(np.array(-self.eta)))
        br = float(self._iface_eval(np.array(self.eta)))
        if abs(bl - float(self.left.b(0.0))) > CONTINUITY_TOL:
            raise ConfigError(
                f"drift discontinuous at -eta: interface {bl} vs left {self.left.b(0.0)}"
            )
        if abs(br - float(self.right.b(0.0))) > CONTINUITY_TOL:
            raise ConfigError(
                f"drift discontinuous at +eta: interface {br} vs right {self.right.b(0.0)}"
            )

    def _iface_eval(self, x):
        if not self._iface:
            return np.zeros_like(x)
        return np.polynomial.polynomial.polyval(x, np.array(self._iface))

    def _iface_antideriv(self, x):
        """int_0^x of the interface polynomial."""
        if not self._iface:
            return np.zeros_like(x)
        c = np.array(self._iface)
        anti = np.concatenate(([0.0], c / np.arange(1, len(c) + 1)))
        return np.polynomial.polynomial.polyval(x, anti)

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        r = x > self.eta
        l = x < -self.eta
        m = ~(r | l)
        if r.any():
            out[r] = self.right.b(x[r] - self.eta)
        if l.any():
            out[l] = self.left.b(x[l] + self.eta)
        if m.any():
            out[m] = self._iface_eval(x[m])
        return out[0] if scalar else out

    def potential(self, x):
        """V(x) = int_0^x b(z) dz, exact (Fourier + polynomial antiderivatives)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        r = x > self.eta
        l = x < -self.eta
        m = ~(r | l)
        if r.any():
            out[r] = self.v_plus_eta + self.right.potential(x[r] - self.eta)
        if l.any():
            out[l] = self.v_minus_eta + self.left.potential(x[l] + self.eta)
        if m.any():
            out[m] = self._iface_antideriv(x[m])
        return out[0] if scalar else out

    @property
    def v_plus_eta(self):
        return float(self._iface_antideriv(np.array(self.eta)))

    @property
    def v_minus_eta(self):
        return float(self._iface_antideriv(np.array(-self.eta)))

    def fast_drift(self):
        """Vectorized drift evaluator optimized for hot simulation loops.

        Equivalent to self.drift on float arrays but avoids boolean
        gather/scatter: each present piece is evaluated on the full array
        and selected with np.where (the pieces cover disjoint regions).
        """
        eta = self.eta
        iface = np.array(self._iface) if self._iface else None

        def side_eval(p):
            if p.n_modes == 0:
                return None
            s, c, k = p._coeffs()
            terms = [(TWO_PI * ki, si, ci) for ki, si, ci in zip(k, s, c)
                     if si != 0.0 or ci != 0.0]

            def f(u):
                acc = 0.0
                for w, si, ci in terms:
                    ang = w * u
                    if si != 0.0:
                        acc = acc + si * np.sin(ang)
                    if ci != 0.0:
                        acc = acc + ci * np.cos(ang)
                return acc

            return f

        f_right = side_eval(self.right)
        f_left = side_eval(self.left)

        def b(x):
            out = None
            if f_right is not None:
                out = np.where(x > eta, f_right(x - eta), 0.0)
            if f_left is not None:
                v = np.where(x < -eta, f_left(x + eta), 0.0)
                out = v if out is None else out + v
            if iface is not None:
                v = np.where(np.abs(x) <= eta,
                             np.polynomial.polynomial.polyval(x, iface), 0.0)
                out = v if out is None else out + v
            return np.zeros_like(x) if out is None else out

        return b

    def max_abs_drift(self):
        """max |b| over a dense grid (used by the simulation step rule)."""
        u = np.linspace(0.0, 1.0, 2049)
        m = max(float(np.max(np.abs(self.left.b(u)))), float(np.max(np.abs(self.right.b(u)))))
        xs = np.linspace(-self.eta, self.eta, 513)
        m = max(m, float(np.max(np.abs(self._iface_eval(xs)))))
        return m


class PotentialEvaluator:
    """Convenience wrapper caching V(+-eta) and exposing F1(u) = exp(-2 V(u))."""

    def __init__(self, spec: DriftSpec):
        self.spec = spec
        self.v_plus_eta = spec.v_plus_eta
        self.v_minus_eta = spec.v_minus_eta

    def __call__(self, x):
        return self.spec.potential(x)

    def integrating_factor(self, u):
        return np.exp(-2.0 * self.spec.potential(u))


def eval_drift(spec: DriftSpec, x):
    """b(x) for the piecewise-periodic drift field."""
    return spec.drift(x)


def eval_potential(spec: DriftSpec, x):
    """V(x) = int_0^x b, exact."""
    return spec.potential(x)


def integrating_factor(spec: DriftSpec, u):
    """F1(u) = exp(-2 V(u)); strictly positive."""
    return np.exp(-2.0 * spec.potential(u))


def parse_drift_spec(cfg: dict) -> DriftSpec:
    """Build a DriftSpec from a parsed config mapping.

    Schema::

        eta = 0.5
        interface = "zero" | "blend" | { poly = [c0, c1, ...] }
        [left]
        sin = [a1, a2, ...]
        cos = [b1, b2, ...]     # constant term forbidden (centred drift)
        [right]
        sin = [...]
    """
    def side(name):
        d = cfg.get(name, {})
        unknown = set(d) - {"sin", "cos"}
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
        return PeriodicDrift(sin=d.get("sin", ()), cos=d.get("cos", ()))

    iface = cfg.get("interface", "zero")
    kind, poly = None, ()
    if isinstance(iface, str):
        kind = iface
    elif isinstance(iface, dict) and set(iface) == {"poly"}:
        kind, poly = "poly", iface["poly"]
    else:
        raise ConfigError(f"bad interface value: {iface!r}")
    return DriftSpec(
        left=side("left"),
        right=side("right"),
        eta=float(cfg.get("eta", 0.5)),
        interface_kind=kind,
        poly=poly,
    )


def load_drift_config(path) -> DriftSpec:
    """Parse a TOML drift configuration file."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    return parse_drift_spec(cfg)
