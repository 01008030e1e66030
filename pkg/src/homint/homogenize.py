"""Cell problem, effective coefficients and the complete limit description.

For a centred periodic drift b_i with potential V_i the cell problem

    (1/2) g_i'' + b_i (1 + g_i') = 0,   int_0^1 g_i dmu_i = 0,

has the closed-form solution 1 + g_i'(u) = c_i exp(-2 V_i(u)) with
c_i = 1 / int_0^1 exp(-2 V_i), where mu_i = Z^-1 exp(2 V_i) du is the
invariant probability measure of the one-cell diffusion.  The effective
diffusion coefficient follows either from the cell formula

    C_i^2 = int_0^1 (1 + g_i'(u))^2 mu_i(du)

or from the equivalent product formula

    C_i^2 = [ int_0^1 exp(-2 V_i) * int_0^1 exp(2 V_i) ]^{-1}.

The interface weights are one-period integrals of exp(2V) adjacent to the
interface, the skewness p solves lambda_+/lambda_- = p C_- / ((1-p) C_+),
and the exit weights satisfy p_+/p_- = lambda_+ C_+^2 / (lambda_- C_-^2).
"""

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .drift import DriftSpec, PeriodicDrift, _hermite_quintic
from .errors import CoefficientMismatch, ConfigError

#: maximum allowed relative disagreement between the two C^2 routes
COEFF_MATCH_RTOL = 1e-8

#: required global lower bound on 1 + g' for the compensator
GPRIME_MARGIN = 0.01


class Corrector:
    """Closed-form corrector of the cell problem for one periodic side.

    g' is exact; g itself is the periodic antiderivative of g', tabulated
    once by per-cell Gauss quadrature and evaluated through a cubic spline.
    """

    def __init__(self, drift: PeriodicDrift, n_grid=2048, rtol=1e-12):
        self.drift = drift
        self.n_grid = n_grid
        f_minus = lambda u: np.exp(-2.0 * drift.potential(u))
        f_plus = lambda u: np.exp(2.0 * drift.potential(u))
        self.int_minus = quadrature.integrate(f_minus, 0.0, 1.0, rtol=rtol)
        self.z = quadrature.integrate(f_plus, 0.0, 1.0, rtol=rtol)
        self.c = 1.0 / self.int_minus
        self._g0_cache = None
        self._offset_cache = None

    @property
    def _g0(self):
        # cumulative of g' over one period; periodic since int_0^1 g' = 0.
        # Built lazily: closed-form g' suffices for the coefficient routes.
        if self._g0_cache is None:
            self._g0_cache = quadrature.cumulative_spline(
                lambda u: self.c * np.exp(-2.0 * self.drift.potential(u)) - 1.0,
                0.0, 1.0, n_cells=self.n_grid,
            )
        return self._g0_cache

    @property
    def offset(self):
        # centering: int_0^1 (g0 + offset) dmu = 0
        if self._offset_cache is None:
            mean_g0 = quadrature.integrate(
                lambda u: self._g0(u) * np.exp(2.0 * self.drift.potential(u)) / self.z,
                0.0, 1.0, rtol=1e-12, atol=1e-14,
            )
            self._offset_cache = -mean_g0
        return self._offset_cache

    def g_prime(self, u):
        return self.c * np.exp(-2.0 * self.drift.potential(u)) - 1.0

    def g_second(self, u):
        return -2.0 * self.drift.b(u) * self.c * np.exp(-2.0 * self.drift.potential(u))

    def g(self, u):
        u = np.asarray(u, dtype=float)
        return self._g0(np.mod(u, 1.0)) + self.offset

    def mu_density(self, u):
        return np.exp(2.0 * self.drift.potential(u)) / self.z

    def sup_abs_g(self):
        u = np.linspace(0.0, 1.0, 4097)
        return float(np.max(np.abs(self.g(u))))


def solve_corrector(drift: PeriodicDrift, n_grid=2048) -> Corrector:
    """Solve the cell problem for one centred periodic drift."""
    return Corrector(drift, n_grid=n_grid)


def effective_coefficient_cell(corr: Corrector) -> float:
    """C_i^2 via the cell formula int (1 + g')^2 dmu."""
    f = lambda u: corr.g_prime(u)
    return quadrature.integrate(
        lambda u: (1.0 + f(u)) ** 2 * corr.mu_density(u), 0.0, 1.0, rtol=1e-12
    )


def effective_coefficient_product(drift: PeriodicDrift) -> float:
    """C_i^2 via the product formula [int e^{-2V} int e^{2V}]^{-1}."""
    a = quadrature.integrate(lambda u: np.exp(-2.0 * drift.potential(u)), 0.0, 1.0)
    b = quadrature.integrate(lambda u: np.exp(2.0 * drift.potential(u)), 0.0, 1.0)
    return 1.0 / (a * b)


def interface_weights(spec: DriftSpec):
    """(lambda_plus, lambda_minus): one-period integrals of e^{2V} next to the interface."""
    lam_plus = quadrature.integrate(
        lambda x: np.exp(2.0 * spec.potential(x)), spec.eta, spec.eta + 1.0
    )
    lam_minus = quadrature.integrate(
        lambda x: np.exp(2.0 * spec.potential(x)), -spec.eta - 1.0, -spec.eta
    )
    return lam_plus, lam_minus


@dataclass(frozen=True)
class HomogenizedParams:
    """Complete description of the limiting rescaled skew Brownian motion."""

    c_plus: float
    c_minus: float
    lambda_plus: float
    lambda_minus: float
    p: float
    p_plus: float
    p_minus: float

    def as_dict(self):
        return {
            "C_plus": self.c_plus,
            "C_minus": self.c_minus,
            "lambda_plus": self.lambda_plus,
            "lambda_minus": self.lambda_minus,
            "p": self.p,
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
        }


def homogenized_params(spec: DriftSpec) -> HomogenizedParams:
    """Assemble C+-, lambda+-, p and p+- for a drift specification.

    C^2 is computed by both the cell and the product route and the two
    must agree to COEFF_MATCH_RTOL relative.
    """
    c2 = {}
    for name, drift in (("plus", spec.right), ("minus", spec.left)):
        cell = effective_coefficient_cell(solve_corrector(drift))
        prod = effective_coefficient_product(drift)
        if abs(cell - prod) > COEFF_MATCH_RTOL * abs(prod):
            raise CoefficientMismatch(
                f"C^2 ({name}): cell route {cell!r} vs product route {prod!r}"
            )
        c2[name] = prod
    c_plus = np.sqrt(c2["plus"])
    c_minus = np.sqrt(c2["minus"])
    lam_plus, lam_minus = interface_weights(spec)
    # lambda_+/lambda_- = p C_- / ((1-p) C_+)
    r = (lam_plus / lam_minus) * (c_plus / c_minus)
    p = r / (1.0 + r)
    # p_+/p_- = lambda_+ C_+^2 / (lambda_- C_-^2)
    s = (lam_plus * c2["plus"]) / (lam_minus * c2["minus"])
    p_plus = s / (1.0 + s)
    return HomogenizedParams(
        c_plus=float(c_plus),
        c_minus=float(c_minus),
        lambda_plus=float(lam_plus),
        lambda_minus=float(lam_minus),
        p=float(p),
        p_plus=float(p_plus),
        p_minus=float(1.0 - p_plus),
    )


class Compensator:
    """Global compensator g used to build the corrected process Y^eps.

    g equals the side correctors (shifted to +-eta) outside the interface
    and is a quintic Hermite blend matching value and first two derivatives
    inside.  If the blend drops g' to -1 or below, the blend window is
    enlarged, mirroring the freedom of widening the interface slightly.
    """

    def __init__(self, spec: DriftSpec, n_grid=2048):
        self.spec = spec
        self.left = solve_corrector(spec.left, n_grid=n_grid)
        self.right = solve_corrector(spec.right, n_grid=n_grid)
        eta_b = spec.eta
        for _ in range(12):
            coefs = _hermite_quintic(
                eta_b,
                (
                    float(self.left.g(-eta_b + spec.eta)),
                    float(self.left.g_prime(-eta_b + spec.eta)),
                    float(self.left.g_second(-eta_b + spec.eta)),
                ),
                (
                    float(self.right.g(eta_b - spec.eta)),
                    float(self.right.g_prime(eta_b - spec.eta)),
                    float(self.right.g_second(eta_b - spec.eta)),
                ),
            )
            xs = np.linspace(-eta_b, eta_b, 2049)
            dcoef = np.polynomial.polynomial.polyder(np.array(coefs))
            gp = np.polynomial.polynomial.polyval(xs, dcoef)
            if np.min(gp) > -1.0 + GPRIME_MARGIN:
                break
            eta_b *= 1.5
        else:
            raise ConfigError("could not construct a blend with g' > -1")
        self.eta_blend = eta_b
        self._blend = np.array(coefs)
        self._blend_d = np.polynomial.polynomial.polyder(self._blend)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        r = x > self.eta_blend
        l = x < -self.eta_blend
        m = ~(r | l)
        if r.any():
            out[r] = self.right.g(x[r] - self.spec.eta)
        if l.any():
            out[l] = self.left.g(x[l] + self.spec.eta)
        if m.any():
            out[m] = np.polynomial.polynomial.polyval(x[m], self._blend)
        return out[0] if scalar else out

    def g_prime(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        r = x > self.eta_blend
        l = x < -self.eta_blend
        m = ~(r | l)
        if r.any():
            out[r] = self.right.g_prime(x[r] - self.spec.eta)
        if l.any():
            out[l] = self.left.g_prime(x[l] + self.spec.eta)
        if m.any():
            out[m] = np.polynomial.polynomial.polyval(x[m], self._blend_d)
        return out[0] if scalar else out

    def sup_abs_g(self):
        xs = np.linspace(-self.eta_blend, self.eta_blend, 2049)
        blend_max = float(np.max(np.abs(np.polynomial.polynomial.polyval(xs, self._blend))))
        return max(self.left.sup_abs_g(), self.right.sup_abs_g(), blend_max)
