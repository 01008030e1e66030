"""Quadrature-exact verifications: exit probabilities and the resolvent bound.

The scale function of the rescaled process X^eps is
s(x) = int_0^x F1(y/eps) dy with F1(u) = exp(-2 V(u)), so exit
probabilities from an interval are exact ratios of scale increments.
F1 is periodic away from the interface, so whole periods contribute a
cached constant and only fractional periods need quadrature.

The worst-case occupation process V^eps has drift -sign(x)/eps on
|x| <= eps (normalized units) and zero outside; its resolvent applied to
1_(-delta,delta) is assembled in closed form from exponential pieces by
exact C^1 matching.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import quadrature
from .drift import DriftSpec
from .errors import DegenerateFit, DomainError, SingularSystem

#: maximum allowed condition number of the equilibrated matching matrix
COND_LIMIT = 1e12


class PeriodicCumulative:
    """u -> int_0^u exp(sign * 2 V(z)) dz with per-period caching.

    Splines tabulate the cumulative over the interface and over one period
    of each side (knot values from per-cell Gauss rules, so the evaluation
    error is far below 1e-10 relative); whole periods reduce to multiples
    of the cached one-period integrals.
    """

    def __init__(self, spec: DriftSpec, sign=-1):
        self.spec = spec
        self.sign = sign
        eta = spec.eta
        s2 = 2.0 * sign
        self._iface = quadrature.cumulative_spline(
            lambda x: np.exp(s2 * spec.potential(x)), -eta, eta, n_cells=2048
        )
        self.at_minus_eta = -float(self._iface(0.0))  # int_0^{-eta}
        self.at_plus_eta = float(self._iface(eta)) + self.at_minus_eta
        self.factor_plus = np.exp(s2 * spec.v_plus_eta)
        self.factor_minus = np.exp(s2 * spec.v_minus_eta)
        self._cum_plus = quadrature.cumulative_spline(
            lambda u: np.exp(s2 * spec.right.potential(u)), 0.0, 1.0, n_cells=2048
        )
        self._cum_minus = quadrature.cumulative_spline(
            lambda u: np.exp(s2 * spec.left.potential(u)), 0.0, 1.0, n_cells=2048
        )
        self.period_plus = float(self._cum_plus(1.0))
        self.period_minus = float(self._cum_minus(1.0))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.empty_like(u)
        eta = self.spec.eta
        r = u > eta
        l = u < -eta
        m = ~(r | l)
        if m.any():
            out[m] = self._iface(u[m]) + self.at_minus_eta
        if r.any():
            w = u[r] - eta
            n = np.floor(w)
            frac = w - n
            out[r] = self.at_plus_eta + self.factor_plus * (
                n * self.period_plus + self._cum_plus(frac)
            )
        if l.any():
            w = -(u[l] + eta)              # distance below -eta, > 0
            n = np.floor(w)
            frac = w - n
            tail = n * self.period_minus + self.period_minus - self._cum_minus(1.0 - frac)
            out[l] = self.at_minus_eta - self.factor_minus * tail
        return out[0] if scalar else out


@lru_cache(maxsize=32)
def _cumulative(spec: DriftSpec, sign: int) -> PeriodicCumulative:
    return PeriodicCumulative(spec, sign=sign)


class ScaleFunction:
    """s(x) = int_0^x exp(-2 V(y/eps)) dy; strictly increasing, s(0) = 0."""

    def __init__(self, spec: DriftSpec, eps):
        self.spec = spec
        self.eps = float(eps)
        self._cum = _cumulative(spec, -1)
        self.period_integral_plus = self._cum.factor_plus * self._cum.period_plus
        self.period_integral_minus = self._cum.factor_minus * self._cum.period_minus

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.eps * self._cum(x / self.eps)


def scale(spec: DriftSpec, eps, x):
    """Scale-function value s(x) for the rescaled diffusion."""
    return float(ScaleFunction(spec, eps)(x))


def exit_probability(spec: DriftSpec, eps, x, a, b):
    """P_x(T_b < T_a) = (s(x) - s(a)) / (s(b) - s(a)), exact via the scale function."""
    if not a < x < b:
        raise DomainError(f"need a < x < b, got a={a}, x={x}, b={b}")
    s = ScaleFunction(spec, eps)
    sa, sx, sb = float(s(a)), float(s(x)), float(s(b))
    return (sx - sa) / (sb - sa)


@dataclass
class ExitProbabilityTable:
    """Exit probabilities over an eps grid with the fitted convergence rate."""

    eps: list
    delta: list
    prob: list
    p_plus_target: float
    limit_estimate: float
    slope: float            # nan when the deviations vanish identically
    exact: bool


def exit_rate_fit(spec: DriftSpec, x, eps_grid, p_plus=None) -> ExitProbabilityTable:
    """Exit probabilities from (-sqrt(eps), sqrt(eps)) and their rate to p_plus.

    Fits |P_eps - p_plus| = K eps^alpha in log-log; the limit estimate is a
    Richardson extrapolation over the two smallest eps using the fitted
    exponent.  A symmetric spec gives deviations that vanish to rounding;
    this is reported as exact instead of fitted.
    """
    from .harness import fit_rate
    from .homogenize import homogenized_params

    eps_grid = sorted(eps_grid, reverse=True)
    if p_plus is None:
        p_plus = homogenized_params(spec).p_plus
    deltas = [np.sqrt(e) for e in eps_grid]
    probs = [exit_probability(spec, e, x, -d, d) for e, d in zip(eps_grid, deltas)]
    devs = [abs(pr - p_plus) for pr in probs]
    if max(devs) < 1e-13:
        return ExitProbabilityTable(eps=eps_grid, delta=deltas, prob=probs,
                                    p_plus_target=p_plus,
                                    limit_estimate=probs[-1], slope=float("nan"),
                                    exact=True)
    try:
        slope, _, _ = fit_rate(eps_grid, devs)
    except DegenerateFit:
        slope = float("nan")
    # Richardson extrapolation with the fitted exponent on the two smallest eps
    e1, e2 = eps_grid[-1], eps_grid[-2]
    p1, p2 = probs[-1], probs[-2]
    if np.isfinite(slope):
        w1, w2 = e2**slope, e1**slope
        limit = (p1 * w1 - p2 * w2) / (w1 - w2)
    else:
        limit = p1
    return ExitProbabilityTable(eps=eps_grid, delta=deltas, prob=probs,
                                p_plus_target=p_plus, limit_estimate=float(limit),
                                slope=float(slope), exact=False)


@dataclass
class ResolventSolution:
    """Piecewise-exponential solution f = (lam - L_V^eps)^{-1} 1_(-delta,delta).

    f is even; on x >= 0 it reads
        1/lam + eps^2 A2 e^{gamma1 x} + B2 e^{-gamma2 x}   for 0 <= x <= eps,
        1/lam + A1 e^{q x} + B1 e^{-q x}                   for eps <= x <= delta,
        B0 e^{-q x}                                        for x >= delta,
    with q = sqrt(2 lam).
    """

    eps: float
    delta: float
    lam: float
    gamma1: float
    gamma2: float
    coeffs: tuple           # (B0, A1, B1, A2, B2)
    sup_f: float
    max_ode_residual: float
    max_matching_residual: float

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        b0, a1, b1, a2, b2 = self.coeffs
        q = np.sqrt(2.0 * self.lam)
        xin = np.minimum(x, self.eps)   # avoid overflow in discarded branches
        out = np.where(
            x <= self.eps,
            1.0 / self.lam + self.eps**2 * a2 * np.exp(self.gamma1 * xin)
            + b2 * np.exp(-self.gamma2 * xin),
            np.where(
                x <= self.delta,
                1.0 / self.lam + a1 * np.exp(q * x) + b1 * np.exp(-q * x),
                b0 * np.exp(-q * x),
            ),
        )
        return out

    def lowest_order_coeffs(self):
        """The leading-order coefficient vector -(1/(2 lam)) (0, 1, 1, lam, 2)."""
        return tuple(-(1.0 / (2.0 * self.lam)) * np.array([0.0, 1.0, 1.0, self.lam, 2.0]))


def resolvent_solve(eps, delta, lam) -> ResolventSolution:
    """Exact C^1 assembly of the resolvent of the worst-case process.

    Normalized units (interface half-width and drift constant both 1); the
    drift of V^eps is -sign(x)/eps on |x| <= eps and zero elsewhere.
    Requires 0 < eps < delta < 1.
    """
    if not 0.0 < eps < delta < 1.0:
        raise DomainError(f"need 0 < eps < delta < 1, got eps={eps}, delta={delta}")
    if lam <= 0:
        raise DomainError("lam must be positive")
    root = np.sqrt(1.0 / eps**2 + 2.0 * lam)
    gamma1 = root + 1.0 / eps
    gamma2 = root - 1.0 / eps
    q = np.sqrt(2.0 * lam)
    e2 = eps**2
    # unknowns (B0, A1, B1, A2, B2); rows: f'(0)=0, C^0 and C^1 at eps,
    # C^0 and C^1 at delta
    m = np.array([
        [0.0, 0.0, 0.0, e2 * gamma1, -gamma2],
        [0.0, -np.exp(q * eps), -np.exp(-q * eps),
         e2 * np.exp(gamma1 * eps), np.exp(-gamma2 * eps)],
        [0.0, -q * np.exp(q * eps), q * np.exp(-q * eps),
         e2 * gamma1 * np.exp(gamma1 * eps), -gamma2 * np.exp(-gamma2 * eps)],
        [-np.exp(-q * delta), np.exp(q * delta), np.exp(-q * delta), 0.0, 0.0],
        [q * np.exp(-q * delta), q * np.exp(q * delta), -q * np.exp(-q * delta), 0.0, 0.0],
    ])
    rhs = np.array([0.0, 0.0, 0.0, -1.0 / lam, 0.0])
    # row equilibration keeps the system well-scaled across eps decades
    norms = np.max(np.abs(m), axis=1)
    m_eq = m / norms[:, None]
    rhs_eq = rhs / norms
    cond = np.linalg.cond(m_eq)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(f"matching system condition number {cond}")
    coeffs = tuple(np.linalg.solve(m_eq, rhs_eq))

    sol = ResolventSolution(eps=eps, delta=delta, lam=lam, gamma1=gamma1,
                            gamma2=gamma2, coeffs=coeffs, sup_f=0.0,
                            max_ode_residual=0.0, max_matching_residual=0.0)
    sol.max_matching_residual = _matching_residual(sol)
    sol.max_ode_residual = _ode_residual(sol)
    xs = np.linspace(0.0, delta + 10.0 / q, 20001)
    sol.sup_f = float(np.max(np.abs(sol(xs))))
    return sol


def _matching_residual(sol: ResolventSolution):
    b0, a1, b1, a2, b2 = sol.coeffs
    q = np.sqrt(2.0 * sol.lam)
    eps, delta, lam = sol.eps, sol.delta, sol.lam
    # values and derivatives from the two sides of each junction
    f_in = 1.0 / lam + eps**2 * a2 * np.exp(sol.gamma1 * eps) + b2 * np.exp(-sol.gamma2 * eps)
    f_mid_e = 1.0 / lam + a1 * np.exp(q * eps) + b1 * np.exp(-q * eps)
    d_in = eps**2 * a2 * sol.gamma1 * np.exp(sol.gamma1 * eps) \
        - b2 * sol.gamma2 * np.exp(-sol.gamma2 * eps)
    d_mid_e = q * (a1 * np.exp(q * eps) - b1 * np.exp(-q * eps))
    f_mid_d = 1.0 / lam + a1 * np.exp(q * delta) + b1 * np.exp(-q * delta)
    f_out = b0 * np.exp(-q * delta)
    d_mid_d = q * (a1 * np.exp(q * delta) - b1 * np.exp(-q * delta))
    d_out = -q * b0 * np.exp(-q * delta)
    d0 = eps**2 * a2 * sol.gamma1 - b2 * sol.gamma2
    scale = max(abs(f_in), abs(f_out), 1.0 / lam)
    vals = [abs(f_in - f_mid_e), abs(d_in - d_mid_e) / max(sol.gamma1, q),
            abs(f_mid_d - f_out), abs(d_mid_d - d_out) / q, abs(d0)]
    return float(max(vals) / scale)


def _ode_residual(sol: ResolventSolution, n_per_piece=1000):
    eps, delta, lam = sol.eps, sol.delta, sol.lam
    worst = 0.0
    pieces = [
        (np.linspace(0, eps, n_per_piece + 1)[1:-1], -1.0 / eps, 1.0),
        (np.linspace(eps, delta, n_per_piece + 1)[1:-1], 0.0, 1.0),
        (np.linspace(delta, delta + 5.0, n_per_piece + 1)[1:-1], 0.0, 0.0),
    ]
    for xs, bv, forcing in pieces:
        f = sol(xs)
        fp = _f_prime(sol, xs)
        fpp = _f_second(sol, xs)
        res = lam * f - 0.5 * fpp - bv * fp - forcing
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def _f_prime(sol, x):
    b0, a1, b1, a2, b2 = sol.coeffs
    q = np.sqrt(2.0 * sol.lam)
    xin = np.minimum(x, sol.eps)
    return np.where(
        x <= sol.eps,
        sol.eps**2 * a2 * sol.gamma1 * np.exp(sol.gamma1 * xin)
        - b2 * sol.gamma2 * np.exp(-sol.gamma2 * xin),
        np.where(
            x <= sol.delta,
            q * (a1 * np.exp(q * x) - b1 * np.exp(-q * x)),
            -q * b0 * np.exp(-q * x),
        ),
    )


def _f_second(sol, x):
    b0, a1, b1, a2, b2 = sol.coeffs
    q = np.sqrt(2.0 * sol.lam)
    xin = np.minimum(x, sol.eps)
    return np.where(
        x <= sol.eps,
        sol.eps**2 * a2 * sol.gamma1**2 * np.exp(sol.gamma1 * xin)
        + b2 * sol.gamma2**2 * np.exp(-sol.gamma2 * xin),
        np.where(
            x <= sol.delta,
            q**2 * (a1 * np.exp(q * x) + b1 * np.exp(-q * x)),
            q**2 * b0 * np.exp(-q * x),
        ),
    )


def resolvent_mc_crosscheck(eps, delta, lam, n_paths, x0=0.0, seed=0,
                            dt_factor=0.04, tail=1e-6):
    """Euler-Maruyama estimate of E_x int_0^inf e^{-lam t} 1_(-delta,delta)(V) dt.

    Truncated at T with e^{-lam T} <= tail.  Returns (estimate, standard_error).
    """
    from .micro import BLOCK_SIZE, block_stream

    horizon = -np.log(tail) / lam
    dt = dt_factor * eps**2
    n_steps = int(np.ceil(horizon / dt))
    dt = horizon / n_steps
    sqdt = np.sqrt(dt)
    disc = np.exp(-lam * dt)
    acc = np.empty(n_paths)
    start = 0
    bi = 0
    while start < n_paths:
        nb = min(BLOCK_SIZE, n_paths - start)
        rng = block_stream(seed, bi)
        x = np.full(nb, float(x0))
        a = np.zeros(nb)
        w = 1.0
        for _ in range(n_steps):
            a += w * dt * (np.abs(x) < delta)
            drift = np.where(np.abs(x) <= eps, -np.sign(x) / eps, 0.0)
            x = x + drift * dt + sqdt * rng.standard_normal(nb)
            w *= disc
        acc[start:start + nb] = a
        start += nb
        bi += 1
    return float(np.mean(acc)), float(np.std(acc, ddof=1) / np.sqrt(n_paths))
