"""Scalar quantum signal processing machinery.

The signal operator is the reflection W(x) = [[x, sqrt(1-x^2)],
[sqrt(1-x^2), -x]] and the processed unitary is the product
prod_k S(phi_k) W(x) whose top-left entry is the designed polynomial
f(x).  Phase factors for the target exp(-i x t) on an interval
[a, b] in [0, 1] are found by least squares on Chebyshev nodes with a
Lawson-style reweighting polish toward the minimax solution, and the
reported error is the max deviation on a ten-times finer uniform grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.special


@dataclass
class QSPPhases:
    """Phase factors realizing f(x) ~ exp(-i x t_tilde) on the interval."""

    phases: np.ndarray
    degree: int
    t_tilde: float
    interval: tuple[float, float]
    epsilon_poly: float
    converged: bool = True

    def __post_init__(self):
        if self.degree % 2 != 0 or self.degree < 0:
            raise ValueError("the even-parity protocol needs an even degree")
        if len(self.phases) != self.degree:
            raise ValueError("phase count must equal the degree")


@dataclass
class ChebyshevSeries:
    """Truncated Chebyshev expansion of exp(-i x t) with Bessel coefficients.

    cosine_coeffs[k] multiplies T_{2k}(x) in cos(xt); sine_coeffs[k]
    multiplies T_{2k+1}(x) in sin(xt); evaluation returns cos - i sin.
    """

    cosine_coeffs: np.ndarray
    sine_coeffs: np.ndarray
    degree: int
    time: float
    grid_error: float = 0.0

    def coefficient_vector(self) -> np.ndarray:
        coeffs = np.zeros(self.degree + 1, dtype=complex)
        for k, c in enumerate(self.cosine_coeffs):
            if 2 * k <= self.degree:
                coeffs[2 * k] += c
        for k, s in enumerate(self.sine_coeffs):
            if 2 * k + 1 <= self.degree:
                coeffs[2 * k + 1] += -1j * s
        return coeffs

    def evaluate(self, x) -> np.ndarray:
        return np.polynomial.chebyshev.chebval(x, self.coefficient_vector())


def qsp_scalar_unitary(x: float, phases: QSPPhases | np.ndarray) -> np.ndarray:
    """Product over k of S(phi_k) W(x); f(x) is the [0, 0] entry."""
    phi = phases.phases if isinstance(phases, QSPPhases) else np.asarray(phases)
    if abs(x) > 1.0 + 1e-12:
        raise ValueError("signal value must lie in [-1, 1]")
    xc = float(np.clip(x, -1.0, 1.0))
    s = np.sqrt(max(1.0 - xc * xc, 0.0))
    w = np.array([[xc, s], [s, -xc]], dtype=complex)
    u = np.eye(2, dtype=complex)
    for p in phi:
        u = u @ np.diag([np.exp(1j * p), np.exp(-1j * p)]) @ w
    return u


def _f_values(phi: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Vectorized f(x) over a grid."""
    g = len(xs)
    s = np.sqrt(np.clip(1.0 - xs**2, 0.0, None))
    w = np.empty((g, 2, 2), dtype=complex)
    w[:, 0, 0], w[:, 0, 1] = xs, s
    w[:, 1, 0], w[:, 1, 1] = s, -xs
    u = np.broadcast_to(np.eye(2, dtype=complex), (g, 2, 2)).copy()
    for p in phi:
        sp = np.array([np.exp(1j * p), np.exp(-1j * p)])
        u = (u * sp[None, None, :]) @ w
    return u[:, 0, 0]


def _f_and_jacobian(phi: np.ndarray, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f(x) and df/dphi_k over the grid via prefix/suffix 2x2 products."""
    g, d = len(xs), len(phi)
    s = np.sqrt(np.clip(1.0 - xs**2, 0.0, None))
    w = np.empty((g, 2, 2), dtype=complex)
    w[:, 0, 0], w[:, 0, 1] = xs, s
    w[:, 1, 0], w[:, 1, 1] = s, -xs
    m = np.empty((d, g, 2, 2), dtype=complex)
    for k, p in enumerate(phi):
        sp = np.array([np.exp(1j * p), np.exp(-1j * p)])
        m[k] = sp[None, :, None] * w
    prefix = np.empty((d + 1, g, 2, 2), dtype=complex)
    prefix[0] = np.eye(2)
    for k in range(d):
        prefix[k + 1] = prefix[k] @ m[k]
    suffix = np.empty((d + 1, g, 2, 2), dtype=complex)
    suffix[d] = np.eye(2)
    for k in range(d - 1, -1, -1):
        suffix[k] = m[k] @ suffix[k + 1]
    f = prefix[d][:, 0, 0]
    jac = np.empty((g, d), dtype=complex)
    zdiag = np.array([1j, -1j])
    for k in range(d):
        dm = zdiag[None, :, None] * m[k]
        jac[:, k] = (prefix[k] @ dm @ suffix[k + 1])[:, 0, 0]
    return f, jac


def jacobi_anger(t: float, epsilon: float) -> ChebyshevSeries:
    """Minimal-degree truncation with tail bound <= epsilon, grid-verified."""
    if t < 0 or epsilon <= 0:
        raise ValueError("need t >= 0 and epsilon > 0")
    cap = max(24, int(np.ceil(1.5 * t + 50)))
    orders = np.arange(cap + 1)
    bessel = scipy.special.jv(orders, t)
    tails = 2.0 * np.abs(bessel)
    tails[0] = 0.0  # J_0 is never in the tail
    suffix_tail = np.cumsum(tails[::-1])[::-1]
    degree = cap
    for d in range(cap + 1):
        tail = suffix_tail[d + 1] if d + 1 <= cap else 0.0
        if tail <= epsilon:
            degree = d
            break
    cos_coeffs = [bessel[0]]
    for k in range(1, degree // 2 + 1):
        cos_coeffs.append(2.0 * (-1) ** k * bessel[2 * k])
    sin_coeffs = []
    for k in range((degree + 1) // 2):
        sin_coeffs.append(2.0 * (-1) ** k * bessel[2 * k + 1])
    series = ChebyshevSeries(
        cosine_coeffs=np.array(cos_coeffs),
        sine_coeffs=np.array(sin_coeffs),
        degree=degree,
        time=t,
    )
    xs = np.linspace(-1.0, 1.0, 10001)
    series.grid_error = float(np.max(np.abs(series.evaluate(xs) - np.exp(-1j * xs * t))))
    return series


def _chebyshev_nodes(a: float, b: float, m: int) -> np.ndarray:
    j = np.arange(m)
    return (a + b) / 2.0 + (b - a) / 2.0 * np.cos(np.pi * (2 * j + 1) / (2 * m))


def _max_error(phi: np.ndarray, t: float, a: float, b: float, n_points: int) -> float:
    xs = np.linspace(a, b, n_points)
    return float(np.max(np.abs(_f_values(phi, xs) - np.exp(-1j * xs * t))))


def optimize_phases(
    d: int,
    t_tilde: float,
    interval: tuple[float, float] = (0.0, 1.0),
    grid_size: int | None = None,
    seed: int = 0,
    restarts: int = 6,
    lawson_rounds: int = 8,
) -> QSPPhases:
    """Fit phase factors to exp(-i x t_tilde) on [a, b].

    Least squares on Chebyshev nodes (analytic Jacobian, seeded
    restarts), then Lawson reweighting to flatten the error toward
    minimax; epsilon_poly is the exact max error on a 10x finer
    uniform grid.  Best candidate wins by (epsilon, phase norm).
    """
    a, b = interval
    if not (0.0 <= a < b <= 1.0):
        raise ValueError("interval must satisfy 0 <= a < b <= 1")
    if d % 2 != 0 or d < 0:
        raise ValueError("degree must be a nonnegative even integer")
    m = grid_size or 4 * (d + 1)
    n_validate = 10 * m
    if d == 0:
        eps = _max_error(np.zeros(0), t_tilde, a, b, n_validate)
        return QSPPhases(np.zeros(0), 0, t_tilde, (a, b), eps)
    xs = _chebyshev_nodes(a, b, m)
    target = np.exp(-1j * xs * t_tilde)
    rng = np.random.default_rng(seed)

    def solve(phi0: np.ndarray, weights: np.ndarray) -> np.ndarray:
        sw = np.sqrt(weights)

        def resid(phi):
            f = _f_values(phi, xs)
            r = (f - target) * sw
            return np.concatenate([r.real, r.imag])

        def jac(phi):
            _, jcplx = _f_and_jacobian(phi, xs)
            jw = jcplx * sw[:, None]
            return np.concatenate([jw.real, jw.imag])

        res = scipy.optimize.least_squares(resid, phi0, jac=jac, method="lm", xtol=1e-14, ftol=1e-14)
        return res.x

    starts = [np.zeros(d)]
    for _ in range(max(restarts - 1, 0)):
        starts.append(rng.uniform(-0.3, 0.3, size=d))
    best_phi, best_eps = None, np.inf
    for phi0 in starts:
        weights = np.ones(m)
        phi = solve(phi0, weights)
        eps = _max_error(phi, t_tilde, a, b, n_validate)
        if eps < best_eps - 1e-15 or (
            abs(eps - best_eps) <= 1e-15 and np.linalg.norm(phi) < np.linalg.norm(best_phi)
        ):
            best_phi, best_eps = phi, eps
        # Lawson polish: push the residual profile toward equioscillation
        for _ in range(lawson_rounds):
            r = np.abs(_f_values(phi, xs) - target)
            if r.max() <= 1e-15:
                break
            weights = weights * np.maximum(r, 1e-15)
            weights = weights / weights.sum() * m
            phi = solve(phi, weights)
            eps = _max_error(phi, t_tilde, a, b, n_validate)
            if eps < best_eps - 1e-15:
                best_phi, best_eps = phi, eps
    return QSPPhases(best_phi, d, t_tilde, (a, b), float(best_eps))


def validate_qsp_polynomial(phases: QSPPhases, n_points: int = 1000) -> dict:
    """Grid checks of the protocol conditions: parity and |f| <= 1."""
    xs = np.linspace(0.0, 1.0, n_points)
    phi = phases.phases
    f_pos = _f_values(phi, xs)
    f_neg = _f_values(phi, -xs)
    parity_sign = 1.0 if phases.degree % 2 == 0 else -1.0
    parity_err = float(np.max(np.abs(f_neg - parity_sign * f_pos)))
    xs_full = np.linspace(-1.0, 1.0, n_points)
    max_abs = float(np.max(np.abs(_f_values(phi, xs_full))))
    return {
        "degree": phases.degree,
        "parity_error": parity_err,
        "parity_ok": parity_err < 1e-9,
        "max_abs_f": max_abs,
        "bounded_ok": max_abs <= 1.0 + 1e-9,
        "epsilon_poly": phases.epsilon_poly,
    }


@dataclass
class PhaseSolver:
    """Caches phase solutions per (degree, time) cell of a sweep grid."""

    interval: tuple[float, float] = (0.0, 1.0)
    grid_size: int | None = None
    seed: int = 0
    restarts: int = 6
    _cache: dict = field(default_factory=dict)

    def solve(self, d: int, t_tilde: float) -> QSPPhases:
        key = (d, float(t_tilde), self.interval, self.grid_size, self.seed)
        if key not in self._cache:
            self._cache[key] = optimize_phases(
                d, t_tilde, self.interval, self.grid_size, self.seed, self.restarts
            )
        return self._cache[key]

    def epsilon_poly(self, d: int, t_tilde: float) -> float:
        return self.solve(d, t_tilde).epsilon_poly
