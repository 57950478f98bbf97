"""The Gaussian unit-speed-free curve and its two concrete realizations.

The curve u(t), t >= 0, has unit norm and inner products
<u(s), u(t)> = exp(-(s-t)^2); every orbit computation reduces to this
kernel.  Two independent realizations exist purely for cross-validation:

* coordinate expansion  u_k(t) = exp(-t^2) sqrt(2^k / k!) t^k against an
  orthonormal basis, summed after truncation with a certified tail bound;
* translated Gaussians  u(t)(r) = pi^(-1/4) exp(-(r - 2t)^2 / 2) in
  L^2(R), integrated with composite Gauss-Legendre panels.

Derivative identities of the curve are checked by finite differences of
the chord metric and of the coordinate components.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

_LN2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)
MIN_WINDOW = 9.0        # half-width of the integration window beyond the centers
FD_STEP_MIN = 1e-7
FD_STEP_MAX = 1e-3


def kernel_eval(s: float, t: float) -> float:
    """K(s, t) = exp(-(s-t)^2), the exact inner product <u(s), u(t)>."""
    gap = s - t
    return math.exp(-gap * gap)


def chord_distance(s: float, t: float) -> float:
    """||u(s) - u(t)|| = sqrt(2 (1 - K(s, t))), evaluated through expm1."""
    gap = s - t
    return math.sqrt(-2.0 * math.expm1(-gap * gap))


def _gram_from_chord(a: float, b: float) -> float:
    """Inner product recovered from the chord metric, 1 - chord^2 / 2."""
    gap = a - b
    return 1.0 + math.expm1(-gap * gap)


def _coord_log_weight(k: int) -> float:
    return 0.5 * (k * _LN2 - math.lgamma(k + 1))


def coord_component(k: int, t: float) -> float:
    """Coordinate k of the curve: exp(-t^2) sqrt(2^k / k!) t^k, log-domain."""
    k = int(k)
    if k < 0:
        raise ValueError(f"component index must be >= 0, got {k}")
    t = float(t)
    if t < 0.0:
        raise ValueError(f"curve parameter must be >= 0, got {t}")
    if t == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-t * t + _coord_log_weight(k) + k * math.log(t))


@functools.lru_cache(maxsize=64)
def _coord_log_weights(k_max: int) -> np.ndarray:
    arr = np.array([_coord_log_weight(k) for k in range(k_max + 1)])
    arr.setflags(write=False)
    return arr


def coord_vector(t: float, k_max: int) -> np.ndarray:
    """Components 0..k_max of the coordinate realization at parameter t."""
    k_max = int(k_max)
    if k_max < 0:
        raise ValueError(f"truncation index must be >= 0, got {k_max}")
    t = float(t)
    if t < 0.0:
        raise ValueError(f"curve parameter must be >= 0, got {t}")
    if t == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    ks = np.arange(k_max + 1)
    return np.exp(-t * t + _coord_log_weights(k_max) + ks * math.log(t))


def coord_truncation_index(s_max: float, eps: float) -> int:
    """Smallest truncation index whose certified tail bound is at most eps.

    The neglected mass sum_{k>K} u_k(s) u_k(t) over [0, s_max]^2 is bounded
    by the exponential-series tail R_K(x) <= x^(K+1) / ((K+1)! (1 - x/(K+2)))
    at x = 2 s_max^2.  For eps >= 1 the smallest index making the bound
    applicable is returned, since the full series never exceeds 1.
    """
    s_max = float(s_max)
    if s_max <= 0.0:
        raise ValueError(f"s_max must be > 0, got {s_max}")
    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x = 2.0 * s_max * s_max
    k = max(0, math.ceil(x) - 1)
    while x / (k + 2) >= 1.0:
        k += 1
    if eps >= 1.0:
        return k
    log_eps = math.log(eps)
    while True:
        log_tail = ((k + 1) * math.log(x) - math.lgamma(k + 2)
                    - math.log1p(-x / (k + 2)))
        if log_tail <= log_eps:
            return k
        k += 1


def coord_inner_truncated(s: float, t: float, k_max: int) -> float:
    """Truncated coordinate inner product sum_{k<=k_max} u_k(s) u_k(t).

    Nondecreasing in k_max and never above kernel_eval(s, t) up to rounding.
    """
    return float(np.dot(coord_vector(s, k_max), coord_vector(t, k_max)))


GAUSS_PEAK = math.pi ** -0.25


def l2_point_eval(t: float, r: float) -> float:
    """Translated-Gaussian realization pi^(-1/4) exp(-(r - 2t)^2 / 2)."""
    gap = r - 2.0 * float(t)
    return GAUSS_PEAK * math.exp(-0.5 * gap * gap)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre layout for the L^2 inner products."""

    window: float = MIN_WINDOW
    panel_width: float = 0.5
    order: int = 12

    def __post_init__(self) -> None:
        if self.window < MIN_WINDOW:
            raise ValueError(
                f"integration window must be >= {MIN_WINDOW}, got {self.window}")
        if self.panel_width <= 0.0:
            raise ValueError(f"panel width must be > 0, got {self.panel_width}")
        if self.order < 2:
            raise ValueError(f"quadrature order must be >= 2, got {self.order}")


@functools.lru_cache(maxsize=16)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def l2_inner_quadrature(s: float, t: float,
                        quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Numerical <u(s), u(t)> in the translated-Gaussian realization.

    Integrates over [2 min(s,t) - W, 2 max(s,t) + W]; with the default
    W = 9 the neglected tail is below 1e-35.
    """
    s, t = float(s), float(t)
    if s < 0.0 or t < 0.0:
        raise ValueError("curve parameters must be >= 0")
    lo = 2.0 * min(s, t) - quad.window
    hi = 2.0 * max(s, t) + quad.window
    n_panels = max(1, math.ceil((hi - lo) / quad.panel_width))
    nodes, weights = _leggauss(quad.order)
    edges = lo + (hi - lo) * np.arange(n_panels + 1) / n_panels
    mids = 0.5 * (edges[1:] + edges[:-1])
    halves = 0.5 * (edges[1:] - edges[:-1])
    r = (mids[:, None] + halves[:, None] * nodes[None, :]).ravel()
    w = (halves[:, None] * weights[None, :]).ravel()
    integrand = (1.0 / math.sqrt(math.pi)) * np.exp(
        -0.5 * ((r - 2.0 * s) ** 2 + (r - 2.0 * t) ** 2))
    return float(np.dot(w, integrand))


def _chord_second_difference(delta: float, step: float) -> float:
    """Central second difference of x -> exp(-x^2) at delta with step H.

    The three values are combined through expm1/sinh identities so the
    O(eps/H^2) rounding of the naive three-point stencil cancels; only the
    O(H^2) truncation error of the difference quotient remains.
    """
    h2 = step * step
    g = math.expm1(-h2)
    c = 2.0 * math.sinh(step * delta) ** 2
    a = g + c + g * c
    return 2.0 * math.exp(-delta * delta) * a / h2


def derivative_identities(s: float, t: float, h: float = 1e-5, *,
                          truncation_eps: float = 1e-13) -> dict[str, float]:
    """Residuals of the four curve-derivative identities at (s, t).

    Checked by central finite differences along two independent routes
    (chord metric, truncated coordinate vectors):

    a. <u'(t), u(t)> = 0
    b. <u'(s), u'(t)> = (2 - 4 (s-t)^2) exp(-(s-t)^2)
    c. ||u'(t)|| = sqrt(2)
    d. ||u'(s) - u'(t)||^2 = 4 - 2 (2 - 4 (s-t)^2) exp(-(s-t)^2)

    Returns the absolute residual per route and check; all are O(h^2).
    """
    s, t, h = float(s), float(t), float(h)
    if not FD_STEP_MIN <= h <= FD_STEP_MAX:
        raise ValueError(f"step must lie in [{FD_STEP_MIN}, {FD_STEP_MAX}], got {h}")
    if s < h or t < h:
        raise ValueError("both parameters must be >= h for central differences")

    gap = s - t
    claim_b = (2.0 - 4.0 * gap * gap) * math.exp(-gap * gap)
    claim_d = 4.0 - 2.0 * claim_b

    tangent_fd = (_gram_from_chord(t + h, t) - _gram_from_chord(t - h, t)) / (2.0 * h)
    speed_t = chord_distance(t + h, t - h) / (2.0 * h)
    speed_s = chord_distance(s + h, s - h) / (2.0 * h)
    mixed = -_chord_second_difference(gap, 2.0 * h)
    diff_sq = speed_s * speed_s + speed_t * speed_t - 2.0 * mixed

    k_max = coord_truncation_index(max(s, t) + h, truncation_eps)
    u_t = coord_vector(t, k_max)
    v_s = (coord_vector(s + h, k_max) - coord_vector(s - h, k_max)) / (2.0 * h)
    v_t = (coord_vector(t + h, k_max) - coord_vector(t - h, k_max)) / (2.0 * h)
    dv = v_s - v_t

    return {
        "chord.tangent": abs(tangent_fd),
        "chord.mixed": abs(mixed - claim_b),
        "chord.speed": abs(speed_t - SQRT2),
        "chord.diff_sq": abs(diff_sq - claim_d),
        "coord.tangent": abs(float(np.dot(v_t, u_t))),
        "coord.mixed": abs(float(np.dot(v_s, v_t)) - claim_b),
        "coord.speed": abs(math.sqrt(float(np.dot(v_t, v_t))) - SQRT2),
        "coord.diff_sq": abs(float(np.dot(dv, dv)) - claim_d),
    }
