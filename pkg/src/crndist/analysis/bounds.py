"""Closed-form stationary laws, approximation error bounds and mixing-time bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from ..dist import FiniteDistribution
from ..errors import ThresholdError, ValidationError
from .tables import StationaryTable

SERIES_STOP = 1e-18


def _point_mass_marginal(x: int, ratio: float, min_tail: int) -> list[float]:
    """Unnormalized terms ``ratio^n prod_{j<=n} (j-1)!/(x+j)!`` for ``n = 0, 1, ...``.

    Summation continues until a term drops below ``SERIES_STOP`` of the
    running sum and at least ``min_tail`` terms past ``n = 0`` are present.
    """
    terms = [1.0]
    log_t = 0.0
    total = 1.0
    n = 0
    log_ratio = math.log(ratio)
    while True:
        n += 1
        log_t += log_ratio + math.lgamma(n) - math.lgamma(x + n + 1)
        t = math.exp(log_t)
        if n > min_tail and t < SERIES_STOP * total:
            break
        terms.append(t)
        total += t
    return terms


def exact_point_mass_stationary(x: Sequence[int], eps: float, tail_states: int = 1) -> StationaryTable:
    """Exact limit law of the point-mass network for ``x`` at accuracy ``eps``.

    Coordinates are independent; each positive coordinate is a birth-death
    chain on ``[x_i, inf)`` and zero coordinates are exactly at 0.
    ``tail_states`` is a minimum: the tail is extended until terms are
    negligible so the table sums to one.
    """
    x = tuple(int(v) for v in x)
    if not x or min(x) < 0:
        raise ValidationError("x must be a non-negative state")
    if not 0 < eps < 2:
        raise ValidationError("eps must lie in (0, 2)")
    if tail_states < 1:
        raise ValidationError("tail_states must be >= 1")
    d = len(x)
    ratio = eps / (2 * d)
    marginals = []
    M = 1.0
    for xi in x:
        if xi == 0:
            marginals.append({0: 1.0})
            continue
        terms = _point_mass_marginal(xi, ratio, tail_states)
        Mi = math.fsum(terms)
        M *= Mi
        marginals.append({xi + n: t / Mi for n, t in enumerate(terms)})
    mass = {}
    for combo in itertools.product(*(m.items() for m in marginals)):
        p = math.prod(v for _, v in combo)
        mass[tuple(k for k, _ in combo)] = p
    marg_dicts = [{str(k): v for k, v in m.items()} for m in marginals]
    return StationaryTable(FiniteDistribution(mass, d), M, "product", None, {"marginals": marg_dicts})


@dataclass(frozen=True)
class UniformBound:
    """Per-coordinate and joint sup-norm bounds for the uniform network."""

    pointwise: tuple[float, ...]
    norm: tuple[float, ...]
    joint: float
    D: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"pointwise": list(self.pointwise), "norm": list(self.norm),
                "joint": self.joint, "D": list(self.D)}


def _geometric_sum(rho: float, n: int) -> float:
    """``sum_{j<n} rho^j``, i.e. ``(1 - rho^n) / (1 - rho)``."""
    if n <= 0:
        return 0.0
    if abs(rho - 1.0) < 1e-12:
        return float(n)
    return -math.expm1(n * math.log(rho)) / (1.0 - rho)


def uniform_D(a: int, b: int, k1: float, k2: float) -> float:
    """The quantity ``D(kappa, i)`` for one coordinate with ``b >= 1``."""
    r = b - a + 1
    rho = k1 / k2
    log_f1 = math.lgamma(b + 2)  # log (b+1)!
    log_f2 = math.lgamma(b + 3)  # log (b+2)!
    ratio = rho / math.exp(log_f1) if log_f1 < 700 else 0.0
    if ratio >= 1.0:
        raise ValidationError("k1/k2 must be below (b+1)! for the bound to apply")
    first = math.exp(-log_f1) * (1.0 / r + (1.0 / (b + 2) if r >= 2 else 0.0))
    inner = (b + 2) / (r * r) * math.exp(-2 * log_f1) / (1.0 - ratio * ratio)
    if r >= 3:
        inner += math.exp(-log_f1 - log_f2) * _geometric_sum(rho, r - 2)
    return first + rho * inner


def unif_error_bound(
    a: Sequence[int],
    b: Sequence[int],
    kappa: Sequence[Sequence[float]] | None = None,
    delta: float | None = None,
) -> UniformBound:
    """Bound on the sup-distance between the uniform network's law and uniform(a, b).

    ``kappa`` gives ``(k1, k2)`` (production and reset rates) per coordinate;
    alternatively ``delta`` selects the default rates ``(1, 2d/delta)``.
    ``pointwise[i]`` bounds ``q_i - pi_i`` inside the box, ``norm[i]`` the
    marginal sup-norm, and ``joint`` the sup-norm of the joint law.
    """
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    d = len(a)
    if d == 0 or len(b) != d or min(a) < 0 or any(lo > hi for lo, hi in zip(a, b)):
        raise ValidationError("need 0 <= a <= b of equal non-zero length")
    if kappa is None:
        if delta is None or not delta > 0:
            raise ValidationError("give kappa or a positive delta")
        kappa = [(1.0, 2 * d / delta)] * d
    kappa = [tuple(float(k) for k in row)[:2] for row in kappa]
    if len(kappa) != d:
        raise ValidationError("kappa needs one (k1, k2) pair per coordinate")
    pointwise, norm, Ds = [], [], []
    for i, ((k1, k2), lo, hi) in enumerate(zip(kappa, a, b)):
        r = hi - lo + 1
        if hi == 0:
            pointwise.append(0.0)
            norm.append(0.0)
            Ds.append(0.0)
            continue
        if not (k1 > 0 and k2 > 0):
            raise ValidationError(f"coordinate {i}: rates must be positive")
        if not math.log(k2) + math.log(r) + math.lgamma(hi + 2) > math.log(k1):
            raise ValidationError(f"coordinate {i}: precondition k2*r*(b+1)! > k1 fails")
        D = uniform_D(lo, hi, k1, k2)
        beta = k1 / k2 * D
        Ds.append(D)
        pointwise.append(beta)
        norm.append(r * beta)
    widths = [hi - lo + 1 for lo, hi in zip(a, b)]
    q = [1.0 / w for w in widths]
    in_box = math.prod(q) - math.prod(max(qi - bi, 0.0) for qi, bi in zip(q, pointwise))
    outside = max(norm)
    return UniformBound(tuple(pointwise), tuple(norm), max(in_box, outside), tuple(Ds))


@dataclass(frozen=True)
class MixingBound:
    kind: str
    bound: float
    level: float
    params: dict = field(default_factory=dict)
    valid: bool = True
    threshold: float | None = None
    case: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "bound": self.bound, "valid": self.valid,
                "threshold": self.threshold, "level": self.level, "case": self.case,
                "params": self.params}


def _decay_series(k1: float, k2: float) -> float:
    """``sum_{v>=1} 1/(k1 v + k2 v(v-1))`` by partial sum plus Euler-Maclaurin tail."""
    N = 2000
    s = (k1 - k2) / k2  # summand is 1/(k2 v (v + s)), s > -1

    def f(v):
        return 1.0 / (k2 * v * (v + s))

    head = math.fsum(f(v) for v in range(1, N))
    integral = 1.0 / (k2 * N) if s == 0 else math.log1p(s / N) / (k2 * s)
    g = k2 * N * (N + s)
    deriv = -k2 * (2 * N + s) / (g * g)
    return head + integral + f(N) / 2 - deriv / 12


def bound_mixing_decay(k1: float, k2: float, eps: float) -> MixingBound:
    """Mixing-time bound for ``V -> 0 (k1), 2V -> 0 (k2)`` at level ``eps``."""
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not (k1 > 0 and k2 > 0):
        raise ValidationError("rates must be positive")
    series = _decay_series(k1, k2)
    return MixingBound("decay", series / eps, eps, {"k1": k1, "k2": k2, "eps": eps})


def birth_threshold(x: int, k1: float, k2: float) -> tuple[float, str]:
    """Lower limit on ``eps`` for the birth-network bound and which case set it."""
    log_xfx = math.lgamma(x + 1) + math.log(x)  # log(x! * x)
    hit = 1.0 - math.exp(-k1 * math.exp(-log_xfx))
    log_gap = math.log(k2) + math.lgamma(x + 2) - math.log(k1)
    if log_gap > 0:
        first = (x + 2) / math.expm1(2 * log_gap)
        case = "k2^2 ((x+1)!)^2 > k1^2"
    else:
        first = 2 * k1 / k2
        case = "k2^2 ((x+1)!)^2 <= k1^2"
    return max(first, hit), case


def bound_mixing_birth(x: int, k1: float, k2: float, eps: float) -> MixingBound:
    """Bound on the mixing time at level ``2 eps`` for ``0 -> V (k1), (x+1)V -> xV (k2)``."""
    x = int(x)
    if x < 1:
        raise ValidationError("x must be a positive integer")
    if not (k1 > 0 and k2 > 0):
        raise ValidationError("rates must be positive")
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    threshold, case = birth_threshold(x, k1, k2)
    if not eps > threshold:
        raise ThresholdError(
            f"eps={eps!r} is not above the validity threshold {threshold!r} ({case})", threshold
        )
    log_xfx = math.lgamma(x + 1) + math.log(x)
    e = math.exp(-k1 * math.exp(-log_xfx))
    first = e / (k2 * (e - 1.0 + eps)) * math.exp(-log_xfx)
    second = x / (k1 * eps)
    return MixingBound(
        "birth", max(first, second), 2 * eps,
        {"x": x, "k1": k1, "k2": k2, "eps": eps}, True, threshold, case,
    )
