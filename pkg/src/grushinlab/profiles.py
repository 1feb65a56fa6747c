"""Warped half-plane geometries and their fibre potentials.

A profile describes the metric

    g = dx^2 + f(x)^2 dy^2        on  M = (0, inf) x R,

through the warp function f and its first two derivatives.  The power-law
family f(x) = x^(-alpha) is the main object of study; alpha = 1 is the
classical Grushin half-plane and alpha = 0 the Euclidean one.  Custom
profiles are supported as long as f, f', f'' can be evaluated on x > 0.

Derived quantities implemented here:

* Gaussian curvature          K(x)  = -f''(x) / f(x)
                              (power law: -alpha(alpha+1)/x^2)
* Riemannian volume density   f(x) dx dy
* effective fibre potential   W_xi(x) = xi^2/f^2 + (2 f f'' - f'^2)/(4 f^2)
                              (power law: xi^2 x^(2 alpha)
                                          + alpha(2+alpha)/(4 x^2))
* confinement gap             (2 f f'' - f'^2)/(4 f^2) - 3/(4 x^2),
                              whose sign separates the confining from the
                              non-confining regime (zero at alpha = 1).

The effective potential is what the Laplace-Beltrami operator becomes on
each Fourier fibre after the unitary rescaling psi -> sqrt(f) psi; all
endpoint classification and fibre dynamics in the sibling modules is
driven by it.

Admissibility of a profile is the conjunction of four sampled conditions:

    (i)   f(x) > 0,
    (ii)  f(x) >= kappa on a declared neighbourhood (0, x_nb] of zero,
    (iii) f, f', f'' finite (smoothness proxy on a grid),
    (iv)  2 f f'' - f'^2 >= 0.

Condition (iv) guarantees W_xi >= 0; the power law satisfies it exactly
when alpha(2+alpha) >= 0, i.e. outside (-2, 0).
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, UsageError

__all__ = [
    "GrushinProfile",
    "FibrePotential",
    "AssumptionCheck",
    "AssumptionReport",
    "power_law",
    "custom_profile",
    "builtin_profile",
    "parse_profile_config",
    "load_profile",
    "curvature",
    "volume_density",
    "effective_potential",
    "confinement_gap",
    "check_assumptions",
    "BUILTIN_CUSTOM_PROFILES",
]

POWER_LAW = "power_law"
CUSTOM = "custom"


def _require_positive(x):
    """Validate x > 0 (scalar or array) and return it as float array/scalar."""
    arr = np.asarray(x, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"x must be positive and finite, got {x!r}")
    return arr if arr.ndim else float(arr)


@dataclass(frozen=True)
class GrushinProfile:
    """Immutable warp-function bundle (f, f', f'') for a half-plane metric.

    Instances are safe to share across threads; every evaluator is pure.
    ``alpha`` is set only for the power-law family.  ``kappa`` together
    with ``kappa_window`` declares the near-zero lower bound of
    admissibility condition (ii); the declaration is verified, not
    enforced, by :func:`check_assumptions`.

    ``derivative_mode`` records whether f', f'' are analytic or a
    finite-difference fallback.  The fallback is allowed but flagged:
    the combination 2 f f'' - f'^2 suffers cancellation, and the
    classification thresholds downstream are sign-sensitive.
    """

    kind: str
    f: Callable[[np.ndarray], np.ndarray]
    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    kappa: float
    kappa_window: float = 1.0
    alpha: float | None = None
    scale: float = 1.0
    name: str = "custom"
    derivative_mode: str = "analytic"
    # Optional closed forms for the scale-invariant combinations; needed
    # when f itself overflows near 0 (e.g. exp(1/x)) although the
    # combinations stay representable.
    base_w: Callable[[np.ndarray], np.ndarray] | None = None
    inv_f2: Callable[[np.ndarray], np.ndarray] | None = None
    # Smallest x at which the raw evaluators are float-representable;
    # sampling grids are clipped here (and the clip is reported).
    x_float_min: float = 0.0

    def __post_init__(self):
        if self.kind not in (POWER_LAW, CUSTOM):
            raise UsageError(f"unknown profile kind {self.kind!r}")
        if not (self.kappa > 0.0) or not math.isfinite(self.kappa):
            raise UsageError("kappa must be a positive real")
        if self.kind == POWER_LAW and self.alpha is None:
            raise UsageError("power-law profile requires alpha")

    @property
    def is_power_law(self) -> bool:
        return self.kind == POWER_LAW

    def inv_f_squared(self, x):
        """1/f(x)^2, i.e. x^(2 alpha) for the power law."""
        if self.is_power_law:
            return x ** (2.0 * self.alpha) / self.scale**2
        if self.inv_f2 is not None:
            return self.inv_f2(x)
        fx = self.f(x)
        return 1.0 / (fx * fx)

    def base_potential(self, x):
        """Curvature part of the fibre potential, (2 f f'' - f'^2)/(4 f^2).

        Scale-invariant under f -> lambda f; the power-law closed form is
        alpha(2+alpha)/(4 x^2).
        """
        if self.is_power_law:
            a = self.alpha
            return a * (2.0 + a) / (4.0 * x * x)
        if self.base_w is not None:
            return self.base_w(x)
        fx, f1x, f2x = self.f(x), self.f1(x), self.f2(x)
        return (2.0 * fx * f2x - f1x * f1x) / (4.0 * fx * fx)


@dataclass(frozen=True)
class FibrePotential:
    """The half-line potential W_xi(x) seen by one Fourier fibre.

    ``xi`` is the Fourier variable dual to y (an integer mode number in
    cylinder geometry).  W is evaluated lazily through the profile so a
    single object can be broadcast over grids.
    """

    xi: float
    profile: GrushinProfile

    def __call__(self, x):
        return self.profile.base_potential(x) + self.xi**2 * self.profile.inv_f_squared(x)


def power_law(alpha: float, scale: float = 1.0) -> GrushinProfile:
    """Profile f(x) = scale * x^(-alpha) with analytic derivatives."""
    if not math.isfinite(alpha):
        raise UsageError("alpha must be finite")
    if not (scale > 0.0 and math.isfinite(scale)):
        raise UsageError("scale must be a positive real")
    a = float(alpha)
    lam = float(scale)

    def f(x):
        return lam * x ** (-a)

    def f1(x):
        return -a * lam * x ** (-a - 1.0)

    def f2(x):
        return a * (a + 1.0) * lam * x ** (-a - 2.0)

    # On (0, 1] the power law is minimised at x = 1 when alpha >= 0; the
    # declared bound is honest there and knowingly fails for alpha < 0.
    kappa = lam if a >= 0 else lam * 1.0
    name = f"power_law(alpha={a:g})" if lam == 1.0 else f"power_law(alpha={a:g}, scale={lam:g})"
    return GrushinProfile(
        kind=POWER_LAW, f=f, f1=f1, f2=f2, kappa=kappa, alpha=a, scale=lam, name=name
    )


def custom_profile(
    f: Callable,
    f1: Callable | None = None,
    f2: Callable | None = None,
    *,
    kappa: float,
    kappa_window: float = 1.0,
    name: str = "custom",
    fd_step: float = 1e-5,
    base_w: Callable | None = None,
    inv_f2: Callable | None = None,
    x_float_min: float = 0.0,
) -> GrushinProfile:
    """Wrap user-supplied evaluators into a profile.

    Analytic f', f'' should be given whenever available.  If omitted they
    are replaced by central finite differences with relative step
    ``fd_step`` and the profile is flagged ``derivative_mode =
    "finite_difference"``: the cancellation in 2 f f'' - f'^2 makes that
    mode unsuitable for borderline classification.
    """
    mode = "analytic"
    if f1 is None or f2 is None:
        mode = "finite_difference"
        if f1 is None:
            def f1(x, _f=f):  # noqa: E731 - closures keep the profile frozen
                h = fd_step * np.asarray(x, dtype=float)
                return (_f(x + h) - _f(x - h)) / (2.0 * h)
        if f2 is None:
            def f2(x, _f=f):
                h = fd_step * np.asarray(x, dtype=float)
                return (_f(x + h) - 2.0 * _f(x) + _f(x - h)) / (h * h)
    return GrushinProfile(
        kind=CUSTOM,
        f=f,
        f1=f1,
        f2=f2,
        kappa=kappa,
        kappa_window=kappa_window,
        name=name,
        derivative_mode=mode,
        base_w=base_w,
        inv_f2=inv_f2,
        x_float_min=x_float_min,
    )


def _exp_inverse_profile() -> GrushinProfile:
    """f(x) = exp(1/x): non-power-law, admissible, W ~ 1/(4 x^4) near 0.

    The raw evaluators overflow below x ~ 3e-3, but the combinations
    driving classification stay representable:
    (2 f f'' - f'^2)/(4 f^2) = 1/x^3 + 1/(4 x^4) and 1/f^2 = exp(-2/x).
    """

    def f(x):
        return np.exp(1.0 / x)

    def f1(x):
        return -np.exp(1.0 / x) / (x * x)

    def f2(x):
        return np.exp(1.0 / x) * (2.0 * x + 1.0) / x**4

    def base_w(x):
        return 1.0 / x**3 + 0.25 / x**4

    def inv_f2(x):
        return np.exp(-2.0 / x)

    return custom_profile(
        f, f1, f2, kappa=math.e, name="exp_inverse",
        base_w=base_w, inv_f2=inv_f2, x_float_min=3e-3,
    )


BUILTIN_CUSTOM_PROFILES: Mapping[str, Callable[..., GrushinProfile]] = {
    # f = lam * x^(-alpha): same geometry as the power law up to a dilation
    # of the y axis; useful for scale-invariance checks.
    "scaled_power_law": lambda alpha=1.0, lam=1.0: power_law(alpha, scale=lam),
    "exp_inverse": lambda: _exp_inverse_profile(),
}


def builtin_profile(name: str, **params) -> GrushinProfile:
    try:
        factory = BUILTIN_CUSTOM_PROFILES[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_CUSTOM_PROFILES))
        raise UsageError(f"unknown builtin profile {name!r} (known: {known})") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# geometric quantities
# ---------------------------------------------------------------------------

def curvature(profile: GrushinProfile, x) -> float:
    """Gaussian curvature K(x) = -f''/f; power law: -alpha(alpha+1)/x^2."""
    x = _require_positive(x)
    if profile.is_power_law:
        a = profile.alpha
        return -a * (a + 1.0) / (x * x)
    return -profile.f2(x) / profile.f(x)


def volume_density(profile: GrushinProfile, x) -> float:
    """Density of the Riemannian volume form against dx dy, i.e. f(x)."""
    x = _require_positive(x)
    return profile.f(x)


def effective_potential(pot: FibrePotential, x) -> float:
    """W_xi(x) = xi^2/f^2 + (2 f f'' - f'^2)/(4 f^2) at x > 0.

    The xi-dependence enters as an additive term, so
    W(xi, x) - W(0, x) equals xi^2/f(x)^2 by construction.
    """
    x = _require_positive(x)
    return pot(x)


def confinement_gap(profile: GrushinProfile, x) -> float:
    """Normalised margin of the confinement inequality at x.

    Returns (2 f f'' - f'^2)/(4 f^2) - 3/(4 x^2); the power-law closed
    form is (alpha-1)(alpha+3)/(4 x^2).  Positive sign means the fibre
    potential dominates the critical inverse-square threshold at x.
    """
    x = _require_positive(x)
    if profile.is_power_law:
        a = profile.alpha
        return (a - 1.0) * (a + 3.0) / (4.0 * x * x)
    return profile.base_potential(x) - 0.75 / (x * x)


# ---------------------------------------------------------------------------
# admissibility checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionCheck:
    condition: str
    passed: bool
    first_violation: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    """Grid-sampled admissibility report.

    The sampling grid is retained verbatim so any reported violation can
    be reproduced exactly.
    """

    profile_name: str
    grid: np.ndarray = field(repr=False)
    checks: tuple[AssumptionCheck, ...] = ()

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, condition: str) -> AssumptionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    def summary(self) -> str:
        parts = [f"{c.condition}:{'pass' if c.passed else 'FAIL'}" for c in self.checks]
        return f"{self.profile_name} [{', '.join(parts)}]"


def _first_violation(grid: np.ndarray, bad: np.ndarray) -> float | None:
    idx = np.flatnonzero(bad)
    return float(grid[idx[0]]) if idx.size else None


def check_assumptions(
    profile: GrushinProfile,
    grid: Sequence[float] | np.ndarray,
    *,
    iv_rel_tol: float = 1e-12,
) -> AssumptionReport:
    """Evaluate admissibility conditions (i)-(iv) pointwise on ``grid``.

    ``grid`` must hold at least 100 strictly positive samples (a
    log-spaced grid is expected so several decades near zero are probed).
    Condition (iv) is tested as 2 f f'' - f'^2 >= -tol * |f^2/x^2| so that
    exact-equality profiles (alpha = 1, constant f) pass under roundoff.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise UsageError("assumption check requires a non-empty grid")
    if grid.size < 100:
        raise UsageError(f"assumption grid needs >= 100 points, got {grid.size}")
    if np.any(grid <= 0.0) or not np.all(np.isfinite(grid)):
        raise UsageError("assumption grid must lie strictly inside (0, inf)")
    grid = np.sort(grid)
    clipped = ""
    if profile.x_float_min > 0.0 and grid[0] < profile.x_float_min:
        grid = grid[grid >= profile.x_float_min]
        if grid.size < 100:
            raise UsageError(
                f"grid has fewer than 100 points above the profile's float "
                f"floor x >= {profile.x_float_min:g}"
            )
        clipped = f"; grid clipped to x >= {profile.x_float_min:g} (float range)"

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        fx = np.asarray(profile.f(grid), dtype=float)
        f1x = np.asarray(profile.f1(grid), dtype=float)
        f2x = np.asarray(profile.f2(grid), dtype=float)
        base = np.asarray(profile.base_potential(grid), dtype=float)

    checks = []

    bad_i = ~(np.isfinite(fx) & (fx > 0.0))
    checks.append(
        AssumptionCheck("(i) positivity", not bad_i.any(), _first_violation(grid, bad_i),
                        "f(x) > 0 for all sampled x" + clipped)
    )

    window = grid <= profile.kappa_window
    if window.any():
        bad_ii = window & ~(fx >= profile.kappa)
        detail = (f"f >= kappa={profile.kappa:g} on (0, {profile.kappa_window:g}], "
                  f"{int(window.sum())} samples")
        checks.append(
            AssumptionCheck("(ii) lower bound near 0", not bad_ii.any(),
                            _first_violation(grid, bad_ii), detail)
        )
    else:
        checks.append(
            AssumptionCheck("(ii) lower bound near 0", True, None,
                            "no grid samples inside the declared neighbourhood")
        )

    bad_iii = ~(np.isfinite(fx) & np.isfinite(f1x) & np.isfinite(f2x))
    checks.append(
        AssumptionCheck("(iii) smoothness", not bad_iii.any(), _first_violation(grid, bad_iii),
                        "f, f', f'' finite at all samples (grid proxy)")
    )

    # (iv) tested in the scale-invariant form (2 f f'' - f'^2)/(4 f^2) >= 0,
    # equivalent by condition (i) and robust against overflow of f itself.
    slack = iv_rel_tol * (np.abs(base) + 1.0 / (grid * grid))
    bad_iv = ~(base >= -slack)
    checks.append(
        AssumptionCheck("(iv) concavity combination", not bad_iv.any(),
                        _first_violation(grid, bad_iv),
                        "2 f f'' - f'^2 >= 0 (within roundoff slack)")
    )

    return AssumptionReport(profile_name=profile.name, grid=grid, checks=tuple(checks))


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

_PROFILE_SECTION = "profile"


def parse_profile_config(text: str) -> GrushinProfile:
    """Build a profile from `key = value` configuration text.

    Recognised keys: ``kind`` (power_law | custom); for power_law:
    ``alpha`` and optional ``scale``; for custom: ``name`` of a builtin
    plus its parameters (``alpha``/``lam`` for scaled_power_law).  A
    ``[profile]`` section header is optional.
    """
    stripped = text.lstrip()
    if not stripped.startswith("["):
        text = f"[{_PROFILE_SECTION}]\n" + text
    parser = configparser.ConfigParser()
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise UsageError(f"malformed profile config: {exc}") from exc
    section = parser[_PROFILE_SECTION] if parser.has_section(_PROFILE_SECTION) else parser[parser.sections()[0]]

    kind = section.get("kind", "").strip().lower()
    if kind == POWER_LAW:
        if "alpha" not in section:
            raise UsageError("power_law profile config requires field 'alpha'")
        try:
            alpha = float(section["alpha"])
            scale = float(section.get("scale", "1.0"))
        except ValueError as exc:
            raise UsageError(f"non-numeric profile field: {exc}") from exc
        return power_law(alpha, scale=scale)
    if kind == CUSTOM:
        name = section.get("name", "").strip()
        if not name:
            raise UsageError("custom profile config requires field 'name'")
        params = {}
        for key in section:
            if key in ("kind", "name"):
                continue
            try:
                params[key] = float(section[key])
            except ValueError as exc:
                raise UsageError(f"non-numeric profile field {key!r}") from exc
        return builtin_profile(name, **params)
    raise UsageError(f"profile config field 'kind' must be power_law or custom, got {kind!r}")


def load_profile(path) -> GrushinProfile:
    """Read a profile definition from a config file on disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile_config(fh.read())
