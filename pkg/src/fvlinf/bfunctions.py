"""Flux-shape functions B of two-point B-schemes.

A valid B satisfies ``B(0) = 1``, ``B(s) > 0`` and ``B(s) - B(-s) = -s``.
Upwind (``1 + s^-``) and Scharfetter-Gummel (``s / (e^s - 1)``) do; the
centred choice ``1 - s/2`` is positive only for ``|s| < 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

UPWIND = "upwind"
SCHARFETTER_GUMMEL = "scharfetter_gummel"
CENTERED = "centered"
CUSTOM = "custom"

_SG_SERIES_CUTOFF = 1e-5


class PositivityViolation(ValueError):
    """B is evaluated where it is not positive (centred scheme with |s| >= 2)."""


def bernoulli(s):
    """``s / (e^s - 1)``, evaluated without cancellation near 0."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = np.abs(s) < _SG_SERIES_CUTOFF
    ss = s[small]
    s2 = ss * ss
    out[small] = 1.0 - ss / 2.0 + s2 / 12.0 - s2 * s2 / 720.0
    big = ~small
    with np.errstate(over="ignore"):
        out[big] = s[big] / np.expm1(s[big])
    return out


@dataclass(frozen=True)
class BFunction:
    kind: str
    func: Callable | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in (UPWIND, SCHARFETTER_GUMMEL, CENTERED, CUSTOM):
            raise ValueError(f"unknown B kind {self.kind!r}")
        if (self.kind == CUSTOM) != (self.func is not None):
            raise ValueError("a custom B needs an evaluator, built-in kinds must not have one")

    @property
    def requires_positivity_guard(self) -> bool:
        return self.kind == CENTERED

    @property
    def label(self) -> str:
        return self.name or self.kind

    def __call__(self, s):
        """Vectorized evaluation with no validity checks."""
        s = np.asarray(s, dtype=float)
        if self.kind == UPWIND:
            return 1.0 + np.maximum(-s, 0.0)
        if self.kind == SCHARFETTER_GUMMEL:
            return bernoulli(s)
        if self.kind == CENTERED:
            return 1.0 - s / 2.0
        return np.asarray(self.func(s), dtype=float) * np.ones_like(s)


UPWIND_B = BFunction(UPWIND)
SCHARFETTER_GUMMEL_B = BFunction(SCHARFETTER_GUMMEL)
CENTERED_B = BFunction(CENTERED)

_REGISTRY: dict[str, BFunction] = {
    UPWIND: UPWIND_B,
    SCHARFETTER_GUMMEL: SCHARFETTER_GUMMEL_B,
    CENTERED: CENTERED_B,
    # the centred formula without the guard; fails the positivity audit
    "centered-unguarded": BFunction(CUSTOM, lambda s: 1.0 - s / 2.0, "centered-unguarded"),
}


def custom_b(func: Callable, name: str = "custom") -> BFunction:
    return BFunction(CUSTOM, func, name)


def register_b(name: str, func: Callable) -> BFunction:
    """Make a custom B available to config files under ``name``."""
    b = custom_b(func, name)
    _REGISTRY[name] = b
    return b


def get_b(name: str) -> BFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown B function {name!r}; known: {sorted(_REGISTRY)}") from None


def b_eval(B: BFunction, s: float) -> float:
    """Evaluate ``B(s)`` for a single finite ``s``.

    Raises
    ------
    PositivityViolation
        For the centred scheme when ``|s| >= 2``.
    """
    s = float(s)
    if not np.isfinite(s):
        raise ValueError(f"B evaluated at non-finite s = {s}")
    if B.requires_positivity_guard and abs(s) >= 2.0:
        raise PositivityViolation(f"centered B requires |s| < 2, got s = {s}")
    return float(B(np.array([s]))[0])


@dataclass(frozen=True)
class BPropertiesReport:
    b0_ok: bool
    positivity_ok: bool
    difference_ok: bool
    max_difference_error: float
    min_value: float

    @property
    def ok(self) -> bool:
        return self.b0_ok and self.positivity_ok and self.difference_ok


def default_samples(n: int = 200) -> np.ndarray:
    mags = np.logspace(-12, 2, n)
    return np.concatenate([-mags[::-1], [0.0], mags])


def check_b_properties(B: BFunction, samples=None) -> BPropertiesReport:
    """Audit the three structural properties of B at the given samples.

    ``b0_ok`` uses an absolute tolerance of 1e-14; the difference identity
    uses ``1e-12 * max(1, |s|)``.  Samples are used with both signs.
    """
    s = default_samples() if samples is None else np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    s = np.concatenate([s, -s])
    with np.errstate(all="ignore"):
        b0 = B(np.array([0.0]))[0]
        vals = B(s)
        diff_err = np.abs(vals - B(-s) + s) / np.maximum(1.0, np.abs(s))
    diff_err = np.where(np.isfinite(diff_err), diff_err, np.inf)
    return BPropertiesReport(
        b0_ok=bool(abs(b0 - 1.0) <= 1e-14),
        positivity_ok=bool(np.all(vals > 0)),
        difference_ok=bool(np.all(diff_err <= 1e-12)),
        max_difference_error=float(diff_err.max(initial=0.0)),
        min_value=float(np.nanmin(vals)) if len(vals) else float("nan"),
    )
