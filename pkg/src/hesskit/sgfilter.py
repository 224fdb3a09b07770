"""Windowed least-squares smoothing with R²-driven model selection.

A window of 2m+1 samples on abscissae x = -m..m is fitted by a polynomial of
a given order. Two selection modes sit on top: mode 1 holds the window and
scans orders, mode 2 holds the order and scans windows; both keep the fit
with the best goodness of fit, breaking ties toward the least complex model.
A final rule stage guards a smoothed power command against exceeding or
opposing the raw demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._kernels import sg_fit_eval
from .errors import FitError, InsufficientHistoryError

# R² values closer than this are treated as tied, so the anti-overfitting
# tie-break (lowest order / smallest window) can act on exact-fit cases where
# rounding noise would otherwise pick an arbitrary candidate.
R2_TIE_TOL = 1e-9

# Relative floors (scaled by max(1, sum y^2)) under which SS_tot counts as
# zero (constant window) and SS_res as a perfect fit.
_SS_EPS = 1e-20

TAG_FILTERED = "filtered"
TAG_FUZZY_FALLBACK = "fuzzy-fallback"


@dataclass(frozen=True)
class Window:
    """2m+1 samples centred on abscissa zero."""

    half_width: int
    samples: np.ndarray

    def __post_init__(self):
        if self.half_width < 1:
            raise FitError(f"half_width must be >= 1, got {self.half_width}")
        y = np.asarray(self.samples, dtype=float)
        if y.ndim != 1 or y.shape[0] != 2 * self.half_width + 1:
            raise FitError(
                f"window needs {2 * self.half_width + 1} samples, got shape {y.shape}"
            )
        if not np.all(np.isfinite(y)):
            raise FitError("window samples must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "samples", y)

    @classmethod
    def from_samples(cls, samples) -> "Window":
        y = np.asarray(samples, dtype=float)
        n = y.shape[0]
        if n < 3 or n % 2 == 0:
            raise FitError(f"window length must be odd and >= 3, got {n}")
        return cls(half_width=(n - 1) // 2, samples=y)


@dataclass(frozen=True)
class FitResult:
    """Polynomial fit of one window: coefficients a0..a_order plus metadata."""

    coeffs: tuple
    predictions: np.ndarray
    r2: float
    order: int
    half_width: int

    @property
    def center_value(self) -> float:
        """Prediction at abscissa 0 (offline smoothing entry point)."""
        return float(self.predictions[self.half_width])

    @property
    def latest_value(self) -> float:
        """Prediction at abscissa +m, the newest sample (causal entry point)."""
        return float(self.predictions[-1])


def _gauss_jordan_inverse(mat):
    """Invert a square matrix of Fractions exactly."""
    k = len(mat)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(mat)]
    for col in range(k):
        piv = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if piv is None:
            raise FitError("design matrix is rank deficient")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = Fraction(1, 1) / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[k:] for row in aug]


@lru_cache(maxsize=512)
def _projection_matrices(half_width: int, order: int):
    """Exact least-squares operators for the window (half_width, order).

    The design matrix on integer abscissae -m..m is exact, so the normal
    equations are solved in rational arithmetic and only rounded once. This
    keeps both the coefficient map P = (EᵀE)⁻¹Eᵀ and the prediction map
    H = E·P accurate to rounding even for ill-conditioned high orders, and
    makes the classic convolution weights exact (H rows are the SG kernels).
    """
    m, k = half_width, order + 1
    n = 2 * m + 1
    xs = list(range(-m, m + 1))
    e = [[Fraction(x) ** p for p in range(k)] for x in xs]
    ete = [[sum(e[i][a] * e[i][b] for i in range(n)) for b in range(k)] for a in range(k)]
    inv = _gauss_jordan_inverse(ete)
    proj = [[sum(inv[a][b] * e[i][b] for b in range(k)) for i in range(n)] for a in range(k)]
    hat = [[sum(e[i][a] * proj[a][j] for a in range(k)) for j in range(n)] for i in range(n)]
    proj_f = np.array([[float(v) for v in row] for row in proj])
    hat_f = np.array([[float(v) for v in row] for row in hat])
    proj_f.setflags(write=False)
    hat_f.setflags(write=False)
    return proj_f, hat_f


def _r2_from_ss(ss_res: float, ss_tot: float, scale: float) -> float:
    floor = _SS_EPS * max(1.0, scale)
    if ss_tot <= floor:
        # constant observations: 0/0 in the definition; perfect fit wins
        return 1.0 if ss_res <= floor else 0.0
    return 1.0 - ss_res / ss_tot


def fit_window(window: Window, order: int, *, allow_exact: bool = False) -> FitResult:
    """Least-squares polynomial fit of the window at the given order.

    Requires n > order+1 (one spare sample) unless allow_exact permits the
    interpolating case n == order+1.
    """
    n = 2 * window.half_width + 1
    k = order + 1
    if order < 0:
        raise FitError(f"order must be >= 0, got {order}")
    limit = n - 1 if allow_exact else n - 2
    if order > limit:
        raise FitError(f"order {order} too high for window of {n} samples (max {limit})")
    proj, hat = _projection_matrices(window.half_width, order)
    y = np.ascontiguousarray(window.samples)
    coeffs, yhat, ss_res, ss_tot = sg_fit_eval(y, proj, hat)
    r2 = _r2_from_ss(ss_res, ss_tot, float(y @ y))
    return FitResult(
        coeffs=tuple(float(c) for c in coeffs),
        predictions=np.asarray(yhat),
        r2=r2,
        order=order,
        half_width=window.half_width,
    )


def r_squared(observed, predicted) -> float:
    """Goodness of fit 1 - SS_res/SS_tot; constant observations score 1 only
    for a perfect fit."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape or obs.ndim != 1:
        raise ValueError(f"shape mismatch: observed {obs.shape} vs predicted {pred.shape}")
    if obs.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    ss_res = float(np.sum((obs - pred) ** 2))
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    return _r2_from_ss(ss_res, ss_tot, float(obs @ obs))


def mode1_select(window: Window, max_order: int) -> FitResult:
    """Fixed window, scan polynomial orders 1..max_order; keep the best R².

    R² values within R2_TIE_TOL count as tied and the lowest order wins.
    """
    n = 2 * window.half_width + 1
    if not 1 <= max_order <= n - 2:
        raise FitError(f"max_order must be in [1, {n - 2}] for window of {n}")
    fits = [fit_window(window, order) for order in range(1, max_order + 1)]
    return _pick_best(fits, key=lambda f: f.order)


def mode2_select(history, half_widths, order: int) -> FitResult:
    """Fixed order, scan trailing windows; keep the best R².

    Each half-width m uses the most recent 2m+1 samples of history. Windows
    that do not satisfy 2m+1 > order+1 or exceed the history are skipped;
    ties go to the smallest window.
    """
    y = np.asarray(history, dtype=float)
    fits = []
    for m in sorted(set(int(m) for m in half_widths)):
        n = 2 * m + 1
        if n <= order + 1 or n > y.shape[0]:
            continue
        fits.append(fit_window(Window(m, y[-n:]), order))
    if not fits:
        raise InsufficientHistoryError(
            f"no admissible window among {sorted(half_widths)} for order {order} "
            f"and history of {y.shape[0]}"
        )
    return _pick_best(fits, key=lambda f: f.half_width)


def _pick_best(fits, key):
    best_r2 = max(f.r2 for f in fits)
    tied = [f for f in fits if f.r2 >= best_r2 - R2_TIE_TOL]
    return min(tied, key=key)


def rule_select(p_fuzzy: float, fit1, fit2, p_req: float, *, use_latest: bool = True):
    """Pick the battery power command from the competing fits or fall back.

    The candidate is the prediction of the higher-R² fit (mode 1 wins ties;
    either fit may be None during warm-up). The fuzzy value is used instead
    when the candidate's magnitude exceeds the demand or opposes its sign.
    Returns (power, tag).
    """
    if fit1 is None and fit2 is None:
        return p_fuzzy, TAG_FUZZY_FALLBACK
    if fit1 is None:
        chosen = fit2
    elif fit2 is None or fit1.r2 >= fit2.r2 - R2_TIE_TOL:
        chosen = fit1
    else:
        chosen = fit2
    candidate = chosen.latest_value if use_latest else chosen.center_value
    if abs(candidate) > abs(p_req) or candidate * p_req < 0.0:
        return p_fuzzy, TAG_FUZZY_FALLBACK
    return candidate, TAG_FILTERED
