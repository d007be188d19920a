"""Worst-case score bounds under poisoning.

Two bound families cover the two threat models:

* ``closed_form_bounds`` handles unbounded replacement of up to T_c support
  shots of one class.  Because the score is a trimmed window sum of ascending
  distances, the worst case is a pure window shift while T_c <= M; past that
  the attacker pushes replaced distances to the range edge and the window
  absorbs ``range_max`` (or diverges when the metric range is unbounded).

* ``traversal_bounds`` handles the displacement model where each poisoned
  shot can move both of its distances by at most ``delta``.  It enumerates the
  candidate index sets, re-sorts, and takes the worst trimmed score, keeping
  the pairing between a shot's two distances intact.  Results are clamped so
  they are never looser than the replacement bounds on the same inputs.

``lipschitz_constant`` and ``hoeffding_deviation`` supply the displacement
radius and the estimation slack used by the smoothed-embedding pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .core import CertConfig, Episode, ScoreBundle, ThreatKind
from .distance import metric_info
from .errors import (
    BudgetExceedsKError,
    ConfigTooLargeError,
    InvalidParameterError,
    LabelOutOfRangeError,
    NonpositiveSigmaError,
)
from .scoring import build_score_bundle, check_trim, episode_max_norm

TRAVERSAL_SET_LIMIT = 10**6
_CHUNK = 1 << 14


@dataclass(frozen=True)
class BoundTable:
    """Per-class score bounds for every per-class budget 0..T.

    upper[c][t] / lower[c][t] bound the attacked score of class c+1 when
    exactly t of its shots are poisoned.  +inf marks budgets with no finite
    upper bound.
    """

    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        up = np.array(self.upper, dtype=np.float64)
        lo = np.array(self.lower, dtype=np.float64)
        up.setflags(write=False)
        lo.setflags(write=False)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)

    @property
    def n_classes(self) -> int:
        return self.upper.shape[0]

    @property
    def budget(self) -> int:
        return self.upper.shape[1] - 1


def lipschitz_constant(sigma: float) -> float:
    """Lipschitz constant sqrt(2 / (pi * sigma^2)) of the smoothed encoder."""
    if sigma <= 0:
        raise NonpositiveSigmaError(f"sigma={sigma}")
    return math.sqrt(2.0 / (math.pi * sigma * sigma))


def hoeffding_deviation(n: int, alpha_conf: float, range_width: float) -> float:
    """Deviation bound for the mean of n values spanning range_width.

    t = range_width * sqrt(ln(2 / alpha_conf) / (2n)); the true mean lies
    within +-t of the empirical mean with probability at least 1 - alpha_conf.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if not (0.0 < alpha_conf < 1.0):
        raise InvalidParameterError(f"alpha_conf must lie in (0, 1), got {alpha_conf}")
    if range_width <= 0:
        raise InvalidParameterError(f"range_width must be positive, got {range_width}")
    return range_width * math.sqrt(math.log(2.0 / alpha_conf) / (2.0 * n))


def _window_extremes(s: np.ndarray, m: int, tc: int, range_max: float) -> tuple[float, float]:
    """Worst-case (lo, hi) of the trimmed window sum of one ascending sequence
    when tc entries are replaced arbitrarily inside [0, range_max]."""
    k = s.shape[0]
    if tc == 0:
        full = float(s[m : k - m].sum())
        return full, full
    if tc <= m:
        hi = float(s[m + tc : k - m + tc].sum())
        lo = float(s[m - tc : k - m - tc].sum())
        return lo, hi
    if tc <= k - m - 1:
        lo = float(s[0 : k - m - tc].sum())
        if math.isinf(range_max):
            return lo, math.inf
        hi = float(s[m + tc : k].sum()) + range_max * (tc - m)
        return lo, hi
    return 0.0, math.inf


def closed_form_bounds(bundle: ScoreBundle, c: int, cfg: CertConfig, tc: int) -> tuple[float, float]:
    """(lower, upper) for the score of 1-based class ``c`` with ``tc`` shots poisoned."""
    if not (1 <= c <= bundle.n_classes):
        raise LabelOutOfRangeError(f"class {c} out of 1..{bundle.n_classes}")
    if tc < 0:
        raise InvalidParameterError(f"tc must be >= 0, got {tc}")
    k = bundle.n_shots
    check_trim(k, cfg.m)
    ci = c - 1
    p_lo, p_hi = _window_extremes(bundle.p[ci], cfg.m, tc, bundle.range_max)
    q_lo, q_hi = _window_extremes(bundle.q[ci], cfg.m, tc, bundle.range_max)
    coef = cfg.lam / (k - 2 * cfg.m) * bundle.d_text[ci]
    # coef == 0 must not turn an infinite q bound into nan
    lower = p_lo + (coef * q_lo if coef > 0.0 else 0.0)
    upper = p_hi + (coef * q_hi if coef > 0.0 else 0.0)
    return lower, upper


def _closed_form_from_raw(
    p_raw: np.ndarray, q_raw: np.ndarray, d_text: float, cfg: CertConfig, tc: int, range_max: float
) -> tuple[float, float]:
    bundle = ScoreBundle(
        p=np.sort(p_raw)[None, :],
        q=np.sort(q_raw)[None, :],
        d_text=np.array([d_text]),
        range_max=range_max,
        p_raw=p_raw[None, :],
        q_raw=q_raw[None, :],
    )
    return closed_form_bounds(bundle, 1, cfg, tc)


def _traversal_extreme(
    p_raw: np.ndarray,
    q_raw: np.ndarray,
    d_text: float,
    lam: float,
    m: int,
    tc: int,
    delta: float,
    side: str,
) -> float:
    """Worst trimmed score over all index sets of size tc, shifting both
    distances of every selected shot by +delta (side='upper') or -delta
    clamped at zero (side='lower')."""
    k = p_raw.shape[0]
    coef = lam / (k - 2 * m) * d_text
    window = slice(m, k - m)
    sign = 1.0 if side == "upper" else -1.0
    best = -math.inf if side == "upper" else math.inf
    sets = combinations(range(k), tc)
    while True:
        chunk = list(islice(sets, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        rows = idx.shape[0]
        shift = np.zeros((rows, k))
        if tc:
            shift[np.arange(rows)[:, None], idx] = sign * delta
        p_mod = p_raw[None, :] + shift
        q_mod = q_raw[None, :] + shift
        if side == "lower":
            np.maximum(p_mod, 0.0, out=p_mod)
            np.maximum(q_mod, 0.0, out=q_mod)
        p_mod.sort(axis=1)
        q_mod.sort(axis=1)
        scores = p_mod[:, window].sum(axis=1) + coef * q_mod[:, window].sum(axis=1)
        if side == "upper":
            best = max(best, float(scores.max()))
        else:
            best = min(best, float(scores.min()))
    return best


def _check_traversal_args(p_arr: np.ndarray, q_arr: np.ndarray, cfg: CertConfig, tc: int, delta: float) -> None:
    k = p_arr.shape[0]
    if p_arr.shape != q_arr.shape or p_arr.ndim != 1:
        raise InvalidParameterError("p_raw and q_raw must be matching 1-D sequences")
    if tc < 0:
        raise InvalidParameterError(f"tc must be >= 0, got {tc}")
    if tc > k:
        raise BudgetExceedsKError(f"tc={tc} exceeds K={k}")
    if delta < 0:
        raise InvalidParameterError(f"delta must be >= 0, got {delta}")
    check_trim(k, cfg.m)
    if math.comb(k, tc) > TRAVERSAL_SET_LIMIT:
        raise ConfigTooLargeError(
            f"C({k},{tc}) index sets exceed the {TRAVERSAL_SET_LIMIT} traversal limit"
        )


def traversal_bounds(
    p_raw,
    q_raw,
    d_text: float,
    cfg: CertConfig,
    tc: int,
    delta: float,
    range_max: float = 2.0,
) -> tuple[float, float]:
    """(lower, upper) under the displacement model, never looser than the
    replacement bounds for the same inputs."""
    p_arr = np.asarray(p_raw, dtype=np.float64)
    q_arr = np.asarray(q_raw, dtype=np.float64)
    _check_traversal_args(p_arr, q_arr, cfg, tc, delta)
    upper = _traversal_extreme(p_arr, q_arr, d_text, cfg.lam, cfg.m, tc, delta, "upper")
    lower = _traversal_extreme(p_arr, q_arr, d_text, cfg.lam, cfg.m, tc, delta, "lower")
    cf_lo, cf_hi = _closed_form_from_raw(p_arr, q_arr, d_text, cfg, tc, range_max)
    return max(lower, cf_lo), min(upper, cf_hi)


def inflate_bundle_hoeffding(bundle: ScoreBundle, t: float) -> tuple[ScoreBundle, ScoreBundle]:
    """Account for +-t estimation error on every distance.

    Returns (b_lo, b_hi): b_hi shifts every p, q, d_text entry up by t clamped
    at range_max, b_lo shifts down by t clamped at 0.  Upper bounds computed
    from b_hi and lower bounds from b_lo are then valid for the true distances.
    """
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    cap = bundle.range_max

    def shifted(sign: float) -> ScoreBundle:
        def adj(a):
            out = np.asarray(a, dtype=np.float64) + sign * t
            np.maximum(out, 0.0, out=out)
            if not math.isinf(cap):
                np.minimum(out, cap, out=out)
            return out

        return ScoreBundle(
            p=adj(bundle.p),
            q=adj(bundle.q),
            d_text=adj(bundle.d_text),
            range_max=cap,
            p_raw=adj(bundle.p_raw),
            q_raw=adj(bundle.q_raw),
        )

    return shifted(-1.0), shifted(+1.0)


def table_from_bundle(bundle: ScoreBundle, cfg: CertConfig) -> BoundTable:
    """Bound table over per-class budgets 0..cfg.budget for one query."""
    c, k = bundle.n_classes, bundle.n_shots
    check_trim(k, cfg.m)
    t_max = cfg.budget
    upper = np.empty((c, t_max + 1))
    lower = np.empty((c, t_max + 1))
    if cfg.threat.kind == ThreatKind.UNBOUNDED:
        for ci in range(c):
            for tc in range(t_max + 1):
                lower[ci, tc], upper[ci, tc] = closed_form_bounds(bundle, ci + 1, cfg, tc)
        return BoundTable(upper=upper, lower=lower)

    delta = lipschitz_constant(cfg.threat.sigma) * cfg.threat.r
    t_dev = (
        hoeffding_deviation(cfg.threat.n_noise, cfg.threat.alpha_conf, 2.0)
        if cfg.threat.apply_hoeffding
        else 0.0
    )
    b_lo, b_hi = inflate_bundle_hoeffding(bundle, t_dev)
    for ci in range(c):
        for tc in range(t_max + 1):
            # a class only has k shots; budget beyond that cannot hurt it further
            tc_eff = min(tc, k)
            p_hi, q_hi, d_hi = b_hi.p_raw[ci], b_hi.q_raw[ci], float(b_hi.d_text[ci])
            _check_traversal_args(p_hi, q_hi, cfg, tc_eff, delta)
            up = _traversal_extreme(p_hi, q_hi, d_hi, cfg.lam, cfg.m, tc_eff, delta, "upper")
            _, cf_hi = _closed_form_from_raw(p_hi, q_hi, d_hi, cfg, tc_eff, bundle.range_max)
            upper[ci, tc] = min(up, cf_hi)

            p_lo, q_lo, d_lo = b_lo.p_raw[ci], b_lo.q_raw[ci], float(b_lo.d_text[ci])
            lo = _traversal_extreme(p_lo, q_lo, d_lo, cfg.lam, cfg.m, tc_eff, delta, "lower")
            cf_lo, _ = _closed_form_from_raw(p_lo, q_lo, d_lo, cfg, tc_eff, bundle.range_max)
            lower[ci, tc] = max(lo, cf_lo)
    return BoundTable(upper=upper, lower=lower)


def build_bound_table(e: Episode, query_index: int, cfg: CertConfig) -> BoundTable:
    minfo = metric_info(cfg.metric, episode_max_norm(e))
    bundle = build_score_bundle(e, query_index, minfo)
    return table_from_bundle(bundle, cfg)
