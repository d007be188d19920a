"""Brute-force attack enumeration used to validate the bound formulas.

The oracle perturbs distances, not embeddings: replacing a poisoned shot can
move its two distance contributions anywhere in [0, range_max], and letting
the p-replacements and q-replacements pick their entries independently
over-approximates every embedding-realizable attack, so any score the bounds
fail to contain is a genuine soundness bug.  Under the displacement model the
two distances of a selected shot shift independently within [-delta, +delta]
but share one index set.

Enumeration runs over index sets of size exactly tc; attacks that touch fewer
entries are covered by the checks at the smaller budgets, and extreme values
sit on the grid endpoints, so scanning every tc in 0..T covers the full
attack space up to grid resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .bounds import lipschitz_constant, table_from_bundle
from .certify import certify_sample
from .core import (
    CertConfig,
    Episode,
    Metric,
    ScoreBundle,
    ThreatKind,
    ThreatModel,
    validate_episode,
)
from .distance import metric_info
from .errors import (
    BudgetExceedsKError,
    ConfigTooLargeError,
    InvalidParameterError,
)
from .scoring import build_score_bundle, check_trim, episode_max_norm, scores_from_bundle

__all__ = [
    "AttackAction",
    "ExtremalScores",
    "InstanceCheck",
    "OracleReport",
    "extremal_scores",
    "check_instance",
    "draw_instance",
    "oracle_check",
]

ENUM_LIMIT = 10**7
_ROW_BUDGET = 1 << 18

_set_cache: dict[tuple[int, int], np.ndarray] = {}
_val_cache: dict[tuple[float, float, int, int], np.ndarray] = {}


@dataclass(frozen=True)
class AttackAction:
    """Grid attack: replaced (or shifted) entries and the values used.

    Replacement attacks may pick different entries for p and q; displacement
    attacks share the index set and the values are signed shifts.
    """

    p_indices: tuple[int, ...]
    p_values: tuple[float, ...]
    q_indices: tuple[int, ...]
    q_values: tuple[float, ...]


@dataclass(frozen=True)
class ExtremalScores:
    min_score: float
    max_score: float
    argmin_action: AttackAction
    argmax_action: AttackAction


@dataclass(frozen=True)
class InstanceCheck:
    """Outcome of the full enumeration against one instance's bound table."""

    violations: tuple[str, ...]
    max_tightness_gap: float
    lemma1_ok: bool
    certified: bool
    flipped: bool
    checks: int


@dataclass(frozen=True)
class OracleReport:
    queries_checked: int
    checks: int
    trials: int
    violations: tuple[str, ...]
    max_tightness_gap: float
    lemma1_failures: int
    certified_queries: int
    flipped_queries: int
    grid_steps: int
    seed: int


def _sets(k: int, tc: int) -> np.ndarray:
    key = (k, tc)
    if key not in _set_cache:
        rows = list(combinations(range(k), tc))
        # explicit shape: reshape(-1, 0) cannot infer the row count at tc=0
        _set_cache[key] = np.array(rows, dtype=np.intp).reshape(len(rows), tc)
    return _set_cache[key]


def _vals(lo: float, hi: float, steps: int, tc: int) -> np.ndarray:
    key = (lo, hi, steps, tc)
    if key not in _val_cache:
        grid = np.linspace(lo, hi, steps)
        rows = list(product(grid, repeat=tc))
        _val_cache[key] = np.array(rows).reshape(len(rows), tc)
    return _val_cache[key]


def check_enum_guard(k: int, tc: int, grid_steps: int) -> None:
    if tc and math.comb(k, tc) * grid_steps ** (2 * tc) > ENUM_LIMIT:
        raise ConfigTooLargeError(
            f"C({k},{tc}) * {grid_steps}^{2 * tc} exceeds the {ENUM_LIMIT} enumeration limit"
        )


def adapted_grid_steps(k: int, tc: int, requested: int) -> int:
    """Largest grid size <= requested that fits the enumeration guard."""
    if tc == 0:
        return max(2, requested)
    steps = max(2, requested)
    while steps > 2 and math.comb(k, tc) * steps ** (2 * tc) > ENUM_LIMIT:
        steps -= 1
    check_enum_guard(k, tc, steps)
    return steps


def _term_scan(seq: np.ndarray, m: int, tc: int, vals: np.ndarray, clamp: tuple[float, float] | None):
    """Min and max of the trimmed window sum over all (index set, value tuple)
    attacks on one sequence.  ``vals`` holds replacement values, or shifts when
    ``clamp`` is given.  Returns per-set min/max arrays plus global argmins."""
    k = seq.shape[0]
    sets = _sets(k, tc)
    n_sets, n_vals = sets.shape[0], vals.shape[0]
    window = slice(m, k - m)
    per_set_min = np.empty(n_sets)
    per_set_max = np.empty(n_sets)
    argmin_val = np.empty(n_sets, dtype=np.intp)
    argmax_val = np.empty(n_sets, dtype=np.intp)
    chunk = max(1, _ROW_BUDGET // max(1, n_vals))
    for start in range(0, n_sets, chunk):
        sub = sets[start : start + chunk]
        rows = sub.shape[0]
        big = np.broadcast_to(seq, (rows, n_vals, k)).copy()
        if tc:
            r_idx = np.arange(rows)[:, None, None]
            v_idx = np.arange(n_vals)[None, :, None]
            c_idx = sub[:, None, :]
            if clamp is None:
                big[r_idx, v_idx, c_idx] = vals[None, :, :]
            else:
                big[r_idx, v_idx, c_idx] += vals[None, :, :]
                np.clip(big, clamp[0], clamp[1], out=big)
        big.sort(axis=2)
        sums = big[:, :, window].sum(axis=2)
        per_set_min[start : start + rows] = sums.min(axis=1)
        per_set_max[start : start + rows] = sums.max(axis=1)
        argmin_val[start : start + rows] = sums.argmin(axis=1)
        argmax_val[start : start + rows] = sums.argmax(axis=1)
    return sets, per_set_min, per_set_max, argmin_val, argmax_val


def _term_action(sets, vals, set_idx, val_idx) -> tuple[tuple[int, ...], tuple[float, ...]]:
    return (
        tuple(int(i) for i in sets[set_idx]),
        tuple(float(v) for v in vals[val_idx]),
    )


def extremal_scores(
    p_raw,
    q_raw,
    d_text: float,
    cfg: CertConfig,
    tc: int,
    grid_steps: int = 21,
    range_max: float = 2.0,
) -> ExtremalScores:
    """Exact grid extremes of the attacked score at per-class budget tc."""
    p = np.asarray(p_raw, dtype=np.float64)
    q = np.asarray(q_raw, dtype=np.float64)
    k = p.shape[0]
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidParameterError("p_raw and q_raw must be matching 1-D sequences")
    if tc < 0:
        raise InvalidParameterError(f"tc must be >= 0, got {tc}")
    if tc > k:
        raise BudgetExceedsKError(f"tc={tc} exceeds K={k}")
    if grid_steps < 2:
        raise InvalidParameterError(f"grid_steps must be >= 2, got {grid_steps}")
    if math.isinf(range_max):
        raise InvalidParameterError("the oracle needs a finite range_max to grid")
    check_trim(k, cfg.m)
    check_enum_guard(k, tc, grid_steps)
    coef = cfg.lam / (k - 2 * cfg.m) * d_text

    if cfg.threat.kind == ThreatKind.UNBOUNDED:
        vals = _vals(0.0, range_max, grid_steps, tc)
        sets_p, pmin, pmax, p_argmin, p_argmax = _term_scan(p, cfg.m, tc, vals, None)
        pi_min, pi_max = int(pmin.argmin()), int(pmax.argmax())
        if coef > 0.0:
            sets_q, qmin, qmax, q_argmin, q_argmax = _term_scan(q, cfg.m, tc, vals, None)
            qi_min, qi_max = int(qmin.argmin()), int(qmax.argmax())
            min_score = float(pmin[pi_min] + coef * qmin[qi_min])
            max_score = float(pmax[pi_max] + coef * qmax[qi_max])
            amin_q = _term_action(sets_q, vals, qi_min, q_argmin[qi_min])
            amax_q = _term_action(sets_q, vals, qi_max, q_argmax[qi_max])
        else:
            min_score = float(pmin[pi_min])
            max_score = float(pmax[pi_max])
            amin_q = amax_q = ((), ())
        amin_p = _term_action(sets_p, vals, pi_min, p_argmin[pi_min])
        amax_p = _term_action(sets_p, vals, pi_max, p_argmax[pi_max])
        return ExtremalScores(
            min_score=min_score,
            max_score=max_score,
            argmin_action=AttackAction(*amin_p, *amin_q),
            argmax_action=AttackAction(*amax_p, *amax_q),
        )

    delta = lipschitz_constant(cfg.threat.sigma) * cfg.threat.r
    vals = _vals(-delta, delta, grid_steps, tc)
    clamp = (0.0, range_max)
    sets_p, pmin, pmax, p_argmin, p_argmax = _term_scan(p, cfg.m, tc, vals, clamp)
    _, qmin, qmax, q_argmin, q_argmax = _term_scan(q, cfg.m, tc, vals, clamp)
    # the index set is shared, but shifts act on p and q independently,
    # so per set the extremes combine additively
    total_min = pmin + coef * qmin
    total_max = pmax + coef * qmax
    si_min, si_max = int(total_min.argmin()), int(total_max.argmax())
    amin_p = _term_action(sets_p, vals, si_min, p_argmin[si_min])
    amin_q = _term_action(sets_p, vals, si_min, q_argmin[si_min])
    amax_p = _term_action(sets_p, vals, si_max, p_argmax[si_max])
    amax_q = _term_action(sets_p, vals, si_max, q_argmax[si_max])
    return ExtremalScores(
        min_score=float(total_min[si_min]),
        max_score=float(total_max[si_max]),
        argmin_action=AttackAction(*amin_p, *amin_q),
        argmax_action=AttackAction(*amax_p, *amax_q),
    )


def _canonical_min_term(seq_sorted: np.ndarray, m: int, tc: int) -> float:
    """Lemma check value: replace the tc largest entries with 0 and re-trim."""
    k = seq_sorted.shape[0]
    replaced = np.concatenate([np.zeros(tc), seq_sorted[: k - tc]])
    return float(replaced[m : k - m].sum())


def check_instance(
    p_rows,
    q_rows,
    d_text,
    cfg: CertConfig,
    grid_steps: int = 3,
    range_max: float = 2.0,
) -> InstanceCheck:
    """Run the full oracle battery against one instance.

    Checks, for every class and every per-class budget up to cfg.budget:
    containment of the enumerated extremes in the bound table, exactness for
    budgets at most m under replacement, agreement of the enumerated minimum
    with the replace-largest-with-zero canonical attack, and, when the sample
    certifies, that no enumerated attack allocation flips the prediction.
    """
    p_arr = np.asarray(p_rows, dtype=np.float64)
    q_arr = np.asarray(q_rows, dtype=np.float64)
    d_arr = np.asarray(d_text, dtype=np.float64)
    bundle = ScoreBundle(
        p=np.sort(p_arr, axis=1),
        q=np.sort(q_arr, axis=1),
        d_text=d_arr,
        range_max=range_max,
        p_raw=p_arr,
        q_raw=q_arr,
    )
    c, k = bundle.n_classes, bundle.n_shots
    table = table_from_bundle(bundle, cfg)
    scores = scores_from_bundle(bundle, cfg)
    budget = cfg.budget
    unbounded = cfg.threat.kind == ThreatKind.UNBOUNDED

    violations: list[str] = []
    max_gap = 0.0
    lemma1_ok = True
    checks = 0
    omin = np.empty((c, budget + 1))
    omax = np.empty((c, budget + 1))
    eps = 1e-9
    for ci in range(c):
        for tc in range(budget + 1):
            tc_eff = min(tc, k)
            steps = adapted_grid_steps(k, tc_eff, grid_steps)
            ext = extremal_scores(
                p_arr[ci], q_arr[ci], float(d_arr[ci]), cfg, tc_eff, steps, range_max
            )
            omin[ci, tc], omax[ci, tc] = ext.min_score, ext.max_score
            checks += 1
            lo, up = table.lower[ci, tc], table.upper[ci, tc]
            if ext.min_score < lo - eps:
                violations.append(
                    f"class {ci + 1} tc {tc}: oracle min {ext.min_score!r} below lower {lo!r}"
                )
            if ext.max_score > up + eps:
                violations.append(
                    f"class {ci + 1} tc {tc}: oracle max {ext.max_score!r} above upper {up!r}"
                )
            if unbounded and tc <= cfg.m:
                max_gap = max(max_gap, up - ext.max_score, ext.min_score - lo)
            if unbounded and tc_eff:
                coef = cfg.lam / (k - 2 * cfg.m) * float(d_arr[ci])
                canon = _canonical_min_term(bundle.p[ci], cfg.m, tc_eff)
                if coef > 0.0:
                    canon += coef * _canonical_min_term(bundle.q[ci], cfg.m, tc_eff)
                if abs(canon - ext.min_score) > 1e-9:
                    lemma1_ok = False

    cert = certify_sample(scores, table, budget)
    flipped = False
    if cert.certified:
        yi = cert.predicted - 1
        for t_pred in range(budget + 1):
            rem = budget - t_pred
            for other in range(c):
                if other == yi:
                    continue
                worst_pred = omax[yi, t_pred]
                best_rival = omin[other, rem]
                if worst_pred > best_rival or (worst_pred == best_rival and other < yi):
                    flipped = True
    return InstanceCheck(
        violations=tuple(violations),
        max_tightness_gap=max_gap,
        lemma1_ok=lemma1_ok,
        certified=cert.certified,
        flipped=flipped,
        checks=checks,
    )


def _random_attack_score(
    rng: np.random.Generator,
    p: np.ndarray,
    q: np.ndarray,
    d_text: float,
    cfg: CertConfig,
    tc: int,
    grid_steps: int,
    range_max: float,
) -> float:
    """Score of one randomly drawn grid attack."""
    k = p.shape[0]
    m = cfg.m
    coef = cfg.lam / (k - 2 * m) * d_text
    if cfg.threat.kind == ThreatKind.UNBOUNDED:
        grid = np.linspace(0.0, range_max, grid_steps)
        pm = p.copy()
        qm = q.copy()
        if tc:
            pm[rng.choice(k, size=tc, replace=False)] = rng.choice(grid, size=tc)
            qm[rng.choice(k, size=tc, replace=False)] = rng.choice(grid, size=tc)
    else:
        delta = lipschitz_constant(cfg.threat.sigma) * cfg.threat.r
        grid = np.linspace(-delta, delta, grid_steps)
        pm = p.copy()
        qm = q.copy()
        if tc:
            idx = rng.choice(k, size=tc, replace=False)
            pm[idx] = np.clip(pm[idx] + rng.choice(grid, size=tc), 0.0, range_max)
            qm[idx] = np.clip(qm[idx] + rng.choice(grid, size=tc), 0.0, range_max)
    pm.sort()
    qm.sort()
    return float(pm[m : k - m].sum() + coef * qm[m : k - m].sum())


def oracle_check(
    e: Episode,
    cfg: CertConfig,
    trials: int = 0,
    seed: int = 0,
    grid_steps: int = 21,
) -> OracleReport:
    """Systematically verify every query of an episode, then fuzz.

    Each query gets the full :func:`check_instance` battery; ``trials`` extra
    randomly drawn grid attacks (seeded, reproducible) are then checked for
    containment.  The report is deterministic for a fixed seed.
    """
    validate_episode(e)
    minfo = metric_info(cfg.metric, episode_max_norm(e))
    if math.isinf(minfo.range_max):
        raise InvalidParameterError("oracle checks need a bounded metric range")
    rng = np.random.Generator(np.random.PCG64(seed))
    violations: list[str] = []
    checks = 0
    max_gap = 0.0
    lemma1_failures = 0
    certified = 0
    flipped = 0
    bundles = []
    tables = []
    for qi in range(len(e.queries)):
        bundle = build_score_bundle(e, qi, minfo)
        bundles.append(bundle)
        tables.append(table_from_bundle(bundle, cfg))
        res = check_instance(
            bundle.p_raw, bundle.q_raw, bundle.d_text, cfg, grid_steps, minfo.range_max
        )
        checks += res.checks
        violations.extend(f"query {qi}: {v}" for v in res.violations)
        max_gap = max(max_gap, res.max_tightness_gap)
        lemma1_failures += 0 if res.lemma1_ok else 1
        certified += int(res.certified)
        flipped += int(res.flipped)

    k = e.n_shots
    for _ in range(trials):
        qi = int(rng.integers(len(e.queries)))
        ci = int(rng.integers(e.n_classes))
        tc = int(rng.integers(min(cfg.budget, k) + 1))
        steps = adapted_grid_steps(k, tc, grid_steps)
        bundle = bundles[qi]
        score = _random_attack_score(
            rng,
            bundle.p_raw[ci].copy(),
            bundle.q_raw[ci].copy(),
            float(bundle.d_text[ci]),
            cfg,
            tc,
            steps,
            minfo.range_max,
        )
        lo, up = tables[qi].lower[ci, tc], tables[qi].upper[ci, tc]
        if not (lo - 1e-9 <= score <= up + 1e-9):
            violations.append(
                f"trial query {qi} class {ci + 1} tc {tc}: score {score!r} outside [{lo!r}, {up!r}]"
            )
    return OracleReport(
        queries_checked=len(e.queries),
        checks=checks,
        trials=trials,
        violations=tuple(violations),
        max_tightness_gap=max_gap,
        lemma1_failures=lemma1_failures,
        certified_queries=certified,
        flipped_queries=flipped,
        grid_steps=grid_steps,
        seed=seed,
    )


def draw_instance(
    seed: int | np.random.SeedSequence,
    max_classes: int = 3,
    max_shots: int = 7,
    max_trim: int = 2,
    allow_l2ball: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, CertConfig]:
    """Draw a random small instance (raw distance rows plus config).

    Sizes stay within the enumeration guard so the returned instance can be
    checked exhaustively.  The same seed always yields the same instance.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    c = int(rng.integers(2, max_classes + 1))
    k = int(rng.integers(3, max_shots + 1))
    m = int(rng.integers(0, min(max_trim, (k - 1) // 2) + 1))
    budget = int(rng.integers(0, k - m))
    lam = float(rng.choice([0.0, 0.5, 5.0, 25.0]))
    use_l2ball = allow_l2ball and rng.integers(4) == 0
    if use_l2ball:
        metric = Metric.L2
        threat = ThreatModel(
            kind=ThreatKind.L2_BALL,
            r=0.1,
            sigma=1.0,
            n_noise=1000,
            alpha_conf=0.01,
            apply_hoeffding=bool(rng.integers(2)),
        )
    else:
        metric = Metric.COSINE if rng.integers(2) == 0 else Metric.L2
        threat = ThreatModel()
    cfg = CertConfig(lam=lam, m=m, metric=metric, threat=threat, budget=budget)
    p = rng.uniform(0.0, 2.0, size=(c, k))
    q = rng.uniform(0.0, 2.0, size=(c, k))
    d_text = rng.uniform(0.0, 2.0, size=c)
    return p, q, d_text, cfg
