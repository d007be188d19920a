"""Command-line interface.

Every flag has a config-file equivalent (JSON, via --config); explicit flags
override file values, and the effective configuration is echoed into the
results so a run can be reproduced from its output alone.  Exit codes: 0 on
success, 1 for configuration problems, 2 for I/O problems.  Certification
outcomes are never encoded in the exit code.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import io as lio
from .core import CertConfig, Metric, ThreatKind, ThreatModel
from .errors import ConfigError, IoFailureError, LefcertError
from .harness import generate_synthetic_pool, sample_episode, sweep as run_sweep
from .certify import certify_episode
from .collective import collective_certify
from .oracle import check_instance, draw_instance
from .plotting import render_sweep_figure

PRESETS = {
    "image": {"metric": "cosine", "lambda": 25.0},
    "graph": {"metric": "cosine", "lambda": 0.7},
    "smoothed": {
        "metric": "l2",
        "lambda": 0.4,
        "threat": "l2ball",
        "r": 0.1,
        "sigma": 1.0,
        "n": 1000,
        "alpha": 0.01,
    },
}


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IoFailureError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _merge(flag, cfgmap: dict, key: str, default=None):
    if flag is not None:
        return flag
    if key in cfgmap:
        return cfgmap[key]
    return default


def _require(value, key: str):
    if value is None:
        raise ConfigError(f"missing required parameter --{key.replace('_', '-')}")
    return value


def _resolve_jobs(flag) -> int:
    if flag is not None:
        jobs = int(flag)
    else:
        env = os.environ.get("LEFCERT_JOBS")
        if env is not None:
            try:
                jobs = int(env)
            except ValueError as exc:
                raise ConfigError(f"LEFCERT_JOBS={env!r} is not an integer") from exc
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _build_threat(cfgmap: dict, preset: dict, kind, r, sigma, n, alpha, no_hoeffding) -> ThreatModel:
    kind = _merge(kind, cfgmap, "threat", preset.get("threat", "unbounded"))
    if kind not in ("unbounded", "l2ball"):
        raise ConfigError(f"unknown threat kind {kind!r}")
    if kind == "unbounded":
        return ThreatModel()
    hoeffding = True
    if no_hoeffding:
        hoeffding = False
    elif "hoeffding" in cfgmap:
        hoeffding = bool(cfgmap["hoeffding"])
    return ThreatModel(
        kind=ThreatKind.L2_BALL,
        r=float(_require(_merge(r, cfgmap, "r", preset.get("r")), "r")),
        sigma=float(_require(_merge(sigma, cfgmap, "sigma", preset.get("sigma")), "sigma")),
        n_noise=int(_require(_merge(n, cfgmap, "n", preset.get("n")), "n")),
        alpha_conf=float(_require(_merge(alpha, cfgmap, "alpha", preset.get("alpha")), "alpha")),
        apply_hoeffding=hoeffding,
    )


def _build_cert_config(cfgmap, preset_name, metric, lam, m, t, threat_args) -> tuple[CertConfig, dict]:
    preset_key = preset_name if preset_name is not None else cfgmap.get("preset")
    if preset_key is None:
        preset = {}
    elif preset_key in PRESETS:
        preset = PRESETS[preset_key]
    else:
        raise ConfigError(f"unknown preset {preset_key!r}")
    metric_name = _merge(metric, cfgmap, "metric", preset.get("metric", "cosine"))
    if metric_name not in ("cosine", "l2"):
        raise ConfigError(f"unknown metric {metric_name!r}")
    lam_v = float(_merge(lam, cfgmap, "lambda", preset.get("lambda", 0.0)))
    m_v = int(_require(_merge(m, cfgmap, "m"), "m"))
    t_v = int(_require(_merge(t, cfgmap, "t"), "t"))
    threat = _build_threat(cfgmap, preset, *threat_args)
    try:
        cfg = CertConfig(
            lam=lam_v, m=m_v, metric=Metric(metric_name), threat=threat, budget=t_v
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    echo = {
        "metric": metric_name,
        "lambda": lam_v,
        "m": m_v,
        "t": t_v,
        "threat": {
            "kind": threat.kind.value,
            "r": threat.r,
            "sigma": threat.sigma,
            "n": threat.n_noise,
            "alpha": threat.alpha_conf,
            "hoeffding": threat.apply_hoeffding,
        },
    }
    return cfg, echo


def _scoring_options(f):
    opts = [
        click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
                     help="Named metric/lambda/threat bundle; explicit flags override."),
        click.option("--metric", type=click.Choice(["cosine", "l2"]), default=None),
        click.option("--lambda", "lam", type=float, default=None,
                     help="Weight of the text-distance term."),
        click.option("--m", type=int, default=None, help="Per-side trim count."),
        click.option("--t", type=int, default=None, help="Total poisoning budget."),
        click.option("--threat", "threat_kind", type=click.Choice(["unbounded", "l2ball"]),
                     default=None),
        click.option("--r", type=float, default=None, help="l2-ball radius in input space."),
        click.option("--sigma", type=float, default=None, help="Smoothing noise scale."),
        click.option("--n", "n_noise", type=int, default=None, help="Noise draws per input."),
        click.option("--alpha", type=float, default=None, help="Confidence slack alpha."),
        click.option("--no-hoeffding", is_flag=True, default=False,
                     help="Skip the estimation-error widening (ablation only)."),
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON file supplying any flag's value."),
        click.option("--jobs", type=int, default=None,
                     help="Worker threads; env LEFCERT_JOBS is the fallback."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _episode_options(f):
    opts = [
        click.option("--support", "support_path", type=click.Path(), default=None),
        click.option("--text", "text_path", type=click.Path(), default=None),
        click.option("--queries", "queries_path", type=click.Path(), default=None),
        click.option("--out", "out_path", type=click.Path(), default=None),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@click.group()
def cli():
    """Certified few-shot classification under support-set poisoning."""


def _load_cli_episode(cfgmap, support_path, text_path, queries_path, cfg: CertConfig):
    support = _require(_merge(support_path, cfgmap, "support"), "support")
    text = _require(_merge(text_path, cfgmap, "text"), "text")
    queries = _require(_merge(queries_path, cfgmap, "queries"), "queries")
    n_noise = cfg.threat.n_noise if cfg.threat.kind == ThreatKind.L2_BALL else None
    sigma = cfg.threat.sigma if cfg.threat.kind == ThreatKind.L2_BALL else 1.0
    e = lio.load_episode(support, text, queries, n_noise=n_noise, sigma=sigma)
    files_echo = {"support": support, "text": text, "queries": queries}
    return e, files_echo


def _episode_summary(e) -> dict:
    return {
        "classes": e.n_classes,
        "shots": e.n_shots,
        "queries": len(e.queries),
        "dim": e.dim,
        "label_names": list(e.label_names),
    }


@cli.command()
@_episode_options
@_scoring_options
def certify(support_path, text_path, queries_path, out_path, preset, metric, lam, m, t,
            threat_kind, r, sigma, n_noise, alpha, no_hoeffding, config_path, jobs):
    """Certify every query of one episode at budget T."""
    cfgmap = _load_config_file(config_path)
    cfg, echo = _build_cert_config(
        cfgmap, preset, metric, lam, m, t,
        (threat_kind, r, sigma, n_noise, alpha, no_hoeffding),
    )
    _resolve_jobs(jobs)
    e, files_echo = _load_cli_episode(cfgmap, support_path, text_path, queries_path, cfg)
    out = _require(_merge(out_path, cfgmap, "out"), "out")
    results = certify_episode(e, cfg)
    queries = []
    for qi, (cert, correct) in enumerate(results):
        true_label = e.queries[qi][1]
        queries.append(
            {
                "index": qi,
                "true_label": true_label,
                "predicted": cert.predicted,
                "correct": correct,
                "certified": cert.certified,
                "failing_split": None
                if cert.failing_split is None
                else {"t_pred": cert.failing_split[0], "class": cert.failing_split[1]},
                "bounds": {
                    "upper": cert.bound_table.upper,
                    "lower": cert.bound_table.lower,
                },
            }
        )
    labeled = [(c, ok) for (c, ok) in results if ok is not None]
    n_all = len(results)
    summary = {
        "clean_accuracy": (sum(ok for _, ok in labeled) / len(labeled)) if labeled else None,
        "certified_ratio": sum(c.certified for c, _ in results) / n_all,
        "certified_accuracy": (
            sum(1 for c, ok in labeled if ok and c.certified) / len(labeled)
        )
        if labeled
        else None,
    }
    payload = {
        "command": "certify",
        "config": {**echo, "files": files_echo},
        "episode": _episode_summary(e),
        "queries": queries,
        "summary": summary,
    }
    lio.write_results(payload, out)
    click.echo(
        f"certified {sum(c.certified for c, _ in results)}/{n_all} queries at T={cfg.budget} "
        f"-> {out}"
    )


@cli.command()
@_episode_options
@_scoring_options
def collective(support_path, text_path, queries_path, out_path, preset, metric, lam, m, t,
               threat_kind, r, sigma, n_noise, alpha, no_hoeffding, config_path, jobs):
    """Certify all queries of one episode against a single shared budget."""
    cfgmap = _load_config_file(config_path)
    cfg, echo = _build_cert_config(
        cfgmap, preset, metric, lam, m, t,
        (threat_kind, r, sigma, n_noise, alpha, no_hoeffding),
    )
    _resolve_jobs(jobs)
    e, files_echo = _load_cli_episode(cfgmap, support_path, text_path, queries_path, cfg)
    out = _require(_merge(out_path, cfgmap, "out"), "out")
    res = collective_certify(e, cfg)
    labels = [lbl for _, lbl in e.queries]
    correct_flags = None
    if all(lbl is not None for lbl in labels):
        per_query = certify_episode(e, cfg)
        correct_flags = [bool(ok) for _, ok in per_query]
    payload = {
        "command": "collective",
        "config": {**echo, "files": files_echo},
        "episode": _episode_summary(e),
        "collective": {
            "b_max": res.b_max,
            "allocation": list(res.allocation),
            "per_query_broken": list(res.per_query_broken),
            "certified_ratio": res.certified_ratio,
        },
        "summary": {
            "certified_ratio": res.certified_ratio,
            "certified_accuracy": None
            if correct_flags is None
            else sum(
                1 for ok, broken in zip(correct_flags, res.per_query_broken) if ok and not broken
            ) / len(labels),
        },
    }
    lio.write_results(payload, out)
    click.echo(
        f"worst allocation {res.allocation} breaks {res.b_max}/{len(labels)} queries -> {out}"
    )


@cli.command()
@click.option("--pool", "pool_path", type=click.Path(), default=None)
@click.option("--t-max", type=int, default=None)
@click.option("--m-list", default=None, help="Comma-separated trim counts.")
@click.option("--lambda-list", default=None, help="Comma-separated lambda values.")
@click.option("--episodes", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--protocol", type=click.Choice(["default", "collective"]), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--no-plot", is_flag=True, default=False, help="Skip the figure next to the CSV.")
@_scoring_options
def sweep(pool_path, t_max, m_list, lambda_list, episodes, seed, protocol, out_path, no_plot,
          preset, metric, lam, m, t, threat_kind, r, sigma, n_noise, alpha, no_hoeffding,
          config_path, jobs):
    """Grid of (M, lambda) cells over budgets 0..t-max, as CSV plus a figure."""
    cfgmap = _load_config_file(config_path)
    pool_dir = _require(_merge(pool_path, cfgmap, "pool"), "pool")
    t_max_v = int(_require(_merge(t_max, cfgmap, "t_max"), "t-max"))
    m_list_v = _parse_num_list(_require(_merge(m_list, cfgmap, "m_list"), "m-list"), int)
    lam_list_v = _parse_num_list(
        _require(_merge(lambda_list, cfgmap, "lambda_list"), "lambda-list"), float
    )
    episodes_v = int(_merge(episodes, cfgmap, "episodes", 10))
    seed_v = int(_merge(seed, cfgmap, "seed", 0))
    protocol_v = _merge(protocol, cfgmap, "protocol", "default")
    out = _require(_merge(out_path, cfgmap, "out"), "out")
    jobs_v = _resolve_jobs(jobs)
    cfg, echo = _build_cert_config(
        cfgmap, preset, metric, lam, m_list_v[0], t_max_v,
        (threat_kind, r, sigma, n_noise, alpha, no_hoeffding),
    )
    pool = lio.load_pool(pool_dir)
    n_classes = int(_merge(None, cfgmap, "episode_classes", 5))
    n_shots = int(_merge(None, cfgmap, "episode_shots", 10))
    qpc = cfgmap.get("queries_per_class")
    records = run_sweep(
        pool,
        cfg,
        t_values=list(range(t_max_v + 1)),
        m_values=m_list_v,
        lambda_values=lam_list_v,
        seed=seed_v,
        protocol=protocol_v,
        episodes=episodes_v,
        n_classes=n_classes,
        n_shots=n_shots,
        queries_per_class=qpc,
        jobs=jobs_v,
    )
    lio.write_sweep_csv([rec.as_row() for rec in records], out)
    sidecar = {
        "command": "sweep",
        "config": {
            **echo,
            "pool": pool_dir,
            "t_max": t_max_v,
            "m_list": m_list_v,
            "lambda_list": lam_list_v,
            "episodes": episodes_v,
            "seed": seed_v,
            "protocol": protocol_v,
            "episode_classes": n_classes,
            "episode_shots": n_shots,
        },
    }
    lio.write_results(sidecar, _sidecar_path(out))
    made = [out, _sidecar_path(out)]
    if not no_plot:
        fig_path = os.path.splitext(out)[0] + ".png"
        render_sweep_figure(records, fig_path)
        made.append(fig_path)
    click.echo(f"wrote {', '.join(made)}")


def _sidecar_path(out: str) -> str:
    return os.path.splitext(out)[0] + ".config.json"


def _parse_num_list(raw, kind):
    if isinstance(raw, (list, tuple)):
        return [kind(v) for v in raw]
    try:
        return [kind(part) for part in str(raw).split(",") if part != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {raw!r}") from exc


@cli.command("oracle-check")
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--grid-steps", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def oracle_check_cmd(trials, seed, grid_steps, out_path, config_path):
    """Brute-force containment checks on randomly drawn instances."""
    cfgmap = _load_config_file(config_path)
    trials_v = int(_merge(trials, cfgmap, "trials", 100))
    seed_v = int(_merge(seed, cfgmap, "seed", 0))
    steps_v = int(_merge(grid_steps, cfgmap, "grid_steps", 5))
    out = _require(_merge(out_path, cfgmap, "out"), "out")
    if trials_v < 1:
        raise ConfigError(f"trials must be >= 1, got {trials_v}")
    violations = []
    checks = 0
    max_gap = 0.0
    lemma1_failures = 0
    certified = 0
    flipped = 0
    for i in range(trials_v):
        p, q, d_text, cfg = draw_instance(np.random.SeedSequence(entropy=seed_v, spawn_key=(i,)))
        res = check_instance(p, q, d_text, cfg, grid_steps=steps_v)
        checks += res.checks
        violations.extend(f"instance {i}: {v}" for v in res.violations)
        max_gap = max(max_gap, res.max_tightness_gap)
        lemma1_failures += 0 if res.lemma1_ok else 1
        certified += int(res.certified)
        flipped += int(res.flipped)
    payload = {
        "command": "oracle-check",
        "config": {"trials": trials_v, "seed": seed_v, "grid_steps": steps_v},
        "report": {
            "instances": trials_v,
            "checks": checks,
            "violations": violations,
            "max_tightness_gap": max_gap,
            "lemma1_failures": lemma1_failures,
            "certified_instances": certified,
            "flipped_instances": flipped,
        },
        "ok": not violations and lemma1_failures == 0 and flipped == 0,
    }
    lio.write_results(payload, out)
    status = "ok" if payload["ok"] else f"{len(violations)} violations"
    click.echo(f"{trials_v} instances, {checks} checks, {status} -> {out}")
    if not payload["ok"]:
        raise ConfigError("oracle found violations; see report")


@cli.command("gen-synthetic")
@click.option("--classes", "n_classes", type=int, default=None)
@click.option("--per-class", type=int, default=None)
@click.option("--dim", type=int, default=None)
@click.option("--spread", type=float, default=None, help="Within-class noise scale.")
@click.option("--gap", type=float, default=None, help="Minimum anchor separation (l2).")
@click.option("--text-offset", type=float, default=None, help="Text anchor noise scale.")
@click.option("--seed", type=int, default=None)
@click.option("--shots", type=int, default=None, help="Episode shots per class.")
@click.option("--queries-per-class", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def gen_synthetic(n_classes, per_class, dim, spread, gap, text_offset, seed, shots,
                  queries_per_class, out_path, config_path):
    """Generate a synthetic pool directory plus a ready-to-certify episode."""
    cfgmap = _load_config_file(config_path)
    n_classes_v = int(_merge(n_classes, cfgmap, "classes", 5))
    per_class_v = int(_merge(per_class, cfgmap, "per_class", 20))
    dim_v = int(_merge(dim, cfgmap, "dim", 64))
    spread_v = float(_merge(spread, cfgmap, "spread", 0.1))
    gap_v = float(_merge(gap, cfgmap, "gap", 0.8))
    text_v = float(_merge(text_offset, cfgmap, "text_offset", 0.1))
    seed_v = int(_merge(seed, cfgmap, "seed", 0))
    qpc_v = int(_merge(queries_per_class, cfgmap, "queries_per_class", 1))
    shots_v = _merge(shots, cfgmap, "shots")
    if shots_v is None:
        shots_v = min(10, per_class_v - qpc_v)
    shots_v = int(shots_v)
    out = _require(_merge(out_path, cfgmap, "out"), "out")

    pool = generate_synthetic_pool(
        n_classes_v, per_class_v, dim_v, spread_v, gap_v, text_v, seed_v
    )
    os.makedirs(out, exist_ok=True)
    lio.save_pool(pool, out)
    episode = sample_episode(pool, n_classes_v, shots_v, qpc_v, seed_v)
    lio.save_episode(episode, out)
    manifest = {
        "command": "gen-synthetic",
        "config": {
            "classes": n_classes_v,
            "per_class": per_class_v,
            "dim": dim_v,
            "spread": spread_v,
            "gap": gap_v,
            "text_offset": text_v,
            "seed": seed_v,
            "shots": shots_v,
            "queries_per_class": qpc_v,
        },
        "files": {
            "features": "features.lefc",
            "text": "text.lefc",
            "support": "support.lefc",
            "queries": "queries.lefc",
        },
    }
    lio.write_results(manifest, os.path.join(out, "manifest.json"))
    click.echo(f"pool and episode written under {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except LefcertError as exc:
        click.echo(str(exc), err=True)
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"CONFIG_INVALID: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"CONFIG_INVALID: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
