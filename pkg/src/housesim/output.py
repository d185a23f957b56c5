"""Result emission: hash-stamped CSVs, the run manifest, and plot data.

Every output CSV begins with a ``# experiment=<hash>`` comment line so
files from different experiments cannot be mixed silently: writers refuse
to add files to a directory whose existing outputs carry a different
hash.  Float formatting is fixed (shortest round-trip via ``%.12g``) so
identical experiments produce byte-identical files regardless of worker
count.  The manifest carries timing and is the one file excluded from
byte-for-byte reproducibility.
"""
from __future__ import annotations

import json
import os
import time
from typing import Callable, Iterable, Optional

import numpy as np

from .cohort import ExperimentResult, MarketResult, run_market_experiment
from .config import ExperimentConfig
from .metrics import report_rows

RATIO_QUANTILES = (0.05, 0.25, 0.50, 0.75, 0.95)

PLOT_KINDS = ("price_ratio", "group_bars", "gini", "npv")

_METRICS_BY_KIND = {
    "group_bars": ("purchase_probability", "purchase_age_years", "retirement_security"),
    "gini": ("gini_purchase_time", "gini_retirement_security"),
    "npv": ("federal_npv", "local_npv", "government_npv"),
}


class OutputError(RuntimeError):
    pass


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path: str, header: Iterable[str], rows: Iterable[Iterable], exp_hash: str):
    header = list(header)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# experiment={exp_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str) -> tuple[str, list[dict]]:
    """Read a hash-stamped CSV back into (hash, rows-as-dicts)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# experiment="):
            raise OutputError(f"{path} lacks an experiment hash line")
        exp_hash = first.split("=", 1)[1]
        header = fh.readline().strip().split(",")
        rows = [dict(zip(header, line.strip().split(","))) for line in fh if line.strip()]
    return exp_hash, rows


def check_directory_hash(out_dir: str, exp_hash: str):
    """Refuse to mix outputs from different experiments in one directory."""
    if not os.path.isdir(out_dir):
        return
    for name in sorted(os.listdir(out_dir)):
        if not name.endswith(".csv"):
            continue
        try:
            existing, _ = read_csv(os.path.join(out_dir, name))
        except OutputError:
            continue
        if existing != exp_hash:
            raise OutputError(
                f"output directory {out_dir} already holds files for experiment "
                f"{existing}; refusing to mix with {exp_hash}"
            )


def price_ratio_rows(result: MarketResult) -> tuple[list[str], list[list]]:
    header = ["policy", "quarter", "ratio_mean"] + [f"ratio_q{int(q * 100):02d}" for q in RATIO_QUANTILES]
    rows = []
    for name in result.policies:
        ratios = result.price_ratio(name)  # (m, horizon)
        mean = ratios.mean(axis=0)
        quantiles = np.quantile(ratios, RATIO_QUANTILES, axis=0)
        for t in range(result.horizon):
            rows.append([name, t, mean[t]] + [quantiles[i, t] for i in range(len(RATIO_QUANTILES))])
    return header, rows


def metrics_rows(result: MarketResult) -> tuple[list[str], list[list]]:
    header = ["market", "policy", "group", "metric", "value", "baseline_value", "delta"]
    rows = [
        [r["market"], r["policy"], r["group"], r["metric"], r["value"], r["baseline_value"], r["delta"]]
        for r in report_rows(result)
    ]
    return header, rows


def write_market_outputs(out_dir: str, result: MarketResult, exp_hash: str):
    header, rows = price_ratio_rows(result)
    write_csv(os.path.join(out_dir, f"price_ratio_{result.market}.csv"), header, rows, exp_hash)
    header, rows = metrics_rows(result)
    write_csv(os.path.join(out_dir, f"metrics_{result.market}.csv"), header, rows, exp_hash)


def run(
    config: ExperimentConfig,
    jobs: int = 1,
    progress: Optional[Callable[[str, int, int], None]] = None,
) -> ExperimentResult:
    """Execute the full experiment and write all outputs.

    Scenario results are checkpointed under the experiment hash so an
    interrupted run resumes from completed scenarios.
    """
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise OutputError(f"output directory {out_dir} is not writable")
    check_directory_hash(out_dir, config.experiment_hash)

    started = time.time()
    markets: dict[str, MarketResult] = {}
    checkpoint_dir = os.path.join(out_dir, "checkpoints", config.experiment_hash)
    for market in config.markets:
        setup = config.setup_for_market(market)
        market_progress = None
        if progress:
            market_progress = lambda done, total, _m=market: progress(_m, done, total)
        markets[market] = run_market_experiment(
            setup,
            config.n_scenarios,
            jobs=jobs,
            checkpoint_dir=checkpoint_dir,
            progress=market_progress,
        )
        write_market_outputs(out_dir, markets[market], config.experiment_hash)

    with open(os.path.join(out_dir, "config_echo.yaml"), "w", encoding="utf-8") as fh:
        fh.write(config.echo_yaml())

    diagnostics = {
        market: {name: po.diagnostics for name, po in result.policies.items()}
        for market, result in markets.items()
    }
    manifest = {
        "experiment": config.experiment_hash,
        "seed": config.seed,
        "n_households": config.n_households,
        "n_scenarios": config.n_scenarios,
        "horizon": config.horizon,
        "markets": list(config.markets),
        "policies": [p.name for p in config.policies],
        "wall_time_seconds": round(time.time() - started, 3),
        "diagnostics": diagnostics,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return ExperimentResult(
        experiment_hash=config.experiment_hash, seed=config.seed, markets=markets
    )


def emit_plot_data(out_dir: str, kind: str) -> str:
    """Reshape a completed experiment's outputs into one tidy plot CSV.

    Schema: (market, policy, group, metric, value, baseline_value, delta).
    For the price-ratio kind the quarter is encoded in the metric name and
    there is one row per quarter per policy.
    """
    if kind not in PLOT_KINDS:
        raise OutputError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    header = ["market", "policy", "group", "metric", "value", "baseline_value", "delta"]
    rows: list[list] = []
    exp_hash = None

    def _take_hash(h):
        nonlocal exp_hash
        if exp_hash is None:
            exp_hash = h
        elif exp_hash != h:
            raise OutputError(f"mixed experiment hashes in {out_dir}: {exp_hash} vs {h}")

    found = False
    for name in sorted(os.listdir(out_dir)):
        path = os.path.join(out_dir, name)
        if kind == "price_ratio" and name.startswith("price_ratio_") and name.endswith(".csv"):
            market = name[len("price_ratio_"):-len(".csv")]
            h, data = read_csv(path)
            _take_hash(h)
            found = True
            for row in data:
                value = float(row["ratio_mean"])
                rows.append(
                    [market, row["policy"], 0, f"price_ratio_q{int(row['quarter']):03d}",
                     value, 1.0, value - 1.0]
                )
        elif kind != "price_ratio" and name.startswith("metrics_") and name.endswith(".csv"):
            h, data = read_csv(path)
            _take_hash(h)
            found = True
            wanted = _METRICS_BY_KIND[kind]
            for row in data:
                if row["metric"] in wanted:
                    rows.append(
                        [row["market"], row["policy"], int(row["group"]), row["metric"],
                         float(row["value"]), float(row["baseline_value"]), float(row["delta"])]
                    )
    if not found:
        raise OutputError(f"no completed experiment outputs found in {out_dir}")
    out_path = os.path.join(out_dir, f"plotdata_{kind}.csv")
    write_csv(out_path, header, rows, exp_hash)
    return out_path
