"""Verification report rows: line-delimited records, tables, and figures.

A row is one checked quantity with its oracle (when one exists), absolute
error, tolerance, and verdict.  Records serialize to one self-describing
JSON object per line with a stable key order; timing is kept on the row for
the table view but stays out of the records so identical runs produce
byte-identical report streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

__all__ = ["Row", "rows_to_records", "rows_to_table", "save_figure", "all_passed"]


@dataclass
class Row:
    check: str                  # short name of the checked quantity
    value: float
    tolerance: float
    identity: str               # the identity or property being exercised
    oracle: Optional[float] = None
    error: Optional[float] = None
    passed: bool = True
    experiment: str = ""
    seconds: float = 0.0

    @classmethod
    def compare(cls, check, value, oracle, tol, identity, experiment="", seconds=0.0):
        err = abs(value - oracle)
        return cls(check, float(value), float(tol), identity, float(oracle),
                   float(err), err <= tol, experiment, seconds)

    @classmethod
    def bound(cls, check, value, tol, identity, experiment="", seconds=0.0):
        """Row asserting |value| <= tol (oracle handled as zero)."""
        v = float(value)
        return cls(check, v, float(tol), identity, 0.0, abs(v), abs(v) <= tol,
                   experiment, seconds)

    def record(self) -> str:
        payload = {
            "experiment": self.experiment,
            "check": self.check,
            "value": self.value,
            "oracle": self.oracle,
            "error": self.error,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "identity": self.identity,
        }
        return json.dumps(payload, sort_keys=True)


def all_passed(rows: Sequence[Row]) -> bool:
    return all(r.passed for r in rows)


def rows_to_records(rows: Sequence[Row]) -> str:
    return "\n".join(r.record() for r in rows)


def rows_to_table(rows: Sequence[Row]) -> str:
    head = f"{'experiment':<16} {'check':<34} {'value':>14} {'oracle':>14} {'error':>10} {'tol':>8} {'':>4} {'sec':>6}"
    lines = [head, "-" * len(head)]
    for r in rows:
        oracle = f"{r.oracle:14.6e}" if r.oracle is not None else " " * 14
        err = f"{r.error:10.2e}" if r.error is not None else " " * 10
        mark = "ok" if r.passed else "FAIL"
        lines.append(
            f"{r.experiment:<16.16} {r.check:<34.34} {r.value:14.6e} {oracle} "
            f"{err} {r.tolerance:8.0e} {mark:>4} {r.seconds:6.1f}"
        )
    n_fail = sum(not r.passed for r in rows)
    lines.append(f"{len(rows)} checks, {n_fail} failures")
    return "\n".join(lines)


def save_figure(rows: Sequence[Row], path: str, title: str = "") -> str:
    """Render the rows of one experiment as an error chart saved to ``path``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [r for r in rows if r.error is not None]
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(rows)), 4.2))
    idx = range(len(rows))
    errs = [max(r.error, 1e-18) for r in rows]
    tols = [r.tolerance for r in rows]
    colors = ["tab:blue" if r.passed else "tab:red" for r in rows]
    ax.bar(idx, errs, color=colors)
    ax.plot(idx, tols, "k--", lw=1, label="tolerance")
    ax.set_yscale("log")
    ax.set_ylabel("absolute error")
    ax.set_xticks(list(idx))
    ax.set_xticklabels([r.check for r in rows], rotation=60, ha="right", fontsize=7)
    ax.set_title(title or (rows[0].experiment if rows else "report"))
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_pair_figure(xs, ys, path: str, xlabel: str, ylabel: str, title: str) -> str:
    """Scatter of two pipelines' values with the diagonal for reference."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.2, 5.0))
    ax.scatter(xs, ys, s=22, color="tab:blue", zorder=3)
    lo = min(min(xs), min(ys))
    hi = max(max(xs), max(ys))
    pad = 0.08 * (hi - lo or 1.0)
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", lw=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
