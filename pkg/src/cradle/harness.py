"""Evaluation metrics over run results and trade ledgers."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Sequence

from .errors import EmptyLedger, HarnessError, ZeroDenominator
from .pipeline.trajectory import RunResult, read_trajectory, summarize

DEFAULT_RUNS = 5


def round_half_up(x: float, places: int = 2) -> Decimal:
    """Round for reporting. ``repr`` of the float is used so 92.855 rounds to
    92.86 as written rather than according to its binary expansion."""
    return Decimal(repr(x)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt_pct(x: float | None) -> str:
    return "N/A" if x is None else f"{round_half_up(x)}%"


# --- success and efficiency ---------------------------------------------------------


@dataclass(frozen=True)
class SuccessStats:
    successes: int
    total: int
    mean_steps: float | None
    std_steps: float | None  # population standard deviation

    @property
    def fraction(self) -> float:
        return self.successes / self.total if self.total else 0.0

    def __str__(self) -> str:
        if self.mean_steps is None:
            return f"N/A ({self.successes}/{self.total})"
        return f"{self.mean_steps:g} ± {self.std_steps:g} ({self.successes}/{self.total})"


def success_stats(runs: Sequence[RunResult]) -> SuccessStats:
    """Successes out of runs, and step mean / population σ over successful runs."""
    if not runs:
        raise HarnessError("a run set needs at least one run")
    steps = [r.steps_used for r in runs if r.success]
    if not steps:
        return SuccessStats(0, len(runs), None, None)
    mu = sum(steps) / len(steps)
    sigma = math.sqrt(sum((s - mu) ** 2 for s in steps) / len(steps))
    return SuccessStats(len(steps), len(runs), mu, sigma)


def efficiency(expected_steps: float, actual_steps: float) -> float:
    """100 · expected / actual, as a percentage."""
    if actual_steps == 0:
        raise ZeroDenominator("actual step count is zero")
    if actual_steps < 0 or expected_steps < 0:
        raise ValueError("step counts must be non-negative")
    return 100.0 * expected_steps / actual_steps


# --- trade metrics ---------------------------------------------------------------------


@dataclass(frozen=True)
class Transaction:
    buy: float
    sell: float
    valuation: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be a finite non-negative amount, got {v}")


@dataclass(frozen=True)
class TradeLedger:
    transactions: tuple[Transaction, ...]
    failed: int = 0

    def __post_init__(self):
        if self.failed < 0:
            raise ValueError("failed count must be non-negative")

    @property
    def n(self) -> int:
        return len(self.transactions)


@dataclass(frozen=True)
class TradeMetrics:
    """All values are percentages, unrounded."""

    TR: float
    GPM: float
    ROI: float
    VD: float
    BPVR: float
    SPVR: float
    APR: float
    MRR: float
    mRR: float

    def rounded(self) -> dict[str, str]:
        return {k: str(round_half_up(v)) for k, v in asdict(self).items()}


def _ratio(num: float, den: float, what: str) -> float:
    if den == 0:
        raise ZeroDenominator(f"{what}: denominator is zero")
    return 100.0 * num / den


def trade_metrics(ledger: TradeLedger) -> TradeMetrics:
    n, m = ledger.n, ledger.failed
    if n == 0:
        raise EmptyLedger("the ledger has no completed trades")
    B = sum(t.buy for t in ledger.transactions)
    S = sum(t.sell for t in ledger.transactions)
    V = sum(t.valuation for t in ledger.transactions)
    if any(t.buy == 0 for t in ledger.transactions):
        raise ZeroDenominator("per-item return needs every buy price to be positive")
    rates = [(t.sell - t.buy) / t.buy * 100.0 for t in ledger.transactions]
    return TradeMetrics(
        TR=100.0 * n / (n + m),
        GPM=_ratio(S - B, S, "GPM"),
        ROI=_ratio(S - B, B, "ROI"),
        VD=_ratio(S - V, V, "VD"),
        BPVR=_ratio(B, V, "BPVR"),
        SPVR=_ratio(S, V, "SPVR"),
        APR=sum(rates) / n,
        MRR=max(rates),
        mRR=min(rates),
    )


def load_ledger(path: str | Path) -> TradeLedger:
    """CSV with an optional ``failed=<m>`` first line, then ``buy,sell,valuation`` rows.

    A header row of column names is tolerated.
    """
    failed = 0
    rows: list[Transaction] = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise HarnessError(f"cannot read ledger {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("failed="):
            failed = int(line.split("=", 1)[1])
            continue
        cells = [c.strip() for c in line.split(",")]
        if cells == ["buy", "sell", "valuation"]:
            continue
        if len(cells) != 3:
            raise HarnessError(f"{path}:{lineno}: expected buy,sell,valuation")
        try:
            rows.append(Transaction(*(float(c) for c in cells)))
        except ValueError as exc:
            raise HarnessError(f"{path}:{lineno}: {exc}") from None
    return TradeLedger(tuple(rows), failed)


# --- runs ---------------------------------------------------------------------------------


def summarize_run(path: str | Path) -> RunResult:
    return summarize(read_trajectory(path), str(path))


# --- reports ---------------------------------------------------------------------------------


def report_text(rows: dict[str, Any]) -> str:
    width = max((len(k) for k in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows.items())


def report_json(rows: dict[str, Any]) -> str:
    return json.dumps(rows, indent=2, sort_keys=False)


def trade_report(ledger: TradeLedger) -> dict[str, str]:
    return trade_metrics(ledger).rounded()


def success_report(runs: Sequence[RunResult]) -> dict[str, Any]:
    st = success_stats(runs)
    return {
        "successes": f"{st.successes}/{st.total}",
        "mean_steps": "N/A" if st.mean_steps is None else f"{st.mean_steps:.2f}",
        "std_steps": "N/A" if st.std_steps is None else f"{st.std_steps:.2f}",
        "summary": str(st),
    }
