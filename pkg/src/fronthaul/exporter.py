"""Result export and reporting utilities"""

import json
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from scipy.stats import binomtest

from .errors import ResultIOError
from .models import TrialRecord


CSV_COLUMNS = [
    "trial",
    "method",
    "sweep_name",
    "sweep_value",
    "total_se",
    "min_se",
    "eval_count",
    "wall_ms",
]

TRACE_COLUMNS = ["trial", "iteration", "best_eval", "optimum"]


def records_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """Records as a frame with the fixed CSV column order"""
    rows = [record.model_dump(include=set(CSV_COLUMNS)) for record in records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


class ResultExporter:
    """Export trial records and summaries in various formats"""

    @staticmethod
    def export_records_csv(records: Sequence[TrialRecord], output_file: Path) -> None:
        """
        Export records to CSV, one header row plus one row per record

        Args:
            records: Trial records in run order
            output_file: Path to output CSV file
        """
        output_file.parent.mkdir(parents=True, exist_ok=True)
        records_frame(records).to_csv(output_file, index=False)

    @staticmethod
    def export_records_json(records: Sequence[TrialRecord], output_file: Path) -> None:
        """
        Export records to JSON, allocations and traces included when present

        Args:
            records: Trial records in run order
            output_file: Path to output JSON file
        """
        output_file.parent.mkdir(parents=True, exist_ok=True)
        payload = [record.model_dump(mode="json") for record in records]
        output_file.write_text(json.dumps(payload, indent=2), encoding="utf-8")

    @staticmethod
    def load_records_json(input_file: Path) -> List[TrialRecord]:
        """Parse a JSON file written by export_records_json"""
        try:
            payload = json.loads(Path(input_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ResultIOError(input_file, str(e)) from e
        return [TrialRecord.model_validate(item) for item in payload]

    @staticmethod
    def export_summary_csv(summary: pd.DataFrame, output_file: Path) -> None:
        """Export an aggregated summary frame to CSV"""
        output_file.parent.mkdir(parents=True, exist_ok=True)
        summary.to_csv(output_file, index=False)

    @staticmethod
    def export_traces_csv(results, output_file: Path) -> None:
        """
        Export convergence traces, one row per (trial, iteration)

        Args:
            results: ConvergenceResult values from the runner
            output_file: Path to output CSV file
        """
        output_file.parent.mkdir(parents=True, exist_ok=True)
        rows = [
            {"trial": result.trial, "iteration": iteration, "best_eval": value, "optimum": result.optimum}
            for result in results
            for iteration, value in enumerate(result.trace)
        ]
        pd.DataFrame(rows, columns=TRACE_COLUMNS).to_csv(output_file, index=False)


def emit_results(records: Sequence[TrialRecord], fmt: str, path: Path) -> None:
    """Write records as ``csv`` or ``json`` to ``path``

    Raises:
        ValueError: On an unknown format
        ResultIOError: If the file cannot be written
    """
    path = Path(path)
    writers = {"csv": ResultExporter.export_records_csv, "json": ResultExporter.export_records_json}
    if fmt not in writers:
        raise ValueError(f"Unknown result format '{fmt}', expected csv or json")
    try:
        writers[fmt](records, path)
    except OSError as e:
        raise ResultIOError(path, e.strerror or str(e)) from e


def _completed(records: Sequence[TrialRecord]) -> pd.DataFrame:
    frame = records_frame(records)
    frame["sweep_value"] = frame["sweep_value"].astype(object).where(frame["sweep_value"].notna(), "")
    return frame.dropna(subset=["total_se"])


def summarize(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """Mean, standard deviation and median of total and minimum SE per method and sweep value"""
    frame = _completed(records)
    if frame.empty:
        return pd.DataFrame(columns=["sweep_value", "method", "trials"])
    frame = frame.astype({"total_se": float, "min_se": float, "eval_count": float})
    grouped = frame.groupby(["sweep_value", "method"], sort=False)
    summary = grouped.agg(
        trials=("trial", "count"),
        total_se_mean=("total_se", "mean"),
        total_se_std=("total_se", "std"),
        total_se_median=("total_se", "median"),
        min_se_mean=("min_se", "mean"),
        min_se_std=("min_se", "std"),
        min_se_median=("min_se", "median"),
        eval_count_mean=("eval_count", "mean"),
    )
    return summary.reset_index()


def paired_comparison(records: Sequence[TrialRecord], reference: str = "hs",
                      metric: str = "total_se") -> pd.DataFrame:
    """Paired difference of ``reference`` against every other method

    Trials are paired on (sweep value, trial). The p-value is a one-sided sign
    test that the reference wins more often than it loses; ties are dropped.
    """
    frame = _completed(records)
    columns = ["method", "pairs", "mean_diff", "std_diff", "wins", "losses", "ties", "p_value"]
    if frame.empty or reference not in set(frame["method"]):
        return pd.DataFrame(columns=columns)
    table = frame.pivot_table(index=["sweep_value", "trial"], columns="method", values=metric,
                              aggfunc="first")
    rows = []
    for method in table.columns:
        if method == reference:
            continue
        diff = (table[reference] - table[method]).dropna()
        wins, losses = int((diff > 0).sum()), int((diff < 0).sum())
        p_value = binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue if wins + losses else 1.0
        rows.append({
            "method": method,
            "pairs": int(diff.size),
            "mean_diff": float(diff.mean()) if diff.size else float("nan"),
            "std_diff": float(diff.std()) if diff.size > 1 else float("nan"),
            "wins": wins,
            "losses": losses,
            "ties": int(diff.size - wins - losses),
            "p_value": float(p_value),
        })
    return pd.DataFrame(rows, columns=columns)


def reference_method(methods: Sequence[str]) -> Optional[str]:
    """Harmony search identifier present in ``methods``, if any"""
    for candidate in ("hs", "stage1+2"):
        if candidate in methods:
            return candidate
    return None
