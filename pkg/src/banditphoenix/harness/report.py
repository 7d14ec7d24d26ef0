"""
CSV output of a run: one row per test round, summary as comment lines.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Any, Union

from ..errors import HarnessError
from .runner import MetricTrace

logger = logging.getLogger(__name__)


def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def column_names(metric: str):
    curve = "cum_payoff" if metric == "ctr" else "cum_regret"
    return ["t", curve, "ratio_vs_ran", "m_t"]


def emit_csv(trace: MetricTrace, path: Union[str, Path]) -> Path:
    """
    Write a trace as CSV.

    Args:
        trace: Seed-averaged run result
        path: Target file; parent directories are created

    Returns:
        The written path

    Raises:
        HarnessError: if the file cannot be written
    """
    target = Path(path)
    ratio = trace.ratio
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(column_names(trace.metric))
            for k in range(trace.rounds.shape[0]):
                writer.writerow(
                    [
                        int(trace.rounds[k]),
                        _fmt(float(trace.cumulative[k])),
                        _fmt(float(ratio[k])),
                        _fmt(float(trace.cluster_counts[k])),
                    ]
                )
            for key, value in trace.summary.items():
                fh.write(f"# {key}={_fmt(value)}\n")
    except OSError as e:
        raise HarnessError(f"Cannot write {target}: {e}") from e

    logger.info(f"Wrote {trace.rounds.shape[0]} rows to {target}")
    return target
