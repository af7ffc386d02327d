#!/usr/bin/env python3
"""
✅ Report Validator - Check Benchmark Tables

WHEN TO USE:
- After running the benchmark command
- To compare HPM against HM on matched settings
- To confirm the degree-6 rows really are the worst

HOW TO USE:
    python -m tools.report_validator results/hm_table.csv results/hpm_table.csv
    python -m tools.report_validator results/hpm_table.csv

WHAT IT CHECKS:
- Row completeness and duplicate settings
- Best row per method
- HPM dominance over HM (5% relative slack)
- Hyper degree 6 rows against each method's best row

Violations are reported, never fatal.
"""

import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel, ConfigDict

from scenarios.beta.benchmark import ResultRow, best_row
from scenarios.beta.reports import read_table_csv

logger = logging.getLogger(__name__)

DOMINANCE_SLACK = 0.05
TREND_DEGREE = 6
EXPECTED_ROWS = 16


class BenchmarkSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    best: dict[str, ResultRow]
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations


def check_rows(rows: Sequence[ResultRow], expected: int = EXPECTED_ROWS) -> list[str]:
    """Row count and duplicate-setting checks for one method's table"""
    issues = []
    methods = sorted({row.method for row in rows})
    if len(rows) != expected:
        issues.append(f"{'/'.join(methods) or 'table'}: {len(rows)} rows, expected {expected}")
    settings = [(row.method, row.param1, row.param2) for row in rows]
    if len(set(settings)) != len(settings):
        issues.append(f"{'/'.join(methods)}: duplicate settings")
    return issues


def check_dominance(
    hm_rows: Sequence[ResultRow], hpm_rows: Sequence[ResultRow], slack: float = DOMINANCE_SLACK
) -> list[str]:
    """HPM mean MSE must not exceed HM's by more than slack on matched settings"""
    hm = {(row.param1, row.param2): row for row in hm_rows}
    violations = []
    for row in hpm_rows:
        match = hm.get((row.param1, row.param2))
        if match is None:
            continue
        if row.mean_mse > match.mean_mse * (1.0 + slack):
            violations.append(
                f"dominance ({row.param1}, {row.param2}): "
                f"HPM {row.mean_mse:.4f} > HM {match.mean_mse:.4f} x {1.0 + slack:.2f}"
            )
    return violations


def check_trend(rows: Sequence[ResultRow], degree: int = TREND_DEGREE) -> list[str]:
    """Every row at the given hyper degree must be worse than the method's best row"""
    if not rows:
        return []
    best = best_row(rows)
    return [
        f"trend {row.method} ({row.param1}, {row.param2}): "
        f"{row.mean_mse:.4f} not above best {best.mean_mse:.4f}"
        for row in rows
        if row.param2 == degree and not row.mean_mse > best.mean_mse
    ]


def summarize(hm_rows: Sequence[ResultRow], hpm_rows: Sequence[ResultRow]) -> BenchmarkSummary:
    violations = []
    best = {}
    for rows in (hm_rows, hpm_rows):
        if not rows:
            continue
        violations += check_rows(rows)
        violations += check_trend(rows)
        best[rows[0].method] = best_row(rows)
    violations += check_dominance(hm_rows, hpm_rows)
    for violation in violations:
        logger.warning(f"Benchmark check: {violation}")
    return BenchmarkSummary(best=best, violations=violations)


def print_summary(summary: BenchmarkSummary) -> None:
    print("🎯 BENCHMARK SUMMARY")
    print("-" * 30)
    for method, row in summary.best.items():
        print(
            f"🏆 {method} best: ({row.param1}, {row.param2}) "
            f"mean MSE {row.mean_mse:.4f} ± {row.std_mse:.4f}, R² {row.hyper_r2:.3f}"
        )
    if summary.passed:
        print("✅ All checks passed!")
    else:
        print(f"⚠️  {len(summary.violations)} check(s) violated:")
        for violation in summary.violations:
            print(f"  - {violation}")
    print()


def validate_report_files(paths: Sequence[str | Path]) -> bool:
    print("✅ REPORT VALIDATOR")
    print("=" * 50)
    tables: dict[str, list[ResultRow]] = {"HM": [], "HPM": []}
    for path in paths:
        if not Path(path).exists():
            print(f"❌ File not found: {path}")
            return False
        rows = read_table_csv(path)
        print(f"📄 {path}: {len(rows)} rows")
        for row in rows:
            tables[row.method].append(row)
    print()

    summary = summarize(tables["HM"], tables["HPM"])
    print_summary(summary)
    return summary.passed


def main():
    if len(sys.argv) < 2:
        print("❌ You need to provide at least one table CSV!")
        print("📖 Usage: python -m tools.report_validator hm_table.csv [hpm_table.csv]")
        print("💡 The benchmark command writes both into its output directory")
        return
    validate_report_files(sys.argv[1:])


if __name__ == "__main__":
    main()
