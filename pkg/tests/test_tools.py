import numpy as np
import pytest

from core import persistence
from core.hypermodel import train
from core.pipeline import hpm
from core.regressors import RegressorFamily, fit
from core.ssm import ComponentSelection, build
from scenarios.beta.benchmark import ResultRow
from scenarios.beta.reports import write_table_csv
from tools.model_inspector import inspect_model_file
from tools.report_validator import (
    check_dominance,
    check_rows,
    check_trend,
    print_summary,
    summarize,
    validate_report_files,
)


def row(method, p1, p2, mean):
    return ResultRow(method=method, param1=p1, param2=p2, mean_mse=mean, std_mse=0.1, hyper_r2=0.9)


def full_table(method, scale=1.0):
    """Sixteen rows where hyper degree 6 is always the worst"""
    return [
        row(method, p1, p2, scale * (1.0 + 0.1 * p1 + (5.0 if p2 == 6 else 0.1 * p2)))
        for p2 in (3, 4, 5, 6)
        for p1 in (3, 4, 5, 6)
    ]


class TestReportValidator:
    def test_rows_complete(self):
        assert check_rows(full_table("HM")) == []

    def test_rows_missing_and_duplicated(self):
        short = full_table("HM")[:-1]
        assert check_rows(short) == ["HM: 15 rows, expected 16"]
        issues = check_rows(short + short[:1])
        assert issues == ["HM: duplicate settings"]

    def test_dominance(self):
        hm = [row("HM", 3, 3, 1.0), row("HM", 4, 3, 1.0)]
        hpm_rows = [row("HPM", 3, 3, 1.04), row("HPM", 4, 3, 1.2), row("HPM", 5, 3, 9.0)]
        violations = check_dominance(hm, hpm_rows)
        assert len(violations) == 1
        assert "(4, 3)" in violations[0]

    def test_trend(self):
        rows = [row("HPM", 3, 3, 0.5), row("HPM", 3, 6, 0.5), row("HPM", 4, 6, 2.0)]
        violations = check_trend(rows)
        assert len(violations) == 1
        assert "(3, 6)" in violations[0]
        assert check_trend([]) == []

    def test_summary_passes(self, capsys):
        summary = summarize(full_table("HM"), full_table("HPM", scale=0.5))
        assert summary.passed
        assert summary.best["HM"].param1 == 3 and summary.best["HM"].param2 == 3
        print_summary(summary)
        out = capsys.readouterr().out
        assert "All checks passed" in out
        assert "HPM best: (3, 3)" in out

    def test_summary_reports_violations(self, capsys):
        summary = summarize(full_table("HM"), full_table("HPM", scale=2.0))
        assert not summary.passed
        print_summary(summary)
        assert "16 check(s) violated" in capsys.readouterr().out

    def test_validate_files(self, tmp_path):
        hm_path = write_table_csv(full_table("HM"), tmp_path / "hm_table.csv")
        hpm_path = write_table_csv(full_table("HPM", scale=0.5), tmp_path / "hpm_table.csv")
        assert validate_report_files([hm_path, hpm_path])
        assert not validate_report_files([tmp_path / "missing.csv"])


class TestModelInspector:
    @pytest.fixture
    def files(self, tmp_path, curved_tasks, linear_tasks):
        x = np.linspace(0.0, 1.0, 20)
        bell = fit(RegressorFamily.gaussian(), x, np.exp(-((x - 0.5) ** 2) / 0.05))
        shapes = np.vstack([t.regressor.predict(np.linspace(0.0, 1.0, 15)) for t in curved_tasks])
        conditions = np.array([t.condition for t in linear_tasks])
        targets = np.vstack([t.regressor.coefficients for t in linear_tasks])
        objects = {
            "regressor": bell,
            "deformable": build(shapes, ComponentSelection.components(2)),
            "hypermodel": train(conditions, targets, 1, "model-coefficients"),
            "generated": hpm(curved_tasks, [1.5], 30, 0.0, 1.0, ComponentSelection.components(2), 2),
        }
        return {name: persistence.save(tmp_path / f"{name}.json", obj) for name, obj in objects.items()}

    @pytest.mark.parametrize(
        "name, heading",
        [
            ("regressor", "REGRESSOR"),
            ("deformable", "VARIANCE SPECTRUM"),
            ("hypermodel", "HYPER-MODEL"),
            ("generated", "GENERATED MODEL"),
        ],
    )
    def test_sections(self, files, capsys, name, heading):
        mf = inspect_model_file(files[name])
        out = capsys.readouterr().out
        assert mf.kind == name
        assert heading in out
        assert f"Kind: {name}" in out

    def test_spectrum_marks_kept_components(self, files, capsys):
        inspect_model_file(files["deformable"])
        out = capsys.readouterr().out
        assert "Components kept: 2/3" in out
        assert out.count("●") == 2
