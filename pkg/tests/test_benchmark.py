import csv

import numpy as np
import pytest

from core.errors import InvalidArgumentError
from core.hypermodel import design_matrix
from core.regressors import RegressorFamily, beta_pdf
from scenarios.beta.benchmark import (
    ResultRow,
    ScenarioSpec,
    assign_family,
    best_row,
    build_training_tasks,
    curve_report,
    evaluate_cell,
    mse,
    run_hm_grid,
    run_hpm_grid,
    source_fit_report,
    variance_spectrum,
)
from scenarios.beta.reports import TABLE_COLUMNS, read_table_csv, write_jsonl, write_table_csv


class TestScenario:
    def test_counts(self, spec):
        assert len(spec.train_params) == 25
        assert len(spec.test_params) == 16
        assert spec.train_grid.size == 20
        assert spec.eval_grid.size == 100
        assert spec.landmarks == 100

    def test_grids_inside_unit_interval(self, spec):
        for grid in (spec.train_grid, spec.eval_grid):
            assert grid[0] == 0.01 and grid[-1] == 0.99

    def test_settings_order(self, spec):
        settings = spec.settings("HPM")
        assert len(settings) == 16
        assert settings[:5] == [(3, 3), (4, 3), (5, 3), (6, 3), (3, 4)]

    @pytest.mark.parametrize("degree, rank, columns", [(4, 15, 15), (5, 19, 21), (6, 22, 28)])
    def test_high_hyper_degrees_are_rank_deficient(self, spec, degree, rank, columns):
        A = design_matrix(np.array(spec.train_params), degree)
        assert A.shape == (25, columns)
        assert np.linalg.matrix_rank(A) == rank

    def test_grid_must_avoid_boundaries(self):
        with pytest.raises(ValueError):
            ScenarioSpec(lo=0.0)


class TestFamilyAssignment:
    @pytest.mark.parametrize(
        "alpha, beta, family",
        [
            (5.0, 10.0, RegressorFamily.gaussian()),
            (15.0, 5.0, RegressorFamily.gaussian()),
            (0.5, 1.0, RegressorFamily.exponential()),
            (5.0, 0.5, RegressorFamily.exponential()),
            (1.0, 15.0, RegressorFamily.exponential()),
            (0.5, 0.5, RegressorFamily.polynomial(7)),
            (1.0, 1.0, RegressorFamily.polynomial(7)),
        ],
    )
    def test_examples(self, alpha, beta, family):
        assert assign_family(alpha, beta) == family

    def test_total_over_training_pairs(self, spec):
        families = {assign_family(a, b).kind for a, b in spec.train_params}
        assert families == {"gaussian", "exponential", "polynomial"}


def test_mse_matches_loop():
    predicted = np.linspace(0.0, 2.0, 100)
    truth = np.sin(np.linspace(0.0, 3.0, 100))
    total = 0.0
    for p, t in zip(predicted, truth):
        total += (p - t) * (p - t)
    assert mse(predicted, truth) == pytest.approx(total / 100, rel=1e-12)


def test_training_tasks(beta_tasks):
    assert len(beta_tasks) == 25
    assert beta_tasks[0].id == "beta-0.5-0.5"
    np.testing.assert_array_equal(beta_tasks[7].condition, [1.0, 5.0])
    assert all(np.isfinite(task.regressor.train_mse) for task in beta_tasks)


def test_polynomial_sources_for_hm(spec):
    tasks = build_training_tasks(spec, RegressorFamily.polynomial(3))
    assert {task.regressor.family for task in tasks} == {RegressorFamily.polynomial(3)}


def test_source_fit_report(spec, beta_tasks):
    records = source_fit_report(spec, beta_tasks)
    assert len(records) == 25
    bell = next(r for r in records if (r.alpha, r.beta) == (5.0, 10.0))
    assert bell.family == "gaussian"
    assert bell.family_mse < bell.poly5_mse


def test_variance_spectrum(spec, beta_tasks):
    report = variance_spectrum(spec, beta_tasks)
    assert report.eigenvalues.size == 24
    assert np.all(np.diff(report.cumulative_variance) >= -1e-12)
    assert report.cumulative_variance[-1] == pytest.approx(1.0, abs=1e-8)


class TestCells:
    def test_row_aggregates_curves(self, spec):
        tasks = build_training_tasks(spec, RegressorFamily.polynomial(3))
        cell = evaluate_cell("HM", spec, tasks, 3, 3)
        errors = np.array([curve.mse for curve in cell.curves])
        assert len(cell.curves) == 16
        assert cell.row.mean_mse == pytest.approx(errors.mean(), rel=1e-12)
        assert cell.row.std_mse == pytest.approx(np.sqrt(np.mean((errors - errors.mean()) ** 2)), rel=1e-9)
        assert 0.0 <= cell.row.hyper_r2 <= 1.0

    def test_hpm_cell_is_deterministic(self, spec, beta_tasks):
        first = evaluate_cell("HPM", spec, beta_tasks, 4, 4)
        second = evaluate_cell("HPM", spec, beta_tasks, 4, 4)
        assert first.row == second.row
        for a, b in zip(first.curves, second.curves):
            np.testing.assert_array_equal(a.predicted, b.predicted)

    def test_underdetermined_hyper_degree_runs(self, spec, beta_tasks):
        cell = evaluate_cell("HPM", spec, beta_tasks, 3, 6)
        assert np.isfinite(cell.row.mean_mse)


class TestCurveReport:
    def test_ground_truth_is_density(self, spec):
        record = curve_report("HPM", (4, 4), (4.0, 6.0))
        np.testing.assert_array_equal(record.ground_truth, beta_pdf(4.0, 6.0, spec.eval_grid))
        assert record.predicted.size == 100
        assert record.mse == pytest.approx(mse(record.predicted, record.ground_truth))

    @pytest.mark.reproduction
    def test_irregular_hm_setting_is_worse(self):
        smooth = curve_report("HM", (3, 3), (12.0, 4.0))
        rough = curve_report("HM", (6, 3), (12.0, 4.0))
        assert rough.mse > smooth.mse

    @pytest.mark.parametrize("setting", [(2, 3), (4, 7)])
    def test_out_of_grid(self, setting):
        with pytest.raises(InvalidArgumentError):
            curve_report("HPM", setting, (4.0, 6.0))

    def test_bad_condition(self):
        with pytest.raises(InvalidArgumentError):
            curve_report("HM", (3, 3), (4.0, -1.0))


class TestReports:
    def test_csv_columns_and_round_trip(self, tmp_path):
        rows = [
            ResultRow(method="HM", param1=3, param2=3, mean_mse=0.48, std_mse=0.116, hyper_r2=0.942),
            ResultRow(method="HM", param1=4, param2=3, mean_mse=0.1 + 0.2, std_mse=0.0, hyper_r2=0.9),
        ]
        path = write_table_csv(rows, tmp_path / "t.csv")
        with open(path, newline="") as f:
            assert next(csv.reader(f)) == TABLE_COLUMNS
        assert read_table_csv(path) == rows

    def test_jsonl_one_record_per_line(self, tmp_path, spec):
        record = curve_report("HM", (3, 3), (4.0, 4.0), spec)
        path = write_jsonl([record, record], tmp_path / "c.jsonl")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert '"method": "HM"' in lines[0]

    def test_best_row_first_on_ties(self):
        rows = [
            ResultRow(method="HPM", param1=3, param2=3, mean_mse=0.5, std_mse=0.1, hyper_r2=0.9),
            ResultRow(method="HPM", param1=4, param2=3, mean_mse=0.5, std_mse=0.1, hyper_r2=0.9),
        ]
        assert best_row(rows) is rows[0]


@pytest.fixture(scope="module")
def hm_rows():
    return {(r.param1, r.param2): r for r in run_hm_grid(ScenarioSpec())}


@pytest.fixture(scope="module")
def hpm_rows():
    return {(r.param1, r.param2): r for r in run_hpm_grid(ScenarioSpec())}


@pytest.mark.reproduction
class TestFullGrids:
    """Full grids against the reference benchmark values"""

    def test_hm_best_setting(self, hm_rows):
        assert hm_rows[(3, 3)].mean_mse == pytest.approx(0.48, abs=0.10)

    def test_hm_high_degrees_blow_up(self, hm_rows):
        assert hm_rows[(6, 6)].mean_mse > 4.0

    def test_hpm_best_setting(self, hpm_rows):
        assert hpm_rows[(4, 4)].mean_mse == pytest.approx(0.32, abs=0.15)

    def test_hpm_dominates_hm(self, hm_rows, hpm_rows):
        for setting, row in hpm_rows.items():
            assert row.mean_mse <= hm_rows[setting].mean_mse * 1.05, setting

    def test_degree_six_rows_are_worse_than_best(self, hm_rows, hpm_rows):
        for rows in (hm_rows, hpm_rows):
            best = best_row(list(rows.values()))
            for (p, h), row in rows.items():
                if h == 6:
                    assert row.mean_mse > best.mean_mse

    def test_rerun_is_identical(self, hm_rows):
        again = {(r.param1, r.param2): r for r in run_hm_grid(ScenarioSpec())}
        assert again == hm_rows
