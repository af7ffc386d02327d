#!/usr/bin/env python3
"""
🧬 HPM Driver - Zero-Shot Regression Models

Fits source regressors, generates models for unseen conditions and runs the
beta-distribution benchmark.

Usage:
    hpm fit --data points.csv --family gaussian --condition 5 10 --output beta-5-10.json
    hpm generate --sources models/*.json --condition 4 6 --components 4 --hyper-degree 4
    hpm benchmark --output-dir results
    hpm curve --method hpm --param1 4 --param2 4 --alpha 4 --beta 6
    hpm inspect results/generated.json

Exit codes: 0 success, 2 argument or I/O error, 3 numerical failure,
4 precondition violation.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core import persistence, pipeline
from core.errors import FormatError, InvalidArgumentError, NumericalError, PreconditionError
from core.regressors import RegressorFamily, fit
from core.ssm import ComponentSelection

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
OUTPUT_DIR_ENV = "HPM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_PRECONDITION = 4


def setup_logging(output_dir: Path | None = None, level: int = logging.INFO) -> None:
    """Console logging, plus run.log in output_dir when given"""
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(output_dir / "run.log"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def _parse_family(tag: str, degree: int | None) -> RegressorFamily:
    if tag in ("poly", "polynomial"):
        if degree is None:
            raise InvalidArgumentError("--family poly needs --degree")
        return RegressorFamily.polynomial(degree)
    return RegressorFamily.from_tag(tag)


class FitConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: Path
    family: str
    degree: int | None = Field(default=None, ge=0)
    condition: list[float] | None = None
    task_id: str | None = None
    output: Path

    @field_validator("data")
    @classmethod
    def _data_exists(cls, path: Path) -> Path:
        if not path.is_file():
            raise ValueError(f"data file not found: {path}")
        return path

    @model_validator(mode="after")
    def _family_parses(self):
        _parse_family(self.family, self.degree)
        return self

    @property
    def regressor_family(self) -> RegressorFamily:
        return _parse_family(self.family, self.degree)


class GenerateConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sources: list[Path] = Field(min_length=2)
    condition: list[float] = Field(min_length=1)
    method: Literal["hpm", "hpm2", "hm"] = "hpm"
    landmarks: int = Field(default=100, ge=2)
    lo: float | None = None
    hi: float | None = None
    components: int | None = Field(default=None, ge=1)
    variance: float | None = Field(default=None, gt=0.0, le=1.0)
    hyper_degree: int = Field(ge=1)
    final_family: str = "poly7"
    allow_underdetermined: bool = False
    output: Path

    @field_validator("sources")
    @classmethod
    def _sources_exist(cls, paths: list[Path]) -> list[Path]:
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise ValueError(f"source files not found: {', '.join(missing)}")
        return paths

    @model_validator(mode="after")
    def _check_options(self):
        if self.components is not None and self.variance is not None:
            raise ValueError("give --components or --variance, not both")
        if (self.lo is None) != (self.hi is None):
            raise ValueError("give both --lo and --hi or neither")
        if self.lo is not None and not self.lo < self.hi:
            raise ValueError(f"--lo must be below --hi, got [{self.lo}, {self.hi}]")
        RegressorFamily.from_tag(self.final_family)
        return self

    @property
    def selection(self) -> ComponentSelection:
        if self.components is not None:
            return ComponentSelection.components(self.components)
        return ComponentSelection.variance(self.variance or 0.95)


class BenchmarkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    output_dir: Path
    only: Literal["all", "hm", "hpm"] = "all"
    workers: int = Field(default=1, ge=1)


class CurveConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Literal["hm", "hpm"]
    param1: int
    param2: int
    alpha: float = Field(gt=0.0)
    beta: float = Field(gt=0.0)
    output: Path | None = None


class InspectConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Path

    @field_validator("path")
    @classmethod
    def _path_exists(cls, path: Path) -> Path:
        if not path.is_file():
            raise ValueError(f"model file not found: {path}")
        return path


def read_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV of x, y with an optional header line"""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except ValueError as e:
            raise InvalidArgumentError(f"cannot read {path} as x,y CSV: {e}") from e
    if data.shape[1] != 2 or data.shape[0] == 0:
        raise InvalidArgumentError(f"{path} must hold two columns x,y, got shape {data.shape}")
    return data[:, 0], data[:, 1]


def cmd_fit(config: FitConfig) -> persistence.ModelFile:
    print("📈 Fitting source model")
    x, y = read_points(config.data)
    family = config.regressor_family
    try:
        regressor = fit(family, x, y)
    except InvalidArgumentError as e:
        raise NumericalError(f"{family.tag} fit failed: {e}") from e

    provenance = persistence.source_provenance(
        config.task_id or config.data.stem,
        config.condition,
        (float(x.min()), float(x.max())),
    )
    mf = persistence.to_model_file(regressor, provenance)
    persistence.write_model_file(config.output, mf)

    status = "✅ converged" if regressor.converged else "⚠️  not converged"
    print(f"  Family: {family.tag} ({status})")
    print(f"  Train MSE: {regressor.train_mse:.6g}")
    print(f"💾 Saved: {config.output}")
    return mf


def cmd_generate(config: GenerateConfig) -> persistence.ModelFile:
    print(f"🧬 Generating model with {config.method.upper()}")
    loaded = [persistence.load_source_task(path) for path in config.sources]
    tasks = [task for task, _ in loaded]
    ranges = [input_range for _, input_range in loaded]
    final_family = RegressorFamily.from_tag(config.final_family)

    if config.method == "hm":
        generated = pipeline.hm_baseline(
            tasks, config.condition, config.hyper_degree, config.allow_underdetermined
        )
    elif config.method == "hpm2":
        if any(r is None for r in ranges):
            raise PreconditionError("HPM2 needs every source file to record its input range")
        generated = pipeline.hpm2(
            tasks,
            config.condition,
            config.landmarks,
            [r[0] for r in ranges],
            [r[1] for r in ranges],
            config.selection,
            config.hyper_degree,
            final_family,
            config.allow_underdetermined,
        )
    else:
        lo, hi = config.lo, config.hi
        if lo is None:
            known = [r for r in ranges if r is not None]
            if not known:
                raise InvalidArgumentError("no --lo/--hi given and no source records an input range")
            lo, hi = min(r[0] for r in known), max(r[1] for r in known)
        generated = pipeline.hpm(
            tasks,
            config.condition,
            config.landmarks,
            lo,
            hi,
            config.selection,
            config.hyper_degree,
            final_family,
            config.allow_underdetermined,
        )

    mf = persistence.to_model_file(generated, {"sources": [str(p) for p in config.sources]})
    persistence.write_model_file(config.output, mf)

    p = generated.provenance
    print(f"  Condition: {generated.condition.tolist()}")
    print(f"  Hyper-model R²: {p.hyper_r2:.4f}")
    if p.plausibility_flags:
        print(f"  Plausibility flags: {p.plausibility_flags}")
    if p.nonmonotone_inputs:
        print("  ⚠️  Generated inputs are not increasing")
    print(f"💾 Saved: {config.output}")
    return mf


def cmd_benchmark(config: BenchmarkConfig) -> list[Path]:
    from scenarios.beta import benchmark, reports
    from tools.report_validator import print_summary, summarize

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory is not writable: {out}")

    print("🧪 Beta-distribution benchmark")
    print(f"📁 Output: {out}")
    print()
    spec = benchmark.ScenarioSpec()
    written = []
    hm_cells, hpm_cells = [], []

    if config.only in ("all", "hm"):
        hm_cells = benchmark.run_hm_cells(spec, config.workers)
        written.append(reports.write_table_csv([c.row for c in hm_cells], out / "hm_table.csv"))

    if config.only in ("all", "hpm"):
        tasks = benchmark.build_training_tasks(spec)
        hpm_cells = benchmark.run_hpm_cells(spec, config.workers, tasks)
        written.append(reports.write_table_csv([c.row for c in hpm_cells], out / "hpm_table.csv"))
        written.append(reports.write_jsonl(benchmark.source_fit_report(spec, tasks), out / "source_fits.jsonl"))
        model = benchmark.shape_model(spec, tasks)
        written.append(reports.write_json(benchmark.variance_spectrum(spec, tasks), out / "variance_spectrum.json"))
        written.append(persistence.save(out / "shape_model.json", model, {"scenario": "beta"}))

    curves = [curve for cell in hm_cells + hpm_cells for curve in cell.curves]
    written.append(reports.write_jsonl(curves, out / "curves.jsonl"))

    summary = summarize([c.row for c in hm_cells], [c.row for c in hpm_cells])
    print()
    print_summary(summary)
    for path in written:
        print(f"💾 {path}")
    return written


def cmd_curve(config: CurveConfig):
    from scenarios.beta import benchmark

    record = benchmark.curve_report(
        config.method.upper(), (config.param1, config.param2), (config.alpha, config.beta)
    )
    text = json.dumps(record.model_dump(mode="json"), sort_keys=True)
    if config.output is None:
        print(text)
    else:
        config.output.parent.mkdir(parents=True, exist_ok=True)
        config.output.write_text(text + "\n", encoding="utf-8")
        print(f"📈 MSE {record.mse:.6g}, saved: {config.output}")
    return record


def cmd_inspect(config: InspectConfig) -> persistence.ModelFile:
    from tools.model_inspector import inspect_model_file

    return inspect_model_file(config.path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpm", description="Zero-shot regression with hyper-process models")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a source regressor to a two-column CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--family", required=True, help="poly, exponential or gaussian")
    p.add_argument("--degree", type=int)
    p.add_argument("--condition", type=float, nargs="+")
    p.add_argument("--task-id")
    p.add_argument("--output", required=True)

    p = sub.add_parser("generate", help="generate a model for an unseen condition")
    p.add_argument("--sources", nargs="+", required=True)
    p.add_argument("--condition", type=float, nargs="+", required=True)
    p.add_argument("--method", choices=["hpm", "hpm2", "hm"], default="hpm")
    p.add_argument("--landmarks", type=int, default=100)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--components", type=int)
    p.add_argument("--variance", type=float)
    p.add_argument("--hyper-degree", type=int, required=True)
    p.add_argument("--final-family", default="poly7")
    p.add_argument("--allow-underdetermined", action="store_true")
    p.add_argument("--output", required=True)

    p = sub.add_parser("benchmark", help="run the beta-distribution grids")
    p.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))
    p.add_argument("--only", choices=["all", "hm", "hpm"], default="all")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("curve", help="one generated beta curve against the true density")
    p.add_argument("--method", choices=["hm", "hpm"], required=True)
    p.add_argument("--param1", type=int, required=True, help="model degree (hm) or components (hpm)")
    p.add_argument("--param2", type=int, required=True, help="hyper-model degree")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--output")

    p = sub.add_parser("inspect", help="pretty-print a model file")
    p.add_argument("path")
    return parser


COMMANDS = {
    "fit": (FitConfig, cmd_fit),
    "generate": (GenerateConfig, cmd_generate),
    "benchmark": (BenchmarkConfig, cmd_benchmark),
    "curve": (CurveConfig, cmd_curve),
    "inspect": (InspectConfig, cmd_inspect),
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    options = {k: v for k, v in vars(args).items() if k not in ("command", "verbose") and v is not None}
    config_cls, handler = COMMANDS[args.command]

    level = logging.DEBUG if args.verbose else logging.INFO
    try:
        config = config_cls(**options)
    except (ValidationError, InvalidArgumentError) as e:
        setup_logging(level=level)
        logger.error(f"Invalid {args.command} arguments: {e}")
        return EXIT_INVALID

    try:
        setup_logging(getattr(config, "output_dir", None), level)
    except OSError as e:
        setup_logging(level=level)
        logger.error(f"Cannot use output directory: {e}")
        return EXIT_INVALID

    print(f"🧬 HPM {args.command}")
    print("=" * 50)
    try:
        handler(config)
    except PreconditionError as e:
        logger.error(f"Precondition violated: {e}")
        return EXIT_PRECONDITION
    except (InvalidArgumentError, FormatError, ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_INVALID
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
