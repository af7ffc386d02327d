#!/usr/bin/env python3
"""
🔍 Model Inspector - Look Inside Any Model File

WHEN TO USE:
- After fit or generate wrote a model file
- To check convergence of a nonlinear source fit
- To see how much variance each shape mode carries

HOW TO USE:
    python -m tools.model_inspector models/beta-5-10.json
    hpm inspect results/generated.json

WHAT IT SHOWS:
- Envelope: kind, format version, tool version, creation time
- Regressors: family, coefficients, train MSE, convergence
- Deformable models: eigenvalues and cumulative explained variance
- Hyper-models: degree, feature ordering, R² per output
- Generated models: condition, parameters, plausibility flags, provenance
"""

import sys
from pathlib import Path

import numpy as np

from core.hypermodel import HyperModel
from core.persistence import ModelFile, from_model_file, read_model_file
from core.pipeline import GeneratedModel
from core.regressors import Regressor
from core.ssm import DeformableModel


def _fmt(values, limit: int = 8) -> str:
    values = np.asarray(values).ravel()
    shown = ", ".join(f"{v:.6g}" for v in values[:limit])
    more = f", ... ({values.size} total)" if values.size > limit else ""
    return f"[{shown}{more}]"


def show_envelope(mf: ModelFile, path: str | Path) -> None:
    print(f"📄 File: {path}")
    print(f"📦 Kind: {mf.kind} (format v{mf.format_version})")
    print(f"🏷️  Tool version: {mf.metadata.tool_version}")
    print(f"🕒 Created: {mf.metadata.created_at}")
    for key, value in sorted(mf.metadata.provenance.items()):
        print(f"  {key}: {value}")
    print()


def show_regressor(r: Regressor) -> None:
    print("📈 REGRESSOR")
    print("-" * 30)
    print(f"  Family: {r.family.tag}")
    print(f"  Coefficients: {_fmt(r.coefficients)}")
    print(f"  Train MSE: {r.train_mse:.6g}")
    status = "✅ converged" if r.converged else "⚠️  not converged"
    print(f"  Fit: {status} after {r.iterations} iterations")
    print()


def show_spectrum(m: DeformableModel) -> None:
    print("📊 VARIANCE SPECTRUM")
    print("-" * 30)
    print(f"  Shapes: {m.n_shapes}, landmarks: {m.landmark_dim}")
    print(f"  Components kept: {m.n_components}/{m.max_components}")
    print(f"  Total variance: {m.total_variance:.6g}")
    ratios = m.explained_variance_ratio()
    cumulative = m.cumulative_variance()
    for k, (eigenvalue, ratio, total) in enumerate(zip(m.spectrum, ratios, cumulative), start=1):
        marker = "●" if k <= m.n_components else "○"
        print(f"  {marker} {k:>2}: λ={eigenvalue:.6g}  {ratio:6.1%}  cumulative {total:6.1%}")
    print()


def show_hypermodel(h: HyperModel) -> None:
    print("🧮 HYPER-MODEL")
    print("-" * 30)
    print(f"  Targets: {h.target_kind}, {h.n_outputs} outputs")
    print(f"  Degree {h.degree} over {h.condition_dim} conditions ({h.feature_ordering})")
    print(f"  R² per output: {_fmt(h.r2_per_output)}")
    print(f"  R² mean: {h.r2_mean:.4f}")
    print()


def show_generated(g: GeneratedModel) -> None:
    p = g.provenance
    print("🎯 GENERATED MODEL")
    print("-" * 30)
    print(f"  Method: {p.method}, hyper degree {p.hyper_degree}, R² {p.hyper_r2:.4f}")
    print(f"  Condition: {_fmt(g.condition)}")
    print(f"  Parameters: {_fmt(g.params)}")
    if p.n_components is not None:
        print(f"  Components: {p.n_components} ({p.selection})")
    print(f"  Sources: {len(p.task_ids)} tasks")
    if any(p.plausibility_flags):
        flagged = [k + 1 for k, flag in enumerate(p.plausibility_flags) if flag]
        print(f"  ⚠️  Outside 3√λ on components {flagged}")
    elif p.plausibility_flags:
        print("  ✅ All parameters within 3√λ")
    if p.nonmonotone_inputs:
        print("  ⚠️  Generated inputs are not increasing")
    print()
    show_regressor(g.regressor)


def inspect_model_file(path: str | Path) -> ModelFile:
    """Print a readable summary of any model file"""
    print("🔍 MODEL INSPECTION")
    print("=" * 50)
    mf = read_model_file(path)
    show_envelope(mf, path)
    obj = from_model_file(mf)
    if isinstance(obj, Regressor):
        show_regressor(obj)
    elif isinstance(obj, DeformableModel):
        show_spectrum(obj)
    elif isinstance(obj, HyperModel):
        show_hypermodel(obj)
    else:
        show_generated(obj)
    return mf


def main():
    if len(sys.argv) < 2:
        print("❌ You need to provide a model file!")
        print("📖 Usage: python -m tools.model_inspector path/to/model.json")
        return
    inspect_model_file(sys.argv[1])


if __name__ == "__main__":
    main()
