"""Deterministic JSON and CSV writers for pipeline results.

Floats are written with ``repr`` so reruns on the same machine produce
byte-identical files. Wall-clock timings never go into these files; they
belong in a separate ``timings.json``.
"""

import csv
import json
from pathlib import Path

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def spectrum_summary(spectrum):
    return [
        {
            "index": i,
            "eigenvalue": d.value,
            "algebraic": d.algebraic,
            "geometric": d.geometric,
        }
        for i, d in enumerate(spectrum.distinct)
    ]


def energy_plot_rows(spectrum, aim):
    """``(index, energy_fraction)`` per component.

    Components are laid out in spectrum order; each sits at the last basis
    column it occupies, so the x axis is the sorted eigenvector index.
    """
    ends = np.cumsum([d.algebraic for d in spectrum.distinct])
    return [(int(e), float(f)) for e, f in zip(ends, aim.fractions)]


def magnitude_rows(aim, components):
    """Node index followed by ``|projection|`` for each listed component."""
    mags = np.abs(aim.projections[list(components)])
    return [[node] + [float(v) for v in mags[:, node]] for node in range(aim.projections.shape[1])]


def projection_rows(aim):
    rows = []
    for node in range(aim.projections.shape[1]):
        row = [node]
        for p in aim.projections[:, node]:
            row.extend([float(np.real(p)), float(np.imag(p))])
        rows.append(row)
    return rows


def projection_header(k):
    header = ["node"]
    for i in range(k):
        header.extend([f"component_{i}_re", f"component_{i}_im"])
    return header


def vector_rows(V, labels):
    """One row per vector entry: ``column, label..., row, re, im``."""
    rows = []
    for j in range(V.shape[1]):
        for r in range(V.shape[0]):
            rows.append(list(labels[j]) + [r, float(np.real(V[r, j])), float(np.imag(V[r, j]))])
    return rows
