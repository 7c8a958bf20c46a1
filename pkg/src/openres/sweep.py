"""Parameter-sweep engine, BIC catalogs and flat-file outputs.

Maps are evaluated on a row-major (axis1 outer, axis2 inner) grid, in
parallel over points, and written by a single writer in deterministic order;
identical configurations produce byte-identical files regardless of the
thread count.  Numbers are written with 17 significant digits so files
round-trip doubles exactly.  Per-point solver failures become NaN rows plus
a line in a ``.diag`` sidecar.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

_FMT = "%.16e"


class UsageError(ValueError):
    """Bad model/parameter/axis names or malformed requests (exit code 2)."""


class NumericalFailure(RuntimeError):
    """Sweep-level numerical failure (exit code 3); partial outputs kept."""


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise UsageError("axis count must be >= 2")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass
class SweepSpec:
    model: str
    fixed: dict
    axis1: Axis
    axis2: Axis
    outputs: tuple = ("map",)


@dataclass
class MapResult:
    model: str
    params: dict
    axis1: Axis
    axis2: Axis
    columns: tuple
    values: np.ndarray          # shape (n1 * n2, 2 + len(columns))
    diagnostics: list = field(default_factory=list)


def run_sweep(spec: SweepSpec, evaluate, columns, threads: int = 1) -> MapResult:
    """Evaluate ``evaluate(params, a1, a2) -> sequence`` over the grid.

    Points run in a thread pool (models are reentrant; LAPACK releases the
    GIL); results are buffered per index so output order never depends on
    scheduling.  A point that raises becomes a NaN row + diagnostic.
    """
    a1 = spec.axis1.values()
    a2 = spec.axis2.values()
    ncol = len(columns)
    out = np.full((a1.size * a2.size, 2 + ncol), np.nan)
    diags = [None] * (a1.size * a2.size)

    def one(idx):
        i, j = divmod(idx, a2.size)
        out[idx, 0], out[idx, 1] = a1[i], a2[j]
        try:
            vals = evaluate(dict(spec.fixed), a1[i], a2[j])
            out[idx, 2:] = [float(v) for v in vals]
        except Exception as exc:  # pragma: no cover - error text varies
            diags[idx] = f"{a1[i]!r} {a2[j]!r} {type(exc).__name__}: {exc}"

    indices = range(a1.size * a2.size)
    if threads <= 1:
        for idx in indices:
            one(idx)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, indices))
    return MapResult(model=spec.model, params=dict(spec.fixed), axis1=spec.axis1,
                     axis2=spec.axis2, columns=tuple(columns), values=out,
                     diagnostics=[d for d in diags if d])


def _header_lines(kind: str, model: str, params: dict, extra: list[str]) -> list[str]:
    lines = [f"# openres {kind} v{__version__}",
             f"# model: {model}",
             "# params: " + " ".join(f"{k}={_FMT % float(v)}"
                                     for k, v in sorted(params.items()))]
    lines.extend("# " + e for e in extra)
    return lines


def write_map(path, result: MapResult) -> None:
    path = Path(path)
    lines = _header_lines("map", result.model, result.params, [
        f"axis1: name={result.axis1.name} min={_FMT % result.axis1.lo} "
        f"max={_FMT % result.axis1.hi} count={result.axis1.count}",
        f"axis2: name={result.axis2.name} min={_FMT % result.axis2.lo} "
        f"max={_FMT % result.axis2.hi} count={result.axis2.count}",
        "columns: " + " ".join((result.axis1.name, result.axis2.name)
                               + tuple(result.columns)),
    ])
    body = "\n".join(" ".join(_FMT % v for v in row) for row in result.values)
    path.write_text("\n".join(lines) + "\n" + body + "\n")
    if result.diagnostics:
        Path(str(path) + ".diag").write_text(
            "\n".join(result.diagnostics) + "\n")


def read_map(path):
    """Parse a map file back into (header dict, ndarray)."""
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            text = line[1:].strip()
            if ":" in text:
                key, _, rest = text.partition(":")
                header[key.strip()] = rest.strip()
            continue
        if line.strip():
            rows.append([float(tok) for tok in line.split()])
    data = np.array(rows)
    if "axis1" in header and "axis2" in header:
        n1 = int(dict(tok.split("=") for tok in header["axis1"].split())["count"])
        n2 = int(dict(tok.split("=") for tok in header["axis2"].split())["count"])
        if data.shape[0] != n1 * n2:
            raise NumericalFailure("row count does not match the axes")
    return header, data


def _label_token(label) -> str:
    return "".join(str(label).split())


def write_catalog(path, model: str, params: dict, records,
                  label_getter=None, top: int = 8) -> None:
    """BIC catalog sorted by frequency; one line per record with the top
    modal coefficients appended as label |a| Re(a) Im(a) groups."""
    path = Path(path)
    recs = sorted(records, key=lambda r: r.omega_sq)
    lines = _header_lines("bic-catalog", model, params, [
        "columns: index classification param omega_sq gamma_res residual "
        "[label abs_a re_a im_a] x" + str(top),
    ])
    for i, rec in enumerate(recs):
        expansion = rec.modal_expansion() if label_getter is None \
            else label_getter(rec)
        parts = [str(i + 1), str(rec.classification or "unclassified"),
                 _FMT % rec.param, _FMT % rec.omega_sq,
                 _FMT % rec.gamma_res, _FMT % rec.residual]
        for lab, coeff in expansion[:top]:
            parts += [_label_token(lab), _FMT % abs(coeff),
                      _FMT % coeff.real, _FMT % coeff.imag]
        lines.append(" ".join(parts))
    path.write_text("\n".join(lines) + "\n")


def read_catalog(path):
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            text = line[1:].strip()
            if ":" in text:
                key, _, rest = text.partition(":")
                header[key.strip()] = rest.strip()
            continue
        if not line.strip():
            continue
        toks = line.split()
        rec = {"index": int(toks[0]), "classification": toks[1],
               "param": float(toks[2]), "omega_sq": float(toks[3]),
               "gamma_res": float(toks[4]), "residual": float(toks[5]),
               "modes": []}
        rest = toks[6:]
        for k in range(0, len(rest) - 3, 4):
            rec["modes"].append((rest[k], float(rest[k + 1]),
                                 complex(float(rest[k + 2]), float(rest[k + 3]))))
        rows.append(rec)
    return header, rows


def write_field(path, model: str, params: dict, axes_desc: str,
                grid1: np.ndarray, grid2: np.ndarray, field: np.ndarray) -> None:
    """Plain-text field grid: coordinates, Re(field) and |field|^2."""
    path = Path(path)
    lines = _header_lines("field", model, params, [
        f"grid: {axes_desc} n1={grid1.size} n2={grid2.size}",
        "columns: c1 c2 re_field abs2_field",
    ])
    body = []
    for i, g1 in enumerate(grid1):
        for j, g2 in enumerate(grid2):
            v = field[i, j]
            body.append(" ".join(_FMT % x for x in
                                 (g1, g2, v.real, abs(v) ** 2)))
    path.write_text("\n".join(lines) + "\n" + "\n".join(body) + "\n")


def read_field(path):
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            text = line[1:].strip()
            if ":" in text:
                key, _, rest = text.partition(":")
                header[key.strip()] = rest.strip()
        elif line.strip():
            rows.append([float(t) for t in line.split()])
    return header, np.array(rows)


def write_resonances(path, model: str, params: dict, records) -> None:
    lines = _header_lines("resonances", model, params, [
        "columns: index re_z im_z width converged iterations",
    ])
    for i, rec in enumerate(records):
        lines.append(" ".join([
            str(i + 1), _FMT % rec.z.real, _FMT % rec.z.imag,
            _FMT % rec.width, str(int(rec.converged)), str(rec.iterations)]))
    path.write_text("\n".join(lines) + "\n")
