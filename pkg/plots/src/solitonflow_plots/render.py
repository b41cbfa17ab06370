"""Artifact parsing and figure rendering."""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SERIES_COLUMNS = ("clock", "weighted_volume", "residual_integral", "stone",
                  "type_one", "max_defect", "f_at_marked", "length")
FIGURE_KINDS = ("monotonicity", "type_one", "snapshots")
SQRT2 = math.sqrt(2.0)

# fixed style so identical inputs give identical bytes
_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


class ParseError(ValueError):
    """Artifact does not match the fixed schema; message names the
    offending column or line."""


@dataclass
class PlotSpec:
    kind: str
    series_path: Path | None = None
    snapshots_path: Path | None = None
    out_path: Path = Path("figure.png")
    overlay: bool = True

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ParseError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {FIGURE_KINDS}")


def read_series(path):
    """Parse the diagnostics CSV into a dict of float columns, checking
    the exact header contract."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if tuple(header) != SERIES_COLUMNS:
            extra = set(header) - set(SERIES_COLUMNS)
            missing = set(SERIES_COLUMNS) - set(header)
            name = (sorted(extra) + sorted(missing) or ["<order>"])[0]
            raise ParseError(f"{path}: header mismatch at column {name!r}")
        data = {c: [] for c in SERIES_COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SERIES_COLUMNS):
                raise ParseError(f"{path}: line {lineno}: expected "
                                 f"{len(SERIES_COLUMNS)} fields, got {len(row)}")
            for col, cell in zip(SERIES_COLUMNS, row):
                try:
                    data[col].append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: column {col!r} is not a "
                        f"number: {cell!r}") from None
    if not data["clock"]:
        raise ParseError(f"{path}: no data rows")
    return data


def read_snapshots(path):
    """Parse the snapshots JSONL into (clock, vertices) pairs."""
    path = Path(path)
    snaps = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {lineno}: bad JSON: {exc}") from None
        if not isinstance(obj, dict) or set(obj) != {"clock", "vertices"}:
            raise ParseError(f"{path}: line {lineno}: expected keys "
                             f"clock, vertices")
        verts = obj["vertices"]
        if not verts or not all(len(v) == len(verts[0]) for v in verts):
            raise ParseError(f"{path}: line {lineno}: ragged vertices")
        snaps.append((float(obj["clock"]), verts))
    if not snaps:
        raise ParseError(f"{path}: no data rows")
    return snaps


def _save(fig, out_path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)


def _render_monotonicity(spec):
    data = read_series(spec.series_path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(data["clock"], data["weighted_volume"], color="tab:blue",
                label="weighted volume")
        ax.set_xlabel("clock")
        ax.set_ylabel("weighted volume", color="tab:blue")
        twin = ax.twinx()
        twin.plot(data["clock"], data["residual_integral"], color="tab:red",
                  label="defect integral")
        twin.set_ylabel("defect integral", color="tab:red")
        twin.grid(False)
        ax.set_title("weighted volume and defect integral")
        _save(fig, spec.out_path)
    wv = data["weighted_volume"]
    non_increasing = all(b <= a + 1e-8 * abs(a) for a, b in zip(wv, wv[1:]))
    return {"kind": "monotonicity", "rows": len(wv),
            "non_increasing": non_increasing, "out": str(spec.out_path)}


def _render_type_one(spec):
    data = read_series(spec.series_path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(data["clock"], data["type_one"], color="tab:green")
        ax.set_xlabel("clock")
        ax.set_ylabel("sqrt(T - t) max|A|")
        ax.set_title("type-I curvature monitor")
        _save(fig, spec.out_path)
    return {"kind": "type_one", "rows": len(data["clock"]),
            "final_value": data["type_one"][-1], "out": str(spec.out_path)}


def _select_indices(count, wanted=6):
    if count <= wanted:
        return list(range(count))
    step = (count - 1) / (wanted - 1)
    return sorted({round(k * step) for k in range(wanted)})


def _render_snapshots(spec):
    snaps = read_snapshots(spec.snapshots_path)
    picked = [snaps[i] for i in _select_indices(len(snaps))]
    max_dev = 0.0
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 5.2))
        for clock, verts in picked:
            xs = [v[0] for v in verts] + [verts[0][0]]
            ys = [v[1] for v in verts] + [verts[0][1]]
            ax.plot(xs, ys, linewidth=1.0, label=f"clock {clock:.3g}")
        for _, verts in snaps:
            for v in verts:
                r = math.hypot(v[0], v[1])
                max_dev = max(max_dev, abs(r - SQRT2))
        if spec.overlay:
            angles = [2 * math.pi * k / 720 for k in range(721)]
            ax.plot([SQRT2 * math.cos(a) for a in angles],
                    [SQRT2 * math.sin(a) for a in angles],
                    "k--", linewidth=0.8, label="radius sqrt(2)")
            ax.annotate(f"max radial deviation {max_dev:.2e}",
                        xy=(0.02, 0.02), xycoords="axes fraction")
        ax.set_aspect("equal")
        ax.set_title("rescaled-curve snapshots")
        ax.legend(loc="upper right", fontsize=7)
        _save(fig, spec.out_path)
    return {"kind": "snapshots", "rows": len(snaps),
            "max_radial_deviation": max_dev, "out": str(spec.out_path)}


def render(spec):
    """Render one figure; returns a small summary of what was drawn."""
    if spec.kind == "monotonicity":
        if spec.series_path is None:
            raise ParseError("monotonicity figure needs --series")
        return _render_monotonicity(spec)
    if spec.kind == "type_one":
        if spec.series_path is None:
            raise ParseError("type_one figure needs --series")
        return _render_type_one(spec)
    if spec.snapshots_path is None:
        raise ParseError("snapshots figure needs --snapshots")
    return _render_snapshots(spec)
