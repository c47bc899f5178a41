"""Self-contained SVG rendering of the result CSVs.

CSVs are the source of truth; plots are derived artifacts with a data
provenance comment (source file name + content hash) embedded in the SVG.
Output bytes are deterministic for identical input CSVs. No plotting
dependency: the files are small hand-built line/step plots.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .exceptions import CsvFormatError
from .jsonio import sha256_hex, write_text_atomic

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 62, "right": 62, "top": 28, "bottom": 46}
PALETTE = ("#1f77b4", "#d62728", "#7f7f7f", "#2ca02c", "#9467bd", "#8c564b")


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mag * mult
        if span / step <= n:
            break
    first = step * math.ceil(lo / step)
    out = []
    t = first
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out or [lo, hi]


class _Canvas:
    def __init__(self, x_range, y_range, title: str, x_label: str, y_label: str, provenance: str):
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi <= self.y_lo:
            self.y_hi = self.y_lo + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f"<!-- {provenance} -->",
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        ]
        self._axes(x_label, y_label)

    def px(self, x: float) -> float:
        inner = WIDTH - MARGIN["left"] - MARGIN["right"]
        return MARGIN["left"] + (x - self.x_lo) / (self.x_hi - self.x_lo) * inner

    def py(self, y: float) -> float:
        inner = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return HEIGHT - MARGIN["bottom"] - (y - self.y_lo) / (self.y_hi - self.y_lo) * inner

    def _axes(self, x_label: str, y_label: str) -> None:
        x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for t in _ticks(self.x_lo, self.x_hi):
            px = self.px(t)
            self.parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 4}" stroke="black"/>')
            self.parts.append(f'<text x="{_fmt(px)}" y="{y0 + 17}" text-anchor="middle">{_fmt(t)}</text>')
        for t in _ticks(self.y_lo, self.y_hi):
            py = self.py(t)
            self.parts.append(f'<line x1="{x0 - 4}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="black"/>')
            self.parts.append(f'<text x="{x0 - 7}" y="{_fmt(py + 4)}" text-anchor="end">{_fmt(t)}</text>')
        self.parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 10}" text-anchor="middle">{x_label}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 16 {(y0 + y1) / 2})">{y_label}</text>'
        )

    def polyline(self, xs, ys, color: str, dasharray: str | None = None) -> None:
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        dash = f' stroke-dasharray="{dasharray}"' if dasharray else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')

    def legend(self, entries: list[tuple[str, str]], notes: list[str] = ()) -> None:
        x = WIDTH - MARGIN["right"] - 150
        y = MARGIN["top"] + 8
        for label, color in entries:
            self.parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" stroke-width="2"/>')
            self.parts.append(f'<text x="{x + 24}" y="{y + 4}">{label}</text>')
            y += 16
        for note in notes:
            self.parts.append(f'<text x="{x}" y="{y + 4}" font-style="italic">{note}</text>')
            y += 16

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}:1: empty CSV") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    return header, rows


def _provenance(path: Path, raw: bytes) -> str:
    return f"source: {path.name} sha256: {sha256_hex(raw)}"


def render_cdf_plot(csv_path: str | Path, out_path: str | Path, title: str) -> None:
    """Step plot of every group's empirical CDF in the CSV."""
    csv_path = Path(csv_path)
    header, rows = _read_csv(csv_path)
    if header[:3] != ["group", "value", "cum_frac"]:
        raise CsvFormatError(f"{csv_path}:1: expected CDF header, got {header[:3]}")
    groups: dict[str, tuple[list[float], list[float]]] = {}
    for line_no, row in enumerate(rows, start=2):
        try:
            groups.setdefault(row[0], ([], []))[0].append(float(row[1]))
            groups[row[0]][1].append(float(row[2]))
        except ValueError as exc:
            raise CsvFormatError(f"{csv_path}:{line_no}: {exc}") from None
    all_values = [v for xs, _ in groups.values() for v in xs]
    lo, hi = (min(all_values), max(all_values)) if all_values else (0.0, 1.0)
    canvas = _Canvas((lo, hi), (0.0, 1.0), title, "uncertainty (nats)", "cumulative fraction", _provenance(csv_path, csv_path.read_bytes()))
    entries = []
    notes = []
    for i, (group, (xs, ys)) in enumerate(sorted(groups.items())):
        if not xs:
            notes.append(f"{group}: no samples (omitted)")
            continue
        color = PALETTE[i % len(PALETTE)]
        # step curve: start at cum 0
        step_x, step_y = [xs[0]], [0.0]
        for x, y in zip(xs, ys):
            step_x += [x, x]
            step_y += [step_y[-1], y]
        canvas.polyline(step_x, step_y, color)
        entries.append((group, color))
    canvas.legend(entries, notes)
    write_text_atomic(out_path, canvas.text())


def render_snr_plot(csv_path: str | Path, out_path: str | Path, title: str) -> None:
    """Dual-axis sweep plot: mean uncertainty (left), UAR (right).

    Groups with no samples at an SNR are gaps in the curve; a legend note
    records wholly absent groups.
    """
    csv_path = Path(csv_path)
    header, rows = _read_csv(csv_path)
    expected = ["snr_db", "uar", "mean_unc_correct", "ci95_correct", "mean_unc_wrong", "ci95_wrong"]
    if header != expected:
        raise CsvFormatError(f"{csv_path}:1: expected {expected}, got {header}")
    snrs, uars = [], []
    series = {"correct": [], "wrong": []}
    for line_no, row in enumerate(rows, start=2):
        try:
            snrs.append(float(row[0]))
            uars.append(float(row[1]))
            series["correct"].append(float(row[2]) if row[2] else None)
            series["wrong"].append(float(row[4]) if row[4] else None)
        except ValueError as exc:
            raise CsvFormatError(f"{csv_path}:{line_no}: {exc}") from None
    present = [v for vals in series.values() for v in vals if v is not None]
    lo, hi = (0.0, max(present) * 1.05) if present else (0.0, 1.0)
    canvas = _Canvas(
        (min(snrs), max(snrs)), (lo, hi), title, "SNR (dB)", "mean uncertainty (nats)",
        _provenance(csv_path, csv_path.read_bytes()),
    )
    entries = []
    notes = []
    for i, (group, vals) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        xs = [s for s, v in zip(snrs, vals) if v is not None]
        ys = [v for v in vals if v is not None]
        if not xs:
            notes.append(f"{group}: no samples (omitted)")
            continue
        canvas.polyline(xs, ys, color)
        entries.append((group, color))
    # UAR on the right axis, rescaled into the uncertainty range
    uar_color = PALETTE[3]
    scaled = [lo + u * (hi - lo) for u in uars]
    canvas.polyline(snrs, scaled, uar_color, dasharray="5,3")
    entries.append(("UAR (right)", uar_color))
    x1 = WIDTH - MARGIN["right"]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        py = canvas.py(lo + t * (hi - lo))
        canvas.parts.append(f'<line x1="{x1}" y1="{_fmt(py)}" x2="{x1 + 4}" y2="{_fmt(py)}" stroke="black"/>')
        canvas.parts.append(f'<text x="{x1 + 7}" y="{_fmt(py + 4)}" text-anchor="start">{_fmt(t)}</text>')
    canvas.parts.append(
        f'<line x1="{x1}" y1="{HEIGHT - MARGIN["bottom"]}" x2="{x1}" y2="{MARGIN["top"]}" stroke="black"/>'
    )
    canvas.legend(entries, notes)
    write_text_atomic(out_path, canvas.text())


def export_plots(run_dir: str | Path) -> list[str]:
    """Render one SVG per result CSV in the run; returns relative paths."""
    run_dir = Path(run_dir)
    plot_dir = run_dir / "plots"
    out: list[str] = []
    for csv_path in sorted((run_dir / "results").glob("*.csv")):
        stem = csv_path.stem
        if stem.startswith("records_"):
            continue
        rel = f"plots/{stem}.svg"
        if stem.startswith("snr_"):
            render_snr_plot(csv_path, run_dir / rel, stem.replace("_", " "))
        else:
            render_cdf_plot(csv_path, run_dir / rel, stem.replace("_", " "))
        out.append(rel)
    return out
