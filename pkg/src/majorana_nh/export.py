"""Result serialization: CSV / JSON / NDJSON tables plus SVG scatter plots.

Every export writes the data files plus one ``<prefix>_meta.json`` carrying
the fully resolved run configuration, so a run can be reproduced from its own
output.  Floats are written with 17 significant digits (lossless for binary64)
and row order is deterministic, which makes repeated single-threaded runs
byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

#: column order of the spectrum-style CSV tables
SPECTRUM_COLUMNS = (
    "k_x",
    "k_y",
    "state_index",
    "re_E",
    "im_E",
    "abs_E",
    "mean_row",
    "ipr",
    "class",
)


def fmt_float(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row.get(c)) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class _FloatEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        return super().default(o)


def write_json(path: Path, payload):
    path.write_text(
        json.dumps(payload, cls=_FloatEncoder, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_ndjson(path: Path, rows):
    lines = [json.dumps(row, cls=_FloatEncoder, sort_keys=True) for row in rows]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def export_table(
    out_dir,
    prefix: str,
    columns,
    rows,
    metadata: dict,
    formats=("csv", "json"),
) -> list[Path]:
    """Write one tabular result in the selected formats plus metadata."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out_dir}: {exc}") from exc

    written = []
    for fmt in formats:
        if fmt == "csv":
            p = out_dir / f"{prefix}.csv"
            write_csv(p, columns, rows)
        elif fmt == "json":
            p = out_dir / f"{prefix}.json"
            write_json(p, {"metadata": metadata, "columns": list(columns), "rows": rows})
        elif fmt == "ndjson":
            p = out_dir / f"{prefix}.ndjson"
            write_ndjson(p, rows)
        else:
            raise ConfigurationError(f"unknown export format {fmt!r}")
        written.append(p)

    meta_path = out_dir / f"{prefix}_meta.json"
    write_json(meta_path, metadata)
    written.append(meta_path)
    return written


# --------------------------------------------------------------------------
# minimal SVG scatter writer
# --------------------------------------------------------------------------

CLASS_COLOURS = {
    "edge_bottom": "#d62728",
    "edge_top": "#9467bd",
    "bulk_localized_bottom": "#ff7f0e",
    "bulk_localized_top": "#1f77b4",
    "extended": "#2ca02c",
    "pbc": "#c8c8c8",
    None: "#404040",
}


def write_svg_scatter(
    path,
    groups,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    size=(720, 540),
    point_radius=1.4,
):
    """Scatter plot of ``groups = [(label, xs, ys), ...]``, first group drawn first.

    Deterministic output: no timestamps, ids, or library version strings.
    """
    width, height = size
    margin = 54.0
    xs_all = np.concatenate([np.asarray(g[1], dtype=float) for g in groups if len(g[1])])
    ys_all = np.concatenate([np.asarray(g[2], dtype=float) for g in groups if len(g[2])])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad_x = 0.03 * (x1 - x0)
    pad_y = 0.03 * (y1 - y0)
    x0, x1 = x0 - pad_x, x1 + pad_x
    y0, y1 = y0 - pad_y, y1 + pad_y

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#808080" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{margin / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{width / 2:.1f}" y="{height - 10:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {height / 2:.1f})">{y_label}</text>'
        )

    legend_y = margin + 12.0
    for label, xs, ys in groups:
        colour = CLASS_COLOURS.get(label, CLASS_COLOURS[None])
        pts = []
        for x, y in zip(np.asarray(xs, float), np.asarray(ys, float)):
            pts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="{point_radius}"/>')
        parts.append(f'<g fill="{colour}" fill-opacity="0.8">' + "".join(pts) + "</g>")
        if label is not None:
            parts.append(
                f'<circle cx="{margin + 10:.1f}" cy="{legend_y:.1f}" r="3" fill="{colour}"/>'
                f'<text x="{margin + 17:.1f}" y="{legend_y + 3.5:.1f}" '
                f'font-family="sans-serif" font-size="9">{label}</text>'
            )
            legend_y += 13.0
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
