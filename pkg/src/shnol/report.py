"""CSV tables and SVG decay plots for pipeline reports."""

from __future__ import annotations

import csv
import io
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .pipeline import ShnolReport

HEADER = (
    "n", "r_n", "R_n", "energy_a", "log_norm", "max_ratio", "cond_i", "cond_ii",
    "gen_weyl", "residual", "l2_u_An", "grad_terms",
)
RATIO_COLUMNS = ("max_ratio", "cond_i", "cond_ii", "gen_weyl", "residual")


@dataclass
class ReportBundle:
    report: ShnolReport
    rows: list
    truncated: bool = False
    halved: ShnolReport | None = None
    changes: list = field(default_factory=list)

    @property
    def verdicts(self) -> dict:
        return self.report.verdicts

    @property
    def provenance(self) -> dict:
        return self.report.provenance


def fmt(x) -> str:
    """12 significant digits; inf and nan as text."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _row(r) -> dict:
    return {
        "n": r.n,
        "r_n": r.r_n,
        "R_n": r.R_n,
        "energy_a": r.energy_a,
        "log_norm": r.norm_phi_u.log_magnitude,
        "max_ratio": r.max_ratio_An,
        "cond_i": r.cond_i,
        "cond_ii": r.cond_ii,
        "gen_weyl": r.gen_weyl,
        "residual": r.residual,
        "l2_u_An": r.l2_u_An.to_float(),
        "grad_terms": r.grad_terms,
    }


def _logs(r) -> dict:
    """Log values of the ratio columns, finite even when the values overflow."""
    def lg(v):
        return math.log(v) if v > 0 else -math.inf

    return {
        "max_ratio": lg(r.max_ratio_An),
        "cond_i": r.log_cond_i,
        "cond_ii": r.log_cond_ii,
        "gen_weyl": r.log_gen_weyl,
        "residual": lg(r.residual) if math.isfinite(r.residual) else math.nan,
    }


def relative_changes(coarse: ShnolReport, fine: ShnolReport) -> list[dict]:
    """|fine/coarse - 1| per ratio column, formed from logarithms."""
    out = []
    for a, b in zip(coarse.records, fine.records):
        la, lb = _logs(a), _logs(b)
        row = {}
        for k in RATIO_COLUMNS:
            if la[k] == lb[k]:
                row[k] = 0.0
            elif math.isfinite(la[k]) and math.isfinite(lb[k]):
                row[k] = abs(math.expm1(lb[k] - la[k]))
            else:
                row[k] = math.nan
        out.append(row)
    return out


def bundle(report: ShnolReport, halved: ShnolReport | None = None) -> ReportBundle:
    rows = [_row(r) for r in report.records]
    truncated = any("truncated" in n for n in report.notes)
    changes = relative_changes(report, halved) if halved is not None else []
    return ReportBundle(report, rows, truncated, halved, changes)


def csv_text(b: ReportBundle) -> str:
    header = list(HEADER)
    if b.changes:
        header += [f"rel_change_{k}" for k in RATIO_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, row in enumerate(b.rows):
        vals = [fmt(row[k]) for k in HEADER]
        if b.changes:
            vals += [fmt(b.changes[i][k]) for k in RATIO_COLUMNS]
        w.writerow(vals)
    return buf.getvalue()


def emit_csv(b: ReportBundle, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(b))


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [{k: (int(v) if k == "n" else float(v)) for k, v in row.items()} for row in csv.DictReader(fh)]


# -------------------------------------------------------------------- SVG

_SERIES = (
    ("cond_i", "log cond_i", "#1f77b4"),
    ("cond_ii", "log cond_ii", "#d62728"),
    ("gen_weyl", "log gen_weyl", "#2ca02c"),
    ("residual", "log residual", "#9467bd"),
)


def svg_text(b: ReportBundle, width: int = 640, height: int = 400) -> str:
    left, right, top, bottom = 70, 150, 40, 50
    pts = {}
    for key, _, _ in _SERIES:
        series = []
        for r in b.report.records:
            v = _logs(r)[key]
            if math.isfinite(v):
                series.append((r.n, v))
        pts[key] = series
    allx = [x for s in pts.values() for x, _ in s] or [1, 2]
    ally = [y for s in pts.values() for _, y in s] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + pw * (x - x0) / (x1 - x0)

    def sy(y):
        return top + ph * (1 - (y - y0) / (y1 - y0))

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    title = ET.SubElement(svg, "text", x=str(width // 2), y="20", attrib={"text-anchor": "middle"})
    title.text = f"{b.report.name}: decay of the Shnol ratios (lambda = {fmt(b.report.lam)})"
    ET.SubElement(svg, "line", x1=str(left), y1=str(top + ph), x2=str(left + pw), y2=str(top + ph), stroke="black")
    ET.SubElement(svg, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(top + ph), stroke="black")
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        t = ET.SubElement(svg, "text", x=f"{sx(xv):.2f}", y=str(top + ph + 18),
                          attrib={"text-anchor": "middle", "font-size": "11"})
        t.text = f"{xv:.4g}"
        t = ET.SubElement(svg, "text", x=str(left - 6), y=f"{sy(yv) + 4:.2f}",
                          attrib={"text-anchor": "end", "font-size": "11"})
        t.text = f"{yv:.4g}"
    xl = ET.SubElement(svg, "text", x=str(left + pw // 2), y=str(height - 10), attrib={"text-anchor": "middle"})
    xl.text = "n"
    yl = ET.SubElement(svg, "text", x="16", y=str(top + ph // 2),
                       attrib={"text-anchor": "middle", "transform": f"rotate(-90 16 {top + ph // 2})"})
    yl.text = "natural log of ratio"
    for j, (key, label, color) in enumerate(_SERIES):
        series = pts[key]
        if series:
            ET.SubElement(svg, "polyline", fill="none", stroke=color, attrib={"stroke-width": "1.5"},
                          points=" ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in series))
        ly = top + 16 * j + 10
        ET.SubElement(svg, "line", x1=str(left + pw + 12), y1=str(ly), x2=str(left + pw + 32), y2=str(ly),
                      stroke=color, attrib={"stroke-width": "2"})
        t = ET.SubElement(svg, "text", x=str(left + pw + 36), y=str(ly + 4), attrib={"font-size": "11"})
        t.text = label
    return ET.tostring(svg, encoding="unicode")


def emit_svg(b: ReportBundle, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_text(b))


def verdict_table(report: ShnolReport) -> str:
    lines = [f"scenario {report.name}  lambda = {fmt(report.lam)}"]
    for key in ("i", "ii", "gen-weyl-necessary", "harnack-equivalence"):
        v = report.verdicts[key]
        lines.append(f"  {key:<22} {v.label:<5} {v.trend:<9} {v.note}")
    if report.admissibility is not None:
        a = report.admissibility
        lines.append(f"  admissibility          {'PASS' if a.passed else 'FAIL':<5} hardy max/min {fmt(a.hardy_ratio)}")
    lines.append(f"  oracle distance        {fmt(report.oracle_distance)} (resolution {fmt(report.oracle_resolution)})")
    lines.append(f"  growth constant |u|/h  {fmt(report.bp_constant)}")
    if report.subexp is not None:
        s = report.subexp
        lines.append(f"  subexponential         {s.subexponential} (rho {fmt(s.rho)}, tail ratio min {fmt(s.tail_ratio_min)})")
    for c in report.caccioppoli:
        lines.append(f"  caccioppoli {c.kind:<10} sup {fmt(c.sup)}")
    for n in report.notes:
        lines.append(f"  note: {n}")
    return "\n".join(lines) + "\n"
