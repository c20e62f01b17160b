#!/usr/bin/env python3
"""Batch figures from the pipeline's JSON/CSV artifacts.

Reads only the documented schema-1 outputs (spectrum.json, wc.json,
report.json, simulate.csv); no coupling to the solver internals.
Renders are deterministic: fixed figure geometry, no metadata chunks.
"""

import argparse
import csv
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("spectrum", "manifold_section", "defect_time", "defect_scaling")
FIGSIZE = (6.0, 4.0)
DPI = 120


class JobError(RuntimeError):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise JobError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("schema") != 1:
        raise JobError(f"{path}: missing or unsupported schema (expected 1)")
    return data


def _save(fig, out: str) -> None:
    fig.savefig(out, dpi=DPI, metadata={"Software": None})
    plt.close(fig)


def render_spectrum(inputs, out):
    data = _load_json(inputs[0])
    for key in ("eigenvalues", "tags", "dims"):
        if key not in data:
            raise JobError(f"{inputs[0]}: missing field '{key}'")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    colors = {"unstable": "tab:red", "center": "tab:green",
              "stable": "tab:blue"}
    for tag in ("stable", "center", "unstable"):
        pts = [z for z, t in zip(data["eigenvalues"], data["tags"])
               if t == tag]
        if pts:
            ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=18,
                       color=colors[tag], label=tag,
                       marker="x" if tag == "stable" else "o")
    ax.axvline(0.0, color="0.6", lw=0.8)
    dims = data["dims"]
    ax.set_title(f"spectrum (u={dims['u']}, c={dims['c']}, s={dims['s']})")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(loc="best")
    _save(fig, out)


def _poly_eval(monomials, coeffs, point):
    total = 0.0
    for e, c in zip(monomials, coeffs):
        v = c
        for x, p in zip(point, e):
            if p:
                v *= x ** p
        total += v
    return total


def _wc_section(data, path):
    wc = data.get("w_c")
    if not isinstance(wc, dict):
        raise JobError(f"{path}: missing field 'w_c'")
    monos = wc["monomials"]
    rows = wc["coefficients"]["cod"]
    dom = wc["dims"]["dom"]
    xs = [i / 100.0 * 0.02 - 0.01 for i in range(101)]
    curves = []
    for coeffs in rows:
        ys = []
        for x in xs:
            point = [x] + [0.0] * (dom - 1)
            ys.append(_poly_eval(monos, coeffs, point))
        curves.append(ys)
    return xs, curves


def render_manifold_section(inputs, out):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    styles = ("-", "--")
    for path, style in zip(inputs[:2], styles):
        data = _load_json(path)
        xs, curves = _wc_section(data, path)
        for j, ys in enumerate(curves):
            ax.plot(xs, ys, style, label=f"{path.split('/')[-1]} out{j}")
    ax.set_xlabel("center coordinate c1 (section c2..=0)")
    ax.set_ylabel("graph value")
    ax.set_title("center manifold section")
    ax.legend(loc="best", fontsize=7)
    _save(fig, out)


def render_defect_time(inputs, out):
    path = inputs[0]
    try:
        with open(path) as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise JobError(f"{path}: {exc}") from exc
    if header is None or not rows:
        raise JobError(f"{path}: no data")
    if "t" not in header:
        raise JobError(f"{path}: expected a 't' column, got {header}")
    defect_cols = [i for i, name in enumerate(header) if "defect" in name]
    if not defect_cols:
        raise JobError(f"{path}: no defect column in {header}")
    ti = header.index("t")
    ts = [float(r[ti]) for r in rows]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for i in defect_cols:
        ax.semilogy(ts, [max(float(r[i]), 1e-300) for r in rows],
                    label=header[i])
    ax.set_xlabel("t")
    ax.set_ylabel("defect")
    ax.set_title("defect along the trajectory")
    ax.legend(loc="best")
    _save(fig, out)


def render_defect_scaling(inputs, out):
    data = _load_json(inputs[0])
    reports = data.get("reports")
    if not isinstance(reports, list):
        raise JobError(f"{inputs[0]}: missing field 'reports'")
    tang = next((r for r in reports if r.get("tag") == "tangency"), None)
    if tang is None:
        raise JobError(f"{inputs[0]}: no tangency report")
    pts = [(s["radius"], s["max_defect"]) for s in tang["samples"]
           if "radius" in s]
    if len(pts) < 2:
        raise JobError(f"{inputs[0]}: no data")
    pts.sort()
    radii = [p[0] for p in pts]
    defects = [max(p[1], 1e-300) for p in pts]
    import math
    n = len(pts)
    lx = [math.log10(r) for r in radii]
    ly = [math.log10(d) for d in defects]
    mx = sum(lx) / n
    my = sum(ly) / n
    slope = sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / \
        sum((a - mx) ** 2 for a in lx)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.loglog(radii, defects, "o-")
    ax.set_xlabel("radius")
    ax.set_ylabel("max invariance defect")
    ax.set_title(f"defect vs radius (slope {slope:.2f})")
    ax.annotate(f"slope {slope:.2f}", xy=(radii[len(radii) // 2],
                                          defects[len(radii) // 2]),
                textcoords="offset points", xytext=(8, -10))
    _save(fig, out)


RENDERERS = {
    "spectrum": render_spectrum,
    "manifold_section": render_manifold_section,
    "defect_time": render_defect_time,
    "defect_scaling": render_defect_scaling,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plots.py")
    ap.add_argument("--job", required=True, choices=KINDS)
    ap.add_argument("--in", dest="inputs", required=True, action="append")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    if not args.out.endswith(".png"):
        print("error: --out must end in .png", file=sys.stderr)
        return 2
    try:
        RENDERERS[args.job](args.inputs, args.out)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
