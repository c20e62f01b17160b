"""Command line pipeline: spectrum -> graphs -> intersect -> verify.

All artifacts are JSON/CSV written to the output directory.  Outputs are
deterministic for a fixed config and seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, validate_config
from .graphs import GraphError, GraphMap
from .intersection import IntersectionError, build_system, build_wc
from .models import DelayModel, ModelError
from .segments import from_flat, make_grid, seg_eval
from .semiflow import SemiflowError, integrate, project_to_xf, xf_defect
from .spectral import SpectralError, decompose
from . import verify as ver


def _np_default(o):
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_np_default) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _graded_lex(monos):
    return sorted(monos, key=lambda e: (sum(e), tuple(-x for x in e)))


def graphmap_payload(g: GraphMap) -> dict:
    monos = _graded_lex({e for p in g.cod_series + g.z_series
                         for e in p.terms})
    return {
        "order": g.order,
        "dims": {"dom": g.dim_dom, "cod": g.dim_cod, "z": len(g.z_series)},
        "dom_blocks": list(g.dom_names),
        "cod_blocks": list(g.cod_names),
        "monomials": [list(e) for e in monos],
        "coefficients": {
            "cod": [[p.coeff(e).real for e in monos] for p in g.cod_series],
            "z": [[p.coeff(e).real for e in monos] for p in g.z_series],
        },
    }


class Pipeline:
    """Caches the shared stages across subcommands."""

    def __init__(self, cfg: RunConfig, out: Path, quiet: bool):
        self.cfg = cfg
        self.out = out
        self.quiet = quiet
        self.m = DelayModel(cfg.model.g, cfg.model.r, cfg.model.h)
        self.grid = make_grid(cfg.model.h, self.m.n, cfg.grid.N)
        self._decomp = None
        self._sys = None
        self._wc = None

    def say(self, msg: str) -> None:
        if not self.quiet:
            print(msg)

    @property
    def decomp(self):
        if self._decomp is None:
            self._decomp = decompose(self.m, self.grid,
                                     polish=self.cfg.spectral.polish,
                                     tol_center=self.cfg.spectral.tol_center)
        return self._decomp

    @property
    def system(self):
        if self._sys is None:
            self._sys = build_system(self.m, self.decomp,
                                     self.cfg.graphs.order,
                                     self.cfg.graphs.domain_radius)
        return self._sys

    @property
    def wc(self):
        if self._wc is None:
            self._wc = build_wc(self.system,
                                stencil_size=self.cfg.intersect.stencil_size)
        return self._wc

    # -- stages -------------------------------------------------------
    def spectrum(self) -> bool:
        d = self.decomp
        lams = [complex(z) for z in d.eigenvalues]
        payload = {
            "schema": 1,
            "eigenvalues": [[z.real, z.imag] for z in lams],
            "tags": list(d.tags),
            "residuals": [float(r) for r in d.char_residuals],
            "dims": {"u": d.dim_u, "c": d.dim_c, "s": d.dim_s},
            "roots_c": [[z.real, z.imag] for z in d.roots_c],
            "roots_u": [[z.real, z.imag] for z in d.roots_u],
        }
        _write_json(self.out / "spectrum.json", payload)
        _write_csv(self.out / "spectrum.csv", ["re", "im", "tag", "residual"],
                   [[z.real, z.imag, t, float(r)]
                    for z, t, r in zip(lams, d.tags, d.char_residuals)])
        self.say(f"spectrum: dims u={d.dim_u} c={d.dim_c} s={d.dim_s}")
        return True

    def simulate(self) -> bool:
        cfg = self.cfg.simulate
        d = self.decomp
        phi0 = cfg.radius * d.basis_c[:, 0]
        seg0 = project_to_xf(self.m, from_flat(self.grid, phi0), d.basis_Z)
        traj = integrate(self.m, seg0, cfg.horizon, cfg.dt,
                         out_dt=cfg.out_dt, defect_tol=1e-6)
        rows = []
        for t, seg in zip(traj.times, traj.segments):
            x0 = seg_eval(seg, 0.0)
            rows.append([t, *[float(v) for v in x0],
                         xf_defect(self.m, seg)])
        header = ["t"] + [f"x{i+1}" for i in range(self.m.n)] + ["xf_defect"]
        _write_csv(self.out / "simulate.csv", header, rows)
        self.say(f"simulate: {len(rows)} output segments")
        return True

    def graphs(self) -> bool:
        sys_ = self.system
        payload = {"schema": 1,
                   "center_stable": graphmap_payload(sys_.w_cs),
                   "center_unstable": graphmap_payload(sys_.w_cu)}
        _write_json(self.out / "graphs.json", payload)
        self.say(f"graphs: order {self.cfg.graphs.order} solved")
        return True

    def intersect(self) -> bool:
        wc = self.wc
        payload = {"schema": 1, "w_c": graphmap_payload(wc),
                   "diagnostics": {
                       k: v for k, v in wc.diagnostics.items()}}
        _write_json(self.out / "wc.json", payload)
        rng = np.random.default_rng(self.cfg.seed)
        rows = []
        dc = wc.dim_dom
        for r in self.cfg.verify.radii:
            for _ in range(8):
                v = rng.standard_normal(dc)
                c = r * v / np.linalg.norm(v)
                seg = wc.lift(c, strict=False)
                rows.append([*[float(x) for x in c],
                             *[float(x) for x in seg.flat()]])
        header = [f"c{i+1}" for i in range(dc)] + \
            [f"v{j}" for j in range(self.grid.size)]
        _write_csv(self.out / "wc_points.csv", header, rows)
        self.say(f"intersect: route mismatch "
                 f"{wc.diagnostics['route_mismatch']:.2e}")
        return True

    def verify(self) -> bool:
        cfg = self.cfg.verify
        reports = ver.run_suite(self.m, self.system, self.wc,
                                radii=tuple(cfg.radii), T=cfg.horizon,
                                tol_c2=cfg.tolerance)
        _write_json(self.out / "report.json",
                    {"schema": 1,
                     "reports": [r.to_dict() for r in reports]})
        ok = True
        for r in reports:
            ok = ok and r.passed
            rows = []
            for s in r.samples:
                rows.append([json.dumps(s, sort_keys=True,
                                        default=_np_default)])
            _write_csv(self.out / f"verify_{r.tag}.csv", ["sample"], rows)
            self.say(f"verify {r.tag}: max defect {r.max_defect:.3e} "
                     f"tol {r.tolerance:.1e} "
                     f"{'PASS' if r.passed else 'FAIL'}")
        return ok


STAGES = ("spectrum", "simulate", "graphs", "intersect", "verify")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="delaymanifolds")
    ap.add_argument("subcommand", choices=STAGES + ("all",))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default="out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--order", type=int)
    ap.add_argument("--nodes", type=int)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.order is not None:
            cfg.graphs.order = args.order
        if args.nodes is not None:
            cfg.grid.N = args.nodes
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = Pipeline(cfg, out, args.quiet)
    stages = STAGES if args.subcommand == "all" else (args.subcommand,)
    ok = True
    try:
        for stage in stages:
            ok = getattr(pipe, stage)() and ok
    except (ModelError, SpectralError, GraphError, IntersectionError,
            SemiflowError, ver.VerifyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
