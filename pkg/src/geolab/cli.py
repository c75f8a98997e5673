"""Command-line experiment runner.

    geolab <subcommand> [--config PATH] [--seed N] [--samples N] [--metric JSON]
                        [--model M] [--action A] [--horizon H] [--out PATH] [--format csv|json]

Exit codes: 0 when every property check of the subcommand passed, 1 when one
failed, 2 on configuration errors, 3 on a degenerate metric at a requested point.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import cheeger as C
from . import curvature as CV
from . import geodesics as G
from . import models as M
from . import serialize as S
from . import star as ST
from .errors import BadParameter, ConfigError, DegenerateMetric, GeolabError, ShootingFailed, SingularDeformation

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3

DEFAULT_ACTION = {"minkowski": "translation", "su2": "su2-conj", "s7": "s7-star", "sp2": "sp2-bullet",
                  "sigma": "sigma-bullet"}


@dataclass
class ExperimentConfig:
    seed: int = 0
    model: str = "su2"
    action: Optional[str] = None
    metric: dict = field(default_factory=lambda: {"kind": "Ambient"})
    samples: int = 10
    horizon: float = 10.0
    step: float = 1e-2
    out: Optional[str] = None
    format: str = "csv"
    points: Optional[list] = None

    def __post_init__(self):
        if self.model not in M.DIM:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.action is None:
            self.action = DEFAULT_ACTION[self.model]
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed))

    def spec(self) -> C.MetricSpec:
        d = dict(self.metric)
        d.setdefault("model", self.model)
        if d.get("action") is None and d["kind"] in ("Cheeger", "FixedLorentz"):
            d["action"] = self.action
        try:
            return C.spec_from_json(d)
        except (KeyError, TypeError, GeolabError) as exc:
            raise ConfigError(f"bad metric spec: {exc}") from exc


@dataclass
class Result:
    header: List[str]
    rows: List[list]
    summary: dict
    passed: bool

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return S.csv_text(self.header, self.rows)
        return S.json_text({"columns": self.header, "rows": self.rows, "summary": self.summary,
                            "passed": self.passed})


def _sample_point(cfg: ExperimentConfig, spec: C.MetricSpec, rng) -> M.ManifoldPoint:
    if spec.kind in ("Cheeger", "FixedLorentz") or cfg.model in ("sigma",):
        return M.random_principal_point(cfg.model, spec.action or cfg.action, rng)
    return M.random_point(cfg.model, rng)


# ---------------------------------------------------------------------------
# subcommands

def cmd_curvature_table(cfg: ExperimentConfig) -> Result:
    spec = cfg.spec()
    rng = cfg.rng()
    n = M.DIM[cfg.model]
    header = ["id", "kappa_t", "kappa_0", "kappa_numeric", "rel_err", "sectional"]
    header += [f"ricci_eig_{i}" for i in range(n)] + ["scalar"]
    rows = []
    ok = True
    n_rows = len(cfg.points) if cfg.points else cfg.samples
    for k in range(n_rows):
        if cfg.points:
            try:
                p = M.point(cfg.model, cfg.points[k])
            except (ValueError, GeolabError) as exc:
                raise ConfigError(f"bad point {k}: {exc}") from exc
        else:
            p = _sample_point(cfg, spec, rng)
        v = M.random_tangent(p, rng)
        w = M.random_tangent(p, rng)
        rep = CV.curvature_report(p, spec)
        k0 = CV.base_riemann(p, v.flat, w.flat, w.flat, v.flat)
        if spec.kind == "Cheeger":
            kt = C.kappa_t(v, w, spec.t, spec.action)
            vi = C.c_t_inverse(v, spec.t, spec.action)
            wi = C.c_t_inverse(w, spec.t, spec.action)
        elif spec.kind in ("Ambient", "Minkowski"):
            kt, vi, wi = k0, v, w
        else:
            kt, vi, wi = math.nan, v, w
        num = rep.riemann_eval(vi, wi, wi, vi)
        err = abs(num - kt) / max(abs(kt), 1e-12) if np.isfinite(kt) else math.nan
        if spec.kind == "Minkowski":
            err = abs(num - kt)
        sec = rep.sectional(v, w)
        ev = np.sort(np.linalg.eigvals(np.linalg.solve(rep.metric, rep.ricci)).real)
        rows.append([k, kt, k0, num, err, sec] + list(ev) + [rep.scalar])
        if np.isfinite(err) and err >= 1e-3:
            ok = False
        if spec.kind == "Minkowski" and max(abs(x) for x in [num, sec, rep.scalar, *ev]) >= 1e-6:
            ok = False
    errs = [r[4] for r in rows if np.isfinite(r[4])]
    return Result(header, rows, {"max_rel_err": max(errs, default=math.nan)}, ok)


def cmd_ricci_sweep(cfg: ExperimentConfig) -> Result:
    spec = cfg.spec()
    if spec.kind != "Cheeger" or spec.t >= -1:
        raise ConfigError("ricci-sweep needs a Cheeger metric with t < -1")
    r = math.sqrt(-spec.t)
    rng = cfg.rng()
    header = ["id", "ricci_exact", "ricci_display", "lorentzian"]
    rows = []
    for k in range(cfg.samples):
        p = M.random_principal_point(cfg.model, spec.action, rng)
        v = M.random_tangent(p, rng)
        v = M.TangentVector(p, v.flat / np.linalg.norm(v.flat))
        ric = C.ricci_cheeger_exact(v, spec.t, spec.action)
        disp = C.ricci_closed_general(v, r, spec.action)
        lor = bool(C.lorentzian_region(cfg.model, spec.action, p.flat, r))
        rows.append([k, ric, disp, lor])
    mn = min(row[1] for row in rows)
    return Result(header, rows, {"min_ricci": mn, "min_display": min(row[2] for row in rows)}, mn > 0)


def cmd_geodesic(cfg: ExperimentConfig) -> Result:
    spec = cfg.spec()
    rng = cfg.rng()
    icfg = G.IntegratorConfig(step=cfg.step, max_param=cfg.horizon, sample_every=max(1, int(round(1.0 / cfg.step))))
    n_each = max(1, cfg.samples // 2)
    rep = G.completeness_probe(cfg.model, spec, n_each, cfg.horizon, rng, icfg)
    header = ["id", "causal", "aborted", "energy_drift", "killing_drift", "constraint", "final_param"]
    rows = []
    for k, tr in enumerate(rep.traces):
        rows.append([k, tr.causal.value, tr.aborted or "", tr.energy_drift, tr.killing_drift,
                     tr.constraint_violation, float(tr.s[-1])])
    ok = rep.complete and rep.max_energy_drift < 1e-5 and rep.max_killing_drift < 1e-5
    summary = {"n_aborted": rep.n_aborted, "max_energy_drift": rep.max_energy_drift,
               "max_killing_drift": rep.max_killing_drift, "causal_counts": rep.causal_counts}
    return Result(header, rows, summary, ok)


def _fixed_candidates(cfg: ExperimentConfig, rng) -> List[tuple]:
    out = [("random", M.random_point(cfg.model, rng)) for _ in range(cfg.samples)]
    if cfg.model == "s7":
        for a in np.linspace(0, 2 * math.pi, 12, endpoint=False):
            out.append(("real-circle", M.point("s7", [math.cos(a), 0, 0, 0, math.sin(a), 0, 0, 0])))
        for _ in range(12):
            z = rng.standard_normal(4)
            z /= np.linalg.norm(z)
            out.append(("complex-slice", M.point("s7", [z[0], z[1], 0, 0, z[2], z[3], 0, 0])))
    elif cfg.model == "su2":
        for a in np.linspace(0, 2 * math.pi, 12, endpoint=False):
            out.append(("complex-circle", M.point("su2", [math.cos(a), math.sin(a), 0, 0])))
    return out


def cmd_fixed_points(cfg: ExperimentConfig) -> Result:
    rng = cfg.rng()
    header = ["id", "family", "isotropy", "fixed", "im_a_plus_im_b"]
    rows = []
    ok = True
    counts: Dict[str, int] = {}
    for k, (fam, p) in enumerate(_fixed_candidates(cfg, rng)):
        iso = M.isotropy_scan(cfg.model, cfg.action, p)
        fixed = iso.kind == "FullCircle"
        x = p.coords
        im = float(sum(np.linalg.norm(q[1:]) for q in x))
        rows.append([k, fam, iso.kind, fixed, im])
        counts[iso.kind] = counts.get(iso.kind, 0) + 1
        if fam == "real-circle" and not fixed:
            ok = False
        if fixed != M.is_fixed(cfg.model, cfg.action, p):
            ok = False
    fixed_rows = [r for r in rows if r[3]]
    summary = {"isotropy_counts": counts, "n_fixed": len(fixed_rows),
               "fixed_families": sorted({r[1] for r in fixed_rows})}
    return Result(header, rows, summary, ok)


def cmd_orbit_compare(cfg: ExperimentConfig) -> Result:
    rng = cfg.rng()
    header = ["pair", "len_M", "len_M_prime", "residual"]
    rows = []
    ok = True
    for k in range(cfg.samples):
        p1 = M.random_point("sp2", rng)
        p2 = M.random_point("sp2", rng)
        try:
            res = ST.orbit_length_compare(p1, p2, seed=cfg.seed + k)
        except ShootingFailed:
            rows.append([k, math.nan, math.nan, math.nan])
            ok = False
            continue
        rows.append([k, res.len_M, res.len_M_prime, res.residual])
        ok = ok and res.residual < 1e-5
    return Result(header, rows, {"max_residual": max((r[3] for r in rows), default=math.nan)}, ok)


COMMANDS: Dict[str, Callable[[ExperimentConfig], Result]] = {
    "curvature-table": cmd_curvature_table,
    "ricci-sweep": cmd_ricci_sweep,
    "geodesic": cmd_geodesic,
    "fixed-points": cmd_fixed_points,
    "orbit-compare": cmd_orbit_compare,
}


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("seed", "samples", "model", "action", "horizon", "step", "out", "format"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.metric is not None:
        try:
            data["metric"] = json.loads(args.metric)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--metric is not JSON: {exc}") from exc
    unknown = set(data) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geolab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--model")
    ap.add_argument("--action")
    ap.add_argument("--metric", help="metric as JSON, e.g. '{\"kind\": \"Cheeger\", \"t_or_r\": -2}'")
    ap.add_argument("--horizon", type=float)
    ap.add_argument("--step", type=float)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=["csv", "json"])
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, BadParameter) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateMetric, SingularDeformation) as exc:
        print(f"degenerate metric: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    text = result.render(cfg.format)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    status = "passed" if result.passed else "FAILED"
    print(f"{args.command}: {status} {S.json_text(result.summary).strip()}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
