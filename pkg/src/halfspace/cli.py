"""Command-line entry point: kernel evaluation, estimate verification sweeps,
decay experiments, Picard solver runs, and report plots.

Subcommands
-----------
kernel   evaluate a kernel at points given on the command line
verify   run a named bound/estimate check, write report.json + report.csv
decay    run the decay-rate experiment, write decay.json + slopes.csv
solve    run a Picard solver from a JSON config, write trace.json + fields
plot     render a JSON report (decay table, trace, or sweep) as SVG

Reports are deterministic for a fixed config and seed: floats are written in
shortest round-trip form, keys are sorted, and no timestamps are embedded.
A lockfile guards each output directory; HALFSPACE_THREADS caps the sweep
parallelism.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import verifier
from .errors import HalfspaceError, InputDomainError
from .fields import TensorGrid, WeightedNormSpec, save_field
from .green_tensor import StripQuadrature, TensorIndex, g_breve, g_star
from .kernels import MultiIndex, green_heat_d, green_heat_n, heat_kernel, laplace_fundamental
from .mild_solvers import PicardConfig, picard_fm_mhd, picard_mhd, picard_nlcf, picard_nse
from .samples import director_bump, discrete_curl_field, star_solenoidal_bump

CHECK_BOUNDS = {
    "radial-power": "int_0^L r^(d-1) (r+a)^(-k) dr vs three-branch closed form",
    "two-center": "int dz ((|z|+a)^k (|z-x|+b)^m)^(-1) vs five-term closed form",
    "halfline-product": "int_0^inf (z+A)^(-k) (z+1)^(-m) dz vs closed form, k > 1",
    "log-damping": "t^(-k/2) e^(-r^2/ct) log(2+r) vs (r+sqrt t)^(-k) log(2+t)",
    "heat-decay-conv": "int Gamma_k(x-y,t) (|y|+1)^(-a) dy vs weighted bound with log/power factors",
    "pointwise-gstar": "|Gstar| vs exp(-c yn^2/t) t^(-m-q/2) (|x*-y|^2+t)^(-(l+n)/2) (xn^2+t)^(-k/2)",
    "pointwise-gn": "|GN| vs (|x-y|^2+t)^(-(n+order)/2)",
    "pointwise-gd": "|GD| vs (|x-y|^2+t)^(-(n+order)/2)",
    "heat-lq": "heat semigroup L^p->L^q rate t^(-(k+l)/2-(n/2)(1/p-1/q))",
    "ya-linear": "heat semigroup in Y_a, rate 1 + [a=n] log_+ t",
    "ya-bilinear": "gradient-kernel action on Y_2a data, rate t^(-1/2)",
    "za-linear": "heat semigroup in Z_a, rate 1 + [a=1] log_+ t",
    "uloc-lq": "heat semigroup in L^q_uloc, rate t^(-(k+l)/2) (1 + t^(-(n/2)(1/p-1/q)))",
    "mixed-linear": "Stokes semigroup in Y_{a,b}, rate 1 + ([b=1]+[a+b=n]) log_+ t",
    "mixed-bilinear": "Duhamel integrand in Y_{a,b}, rate t^(-1/2) |F|_{Y_{2a,2b}}",
    "bdry-linear": "Stokes semigroup in Z_{a,alpha}, rate 1 + [a=n] log_+ t",
    "bdry-bilinear": "Duhamel integrand in Z_{a,alpha}, rate t^(-1/2) + t^(-(1+mu)/2)",
}

VERIFY_RUNNERS = {
    "radial-power": verifier.check_radial_power,
    "two-center": verifier.check_two_center,
    "halfline-product": verifier.check_halfline_product,
    "log-damping": verifier.check_log_damping,
    "heat-decay-conv": verifier.check_heat_decay_conv,
    "pointwise-gstar": lambda **kw: verifier.sweep_pointwise_bound("gstar", **kw),
    "pointwise-gn": lambda **kw: verifier.sweep_pointwise_bound("gn", **kw),
    "pointwise-gd": lambda **kw: verifier.sweep_pointwise_bound("gd", **kw),
    **{k: (lambda k_: lambda **kw: verifier.sweep_semigroup_scaling(k_, **kw))(k) for k in verifier.SCALING_SWEEPS},
}


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and obj == float("inf"):
        return "inf"
    return obj


def _dump_json(payload, path):
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n")


def _config_hash(cfg):
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _load_config(path, allowed, label):
    cfg = json.loads(Path(path).read_text()) if path else {}
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise InputDomainError(f"unknown {label} config keys: {sorted(unknown)}; allowed: {sorted(allowed)}")
    return cfg


class _OutputDir:
    """Exclusive ownership of the output directory via a lockfile."""

    def __init__(self, path):
        self.path = Path(path)
        self.lock = self.path / ".halfspace.lock"

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        if self.lock.exists():
            raise HalfspaceError(f"output directory {self.path} is locked by another run")
        self.lock.write_text(str(os.getpid()))
        return self.path

    def __exit__(self, *exc):
        self.lock.unlink(missing_ok=True)
        return False


def _parse_floats(text):
    return [float(tok) for tok in text.split(",") if tok != ""]


def _write_csv(rows, header, path):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (int, float, np.floating)) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

def _cmd_kernel(args):
    x = np.array(_parse_floats(args.x))
    deriv = MultiIndex(*[int(v) for v in args.deriv.split(",")]) if args.deriv else None
    if args.kernel == "gamma":
        val = heat_kernel(x, args.t, deriv)
    elif args.kernel == "e":
        val = laplace_fundamental(x, grad_order=0)
    else:
        if args.y is None:
            raise InputDomainError(f"kernel {args.kernel} needs --y")
        y = np.array(_parse_floats(args.y))
        if args.kernel == "gn":
            val = green_heat_n(x, y, args.t, deriv)
        elif args.kernel == "gd":
            val = green_heat_d(x, y, args.t, deriv)
        elif args.kernel in ("gstar", "gbreve"):
            idx = TensorIndex(args.i, args.j)
            quad = StripQuadrature()
            fn = g_star if args.kernel == "gstar" else g_breve
            val = fn(idx, x, y, args.t, quad)
        else:
            raise InputDomainError(f"unknown kernel {args.kernel}")
    print(repr(float(val)))
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _cmd_verify(args):
    if args.check not in VERIFY_RUNNERS:
        raise InputDomainError(f"unknown check {args.check!r}; options: {sorted(VERIFY_RUNNERS)}")
    cfg = _load_config(args.config, {"params", "seed"}, "verify")
    params = cfg.get("params", {})
    seed = int(cfg.get("seed", 0))
    np.random.seed(seed)
    deriv = params.pop("deriv", None)
    if deriv is not None:
        params["deriv"] = MultiIndex(*deriv)
    report = VERIFY_RUNNERS[args.check](**params)
    with _OutputDir(args.out) as out:
        payload = report.to_dict()
        payload["bound"] = CHECK_BOUNDS.get(args.check, "")
        payload["config_hash"] = _config_hash({"check": args.check, "params": _jsonable(cfg)})
        payload["seed"] = seed
        _dump_json(payload, out / "report.json")
        _write_csv(
            [(report.check_id, report.verdict, report.sup_ratio, report.n_samples)],
            ["check", "verdict", "sup_ratio", "n_samples"],
            out / "report.csv",
        )
    print(f"{report.check_id}: verdict={report.verdict} sup_ratio={report.sup_ratio!r}")
    return 0


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

DECAY_KEYS = {"q_values", "t_values", "extent", "shape", "sigma", "height", "mass_tol", "seed"}


def _cmd_decay(args):
    cfg = _load_config(args.config, DECAY_KEYS, "decay")
    if args.q:
        cfg["q_values"] = [np.inf if tok in ("inf", "Inf") else float(tok) for tok in args.q.split(",")]
    if args.grid:
        cfg["shape"] = (int(args.grid), int(args.grid) + 1)
    if args.extent:
        cfg["extent"] = float(args.extent)
    cfg.pop("seed", None)
    if "shape" in cfg:
        cfg["shape"] = tuple(int(s) for s in cfg["shape"])
    table = verifier.decay_experiment(**cfg)
    with _OutputDir(args.out) as out:
        payload = dict(table)
        payload["config_hash"] = _config_hash(cfg)
        _dump_json(payload, out / "decay.json")
        rows = [
            (name, rec["slope"], rec["r2"], rec["envelope_exponent"])
            for name, rec in table["slopes"].items()
        ]
        _write_csv(rows, ["norm", "slope", "r2", "envelope_exponent"], out / "slopes.csv")
    for name, rec in table["slopes"].items():
        print(f"{name}: slope={rec['slope']:.4f} r2={rec['r2']:.5f} envelope={rec['envelope_exponent']}")
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

SOLVE_KEYS = {
    "system",
    "horizon",
    "n_time_nodes",
    "duhamel_nodes",
    "max_iterations",
    "tolerance",
    "norm",
    "grid",
    "data",
    "seed",
    "save_history",
}
GRID_KEYS = {"extent", "normal_extent", "shape"}
DATA_KEYS = {
    "velocity_amplitude",
    "sigma",
    "center",
    "magnetic_amplitude",
    "magnetic_center",
    "director_tilt",
    "director_sigma",
    "d_far",
    "d_wall",
}


def _build_grid(cfg):
    g = cfg.get("grid", {})
    unknown = set(g) - GRID_KEYS
    if unknown:
        raise InputDomainError(f"unknown grid keys: {sorted(unknown)}")
    extent = float(g.get("extent", 8.0))
    normal = float(g.get("normal_extent", extent))
    shape = tuple(int(s) for s in g.get("shape", (64, 65)))
    return TensorGrid(2, extent, normal, shape)


def _build_norm(cfg):
    norm = dict(cfg.get("norm", {"family": "Yab", "a": 1.0, "b": 0.5}))
    fam = norm.pop("family")
    if norm.get("q") in ("inf", "Inf"):
        norm["q"] = np.inf
    return WeightedNormSpec(fam, **norm)


def _cmd_solve(args):
    cfg = _load_config(args.config, SOLVE_KEYS, "solve")
    system = args.system or cfg.get("system")
    if system is None:
        raise InputDomainError("solve needs --system or a 'system' config entry")
    cfg["system"] = system
    data = cfg.get("data", {})
    unknown = set(data) - DATA_KEYS
    if unknown:
        raise InputDomainError(f"unknown data keys: {sorted(unknown)}")
    grid = _build_grid(cfg)
    pc = PicardConfig(
        system=system,
        horizon=float(cfg.get("horizon", 0.25)),
        n_time_nodes=int(cfg.get("n_time_nodes", 5)),
        norm_spec=_build_norm(cfg),
        max_iterations=int(cfg.get("max_iterations", 12)),
        tolerance=float(cfg.get("tolerance", 1e-9)),
        duhamel_nodes=int(cfg.get("duhamel_nodes", 12)),
        d_far=tuple(data["d_far"]) if "d_far" in data else None,
        d_wall=tuple(data["d_wall"]) if "d_wall" in data else None,
    )
    amp = float(data.get("velocity_amplitude", 0.1))
    sigma = float(data.get("sigma", 0.9))
    center = tuple(data.get("center", (0.0, 0.5 * grid.normal_extent)))
    u0 = discrete_curl_field(grid, center=center, sigma=sigma, amplitude=amp)
    if system == "nse":
        result = picard_nse(u0, pc)
    elif system in ("mhd", "fm_mhd"):
        bamp = float(data.get("magnetic_amplitude", 0.5 * amp))
        bcenter = tuple(data.get("magnetic_center", center))
        if system == "mhd":
            b0 = star_solenoidal_bump(grid, center=bcenter, sigma=sigma, amplitude=bamp)
            result = picard_mhd(u0, b0, pc)
        else:
            b0 = discrete_curl_field(grid, center=bcenter, sigma=sigma, amplitude=bamp)
            result = picard_fm_mhd(u0, b0, pc)
    elif system in ("nlcf_n", "nlcf_d"):
        d_ref = pc.d_far if system == "nlcf_n" else pc.d_wall
        d0 = director_bump(
            grid,
            d_ref,
            tilt=float(data.get("director_tilt", 0.12)),
            sigma=float(data.get("director_sigma", 1.2)),
            wall_aligned=(system == "nlcf_d"),
        )
        result = picard_nlcf(u0, d0, pc)
    else:
        raise InputDomainError(f"unknown system {system}")

    with _OutputDir(args.out) as out:
        payload = result.trace.to_dict()
        payload["system"] = system
        payload["times"] = list(result.times)
        payload["config_hash"] = _config_hash(cfg)
        payload["seed"] = int(cfg.get("seed", 0))
        _dump_json(payload, out / "trace.json")
        for name in result.histories:
            field = result.field_at(name, len(result.times) - 1)
            save_field(field, out / f"{name}_final.csv")
            if cfg.get("save_history"):
                for k in range(len(result.times)):
                    save_field(result.field_at(name, k), out / f"{name}_{k:03d}.csv")
    print(f"{system}: verdict={result.trace.verdict} iterations={len(result.trace.diffs)}")
    if result.trace.ratios:
        print(f"final contraction ratio: {result.trace.ratios[-1]!r}")
    return 0


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def _cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "halfspace"
    data = json.loads(Path(args.input).read_text())
    fig, ax = plt.subplots(figsize=(6, 4))
    if "slopes" in data:
        ts = np.asarray(data["t_values"], dtype=float)
        for name, rec in sorted(data["slopes"].items()):
            vals = np.asarray(rec["values"], dtype=float)
            ax.loglog(ts, vals, "o-", label=f"{name} (slope {rec['slope']:.2f})")
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
        ax.legend(fontsize=7)
        ax.set_title("decay experiment")
    elif "diffs" in data:
        ax.semilogy(np.arange(1, len(data["diffs"]) + 1), data["diffs"], "o-", label="successive diff")
        if data.get("norms"):
            ax.semilogy(np.arange(1, len(data["norms"]) + 1), data["norms"], "s--", label="iterate norm")
        ax.set_xlabel("iteration")
        ax.legend(fontsize=8)
        ax.set_title(f"{data.get('system', 'picard')} trace: {data.get('verdict', '')}")
    else:
        ax.axhline(data.get("sup_ratio", 0.0), color="k", ls="--", label="sup ratio")
        ax.set_title(f"{data.get('check_id', 'report')}: {data.get('verdict', '')}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, format="svg", metadata={"Date": None})
    print(f"wrote {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="halfspace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="evaluate kernels at points")
    ksub = k.add_subparsers(dest="kaction", required=True)
    ke = ksub.add_parser("eval", help="print one kernel value")
    ke.add_argument("--kernel", required=True, choices=["gamma", "e", "gn", "gd", "gstar", "gbreve"])
    ke.add_argument("--n", type=int, default=2)
    ke.add_argument("--x", required=True, help="comma-separated coordinates")
    ke.add_argument("--y", help="comma-separated source coordinates")
    ke.add_argument("--t", type=float, default=1.0)
    ke.add_argument("--i", type=int, default=1)
    ke.add_argument("--j", type=int, default=1)
    ke.add_argument("--deriv", help="l,k,q,m derivative orders")
    ke.set_defaults(fn=_cmd_kernel)

    v = sub.add_parser("verify", help="run a bound/estimate check")
    v.add_argument("--check", required=True)
    v.add_argument("--config", help="JSON file with optional params/seed")
    v.add_argument("--out", required=True)
    v.set_defaults(fn=_cmd_verify)

    d = sub.add_parser("decay", help="decay-rate experiment")
    d.add_argument("--config", help="JSON config")
    d.add_argument("--q", help="comma list, e.g. inf,2")
    d.add_argument("--grid", type=int, help="tangential node count")
    d.add_argument("--extent", type=float)
    d.add_argument("--out", required=True)
    d.set_defaults(fn=_cmd_decay)

    s = sub.add_parser("solve", help="run a Picard solver")
    s.add_argument("--system", choices=["nse", "mhd", "fm_mhd", "nlcf_n", "nlcf_d"])
    s.add_argument("--config", help="JSON config")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_solve)

    pl = sub.add_parser("plot", help="render a report as SVG")
    pl.add_argument("--input", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(fn=_cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except HalfspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
