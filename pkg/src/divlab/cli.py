"""Command-line surface: one verb per experiment, JSON configs, CSV/JSON artifacts and figures."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, DivlabError

EXPERIMENTS = (
    "ball",
    "wordlen",
    "avoidant",
    "divergence",
    "cyclic",
    "corner",
    "comb",
    "certify",
    "extrinsic",
    "fit",
    "contraction",
)

# allowed parameter names per experiment, with defaults (None: required)
PARAMS = {
    "ball": {"radius": None, "workers": 1, "cap": 5_000_000},
    "wordlen": {"words": None, "cap": 5_000_000},
    "avoidant": {"center": "", "r": None, "source": None, "target": None, "cap": 5_000_000},
    "divergence": {"r": None, "rho": ["1"], "policy": "AllPairs", "samples": None, "seed": None, "cap": 5_000_000},
    "cyclic": {"letter": None, "r": None, "cap": 5_000_000},
    "corner": {"k": None, "r": None, "cap": 5_000_000},
    "comb": {"r": None, "samples": 5, "seed": None, "exact": True},
    "certify": {"constructor": None, "m": None, "n": None, "exact": True},
    "extrinsic": {"n_max": None, "cap": 5_000_000},
    "fit": {"input": None, "family": "power"},
    "contraction": {"axis": None, "d_max": None, "samples": None, "seed": None,
                    "ratios": ["1/4", "1/2", "3/4"], "cap": 5_000_000},
}
SAMPLED = {"comb", "contraction"}
TOP_FIELDS = {"group", "experiment", "parameters", "io"}
GROUP_FIELDS = {"h_model", "m"}
IO_FIELDS = {"cache_dir", "out", "format", "report"}


# ---------------------------------------------------------------------------
# configuration


def load_config(path: str | None, verb: str, overrides: dict) -> dict:
    """Read and validate a config; CLI flags fill the io block."""
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - TOP_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    experiment = raw.get("experiment", verb)
    if experiment != verb:
        raise ConfigError(f"config is for {experiment!r} but the verb is {verb!r}")
    group = dict(raw.get("group", {}))
    if set(group) - GROUP_FIELDS:
        raise ConfigError(f"unknown group fields: {sorted(set(group) - GROUP_FIELDS)}")
    io_block = dict(raw.get("io", {}))
    if set(io_block) - IO_FIELDS:
        raise ConfigError(f"unknown io fields: {sorted(set(io_block) - IO_FIELDS)}")
    for key, value in overrides.items():
        if value is not None:
            io_block[key] = value
    io_block.setdefault("cache_dir", os.environ.get("DIVLAB_CACHE_DIR"))
    io_block.setdefault("format", "csv")
    io_block.setdefault("report", False)
    if io_block["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    params = dict(raw.get("parameters", {}))
    allowed = PARAMS[verb]
    if set(params) - set(allowed):
        raise ConfigError(f"unknown parameters for {verb}: {sorted(set(params) - set(allowed))}")
    for key, default in allowed.items():
        if key not in params:
            if default is None and not _optional(verb, key, params):
                raise ConfigError(f"parameter {key!r} is required for {verb}")
            params[key] = default
    if _is_sampled(verb, params) and params.get("seed") is None:
        raise ConfigError(f"{verb} samples at random and needs a seed")
    if verb not in ("extrinsic", "fit"):
        group.setdefault("h_model", None)
        group.setdefault("m", None)
        if group["h_model"] is None or group["m"] is None:
            raise ConfigError("group.h_model and group.m are required")
    elif verb == "extrinsic" and "h_model" not in group:
        raise ConfigError("group.h_model is required")
    return {"group": group, "experiment": verb, "parameters": params, "io": io_block}


def _optional(verb, key, params):
    if verb == "divergence" and key in ("samples", "seed"):
        return params.get("policy", "AllPairs") == "AllPairs"
    if key == "seed":
        return True  # checked separately for sampled runs
    return False


def _is_sampled(verb, params):
    if verb in SAMPLED:
        return True
    return verb == "divergence" and params.get("policy") == "Sampled"


def _r_list(value) -> list[int]:
    if isinstance(value, int):
        return list(range(1, value + 1))
    if isinstance(value, list) and all(isinstance(v, int) for v in value):
        return value
    if isinstance(value, dict) and set(value) == {"min", "max"}:
        return list(range(value["min"], value["max"] + 1))
    raise ConfigError(f"r must be an int, a list of ints or {{min, max}}, got {value!r}")


def _model(cfg):
    from .groups import make_model

    g = cfg["group"]
    return make_model(g["h_model"], int(g["m"]))


# ---------------------------------------------------------------------------
# experiment runners: each returns (rows, payload for JSON, figure specs)


def run_ball(cfg):
    from .storage import cache_filename, cached_ball, store_ball
    from .cayley import ball

    p = cfg["parameters"]
    model = _model(cfg)
    cache_dir = cfg["io"]["cache_dir"]
    if cache_dir:
        cache = cached_ball(model, p["radius"], cache_dir, workers=p["workers"])
    else:
        cache = ball(model, p["radius"], cap=p["cap"], workers=p["workers"])
    sizes = cache.sphere_sizes()
    rows = [{"model": model.descriptor, "r": r, "sphere": n, "ball": sum(sizes[: r + 1])} for r, n in enumerate(sizes)]
    extra = {"entries": len(cache)}
    if cache_dir:
        path = Path(cache_dir) / cache_filename(model, p["radius"])
        if not path.exists():
            store_ball(cache, path)
        extra["cache_file"] = str(path)
    figs = [("plot_rows", {"y": "sphere", "logy": True, "stem": "ball_sphere_sizes"})]
    return rows, {"rows": rows, **extra}, figs, extra


def run_wordlen(cfg):
    from .cayley import geodesic_word, guide_ball, word_length

    p = cfg["parameters"]
    model = _model(cfg)
    guide = guide_ball(model)
    rows = []
    for w in p["words"]:
        g = model.element(w)
        d = word_length(model, g, cap=p["cap"], cache=guide)
        rows.append({"model": model.descriptor, "word": w, "key": g.key, "length": d,
                     "geodesic": " ".join(geodesic_word(model, g, cap=p["cap"], cache=guide))})
    return rows, {"rows": rows}, [], {}


def run_avoidant(cfg):
    from .cayley import strip_distance

    p = cfg["parameters"]
    model = _model(cfg)
    center = model.element(p["center"])
    res = strip_distance(model, center, p["r"], model.element(p["source"]), model.element(p["target"]), cap=p["cap"])
    row = {"model": model.descriptor, "r": p["r"], "status": res.status, "length": res.length,
           "path": " ".join(res.letters or [])}
    return [row], {"rows": [row]}, [], {}


def run_divergence(cfg):
    from .divergence import AllPairs, Sampled, pair_divergence_curve

    p = cfg["parameters"]
    model = _model(cfg)
    if p["policy"] == "AllPairs":
        policy = AllPairs()
    elif p["policy"] == "Sampled":
        if not p.get("samples"):
            raise ConfigError("Sampled policy needs samples > 0")
        policy = Sampled(int(p["samples"]), int(p["seed"]))
    else:
        raise ConfigError("policy must be AllPairs or Sampled")
    rows, curves = [], []
    for rho in p["rho"]:
        curve = pair_divergence_curve(model, Fraction(rho), _r_list(p["r"]), policy, cap=p["cap"])
        rows.extend(curve.rows())
        curves.append(curve.to_json())
    return rows, {"curves": curves}, [("plot_rows", {"stem": "divergence"})], {}


def run_cyclic(cfg):
    from .divergence import cyclic_divergence

    p = cfg["parameters"]
    model = _model(cfg)
    rows = []
    for r in _r_list(p["r"]):
        res = cyclic_divergence(model, p["letter"], r, cap=p["cap"])
        rows.append({"experiment": "cyclic", "model": model.descriptor, "rho": "", "r": r,
                     "value": "inf" if res.value is None else res.value, "status": res.status, "seed": "",
                     "lower_bound": res.lower_bound, "upper_bound": res.upper_bound})
    return rows, {"rows": rows}, [("plot_bounds", {"stem": "cyclic"})], {}


def corner_rows(model, k: int, rs, cap: int):
    """Exact avoidant geodesics over the k-corners at e, with their certificates."""
    from .cayley import strip_distance
    from .corridors import Corner, Ray, corner_certificate
    from .paths import WordPath

    e = model.identity()
    alphas = [Ray(1), Ray(-1)]
    if k >= 2:
        alphas += [Ray(d, prefix=p, along_k=True) for p in (1, -1) for d in (1, -1)]
    rows = []
    for r in rs:
        for alpha in alphas:
            for beta_dir in (1, -1):
                corner = Corner(e, alpha, Ray(beta_dir, along_k=True), k)
                u, v = corner.alpha_point(r), corner.beta_point(r)
                res = strip_distance(model, e, r, u, v, cap=cap, budget=cap)
                row = {"model": model.descriptor, "k": k, "r": r, "alpha": _ray_label(alpha, k),
                       "beta": beta_dir, "status": res.status, "length": res.length}
                if res.letters is not None:
                    cert = corner_certificate(corner, WordPath(u, tuple(res.letters)), r)
                    row.update({"lower_bound": cert.length_lower_bound, "required": len(cert.required),
                                "all_crossed": cert.all_crossed, "holds": cert.holds})
                rows.append(row)
    return rows


def _ray_label(ray, k):
    sign = "+" if ray.direction == 1 else "-"
    if not ray.along_k:
        return f"a0^{sign}"
    return f"a0^{ray.prefix} a{k}^{sign}" if ray.prefix else f"a{k}^{sign}"


def run_corner(cfg):
    p = cfg["parameters"]
    model = _model(cfg)
    rows = corner_rows(model, int(p["k"]), _r_list(p["r"]), p["cap"])
    return rows, {"rows": rows}, [], {}


def run_comb(cfg):
    from .cayley import guide_ball
    from .paths import comb_to_axis

    p = cfg["parameters"]
    model = _model(cfg)
    rng = random.Random(p["seed"])
    guide = guide_ball(model)
    rows = []
    for r in _r_list(p["r"]):
        if r > guide.radius:
            raise ConfigError(f"comb samples sphere points from the cached ball (r <= {guide.radius})")
        sphere = sorted(guide.sphere(r), key=lambda q: model.wrap(q).key)
        for q in rng.sample(sphere, min(p["samples"], len(sphere))):
            res = comb_to_axis(model, model.wrap(q), r, exact=p["exact"])
            rep = res.report
            rows.append({"model": model.descriptor, "r": r, "x": model.wrap(q).key, "sigma": res.sigma,
                         "length": rep.length, "bound": float(rep.length_bound), "valid": rep.valid})
    return rows, {"rows": rows}, [("plot_rows", {"y": "length", "stem": "comb_lengths"})], {}


def run_certify(cfg):
    from .paths import p_path_report, q_path_report

    p = cfg["parameters"]
    model = _model(cfg)
    ms = p["m"] if isinstance(p["m"], list) else [p["m"]]
    rows = []
    for m in ms:
        for n in _r_list(p["n"]):
            if p["constructor"] == "p":
                reps = [(eps, p_path_report(model, m, n, eps, exact=p["exact"])) for eps in (1, -1)]
            elif p["constructor"] == "q":
                reps = [(s, q_path_report(model, m, n, s * n, exact=p["exact"])) for s in (1, -1)]
            else:
                raise ConfigError("constructor must be 'p' or 'q'")
            for sign, rep in reps:
                rows.append({"model": model.descriptor, "constructor": p["constructor"], "m": m, "n": n,
                             "sign": sign, "length": rep.length, "bound": float(rep.length_bound),
                             "avoids": rep.avoids, "valid": rep.valid})
    return rows, {"rows": rows}, [("plot_rows", {"y": "length", "group": "m", "logy": True,
                                                 "stem": f"certify_{p['constructor']}"})], {}


def run_extrinsic(cfg):
    from .divergence import extrinsic_profile
    from .groups import make_h

    p = cfg["parameters"]
    h = make_h(cfg["group"]["h_model"])
    prof = extrinsic_profile(h, int(p["n_max"]), cap=p["cap"])
    rows = prof.curve.rows()
    payload = {"curve": prof.curve.to_json(), "c1": str(prof.c1), "sandwich_ok": prof.sandwich_ok()}
    return rows, payload, [("plot_rows", {"stem": "extrinsic"})], {"c1": str(prof.c1)}


def run_fit(cfg):
    from .divergence import EXACT, GrowthCurve, Sample, fit_growth

    p = cfg["parameters"]
    try:
        text = Path(p["input"]).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p['input']}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    curves: dict = {}
    for row in reader:
        key = (row.get("experiment", ""), row.get("model", ""), row.get("rho", ""))
        curve = curves.setdefault(key, GrowthCurve(key[0], key[1]))
        value = row.get("value")
        if value in (None, "", "inf"):
            continue
        curve.add(Sample(int(row["r"]), float(value), row.get("status", EXACT)))
    rows = []
    for (exp, model, rho), curve in sorted(curves.items()):
        fit = fit_growth(curve, p["family"])
        rows.append({"experiment": exp, "model": model, "rho": rho, **fit.to_json()})
    return rows, {"rows": rows}, [], {}


def run_contraction(cfg):
    from .divergence import contraction_profile

    p = cfg["parameters"]
    model = _model(cfg)
    ratios = [Fraction(x) for x in p["ratios"]]
    prof = contraction_profile(model, p["axis"], int(p["d_max"]), int(p["samples"]), int(p["seed"]), ratios, p["cap"])
    rows = [{"model": model.descriptor, **s} for s in prof.samples]
    return rows, prof.to_json(), [("plot_rows", {"x": "d", "y": "diameter", "group": "ratio",
                                                 "stem": "contraction"})], {}


RUNNERS = {name: globals()[f"run_{name}"] for name in EXPERIMENTS}


# ---------------------------------------------------------------------------
# output


def render_rows(rows: list[dict], fmt: str, payload: dict) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    if not rows:
        return ""
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fields})
    return buf.getvalue()


def render_figures(rows, figs, out_dir) -> list[str]:
    from . import plotting

    written = []
    for kind, opts in figs:
        fn = getattr(plotting, kind)
        written.append(str(fn(rows, out_dir, **opts)))
    return written


def run(cfg: dict) -> dict:
    """Execute one validated config; writes artifacts when io.out is set and returns a summary."""
    from .storage import config_hash, write_manifest

    verb = cfg["experiment"]
    t0 = time.perf_counter()
    rows, payload, figs, extra = RUNNERS[verb](cfg)
    elapsed = time.perf_counter() - t0
    fmt = cfg["io"]["format"]
    text = render_rows(rows, fmt, payload)
    out = cfg["io"].get("out")
    artifacts = []
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        data_path = out_dir / f"{verb}.{fmt}"
        data_path.write_text(text)
        artifacts.append(str(data_path))
        if cfg["io"].get("report") and figs:
            artifacts.extend(render_figures(rows, figs, out_dir))
        write_manifest(out_dir, cfg, artifacts, {"seconds": round(elapsed, 3)},
                       {"rows": len(rows), **extra})
    return {"text": text, "artifacts": artifacts, "config_hash": config_hash(cfg), "rows": rows}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divlab", description="Divergence experiments on the G_m tower.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in EXPERIMENTS:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--cache-dir", help="directory for ball cache files")
        sp.add_argument("--out", help="output directory for data, figures and manifest")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--report", action="store_true", default=None, help="also render PNG figures into --out")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.verb, {
            "cache_dir": args.cache_dir,
            "out": args.out,
            "format": args.format,
            "report": args.report,
        })
        if cfg["io"].get("report") and not cfg["io"].get("out"):
            raise ConfigError("--report needs --out for the figure files")
        result = run(cfg)
    except DivlabError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.code}
        print(json.dumps(err), file=sys.stderr)
        return exc.code
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        err = {"error": "InternalError", "message": f"{type(exc).__name__}: {exc}", "exit_code": 1}
        print(json.dumps(err), file=sys.stderr)
        return 1
    if not cfg["io"].get("out"):
        sys.stdout.write(result["text"])
    else:
        print(json.dumps({"artifacts": result["artifacts"], "config_hash": result["config_hash"]}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
