"""Command-line front end.

Subcommands: analyze (circle-stability analysis of a parameter set),
evolve (level-set descent), synth (benchmark scene generation), score
(detection scoring), fit (intensity model fit), taylor-check (polygon
oracle versus the second-order expansion).

Exit codes: 0 success, 1 I/O or parse failure, 2 invalid parameters,
3 evolution did not converge.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import InvalidConfig, RunConfig, config_hash, load_config
from .contour import FourierPerturbation, taylor_residual
from .levelset import (
    EmptyRegion,
    EvolveOpts,
    LevelSetField,
    evolve,
    field_from_mask,
    init_shape,
    mask_from_field,
)
from .likelihood import DegenerateClass, ImageGrid, fit as fit_likelihood
from .pgm import read_mask, read_pgm, write_mask, write_pgm
from .stability import DegenerateG10, extrema_scan
from .synth import (
    ConstantImage,
    PlacementFailed,
    SceneTruth,
    add_noise,
    gen_circles,
    gen_dumbbell,
    rescale01,
    score as score_mask,
)

_EXIT_OK = 0
_EXIT_IO = 1
_EXIT_INVALID = 2
_EXIT_NONCONV = 3


def _header(seed, cfg_text: str) -> str:
    return f"# circlegas {__version__} seed={seed} config={config_hash(cfg_text)}"


def _write_csv(path: Path, header_line: str, columns: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(header_line + "\n")
        handle.write(columns + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


# ---------------------------------------------------------------------------
# analyze

def _run_analyze(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _header("-", cfg.text)

    params = cfg.prior_params() if not cfg.beta_is_auto else None
    if params is None:
        # beta_is_auto: solve without the auto-validation so an invalid
        # verdict still produces a full report
        from .stability import beta_for_minimum
        from .stability import PriorParams as _PP

        p = cfg.prior
        beta = beta_for_minimum(
            float(p["lambda_c"]), float(p["alpha_c"]),
            float(p["r0_hat"]), float(p["d"]), float(p["epsilon"]),
        )
        params = _PP(
            float(p["lambda_c"]), float(p["alpha_c"]), beta,
            float(p["d"]), float(p["epsilon"]), float(p["r0_hat"]),
        )
    from .stability import validate

    report = validate(params)

    _write_csv(out / "e0.csv", header, "r0,e0", report.e0_curve)
    _write_csv(out / "e2.csv", header, "k,e2", report.e2_curve)
    _write_csv(
        out / "extrema.csv", header, "beta,kind,r0",
        [(params.beta_c, kind, r0) for r0, kind in report.extrema],
    )

    minima = [r0 for r0, kind in report.extrema if kind == "min"]
    e0_min_r0 = min(minima, key=lambda r: abs(r - params.r0_hat)) if minima else float("nan")
    with open(out / "report.txt", "w", encoding="utf-8") as handle:
        handle.write(header + "\n")
        handle.write(f"beta_solved={report.beta_solved:.12g}\n")
        handle.write(f"valid={report.valid}\n")
        handle.write(f"reason={report.reason}\n")
        handle.write(f"e0_min_r0={e0_min_r0:.9g}\n")
        handle.write(f"verdict={'VALID' if report.valid else 'INVALID'}\n")

    if args.beta_sweep:
        lo, hi, count = args.beta_sweep.split(":")
        betas = np.linspace(float(lo), float(hi), int(count))
        rows = []
        for beta, found in extrema_scan(
            params.lambda_c, params.alpha_c, params.d, params.epsilon, betas
        ):
            for r0, kind in found:
                rows.append((beta, kind, r0))
        _write_csv(out / "extrema_sweep.csv", header, "beta,kind,r0", rows)

    if not report.valid:
        print(f"invalid: {report.reason}", file=sys.stderr)
        return _EXIT_INVALID
    return _EXIT_OK


# ---------------------------------------------------------------------------
# evolve

def _parse_shapes(spec: str):
    shapes = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, _, rest = chunk.partition(":")
        values = [float(v) for v in rest.split(",")]
        shapes.append((kind.strip(), *values))
    return shapes


def _parse_size(text: str) -> tuple[int, int]:
    h, _, w = text.lower().partition("x")
    return int(h), int(w)


def _run_evolve(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _header("-", cfg.text)

    params = cfg.prior_params()
    if params is None:
        raise InvalidConfig("evolve requires a prior section")
    opts = cfg.evolve_opts()

    image = None
    lik = None
    if args.image:
        image = ImageGrid(read_pgm(args.image))
        lik = cfg.likelihood_params()
        if lik is None:
            raise InvalidConfig("an image was given but the config has no likelihood section")
        grid_shape = image.values.shape
    else:
        grid_shape = _parse_size(args.grid_size)

    if args.init:
        mask = read_mask(args.init)
        field = field_from_mask(mask)
    elif args.init_shape:
        field = init_shape(_parse_shapes(args.init_shape), grid_shape)
    else:
        raise InvalidConfig("one of --init or --init-shape is required")
    if image is not None and field.values.shape != image.values.shape:
        raise InvalidConfig("init mask and image sizes differ")

    on_iter = None
    if args.snapshot_every:
        every = int(args.snapshot_every)

        def on_iter(iteration: int, phi: np.ndarray) -> None:
            if iteration % every == 0:
                write_mask(out / f"snapshot_{iteration:06d}.pgm", phi < 0,
                           comments=[header.lstrip("# ")])

    result = evolve(field, image=image, params=params, lik=lik, opts=opts,
                    on_iteration=on_iter)

    write_mask(out / "final_mask.pgm", mask_from_field(result.field),
               comments=[header.lstrip("# ")])
    _write_csv(out / "log.csv", header, "iter,max_speed,area,num_components",
               result.log)
    if not result.converged:
        print("evolution hit max_iters before converging", file=sys.stderr)
        return _EXIT_NONCONV
    return _EXIT_OK


# ---------------------------------------------------------------------------
# synth

def _write_truth(path: Path, header: str, truth: SceneTruth) -> None:
    rows = [(cx, cy, r) for (cx, cy), r in truth.circles]
    _write_csv(path, header, "cx,cy,r", rows)


def _run_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    token = f"kind={args.kind} seed={args.seed} snr={args.snr_db} size={args.size}"
    header = f"# circlegas {__version__} seed={args.seed} config={config_hash('')} {token}"
    if args.kind == "circles":
        image, truth = gen_circles(args.seed, size=_parse_size(args.size))
        write_pgm(out / "clean.pgm", image.values, comments=[header.lstrip("# ")])
        _write_truth(out / "truth.csv", header, truth)
        if args.snr_db is not None:
            noisy = rescale01(add_noise(image, args.snr_db, args.seed + 1))
            write_pgm(out / "noisy.pgm", noisy.values, comments=[header.lstrip("# ")])
    elif args.kind == "dumbbell":
        levels = [int(v) for v in args.bar_levels.split(",")] if args.bar_levels else None
        for (image, truth), level in zip(
            gen_dumbbell(levels), levels or [48, 68, 88, 108, 128]
        ):
            write_pgm(out / f"dumbbell_{level:03d}.pgm", image.values,
                      comments=[header.lstrip("# ")])
            _write_truth(out / f"truth_{level:03d}.csv", header, truth)
    else:
        raise InvalidConfig(f"unknown synth kind {args.kind!r}")
    return _EXIT_OK


# ---------------------------------------------------------------------------
# score

def _read_truth(path, size) -> SceneTruth:
    circles = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("cx"):
                continue
            cx, cy, r = (float(v) for v in line.split(","))
            circles.append(((cx, cy), r))
    return SceneTruth(circles, size, fg=1.0, bg=0.0)


def _run_score(args) -> int:
    mask = read_mask(args.mask)
    truth = _read_truth(args.truth, mask.shape)
    report = score_mask(mask, truth, args.r_target)
    header = _header(args.seed, "")
    row = (
        args.snr_db if args.snr_db is not None else float("nan"),
        report.cd_percent, report.fp_percent,
        report.fn_percent, report.joined_percent,
    )
    line = ",".join(_fmt(v) for v in row)
    print("snr_db,cd,fp,fn,joined")
    print(line)
    if args.out:
        _write_csv(Path(args.out), header, "snr_db,cd,fp,fn,joined", [row])
    return _EXIT_OK


# ---------------------------------------------------------------------------
# fit

def _run_fit(args) -> int:
    image = read_pgm(args.image)
    mask = read_mask(args.mask)
    mu, sigma, mu_bar, sigma_bar = fit_likelihood(image, mask)
    lines = [
        _header("-", ""),
        f"mu={mu:.9g}",
        f"sigma={sigma:.9g}",
        f"mu_bar={mu_bar:.9g}",
        f"sigma_bar={sigma_bar:.9g}",
    ]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    return _EXIT_OK


# ---------------------------------------------------------------------------
# taylor-check

def _default_taylor_config() -> RunConfig:
    from .config import parse_config

    return parse_config(
        "prior.lambda_c = 1.0\n"
        "prior.alpha_c = 0.8\n"
        "prior.beta_c = auto\n"
        "prior.d = 1.0\n"
        "prior.epsilon = 1.0\n"
        "prior.r0_hat = 1.0\n"
    )


def _run_taylor(args) -> int:
    cfg = load_config(args.config) if args.config else _default_taylor_config()
    params = cfg.prior_params()
    scales = [float(s) for s in args.scales.split(",")]
    rng = np.random.default_rng(args.seed)
    rows = []
    slopes = []
    for trial in range(args.trials):
        coeffs = {}
        amp = rng.uniform(0.25, 0.5)
        coeffs[0] = amp * rng.choice([-1.0, 1.0])
        for m in range(1, args.modes + 1):
            mag = rng.uniform(0.25, 0.5)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            coeffs[m] = mag * np.exp(1j * phase)
        pert = FourierPerturbation(params.r0_hat, coeffs)
        residuals = [
            abs(taylor_residual(pert, s, params, n_vertices=args.n_vertices))
            for s in scales
        ]
        slope = float(np.polyfit(np.log(scales), np.log(residuals), 1)[0])
        slopes.append(slope)
        rows.append((trial, slope))
    header = _header(args.seed, cfg.text)
    print("trial,slope")
    for trial, slope in rows:
        print(f"{trial},{slope:.6g}")
    print(f"slope_min={min(slopes):.6g}")
    print(f"slope_median={float(np.median(slopes)):.6g}")
    if args.out:
        _write_csv(Path(args.out), header, "trial,slope", rows)
    return _EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circlegas")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="circle stability analysis")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--beta-sweep", default=None, metavar="LO:HI:N")
    p.set_defaults(func=_run_analyze)

    p = sub.add_parser("evolve", help="level-set gradient descent")
    p.add_argument("--config", required=True)
    p.add_argument("--init", default=None, metavar="MASK.pgm")
    p.add_argument("--init-shape", default=None,
                   metavar="circle:cx,cy,r;square:cx,cy,side;...")
    p.add_argument("--image", default=None, metavar="IMG.pgm")
    p.add_argument("--grid-size", default="128x128", metavar="HxW")
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_run_evolve)

    p = sub.add_parser("synth", help="generate benchmark scenes")
    p.add_argument("--kind", choices=("circles", "dumbbell"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--size", default="256x256", metavar="HxW")
    p.add_argument("--bar-levels", default=None, metavar="L1,L2,...")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_run_synth)

    p = sub.add_parser("score", help="score a result mask against truth")
    p.add_argument("--mask", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--r-target", type=float, required=True)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_run_score)

    p = sub.add_parser("fit", help="fit the two-class intensity model")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_run_fit)

    p = sub.add_parser("taylor-check", help="polygon oracle vs expansion")
    p.add_argument("--config", default=None)
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--scales", default="0.04,0.02,0.01")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n-vertices", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_run_taylor)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, DegenerateClass, DegenerateG10, EmptyRegion,
            PlacementFailed, ConstantImage, ValueError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
