"""Command-line interface: ``hlpp sample | verify | distributions``.

Exit codes: 0 success/pass, 1 usage error, 2 oracle-size guard violation,
3 verification failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from hlpp import __version__

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_FAIL = 0, 1, 2, 3
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    """Bad flags or malformed input files (exit code 1)."""


class GuardError(Exception):
    """Requested size is beyond what an exact oracle will run (exit code 2)."""


# ---------------------------------------------------------------------------
# manifest


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def run_id(command: str, params: dict[str, Any]) -> str:
    """Deterministic id of a run: hash of the command and its full parameter set."""
    blob = json.dumps({"command": command, "params": params}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(
    directory: Path, command: str, params: dict[str, Any], outputs: Sequence[Path], started: str
) -> Path:
    """``manifest.json`` listing every output with its SHA-256.

    ``content_hash`` hashes the sorted ``(name, sha256)`` pairs only, so it is stable
    across reruns; the timestamps are recorded beside it.
    """
    files = {p.name: sha256_file(p) for p in sorted(outputs)}
    content = hashlib.sha256(json.dumps(sorted(files.items())).encode()).hexdigest()
    manifest = {
        "run_id": run_id(command, params),
        "command": command,
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "outputs": files,
        "content_hash": content,
        "started": started,
        "finished": _now(),
    }
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _threads() -> int:
    raw = os.environ.get("HLPP_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise UsageError(f"HLPP_THREADS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise UsageError(f"HLPP_THREADS must be a positive integer, got {raw!r}")
    return value


# ---------------------------------------------------------------------------
# output formats


def heights_csv(grid: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    for row in grid:
        writer.writerow([int(v) for v in row])
    return buf.getvalue()


def heights_pgm(grid: np.ndarray, maxval: int, comment: str = "") -> str:
    """ASCII ``P2`` graymap, one pixel per base cell, gray level = height, ``maxval = n``."""
    rows, cols = grid.shape
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines += [f"{cols} {rows}", str(max(1, maxval))]
    lines += [" ".join(str(int(v)) for v in row) for row in grid]
    return "\n".join(lines) + "\n"


def parse_pgm(text: str) -> np.ndarray:
    tokens = [tok for line in text.splitlines() if not line.startswith("#") for tok in line.split()]
    if not tokens or tokens[0] != "P2":
        raise ValueError("not an ASCII P2 graymap")
    cols, rows, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    values = np.array([int(v) for v in tokens[4:]], dtype=np.int64)
    if values.size != rows * cols:
        raise ValueError("P2 pixel count does not match its header")
    return values.reshape(rows, cols)


def write_observations_csv(path: Path, rows: list[dict[str, Any]], labels: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["iter", "volume", *labels])
        for row in rows:
            writer.writerow([row["iter"], row["volume"], *(row[label] for label in labels)])


def read_samples_csv(path: str | os.PathLike) -> list[float]:
    """One number per row (first column); an optional non-numeric header row is skipped.

    Any other malformed row raises ``UsageError`` naming its line number.
    """
    out: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            cell = row[0].strip()
            try:
                value = float(cell)
            except ValueError:
                if lineno == 1 and not out:
                    continue  # header
                raise UsageError(f"{path}: line {lineno}: not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise UsageError(f"{path}: line {lineno}: non-finite value {cell!r}")
            out.append(value)
    if not out:
        raise UsageError(f"{path}: no samples")
    return out


# ---------------------------------------------------------------------------
# sample


def _chain_suffix(chain: int, chains: int) -> str:
    return "" if chains == 1 else f"_chain{chain}"


def _sample_one(job: dict[str, Any]) -> list[str]:
    """Run one chain and write its files; returns the output paths."""
    from hlpp import sampler

    out = Path(job["out"])
    chain, chains = job["chain"], job["chains"]
    suffix = _chain_suffix(chain, chains)
    taus = job["observe"]
    ckpt = job["checkpoint"]
    if ckpt is not None and chains > 1:
        ckpt = f"{ckpt}{suffix}"
    if job["resume"] is not None:
        resume = job["resume"] if chains == 1 else f"{job['resume']}{suffix}"
        state, rng, data = sampler.read_checkpoint(resume)
        seed = int(data["seed"])
    else:
        state, rng, seed = None, None, job["seed"]
    config = sampler.ChainConfig(
        n=job["n"],
        r=job["r"],
        t=job["t"],
        total_iterations=job["steps"],
        seed=seed,
        chain=chain,
        checkpoint_every=job["checkpoint_every"],
        observe_every=job["observe_every"],
        initial=job["init"],
        unit=job["unit"],
    )
    result = sampler.run(config, state=state, rng=rng, observe_taus=taus, checkpoint_path=ckpt)
    state = result.state
    labels = [f"lambda1_tau_{tau:g}" for tau in taus]
    written = []
    fmt = job["format"]
    heights_path = out / f"heights{suffix}.{fmt}"
    if fmt == "csv":
        with open(heights_path, "w", newline="") as fh:
            fh.write(heights_csv(state.heights))
    elif fmt == "json":
        payload = sampler.checkpoint_data(state, result.rng, seed)
        payload["run_id"] = job["run_id"]
        heights_path.write_text(json.dumps(payload) + "\n")
    else:
        heights_path.write_text(heights_pgm(state.heights, state.n, f"run {job['run_id']}"))
    written.append(str(heights_path))
    obs_path = out / f"observables{suffix}.csv"
    write_observations_csv(obs_path, result.observations, labels)
    written.append(str(obs_path))
    if ckpt is not None:
        written.append(str(ckpt))
    return written


def cmd_sample(args: argparse.Namespace) -> int:
    if args.resume is not None:
        ckpt = args.resume if args.chains == 1 else f"{args.resume}_chain0"
        try:
            stored = json.loads(Path(ckpt).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read checkpoint {ckpt}: {exc}") from exc
        if args.seed is not None and int(stored.get("seed", -1)) != args.seed:
            raise UsageError(f"--seed {args.seed} conflicts with the checkpoint seed {stored.get('seed')}")
        for key in ("n", "r", "t"):
            given = getattr(args, key)
            if given is not None and float(given) != float(stored[key]):
                raise UsageError(f"--{key} {given} conflicts with the checkpoint value {stored[key]}")
        n, r, t = int(stored["n"]), float(stored["r"]), float(stored["t"])
        if args.seed is None:
            args.seed = int(stored["seed"])
    else:
        if args.n is None or args.r is None or args.t is None:
            raise UsageError("--n, --r and --t are required unless resuming")
        n, r, t = args.n, args.r, args.t
    seed = 0 if args.seed is None else args.seed
    if n < 1:
        raise UsageError("--n must be >= 1")
    if not 0.0 < r < 1.0:
        raise UsageError("--r must lie in (0, 1)")
    if not 0.0 <= t < 1.0:
        raise UsageError("--t must lie in [0, 1)")
    if args.steps < 0:
        raise UsageError("--steps must be >= 0")
    if args.chains < 1:
        raise UsageError("--chains must be >= 1")
    if seed < 0 or seed >= 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    for name in ("observe_every", "checkpoint_every"):
        v = getattr(args, name)
        if v is not None and v <= 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    taus = _float_list(args.observe) if args.observe else []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {
        "n": n,
        "r": r,
        "t": t,
        "steps": args.steps,
        "unit": args.unit,
        "seed": seed,
        "chains": args.chains,
        "init": args.init,
        "format": args.format,
        "observe": taus,
        "observe_every": args.observe_every,
        "checkpoint_every": args.checkpoint_every,
        "resumed_from": args.resume,
    }
    rid = run_id("sample", params)
    jobs = [
        {
            **params,
            "out": str(out),
            "chain": c,
            "checkpoint": args.checkpoint,
            "resume": args.resume,
            "run_id": rid,
        }
        for c in range(args.chains)
    ]
    started = _now()
    workers = min(args.chains, _threads())
    try:
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sample_one, jobs))  # ordered by chain index
        else:
            results = [_sample_one(job) for job in jobs]
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    paths = [Path(p) for chunk in results for p in chunk]
    manifest = write_manifest(out, "sample", params, paths, started)
    print(json.dumps({"run_id": rid, "manifest": str(manifest), "outputs": [p.name for p in paths]}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _report(name: str, passed: bool, **fields: Any) -> int:
    record = {"check": name, "pass": bool(passed), **fields}
    print(json.dumps(record, default=_jsonable))
    return EXIT_OK if passed else EXIT_FAIL


def _jsonable(v: Any) -> Any:
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


def verify_zn(args: argparse.Namespace) -> int:
    from hlpp.measure import box_count, check_partition_function

    if args.n > 3 or args.hmax > 12 or box_count(args.n, args.n, args.hmax) > 10**6:
        raise GuardError(f"enumeration of the {args.n}x{args.n}x{args.hmax} box is beyond the oracle limit")
    chk = check_partition_function(args.n, args.r, args.t, args.hmax)
    return _report(
        "zn", chk.residual < 1e-8, residual=chk.residual, product=chk.product, box_sum=chk.box_sum,
        tail_bound=chk.tail_bound,
    )  # fmt: skip


def verify_apibpi(args: argparse.Namespace) -> int:
    from hlpp.measure import BoxSpec, enumerate_box
    from hlpp.partitions import border_polynomial, slice_polynomial

    if args.base > 3 or args.hmax > 4:
        raise GuardError("apibpi is exhaustive; base <= 3 and hmax <= 4")
    worst, count = 0.0, 0
    for t in args.t:
        for pi in enumerate_box(BoxSpec(args.base, args.base, args.hmax)):
            a = border_polynomial(pi, t)[0]
            b = slice_polynomial(pi, t)
            worst = max(worst, abs(a - b))
            count += 1
    return _report("apibpi", worst < 1e-12, max_abs_difference=worst, cases=count)


def verify_laplace(args: argparse.Namespace) -> int:
    from hlpp.measure import hl_expectation, t_laplace_observable
    from hlpp.specfun.fredholm import fredholm_det
    from hlpp.specfun.kernels import FiniteNKernel

    if args.n > 4:
        raise GuardError("the enumeration side of the laplace check needs n <= 4")
    u = complex(args.u.replace("i", "j"))
    x = [args.a] * args.n
    exact = hl_expectation(t_laplace_observable(u, args.t), x, x, args.t)
    spec = FiniteNKernel(tuple(x), tuple(x), args.t, u, outer_nodes=args.nodes)
    det = fredholm_det(spec)
    resid = abs(det.value - exact.value)
    return _report("laplace", resid < 1e-6, residual=resid, det=det.value, expectation=exact.value)


def verify_stationarity(args: argparse.Namespace) -> int:
    from hlpp.measure import weight
    from hlpp.sampler import transition_matrix

    if args.n > 2:
        raise GuardError("the assembled transition matrix is limited to the 2x2x2 box")
    states, mat = transition_matrix(args.n, args.r, args.t)
    w = np.array([weight(pi, args.r, args.t) for pi in states])
    flow = w[:, None] * mat
    balance = float(np.max(np.abs(flow - flow.T)))
    evals, evecs = np.linalg.eig(mat.T)
    v = np.real(evecs[:, int(np.argmin(np.abs(evals - 1.0)))])
    v = v / v.sum()
    stat = float(np.max(np.abs(v - w / w.sum())))
    return _report(
        "stationarity", balance < 1e-12 and stat < 1e-10, detailed_balance=balance, stationary=stat,
        states=len(states),
    )  # fmt: skip


def verify_descent(args: argparse.Namespace) -> int:
    from hlpp.specfun.descent import descent_check

    if args.grid > 100_000:
        raise GuardError("grid too large")
    reports = [descent_check(args.a, args.r, s * args.A, args.grid, eps) for s in (1, -1) for eps in (1, -1)]
    bad = [(rep.A, rep.epsilon, rep.violations[:5]) for rep in reports if not rep.ok]
    return _report("descent", not bad, violations=bad, grid=args.grid)


def verify_moment(args: argparse.Namespace) -> int:
    from hlpp.measure import hl_expectation, moment_observable
    from hlpp.specfun.moments import ContourHypothesisError, moment_contour

    x, y = _float_list(args.x), _float_list(args.y)
    if len(x) != len(y):
        raise UsageError("--x and --y need the same length")
    if len(x) > 3:
        raise GuardError("the enumeration side of the moment check needs at most 3 variables")
    exact = hl_expectation(moment_observable(args.k, args.t), x, y, args.t).value.real
    try:
        value = moment_contour(args.k, x, y, args.t, args.method)
    except ContourHypothesisError as exc:
        raise UsageError(str(exc)) from exc
    resid = abs(value - exact)
    return _report("moment", resid < 1e-6, residual=resid, contour=value, enumeration=exact, method=args.method)


VERIFIERS: dict[str, Callable[[argparse.Namespace], int]] = {
    "zn": verify_zn,
    "apibpi": verify_apibpi,
    "laplace": verify_laplace,
    "stationarity": verify_stationarity,
    "descent": verify_descent,
    "moment": verify_moment,
}


def cmd_verify(args: argparse.Namespace) -> int:
    return VERIFIERS[args.check](args)


# ---------------------------------------------------------------------------
# distributions


def cmd_distributions(args: argparse.Namespace) -> int:
    from hlpp import analysis
    from hlpp.specfun import distributions

    if not args.dx > 0 or not args.xmax >= args.xmin:
        raise UsageError("need dx > 0 and xmax >= xmin")
    count = int(math.floor((args.xmax - args.xmin) / args.dx + 1e-9)) + 1
    if count > 100_000:
        raise GuardError("table has more than 1e5 rows")
    xs = args.xmin + args.dx * np.arange(count)
    if args.what == "gue":
        values = [distributions.f_gue(float(x), args.order) for x in xs]
    else:
        if args.bigT is None or not args.bigT > 0:
            raise UsageError("--what cdrp needs --bigT > 0")
        values = [distributions.f_cdrp(float(x), args.bigT, args.order) for x in xs]
    rows = [(float(x), float(v)) for x, v in zip(xs, values)]
    outputs = []
    started = _now()
    params = {k: getattr(args, k) for k in ("what", "xmin", "xmax", "dx", "bigT", "order", "samples")}
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table = out / f"{args.what}_table.csv"
        with open(table, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["x", "value"])
            writer.writerows((repr(x), repr(v)) for x, v in rows)
        outputs.append(table)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["x", "value"])
        writer.writerows((repr(x), repr(v)) for x, v in rows)
    if args.samples is not None:
        if args.what != "gue":
            raise UsageError("comparison mode needs --what gue (the CDRP table is a Laplace transform, not a CDF)")
        samples = read_samples_csv(args.samples)

        def cdf(x: float) -> float:
            return distributions.f_gue(x, args.order)

        ks = analysis.ks_distance(samples, cdf)
        resid = analysis.quantile_residuals(samples, cdf)
        report = {
            "samples": len(samples),
            "ks_distance": ks,
            "quantiles": [{"level": p, "quantile": q, "residual": d} for p, q, d in resid],
        }
        if args.out is not None:
            path = Path(args.out) / "comparison.json"
            path.write_text(json.dumps(report, indent=2) + "\n")
            outputs.append(path)
        print(json.dumps(report), file=sys.stderr if args.out is None else sys.stdout)
    if args.out is not None:
        write_manifest(Path(args.out), "distributions", params, outputs, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hlpp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hlpp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="run the Glauber sampler")
    s.add_argument("--n", type=int, help="box side")
    s.add_argument("--r", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--steps", type=int, default=0, help="total budget (default unit: effective steps)")
    s.add_argument(
        "--unit", choices=("proposals", "iterations"), default="proposals",
        help="what --steps, --observe-every and --checkpoint-every count",
    )  # fmt: skip
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--chains", type=int, default=1)
    s.add_argument("--init", default="empty", help="empty | full | path to a heights/checkpoint JSON")
    s.add_argument("--checkpoint", default=None, help="checkpoint path (written periodically and at the end)")
    s.add_argument("--checkpoint-every", type=int, default=None)
    s.add_argument("--resume", default=None, help="continue from a checkpoint")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--format", choices=("csv", "json", "pgm"), default="csv")
    s.add_argument("--observe", default="", help="comma-separated tau values")
    s.add_argument("--observe-every", type=int, default=None)
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", help="run an exact cross-check")
    vs = v.add_subparsers(dest="check", required=True)
    p = vs.add_parser("zn", help="box enumeration vs the product formula")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--r", type=float, default=0.3)
    p.add_argument("--t", type=float, default=0.4)
    p.add_argument("--hmax", type=int, default=8)
    p = vs.add_parser("apibpi", help="border polynomial vs slice polynomial, exhaustively")
    p.add_argument("--base", type=int, default=3)
    p.add_argument("--hmax", type=int, default=3)
    p.add_argument("--t", type=_float_list, default=[0.3, 0.7])
    p = vs.add_parser("laplace", help="Fredholm determinant vs the enumerated t-Laplace transform")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--a", type=float, default=0.3)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--u", default="-0.1", help="complex u, e.g. --u=-0.2+0.1i (use = for a leading minus)")
    p.add_argument("--nodes", type=int, default=128)
    p = vs.add_parser("stationarity", help="detailed balance of the assembled transition matrix")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--r", type=float, default=0.3)
    p.add_argument("--t", type=float, default=0.4)
    p = vs.add_parser("descent", help="sign check of the descent property")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--r", type=float, default=0.9)
    p.add_argument("--A", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=200)
    p = vs.add_parser("moment", help="contour moment formula vs enumeration")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--x", default="0.1")
    p.add_argument("--y", default="0.1")
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--method", choices=("nested", "collapsed"), default="nested")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("distributions", help="F_GUE / CDRP Laplace-transform tables")
    d.add_argument("--what", choices=("gue", "cdrp"), required=True)
    d.add_argument("--xmin", type=float, default=-6.0)
    d.add_argument("--xmax", type=float, default=4.0)
    d.add_argument("--dx", type=float, default=0.25)
    d.add_argument("--bigT", type=float, default=None)
    d.add_argument("--order", type=int, default=64)
    d.add_argument("--samples", default=None, help="CSV of samples to compare against F_GUE")
    d.add_argument("--out", default=None, help="output directory (default: table on stdout)")
    d.set_defaults(func=cmd_distributions)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap to 1
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return EXIT_OK if code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hlpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuardError as exc:
        print(f"hlpp: oracle guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except Exception as exc:  # oracle-side guards raised deep inside the library
        from hlpp.measure import OracleGuardError

        if isinstance(exc, OracleGuardError):
            print(f"hlpp: oracle guard: {exc}", file=sys.stderr)
            return EXIT_GUARD
        if isinstance(exc, ValueError):
            print(f"hlpp: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        raise


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
