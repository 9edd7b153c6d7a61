"""Command line front end: ``riclink sweep | theory | constellation``.

The Eb/N0 axis is energy per information bit over N0, defined per receive
branch. The Rician K-factor has no default and must be given with ``--k``
(linear) or ``--k-db``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from riclink import __version__
from riclink.channel import FadingModel
from riclink.errors import ConfigError, RiclinkError, UnsupportedModulationError
from riclink.modem import Scheme, build
from riclink.montecarlo import (
    BerEstimate,
    SimPoint,
    StoppingRule,
    SweepConfig,
    cell_seed,
    run_point,
)
from riclink.theory import DEFAULT_DRAWS, avg_err_rician_mrc

CSV_VERSION_LINE = "# riclink-csv v1"
CSV_COLUMNS = (
    "scheme", "m", "ebn0_db", "diversity", "k_factor", "model",
    "bits", "bit_errors", "ber", "ci_low", "ci_high", "seed", "source",
)
K_REQUIRED = "k_factor required: no default Rician K is assumed (give --k or --k-db)"


# ---------------------------------------------------------------- parsing

def parse_grid(spec, where: str = "ebn0") -> tuple[float, ...]:
    """Parse ``start:stop:step`` (inclusive), a dict with those keys, a number, or a list."""
    if isinstance(spec, dict):
        try:
            spec = f"{spec['start']}:{spec['stop']}:{spec['step']}"
        except KeyError as exc:
            raise ConfigError(f"{where}: range object missing key {exc}") from None
    if isinstance(spec, str) and ":" in spec:
        parts = spec.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"{where}: expected start:stop[:step], got {spec!r}")
        try:
            start, stop = float(parts[0]), float(parts[1])
            step = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ConfigError(f"{where}: non-numeric range {spec!r}") from None
        if not step > 0:
            raise ConfigError(f"{where}: step must be > 0, got {step}")
        if stop < start:
            raise ConfigError(f"{where}: stop {stop} is below start {start}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    values = spec if isinstance(spec, (list, tuple)) else [spec]
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected numbers, got {spec!r}") from None
    if not out:
        raise ConfigError(f"{where}: empty list")
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{where}: values must be finite")
    return out


def _as_list(value, where: str) -> list:
    if value is None:
        return []
    values = list(value) if isinstance(value, (list, tuple)) else [value]
    if not values:
        raise ConfigError(f"{where}: empty list")
    return values


def _ints(value, where: str) -> tuple[int, ...]:
    out = []
    for v in _as_list(value, where):
        if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
            raise ConfigError(f"{where}: expected integers, got {v!r}")
        try:
            out.append(int(v))
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected integers, got {v!r}") from None
    return tuple(out)


def _k_values(data: dict) -> tuple[float, ...]:
    has_lin = data.get("k") is not None or data.get("k_factor") is not None
    has_db = data.get("k_db") is not None
    if has_lin and has_db:
        raise ConfigError("give the K-factor either linear (k) or in dB (k_db), not both")
    if not (has_lin or has_db):
        raise ConfigError(K_REQUIRED)
    raw = data.get("k_db") if has_db else data.get("k", data.get("k_factor"))
    out = []
    for v in _as_list(raw, "k_db" if has_db else "k"):
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"k: expected a number, got {v!r}") from None
        out.append(10.0 ** (v / 10.0) if has_db else v)
        if math.isnan(out[-1]) or out[-1] < 0:
            raise ConfigError(f"k: K-factor must be >= 0, got {v}")
    return tuple(out)


def _modulations(data: dict) -> tuple[tuple[Scheme, int], ...]:
    if data.get("modulations") is not None:
        pairs = []
        for item in _as_list(data["modulations"], "modulations"):
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ConfigError(f"modulations: expected [scheme, M] pairs, got {item!r}")
            pairs.append((item[0], item[1]))
    else:
        if data.get("scheme") is None or data.get("m") is None:
            raise ConfigError("modulation required: give scheme and m (or modulations)")
        pairs = [(data["scheme"], m) for m in _ints(data["m"], "m")]
    out = []
    for scheme, m in pairs:
        try:
            scheme = Scheme.parse(scheme)
            (m,) = _ints(m, "m")
            build(scheme, m)
        except RiclinkError as exc:
            raise ConfigError(f"modulations: {exc}") from None
        out.append((scheme, m))
    return tuple(out)


def config_from_dict(data: dict) -> SweepConfig:
    """Validate a JSON-style mapping into a :class:`SweepConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "modulations", "scheme", "m", "ebn0", "ebn0_db", "diversity", "k", "k_factor",
        "k_db", "model", "n_scatterers", "stop", "seed", "output",
    }
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    ebn0 = data.get("ebn0", data.get("ebn0_db"))
    if ebn0 is None:
        raise ConfigError("ebn0 required")
    stop_data = data.get("stop") or {}
    if not isinstance(stop_data, dict):
        raise ConfigError("stop: expected an object")
    try:
        stop = StoppingRule(**{k: int(v) for k, v in stop_data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"stop: {exc}") from None
    try:
        model = FadingModel.parse(data.get("model", FadingModel.GAUSSIAN_LIMIT.value))
    except RiclinkError as exc:
        raise ConfigError(f"model: {exc}") from None
    diversity = _ints(data.get("diversity", 1), "diversity")
    if any(d < 1 for d in diversity):
        raise ConfigError("diversity: orders must be >= 1")
    (n_scatterers,) = _ints(data.get("n_scatterers", 16), "n_scatterers")
    if n_scatterers < 1:
        raise ConfigError("n_scatterers must be >= 1")
    (seed,) = _ints(data.get("seed", 0), "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    output = data.get("output")
    cfg = SweepConfig(
        modulations=_modulations(data),
        ebn0_db=parse_grid(ebn0, "ebn0"),
        diversity=diversity,
        k_factor=_k_values(data),
        model=model.value,
        n_scatterers=n_scatterers,
        stop=stop,
        seed=seed,
        output=None if output is None else str(output),
    )
    try:
        cfg.cells()
    except RiclinkError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def config_to_dict(cfg: SweepConfig) -> dict:
    return {
        "modulations": [[s.value, m] for s, m in cfg.modulations],
        "ebn0": list(cfg.ebn0_db),
        "diversity": list(cfg.diversity),
        "k": list(cfg.k_factor),
        "model": cfg.model,
        "n_scatterers": cfg.n_scatterers,
        "stop": {
            "min_bit_errors": cfg.stop.min_bit_errors,
            "max_bits": cfg.stop.max_bits,
            "batch_bits": cfg.stop.batch_bits,
        },
        "seed": cfg.seed,
        "output": cfg.output,
    }


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def parse_config(args: argparse.Namespace) -> SweepConfig:
    """Merge an optional ``--config`` file with command-line flags (flags win)."""
    data = load_config(args.config) if args.config else {}
    overrides = {
        "ebn0": args.ebn0,
        "diversity": args.diversity,
        "model": args.model,
        "n_scatterers": args.n_scatterers,
        "seed": args.seed,
        "output": args.output,
    }
    if args.scheme is not None or args.m is not None:
        data.pop("modulations", None)
        if args.scheme is not None:
            data["scheme"] = args.scheme
        if args.m is not None:
            data["m"] = args.m
    if args.k is not None or args.k_db is not None:
        for key in ("k", "k_factor", "k_db"):
            data.pop(key, None)
        overrides["k"], overrides["k_db"] = args.k, args.k_db
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    stop = dict(data.get("stop") or {})
    for key in ("min_bit_errors", "max_bits", "batch_bits"):
        if getattr(args, key) is not None:
            stop[key] = getattr(args, key)
    if stop:
        data["stop"] = stop
    return config_from_dict(data)


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    return repr(float(x))


def _base_row(p: SimPoint) -> dict:
    return {
        "scheme": p.scheme.value,
        "m": p.m,
        "ebn0_db": _fmt(p.ebn0_db),
        "diversity": p.diversity,
        "k_factor": _fmt(p.rician.k_factor),
        "model": p.rician.model.value,
        "seed": p.seed,
    }


def sim_row(p: SimPoint, est: BerEstimate) -> dict:
    row = _base_row(p)
    row.update(
        bits=est.bits_sent,
        bit_errors=est.bit_errors,
        ber=_fmt(est.ber),
        ci_low=_fmt(est.ci95[0]),
        ci_high=_fmt(est.ci95[1]),
        source="sim",
    )
    return row


def theory_row(p: SimPoint, draws: int, master_seed: int) -> dict:
    # one gain sample set per curve keeps the theory rows monotone in Eb/N0
    seed = cell_seed(master_seed, p.scheme, p.m, 0.0, p.diversity, p.rician)
    t = avg_err_rician_mrc(p.scheme, p.m, p.rician, p.diversity, p.ebn0_db, draws, seed)
    half = 1.959963984540054 * t.ber_stderr
    row = _base_row(p)
    row.update(
        bits="",
        bit_errors="",
        ber=_fmt(t.ber),
        ci_low=_fmt(max(0.0, t.ber - half)),
        ci_high=_fmt(min(1.0, t.ber + half)),
        seed=seed,
        source="theory",
    )
    return row


def _sort_key(row: dict):
    return (row["scheme"], row["m"], row["diversity"], float(row["ebn0_db"]))


def write_csv(rows: list[dict], out) -> None:
    out.write(CSV_VERSION_LINE + "\n")
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in sorted(rows, key=_sort_key):
        writer.writerow(row)


def _emit(rows: list[dict], output: str | None) -> None:
    if output in (None, "-"):
        write_csv(rows, sys.stdout)
        return
    buf = io.StringIO()
    write_csv(rows, buf)
    with open(output, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- commands

def cmd_sweep(cfg: SweepConfig, theory: bool = False, workers: int | None = None,
              theory_draws: int = DEFAULT_DRAWS) -> int:
    rows, failed = [], 0
    for p in cfg.cells():
        try:
            rows.append(sim_row(p, run_point(p, workers)))
        except RiclinkError as exc:
            failed += 1
            print(f"error: cell {p.describe()}: {exc}", file=sys.stderr)
            continue
        if theory:
            try:
                rows.append(theory_row(p, theory_draws, cfg.seed))
            except UnsupportedModulationError as exc:
                _warn(f"no theory row for {p.describe()}: {exc}")
    try:
        _emit(rows, cfg.output)
    except OSError as exc:
        print(f"error: cannot write {cfg.output}: {exc}", file=sys.stderr)
        return 1
    return 1 if failed else 0


def cmd_theory(cfg: SweepConfig, theory_draws: int = DEFAULT_DRAWS) -> int:
    rows = []
    for p in cfg.cells():
        try:
            rows.append(theory_row(p, theory_draws, cfg.seed))
        except UnsupportedModulationError as exc:
            _warn(f"skipping {p.describe()}: {exc}")
    try:
        _emit(rows, cfg.output)
    except OSError as exc:
        print(f"error: cannot write {cfg.output}: {exc}", file=sys.stderr)
        return 1
    return 0


def constellation_rows(scheme, m: int, phase_offset: float = 0.0) -> list[dict]:
    c = build(scheme, m, phase_offset)
    return [
        {"index": k, "bits": c.label_bits(k), "i": _fmt(pt.i), "q": _fmt(pt.q),
         "amp": _fmt(pt.amp), "phase": _fmt(pt.phase)}
        for k, pt in enumerate(c.points)
    ]


def cmd_constellation(scheme, m: int, phase_offset: float = 0.0, output: str | None = None) -> int:
    rows = constellation_rows(scheme, m, phase_offset)
    out = sys.stdout if output in (None, "-") else open(output, "w", encoding="utf-8", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=("index", "bits", "i", "q", "amp", "phase"),
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ---------------------------------------------------------------- argparse

def _grid_arg(values: list[str]):
    return values[0] if len(values) == 1 and ":" in values[0] else values


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON sweep config; flags override its fields")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--m", type=int, nargs="+", help="constellation sizes")
    p.add_argument("--ebn0", nargs="+", help="Eb/N0 grid in dB: start:stop:step or a list")
    p.add_argument("--diversity", type=int, nargs="+", help="diversity orders L")
    k = p.add_mutually_exclusive_group()
    k.add_argument("--k", type=float, nargs="+", help="Rician K-factor(s), linear (inf = AWGN)")
    k.add_argument("--k-db", dest="k_db", type=float, nargs="+", help="Rician K-factor(s) in dB")
    p.add_argument("--model", choices=[mdl.value for mdl in FadingModel])
    p.add_argument("--n-scatterers", dest="n_scatterers", type=int)
    p.add_argument("--min-bit-errors", dest="min_bit_errors", type=int)
    p.add_argument("--max-bits", dest="max_bits", type=int)
    p.add_argument("--batch-bits", dest="batch_bits", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.add_argument("--theory-draws", dest="theory_draws", type=int, default=DEFAULT_DRAWS,
                   help="channel draws per semi-analytic point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riclink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"riclink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte Carlo BER sweep to CSV")
    _add_sweep_args(sweep)
    sweep.add_argument("--theory", action="store_true", help="also emit semi-analytic rows")
    sweep.add_argument("--workers", type=int, help="worker threads (overrides RICLINK_WORKERS)")

    theory = sub.add_parser("theory", help="semi-analytic reference curves to CSV")
    _add_sweep_args(theory)

    const = sub.add_parser("constellation", help="dump constellation points to CSV")
    const.add_argument("scheme", choices=[s.value for s in Scheme])
    const.add_argument("m", type=int)
    const.add_argument("phase_offset", type=float, nargs="?", default=0.0)
    const.add_argument("-o", "--output")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "constellation":
            return cmd_constellation(args.scheme, args.m, args.phase_offset, args.output)
        if args.ebn0 is not None:
            args.ebn0 = _grid_arg(args.ebn0)
        cfg = parse_config(args)
        if args.command == "theory":
            return cmd_theory(cfg, args.theory_draws)
        return cmd_sweep(cfg, args.theory, args.workers, args.theory_draws)
    except (RiclinkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
