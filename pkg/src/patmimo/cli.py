"""Command-line front end: flat key=value config files, four subcommands
(point, pilot-sweep, snr-curve, envelope), CSV curve output and a rerun
manifest.

Config keys (one `key = value` per line, `#` comments):

  profile = epa-5hz | tdl-c | custom      channel profile by name
  profile_coherence_bandwidth_hz, profile_coherence_time_s,
  profile_system_bandwidth_hz, profile_rb_bandwidth_hz,
  profile_rb_duration_s                   inline profile (profile = custom)
  d, r, L                                 resource-block geometry
  n_c                                     explicit coherence block size
                                          (replaces profile/d/r)
  scheme = simo | alamouti | mimo_generic
  rx_antennas, payload_bits, s
  snr_db                                  single SNR (point, pilot-sweep)
  snr_grid_db = lo:hi:step | v1,v2,...    curve grid
  snr_bracket_db = lo, hi                 bisection bracket (envelope)
  pilot_count                             fixed pilot count
  pilot_step, pilot_optimize, ref_snr_db  pilot-grid policy
  target_eps, L_values                    envelope target and branch grid
  estimator = mc | saddlepoint | both
  mc_samples, sp_samples, mc_min_eps, seed, workers, out

The code rate is always computed as payload_bits / blocklength, never
supplied directly.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import rcus_mc, saddlepoint_epsilon
from .channel import BlockFadingConfig, ConfigError, db_to_linear
from .lte import ChannelProfile, GeometryError, make_geometry, profile_by_name
from .sampling import SCHEMES, validate_scheme
from .streams import DEFAULT_PARTITION_SIZE
from .sweeps import (
    ESTIMATORS,
    BracketError,
    SweepResult,
    SweepRow,
    diversity_envelope,
    pilot_sweep,
    snr_curve,
)

SUBCOMMANDS = ("point", "pilot-sweep", "snr-curve", "envelope")


class CliConfigError(ValueError):
    """Config file failed validation; message lists every violation."""


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse `key = value` lines; later keys override earlier ones."""
    out: dict[str, str] = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = line.split("=", 1)
        out[key.strip().lower()] = value.strip()
    if errors:
        raise CliConfigError("; ".join(errors))
    return out


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_grid(value: str) -> list[float]:
    """Either 'lo:hi:step' (hi inclusive up to rounding) or a comma list."""
    if ":" in value:
        parts = [float(p) for p in value.split(":")]
        if len(parts) != 3:
            raise ValueError(f"grid must be lo:hi:step, got {value!r}")
        lo, hi, step = parts
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid bounds/step: {value!r}")
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 12) for i in range(count) if lo + i * step <= hi + 1e-9]
    return [float(p) for p in value.split(",") if p.strip()]


def _parse_int_grid(value: str) -> list[int]:
    if ":" in value:
        parts = [int(p) for p in value.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        return list(range(lo, hi + 1, step))
    return [int(p) for p in value.split(",") if p.strip()]


@dataclass
class RunConfig:
    """A fully resolved run: link config, scheme, axis specs and budgets."""

    link: BlockFadingConfig
    scheme: str
    payload_bits: float
    profile: ChannelProfile | None
    geometry: tuple[int, int, int] | None  # (d, r, L)
    snr_db: float | None
    snr_grid_db: list[float] | None
    snr_bracket_db: tuple[float, float] | None
    pilot_step: int
    pilot_optimize: bool
    ref_snr_db: float | None
    target_eps: float | None
    diversity_values: list[int] | None
    estimator: str
    mc_samples: int
    sp_samples: int
    mc_min_eps: float
    seed: int
    workers: int
    out: str
    raw: dict[str, str] = field(default_factory=dict)


_KNOWN_KEYS = {
    "profile", "profile_coherence_bandwidth_hz", "profile_coherence_time_s",
    "profile_system_bandwidth_hz", "profile_rb_bandwidth_hz", "profile_rb_duration_s",
    "d", "r", "l", "n_c", "scheme", "rx_antennas", "payload_bits", "s",
    "snr_db", "snr_grid_db", "snr_bracket_db", "pilot_count", "pilot_step",
    "pilot_optimize", "ref_snr_db", "target_eps", "l_values", "estimator",
    "mc_samples", "sp_samples", "mc_min_eps", "seed", "workers", "out",
}


def resolve_config(raw: dict[str, str], subcommand: str) -> RunConfig:
    """Validate and resolve a parsed config for one subcommand.

    Collects every violation before raising, so a bad file reports all of
    its problems at once.
    """
    errors = []
    for key in raw:
        if key not in _KNOWN_KEYS:
            errors.append(f"unknown key {key!r}")

    def take(key, parse, default=None, required=False):
        if key not in raw:
            if required:
                errors.append(f"missing required key {key!r}")
            return default
        try:
            return parse(raw[key])
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
            return default

    scheme = take("scheme", str, required=True)
    if scheme is not None and scheme not in SCHEMES:
        errors.append(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    rx = take("rx_antennas", int, required=True)
    payload = take("payload_bits", float, required=True)
    s_param = take("s", float, default=1.0)

    profile = None
    geometry = None
    n_c = take("n_c", int)
    ell = take("l", int, required=True)
    if n_c is None:
        prof_name = take("profile", str, required=True)
        d = take("d", int, required=True)
        r = take("r", int, required=True)
        if prof_name is not None:
            try:
                if prof_name.lower() == "custom":
                    profile = ChannelProfile(
                        "custom",
                        coherence_bandwidth_hz=take(
                            "profile_coherence_bandwidth_hz", float, required=True) or 1.0,
                        coherence_time_s=take(
                            "profile_coherence_time_s", float, required=True) or 1.0,
                        system_bandwidth_hz=take(
                            "profile_system_bandwidth_hz", float, default=20e6),
                        rb_bandwidth_hz=take("profile_rb_bandwidth_hz", float, default=180e3),
                        rb_duration_s=take("profile_rb_duration_s", float, default=0.5e-3),
                    )
                else:
                    profile = profile_by_name(prof_name)
                if None not in (d, r, ell):
                    geom = make_geometry(profile, d, r, ell)
                    n_c = geom.coherence_block_size
                    geometry = (d, r, ell)
            except GeometryError as exc:
                errors.extend(exc.violations)

    scheme_tx = {"simo": 1, "alamouti": 2, "mimo_generic": 2}.get(scheme or "", 1)
    pilot_count = take("pilot_count", int, default=scheme_tx)
    estimator = take("estimator", str, default="both")
    if estimator not in ESTIMATORS:
        errors.append(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")

    snr_db = take("snr_db", float)
    snr_grid = take("snr_grid_db", _parse_grid)
    bracket_list = take("snr_bracket_db", _parse_grid)
    snr_bracket = None
    if bracket_list is not None:
        if len(bracket_list) != 2:
            errors.append(f"snr_bracket_db must have exactly two values, got {bracket_list}")
        else:
            snr_bracket = (bracket_list[0], bracket_list[1])

    needs = {
        "point": ("snr_db", snr_db),
        "pilot-sweep": ("snr_db", snr_db),
        "snr-curve": ("snr_grid_db", snr_grid),
        "envelope": ("snr_bracket_db", snr_bracket),
    }[subcommand]
    if needs[1] is None:
        errors.append(f"subcommand {subcommand!r} requires key {needs[0]!r}")

    target_eps = take("target_eps", float)
    if subcommand == "envelope" and target_eps is None:
        errors.append("subcommand 'envelope' requires key 'target_eps'")
    diversity_values = take("l_values", _parse_int_grid)
    pilot_step = take("pilot_step", int, default=2)
    pilot_optimize = take("pilot_optimize", _parse_bool, default=False)
    ref_snr_db = take("ref_snr_db", float)
    mc_samples = take("mc_samples", int, default=1_000_000)
    sp_samples = take("sp_samples", int, default=1_000_000)
    mc_min_eps = take("mc_min_eps", float, default=1e-3)
    seed = take("seed", int, default=0)
    workers = take("workers", int, default=1)
    out = take("out", str, default="patmimo-out.csv")

    link = None
    resolvable = None not in (scheme, rx, payload, ell, n_c, pilot_count, s_param)
    if resolvable and scheme in SCHEMES:
        try:
            rate = payload / (ell * n_c)
            link = BlockFadingConfig(
                tx_antennas=scheme_tx,
                rx_antennas=rx,
                coherence_block_size=n_c,
                diversity_branches=ell,
                snr=db_to_linear(snr_db if snr_db is not None else 0.0),
                pilot_count=pilot_count,
                rate=rate,
                rcus_parameter=s_param,
            )
            validate_scheme(link, scheme)
        except (ConfigError, ZeroDivisionError) as exc:
            link = None
            if isinstance(exc, ConfigError):
                errors.extend(exc.violations)
            else:
                errors.append(str(exc))

    if errors:
        raise CliConfigError("; ".join(errors))

    return RunConfig(
        link=link,
        scheme=scheme,
        payload_bits=payload,
        profile=profile,
        geometry=geometry,
        snr_db=snr_db,
        snr_grid_db=snr_grid,
        snr_bracket_db=snr_bracket,
        pilot_step=pilot_step,
        pilot_optimize=pilot_optimize,
        ref_snr_db=ref_snr_db,
        target_eps=target_eps,
        diversity_values=diversity_values,
        estimator=estimator,
        mc_samples=mc_samples,
        sp_samples=sp_samples,
        mc_min_eps=mc_min_eps,
        seed=seed,
        workers=workers,
        out=out,
        raw=dict(raw),
    )


def _fmt_eps(value: float | None) -> str:
    return "" if value is None else f"{value:.5e}"


def _fmt_db(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def _rows_to_csv(result: SweepResult, run: RunConfig, subcommand: str) -> str:
    """Render sweep rows with the documented column set and formats."""
    k = run.payload_bits
    lines = []
    if subcommand == "envelope":
        lines.append("diversity_branches,eps_mc,eps_mc_stderr,eps_sp,eb_n0_db,n_p,min_snr_db")
        n_nominal = result.metadata["nominal_blocklength"]
        for row in result.rows:
            ell = int(row.axis_value)
            n_c = int(round(n_nominal / ell))
            rate = k / (ell * n_c)
            ebn0 = row.snr_db - 10.0 * np.log10(rate)
            lines.append(
                f"{ell},{_fmt_eps(row.mc.value if row.mc else None)},"
                f"{_fmt_eps(row.mc.std_error if row.mc else None)},"
                f"{_fmt_eps(row.sp.value if row.sp else None)},"
                f"{_fmt_db(ebn0)},{row.pilot_count},{_fmt_db(row.snr_db)}"
            )
        return "\n".join(lines) + "\n"

    if subcommand == "pilot-sweep":
        lines.append("n_p,eps_mc,eps_mc_stderr,eps_sp,eb_n0_db")
        rate = run.link.rate
        ebn0 = (run.snr_db or 0.0) - 10.0 * np.log10(rate)
        for row in result.rows:
            lines.append(
                f"{row.pilot_count},{_fmt_eps(row.mc.value if row.mc else None)},"
                f"{_fmt_eps(row.mc.std_error if row.mc else None)},"
                f"{_fmt_eps(row.sp.value if row.sp else None)},{_fmt_db(ebn0)}"
            )
        return "\n".join(lines) + "\n"

    # point and snr-curve
    lines.append("snr_db,eps_mc,eps_mc_stderr,eps_sp,eb_n0_db,n_p")
    rate = run.link.rate
    for row in result.rows:
        ebn0 = row.snr_db - 10.0 * np.log10(rate)
        lines.append(
            f"{_fmt_db(row.snr_db)},{_fmt_eps(row.mc.value if row.mc else None)},"
            f"{_fmt_eps(row.mc.std_error if row.mc else None)},"
            f"{_fmt_eps(row.sp.value if row.sp else None)},{_fmt_db(ebn0)},{row.pilot_count}"
        )
    return "\n".join(lines) + "\n"


def _write_manifest(path: str, run: RunConfig, subcommand: str, wall_time_s: float) -> None:
    link = run.link
    pairs = [
        ("tool_version", __version__),
        ("subcommand", subcommand),
        ("scheme", run.scheme),
        ("tx_antennas", link.tx_antennas),
        ("rx_antennas", link.rx_antennas),
        ("coherence_block_size", link.coherence_block_size),
        ("diversity_branches", link.diversity_branches),
        ("blocklength", link.blocklength),
        ("payload_bits", run.payload_bits),
        ("rate_bits_per_use", repr(link.rate)),
        ("s", link.rcus_parameter),
        ("pilot_count", link.pilot_count),
        ("pilot_step", run.pilot_step),
        ("pilot_optimize", run.pilot_optimize),
        ("ref_snr_db", run.ref_snr_db),
        ("snr_db", run.snr_db),
        ("snr_grid_db", run.snr_grid_db),
        ("snr_bracket_db", run.snr_bracket_db),
        ("target_eps", run.target_eps),
        ("l_values", run.diversity_values),
        ("estimator", run.estimator),
        ("mc_samples", run.mc_samples),
        ("sp_samples", run.sp_samples),
        ("mc_min_eps", run.mc_min_eps),
        ("seed", run.seed),
        ("workers", run.workers),
        ("partition_size", DEFAULT_PARTITION_SIZE),
        ("out", run.out),
        ("wall_time_s", f"{wall_time_s:.3f}"),
    ]
    if run.profile is not None:
        pairs += [
            ("profile", run.profile.name),
            ("profile_coherence_bandwidth_hz", run.profile.coherence_bandwidth_hz),
            ("profile_coherence_time_s", run.profile.coherence_time_s),
        ]
    if run.geometry is not None:
        pairs += [("d", run.geometry[0]), ("r", run.geometry[1])]
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def _dispatch(run: RunConfig, subcommand: str) -> SweepResult:
    common = dict(
        mc_samples=run.mc_samples,
        sp_samples=run.sp_samples,
        seed=run.seed,
        workers=run.workers,
    )
    if subcommand == "point":
        config = run.link
        mc = sp = None
        if run.estimator in ("saddlepoint", "both"):
            sp = saddlepoint_epsilon(config, run.scheme, run.sp_samples, run.seed,
                                     workers=run.workers)
        if run.estimator in ("mc", "both"):
            mc = rcus_mc(config, run.scheme, run.mc_samples, run.seed, workers=run.workers)
        row = SweepRow(run.snr_db, mc=mc, sp=sp, pilot_count=config.pilot_count,
                       snr_db=run.snr_db)
        return SweepResult("snr_db", [row], run.snr_db, {"subcommand": "point"})
    if subcommand == "pilot-sweep":
        return pilot_sweep(
            run.link, run.scheme, None, run.estimator, pilot_step=run.pilot_step, **common
        )
    if subcommand == "snr-curve":
        return snr_curve(
            run.link,
            run.scheme,
            run.snr_grid_db,
            pilot_optimize=run.pilot_optimize,
            ref_snr_db=run.ref_snr_db,
            pilot_step=run.pilot_step,
            estimator=run.estimator,
            mc_min_eps=run.mc_min_eps,
            **common,
        )
    if subcommand == "envelope":
        values = run.diversity_values or list(
            range(1, run.link.diversity_branches + 1)
        )
        return diversity_envelope(
            run.link,
            run.scheme,
            values,
            run.target_eps,
            run.snr_bracket_db,
            payload_bits=run.payload_bits,
            pilot_step=run.pilot_step,
            estimator=run.estimator,
            **common,
        )
    raise ValueError(f"unknown subcommand {subcommand!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="patmimo",
        description="Error-probability bounds for pilot-assisted short-packet MIMO links",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--budget", type=int, default=None,
                       help="override both mc_samples and sp_samples")
        p.add_argument("--out", default=None, help="override output CSV path")
        p.add_argument("--workers", type=int, default=None, help="override worker count")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = parse_flat_config(fh.read())
        run = resolve_config(raw, args.subcommand)
    except OSError as exc:
        print(f"error: config-io: {exc}", file=sys.stderr)
        return 2
    except CliConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        run.seed = args.seed
    if args.budget is not None:
        run.mc_samples = args.budget
        run.sp_samples = args.budget
    if args.out is not None:
        run.out = args.out
    if args.workers is not None:
        run.workers = args.workers

    start = time.perf_counter()
    try:
        result = _dispatch(run, args.subcommand)
    except (ConfigError, BracketError, ValueError) as exc:
        print(f"error: run: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start

    csv_text = _rows_to_csv(result, run, args.subcommand)
    with open(run.out, "w") as fh:
        fh.write(csv_text)
    _write_manifest(run.out + ".manifest", run, args.subcommand, wall)
    print(f"wrote {run.out} ({len(result.rows)} rows) and {run.out}.manifest")
    return 0


if __name__ == "__main__":
    sys.exit(main())
