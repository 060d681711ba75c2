"""Grid drivers: pilot-count sweeps, SNR bisection to a target error
probability, diversity envelopes, and error-probability-vs-SNR curves.

All sweeps use common random numbers: every grid point reuses the same
seed, partition plan and draw sizes, so grid-to-grid differences reflect
the parameter change rather than Monte Carlo noise, and every result can
be reproduced bit-identically from its metadata.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


from . import __version__
from .bounds import (
    DEFAULT_E0_SAMPLES,
    DEFAULT_MC_SAMPLES,
    ErrorProbEstimate,
    rcus_mc,
    saddlepoint_epsilon,
)
from .channel import BlockFadingConfig, ConfigError, db_to_linear
from .sampling import validate_scheme
from .streams import DEFAULT_PARTITION_SIZE

ESTIMATORS = ("mc", "saddlepoint", "both")


class BracketError(ValueError):
    """The SNR bracket does not straddle the target error probability."""


@dataclass(frozen=True)
class SweepRow:
    """One grid point: axis value plus the estimates computed there."""

    axis_value: float
    mc: ErrorProbEstimate | None = None
    sp: ErrorProbEstimate | None = None
    pilot_count: int | None = None
    snr_db: float | None = None

    @property
    def primary(self) -> ErrorProbEstimate:
        est = self.sp if self.sp is not None else self.mc
        if est is None:
            raise ValueError("row carries no estimate")
        return est


@dataclass
class SweepResult:
    """Rows of one swept axis, sorted by axis value, plus rerun metadata."""

    axis_name: str
    rows: list[SweepRow]
    argmin: float | None
    metadata: dict


@dataclass(frozen=True)
class MinSnrResult:
    """Smallest SNR meeting a target error probability, with the pilot count used."""

    snr_db: float
    pilot_count: int
    estimate: ErrorProbEstimate


def _check_estimator(estimator: str) -> None:
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def admissible_pilot_counts(
    config: BlockFadingConfig, scheme: str, step: int = 1
) -> tuple[list[int], list[int]]:
    """Pilot grid for a scheme: (admissible, skipped-for-parity).

    Every candidate satisfies tx <= n_p < n_c; for the space-time code,
    candidates leaving an odd number of data symbols are skipped and
    reported.
    """
    m_t = config.tx_antennas
    n_c = config.coherence_block_size
    grid = list(range(m_t, n_c, step))
    if scheme != "alamouti":
        return grid, []
    keep = [n_p for n_p in grid if (n_c - n_p) % 2 == 0]
    skipped = [n_p for n_p in grid if (n_c - n_p) % 2 != 0]
    return keep, skipped


def _point_estimates(
    config: BlockFadingConfig,
    scheme: str,
    estimator: str,
    *,
    mc_samples: int,
    sp_samples: int,
    seed: int,
    workers: int,
    partition_size: int,
    data_draw_count: int | None,
    mc_min_eps: float = 0.0,
) -> tuple[ErrorProbEstimate | None, ErrorProbEstimate | None]:
    """(mc, sp) estimates per the estimator policy; mc is skipped below mc_min_eps."""
    sp = None
    mc = None
    if estimator in ("saddlepoint", "both"):
        sp = saddlepoint_epsilon(
            config,
            scheme,
            sp_samples,
            seed,
            workers=workers,
            partition_size=partition_size,
            data_draw_count=data_draw_count,
        )
    if estimator in ("mc", "both"):
        if sp is None or sp.value >= mc_min_eps:
            mc = rcus_mc(
                config,
                scheme,
                mc_samples,
                seed,
                workers=workers,
                partition_size=partition_size,
                data_draw_count=data_draw_count,
            )
    return mc, sp


def _base_metadata(config, scheme, estimator, seed, workers, partition_size, **extra):
    meta = {
        "version": __version__,
        "config": asdict(config),
        "scheme": scheme,
        "estimator": estimator,
        "seed": seed,
        "workers": workers,
        "partition_size": partition_size,
    }
    meta.update(extra)
    return meta


def pilot_sweep(
    config_base: BlockFadingConfig,
    scheme: str,
    pilot_counts: list[int] | None = None,
    estimator: str = "saddlepoint",
    *,
    pilot_step: int = 2,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    sp_samples: int = DEFAULT_E0_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    partition_size: int = DEFAULT_PARTITION_SIZE,
) -> SweepResult:
    """Error probability over a pilot-count grid; argmin is the best count.

    The draw size is fixed to the largest admissible data length so all
    grid points share random numbers.
    """
    _check_estimator(estimator)
    validate_scheme(config_base, scheme)
    if pilot_counts is None:
        pilot_counts, skipped = admissible_pilot_counts(config_base, scheme, pilot_step)
    else:
        pilot_counts = sorted(pilot_counts)
        keep, skipped = [], []
        for n_p in pilot_counts:
            if not config_base.tx_antennas <= n_p < config_base.coherence_block_size:
                raise ConfigError(
                    [f"pilot count {n_p} outside [tx_antennas, coherence_block_size)"]
                )
            if scheme == "alamouti" and (config_base.coherence_block_size - n_p) % 2 != 0:
                skipped.append(n_p)
            else:
                keep.append(n_p)
        pilot_counts = keep
    if not pilot_counts:
        raise ConfigError(["empty admissible pilot grid"])

    draw = config_base.coherence_block_size - config_base.tx_antennas
    rows = []
    for n_p in pilot_counts:
        config = replace(config_base, pilot_count=n_p)
        mc, sp = _point_estimates(
            config,
            scheme,
            estimator,
            mc_samples=mc_samples,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
            data_draw_count=draw,
        )
        rows.append(SweepRow(float(n_p), mc=mc, sp=sp, pilot_count=n_p))
    best = min(rows, key=lambda r: r.primary.value)
    meta = _base_metadata(
        config_base,
        scheme,
        estimator,
        seed,
        workers,
        partition_size,
        mc_samples=mc_samples,
        sp_samples=sp_samples,
        pilot_counts=list(pilot_counts),
        skipped_pilot_counts=list(skipped),
        data_draw_count=draw,
    )
    return SweepResult("pilot_count", rows, best.axis_value, meta)


def _pilot_window(grid: list[int], center: int, halfwidth: int) -> list[int]:
    lo = center - halfwidth
    hi = center + halfwidth
    window = [n_p for n_p in grid if lo <= n_p <= hi]
    return window if window else grid


def _optimized_eps(
    config_base,
    scheme,
    snr_db,
    grid,
    prev_best,
    *,
    estimator,
    mc_samples,
    sp_samples,
    seed,
    workers,
    partition_size,
    pilot_step,
):
    """Min error probability over the pilot grid at one SNR.

    After the first full-grid scan the search is windowed around the last
    optimum, expanding whenever the windowed argmin touches a window edge.
    """
    config_snr = replace(config_base, snr=db_to_linear(snr_db))
    halfwidth = 3 * pilot_step
    candidates = grid if prev_best is None else _pilot_window(grid, prev_best, halfwidth)
    while True:
        sweep = pilot_sweep(
            config_snr,
            scheme,
            candidates,
            estimator,
            mc_samples=mc_samples,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
        )
        best = int(sweep.argmin)
        at_window_edge = best in (candidates[0], candidates[-1])
        at_grid_edge = best in (grid[0], grid[-1])
        if not at_window_edge or at_grid_edge or candidates == grid:
            break
        # Windowed argmin landed on the window border: widen and rescan.
        halfwidth *= 2
        candidates = _pilot_window(grid, best, halfwidth)
    row = next(r for r in sweep.rows if r.pilot_count == best)
    return row.primary, best


def min_snr_for_target(
    config_base: BlockFadingConfig,
    scheme: str,
    target_eps: float,
    snr_bracket_db: tuple[float, float],
    *,
    pilot_optimize: bool = False,
    pilot_step: int = 2,
    tol_db: float = 0.05,
    estimator: str = "saddlepoint",
    mc_samples: int = DEFAULT_MC_SAMPLES,
    sp_samples: int = DEFAULT_E0_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    partition_size: int = DEFAULT_PARTITION_SIZE,
) -> MinSnrResult:
    """Bisect the SNR until the (optionally pilot-optimized) estimate meets the target.

    The bracket must straddle the target; a target already met at the lower
    end returns that end.  Error probability is assumed nonincreasing in
    SNR, which common random numbers make hold in practice.
    """
    _check_estimator(estimator)
    validate_scheme(config_base, scheme)
    if not 0.0 < target_eps <= 1.0:
        raise ValueError(f"target_eps must lie in (0, 1], got {target_eps}")
    lo_db, hi_db = float(snr_bracket_db[0]), float(snr_bracket_db[1])
    if not lo_db < hi_db:
        raise ValueError(f"invalid bracket: {snr_bracket_db}")

    grid, _ = admissible_pilot_counts(config_base, scheme, pilot_step)
    state = {"prev_best": None}

    def evaluate(snr_db):
        if pilot_optimize:
            est, best = _optimized_eps(
                config_base,
                scheme,
                snr_db,
                grid,
                state["prev_best"],
                estimator=estimator,
                mc_samples=mc_samples,
                sp_samples=sp_samples,
                seed=seed,
                workers=workers,
                partition_size=partition_size,
                pilot_step=pilot_step,
            )
            state["prev_best"] = best
            return est, best
        config = replace(config_base, snr=db_to_linear(snr_db))
        mc, sp = _point_estimates(
            config,
            scheme,
            estimator,
            mc_samples=mc_samples,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
            data_draw_count=None,
        )
        return (sp if sp is not None else mc), config.pilot_count

    est_lo, np_lo = evaluate(lo_db)
    if est_lo.value <= target_eps:
        return MinSnrResult(lo_db, np_lo, est_lo)
    est_hi, np_hi = evaluate(hi_db)
    if est_hi.value > target_eps:
        raise BracketError(
            f"bracket does not straddle target: eps({lo_db:g} dB) = {est_lo.value:.3e}, "
            f"eps({hi_db:g} dB) = {est_hi.value:.3e}, target = {target_eps:.3e}"
        )

    best_hi = (hi_db, np_hi, est_hi)
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        est_mid, np_mid = evaluate(mid)
        if est_mid.value <= target_eps:
            hi_db = mid
            best_hi = (mid, np_mid, est_mid)
        else:
            lo_db = mid
    return MinSnrResult(best_hi[0], best_hi[1], best_hi[2])


def diversity_envelope(
    config_base: BlockFadingConfig,
    scheme: str,
    diversity_values: list[int],
    target_eps: float,
    snr_bracket_db: tuple[float, float],
    *,
    nominal_blocklength: int | None = None,
    payload_bits: float | None = None,
    pilot_step: int = 2,
    tol_db: float = 0.05,
    estimator: str = "saddlepoint",
    mc_samples: int = DEFAULT_MC_SAMPLES,
    sp_samples: int = DEFAULT_E0_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    partition_size: int = DEFAULT_PARTITION_SIZE,
) -> SweepResult:
    """Pilot-optimized minimum SNR against the number of diversity branches.

    Each branch count L gets a coherence block of round(n / L) channel
    uses, keeping the blocklength as close as possible to the nominal one,
    and the rate is recomputed from the payload for the realized
    blocklength.
    """
    n_nominal = (
        config_base.blocklength if nominal_blocklength is None else int(nominal_blocklength)
    )
    k_bits = (
        config_base.rate * config_base.blocklength if payload_bits is None else float(payload_bits)
    )
    rows = []
    for ell in sorted(int(v) for v in diversity_values):
        n_c = int(round(n_nominal / ell))
        min_np = config_base.tx_antennas
        if n_c <= min_np:
            raise ConfigError(
                [f"L = {ell} leaves a coherence block of {n_c} uses, too small for pilots"]
            )
        config_l = replace(
            config_base,
            diversity_branches=ell,
            coherence_block_size=n_c,
            pilot_count=min_np if scheme != "alamouti" else min_np + (n_c % 2),
            rate=k_bits / (ell * n_c),
        )
        res = min_snr_for_target(
            config_l,
            scheme,
            target_eps,
            snr_bracket_db,
            pilot_optimize=True,
            pilot_step=pilot_step,
            tol_db=tol_db,
            estimator=estimator,
            mc_samples=mc_samples,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
        )
        row_est = res.estimate
        rows.append(
            SweepRow(
                float(ell),
                mc=row_est if row_est.method == "rcus_mc" else None,
                sp=row_est if row_est.method == "saddlepoint" else None,
                pilot_count=res.pilot_count,
                snr_db=res.snr_db,
            )
        )
    best = min(rows, key=lambda r: r.snr_db)
    meta = _base_metadata(
        config_base,
        scheme,
        estimator,
        seed,
        workers,
        partition_size,
        mc_samples=mc_samples,
        sp_samples=sp_samples,
        target_eps=target_eps,
        snr_bracket_db=list(snr_bracket_db),
        nominal_blocklength=n_nominal,
        payload_bits=k_bits,
        pilot_step=pilot_step,
        tol_db=tol_db,
        diversity_values=[int(v) for v in diversity_values],
    )
    return SweepResult("diversity_branches", rows, best.axis_value, meta)


def snr_curve(
    config_base: BlockFadingConfig,
    scheme: str,
    snr_grid_db: list[float],
    *,
    pilot_optimize: bool = True,
    ref_snr_db: float | None = None,
    pilot_step: int = 2,
    estimator: str = "both",
    mc_min_eps: float = 1e-3,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    sp_samples: int = DEFAULT_E0_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    partition_size: int = DEFAULT_PARTITION_SIZE,
) -> SweepResult:
    """Error probability against SNR at the scheme's optimal pilot fraction.

    The pilot count is optimized once, at ``ref_snr_db`` (default: the grid
    midpoint), then held fixed across the curve.  Monte Carlo values are
    emitted only where the saddlepoint estimate is at least ``mc_min_eps``,
    where the direct estimator is budget-feasible.
    """
    _check_estimator(estimator)
    validate_scheme(config_base, scheme)
    grid_db = sorted(float(v) for v in snr_grid_db)
    if not grid_db:
        raise ValueError("empty SNR grid")

    pilot_used = config_base.pilot_count
    if pilot_optimize:
        ref = grid_db[len(grid_db) // 2] if ref_snr_db is None else float(ref_snr_db)
        ref_config = replace(config_base, snr=db_to_linear(ref))
        ref_sweep = pilot_sweep(
            ref_config,
            scheme,
            None,
            "saddlepoint",
            pilot_step=pilot_step,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
        )
        pilot_used = int(ref_sweep.argmin)

    rows = []
    for snr_db in grid_db:
        config = replace(config_base, snr=db_to_linear(snr_db), pilot_count=pilot_used)
        mc, sp = _point_estimates(
            config,
            scheme,
            estimator,
            mc_samples=mc_samples,
            sp_samples=sp_samples,
            seed=seed,
            workers=workers,
            partition_size=partition_size,
            data_draw_count=None,
            mc_min_eps=mc_min_eps,
        )
        rows.append(SweepRow(snr_db, mc=mc, sp=sp, pilot_count=pilot_used, snr_db=snr_db))
    best = min(rows, key=lambda r: r.primary.value)
    meta = _base_metadata(
        config_base,
        scheme,
        estimator,
        seed,
        workers,
        partition_size,
        mc_samples=mc_samples,
        sp_samples=sp_samples,
        snr_grid_db=grid_db,
        pilot_optimize=pilot_optimize,
        ref_snr_db=ref_snr_db,
        pilot_step=pilot_step,
        pilot_count_used=pilot_used,
        mc_min_eps=mc_min_eps,
    )
    return SweepResult("snr_db", rows, best.axis_value, meta)
