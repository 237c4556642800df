"""Deterministic command-line front end for the experiment pipelines.

Five subcommands: twist-table (per-class constants over an (n, b) grid),
period-profile (exact traversal period against its large-n profile),
phase-plot (pixel plot of symmetric return-map orbits on the cylinder),
distribution (the period-distribution experiment, aggregated over step
parameters and base points) and agreement (exact field-agreement density).

Every run writes its data files plus a sibling ``*.manifest.json`` carrying
the resolved parameters (exact lambda, base point, caps) and versions.  The
data files are byte-identical across reruns with the same configuration;
wall-clock timing lives only in the manifest.  All rationals are serialized
as exact ``p/q`` strings alongside 15-significant-digit decimals.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from .integrable import (
    NoSolution,
    OnCriticalBoundary,
    PolygonClass,
    asymptotic_profile,
    class_at,
    floor_sqrt,
    period_T,
    polygon_class,
)
from . import kernels
from . import returnmap as rmap
from .returnmap import (
    CapExceeded,
    Escaped,
    LambdaTooLarge,
    ReturnDomain,
    build_A,
    in_domain_Xe,
    make_return_domain,
    symmetry_Ge,
    trace_orbits,
)
from .stats import (
    excursion_stats,
    gamma_law,
    agreement_density,
    period_distribution,
    records_from_orbits,
)

Q = Fraction

# phase-plot anchor protocol (frozen: the occupancy thresholds in the
# acceptance suite are regressions against exactly these constants)
_SCAN_HALF = 240      # rotation scan covers diagonal offsets [-240, 240]
_SCAN_STEP = 48       # ... every 48 levels
_SCAN_RETURNS = 32    # returns averaged per scanned latitude
_REFINE_HALF = 60     # minimal-period search half-width around the fit root
_REFINE_CAP = 3000    # period search gives up past this many returns
_H_PROBE_HALF = 2     # columns probed around the predicted h-line position


@dataclass(frozen=True)
class ExperimentConfig:
    """Echo of one resolved command line; serialized into every manifest.

    lam holds the lambda request strings as given ("p/q" or "auto"); the
    resolved exact values appear separately in the manifest.  seed is
    recorded for the rerun contract even though every pipeline here is
    deterministic without sampling.
    """

    command: str
    e: int | None = None
    n: tuple[int, ...] | None = None
    b: tuple[str, ...] | None = None
    m: int | None = None
    lam: tuple[str, ...] | None = None
    r: str | None = None
    cap: int | None = None
    resolution: tuple[int, int] | None = None
    seeds: int | None = None
    z0_count: int | None = None
    grid: int | None = None
    out: str | None = None
    threads: int = 1
    format: str = "csv"
    seed: int = 0


# ---------------------------------------------------------------------------
# serialization helpers


def _decimal15(value) -> str:
    """15-significant-digit decimal rendering of an exact rational."""
    fr = Q(value)
    with localcontext() as ctx:
        ctx.prec = 15
        return str(Decimal(fr.numerator) / Decimal(fr.denominator))


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _rows_json(header: list[str], rows: list[list[str]]) -> str:
    return json.dumps([dict(zip(header, row)) for row in rows],
                      sort_keys=True, indent=2) + "\n"


def _versions() -> dict:
    from . import __version__
    import numpy
    out = {"roundflow": __version__,
           "python": platform.python_version(),
           "numpy": numpy.__version__}
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:
        out["numba"] = None
    return out


# ---------------------------------------------------------------------------
# lambda resolution


def resolve_lambda(text: str, cls: PolygonClass, band_m: int) -> ReturnDomain:
    """Resolve a lambda request to a built domain admitting band_m domains.

    "p/q" uses exactly that value (band fit still validated); "auto"
    starts from (e_next - e) / (2 W^2 (band_m + 6) |rho_star|), snaps to a
    unit fraction 1/q, and walks q up by ten-percent steps until the band
    fits.  The starting point leaves the band's required (band_m + 4)
    domains a ~50% margin, so the walk rarely moves; it also steps past
    unlucky denominators on which no diagonal point is admitted.
    """
    if text != "auto":
        lam = Q(text)
        return make_return_domain(cls, lam, band_m=band_m)
    if cls.rho_star is None:
        raise LambdaTooLarge(f"no auto lambda on the twistless class {cls.e.e}")
    lo, hi = cls.interval
    rs = abs(cls.rho_star)
    q = math.ceil(2 * cls.width ** 2 * (band_m + 6) * rs / (hi - lo))
    for _ in range(200):
        try:
            return make_return_domain(cls, Q(1, q), band_m=band_m)
        except (LambdaTooLarge, NoSolution):
            q = q * 11 // 10 + 1
    raise LambdaTooLarge(
        f"auto lambda search exhausted for class {cls.e.e} at band_m={band_m}")


# ---------------------------------------------------------------------------
# twist-table and period-profile


def cmd_twist_table(n_list, b_list) -> str:
    """CSV of per-class constants over the (n, b) grid: the class reached
    by level (n+b)^2, its midpoint, period slope, twist and translation
    length, each as an exact rational plus a decimal rendering."""
    header = ["n", "b", "e", "e_next", "e_mean", "e_mean_decimal",
              "t_prime", "t_prime_decimal", "kappa", "kappa_decimal",
              "rho_star", "rho_star_decimal"]
    rows = []
    for n in n_list:
        for b in b_list:
            b = Q(b)
            cls = polygon_class(class_at(n, b))
            e_mean = Q(cls.e.e + cls.e.next, 2)
            row = [str(n), str(b), str(cls.e.e), str(cls.e.next),
                   str(e_mean), _decimal15(e_mean),
                   str(cls.t_prime), _decimal15(cls.t_prime),
                   str(cls.kappa), _decimal15(cls.kappa)]
            if cls.rho_star is None:
                row += ["", ""]
            else:
                row += [str(cls.rho_star), _decimal15(cls.rho_star)]
            rows.append(row)
    return _csv_text(header, rows)


def cmd_period_profile(n, grid) -> str:
    """CSV of the exact traversal period on levels (n + j/grid)^2 against
    the large-n profile.  Rows whose level is critical (j = 0 when e = n^2
    is one) have no period; their period cells are left empty while the
    profile column is still emitted."""
    if n < 1:
        raise ValueError("n must be positive")
    if grid < 1:
        raise ValueError("grid must be positive")
    header = ["b", "alpha", "period", "period_decimal",
              "scaled_deviation", "profile", "abs_gap"]
    rows = []
    for j in range(grid):
        b = Q(j, grid)
        alpha = (n + b) ** 2
        profile = asymptotic_profile(float(b))
        try:
            period = period_T(alpha)
        except OnCriticalBoundary:
            rows.append([str(b), str(alpha), "", "", "",
                         format(profile, ".15g"), ""])
            continue
        scaled = (float(period) - math.pi) * n ** 1.5 / 4
        rows.append([str(b), str(alpha), str(period), _decimal15(period),
                     format(scaled, ".15g"), format(profile, ".15g"),
                     format(abs(scaled - profile), ".15g")])
    return _csv_text(header, rows)


# ---------------------------------------------------------------------------
# phase plot


def _phase_step(z, dom: ReturnDomain, lim, cap):
    """One return, integer fast path first.  Raises Escaped on failure."""
    if lim is not None and kernels.HAVE_NUMBA:
        X, Y, steps, status = kernels.phi_fast(
            z[0], z[1], dom.lam.numerator, dom.lam.denominator,
            dom.cls.m_half, dom.cls.width, dom.s_lo, dom.s_hi, cap, lim)
        if status == 0:
            return (X, Y)
        if status != 3:
            raise Escaped(steps, "strip iteration cap")
    return rmap.return_map_Phi(z, dom, cap, method="strip")


def _mean_theta_step(z, dom: ReturnDomain, lim, cap, returns) -> Fraction:
    """Average wrapped column increment per return, as an exact fraction
    of the cylinder circumference; the observable whose zero locates the
    primary resonance latitude."""
    W = dom.cls.width
    prev = z[0] - z[1]
    acc = 0
    for _ in range(returns):
        z = _phase_step(z, dom, lim, cap)
        col = z[0] - z[1]
        acc += (col - prev + W) % (2 * W) - W
        prev = col
    return Q(acc, returns * 2 * W)


def _exact_line_fit(xs: list[int], ys: list[Fraction]) -> tuple[Fraction, Fraction]:
    """Least-squares slope and intercept in exact rational arithmetic
    (float fitting here would make the anchor platform-dependent)."""
    count = len(xs)
    sx = sum(xs)
    sy = sum(ys, Q(0))
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    den = count * sxx - sx * sx
    if den == 0:
        raise ValueError("degenerate abscissae")
    slope = Q(count * sxy - sx * sy, 1) / den
    intercept = (sy - slope * sx) / count
    return slope, intercept


def _resonant_anchor(dom: ReturnDomain, band_m: int) -> tuple[ReturnDomain, dict]:
    """Rebase the domain at an elliptic centre of the primary resonance.

    Scans diagonal latitudes for the rotation zero crossing (exact linear
    fit of the mean column step), then picks the point of minimal return
    period near the crossing and rebuilds the domain there.  Falls back to
    the unmoved domain when the scan cannot resolve a crossing; the plot
    is then still valid, just not centred on the resonance.
    """
    cls = dom.cls
    X0 = dom.base_point[0]
    lim = rmap._kernel_envelope(dom)
    phi_cap = rmap._default_phi_cap(dom.lam)
    ks: list[int] = []
    rots: list[Fraction] = []
    for k in range(-_SCAN_HALF, _SCAN_HALF + 1, _SCAN_STEP):
        z = (X0 + k, X0 + k)
        if not in_domain_Xe(z, dom):
            continue
        try:
            rots.append(_mean_theta_step(z, dom, lim, phi_cap, _SCAN_RETURNS))
            ks.append(k)
        except (Escaped, CapExceeded):
            continue
    info = {"scanned": len(ks), "shift": 0, "anchor_period": None}
    if len(ks) < 2:
        return dom, info
    slope, intercept = _exact_line_fit(ks, rots)
    if slope == 0:
        return dom, info
    k0 = round(-intercept / slope)
    k0 = max(-_SCAN_HALF, min(_SCAN_HALF, k0))
    best = None
    for k in range(k0 - _REFINE_HALF, k0 + _REFINE_HALF + 1):
        z = (X0 + k, X0 + k)
        if not in_domain_Xe(z, dom):
            continue
        summ = rmap._trace_orbit(z, dom, _REFINE_CAP, phi_cap)
        if summ.period is not None and (best is None or summ.period < best[1]):
            best = (k, summ.period)
    if best is None:
        return dom, info
    anchored = make_return_domain(cls, dom.lam,
                                  base_point=(X0 + best[0], X0 + best[0]),
                                  band_m=band_m)
    info.update(shift=best[0], anchor_period=best[1])
    return anchored, info


def _phase_seeds(dom: ReturnDomain, span: int, stride: int, lim, phi_cap):
    """Seed points on the reversor fixed lines, deterministic order.

    Fix G^e latitudes every stride levels (both branches, parity
    adjusted); candidate Fix(Phi o G^e) points every other latitude,
    probed around the predicted column and confirmed by the predecessor
    test Phi(G^e z) = z.
    """
    cls = dom.cls
    W = cls.width
    Xc = dom.base_point[0]
    s_a, s_b = 2 * Xc - span // 2, 2 * Xc + span // 2
    out: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def add(z):
        if z not in seen:
            seen.add(z)
            out.append(z)

    for S in range(s_a, s_b + 1, stride):
        for i in (0, -W):
            S2 = S + ((S - i) % 2)
            z = ((S2 + i) // 2, (S2 - i) // 2)
            if in_domain_Xe(z, dom):
                add(z)
    for S in range(s_a, s_b + 1, 2 * stride):
        rho = Q(S - 2 * Xc, 2 * W)
        for off in (Q(0), Q(1, 2)):
            theta = rmap._wrap_half(cls.kappa * rho / 2 + off)
            i0 = round(2 * W * theta)
            for i in range(i0 - _H_PROBE_HALF, i0 + _H_PROBE_HALF + 1):
                if not -W <= i < W or (S - i) % 2:
                    continue
                z = ((S + i) // 2, (S - i) // 2)
                if z in seen or not in_domain_Xe(z, dom):
                    continue
                try:
                    if _phase_step(symmetry_Ge(z, dom), dom, lim, phi_cap) == z:
                        add(z)
                except (Escaped, CapExceeded):
                    continue
    return out


def _occupancy_stats(window_pts: list[tuple[int, int]], W: int, span: int,
                     resolution: tuple[int, int]) -> dict:
    """Site- and pixel-level occupancy of the window.

    Sites are (column, level-pair) cells: 2W columns by span//2 + 1 rows.
    The disc statistic counts cells within radius 1/20 of the origin in
    cylinder units (exact integer comparison); the quadrant spread is
    measured on the rendered pixel grid.
    """
    import numpy as np
    half = span // 2
    n_rows = half + 1
    res_w, res_h = resolution
    cells = {((dS + half) // 2, i + W) for i, dS in window_pts}
    total = n_rows * 2 * W
    global_occ = len(cells) / total
    # disc membership: ((col-W)/2W)^2 + ((2 row - half)/2W)^2 <= (1/20)^2
    rows_idx = np.arange(n_rows, dtype=np.int64)
    cols_idx = np.arange(2 * W, dtype=np.int64)
    dr = (2 * rows_idx - half)[:, None]
    dx = (cols_idx - W)[None, :]
    disc = 400 * (dx * dx + dr * dr) <= (2 * W) ** 2
    occ = np.zeros((n_rows, 2 * W), dtype=bool)
    if cells:
        rr, cc = zip(*cells)
        occ[list(rr), list(cc)] = True
    disc_total = int(disc.sum())
    disc_occ = float(occ[disc].mean()) if disc_total else 0.0
    ratio = global_occ / disc_occ if disc_occ > 0 else None
    # pixel grid for the quadrant spread
    pix = np.zeros((res_h, res_w), dtype=bool)
    for row, col in cells:
        pix[row * res_h // n_rows, col * res_w // (2 * W)] = True
    h2, w2 = res_h // 2, res_w // 2
    quads = [float(pix[:h2, :w2].mean()), float(pix[:h2, w2:].mean()),
             float(pix[h2:, :w2].mean()), float(pix[h2:, w2:].mean())]
    spread = max(quads) / min(quads) if min(quads) > 0 else None
    return {"site_rows": n_rows, "site_cols": 2 * W,
            "sites_occupied": len(cells),
            "site_global_occupancy": global_occ,
            "site_disc_cells": disc_total,
            "site_disc_occupancy": disc_occ,
            "site_disc_ratio": ratio,
            "pixel_quadrant_occupancy": quads,
            "pixel_quadrant_spread": spread}


def _render_ppm(cells_pix: set[tuple[int, int]], resolution) -> bytes:
    """Binary PPM, black background, white orbit pixels.  Pixel rows run
    top-down while rho grows upward, so row 0 is the highest latitude."""
    res_w, res_h = resolution
    header = f"P6\n{res_w} {res_h}\n255\n".encode()
    body = bytearray(3 * res_w * res_h)
    for row, col in cells_pix:
        at = 3 * ((res_h - 1 - row) * res_w + col)
        body[at:at + 3] = b"\xff\xff\xff"
    return header + bytes(body)


@dataclass(frozen=True)
class PhasePlotResult:
    """In-memory artifacts of one phase-plot run."""

    ppm: bytes
    points_csv: str
    manifest: dict


def cmd_phase_plot(e, m, lam, resolution, seeds, *, cap: int = 60000,
                   threads: int = 1) -> PhasePlotResult:
    """Pixel plot of symmetric return-map orbits over one fundamental
    domain of the twist, centred on the primary resonance.

    Traces the return orbit of `seeds` evenly spaced latitudes on the two
    reversor fixed lines, then bins the visited sites into a theta x rho
    pixel grid (half-open rational rectangles, decided in integers).  The
    PPM is the image; the CSV lists every in-window visited site as exact
    cylinder coordinates; the manifest carries per-seed outcomes and the
    occupancy statistics.  seeds = 0 renders the empty (all black) plot.
    """
    resolution = tuple(resolution)
    if resolution[0] < 16 or resolution[1] < 16:
        raise ValueError("resolution must be at least 16x16")
    if seeds < 0:
        raise ValueError("seed count must be nonnegative")
    cls = polygon_class(e)
    if cls.rho_star is None:
        raise LambdaTooLarge(f"no fundamental domain on the twistless class {e}")
    dom0 = resolve_lambda(lam, cls, m)
    dom, anchor = _resonant_anchor(dom0, m)
    W = cls.width
    Xc = dom.base_point[0]
    lim = rmap._kernel_envelope(dom)
    phi_cap = rmap._default_phi_cap(dom.lam)
    span = int(2 * W * abs(cls.rho_star))
    half = span // 2
    if seeds:
        stride = max(2, 2 * ((span // seeds) // 2))
        seed_list = _phase_seeds(dom, span, stride, lim, phi_cap)
    else:
        stride = 0
        seed_list = []

    lock = threading.Lock()

    def trace(item):
        idx, z = item
        with lock:  # the int64 kernels share their point buffers
            summ = rmap._trace_orbit(z, dom, cap, phi_cap)
        if summ.period is not None:
            status = "closed"
        elif len(summ.points) >= cap:
            status = "orbit_cap"
        else:
            status = "escaped"
        pts = [(X - Y, X + Y - 2 * Xc) for X, Y in summ.points]
        return idx, z, status, [p for p in pts if abs(p[1]) <= half]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        traced = sorted(pool.map(trace, enumerate(seed_list)))

    window_pts = [p for _, _, _, pts in traced for p in pts]
    stats = _occupancy_stats(window_pts, W, span, resolution)
    n_rows = half + 1
    cells_pix = {((dS + half) // 2 * resolution[1] // n_rows,
                  (i + W) * resolution[0] // (2 * W))
                 for i, dS in window_pts}
    ppm = _render_ppm(cells_pix, resolution)

    header = ["seed_index", "seed_x", "seed_y",
              "theta", "theta_decimal", "rho", "rho_decimal"]
    rows = []
    for idx, z, _status, pts in traced:
        for i, dS in pts:
            theta = Q(i, 2 * W)
            rho = Q(dS, 2 * W)
            rows.append([str(idx), str(z[0]), str(z[1]),
                         str(theta), _decimal15(theta),
                         str(rho), _decimal15(rho)])
    points_csv = _csv_text(header, rows)

    manifest = {
        "e": e, "band_m": m,
        "lambda": str(dom.lam),
        "lambda_decimal": _decimal15(dom.lam),
        "z0": list(dom.base_point),
        "resolution": list(resolution),
        "seeds_requested": seeds,
        "orbit_cap": cap,
        "phi_cap": phi_cap,
        "span_levels": span,
        "stride_levels": stride,
        "anchor": anchor,
        "seed_outcomes": [{"seed": list(z), "status": status,
                           "points_in_window": len(pts)}
                          for _, z, status, pts in traced],
        "counts": {
            "seeds_traced": len(traced),
            "points_in_window": len(window_pts),
            "closed": sum(1 for _, _, s, _ in traced if s == "closed"),
            "escaped": sum(1 for _, _, s, _ in traced if s == "escaped"),
            "orbit_cap": sum(1 for _, _, s, _ in traced if s == "orbit_cap"),
        },
        "occupancy": stats,
    }
    return PhasePlotResult(ppm=ppm, points_csv=points_csv, manifest=manifest)


# ---------------------------------------------------------------------------
# distribution experiment


@dataclass(frozen=True)
class DistributionResult:
    """In-memory artifacts of one distribution experiment."""

    report: dict
    samples_csv: str
    manifest: dict


def cmd_distribution(e, m, lambda_list, z0_count, *, cap: int = 10 ** 6,
                     threads: int = 1) -> DistributionResult:
    """Full period-distribution pipeline over a grid of step parameters
    and base points: band, closure, per-orbit records, scaled empirical
    distribution.  Emits one run per (lambda, z0) pair plus min/mean/max
    aggregates.  Warns (does not fail) when e is not a perfect square,
    where no uniform phase portrait is expected.
    """
    cls = polygon_class(e)
    not_square = floor_sqrt(e) ** 2 != e
    if not_square:
        print(f"warning: e={e} is not a perfect square; "
              "the phase portrait need not be uniform", file=sys.stderr)
    jobs = []
    for lam_text in lambda_list:
        dom0 = resolve_lambda(lam_text, cls, m)
        window = rmap._band_window(cls, dom0.lam, m)
        for X0, _residual in rmap._base_candidates(cls, dom0.lam, window,
                                                   z0_count):
            jobs.append((dom0.lam, (X0, X0)))

    lock = threading.Lock()

    def run(item):
        idx, (lam, z0) = item
        t0 = time.perf_counter()
        dom = make_return_domain(cls, lam, base_point=z0)
        band = build_A(dom, m)
        with lock:  # the int64 kernels share their point buffers
            summaries, _a_bar, g, h, unresolved = trace_orbits(dom, band, cap)
        records = records_from_orbits(summaries, cls, cap)
        report = period_distribution(records, g, h, e=e, m=m, lam=lam,
                                     count_A=len(band))
        exc = excursion_stats(records)
        return idx, lam, z0, report, exc, time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = sorted(pool.map(run, enumerate(jobs)))

    runs = []
    walls = []
    for idx, lam, z0, rep, exc, wall in results:
        walls.append(wall)
        runs.append({
            "lambda": str(lam),
            "lambda_decimal": _decimal15(lam),
            "z0": list(z0),
            "count_A": rep.count_A,
            "count_A_bar": rep.count_A_bar,
            "g": rep.g,
            "h": rep.h,
            "h_over_g": rep.h / rep.g if rep.g else None,
            "gamma": str(rep.gamma),
            "gamma_decimal": _decimal15(rep.gamma),
            "l1_gap": rep.l1_gap,
            "symmetric_fraction": rep.symmetric_fraction,
            "unresolved": rep.unresolved,
            "excursion": {
                "median_rho": str(exc.median_rho),
                "max_rho": str(exc.max_rho),
                "median_nu": str(exc.median_nu),
                "max_nu": str(exc.max_nu),
                "median_nu_decimal": _decimal15(exc.median_nu),
                "max_nu_decimal": _decimal15(exc.max_nu),
            },
        })

    def spread(key):
        vals = [float(Q(r["gamma"])) if key == "gamma" else r[key]
                for r in runs]
        vals = [v for v in vals if v is not None]
        if not vals:
            return None
        return {"min": min(vals), "mean": sum(vals) / len(vals),
                "max": max(vals)}

    report = {
        "e": e, "m": m, "warn_not_square": not_square,
        "runs": runs,
        "aggregate": {
            "runs": len(runs),
            "l1_gap": spread("l1_gap"),
            "gamma": spread("gamma"),
            "symmetric_fraction": spread("symmetric_fraction"),
            "h_over_g": spread("h_over_g"),
            "count_A_bar": spread("count_A_bar"),
            "unresolved_total": sum(r["unresolved"] for r in runs),
        },
    }

    header = ["run", "lambda", "z0_x", "z0_y", "x", "empirical", "reference"]
    rows = []
    for idx, lam, z0, rep, _exc, _wall in results:
        for x, d in rep.samples:
            rows.append([str(idx), str(lam), str(z0[0]), str(z0[1]),
                         format(x, ".15g"), format(d, ".15g"),
                         format(gamma_law(x), ".15g")])
    samples_csv = _csv_text(header, rows)

    manifest = {
        "e": e, "band_m": m, "z0_count": z0_count, "orbit_cap": cap,
        "lambda_requests": list(lambda_list),
        "runs": [{"lambda": str(lam), "z0": list(z0),
                  "unresolved": rep.unresolved, "wall_s": wall}
                 for _, lam, z0, rep, _x, wall in results],
        "wall_total_s": sum(walls),
    }
    return DistributionResult(report=report, samples_csv=samples_csv,
                              manifest=manifest)


# ---------------------------------------------------------------------------
# agreement density


def cmd_agreement(r, lambda_list) -> str:
    """CSV of the exact agreement count per step parameter: over lattice
    points z with ||lambda z||_inf < r, how many have four map steps equal
    to one field step."""
    r = Q(r)
    header = ["lambda", "lambda_decimal", "count_agree", "count_total",
              "fraction", "fraction_decimal"]
    rows = []
    for lam_text in lambda_list:
        lam = Q(lam_text)
        fraction = agreement_density(r, lam)
        xmax = math.ceil(r * lam.denominator / lam.numerator) - 1
        total = (2 * xmax + 1) ** 2
        agree = fraction * total
        rows.append([str(lam), _decimal15(lam), str(int(agree)), str(total),
                     str(fraction), _decimal15(fraction)])
    return _csv_text(header, rows)


# ---------------------------------------------------------------------------
# argument parsing and output plumbing


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _out_path(base: Path, ext: str) -> Path:
    """base with ext appended (never replaces existing dots in the name)."""
    return base.parent / (base.name + ext)


def _write(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_bytes(data.encode("utf-8"))


def _emit_manifest(base: Path, config: ExperimentConfig, resolved: dict,
                   wall: float) -> None:
    doc = {"config": asdict(config), "resolved": resolved,
           "versions": _versions(), "wall_s": wall}
    _write(_out_path(base, ".manifest.json"),
           json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _table_command(args, config: ExperimentConfig, csv_text: str) -> int:
    base = Path(args.out)
    t0 = time.perf_counter()
    if config.format == "json":
        reader = csv.reader(io.StringIO(csv_text))
        rows = list(reader)
        _write(_out_path(base, ".json"), _rows_json(rows[0], rows[1:]))
    else:
        _write(_out_path(base, ".csv"), csv_text)
    _emit_manifest(base, config, {}, time.perf_counter() - t0)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="roundflow",
        description="exact experiments on the integer rotation map near "
                    "its integrable limit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--out", default=out_default,
                       help="output base path (suffixes are appended)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker pool size")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="table serialization")
        p.add_argument("--seed", type=int, default=0,
                       help="recorded in the manifest; no pipeline samples")

    p = sub.add_parser("twist-table",
                       help="per-class constants over an (n, b) grid")
    p.add_argument("--n", type=_int_list, required=True,
                   help="comma-separated level indices")
    p.add_argument("--b", type=_str_list, default=("0",),
                   help="comma-separated offsets in [0, 1)")
    common(p, "twist_table")

    p = sub.add_parser("period-profile",
                       help="exact traversal period against its profile")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=100,
                   help="number of offsets j/grid, j = 0..grid-1")
    common(p, "period_profile")

    p = sub.add_parser("phase-plot",
                       help="pixel plot of symmetric return-map orbits")
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--m", type=int, default=2,
                   help="fundamental domains the domain must admit")
    p.add_argument("--lambda", dest="lam", default="auto",
                   help='step parameter "p/q" or "auto"')
    p.add_argument("--res", type=_parse_resolution, default=(283, 283),
                   help="pixel resolution WxH")
    p.add_argument("--seeds", type=int, default=96,
                   help="seed latitudes over the window (0 = empty plot)")
    p.add_argument("--cap", type=int, default=60000,
                   help="visited-point cap per orbit")
    common(p, "phase_plot")

    p = sub.add_parser("distribution",
                       help="period-distribution experiment")
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--m", type=int, default=32,
                   help="band width in fundamental domains")
    p.add_argument("--lambda", dest="lam", type=_str_list, default=("auto",),
                   help='comma-separated "p/q" or "auto" step parameters')
    p.add_argument("--z0-count", type=int, default=3,
                   help="base points per step parameter")
    p.add_argument("--cap", type=int, default=10 ** 6,
                   help="return-step cap per orbit")
    common(p, "distribution")

    p = sub.add_parser("agreement",
                       help="exact field-agreement density")
    p.add_argument("--r", default="5", help="region half-width (rational)")
    p.add_argument("--lambda", dest="lam", type=_str_list, required=True,
                   help='comma-separated "p/q" step parameters')
    common(p, "agreement")

    args = parser.parse_args(argv)

    if args.command == "twist-table":
        config = ExperimentConfig(command=args.command, n=args.n, b=args.b,
                                  out=args.out, threads=args.threads,
                                  format=args.format, seed=args.seed)
        return _table_command(args, config, cmd_twist_table(args.n, args.b))

    if args.command == "period-profile":
        config = ExperimentConfig(command=args.command, n=(args.n,),
                                  grid=args.grid, out=args.out,
                                  threads=args.threads, format=args.format,
                                  seed=args.seed)
        return _table_command(args, config,
                              cmd_period_profile(args.n, args.grid))

    if args.command == "agreement":
        config = ExperimentConfig(command=args.command, r=args.r,
                                  lam=args.lam, out=args.out,
                                  threads=args.threads, format=args.format,
                                  seed=args.seed)
        return _table_command(args, config, cmd_agreement(args.r, args.lam))

    if args.command == "phase-plot":
        config = ExperimentConfig(command=args.command, e=args.e, m=args.m,
                                  lam=(args.lam,), cap=args.cap,
                                  resolution=args.res, seeds=args.seeds,
                                  out=args.out, threads=args.threads,
                                  format=args.format, seed=args.seed)
        t0 = time.perf_counter()
        result = cmd_phase_plot(args.e, args.m, args.lam, args.res,
                                args.seeds, cap=args.cap,
                                threads=args.threads)
        base = Path(args.out)
        _write(_out_path(base, ".ppm"), result.ppm)
        _write(_out_path(base, ".points.csv"), result.points_csv)
        _emit_manifest(base, config, result.manifest,
                       time.perf_counter() - t0)
        return 0

    if args.command == "distribution":
        config = ExperimentConfig(command=args.command, e=args.e, m=args.m,
                                  lam=args.lam, cap=args.cap,
                                  z0_count=args.z0_count, out=args.out,
                                  threads=args.threads, format=args.format,
                                  seed=args.seed)
        t0 = time.perf_counter()
        result = cmd_distribution(args.e, args.m, args.lam, args.z0_count,
                                  cap=args.cap, threads=args.threads)
        base = Path(args.out)
        _write(_out_path(base, ".json"),
               json.dumps(result.report, sort_keys=True, indent=2) + "\n")
        _write(_out_path(base, ".samples.csv"), result.samples_csv)
        _emit_manifest(base, config, result.manifest,
                       time.perf_counter() - t0)
        return 0

    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
