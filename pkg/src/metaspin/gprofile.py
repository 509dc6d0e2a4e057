"""Spatial coupling profile g(r) from transmitted-power maps.

The local spin-photon coupling follows the field amplitude, so
``g(r) ~ sqrt(P(r))``.  A power map is reduced to a radial profile around its
power centroid, converted to g, fitted with ``A exp(-r^2 / 2 s^2) + c`` and
summarised as the concurrence reached across the aperture when the pulse is
timed for the Bell condition at the peak coupling.
"""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_BINS = 64
#: smallest map the CLI pipelines accept
MIN_PIPELINE_SAMPLES = 16


class PowerMapError(ValueError):
    """Malformed or physically invalid power-map input."""


class FitError(RuntimeError):
    """The profile cannot support a Gaussian fit."""


@dataclass
class PowerMap:
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        if not (self.x.shape == self.y.shape == self.p.shape):
            raise PowerMapError("x, y and p must have the same length")
        if len(self.p) == 0:
            raise PowerMapError("power map is empty")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise PowerMapError("coordinates must be finite")
        bad = np.flatnonzero(~np.isfinite(self.p) | (self.p < 0))
        if bad.size:
            raise PowerMapError(f"sample {bad[0]} has invalid power {self.p[bad[0]]!r}")

    def __len__(self):
        return len(self.p)

    @property
    def extent(self) -> float:
        """Largest side of the bounding box."""
        return float(max(np.ptp(self.x), np.ptp(self.y)))


def _parse_power_csv(lines, source):
    header_seen = False
    xs, ys, ps = [], [], []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            cols = [c.strip().lower() for c in line.split(",")]
            if cols != ["x", "y", "p"]:
                raise PowerMapError(f"{source}:{lineno}: expected header 'x,y,p', got {line!r}")
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise PowerMapError(f"{source}:{lineno}: expected 3 fields, got {len(fields)}")
        try:
            x, y, p = (float(f) for f in fields)
        except ValueError:
            raise PowerMapError(f"{source}:{lineno}: non-numeric value in {line!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise PowerMapError(f"{source}:{lineno}: non-finite coordinate")
        if not math.isfinite(p) or p < 0:
            raise PowerMapError(f"{source}:{lineno}: power must be finite and >= 0, got {p!r}")
        xs.append(x)
        ys.append(y)
        ps.append(p)
    if not header_seen:
        raise PowerMapError(f"{source}: missing 'x,y,p' header")
    if not ps:
        raise PowerMapError(f"{source}: no samples")
    return xs, ys, ps


def load_power_map(path, format: str = "csv", min_samples: int = 1) -> PowerMap:
    """Read a power map from a CSV file with header ``x,y,p``.

    Lines starting with ``#`` are comments; ``# key = value`` comment lines are
    kept as metadata.  Rows with negative or non-finite power are rejected and
    the error names the file line.
    """
    if format != "csv":
        raise ValueError(f"unsupported power-map format {format!r}")
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    metadata = {}
    for line in lines:
        s = line.strip()
        if s.startswith("#") and "=" in s:
            key, value = (t.strip() for t in s[1:].split("=", 1))
            metadata[key] = value
    xs, ys, ps = _parse_power_csv(lines, path)
    if len(ps) < min_samples:
        raise PowerMapError(f"{path}: {len(ps)} samples, at least {min_samples} required")
    return PowerMap(np.array(xs), np.array(ys), np.array(ps), metadata)


def format_power_map(pmap: PowerMap) -> str:
    buf = io.StringIO()
    for key, value in pmap.metadata.items():
        buf.write(f"# {key} = {value}\n")
    buf.write("x,y,p\n")
    for x, y, p in zip(pmap.x, pmap.y, pmap.p):
        buf.write(f"{x:.11e},{y:.11e},{p:.11e}\n")
    return buf.getvalue()


def synthetic_gaussian_map(n: int = 64, extent: float = 20e-6, width: float = 2e-6,
                           amplitude: float = 1.0, offset: float = 0.0,
                           center=(0.0, 0.0), noise: float = 0.0, seed: int = 0) -> PowerMap:
    """Gaussian power ``A exp(-r^2 / 2 w^2) + offset`` sampled on an ``n x n`` grid.

    ``noise`` adds uniform noise in ``[-noise, noise] * amplitude`` (clipped at
    zero) from a seeded generator; the seed is stored in the metadata.
    """
    axis = (np.arange(n) - (n - 1) / 2) * (extent / (n - 1))
    X, Y = np.meshgrid(axis, axis, indexing="xy")
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    P = amplitude * np.exp(-r2 / (2 * width ** 2)) + offset
    if noise:
        rng = np.random.default_rng(seed)
        P = np.clip(P + noise * amplitude * rng.uniform(-1, 1, P.shape), 0.0, None)
    meta = {"generator": "synthetic_gaussian_map", "seed": seed, "n": n, "extent": f"{extent:g}",
            "width": f"{width:g}", "amplitude": f"{amplitude:g}", "offset": f"{offset:g}",
            "center": f"{center[0]:g},{center[1]:g}", "noise": f"{noise:g}"}
    return PowerMap(X, Y, P, meta)


def centroid(pmap: PowerMap) -> tuple[float, float]:
    """Power-weighted mean position."""
    total = float(np.sum(pmap.p))
    if total <= 0:
        raise PowerMapError("map has zero total power")
    return float(np.sum(pmap.x * pmap.p) / total), float(np.sum(pmap.y * pmap.p) / total)


@dataclass
class RadialProfile:
    r: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        self.count = np.asarray(self.count, dtype=int)
        if not (self.r.shape == self.mean.shape == self.std.shape == self.count.shape):
            raise ValueError("profile columns must have equal length")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("bin centres must be strictly increasing")
        if np.any(self.count < 1):
            raise ValueError("every bin needs at least one sample")

    def __len__(self):
        return len(self.r)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,mean,std,count\n")
        for r, m, s, n in zip(self.r, self.mean, self.std, self.count):
            buf.write(f"{r:.11e},{m:.11e},{s:.11e},{n:d}\n")
        return buf.getvalue()


def radial_average(pmap: PowerMap, center=None, bin_width: float | None = None,
                   max_radius: float | None = None) -> RadialProfile:
    """Bin samples by distance from ``center`` (default: the power centroid).

    Bins are ``[k w, (k+1) w)`` with centres ``(k + 1/2) w``; ``w`` defaults
    to ``extent / 64``.  Empty bins are dropped and ``std`` is the population
    standard deviation.  Samples beyond ``max_radius`` are ignored.
    """
    if center is None:
        center = centroid(pmap)
    if bin_width is None:
        bin_width = pmap.extent / DEFAULT_BINS
    if not (bin_width > 0 and math.isfinite(bin_width)):
        raise ValueError(f"bin_width must be positive, got {bin_width!r}")
    r = np.hypot(pmap.x - center[0], pmap.y - center[1])
    p = pmap.p
    if max_radius is not None:
        keep = r <= max_radius
        r, p = r[keep], p[keep]
    idx = np.floor(r / bin_width).astype(np.int64)
    nbins = int(idx.max()) + 1 if idx.size else 0
    count = np.bincount(idx, minlength=nbins)
    total = np.bincount(idx, weights=p, minlength=nbins)
    filled = count > 0
    mean = np.zeros(nbins)
    mean[filled] = total[filled] / count[filled]
    sq = np.bincount(idx, weights=(p - mean[idx]) ** 2, minlength=nbins)
    std = np.zeros(nbins)
    std[filled] = np.sqrt(sq[filled] / count[filled])
    k = np.flatnonzero(filled)
    return RadialProfile((k + 0.5) * bin_width, mean[k], std[k], count[k])


def g_profile(profile: RadialProfile, g_peak: float | None = None) -> RadialProfile:
    """Coupling profile ``scale * sqrt(P)``.

    With ``g_peak=None`` the largest bin is set to 1; otherwise to ``g_peak``
    (rad/s).  Bin spreads are propagated to first order,
    ``std_g = scale * std_P / (2 sqrt(P))``.
    """
    if np.any(profile.mean < 0):
        raise ValueError("profile means must be >= 0")
    root = np.sqrt(profile.mean)
    peak = float(root.max()) if len(root) else 0.0
    if peak <= 0:
        raise ValueError("profile is identically zero")
    if g_peak is not None and not (g_peak > 0 and math.isfinite(g_peak)):
        raise ValueError(f"g_peak must be positive, got {g_peak!r}")
    scale = (1.0 if g_peak is None else g_peak) / peak
    with np.errstate(divide="ignore", invalid="ignore"):
        std = np.where(root > 0, scale * profile.std / (2 * root), 0.0)
    return RadialProfile(profile.r, scale * root, std, profile.count)


@dataclass
class GaussianFit:
    A: float
    s: float
    c: float
    rms_residual: float
    iterations: int
    converged: bool

    def __call__(self, r):
        return gaussian(r, self.A, self.s, self.c)

    def as_dict(self) -> dict:
        return {"A": self.A, "s": self.s, "c": self.c, "rms_residual": self.rms_residual,
                "iterations": self.iterations, "converged": self.converged}


def gaussian(r, A, s, c=0.0):
    return A * np.exp(-np.asarray(r) ** 2 / (2 * s ** 2)) + c


def _moment_guess(r, y, w):
    c0 = float(y.min())
    h = np.clip(y - c0, 0.0, None)
    A0 = float(h.max())
    # for a radial Gaussian <r^2> = 2 s^2 under area weighting (counts ~ r)
    s2 = np.sum(w * h * r ** 2) / (2 * np.sum(w * h))
    s0 = math.sqrt(s2) if s2 > 0 else float(r[np.argmax(h)] + np.ptp(r)) / 2
    return np.array([A0, s0, c0])


def fit_gaussian(profile: RadialProfile, max_iter: int = 200, rtol: float = 1e-10) -> GaussianFit:
    """Count-weighted least-squares fit of ``A exp(-r^2/2s^2) + c`` to the bin means.

    Levenberg-Marquardt from a moment-based start.  Converged when every
    parameter moves by less than ``rtol`` relative (the offset relative to
    ``|A| + |c|``).  A fit that runs out of iterations is returned with
    ``converged=False`` and a warning.
    """
    r, y, w = profile.r, profile.mean, profile.count.astype(float)
    if len(r) < 4:
        raise ValueError(f"need at least 4 non-empty bins, got {len(r)}")
    span = float(np.ptp(y))
    if span <= 1e-6 * max(float(np.max(np.abs(y))), np.finfo(float).tiny):
        raise FitError("profile has no dynamic range; Gaussian width is undetermined")

    sw = np.sqrt(w)

    def residual(q):
        return sw * (gaussian(r, *q) - y)

    def jacobian(q):
        A, s, _ = q
        e = np.exp(-r ** 2 / (2 * s ** 2))
        return sw[:, None] * np.column_stack([e, A * e * r ** 2 / s ** 3, np.ones_like(r)])

    q = _moment_guess(r, y, w)
    res = residual(q)
    cost = float(res @ res)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jacobian(q)
        JtJ = J.T @ J
        grad = J.T @ res
        diag = np.diag(JtJ).copy()
        diag[diag == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = -np.linalg.solve(JtJ + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = q + step
            if trial[1] > 0:
                tres = residual(trial)
                tcost = float(tres @ tres)
                if tcost <= cost:
                    accepted = True
                    break
            lam *= 10
        if not accepted:
            # no downhill step left: at the numerical minimum
            converged = True
            break
        scale = np.array([abs(trial[0]), abs(trial[1]), abs(trial[0]) + abs(trial[2])])
        change = np.max(np.abs(step) / np.where(scale > 0, scale, 1.0))
        q, res, cost = trial, tres, tcost
        lam = max(lam / 10, 1e-12)
        if change < rtol:
            converged = True
            break

    A, s, c = (float(v) for v in q)
    rms = math.sqrt(float(np.sum(w * (gaussian(r, A, s, c) - y) ** 2)) / float(np.sum(w)))
    if not converged:
        warnings.warn(f"Gaussian fit did not converge in {max_iter} iterations", RuntimeWarning)
    if A <= 0:
        raise FitError(f"fit produced non-positive amplitude A={A:.3g}")
    return GaussianFit(A, s, c, rms, it, converged)


CONCURRENCE_CONVENTION = ("C(r) = |sin(2 g(r) t)| with t = pi/(4 g_peak); "
                          "bins with r <= aperture weighted by {weighting}")


@dataclass
class ConcurrenceStats:
    mean: float
    std: float
    bins: int
    t_bell: float
    weighting: str

    @property
    def convention(self) -> str:
        return CONCURRENCE_CONVENTION.format(weighting=self.weighting)


def bin_concurrence(g: RadialProfile) -> np.ndarray:
    """Per-bin concurrence ``|sin(2 g t)|`` at ``t = pi / (4 g_peak)``."""
    g_peak = float(np.max(g.mean))
    if g_peak <= 0:
        raise ValueError("coupling profile is identically zero")
    return np.abs(np.sin(2 * g.mean * (math.pi / (4 * g_peak))))


def concurrence_statistics(g: RadialProfile, aperture_r: float | None = None,
                           weighting: str = "count") -> ConcurrenceStats:
    """Mean and spread of the concurrence over the aperture.

    ``weighting`` is ``"count"`` (bin sample count, i.e. area), ``"power"``
    (count times ``g**2``) or ``"uniform"``.
    """
    g_peak = float(np.max(g.mean)) if len(g) else 0.0
    C = bin_concurrence(g)
    mask = np.ones(len(g), dtype=bool) if aperture_r is None else g.r <= aperture_r
    if not mask.any():
        raise ValueError(f"no bins inside aperture r <= {aperture_r!r}")
    if weighting == "count":
        w = g.count.astype(float)
    elif weighting == "power":
        w = g.count * g.mean ** 2
    elif weighting == "uniform":
        w = np.ones(len(g))
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    w, C = w[mask], C[mask]
    if w.sum() <= 0:
        raise ValueError("aperture carries no weight")
    mean = float(np.sum(w * C) / np.sum(w))
    std = float(math.sqrt(np.sum(w * (C - mean) ** 2) / np.sum(w)))
    return ConcurrenceStats(mean, std, int(mask.sum()), math.pi / (4 * g_peak), weighting)


@dataclass
class MaterialMetrics:
    name: str
    peak: float
    width: float
    rms_residual: float
    relative_residual: float
    fit: GaussianFit


@dataclass
class MaterialReport:
    materials: list[MaterialMetrics]
    by_peak: list[str]
    by_residual: list[str]

    def to_csv(self) -> str:
        peak_rank = {n: i + 1 for i, n in enumerate(self.by_peak)}
        res_rank = {n: i + 1 for i, n in enumerate(self.by_residual)}
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["material", "peak_g", "width_s", "rms_residual", "relative_residual",
                         "rank_peak", "rank_residual"])
        for m in sorted(self.materials, key=lambda m: peak_rank[m.name]):
            writer.writerow([m.name, f"{m.peak:.11e}", f"{m.width:.11e}", f"{m.rms_residual:.11e}",
                             f"{m.relative_residual:.11e}", peak_rank[m.name], res_rank[m.name]])
        return buf.getvalue()


def compare_materials(profiles) -> MaterialReport:
    """Peak coupling, fitted width and Gaussian-fit quality per material.

    ``profiles`` maps material names to g profiles.  Ranking by peak is
    descending; ranking by fit residual is ascending in ``rms / peak`` so that
    materials with different coupling scales compare fairly.  Ties fall back
    to name order.
    """
    items = dict(profiles)
    if len(items) < 2:
        raise ValueError("need at least two profiles to compare")
    rows = []
    for name in sorted(items):
        prof = items[name]
        fit = fit_gaussian(prof)
        peak = float(np.max(prof.mean))
        rows.append(MaterialMetrics(name, peak, fit.s, fit.rms_residual, fit.rms_residual / peak, fit))
    by_peak = [m.name for m in sorted(rows, key=lambda m: (-m.peak, m.name))]
    by_res = [m.name for m in sorted(rows, key=lambda m: (m.relative_residual, m.name))]
    return MaterialReport(rows, by_peak, by_res)
