"""Locating configurations where the N-photon coincidence vanishes."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .correlation import gn_permanent
from .geometry import Norm, PhaseConfig, norm_factor, phase_factors
from .permanent import LIMITS, DimensionError, permanent_batch

#: Normalised residual ``|perm| / N!`` at or below which a point counts as a dip.
RESIDUAL_THRESHOLD = 1e-9
MAX_GRID_POINTS = 10**8
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DipCertificate:
    phases: PhaseConfig
    normalized_residual: float
    verified: bool
    n: int
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "phases": self.phases.to_dict(),
            "normalized_residual": self.normalized_residual,
            "verified": self.verified,
            "n": self.n,
            "iterations": self.iterations,
        }


def canonical_dip(n: int) -> PhaseConfig:
    """First phase ``2*pi/n``, the rest ``2*pi*m``: a zero for every ``n >= 2``."""
    if int(n) != n or n < 2:
        raise ValueError(f"canonical dip needs n >= 2, got {n!r}")
    n = int(n)
    return PhaseConfig((TWO_PI / n,) + tuple(TWO_PI * m for m in range(2, n + 1)))


def normalized_residual(phases: PhaseConfig, alg: str = "ryser") -> float:
    res = gn_permanent(phases, "unit", alg)
    return abs(res.amplitude) / math.factorial(phases.n)


def verify_dip(phases: PhaseConfig, alg: str = "ryser") -> DipCertificate:
    if not isinstance(phases, PhaseConfig):
        phases = PhaseConfig(tuple(phases))
    r = normalized_residual(phases, alg)
    return DipCertificate(phases, r, r <= RESIDUAL_THRESHOLD, phases.n)


# ---------------------------------------------------------------- grid scans


@dataclass
class Grid:
    """Dense scan of G over two free phases, others held fixed.

    ``g[i, j]`` is evaluated at ``phase[free[0]] = x[i]``, ``phase[free[1]] = y[j]``.
    ``signed`` holds the coincidence amplitude rotated onto the real axis
    (see :func:`fshom.correlation.real_amplitude`); it changes sign across
    the zero set, which is what the contour extraction follows. Synthetic
    grids may leave it and ``n`` unset.
    """

    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    signed: np.ndarray | None = None
    n: int | None = None
    free: tuple = (0, 1)
    fixed: dict = field(default_factory=dict)
    norm: Norm = "unit"
    alg: str = "ryser"

    def phases_at(self, a: float, b: float) -> np.ndarray:
        deltas = np.zeros(self.n)
        for idx, val in self.fixed.items():
            deltas[idx] = val
        deltas[self.free[0]] = a
        deltas[self.free[1]] = b
        return deltas

    def evaluate(self, a: float, b: float) -> complex:
        return gn_permanent(PhaseConfig(tuple(self.phases_at(a, b))), self.norm, self.alg).amplitude

    def real_amplitude(self, a: float, b: float) -> float:
        deltas = self.phases_at(a, b)
        amp = gn_permanent(PhaseConfig(tuple(deltas)), self.norm, self.alg).amplitude
        return (amp * np.exp(0.5j * (self.n + 1) * deltas.sum())).real

    @property
    def g_max(self) -> float:
        return (math.factorial(self.n) * norm_factor(self.norm, self.n) ** self.n) ** 2

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "free": list(self.free),
            "fixed": {str(k): v for k, v in sorted(self.fixed.items())},
            "resolution": [len(self.x), len(self.y)],
            "x_range": [float(self.x[0]), float(self.x[-1])],
            "y_range": [float(self.y[0]), float(self.y[-1])],
            "norm": self.norm,
            "alg": self.alg,
            "dtype": "float64",
            "byteorder": "little",
            "order": "row-major",
        }


def _grid_rows(n, base, free, x_rows, y, norm, alg):
    r = len(y)
    deltas = np.broadcast_to(base, (len(x_rows), r, n)).copy()
    deltas[:, :, free[0]] = x_rows[:, None]
    deltas[:, :, free[1]] = y[None, :]
    flat = deltas.reshape(-1, n)
    mats = phase_factors(flat, norm_factor(norm, n))
    amp = permanent_batch(mats, alg)
    signed = (amp * np.exp(0.5j * (n + 1) * flat.sum(axis=1))).real
    return (np.abs(amp) ** 2).reshape(len(x_rows), r), signed.reshape(len(x_rows), r)


def scan_grid(n: int, fixed: dict | None = None, free=(0, 1), resolution: int = 512,
              lo: float = 0.0, hi: float = TWO_PI, norm: Norm = "unit", alg: str = "ryser",
              threads: int = 1) -> Grid:
    """Evaluate G on a ``resolution x resolution`` grid over ``[lo, hi)^2``.

    ``fixed`` maps (0-based) phase index to value; every index that is not
    free must be fixed, except that missing ones default to 0.
    """
    fixed = dict(fixed or {})
    free = tuple(int(i) for i in free)
    if n < 2:
        raise ValueError("need n >= 2")
    if len(free) != 2 or free[0] == free[1] or not all(0 <= i < n for i in free):
        raise ValueError(f"need two distinct free indices in [0, {n}), got {free}")
    if set(fixed) & set(free):
        raise ValueError("an index cannot be both free and fixed")
    if any(not 0 <= i < n for i in fixed):
        raise ValueError(f"fixed indices must lie in [0, {n})")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if resolution * resolution > MAX_GRID_POINTS:
        raise ValueError(f"grid of {resolution}^2 points exceeds the {MAX_GRID_POINTS} point guard")
    if n > LIMITS[alg]:
        raise DimensionError(f"{alg} limited to n <= {LIMITS[alg]}")
    fixed = {i: float(fixed.get(i, 0.0)) for i in range(n) if i not in free}

    step = (hi - lo) / resolution
    x = lo + step * np.arange(resolution)
    y = x.copy()
    base = np.zeros(n)
    for i, v in fixed.items():
        base[i] = v

    # bound memory at roughly 2**21 matrices per chunk
    chunk = max(1, (1 << 21) // (resolution * n * n))
    starts = range(0, resolution, chunk)
    work = lambda s: _grid_rows(n, base, free, x[s:s + chunk], y, norm, alg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    g = np.concatenate([p[0] for p in parts])
    signed = np.concatenate([p[1] for p in parts])
    return Grid(x, y, g, signed, n, free, fixed, norm, alg)


# ---------------------------------------------------------------- contours


@dataclass
class ContourSet:
    polylines: list
    threshold: float
    resolution: tuple
    n: int | None = None
    free: tuple = (0, 1)
    fixed: dict = field(default_factory=dict)
    max_vertex_g: float | None = None
    dropped_vertices: int = 0

    @property
    def empty(self) -> bool:
        return not self.polylines

    @property
    def n_vertices(self) -> int:
        return sum(len(p) for p in self.polylines)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "free": list(self.free),
            "fixed": {str(k): v for k, v in sorted(self.fixed.items())},
            "resolution": list(self.resolution),
            "threshold": self.threshold,
            "empty": self.empty,
            "max_vertex_g": self.max_vertex_g,
            "dropped_vertices": self.dropped_vertices,
            "polylines": [[[float(a), float(b)] for a, b in line] for line in self.polylines],
        }


# corner k of cell (i, j): (i + di, j + dj)
_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))
# edges meeting at each corner
_CORNER_EDGES = {0: (3, 0), 1: (0, 1), 2: (1, 2), 3: (2, 3)}


def default_threshold(n: int, norm: Norm = "unit") -> float:
    """G level treated as zero: ``1e-9`` of the largest possible G."""
    return RESIDUAL_THRESHOLD * (math.factorial(n) * norm_factor(norm, n) ** n) ** 2


def extract_contour(grid: Grid, threshold: float | None = None, refine: bool = True) -> ContourSet:
    """Marching-squares polylines of the zero set of G.

    With a signed amplitude available the level set is its sign change;
    otherwise the level is ``G = threshold``. Edge crossings start from
    linear interpolation and, when the grid can be re-evaluated, are
    polished by bracketed root finding along the edge. Every vertex is then
    re-evaluated and vertices above ``threshold`` are dropped, splitting
    their polyline.
    """
    if threshold is None:
        threshold = default_threshold(grid.n, grid.norm) if grid.n else RESIDUAL_THRESHOLD
    can_eval = grid.n is not None
    if grid.signed is not None:
        field_ = np.asarray(grid.signed, dtype=float)
        level_fn = grid.real_amplitude if can_eval else None
    else:
        field_ = np.asarray(grid.g, dtype=float) - threshold
        level_fn = (lambda a, b: abs(grid.evaluate(a, b)) ** 2 - threshold) if can_eval else None
    x, y = grid.x, grid.y
    above = field_ > 0
    nx, ny = field_.shape

    points = {}

    def crossing(p, q):
        key = (p, q) if p < q else (q, p)
        if key in points:
            return key
        (pi, pj), (qi, qj) = key
        fa, fb = field_[pi, pj], field_[qi, qj]
        pa = np.array([x[pi], y[pj]])
        pb = np.array([x[qi], y[qj]])
        if fa == 0.0:
            pt = pa
        elif fb == 0.0:
            pt = pb
        else:
            t = fa / (fa - fb)
            pt = pa + t * (pb - pa)
            if refine and level_fn is not None:
                g = lambda s: level_fn(*(pa + s * (pb - pa)))
                ga, gb = g(0.0), g(1.0)
                if ga * gb < 0:
                    pt = pa + brentq(g, 0.0, 1.0, xtol=1e-15, rtol=1e-15) * (pb - pa)
        points[key] = (float(pt[0]), float(pt[1]))
        return key

    segments = []
    for i in range(nx - 1):
        row_above = above[i:i + 2]
        for j in range(ny - 1):
            cls = [bool(row_above[di, j + dj]) for di, dj in _CORNERS]
            if all(cls) or not any(cls):
                continue
            corner = [(i + di, j + dj) for di, dj in _CORNERS]
            cut = [e for e, (a, b) in enumerate(_EDGES) if cls[a] != cls[b]]
            if len(cut) == 2:
                segments.append((crossing(*_edge(corner, cut[0])), crossing(*_edge(corner, cut[1]))))
                continue
            # saddle: decide from the cell centre which diagonal pair is connected
            cx, cy = 0.5 * (x[i] + x[i + 1]), 0.5 * (y[j] + y[j + 1])
            if level_fn is not None:
                centre = level_fn(cx, cy) > 0
            else:
                centre = float(np.mean([field_[c] for c in corner])) > 0
            for k in range(4):
                if cls[k] != centre:
                    e1, e2 = _CORNER_EDGES[k]
                    segments.append((crossing(*_edge(corner, e1)), crossing(*_edge(corner, e2))))

    polylines = _chain(segments, points)

    max_g = None
    dropped = 0
    if can_eval:
        kept = []
        max_g = 0.0
        for line in polylines:
            current = []
            for a, b in line:
                gval = abs(grid.evaluate(a, b)) ** 2
                if gval <= threshold:
                    max_g = max(max_g, gval)
                    current.append((a, b))
                else:
                    dropped += 1
                    if len(current) > 1:
                        kept.append(current)
                    current = []
            if len(current) > 1:
                kept.append(current)
        polylines = kept
    return ContourSet(polylines, threshold, (nx, ny), grid.n, grid.free, dict(grid.fixed), max_g, dropped)


def _edge(corner, e):
    a, b = _EDGES[e]
    return corner[a], corner[b]


def _chain(segments, points):
    """Join segments that share an edge crossing into polylines."""
    adj = {}
    for a, b in segments:
        if a == b:
            continue
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    lines = []
    # open chains first (endpoints have one neighbour), then closed loops
    starts = [k for k in sorted(adj) if len(adj[k]) == 1] + sorted(adj)
    for start in starts:
        if start in seen:
            continue
        line = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [v for v in adj[cur] if v != prev and v not in seen]
            if not nxt:
                if prev is not None and start in adj[cur] and len(line) > 2:
                    line.append(start)
                break
            prev, cur = cur, nxt[0]
            seen.add(cur)
            line.append(cur)
        lines.append([points[k] for k in line])
    return lines


# ---------------------------------------------------------------- refinement


def refine_dip(start: PhaseConfig, free_indices, alg: str = "ryser", max_iter: int = 2000,
               simplex_size: float = 1e-2) -> DipCertificate:
    """Nelder-Mead descent of G over the free phases, the others held fixed.

    Returns the certificate at the best point seen, which is never worse
    than ``start``. With no free indices the start point is certified as is.
    """
    if not isinstance(start, PhaseConfig):
        start = PhaseConfig(tuple(start))
    n = start.n
    free = sorted(set(int(i) for i in free_indices))
    if any(not 0 <= i < n for i in free):
        raise ValueError(f"free indices must lie in [0, {n})")
    base = start.as_array()
    scale = float(math.factorial(n)) ** 2

    def objective(v):
        d = base.copy()
        d[free] = v
        return gn_permanent(PhaseConfig(tuple(d)), "unit", alg).g_value / scale

    if not free:
        cert = verify_dip(start, alg)
        return DipCertificate(start, cert.normalized_residual, cert.verified, n, 0)

    x0 = base[free]
    simplex = np.vstack([x0] + [x0 + simplex_size * e for e in np.eye(len(free))])
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "maxiter": max_iter, "xatol": 1e-15, "fatol": 1e-26},
    )
    best = base.copy()
    if res.fun <= objective(x0):
        best[free] = res.x
    cert = verify_dip(PhaseConfig(tuple(best)), alg)
    return DipCertificate(cert.phases, cert.normalized_residual, cert.verified, n, int(res.nit))
