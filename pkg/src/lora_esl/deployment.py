"""Device/gateway geometry, ring allocation and k-means clustering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DEFAULT_RING_RADII_KM = (0.7, 0.9, 1.1, 1.5, 1.6, 2.1)
TP_MIN_DBM, TP_STEP_DB, TP_MAX_DBM = 14.0, 3.0, 29.0


class DeploymentError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DeploymentError(f"non-finite coordinates ({self.x}, {self.y})")

    def distance(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def arithmetic_allocation(first_term: int, common_diff: int, ring_count: int, gw_count: int = 1) -> list[int]:
    """Devices per ring for one gateway, inner ring first.

    Rings 1..n-1 follow ``first + (i - 1) * diff``; the outermost ring falls
    back to ``first`` so both edges carry the fewest devices. Counts are split
    over ``gw_count`` gateways, rounding half-up.
    """
    if gw_count < 1:
        raise DeploymentError(f"gw_count must be >= 1, got {gw_count}")
    if first_term <= 0:
        raise DeploymentError(f"first_term must be positive, got {first_term}")
    if common_diff < 0:
        raise DeploymentError(f"common_diff must be non-negative, got {common_diff}")
    if ring_count < 1:
        raise DeploymentError(f"ring_count must be >= 1, got {ring_count}")
    totals = ring_totals_arithmetic(first_term, common_diff, ring_count)
    return [_half_up(t / gw_count) for t in totals]


def ring_totals_arithmetic(first_term: int, common_diff: int, ring_count: int) -> list[int]:
    totals = [first_term + n * common_diff for n in range(ring_count - 1)]
    totals.append(first_term)
    return totals


def fibonacci_allocation(total: int, ring_count: int, orientation: str = "outward") -> list[int]:
    """Split ``total`` devices in proportion to 1, 1, 2, 3, 5, ...

    With ``orientation="outward"`` the largest share sits in the outermost
    ring. The rounding remainder goes to the ring with the largest weight.
    """
    if total <= 0:
        raise DeploymentError(f"total must be positive, got {total}")
    if ring_count < 1:
        raise DeploymentError(f"ring_count must be >= 1, got {ring_count}")
    if orientation not in ("outward", "inward"):
        raise DeploymentError(f"unknown fibonacci orientation {orientation!r}")
    weights = [1, 1]
    while len(weights) < ring_count:
        weights.append(weights[-1] + weights[-2])
    weights = weights[:ring_count]
    wsum = sum(weights)
    counts = [total * w // wsum for w in weights]
    counts[-1] += total - sum(counts)
    if orientation == "inward":
        counts.reverse()
    return counts


def split_across_gateways(ring_totals: Sequence[int], gw_count: int) -> np.ndarray:
    """Exact per-gateway split: ``(gw_count, rings)`` table, remainders to the lowest gateway ids."""
    if gw_count < 1:
        raise DeploymentError(f"gw_count must be >= 1, got {gw_count}")
    totals = np.asarray(ring_totals, dtype=np.int64)
    table = np.repeat((totals // gw_count)[None, :], gw_count, axis=0)
    rem = totals % gw_count
    for r, extra in enumerate(rem):
        table[:extra, r] += 1
    return table


def tp_schedule(ring_index: int, ring_count: int = len(DEFAULT_RING_RADII_KM)) -> float:
    """Transmit power for a ring: 14 dBm innermost, +3 dB per ring outward."""
    if not 0 <= ring_index < ring_count:
        raise DeploymentError(f"ring index {ring_index} outside [0, {ring_count - 1}]")
    tp = TP_MIN_DBM + TP_STEP_DB * ring_index
    if tp > TP_MAX_DBM:
        raise DeploymentError(f"ring index {ring_index} maps to {tp} dBm, above the {TP_MAX_DBM} dBm cap")
    return tp


@dataclass(frozen=True)
class RingPlan:
    radii_km: tuple[float, ...] = DEFAULT_RING_RADII_KM
    counts_per_gw: tuple[int, ...] = (200, 300, 400, 500, 600, 200)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii_km)
        counts = tuple(int(c) for c in self.counts_per_gw)
        object.__setattr__(self, "radii_km", radii)
        object.__setattr__(self, "counts_per_gw", counts)
        if not radii or radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise DeploymentError(f"ring radii must be positive and strictly increasing, got {radii}")
        if len(counts) != len(radii):
            raise DeploymentError("counts_per_gw must align with radii_km")
        if any(c < 0 for c in counts):
            raise DeploymentError("ring counts must be non-negative")

    @property
    def ring_count(self) -> int:
        return len(self.radii_km)

    def inner_radius(self, ring: int) -> float:
        return 0.0 if ring == 0 else self.radii_km[ring - 1]


@dataclass(frozen=True)
class GatewayLayout:
    """How gateways are placed.

    ``kind`` is ``"kmeans"`` (centroids of a uniform trial scatter over the
    venue disc), ``"grid"`` or ``"explicit"`` (``positions`` as ``(id, x, y)``).
    The venue is a disc around the origin; ``venue_radius_km=None`` means the
    outermost ring radius.
    """

    count: int = 1
    kind: str = "kmeans"
    positions: tuple[tuple[int, float, float], ...] = ()
    venue_radius_km: float | None = None
    clip_to_venue: bool = True
    trial_points: int = 4000

    def __post_init__(self):
        if self.kind not in ("kmeans", "grid", "explicit"):
            raise DeploymentError(f"unknown gateway layout kind {self.kind!r}")
        object.__setattr__(self, "positions", tuple((int(i), float(x), float(y)) for i, x, y in self.positions))
        if self.kind == "explicit":
            ids = [p[0] for p in self.positions]
            if len(set(ids)) != len(ids):
                raise DeploymentError(f"overlapping gateway ids {sorted(ids)}")
            if not ids:
                raise DeploymentError("explicit layout needs at least one position")
            object.__setattr__(self, "count", len(ids))
        if self.count < 1:
            raise DeploymentError(f"gateway count must be >= 1, got {self.count}")


@dataclass
class Deployment:
    gateway_ids: np.ndarray  # (G,)
    gateway_xy: np.ndarray  # (G, 2) km
    device_xy: np.ndarray  # (N, 2) km
    device_ring: np.ndarray  # (N,)
    device_home: np.ndarray  # (N,) index into gateway arrays
    ring_plan: RingPlan
    venue_radius_km: float | None = None

    @property
    def n_devices(self) -> int:
        return len(self.device_xy)

    @property
    def n_gateways(self) -> int:
        return len(self.gateway_xy)

    @property
    def gateways(self) -> list[tuple[int, Point]]:
        return [(int(i), Point(float(x), float(y))) for i, (x, y) in zip(self.gateway_ids, self.gateway_xy)]

    def devices(self) -> Iterator[tuple[int, Point, int, int]]:
        for i, ((x, y), ring, home) in enumerate(zip(self.device_xy, self.device_ring, self.device_home)):
            yield i, Point(float(x), float(y)), int(ring), int(self.gateway_ids[home])

    def home_distances(self) -> np.ndarray:
        return np.hypot(*(self.device_xy - self.gateway_xy[self.device_home]).T)

    def distance_matrix(self) -> np.ndarray:
        """Device-to-gateway distances, km, shape ``(N, G)``."""
        d = self.device_xy[:, None, :] - self.gateway_xy[None, :, :]
        return np.hypot(d[..., 0], d[..., 1])


def _uniform_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def place_gateways(layout: GatewayLayout, venue_radius_km: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if layout.kind == "explicit":
        ids = np.array([p[0] for p in layout.positions], dtype=np.int64)
        xy = np.array([[p[1], p[2]] for p in layout.positions], dtype=float)
        return ids, xy
    k = layout.count
    ids = np.arange(k, dtype=np.int64)
    if k == 1:
        return ids, np.zeros((1, 2))
    if layout.kind == "grid":
        side = math.ceil(math.sqrt(k))
        # cell centres of a side x side grid inscribed in the venue square
        step = 2 * venue_radius_km / math.sqrt(2) / side
        coords = (np.arange(side) - (side - 1) / 2) * step
        gx, gy = np.meshgrid(coords, coords)
        xy = np.column_stack([gx.ravel(), gy.ravel()])[:k]
        return ids, xy - xy.mean(axis=0)
    rng = np.random.default_rng([seed, 0x6A7])
    trial = _uniform_disc(rng, layout.trial_points, venue_radius_km)
    clustering = kmeans_cluster(trial, k, max_iters=300, tol=1e-9, seed=seed, n_init=10)
    centroids = clustering.centroids
    order = np.lexsort((centroids[:, 1], centroids[:, 0]))
    return ids, centroids[order]


def _sample_annulus(
    rng: np.random.Generator, n: int, r_in: float, r_out: float, centre: np.ndarray, venue: float | None
) -> np.ndarray:
    out = np.empty((0, 2))
    while len(out) < n:
        m = max(2 * (n - len(out)), 16)
        r = np.sqrt(rng.uniform(r_in**2, r_out**2, m))
        theta = rng.uniform(0.0, 2 * np.pi, m)
        pts = centre + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        if venue is not None:
            pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= venue]
        out = np.vstack([out, pts])
    return out[:n]


def generate_deployment(
    ring_plan: RingPlan,
    gw_layout: GatewayLayout | Sequence[Point],
    seed: int,
    counts_table: np.ndarray | None = None,
) -> Deployment:
    """Scatter each gateway's devices uniformly over its ring annuli.

    ``counts_table`` (gateways x rings) overrides ``ring_plan.counts_per_gw``
    when gateways carry unequal counts. With a clipped venue, points are drawn
    uniformly from the part of each annulus inside the venue disc.
    """
    if not isinstance(gw_layout, GatewayLayout):
        pts = list(gw_layout)
        gw_layout = GatewayLayout(kind="explicit", positions=tuple((i, p.x, p.y) for i, p in enumerate(pts)))
    venue = gw_layout.venue_radius_km or ring_plan.radii_km[-1]
    gw_ids, gw_xy = place_gateways(gw_layout, venue, seed)
    n_gw = len(gw_ids)
    if counts_table is None:
        counts_table = np.repeat(np.asarray(ring_plan.counts_per_gw)[None, :], n_gw, axis=0)
    counts_table = np.asarray(counts_table, dtype=np.int64)
    if counts_table.shape != (n_gw, ring_plan.ring_count):
        raise DeploymentError(f"counts table shape {counts_table.shape} != ({n_gw}, {ring_plan.ring_count})")
    clip = venue if (gw_layout.clip_to_venue and gw_layout.kind != "explicit") else None

    rng = np.random.default_rng([seed, 0xD3B])
    xy, rings, homes = [], [], []
    for g in range(n_gw):
        for ring in range(ring_plan.ring_count):
            n = int(counts_table[g, ring])
            if n == 0:
                continue
            r_in, r_out = ring_plan.inner_radius(ring), ring_plan.radii_km[ring]
            centre_offset = float(np.hypot(*gw_xy[g]))
            if clip is not None and (centre_offset - r_out >= clip or centre_offset + clip <= r_in):
                raise DeploymentError(f"ring {ring} of gateway {g} lies outside the venue")
            xy.append(_sample_annulus(rng, n, r_in, r_out, gw_xy[g], clip))
            rings.append(np.full(n, ring))
            homes.append(np.full(n, g))
    return Deployment(
        gateway_ids=gw_ids,
        gateway_xy=gw_xy,
        device_xy=np.vstack(xy) if xy else np.empty((0, 2)),
        device_ring=np.concatenate(rings) if rings else np.empty(0, dtype=np.int64),
        device_home=np.concatenate(homes) if homes else np.empty(0, dtype=np.int64),
        ring_plan=ring_plan,
        venue_radius_km=clip,
    )


@dataclass
class Clustering:
    centroids: np.ndarray  # (k, 2)
    assignment: np.ndarray  # (N,) centroid index per device
    radii: np.ndarray  # (k,) km, Chebyshev radius; nan for empty clusters
    objective: float  # mean squared distance to the assigned centroid
    history: list[float] = field(default_factory=list)
    iterations: int = 0


def _as_points(devices) -> np.ndarray:
    if isinstance(devices, np.ndarray):
        pts = np.asarray(devices, dtype=float)
    else:
        pts = np.array([[p.x, p.y] if isinstance(p, Point) else p for p in devices], dtype=float)
    return pts.reshape(-1, 2)


def _assign(pts: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    # argmin returns the first minimum: ties go to the lowest centroid index
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(len(pts)), idx]


def _kmeanspp(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [pts[rng.integers(len(pts))]]
    for _ in range(1, k):
        d2 = ((pts[:, None, :] - np.array(centroids)[None]) ** 2).sum(axis=2).min(axis=1)
        total = d2.sum()
        if total == 0:
            centroids.append(pts[rng.integers(len(pts))])
        else:
            centroids.append(pts[rng.choice(len(pts), p=d2 / total)])
    return np.array(centroids, dtype=float)


def _lloyd(pts: np.ndarray, centroids: np.ndarray, max_iters: int, tol: float) -> Clustering:
    k = len(centroids)
    history: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        assign, d2 = _assign(pts, centroids)
        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            far = int(np.argmax(d2))
            centroids[empty] = pts[far]
            assign, d2 = _assign(pts, centroids)
            counts = np.bincount(assign, minlength=k)
        for c in range(k):
            if counts[c]:
                centroids[c] = pts[assign == c].mean(axis=0)
        history.append(float(_assign(pts, centroids)[1].mean()))
        if len(history) > 1 and history[-2] - history[-1] < tol:
            break
    assign, d2 = _assign(pts, centroids)
    return Clustering(
        centroids=centroids,
        assignment=assign,
        radii=_all_radii(pts, centroids, assign),
        objective=float(d2.mean()),
        history=history,
        iterations=it,
    )


def _all_radii(pts: np.ndarray, centroids: np.ndarray, assign: np.ndarray) -> np.ndarray:
    radii = np.full(len(centroids), np.nan)
    for c in range(len(centroids)):
        members = pts[assign == c]
        if len(members):
            radii[c] = np.abs(members - centroids[c]).max()
    return radii


def kmeans_cluster(
    devices, k: int, max_iters: int = 100, tol: float = 1e-9, seed: int = 0, n_init: int = 20
) -> Clustering:
    """Lloyd's k-means minimising the mean squared device-to-centroid distance.

    Runs ``n_init`` k-means++ restarts and keeps the lowest objective. The
    returned ``history`` is the per-iteration objective of the kept run.
    """
    pts = _as_points(devices)
    if len(pts) == 0:
        raise DeploymentError("kmeans needs at least one device")
    if not 1 <= k <= len(pts):
        raise DeploymentError(f"k must be in [1, {len(pts)}], got {k}")
    rng = np.random.default_rng(seed)
    best: Clustering | None = None
    for _ in range(max(1, n_init)):
        run = _lloyd(pts, _kmeanspp(pts, k, rng), max_iters, tol)
        if best is None or run.objective < best.objective - 1e-12:
            best = run
    return best


def cluster_radius(clustering: Clustering, cluster_index: int, devices=None) -> float:
    """Largest per-axis offset of a cluster's members from its centroid."""
    if not 0 <= cluster_index < len(clustering.centroids):
        raise DeploymentError(f"no cluster {cluster_index}")
    if devices is None:
        r = clustering.radii[cluster_index]
        if np.isnan(r):
            raise DeploymentError(f"cluster {cluster_index} is empty")
        return float(r)
    pts = _as_points(devices)
    members = pts[clustering.assignment == cluster_index]
    if len(members) == 0:
        raise DeploymentError(f"cluster {cluster_index} is empty")
    return float(np.abs(members - clustering.centroids[cluster_index]).max())
