"""Dimension estimation: box counting, critical exponents, Patterson-Sullivan
clouds, pointwise and fiber/transverse dimensions, and the Balogh-Tyson band.

Boundary clouds are read in three ways:

* ``spherical``: ball-chart coordinates on ``S^(2n-1) in R^(2n)``, chordal cells;
* ``euclidean`` and ``heisenberg``: Heisenberg coordinates from a chart frame
  whose ``xi_+`` is kept away from the cloud;
* ``gromov``: the Heisenberg chart (locally bilipschitz to the Gromov metric),
  or a pairwise greedy-net oracle for small clouds.

Heisenberg chart coordinates are taken as ``h = phi^-1(xi)^-1``.  The chart
intertwines the action of ``N`` with left translation, so the gauge that is
invariant there is ``|a^-1 b|``; inverting turns it into the right-invariant
``d_H`` used throughout, while leaving Euclidean distances unchanged.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EstimationError, InputError
from .heisenberg import gauge_dist, group_inv, real_coords
from .hermitian import HPoint
from .hyperbolic import (
    GromovMetricTag,
    IwasawaFrame,
    SphericalMetricTag,
    gromov_dist_vectors,
    vectors_to_heis,
)

METRICS = ("euclidean", "heisenberg", "spherical", "gromov", "gromov-pairwise")


# ---------------------------------------------------------------------------
# inputs


@dataclass(frozen=True, eq=False)
class HeisSample:
    """Points given directly in Heisenberg coordinates, optionally weighted."""

    v: np.ndarray
    t: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        t = np.asarray(self.t, dtype=float)
        if t.shape != v.shape[:1]:
            raise InputError("v and t must describe the same number of points")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", t)
        if self.weights is not None:
            object.__setattr__(self, "weights", _normalise(self.weights))

    def __len__(self):
        return self.t.size


@dataclass(frozen=True, eq=False)
class WeightedCloud:
    """Boundary atoms (rows of ``Z``) with weights summing to one.

    ``s`` is the exponent of the weights ``exp(-s d(o, g o))``.
    """

    Z: np.ndarray
    weights: np.ndarray
    s: float = None
    lengths: np.ndarray = None

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=complex)
        w = _normalise(self.weights)
        if w.size != Z.shape[0]:
            raise InputError("one weight per atom is required")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.Z.shape[0]

    @property
    def n(self):
        return self.Z.shape[1] - 1


def _normalise(w):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or not np.isfinite(w).all():
        raise InputError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise EstimationError("all weights vanish")
    return w / total


def chart_frame(Z, candidates=512):
    """Frame whose ``xi_+`` is the candidate point farthest from the cloud."""
    from .hermitian import BoundaryPoint
    from .schottky import sphere_points

    Z = np.asarray(Z)
    n = Z.shape[1] - 1
    cand = sphere_points(n, candidates)
    w = Z[:, 1:] / Z[:, :1]
    wc = cand[:, 1:] / cand[:, :1]
    # nearest cloud point to each candidate, on a subsample for speed
    sub = w[:: max(1, len(w) // 4096)]
    gap = np.min(np.linalg.norm(wc[:, None, :] - sub[None, :, :], axis=-1), axis=1)
    return IwasawaFrame.with_infinity_at(BoundaryPoint(cand[int(np.argmax(gap))]))


def heisenberg_coords(Z, frame=None):
    """Chart coordinates ``phi^-1(xi)^-1`` of boundary vectors (see module doc)."""
    frame = chart_frame(Z) if frame is None else frame
    v, t = vectors_to_heis(Z, frame)
    return group_inv(v, t)


def _coords(points, metric, frame=None):
    """Representation of ``points`` for ``metric``: real array or ``(v, t)``."""
    if isinstance(points, HeisSample):
        if metric == "spherical":
            raise InputError("spherical metric needs boundary points")
        if metric == "euclidean":
            return real_coords(points.v, points.t)
        return points.v, points.t
    Z = points.Z if hasattr(points, "Z") else np.asarray(points, dtype=complex)
    if metric == "spherical":
        w = Z[:, 1:] / Z[:, :1]
        return np.concatenate([w.real, w.imag], axis=-1)
    v, t = heisenberg_coords(Z, frame)
    if metric == "euclidean":
        return real_coords(v, t)
    return v, t


def _metric_name(metric):
    if isinstance(metric, GromovMetricTag):
        return "gromov"
    if isinstance(metric, SphericalMetricTag):
        return "spherical"
    if metric not in METRICS:
        raise InputError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


# ---------------------------------------------------------------------------
# box counting


def heisenberg_cells(v, t, eps):
    """Integer labels of the cells ``h_eps(F) . lambda`` containing ``(v, t)``.

    ``F = [0,1)^(2(n-1)) x [0,1)`` and ``lambda`` runs over the integer
    lattice ``Z[i]^(n-1) x Z``, a subgroup for the group law, so the cells
    tile the group and are comparable to right-invariant ``d_H`` balls.
    """
    vs = np.asarray(v) / eps
    ts = np.asarray(t) / eps ** 2
    m = np.floor(vs.real) + 1j * np.floor(vs.imag)
    u = vs - m
    # (u, tau) . (m, k) = (u + m, tau + k + Im(conj(u) m))
    k = np.floor(ts - np.imag(np.sum(np.conj(u) * m, axis=-1)))
    return np.column_stack([m.real, m.imag, k]).astype(np.int64)


def _cell_keys(coords, eps):
    if isinstance(coords, tuple):
        return heisenberg_cells(coords[0], coords[1], eps)
    return np.floor(coords / eps).astype(np.int64)


def _refine(labels, keys):
    """Labels of the common refinement of two partitions."""
    joint = np.column_stack([labels, keys])
    _, inv = np.unique(joint, axis=0, return_inverse=True)
    return inv.ravel()


def occupancy_counts(coords, scales):
    """``N(eps)`` for decreasing ``scales``; cells at each scale are refined by
    all coarser ones, so counts never decrease as ``eps`` shrinks."""
    n_pts = coords[0].shape[0] if isinstance(coords, tuple) else coords.shape[0]
    labels = np.zeros(n_pts, dtype=np.int64)
    counts = []
    for eps in scales:
        labels = _refine(labels, _cell_keys(coords, eps))
        counts.append(int(labels.max()) + 1)
    return np.array(counts)


def greedy_net_counts(dist_to, n_pts, scales):
    """Sizes of greedy ``eps``-nets: ``dist_to(i, idx)`` gives distances from
    point ``i`` to the points ``idx``.  Used as the pairwise oracle."""
    counts = []
    for eps in scales:
        centers = []
        for i in range(n_pts):
            if not centers or np.min(dist_to(i, np.asarray(centers))) > eps:
                centers.append(i)
        counts.append(len(centers))
    return np.array(counts)


def _diameter(coords):
    if isinstance(coords, tuple):
        x = real_coords(*coords)
    else:
        x = coords
    return float(np.linalg.norm(x.max(axis=0) - x.min(axis=0)))


@dataclass
class DimEstimate:
    """Slope of ``log N`` against ``log(1/eps)`` over the selected window."""

    slope: float
    stderr: float
    scales: np.ndarray
    counts: np.ndarray
    window: tuple
    metric: str
    windows: list = field(default_factory=list)

    def table(self):
        return list(zip(self.scales.tolist(), self.counts.tolist()))


def _fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    s2 = resid @ resid / dof
    sxx = np.sum((x - x.mean()) ** 2)
    return coef[0], float(np.sqrt(s2 / sxx)) if sxx > 0 else np.inf, float(np.sqrt(np.mean(resid ** 2)))


def select_window(x, y, valid, min_scales=6, min_decades=1.0):
    """Plateau selection: among windows of consecutive valid points with at
    least ``min_scales`` points spanning ``min_decades`` decades, pick the one
    with the smallest RMS fit residual.  Returns ``(i0, i1, all_windows)``
    with the window ``[i0, i1)`` and each tried window as
    ``(i0, i1, slope, rms)``.
    """
    idx = np.nonzero(valid)[0]
    windows = []
    for a in range(len(idx)):
        for b in range(a + min_scales, len(idx) + 1):
            sel = idx[a:b]
            if np.any(np.diff(sel) != 1):
                break
            if abs(x[sel[-1]] - x[sel[0]]) / np.log(10) < min_decades - 1e-9:
                continue
            slope, _, rms = _fit(x[sel], y[sel])
            windows.append((int(sel[0]), int(sel[-1]) + 1, float(slope), rms))
    if not windows:
        raise EstimationError("no scale window satisfies the plateau constraints")
    best = min(windows, key=lambda w: (w[3], w[0]))
    return best[0], best[1], windows


def default_scales(diameter, decades=7.0, per_octave=2):
    count = int(np.ceil(decades * np.log2(10) * per_octave)) + 1
    return diameter * 2.0 ** (-np.arange(count) / per_octave)


def box_count(points, metric="euclidean", scales=None, *, frame=None, base=None,
              min_scales=6, min_decades=1.0, saturation=0.25, min_count=8):
    """Box-counting dimension of a point set under ``metric``.

    Parameters
    ----------
    points : PointCloud, WeightedCloud, HeisSample or array of null vectors
    metric : {"euclidean", "heisenberg", "spherical", "gromov", "gromov-pairwise"}
        ``gromov`` counts in the Heisenberg chart; ``gromov-pairwise`` builds
        greedy nets with the closed-form Gromov metric from ``base``
        (at most 2e4 points).
    scales : decreasing cell sizes; default is a half-octave sequence over
        seven decades below the diameter.
    saturation, min_count : scales with ``N > saturation * len(points)`` or
        ``N < min_count`` are excluded from the fit.
    """
    name = _metric_name(metric)
    if isinstance(metric, GromovMetricTag):
        base = metric.x
    n_pts = len(points)
    if n_pts < 1000:
        raise InputError("box counting needs at least 1e3 points")
    if name == "gromov-pairwise":
        if n_pts > 20000:
            raise InputError("the pairwise Gromov oracle is limited to 2e4 points")
        Z = points.Z if hasattr(points, "Z") else np.asarray(points)
        X = (HPoint.origin(Z.shape[1] - 1) if base is None else base).z

        def dist_to(i, idx):
            return gromov_dist_vectors(X, Z[i], Z[idx])

        diam = float(np.max(gromov_dist_vectors(X, Z[0], Z))) * 2
        scales = default_scales(diam, 4.0) if scales is None else np.asarray(scales, float)
        counts = greedy_net_counts(dist_to, n_pts, scales)
    else:
        coords = _coords(points, "heisenberg" if name == "gromov" else name, frame)
        diam = _diameter(coords)
        if diam == 0:
            raise EstimationError("degenerate cloud: all points coincide")
        scales = default_scales(diam) if scales is None else np.asarray(scales, float)
        if np.any(np.diff(scales) >= 0):
            raise InputError("scales must be strictly decreasing")
        counts = occupancy_counts(coords, scales)
    if counts.max() <= 1:
        raise EstimationError("degenerate cloud: a single cell at every scale")
    x = -np.log(scales)
    y = np.log(counts)
    valid = (counts <= saturation * n_pts) & (counts >= min_count)
    i0, i1, windows = select_window(x, y, valid, min_scales, min_decades)
    slope, stderr, _ = _fit(x[i0:i1], y[i0:i1])
    return DimEstimate(float(slope), stderr, scales, counts, (i0, i1), name, windows)


# ---------------------------------------------------------------------------
# critical exponent


@dataclass
class ExponentEstimate:
    delta_counting: float
    delta_series: float
    window: tuple
    L: int


def critical_exponent(distances, L=None, lengths=None, points=64):
    """Growth exponent from orbital counting.

    ``delta_counting`` is the least-squares slope of ``log N(R)`` over
    ``R in [0.2, 0.9] R_max``, where ``R_max`` is the smallest distance
    among words of the maximal length: below it every orbit point is
    counted.  ``delta_series`` solves ``S_L(s) = S_(L-2)(s)`` by bisection,
    with ``S_l(s)`` the sum of ``exp(-s d)`` over words of length ``l``.

    ``distances`` may be an :class:`~schottkydim.schottky.OrbitDistances`.
    """
    if hasattr(distances, "lengths"):
        distances, lengths = distances.distances, distances.lengths
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise EstimationError("no distances given")
    if d.size < 1000:
        raise EstimationError("critical_exponent needs at least 1e3 distances")
    if lengths is None:
        if L is not None:
            raise InputError("word lengths are required together with L")
        r_max = float(d.max())
    else:
        lengths = np.asarray(lengths)
        L = int(lengths.max()) if L is None else int(L)
        r_max = float(d[lengths == L].min())
    R = np.linspace(0.2 * r_max, 0.9 * r_max, points)
    N = np.searchsorted(np.sort(d), R, side="right")
    if np.any(N < 1) or np.any(np.diff(N) < 0):
        raise EstimationError("orbit counts are empty or not monotone on the window")
    slope = float(np.polyfit(R, np.log(N), 1)[0])

    series = np.nan
    if lengths is not None and L >= 3:
        dL = d[lengths == L]
        dP = d[lengths == L - 2]

        def gap(s):
            # log S_L(s) - log S_(L-2)(s), decreasing in s
            a = -s * dL
            b = -s * dP
            return (a.max() + np.log(np.exp(a - a.max()).sum())) - (b.max() + np.log(np.exp(b - b.max()).sum()))

        lo, hi = 0.0, 1.0
        while gap(hi) > 0:
            hi *= 2
            if hi > 1e3:
                raise EstimationError("series criterion never crosses")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if gap(mid) > 0 else (lo, mid)
        series = 0.5 * (lo + hi)
    return ExponentEstimate(slope, float(series), (0.2 * r_max, 0.9 * r_max), L)


# ---------------------------------------------------------------------------
# Patterson-Sullivan clouds and local dimensions


def ps_sample(S, L, s, o=None):
    """Finite Patterson-Sullivan surrogate at exponent ``s``.

    Atoms are attracting fixed points of all reduced words of length
    ``1..L``; weights are ``exp(-s d(o, g o))``, normalised.
    """
    from .schottky import orbit_distances, word_fixed_points, word_levels, _letter_fixed_points

    if L < 1:
        raise InputError("ps_sample needs L >= 1")
    od = orbit_distances(S, L, o)
    d = od.distances[1:]
    lengths = od.lengths[1:]
    blocks = []
    for ell, level in enumerate(word_levels(S.k, L), start=1):
        if ell == 1:
            blocks.append(_letter_fixed_points(S))
        else:
            blocks.append(word_fixed_points(S, level.words.astype(np.int64))[0])
    Z = np.concatenate(blocks)
    logw = -s * d
    w = np.exp(logw - logw.max())
    return WeightedCloud(Z, w, float(s), lengths)


def _distance_function(cloud, metric, frame=None, base=None):
    """``(dist(i) -> distances from atom i to all atoms, weights)``."""
    name = _metric_name(metric)
    if isinstance(metric, GromovMetricTag):
        base = metric.x
    w = cloud.weights if cloud.weights is not None else np.full(len(cloud), 1.0 / len(cloud))
    if name == "gromov-pairwise" or (name == "gromov" and not isinstance(cloud, HeisSample) and base is not None):
        Z = cloud.Z
        X = (HPoint.origin(Z.shape[1] - 1) if base is None else base).z
        return (lambda i: gromov_dist_vectors(X, Z[i], Z)), w
    coords = _coords(cloud, "heisenberg" if name == "gromov" else name, frame)
    if isinstance(coords, tuple):
        v, t = coords
        return (lambda i: gauge_dist(v, t, v[i], t[i])), w
    return (lambda i: np.linalg.norm(coords - coords[i], axis=-1)), w


class LocalDims(NamedTuple):
    median: float
    iqr: tuple
    estimates: np.ndarray
    skipped: int


def pointwise_dim(cloud, metric="euclidean", centers=200, radii=None, *, seed=0,
                  frame=None, base=None, min_atoms=10):
    """Distribution of local dimensions ``log mu(B(xi, rho)) / log rho``.

    Centres are atoms drawn by weight with a seeded generator; at each the
    slope of ``log mu(B)`` against ``log rho`` is fitted over the radii whose
    ball holds at least ``min_atoms`` atoms.  Centres with fewer than three
    usable radii are skipped and counted.
    """
    if len(cloud) < 1000:
        raise InputError("pointwise_dim needs at least 1e3 atoms")
    dist, w = _distance_function(cloud, metric, frame, base)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(w), size=centers, p=w)
    if radii is None:
        diam = float(dist(int(idx[0])).max())
        # a cloud collapsed to one point has full mass at every radius: slope 0
        radii = (diam if diam > 0 else 1.0) * np.geomspace(0.25, 1e-3, 16)
    radii = np.asarray(radii, dtype=float)
    est = []
    skipped = 0
    for i in idx:
        d = dist(int(i))
        order = np.argsort(d)
        cum = np.cumsum(w[order])
        pos = np.searchsorted(d[order], radii, side="right")
        ok = pos >= min_atoms
        if ok.sum() < 3:
            skipped += 1
            continue
        mass = cum[pos[ok] - 1]
        est.append(np.polyfit(np.log(radii[ok]), np.log(mass), 1)[0])
    if not est:
        raise EstimationError("no centre had enough mass at the smallest radii")
    est = np.array(est)
    q1, med, q3 = np.percentile(est, [25, 50, 75])
    return LocalDims(float(med), (float(q1), float(q3)), est, skipped)


class FiberTransverse(NamedTuple):
    fiber: float
    fiber_iqr: tuple
    transverse: float
    transverse_iqr: tuple
    slab_width: float
    slabs: int


def fiber_transverse_dims(cloud, frame=None, *, slabs=60, min_slabs=30, min_atoms=200,
                          centers=200, seed=0, widths=None):
    """Empirical dimensions of a measure across and along the centre ``Z``.

    transverse : local dimension of the pushforward to ``N/Z`` (the
        horizontal coordinate ``v``) with the Euclidean metric.
    fiber : local dimension along ``t`` of slab-conditioned measures, in
        ``d_H`` units (a vertical gap ``tau`` has size ``sqrt(tau)``).  A slab
        is the set of atoms with ``|v - v0| <= w``; widths grow from
        ``diam * 2^-7`` by doubling until ``min_slabs`` of ``slabs`` seeded
        slabs hold ``min_atoms`` atoms.

    Raises
    ------
    EstimationError
        if no width gives ``min_slabs`` populated slabs.
    """
    if isinstance(cloud, HeisSample):
        v, t = cloud.v, cloud.t
        w = cloud.weights if cloud.weights is not None else np.full(len(cloud), 1.0 / len(cloud))
    else:
        v, t = heisenberg_coords(cloud.Z, frame)
        w = cloud.weights
    rng = np.random.default_rng(seed)
    x = np.concatenate([v.real, v.imag], axis=-1)
    diam = float(np.linalg.norm(x.max(axis=0) - x.min(axis=0)))
    if diam == 0:
        # a single vertical fibre: every slab is the whole cloud
        diam = 1.0

    # transverse: pushforward to N/Z
    trans = pointwise_dim(HeisSample(v, np.zeros_like(t), w), "euclidean", centers, seed=seed) \
        if len(t) >= 1000 else None

    starts = rng.choice(len(w), size=slabs, p=w)
    widths = diam * 2.0 ** -np.arange(7, -1, -1) if widths is None else np.asarray(widths)
    for width in widths:
        members = [np.nonzero(np.linalg.norm(x - x[s], axis=-1) <= width)[0] for s in starts]
        populated = [m for m in members if m.size >= min_atoms]
        if len(populated) >= min_slabs:
            break
    else:
        raise EstimationError(f"fewer than {min_slabs} slabs hold {min_atoms} atoms at any width")

    est = []
    for m in populated:
        tm, wm = t[m], w[m] / w[m].sum()
        spread = float(tm.max() - tm.min())
        if spread <= 0:
            est.append(0.0)
            continue
        # vertical radii in d_H units, from the slab's horizontal scale to an eighth of its t-extent
        lo = max(np.sqrt(width * diam) * 0.5, np.sqrt(spread) * 1e-3)
        hi = np.sqrt(spread / 8)
        if hi <= lo:
            est.append(0.0)
            continue
        rho = np.geomspace(lo, hi, 8)
        c = rng.choice(m.size, size=min(20, m.size), p=wm, replace=False)
        slopes = []
        for j in c:
            gap = np.abs(tm - tm[j])
            order = np.argsort(gap)
            cum = np.cumsum(wm[order])
            pos = np.searchsorted(gap[order], rho ** 2, side="right")
            slopes.append(np.polyfit(np.log(rho), np.log(cum[pos - 1]), 1)[0])
        est.append(float(np.median(slopes)))
    est = np.array(est)
    q1, med, q3 = np.percentile(est, [25, 50, 75])
    t_med = trans.median if trans is not None else np.nan
    t_iqr = trans.iqr if trans is not None else (np.nan, np.nan)
    return FiberTransverse(float(med), (float(q1), float(q3)), t_med, t_iqr, float(width), len(populated))


# ---------------------------------------------------------------------------
# the Balogh-Tyson band


def balogh_check(alpha, beta, n, slack=0.1):
    """Check ``max(alpha, 2 alpha - 2n) <= beta <= min(2 alpha, alpha + 1)``.

    ``alpha`` is a spherical (Euclidean) dimension and ``beta`` the matching
    Gromov (Heisenberg) dimension.  Each inequality's slack is reported;
    ``pass`` allows violations up to ``slack``.
    """
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise InputError("dimension estimates must be finite")
    slacks = {
        "beta_ge_alpha": beta - alpha,
        "beta_ge_2alpha_minus_2n": beta - (2 * alpha - 2 * n),
        "beta_le_2alpha": 2 * alpha - beta,
        "beta_le_alpha_plus_1": alpha + 1 - beta,
    }
    slacks = {k: float(v) for k, v in slacks.items()}
    return {"pass": all(v >= -slack for v in slacks.values()), "slack": slack, "slacks": slacks,
            "alpha": float(alpha), "beta": float(beta), "n": int(n)}
