"""Constructive density checks in V x C with V = R^d and C = (R/Z)^k.

select_dense_subgroup_generators picks at most 3d + 2k elements whose
generated group delta-covers a window times the full torus;
semigroup_cone_density constructs the translation v_F after which the
positive semigroup is delta-dense in a translated cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import cKDTree

from .errors import NotDenseAtBudget


@dataclass(frozen=True)
class TorusPoint:
    """A point of V x C; torus coordinates are reduced mod 1 into [0, 1)."""

    v: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float)) % 1.0
        v.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "c", c)

    @property
    def d(self) -> int:
        return self.v.shape[0]

    @property
    def k(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class DensityCertificate:
    delta: float
    subset: tuple
    grid_step: float
    coeff_bound: int
    covered: bool
    uncovered_farthest: tuple | None = None   # (cell center, distance) when not covered
    points: tuple = ()                        # generated points backing the certificate
    coeffs: tuple = ()                        # integer coefficient vectors of those points
    centers: tuple = ()                       # the grid cell centers the flag certifies


def _torus_shifts(k: int):
    """All 3^k integer shift vectors used to unwrap torus distances."""
    if k == 0:
        return [np.zeros(0)]
    shifts = [np.zeros(0)]
    for _ in range(k):
        shifts = [np.append(s, o) for s in shifts for o in (-1.0, 0.0, 1.0)]
    return shifts


def _build_tree(points: list, k: int):
    """KD-tree over V x C points with torus coordinates replicated."""
    data, owner = [], []
    for i, (v, c) in enumerate(points):
        for shift in _torus_shifts(k):
            data.append(np.concatenate([v, c + shift]))
            owner.append(i)
    return cKDTree(np.asarray(data)), owner


def _grid_centers(window: np.ndarray, k: int, step: float):
    """Cell centers of the window box times the full torus at the given step."""
    axes = []
    for lo, hi in window:
        count = max(1, int(np.ceil((hi - lo) / step)))
        axes.append(lo + (np.arange(count) + 0.5) * (hi - lo) / count)
    for _ in range(k):
        count = max(1, int(np.ceil(1.0 / step)))
        axes.append((np.arange(count) + 0.5) / count)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _coverage(points: list, k: int, window: np.ndarray, delta: float, step: float):
    """(covered, farthest (center, distance)) of the window x torus grid."""
    if not points:
        return False, (tuple(window[:, 0]), float("inf"))
    tree, _ = _build_tree(points, k)
    centers = _grid_centers(window, k, step)
    dists, _ = tree.query(centers)
    worst = int(np.argmax(dists))
    covered = bool(dists[worst] <= delta)
    return covered, (tuple(float(x) for x in centers[worst]), float(dists[worst]))


def _generated_group(
    gens: list, window: np.ndarray, k: int, delta: float, coeff_bound: int, positive_only=False
):
    """BFS enumeration of the (semi)group generated by gens, restricted to a
    window inflated by one generator step; deduplicated on a delta/4 grid.

    Returns (points, coeffs) where coeffs are the integer coefficient vectors.
    """
    d = window.shape[0]
    steps = []
    for i, p in enumerate(gens):
        unit = np.zeros(len(gens), dtype=int)
        unit[i] = 1
        steps.append((p.v, p.c, unit))
        if not positive_only:
            steps.append((-p.v, -p.c, -unit))
    reach = max((np.linalg.norm(p.v) for p in gens), default=0.0) + delta
    lo = window[:, 0] - reach
    hi = window[:, 1] + reach
    res = delta / 4.0
    seen = {}
    start_v, start_c = np.zeros(d), np.zeros(k)
    start_key = (tuple(np.round(start_v / res).astype(int)), tuple(np.round((start_c % 1.0) / res).astype(int)))
    seen[start_key] = (start_v, start_c, np.zeros(len(gens), dtype=int))
    frontier = [start_key]
    while frontier:
        new_frontier = []
        for key in frontier:
            v, c, coeff = seen[key]
            for sv, sc, sunit in steps:
                nv, nc = v + sv, (c + sc) % 1.0
                ncoeff = coeff + sunit
                if np.any(nv < lo) or np.any(nv > hi):
                    continue
                if np.max(np.abs(ncoeff)) > coeff_bound:
                    continue
                nkey = (
                    tuple(np.round(nv / res).astype(int)),
                    tuple(np.round(nc / res).astype(int) % max(1, int(round(1.0 / res)))),
                )
                if nkey in seen:
                    continue
                seen[nkey] = (nv, nc, ncoeff)
                new_frontier.append(nkey)
        frontier = new_frontier
    points = [(v, c) for v, c, _ in seen.values()]
    coeffs = [coeff for _, _, coeff in seen.values()]
    return points, coeffs


def _greedy_v_basis(E: list, d: int) -> list:
    """Indices of <= d elements maximizing the spanned volume of the V-parts."""
    chosen = []
    chosen_vecs = []
    for _ in range(d):
        best, best_vol = None, 1e-12
        for i, p in enumerate(E):
            if i in chosen:
                continue
            cand = chosen_vecs + [p.v]
            gram = np.array([[a @ b for b in cand] for a in cand])
            vol = float(np.linalg.det(gram))
            if vol > best_vol:
                best, best_vol = i, vol
        if best is None:
            break
        chosen.append(best)
        chosen_vecs.append(E[best].v)
    return chosen


def select_dense_subgroup_generators(
    E: list,
    delta: float,
    window,
    coeff_bound: int = 1000,
    grid_step: float | None = None,
) -> DensityCertificate:
    """Pick at most 3d + 2k elements of E whose generated group delta-covers
    window x torus (verified on a grid of step <= delta / 2)."""
    window = np.atleast_2d(np.asarray(window, dtype=float))
    d, k = E[0].d, E[0].k
    step = grid_step if grid_step is not None else delta / 2.0
    limit = 3 * d + 2 * k
    subset_idx = _greedy_v_basis(E, d)
    remaining = [i for i in range(len(E)) if i not in subset_idx]

    def covered_with(indices):
        pts, coeffs = _generated_group([E[i] for i in indices], window, k, delta, coeff_bound)
        ok, far = _coverage(pts, k, window, delta, step)
        return ok, far, pts, coeffs

    ok, far, pts, coeffs = covered_with(subset_idx)
    while not ok and remaining and len(subset_idx) < limit:
        # greedy: add the element that shrinks the farthest-cell distance most
        best_i, best_far, best_state = None, None, None
        for i in remaining:
            trial = subset_idx + [i]
            t_ok, t_far, t_pts, t_coeffs = covered_with(trial)
            if best_far is None or t_far[1] < best_far[1]:
                best_i, best_far = i, t_far
                best_state = (t_ok, t_far, t_pts, t_coeffs)
            if t_ok:
                break
        subset_idx.append(best_i)
        remaining.remove(best_i)
        ok, far, pts, coeffs = best_state
    cert = DensityCertificate(
        delta=delta,
        subset=tuple(E[i] for i in subset_idx),
        grid_step=step,
        coeff_bound=coeff_bound,
        covered=ok,
        uncovered_farthest=None if ok else far,
        points=tuple((tuple(v), tuple(c)) for v, c in pts),
        coeffs=tuple(tuple(int(x) for x in c) for c in coeffs),
        centers=tuple(tuple(float(x) for x in c) for c in _grid_centers(window, k, step)),
    )
    if not ok:
        raise NotDenseAtBudget(
            f"covering failed; farthest cell {far[0]} at distance {far[1]:.4f}", cert
        )
    return cert


def verify_certificate(cert: DensityCertificate, window=None) -> bool:
    """Independent single-pass re-verification of a covering certificate.

    Replays the certified cell centers (or a fresh grid over `window` when
    one is given) against the recorded points with plain loops, no trees.
    """
    k = cert.subset[0].k
    d = cert.subset[0].d
    pv = np.asarray([v for v, _ in cert.points], dtype=float)
    pc = np.asarray([c for _, c in cert.points], dtype=float).reshape(len(cert.points), k)
    if window is None:
        centers = np.asarray(cert.centers, dtype=float)
    else:
        window = np.atleast_2d(np.asarray(window, dtype=float))
        centers = _grid_centers(window, k, cert.grid_step)
    for center in centers:
        dv2 = ((pv - center[:d]) ** 2).sum(axis=1)
        wrap = np.abs(pc - center[d:]) % 1.0
        dc2 = (np.minimum(wrap, 1.0 - wrap) ** 2).sum(axis=1)
        if float(np.sqrt(dv2 + dc2).min()) > cert.delta:
            return not cert.covered
    return cert.covered


def _cone_membership(vf_dirs: np.ndarray, w: np.ndarray, tol: float = 1e-9) -> bool:
    """Is w a nonnegative combination of the columns of vf_dirs?"""
    if np.linalg.norm(w) < tol:
        return True
    coeffs, resid = nnls(vf_dirs, w)
    return resid <= max(tol, 1e-7 * np.linalg.norm(w))


def semigroup_cone_density(
    F: list,
    delta: float,
    window,
    coeff_bound: int = 1000,
    grid_step: float | None = None,
):
    """Find v_F such that the positive semigroup of F is delta-dense in
    (v_F + cone(F)) x C, certified on the window.

    Returns (v_F, DensityCertificate).
    """
    window = np.atleast_2d(np.asarray(window, dtype=float))
    d, k = F[0].d, F[0].k
    step = grid_step if grid_step is not None else delta / 2.0
    # 1. group-density pre-check on the zonotope of the V-parts; the BFS
    #    corridor must contain the zonotope, which can exceed the user window
    fv_stack = np.asarray([f.v for f in F])
    zono_lo = np.minimum(fv_stack, 0.0).sum(axis=0)
    zono_hi = np.maximum(fv_stack, 0.0).sum(axis=0)
    pre_window = np.stack(
        [np.minimum(window[:, 0], zono_lo), np.maximum(window[:, 1], zono_hi)], axis=1
    )
    group_pts, group_coeffs = _generated_group(F, pre_window, k, delta, coeff_bound)
    t_axes = np.linspace(0.0, 1.0, max(2, int(np.ceil(2.0 / delta)) + 1))
    mesh = np.meshgrid(*([t_axes] * len(F)), indexing="ij")
    targets = []
    for idx in range(mesh[0].size):
        t = np.array([m.ravel()[idx] for m in mesh])
        targets.append(sum(ti * f.v for ti, f in zip(t, F)))
    tree, owner = _build_tree(group_pts, k)
    # X: for each zonotope/torus target, the nearest group element
    x_indices = set()
    for tv in targets:
        for shift in ([np.zeros(0)] if k == 0 else [np.zeros(k), np.full(k, 0.5)]):
            q = np.concatenate([tv, shift]) if k else tv
            # among all group points within delta, keep the one whose
            # coefficient vector is least negative: it minimizes the
            # corrective power of h and hence the size of v_F
            hits = tree.query_ball_point(q, delta)
            if not hits:
                dist, _ = tree.query(q)
                raise NotDenseAtBudget(
                    f"group of F is not delta-dense near {tv} (distance {dist:.4f})"
                )
            best = min(
                (owner[j] for j in hits),
                key=lambda i: int(-min(0, group_coeffs[i].min())),
            )
            x_indices.add(best)
    # 2. h with h + X inside the semigroup: large positive coefficients
    worst_negative = 0
    for j in x_indices:
        worst_negative = max(worst_negative, int(-min(0, group_coeffs[j].min())))
    vf_dirs = np.array([f.v for f in F]).T
    # 3. certify delta-covering of (v_F + cone) on the window *relative to
    #    v_F* (v_F grows with the coefficient budget, so an absolute window
    #    could miss the translated cone entirely).  The h built from the
    #    grid-verified X can still sit slightly before the onset of genuine
    #    delta-density, so escalate h geometrically on a failed pass.
    h_coeff = worst_negative + 1
    for attempt in range(4):
        v_f = h_coeff * sum(f.v for f in F)
        abs_window = np.stack([v_f + window[:, 0], v_f + window[:, 1]], axis=1)
        # the BFS corridor must include the path from the origin to the window
        semi_window = np.stack(
            [np.minimum(0.0, abs_window[:, 0]) - delta, np.maximum(0.0, abs_window[:, 1]) + delta],
            axis=1,
        )
        semi_pts, semi_coeffs = _generated_group(
            F, semi_window, k, delta, coeff_bound, positive_only=True
        )
        centers = _grid_centers(abs_window, k, step)
        keep = []
        for center in centers:
            cv = center[:d]
            if _cone_membership(vf_dirs, cv - v_f):
                keep.append(center)
        if not keep:
            raise NotDenseAtBudget("window does not meet the translated cone")
        tree2, _ = _build_tree(semi_pts, k)
        dists, _ = tree2.query(np.asarray(keep))
        worst = int(np.argmax(dists))
        covered = bool(dists[worst] <= delta)
        if covered or 2 * h_coeff * max(np.abs(vf_dirs).sum(axis=0).max(), 1.0) > coeff_bound:
            break
        h_coeff *= 2
    cert = DensityCertificate(
        delta=delta,
        subset=tuple(F),
        grid_step=step,
        coeff_bound=coeff_bound,
        covered=covered,
        uncovered_farthest=None if covered else (tuple(float(x) for x in keep[worst]), float(dists[worst])),
        points=tuple((tuple(v), tuple(c)) for v, c in semi_pts),
        coeffs=tuple(tuple(int(x) for x in c) for c in semi_coeffs),
        centers=tuple(tuple(float(x) for x in c) for c in keep),
    )
    if not covered:
        raise NotDenseAtBudget(
            f"semigroup covering failed at distance {dists[worst]:.4f}", cert
        )
    return v_f, cert


def jordan_density_bridge(fam, delta: float, delta_hat: float = 0.0, window=None):
    """Feed the Jordan data of a Schottky family into the cone-density check:
    V = the Cartan subalgebra (dimension n - 1), C trivial; the certificate
    delta is inflated by the measured product-estimate defect 2 l delta_hat."""
    from .schottky_dynamics import chamber_coords

    lams = [chamber_coords(L.lam.coords) for L in fam.generators]
    pts = [TorusPoint(v, np.zeros(0)) for v in lams]
    l = len(fam.generators)
    eff_delta = delta + 2 * l * delta_hat
    if window is None:
        scale = max(np.linalg.norm(v) for v in lams)
        window = [(-5.0 * scale, 5.0 * scale)] * pts[0].d
    return semigroup_cone_density(pts, eff_delta, window)
