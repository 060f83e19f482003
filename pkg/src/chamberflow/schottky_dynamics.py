"""Strong Schottky families, limit-cone estimation, the sign group,
component-label transport, and decorrelation checks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetExceeded,
    CannotCertify,
    CertificationFailure,
    NeedLargerN,
    NotGeneric,
    NotLoxodromic,
    OutOfDomain,
)
from .linalg_core import (
    AMElement,
    CartanVector,
    Config,
    DEFAULT_CONFIG,
    GroupElement,
    SignVector,
    jordan_projection,
    project_to_sl,
)
from .flag_boundary import Flag, act, boundary_margin_estimate, flag_distance, is_transverse
from .loxodromy import (
    LoxodromicData,
    REpsCertificate,
    certify_r_eps,
    classify,
    compact_section,
    extended_jordan,
    power,
    ratio,
)
from .sections_cocycles import BHCoordinates, Section, best_section, cocycle, covering_family

DEFAULT_WORD_CAP = 200_000


@dataclass(frozen=True)
class SchottkyFamily:
    generators: tuple
    r: float
    eps: float
    certificates: tuple
    pairwise_margins: np.ndarray


@dataclass(frozen=True)
class ConeEstimate:
    rays: tuple          # normalized Jordan directions of sampled words
    hull: tuple          # extreme rays of the convex cone hull
    word_length: int


@dataclass(frozen=True)
class SignGroupReport:
    basis: tuple                 # independent SignVectors
    order: int                   # 2**p
    p: int
    witnesses: tuple             # (word, SignVector) pairs


def enumerate_words(num_gens: int, max_len: int, cap: int = DEFAULT_WORD_CAP):
    """All nonempty positive words up to max_len, breadth-first, deterministic."""
    count = sum(num_gens ** k for k in range(1, max_len + 1))
    if count > cap:
        raise BudgetExceeded(f"{count} words exceeds the cap {cap}")
    queue = deque([()])
    while queue:
        word = queue.popleft()
        if word:
            yield word
        if len(word) < max_len:
            for i in range(num_gens):
                queue.append(word + (i,))


def word_matrices(generators: list, max_len: int, cap: int = DEFAULT_WORD_CAP):
    """(word, product matrix) pairs; products reuse the length-1 prefixes."""
    mats = {(): np.eye(generators[0].shape[0])}
    for word in enumerate_words(len(generators), max_len, cap):
        prefix, last = word[:-1], word[-1]
        mat = generators[last] @ mats[prefix]
        mats[word] = mat
        yield word, mat


def build_schottky(
    seeds: list,
    r: float,
    eps: float,
    max_power: int = 8,
    grid: int = 120,
    config: Config = DEFAULT_CONFIG,
) -> SchottkyFamily:
    """Replace each seed by its smallest (r, eps)-certified power and verify
    the pairwise 6r separation of fixed flags from basin boundaries."""
    classified = [classify(GroupElement(s) if isinstance(s, np.ndarray) else s, config) for s in seeds]
    for i, a in enumerate(classified):
        for j, b in enumerate(classified):
            if i == j:
                continue
            if not is_transverse(a.attracting, b.repelling, config):
                raise NotGeneric(f"seed {i}+ shares a flag with seed {j}-")
            if j < i and (
                flag_distance(a.attracting, b.attracting) < 1e-8
                or flag_distance(a.repelling, b.repelling) < 1e-8
            ):
                raise NotGeneric(f"seeds {j} and {i} share a fixed flag")
    generators, certificates = [], []
    for idx, L in enumerate(classified):
        cert = None
        for k in range(1, max_power + 1):
            Lk = power(L, k, config)
            try:
                cert = certify_r_eps(Lk, r, eps, grid=grid, config=config)
                generators.append(Lk)
                certificates.append(cert)
                break
            except CertificationFailure:
                continue
        if cert is None:
            raise CannotCertify(f"seed {idx}: no power <= {max_power} certifies")
    m = len(generators)
    margins = np.zeros((m, m))
    for i, a in enumerate(generators):
        for j, b in enumerate(generators):
            margins[i, j] = boundary_margin_estimate(a.attracting, b.repelling, config=config)
            if margins[i, j] < 6 * r:
                raise NotGeneric(
                    f"margin d(g{i}+, boundary b(g{j}-)) = {margins[i, j]:.4f} < 6r"
                )
    return SchottkyFamily(tuple(generators), r, eps, tuple(certificates), margins)


def _chamber_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the sum-zero subspace of R^n."""
    basis = []
    for i in range(1, n):
        v = np.zeros(n)
        v[:i] = 1.0
        v[i] = -float(i)
        basis.append(v / np.linalg.norm(v))
    return np.asarray(basis).T


def chamber_coords(lam: np.ndarray) -> np.ndarray:
    """Coordinates of a sum-zero vector in the orthonormal chamber basis."""
    return _chamber_basis(lam.shape[0]).T @ lam


def _planar_hull(dirs: list) -> list:
    """Extreme rays of the cone hull of 2-D directions within a half-plane."""
    angles = [np.arctan2(d[1], d[0]) for d in dirs]
    lo, hi = int(np.argmin(angles)), int(np.argmax(angles))
    if angles[hi] - angles[lo] < 1e-9:
        return [dirs[lo]]
    return [dirs[lo], dirs[hi]]


def _word_array(num_gens: int, length: int) -> np.ndarray:
    """All words of exactly `length` letters as an (N, length) index array;
    column j holds the j-th applied letter. Row order matches the word
    tuples of enumerate_words restricted to that length."""
    grids = np.indices((num_gens,) * length)
    return np.stack([g.ravel() for g in grids], axis=1)


def _batched_qr_positive(frames: np.ndarray):
    """QR of a stack of square matrices with positive R diagonal; returns
    (Q stack, log|diag R| stack)."""
    q, r = np.linalg.qr(frames)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    signs = np.where(diag < 0, -1.0, 1.0)
    q = q * signs[:, np.newaxis, :]
    return q, np.log(np.abs(diag))


def stable_word_lambdas(
    mats: list, length: int, xi_star: np.ndarray | None = None, repeats: int | None = None
):
    """Jordan projections of all positive words of a given length, computed
    without ever forming the word products.

    A first sweep of per-letter applications converges a frame to each
    word's attracting flag; a second sweep accumulates the per-letter
    Iwasawa a-parts, which telescope to the Jordan projection evaluated at
    the attracting flag. Every step is an orthogonal-matrix QR, so the
    result stays accurate for words whose raw products overflow double
    precision. Returns (words, lambdas) with words of shape (N, length).
    """
    n = mats[0].shape[0]
    num_gens = len(mats)
    words = _word_array(num_gens, length)
    big = len(words)
    if xi_star is None:
        xi_star = np.linalg.qr(np.random.default_rng(12345).standard_normal((n, n)))[0]
    frames = np.broadcast_to(xi_star, (big, n, n)).copy()
    stacked = np.asarray(mats)
    if repeats is None:
        repeats = max(2, int(np.ceil(24.0 / length)))
    for _ in range(repeats):
        for j in range(length):
            frames = stacked[words[:, j]] @ frames
            frames, _ = _batched_qr_positive(frames)
    lam = np.zeros((big, n))
    for j in range(length):
        frames = stacked[words[:, j]] @ frames
        frames, logs = _batched_qr_positive(frames)
        lam += logs
    lam -= lam.mean(axis=1, keepdims=True)
    return words, lam


def limit_cone(
    fam: SchottkyFamily, max_len: int, cap: int = DEFAULT_WORD_CAP, config: Config = DEFAULT_CONFIG
) -> ConeEstimate:
    """Hull of the Jordan directions of all positive words up to max_len."""
    mats = [L.g.entries for L in fam.generators]
    n = mats[0].shape[0]
    count = sum(len(mats) ** k for k in range(1, max_len + 1))
    if count > cap:
        raise BudgetExceeded(f"{count} words exceeds the cap {cap}")
    rays = []
    for length in range(1, max_len + 1):
        _, lams = stable_word_lambdas(mats, length)
        norms = np.linalg.norm(lams, axis=1)
        keep = norms > 1e-12
        rays.extend(lams[keep] / norms[keep, np.newaxis])
    dim = n - 1
    if dim == 1:
        hull = [rays[0]]
    elif dim == 2:
        planar = [chamber_coords(ray) for ray in rays]
        hull_planar = _planar_hull(planar)
        basis = _chamber_basis(n)
        hull = [basis @ h for h in hull_planar]
    else:
        from scipy.spatial import ConvexHull

        pts = np.array([chamber_coords(ray) for ray in rays] + [np.zeros(dim)])
        hv = ConvexHull(pts).vertices
        basis = _chamber_basis(n)
        hull = [basis @ pts[i] for i in hv if np.linalg.norm(pts[i]) > 1e-12]
    return ConeEstimate(
        tuple(CartanVector(ray) for ray in rays),
        tuple(CartanVector(h / np.linalg.norm(h)) for h in hull),
        max_len,
    )


def cone_contains(cone: ConeEstimate, direction: np.ndarray, tol: float = 1e-9) -> bool:
    """Membership of a direction in the cone hull (nonneg combination)."""
    hull = np.array([h.coords for h in cone.hull]).T  # n x m
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    from scipy.optimize import nnls

    coeffs, resid = nnls(hull, d)
    return resid <= np.sqrt(tol)


def cone_interior(cone: ConeEstimate, direction: np.ndarray, margin: float = 1e-6) -> bool:
    """Strict interior test: strictly positive hull-ray combination."""
    hull = np.array([h.coords for h in cone.hull]).T
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    m = hull.shape[1]
    if m == 1:
        return bool(np.linalg.norm(d - hull[:, 0]) < margin)
    from scipy.optimize import linprog

    # maximize the smallest coefficient t: coeffs >= t, hull @ coeffs = d
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.hstack([hull, np.zeros((hull.shape[0], 1))])
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), A_eq=a_eq, b_eq=d,
                  bounds=[(None, None)] * m + [(None, None)], method="highs")
    return bool(res.success and -res.fun > margin)


def _sign_bits(m: SignVector) -> tuple:
    return tuple(1 if s < 0 else 0 for s in m.signs)


def _reduce_bits(bits: tuple, basis_bits: list) -> tuple:
    vec = np.array(bits, dtype=int)
    for b in basis_bits:
        pivot = next(i for i, v in enumerate(b) if v)
        if vec[pivot]:
            vec = (vec + np.array(b)) % 2
    return tuple(int(v) for v in vec)


def _m_part_of_word(mat: np.ndarray, config: Config) -> SignVector | None:
    """M-part of the extended Jordan projection of a word product: the signs
    of the (real) eigenvalues in decreasing modulus order. Section-independent
    since M is abelian for SL(n, R)."""
    try:
        # word products of determinant-1 factors have determinant 1 exactly;
        # renormalizing through a computed determinant would be pure noise at
        # large dynamic range, so wrap the matrix directly
        L = classify(GroupElement(mat), config)
    except (NotLoxodromic, ValueError):
        return None
    vals = np.linalg.eigvals(L.g.entries)
    vals = np.real(vals[np.argsort(-np.abs(vals))])
    # the sign of an eigenvalue tiny relative to the top modulus is numerical
    # noise; at most one such sign can be recovered from det = +1
    scale = abs(vals[0])
    signs = [int(np.sign(v)) if abs(v) > 1e-9 * scale else 0 for v in vals]
    undetermined = [i for i, s in enumerate(signs) if s == 0]
    if len(undetermined) > 1:
        return None
    if undetermined:
        signs[undetermined[0]] = int(np.prod([s for s in signs if s != 0]))
    return SignVector(tuple(signs))


def sign_group(
    fam: SchottkyFamily, max_len: int, cap: int = DEFAULT_WORD_CAP, config: Config = DEFAULT_CONFIG
) -> SignGroupReport:
    """The sign group M_Gamma via GF(2) elimination on the M-parts of the
    extended Jordan projections of all classified words up to max_len."""
    mats = [L.g.entries for L in fam.generators]
    n = mats[0].shape[0]
    basis, basis_bits, witnesses = [], [], []
    for word, mat in word_matrices(mats, max_len, cap):
        m = _m_part_of_word(mat, config)
        if m is None:
            continue
        residual = _reduce_bits(_sign_bits(m), basis_bits)
        if any(residual):
            basis.append(m)
            basis_bits.append(residual)
            witnesses.append((word, m))
            if len(basis) == n - 1:
                break
    p = len(basis)
    return SignGroupReport(tuple(basis), 2 ** p, p, tuple(witnesses))


def coset_index(m: SignVector, report: SignGroupReport) -> tuple:
    """Canonical coset representative of m in M / M_Gamma as reduced bits."""
    return _reduce_bits(_sign_bits(m), [list(b) for b in map(_sign_bits, report.basis)])


def component_label_transport(
    word: tuple,
    fam: SchottkyFamily,
    start: BHCoordinates,
    report: SignGroupReport,
    config: Config = DEFAULT_CONFIG,
) -> tuple:
    """Transport the M/M_Gamma label of the start coordinates along a word.

    The accumulated cocycle M-part (times the start's M offset) is reduced
    modulo the sign group; the start with trivial AM part has label [e].
    """
    n = fam.generators[0].g.n
    family = covering_family(n)
    xi = start.xi
    s_cur = start.section
    acc = SignVector.identity(n)
    for idx in word:
        g = fam.generators[idx].g
        xi_next = act(g, xi, config)
        s_next = best_section(family, xi_next)
        beta = cocycle(s_next, s_cur, g, xi, config)
        acc = acc * beta.m
        xi, s_cur = xi_next, s_next
    acc = acc * start.x.m
    return coset_index(acc, report)


def decorrelation_discret_check(
    fam: SchottkyFamily,
    report: SignGroupReport,
    n_exp: int,
    config: Config = DEFAULT_CONFIG,
) -> dict:
    """Verify that products h_p^{2n+nu_p} ... h_1^{2n+nu_1} reach every sign
    component nu in {0,1}^p of M/M_0 (M_0 trivial here), with the section
    corrections m_i chosen so the ratio terms are sign-trivial.

    Returns {nu: (attained_bits, expected_bits, match)}.
    """
    p = report.p
    if p == 0:
        return {(): ((), (), True)}
    n = fam.generators[0].g.n
    witnesses = []
    for word, _ in report.witnesses:
        mat = np.eye(n)
        for idx in word:
            mat = fam.generators[idx].g.entries @ mat
        witnesses.append(classify(project_to_sl(mat), config))
    # generic arrangement: (h_{i-1}+, h_i-) transverse
    for i in range(1, p):
        if not is_transverse(witnesses[i - 1].attracting, witnesses[i].repelling, config):
            raise NotGeneric(f"witness pair ({i - 1}+, {i}-) not transverse")
    # base point transverse to h_1's repelling flag
    xi0 = None
    for cand in [w.attracting for w in reversed(witnesses)] + [
        L.attracting for L in fam.generators
    ]:
        if is_transverse(cand, witnesses[0].repelling, config) and not np.allclose(
            cand.rep, witnesses[0].repelling.rep
        ):
            xi0 = cand
            break
    if xi0 is None:
        raise NotGeneric("no base point transverse to the first witness")
    sections = [compact_section(w.repelling) for w in witnesses]
    s0 = compact_section(witnesses[0].repelling)
    # corrections m_i: make each chain ratio term sign-trivial
    m_corr = [SignVector.identity(n)]
    for i in range(p):
        s_prev = (s0 if i == 0 else sections[i - 1]).with_offset(
            AMElement(CartanVector(np.zeros(n)), m_corr[i])
        )
        anchor = xi0 if i == 0 else witnesses[i - 1].attracting
        rho = ratio(
            sections[i], s_prev, witnesses[i].repelling, witnesses[i].attracting, anchor, config
        ).m
        m_corr.append(rho)
    ms = [_m_part_of_word(w.g.entries, config) for w in witnesses]
    s_top = sections[p - 1].with_offset(AMElement(CartanVector(np.zeros(n)), m_corr[p]))
    table = {}
    for bits in range(1 << p):
        nu = tuple((bits >> i) & 1 for i in range(p))
        # accumulate the product cocycle factor by factor (the cocycle
        # relation is exact), keeping every solve well conditioned
        beta = AMElement.identity(n)
        point = xi0
        s_prev = s0
        for i, w in enumerate(witnesses):
            step = project_to_sl(np.linalg.matrix_power(w.g.entries, 2 * n_exp + nu[i]))
            s_next = s_top if i == p - 1 else sections[i]
            try:
                beta = cocycle(s_next, s_prev, step, point, config) * beta
            except OutOfDomain as exc:
                raise NeedLargerN(str(exc)) from exc
            point = act(step, point, config)
            s_prev = s_next
            # ping-pong containment: the orbit stays transverse to the next basin
            nxt = witnesses[i + 1].repelling if i + 1 < p else witnesses[i].repelling
            if not is_transverse(point, nxt, config):
                raise NeedLargerN(f"orbit point leaves the big cell at step {i}")
        expected = SignVector.identity(n)
        for i in range(p):
            if nu[i]:
                expected = expected * ms[i]
        attained = _sign_bits(beta.m)
        table[nu] = (attained, _sign_bits(expected), attained == _sign_bits(expected))
    return table


def jordan_line_density_probe(
    fam: SchottkyFamily,
    theta: CartanVector,
    window: tuple,
    max_len: int,
    delta0: float = 0.2,
    cap: int = DEFAULT_WORD_CAP,
    config: Config = DEFAULT_CONFIG,
) -> dict:
    """Project Jordan vectors of all words onto the theta-line; report the
    in-window hits among words with orthogonal deviation < delta0 and the
    sorted gaps of their theta-components."""
    t_dir = theta.coords / np.linalg.norm(theta.coords)
    cone = limit_cone(fam, min(max_len, 4), cap, config)
    interior = cone_interior(cone, t_dir)
    mats = [L.g.entries for L in fam.generators]
    count = sum(len(mats) ** k for k in range(1, max_len + 1))
    if count > cap:
        raise BudgetExceeded(f"{count} words exceeds the cap {cap}")
    hits = []
    total = 0
    for length in range(1, max_len + 1):
        _, lams = stable_word_lambdas(mats, length)
        total += len(lams)
        ts = lams @ t_dir
        devs = np.linalg.norm(lams - ts[:, np.newaxis] * t_dir, axis=1)
        mask = (devs < delta0) & (ts >= window[0]) & (ts <= window[1])
        hits.extend(float(t) for t in ts[mask])
    hits.sort()
    gaps = np.diff(hits) if len(hits) > 1 else np.array([])
    out = {
        "theta_interior": bool(interior),
        "words": total,
        "hits": len(hits),
        "t_values": hits,
        "max_gap": float(gaps.max()) if gaps.size else float("inf"),
        "mean_gap": float(gaps.mean()) if gaps.size else float("inf"),
    }
    if not interior:
        out["warning"] = "theta-outside-cone"
    return out
