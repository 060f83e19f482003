"""Bruhat cross-sections, transition maps, signed AM-cocycles, and
Bruhat-Hopf coordinates.

A section is determined by its base flag (its domain is the Bruhat cell
opposite to the base) and an AM offset; the unipotent kind evaluates to
translated unit lower-triangular matrices, the compact kind to their
orthogonal parts. An optional left translation supports the K_r-translated
families used by the equicontinuity estimates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NotInBigCell, NotTransverse, OutOfDomain
from .linalg_core import (
    AMElement,
    CartanVector,
    Config,
    DEFAULT_CONFIG,
    GroupElement,
    SignVector,
    bruhat_lu,
    iwasawa_kan,
    leading_minors,
)
from .flag_boundary import Flag, act, flag_of, is_transverse, k_iota


@dataclass(frozen=True)
class Section:
    """Bruhat cross-section descriptor.

    kind: "unipotent" or "compact"; base: the flag whose opposite Bruhat
    cell is the domain; offset: right AM translation; translate: optional
    left translation by an element of K (h.s with (h.s)(xi) = h s(h^-1 xi)).
    """

    kind: str
    base: Flag
    offset: AMElement
    translate: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("unipotent", "compact"):
            raise ValueError("section kind must be 'unipotent' or 'compact'")
        if self.translate is not None:
            t = np.asarray(self.translate, dtype=float)
            t.setflags(write=False)
            object.__setattr__(self, "translate", t)

    @property
    def n(self) -> int:
        return self.base.n

    def with_offset(self, x: AMElement) -> "Section":
        return Section(self.kind, self.base, self.offset * x, self.translate)


def unipotent_section(base: Flag) -> Section:
    return Section("unipotent", base, AMElement.identity(base.n))


def compact_section(base: Flag) -> Section:
    return Section("compact", base, AMElement.identity(base.n))


def _base_frame(base: Flag) -> np.ndarray:
    """The h in K with h . (opposite of the standard flag) = base."""
    return base.rep @ k_iota(base.n).T


def _unipotent_at_e(rep: np.ndarray, config: Config) -> np.ndarray:
    """[e](zeta): the unique u in N- with u . (standard flag) = zeta."""
    try:
        lower, _, _ = bruhat_lu(GroupElement(rep), config)
    except NotInBigCell as exc:
        raise OutOfDomain("flag is not transverse to the section base") from exc
    return lower


def eval_section(s: Section, xi: Flag, config: Config = DEFAULT_CONFIG) -> GroupElement:
    """Evaluate the section at xi; the result projects to xi under flag_of."""
    rep = xi.rep
    if s.translate is not None:
        rep = s.translate.T @ rep
    h = _base_frame(s.base)
    value = h @ _unipotent_at_e(h.T @ rep, config)
    if s.kind == "compact":
        value = iwasawa_kan(GroupElement(value), config).k
    value = value @ s.offset.matrix()
    if s.translate is not None:
        value = s.translate @ value
    return GroupElement(value)


def _upper_am_part(mat: np.ndarray, tol: float, context: str) -> AMElement:
    """Read the AM part of a matrix expected in (AM)N (upper triangular)."""
    n = mat.shape[0]
    strict_lower = np.linalg.norm(np.tril(mat, -1))
    scale = max(1.0, float(np.abs(mat).max()))
    if strict_lower > tol * scale:
        raise OutOfDomain(
            f"{context}: strict lower part {strict_lower:.3e} does not vanish"
        )
    diag = np.diag(mat)
    return AMElement(
        CartanVector(np.log(np.abs(diag))),
        SignVector(tuple(int(v) for v in np.sign(diag))),
    )


def transition(s: Section, s2: Section, xi: Flag, config: Config = DEFAULT_CONFIG) -> AMElement:
    """T_{s,s2}(xi): the unique AM element with s2(xi) in s(xi) N T."""
    d = np.linalg.solve(eval_section(s, xi, config).entries, eval_section(s2, xi, config).entries)
    triple = iwasawa_kan(GroupElement(d), config)
    # k-part must be a diagonal sign matrix for T to land in AM
    k_off = np.linalg.norm(triple.k - np.diag(np.diag(triple.k)))
    if k_off > 1e-7:
        raise OutOfDomain(f"transition has non-AM part (off-diagonal {k_off:.3e})")
    signs = SignVector(tuple(int(v) for v in np.sign(np.diag(triple.k))))
    return AMElement(triple.a, signs)


def cocycle(
    s1: Section,
    s0: Section,
    g: GroupElement,
    xi: Flag,
    config: Config = DEFAULT_CONFIG,
) -> AMElement:
    """beta_{s1,s0}(g, xi): the unique AM element with
    g s0(xi) in s1(g xi) beta N."""
    gxi = act(g, xi, config)
    d = np.linalg.solve(
        eval_section(s1, gxi, config).entries, g.entries @ eval_section(s0, xi, config).entries
    )
    return _upper_am_part(d, 1e-9 * 10, "cocycle")


def iwasawa_cocycle(g: GroupElement, xi: Flag, config: Config = DEFAULT_CONFIG) -> CartanVector:
    """sigma(g, xi): the a-part of the KAN decomposition of g * rep(xi)."""
    return iwasawa_kan(GroupElement(g.entries @ xi.rep), config).a


@dataclass(frozen=True)
class BHCoordinates:
    """Bruhat-Hopf coordinates (xi, xi_check; x) relative to a section."""

    xi: Flag
    xi_check: Flag
    x: AMElement
    section: Section


def to_bh(g: GroupElement, s: Section, config: Config = DEFAULT_CONFIG) -> BHCoordinates:
    """(g eta0, g eta0_check ; x)_s with g = s(g eta0) u x, u in N, x in AM."""
    xi = flag_of(g, config)
    xi_check = flag_of(GroupElement(g.entries @ k_iota(g.n)), config)
    d = np.linalg.solve(eval_section(s, xi, config).entries, g.entries)
    x = _upper_am_part(d, 1e-9 * 10, "to_bh")
    return BHCoordinates(xi, xi_check, x, s)


def _n_part_from_flags(
    s: Section, xi: Flag, xi_check: Flag, config: Config
) -> np.ndarray:
    """The unique u in N with s(xi) u . (opposite standard flag) = xi_check."""
    n = xi.n
    e = np.linalg.solve(eval_section(s, xi, config).entries, xi_check.rep) @ k_iota(n).T
    # e = u * (lower); flip to read the unit upper factor off a plain LU
    flipped = e[::-1, ::-1]
    try:
        lower, x, upper = bruhat_lu(GroupElement(_project_det(flipped)), config)
    except NotInBigCell as exc:
        raise NotTransverse("xi_check is not transverse to xi") from exc
    return lower[::-1, ::-1]


def _project_det(mat: np.ndarray) -> np.ndarray:
    det = np.linalg.det(mat)
    if det < 0:
        raise NotTransverse("comparison matrix has negative determinant")
    return mat / det ** (1.0 / mat.shape[0])


def from_bh(c: BHCoordinates, config: Config = DEFAULT_CONFIG) -> GroupElement:
    """Inverse of to_bh: reconstruct g = s(xi) u x."""
    u = _n_part_from_flags(c.section, c.xi, c.xi_check, config)
    return GroupElement(
        eval_section(c.section, c.xi, config).entries @ u @ c.x.matrix()
    )


def compact_coords(k: np.ndarray, s: Section, config: Config = DEFAULT_CONFIG):
    """Local K-coordinates (xi ; signs)_s of an orthogonal matrix k."""
    if s.kind != "compact":
        raise ValueError("compact_coords requires a compact section")
    kg = GroupElement(_project_det(np.asarray(k, dtype=float)))
    xi = flag_of(kg, config)
    d = np.linalg.solve(eval_section(s, xi, config).entries, kg.entries)
    off = np.linalg.norm(d - np.diag(np.diag(d)))
    if off > 1e-7:
        raise OutOfDomain(f"k is outside the chart (off-diagonal {off:.3e})")
    return xi, SignVector(tuple(int(v) for v in np.sign(np.diag(d))))


def permutation_flag(n: int, perm: tuple) -> Flag:
    """Flag of the permutation frame for perm (det-corrected into SO(n))."""
    p = np.zeros((n, n))
    for col, row in enumerate(perm):
        p[row, col] = 1.0
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    return Flag(p)


def covering_family(n: int, kind: str = "compact") -> list:
    """The default covering family: one section per permutation flag."""
    maker = compact_section if kind == "compact" else unipotent_section
    return [maker(permutation_flag(n, perm)) for perm in itertools.permutations(range(n))]


def best_section(family: list, xi: Flag) -> Section:
    """The family member whose chart holds xi with the largest minor margin."""
    best, best_margin = None, -1.0
    for s in family:
        mat = k_iota(xi.n) @ s.base.rep.T @ xi.rep
        margin = float(np.min(np.abs(leading_minors(mat))))
        if margin > best_margin:
            best, best_margin = s, margin
    return best
