"""Exact-shape matrix decompositions of SL(n, R).

Implements the KAN and KAN- Iwasawa decompositions, the Cartan KA+K
decomposition, the Jordan projection, and the Bruhat LU factorization
g = u_minus * diag(m) * exp(a) * u_plus for elements of the big cell.

All outputs follow a deterministic sign gauge so repeated calls are
bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import NonInvertible, NotInBigCell


@dataclass(frozen=True)
class Config:
    """Central tolerance record; every operation accepts an override."""

    tol_det: float = 1e-9        # relative determinant tolerance
    tol_minor: float = 1e-10     # Bruhat pivot threshold, relative to max |entry|
    tol_recon: float = 1e-9      # reconstruction tolerance
    tol_id: float = 1e-8         # identity-check tolerance
    tol_lox: float = 1e-6        # relative eigenvalue-moduli separation


DEFAULT_CONFIG = Config()


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(arr, dtype=float))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GroupElement:
    """An n x n real matrix of determinant 1."""

    entries: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        mat = _freeze(self.entries)
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "n", mat.shape[0])
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise ValueError("GroupElement requires a square matrix of size >= 2")
        if not np.all(np.isfinite(mat)):
            raise ValueError("GroupElement entries must be finite")
        det = float(np.linalg.det(mat))
        scale = max(1.0, float(np.abs(mat).max()) ** mat.shape[0])
        if abs(det - 1.0) > DEFAULT_CONFIG.tol_det * scale:
            raise ValueError(f"determinant {det} is not 1 within tolerance")

    def inv(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.entries))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.entries @ other.entries)


def project_to_sl(mat: np.ndarray) -> GroupElement:
    """Scale (and sign-fix) an invertible matrix onto det = 1."""
    mat = np.asarray(mat, dtype=float).copy()
    det = np.linalg.det(mat)
    if det == 0 or not np.isfinite(det):
        raise NonInvertible("matrix is singular")
    if det < 0:
        mat[:, 0] = -mat[:, 0]
        det = -det
    mat /= det ** (1.0 / mat.shape[0])
    return GroupElement(mat)


@dataclass(frozen=True)
class CartanVector:
    """Element of the Cartan subalgebra: length-n vector summing to 0."""

    coords: np.ndarray
    tag: str | None = None  # None | "chamber_plus" | "chamber_plus_plus"

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        # project out the numerical drift of the trace-zero constraint
        coords = coords - coords.mean()
        object.__setattr__(self, "coords", _freeze(coords))
        if abs(self.coords.sum()) > 1e-10:
            raise ValueError("CartanVector coordinates must sum to 0")
        diffs = np.diff(self.coords)
        if self.tag == "chamber_plus" and np.any(diffs > 1e-12):
            raise ValueError("chamber_plus requires non-increasing coordinates")
        if self.tag == "chamber_plus_plus" and np.any(diffs >= 0):
            raise ValueError("chamber_plus_plus requires strictly decreasing coordinates")

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class SignVector:
    """Diagonal sign matrix in SO(n): signs in {+1,-1} with product +1."""

    signs: tuple

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        object.__setattr__(self, "signs", signs)
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        if int(np.prod(signs)) != 1:
            raise ValueError("product of signs must be +1")

    @property
    def n(self) -> int:
        return len(self.signs)

    def __mul__(self, other: "SignVector") -> "SignVector":
        return SignVector(tuple(a * b for a, b in zip(self.signs, other.signs)))

    def matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.signs, dtype=float))

    @staticmethod
    def identity(n: int) -> "SignVector":
        return SignVector((1,) * n)


_SIGN_VECTOR_CACHE: dict = {}


def sign_vectors(n: int):
    """All 2^(n-1) sign vectors with product +1, in a fixed order."""
    cached = _SIGN_VECTOR_CACHE.get(n)
    if cached is not None:
        return cached
    out = []
    for bits in range(1 << (n - 1)):
        head = tuple(-1 if (bits >> i) & 1 else 1 for i in range(n - 1))
        out.append(SignVector(head + (int(np.prod(head)),)))
    _SIGN_VECTOR_CACHE[n] = out
    return out


@dataclass(frozen=True)
class AMElement:
    """Element of AM = (positive diagonal, sign diagonal); group law is componentwise."""

    a: CartanVector
    m: SignVector

    def __post_init__(self):
        if self.a.n != self.m.n:
            raise ValueError("a and m must have matching size")

    @property
    def n(self) -> int:
        return self.a.n

    @staticmethod
    def identity(n: int) -> "AMElement":
        return AMElement(CartanVector(np.zeros(n)), SignVector.identity(n))

    def __mul__(self, other: "AMElement") -> "AMElement":
        return AMElement(CartanVector(self.a.coords + other.a.coords), self.m * other.m)

    def inv(self) -> "AMElement":
        return AMElement(CartanVector(-self.a.coords), self.m)

    def __pow__(self, k: int) -> "AMElement":
        m = self.m if k % 2 else SignVector.identity(self.n)
        return AMElement(CartanVector(k * self.a.coords), m)

    def matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.m.signs, dtype=float) * np.exp(self.a.coords))


def am_distance(x: AMElement, y: AMElement) -> float:
    """Distance on AM: Euclidean on A within a connected component, +inf across."""
    if x.m.signs != y.m.signs:
        return float("inf")
    return float(np.linalg.norm(x.a.coords - y.a.coords))


@dataclass(frozen=True)
class IwasawaTriple:
    """(k, a, u) with k in SO(n), a in the Cartan subalgebra, u unitriangular."""

    k: np.ndarray
    a: CartanVector
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", _freeze(self.k))
        object.__setattr__(self, "u", _freeze(self.u))

    def reconstruct(self) -> np.ndarray:
        return self.k @ np.diag(np.exp(self.a.coords)) @ self.u


def iwasawa_kan(g: GroupElement, config: Config = DEFAULT_CONFIG) -> IwasawaTriple:
    """g = k exp(a) u with k in SO(n), u unit upper-triangular."""
    q, r = np.linalg.qr(g.entries)
    diag = np.diag(r)
    if np.any(diag == 0) or not np.all(np.isfinite(r)):
        raise NonInvertible("QR factor has a zero diagonal entry")
    d = np.sign(diag)
    k = q * d[np.newaxis, :]
    r = r * d[:, np.newaxis]
    a = CartanVector(np.log(np.diag(r)))
    u = r / np.diag(r)[:, np.newaxis]
    return IwasawaTriple(k, a, u)


def _flip(mat: np.ndarray) -> np.ndarray:
    """Conjugation by the antidiagonal permutation: reverse rows and columns."""
    return mat[::-1, ::-1]


def iwasawa_kan_minus(g: GroupElement, config: Config = DEFAULT_CONFIG) -> IwasawaTriple:
    """g = k exp(a) u with u unit lower-triangular, via the antidiagonal flip."""
    t = iwasawa_kan(GroupElement(_flip(g.entries)), config)
    return IwasawaTriple(_flip(t.k), CartanVector(t.a.coords[::-1]), _flip(t.u))


def cartan_kak(g: GroupElement, config: Config = DEFAULT_CONFIG):
    """g = k1 exp(a) k2 with a non-increasing (singular values) and k1, k2 in SO(n)."""
    u, s, vt = np.linalg.svd(g.entries)
    if np.linalg.det(u) < 0:
        # det(u) = det(v) since det(g) = 1 > 0; flip both into SO(n)
        u = u.copy()
        vt = vt.copy()
        u[:, -1] = -u[:, -1]
        vt[-1, :] = -vt[-1, :]
    a = CartanVector(np.log(s), tag="chamber_plus")
    return u, a, vt


def jordan_projection(g: GroupElement, config: Config = DEFAULT_CONFIG) -> CartanVector:
    """Non-increasing logs of the eigenvalue moduli, computed on the real Schur form."""
    t, _ = scipy.linalg.schur(g.entries, output="real")
    n = g.n
    logs = []
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            # 2x2 block: complex pair sharing the modulus sqrt(|det|)
            det = t[i, i] * t[i + 1, i + 1] - t[i, i + 1] * t[i + 1, i]
            half = 0.5 * np.log(abs(det))
            logs.extend([half, half])
            i += 2
        else:
            logs.append(np.log(abs(t[i, i])))
            i += 1
    coords = np.sort(np.asarray(logs))[::-1]
    return CartanVector(coords, tag="chamber_plus")


def bruhat_lu(g: GroupElement, config: Config = DEFAULT_CONFIG):
    """g = u_minus diag(m) exp(a) u_plus (Doolittle LU without pivoting).

    Raises NotInBigCell when a leading principal minor is below
    config.tol_minor relative to the largest entry of g.
    """
    n = g.n
    a = g.entries.copy()
    lower = np.eye(n)
    scale = float(np.abs(g.entries).max())
    for k in range(n):
        piv = a[k, k]
        if abs(piv) <= config.tol_minor * scale:
            raise NotInBigCell(k, float(piv))
        factors = a[k + 1:, k] / piv
        lower[k + 1:, k] = factors
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
    diag = np.diag(a).copy()
    signs = SignVector(tuple(int(s) for s in np.sign(diag)))
    x = AMElement(CartanVector(np.log(np.abs(diag))), signs)
    u_plus = np.triu(a) / diag[:, np.newaxis]
    return lower, x, u_plus


def leading_minors(mat: np.ndarray) -> np.ndarray:
    """All leading principal minors det(mat[:k,:k]), k = 1..n."""
    n = mat.shape[0]
    return np.array([np.linalg.det(mat[: k + 1, : k + 1]) for k in range(n)])


def random_group_element(rng: np.random.Generator, n: int) -> GroupElement:
    """Entrywise Gaussian sample projected onto SL(n, R)."""
    while True:
        mat = rng.standard_normal((n, n))
        if abs(np.linalg.det(mat)) > 1e-6:
            return project_to_sl(mat)


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random element of SO(n) (QR of a Gaussian, det-corrected)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))[np.newaxis, :]
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q
