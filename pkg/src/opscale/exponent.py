"""Scaling exponents in real Jordan form.

An exponent ``E = P D P^{-1}`` is given by its Jordan blocks plus an optional
similarity ``P``.  Cells are lower-triangular (ones on the subdiagonal) and
rotation blocks carry ``Lambda = [[a, -b], [b, a]]`` on the diagonal with
identity blocks below it.  Powers ``c^E = exp(ln(c) E)`` are evaluated block
by block in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

CELL = "cell"
ROTATION = "rotation"


@dataclass(frozen=True)
class JordanBlock:
    kind: str
    a: float
    size: int = 1
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in (CELL, ROTATION):
            raise DomainError(f"unknown block kind {self.kind!r}")
        if not self.a > 1.0:
            raise DomainError(f"block real part a={self.a} must exceed 1")
        if self.size < 1:
            raise DomainError("block size must be >= 1")
        if self.kind == ROTATION:
            if self.b == 0.0:
                raise DomainError("rotation block needs b != 0")
            if self.size % 2:
                raise DomainError("rotation block size must be even")
        elif self.b != 0.0:
            raise DomainError("cell block cannot carry an imaginary part")

    @property
    def size_tilde(self) -> int:
        return self.size

    @property
    def size_l(self) -> int:
        """Multiplicity ``l_k`` entering the log corrections."""
        return self.size if self.kind == CELL else self.size // 2

    def matrix(self) -> np.ndarray:
        n = self.size
        if self.kind == CELL:
            return self.a * np.eye(n) + np.eye(n, k=-1)
        m = n // 2
        lam = np.array([[self.a, -self.b], [self.b, self.a]])
        return np.kron(np.eye(m), lam) + np.kron(np.eye(m, k=-1), np.eye(2))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "a": float(self.a), "size": int(self.size)}
        if self.kind == ROTATION:
            d["b"] = float(self.b)
        return d


def _block_exp(block: JordanBlock, s: np.ndarray) -> np.ndarray:
    """exp(s * J) for an array of scalars ``s``; shape ``s.shape + (n, n)``."""
    n = block.size
    out = np.zeros(s.shape + (n, n))
    scale = np.exp(block.a * s)
    if block.kind == CELL:
        term = np.ones_like(s)
        for k in range(n):
            if k:
                term = term * s / k
            idx = np.arange(k, n)
            out[..., idx, idx - k] = (scale * term)[..., None]
        return out
    m = n // 2
    c, si = np.cos(block.b * s), np.sin(block.b * s)
    rot = np.stack([np.stack([c, -si], -1), np.stack([si, c], -1)], -2)
    rot = rot * scale[..., None, None]
    term = np.ones_like(s)
    for k in range(m):
        if k:
            term = term * s / k
        piece = rot * term[..., None, None]
        for i in range(k, m):
            j = i - k
            out[..., 2 * i:2 * i + 2, 2 * j:2 * j + 2] = piece
    return out


@dataclass(frozen=True, eq=False)
class ExponentSpec:
    """Matrix exponent ``E`` described by Jordan blocks and a similarity.

    Blocks are reordered to nondecreasing ``a`` at construction; the columns
    of ``P`` move with their blocks.
    """

    blocks: tuple
    P: np.ndarray | None = None
    _Pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise DomainError("at least one Jordan block is required")
        for blk in blocks:
            if not isinstance(blk, JordanBlock):
                raise DomainError(f"expected JordanBlock, got {type(blk).__name__}")
        n = sum(b.size for b in blocks)
        P = np.eye(n) if self.P is None else np.array(self.P, dtype=float)
        if P.shape != (n, n):
            raise DomainError(f"P has shape {P.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(P)):
            raise DomainError("P has non-finite entries")
        rcond = 1.0 / np.linalg.cond(P) if np.linalg.matrix_rank(P) == n else 0.0
        if not rcond >= 1e-10:
            raise DomainError(f"P is numerically singular (reciprocal condition {rcond:.3g})")
        order = sorted(range(len(blocks)), key=lambda i: blocks[i].a)
        if order != list(range(len(blocks))):
            starts = np.cumsum([0] + [b.size for b in blocks])
            cols = np.concatenate([np.arange(starts[i], starts[i + 1]) for i in order])
            P = P[:, cols]
            blocks = tuple(blocks[i] for i in order)
        P.setflags(write=False)
        Pinv = np.linalg.inv(P)
        Pinv.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "_Pinv", Pinv)

    # ------------------------------------------------------------------ basics
    @property
    def N(self) -> int:
        return sum(b.size for b in self.blocks)

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def Q(self) -> float:
        return float(sum(b.a * b.size for b in self.blocks))

    @property
    def a(self) -> np.ndarray:
        return np.array([b.a for b in self.blocks])

    @property
    def P_inv(self) -> np.ndarray:
        return self._Pinv

    @property
    def offsets(self) -> np.ndarray:
        return np.cumsum([0] + [b.size for b in self.blocks])

    @property
    def D(self) -> np.ndarray:
        n = self.N
        out = np.zeros((n, n))
        for blk, o in zip(self.blocks, self.offsets):
            out[o:o + blk.size, o:o + blk.size] = blk.matrix()
        return out

    @property
    def is_canonical(self) -> bool:
        return bool(np.array_equal(self.P, np.eye(self.N)))

    def exp_D(self, s) -> np.ndarray:
        """``exp(s D)`` for scalar or array ``s``; shape ``s.shape + (N, N)``."""
        s = np.asarray(s, dtype=float)
        n = self.N
        out = np.zeros(s.shape + (n, n))
        for blk, o in zip(self.blocks, self.offsets):
            out[..., o:o + blk.size, o:o + blk.size] = _block_exp(blk, s)
        return out

    def exp_E(self, s) -> np.ndarray:
        """``exp(s E) = P exp(s D) P^{-1}``."""
        ed = self.exp_D(s)
        if self.is_canonical:
            return ed
        return self.P @ ed @ self.P_inv

    # ------------------------------------------------------------ conversions
    def transpose(self) -> "ExponentSpec":
        """Spec for ``E'``, the transpose of ``E``.

        ``D^T = R D~ R`` where ``D~`` has every ``b`` negated and ``R`` reverses
        each block (sub-blocks of size 2 for rotations), so
        ``E' = (P^{-T} R) D~ (P^{-T} R)^{-1}``.
        """
        n = self.N
        perm = np.empty(n, dtype=int)
        new_blocks = []
        for blk, o in zip(self.blocks, self.offsets):
            if blk.kind == CELL:
                perm[o:o + blk.size] = o + np.arange(blk.size)[::-1]
                new_blocks.append(blk)
            else:
                m = blk.size // 2
                idx = []
                for i in reversed(range(m)):
                    idx += [o + 2 * i, o + 2 * i + 1]
                perm[o:o + blk.size] = idx
                new_blocks.append(JordanBlock(ROTATION, blk.a, blk.size, -blk.b))
        R = np.eye(n)[:, perm]
        return ExponentSpec(tuple(new_blocks), self.P_inv.T @ R)

    def to_dict(self) -> dict:
        d = {"blocks": [b.to_dict() for b in self.blocks]}
        if not self.is_canonical:
            d["P"] = [[float(v) for v in row] for row in self.P]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExponentSpec":
        if "blocks" not in d:
            raise DomainError("exponent config needs a 'blocks' list")
        blocks = []
        for item in d["blocks"]:
            kind = item.get("kind", CELL)
            blocks.append(JordanBlock(kind, float(item["a"]), int(item.get("size", 1 if kind == CELL else 2)),
                                      float(item.get("b", 0.0))))
        P = d.get("P")
        return cls(tuple(blocks), None if P is None else np.array(P, dtype=float))

    @classmethod
    def diagonal(cls, a: Iterable[float]) -> "ExponentSpec":
        return cls(tuple(JordanBlock(CELL, float(x), 1) for x in a))

    @classmethod
    def from_matrix(cls, E, tol: float = 1e-8) -> "ExponentSpec":
        """Build a spec from a diagonalizable real matrix.

        Eigenvalues closer than ``tol`` are clustered; defective input (an
        ill-conditioned eigenvector basis) is refused.
        """
        E = np.asarray(E, dtype=float)
        n = E.shape[0]
        if E.shape != (n, n):
            raise DomainError("E must be square")
        w, V = np.linalg.eig(E)
        if np.linalg.matrix_rank(V, tol=tol) < n or np.linalg.cond(V) > 1.0 / tol:
            raise DomainError("matrix is defective or too close to defective; supply Jordan blocks")
        for i in range(n):
            for j in range(i + 1, n):
                if 0 < abs(w[i] - w[j]) < tol:
                    raise DomainError("eigenvalues cluster within tolerance; supply Jordan blocks")
        blocks, cols = [], []
        used = np.zeros(n, dtype=bool)
        for i in np.argsort(w.real, kind="stable"):
            if used[i]:
                continue
            used[i] = True
            lam, v = w[i], V[:, i]
            if abs(lam.imag) <= tol:
                blocks.append(JordanBlock(CELL, float(lam.real), 1))
                vr = v.real if np.linalg.norm(v.real) >= np.linalg.norm(v.imag) else v.imag
                cols.append(vr / np.linalg.norm(vr))
                continue
            j = next(k for k in range(n) if not used[k] and abs(w[k] - np.conj(lam)) <= max(tol, 1e-12 * abs(lam)))
            used[j] = True
            if lam.imag < 0:
                lam, v = np.conj(lam), np.conj(v)
            blocks.append(JordanBlock(ROTATION, float(lam.real), 2, float(lam.imag)))
            cols += [v.real, -v.imag]
        return cls(tuple(blocks), np.column_stack(cols))


def assemble_matrix(spec: ExponentSpec) -> np.ndarray:
    return spec.P @ spec.D @ spec.P_inv


def matrix_power(spec: ExponentSpec, c: float) -> np.ndarray:
    """``c^E`` in closed form."""
    if not c > 0:
        raise DomainError(f"c^E needs c > 0, got {c}")
    return spec.exp_E(math.log(c))


def project_invariant(spec: ExponentSpec, x, j: int) -> np.ndarray:
    """Component of ``x`` in the invariant subspace ``W_j`` (``j`` is 1-based)."""
    if not 1 <= j <= spec.p:
        raise DomainError(f"block index {j} outside 1..{spec.p}")
    x = np.asarray(x, dtype=float)
    y = x @ spec.P_inv.T
    o = spec.offsets
    mask = np.zeros(spec.N)
    mask[o[j - 1]:o[j]] = 1.0
    return (y * mask) @ spec.P.T


@dataclass(frozen=True)
class HVector:
    H: tuple

    def __post_init__(self):
        H = tuple(float(h) for h in self.H)
        if not H or any(not 0.0 < h < 1.0 for h in H):
            raise DomainError("H entries must lie in (0, 1)")
        if any(H[i] > H[i + 1] for i in range(len(H) - 1)):
            raise DomainError("H must be nondecreasing")
        object.__setattr__(self, "H", H)

    def __len__(self):
        return len(self.H)

    def __iter__(self):
        return iter(self.H)

    def as_array(self) -> np.ndarray:
        return np.array(self.H)


def h_vector(spec: ExponentSpec) -> HVector:
    """Assign ``1/a_p`` to the first ``l~_p`` slots, then ``1/a_{p-1}`` and so on."""
    H: list[float] = []
    for blk in reversed(spec.blocks):
        H += [1.0 / blk.a] * blk.size
    return HVector(tuple(H))


def random_spec(rng: np.random.Generator, max_dim: int = 6, a_range: Sequence[float] = (1.05, 4.0),
                conjugate: bool = True) -> ExponentSpec:
    """Random valid spec for property tests."""
    n_target = int(rng.integers(1, max_dim + 1))
    blocks, n = [], 0
    while n < n_target:
        room = n_target - n
        a = float(rng.uniform(*a_range))
        if room >= 2 and rng.random() < 0.35:
            size = 2 * int(rng.integers(1, room // 2 + 1))
            blocks.append(JordanBlock(ROTATION, a, size, float(rng.uniform(0.2, 3.0) * rng.choice([-1, 1]))))
        else:
            size = int(rng.integers(1, room + 1))
            blocks.append(JordanBlock(CELL, a, size))
        n += size
    P = None
    if conjugate:
        while True:
            P = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
            if np.linalg.cond(P) < 50:
                break
    return ExponentSpec(tuple(blocks), P)
