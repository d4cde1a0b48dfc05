"""Closure, block structure and density machinery for orthogonal parts.

The transformation group of an IFS is the group generated by the rotation
parts of its maps.  Finiteness is decided by computing the semigroup closure
up to a cap; the infinite verdict is a certificate of exceeding the cap, not
a proof of infinitude, and is documented as such.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import tolerances
from .geometry import GeometryError, NumericFailureError, orthogonality_defect

TWO_PI = 2.0 * math.pi


class GroupClosureError(GeometryError):
    pass


@dataclass(frozen=True)
class TransformationGroup:
    """Result of the closure computation over the generators.

    ``elements`` is a canonically ordered tuple when the closure is finite and
    None when the cap was exceeded; ``witness_count`` then records how many
    distinct elements were seen before giving up.
    """

    generators: tuple[np.ndarray, ...]
    elements: tuple[np.ndarray, ...] | None
    witness_count: int
    tolerance: float

    @property
    def is_finite(self) -> bool:
        return self.elements is not None

    @property
    def order(self) -> int:
        if self.elements is None:
            raise GroupClosureError("group closure exceeded the cap; no finite order")
        return len(self.elements)

    def index_of(self, matrix: np.ndarray) -> int:
        """Index of the element matching the matrix within tolerance.

        Raises when there is no match or more than one match.
        """
        if self.elements is None:
            raise GroupClosureError("infinite verdict has no element list")
        stack = np.stack(self.elements)
        dist = np.abs(stack - matrix[None]).max(axis=(1, 2))
        hits = np.flatnonzero(dist <= self.tolerance)
        if hits.size == 0:
            raise GroupClosureError("matrix matches no group element within tolerance")
        if hits.size > 1:
            raise GroupClosureError(
                f"matrix matches {hits.size} group elements; tolerance too loose"
            )
        return int(hits[0])


def _canonical_order(elements: list[np.ndarray]) -> tuple[np.ndarray, ...]:
    flat = np.stack([e.ravel() for e in elements])
    order = np.lexsort(flat.T[::-1])
    return tuple(elements[i] for i in order)


def group_closure(generators, tolerance: float = 1e-6, closure_cap: int = 5000) -> TransformationGroup:
    """Semigroup closure of the generators (and their transposes).

    Returns a finite element list closed under generator multiplication, or
    an infinite verdict once more than ``closure_cap`` distinct elements
    accumulate.
    """
    gens = [np.array(g, dtype=float) for g in generators]
    if not gens:
        raise GroupClosureError("need at least one generator")
    if closure_cap < 1:
        raise GroupClosureError("closure_cap must be >= 1")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise GroupClosureError("generators must share their dimension")
        if orthogonality_defect(g) > tolerances.tau_orth():
            raise GroupClosureError("generator is not orthogonal")
    multipliers = gens + [g.T.copy() for g in gens]

    elements: list[np.ndarray] = [np.eye(d)]
    stack = np.empty((closure_cap, d, d))
    stack[0] = np.eye(d)
    frontier = [np.eye(d)]
    while frontier:
        candidates = [m @ f for f in frontier for m in multipliers]
        frontier = []
        for c in candidates:
            dist = np.abs(stack[: len(elements)] - c[None]).max(axis=(1, 2))
            if dist.min() > tolerance:
                if len(elements) >= closure_cap:
                    return TransformationGroup(
                        tuple(gens), None, len(elements) + 1, tolerance
                    )
                stack[len(elements)] = c
                elements.append(c)
                frontier.append(c)
    for e in elements:
        e.setflags(write=False)
    return TransformationGroup(
        tuple(gens), _canonical_order(elements), len(elements), tolerance
    )


class BlockKind(enum.Enum):
    PLUS_ONE = "+1"
    MINUS_ONE = "-1"
    ROTATION = "rotation"


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    angle: float = 0.0  # in [0, 2*pi), meaningful for ROTATION blocks only

    @property
    def size(self) -> int:
        return 2 if self.kind is BlockKind.ROTATION else 1


@dataclass(frozen=True)
class BlockForm:
    basis_change: np.ndarray
    blocks: tuple[Block, ...]

    def reassemble(self) -> np.ndarray:
        parts = []
        for b in self.blocks:
            if b.kind is BlockKind.PLUS_ONE:
                parts.append(np.eye(1))
            elif b.kind is BlockKind.MINUS_ONE:
                parts.append(-np.eye(1))
            else:
                c, s = math.cos(b.angle), math.sin(b.angle)
                parts.append(np.array([[c, -s], [s, c]]))
        core = scipy.linalg.block_diag(*parts)
        q = self.basis_change
        return q @ core @ q.T

    def power(self, n: int) -> np.ndarray:
        """T^n computed block-wise (cheap for large n)."""
        parts = []
        for b in self.blocks:
            if b.kind is BlockKind.PLUS_ONE:
                parts.append(np.eye(1))
            elif b.kind is BlockKind.MINUS_ONE:
                parts.append(np.eye(1) * (1.0 if n % 2 == 0 else -1.0))
            else:
                a = (b.angle * n) % TWO_PI
                c, s = math.cos(a), math.sin(a)
                parts.append(np.array([[c, -s], [s, c]]))
        core = scipy.linalg.block_diag(*parts)
        q = self.basis_change
        return q @ core @ q.T


def block_diagonalize(t: np.ndarray) -> BlockForm:
    """Real normal form of an orthogonal matrix: [1], [-1] and rotation blocks."""
    t = np.asarray(t, dtype=float)
    if orthogonality_defect(t) > tolerances.tau_orth():
        raise GeometryError("matrix is not orthogonal")
    d = t.shape[0]
    # An orthogonal matrix is normal, so its real Schur form is block diagonal.
    core, q = scipy.linalg.schur(t, output="real")
    blocks: list[Block] = []
    i = 0
    off_tol = 1e-7
    while i < d:
        if i + 1 < d and abs(core[i + 1, i]) > off_tol:
            angle = math.atan2(core[i + 1, i], core[i, i]) % TWO_PI
            blocks.append(Block(BlockKind.ROTATION, angle))
            i += 2
        elif core[i, i] > 0:
            blocks.append(Block(BlockKind.PLUS_ONE))
            i += 1
        else:
            blocks.append(Block(BlockKind.MINUS_ONE))
            i += 1
    form = BlockForm(q, tuple(blocks))
    residual = np.abs(form.reassemble() - t).max()
    if residual > 10.0 * tolerances.tau_orth():
        raise NumericFailureError(
            f"block reassembly residual {residual:.3e} exceeds tolerance"
        )
    return form


def angle_order(alpha: float, max_denominator: int = 10**6, tol: float | None = None) -> int | None:
    """Order k when alpha is (close to) a rational multiple 2*pi*p/k, else None.

    Returns the smallest k <= max_denominator with |alpha/(2 pi) - p/k| < tol/k
    found along the continued-fraction convergents; ties at the tolerance
    boundary resolve to the finite order.
    """
    if tol is None:
        tol = tolerances.TAU_ANGLE
    x = (alpha % TWO_PI) / TWO_PI
    # Continued-fraction convergents p/q of x.
    p_prev, q_prev = 1, 0
    p, q = int(math.floor(x)), 1
    rem = x - math.floor(x)
    for _ in range(64):
        if q <= max_denominator and abs(x - p / q) < tol / q:
            return q
        if rem == 0.0 or q > max_denominator:
            break
        rem = 1.0 / rem
        a = int(math.floor(rem))
        rem -= a
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
    return None


def power_witness(t: np.ndarray, k: int, z_cap: int = 10**5):
    """Smallest z <= z_cap minimizing ||T^(k z) - T||, restricted to z = 1 mod k0.

    Returns (z, residual).  The restriction keeps the finite-order blocks
    matching exactly, so the residual is driven by the irrational angles only.
    """
    form = block_diagonalize(np.asarray(t, dtype=float))
    finite_orders = []
    irrational = []
    for b in form.blocks:
        if b.kind is BlockKind.MINUS_ONE:
            finite_orders.append(2)
        elif b.kind is BlockKind.ROTATION:
            order = angle_order(b.angle)
            if order is None:
                irrational.append(b.angle)
            else:
                finite_orders.append(order)
    k0 = math.lcm(*finite_orders) if finite_orders else 1
    # z must satisfy k z = 1 (mod k0) for the finite blocks to reproduce T.
    if math.gcd(k % k0 if k0 > 1 else 0, k0) != 1 and k0 > 1:
        raise NumericFailureError("k is not invertible modulo the finite block order")
    zs = np.arange(1, z_cap + 1)
    if k0 > 1:
        zs = zs[(k * zs) % k0 == 1]
    if zs.size == 0:
        raise NumericFailureError("no admissible witness exponent below the cap")
    if not irrational:
        z = int(zs[0])
        return z, float(np.abs(form.power(k * z) - np.asarray(t, dtype=float)).max())
    residual = np.zeros(zs.shape)
    for alpha in irrational:
        delta = (np.asarray(zs, dtype=float) * k - 1.0) * alpha
        residual = np.maximum(residual, 2.0 * np.abs(np.sin(delta / 2.0)))
    best = int(np.argmin(residual))
    return int(zs[best]), float(residual[best])


def kronecker_power(
    t: np.ndarray,
    n: int,
    z_cap: int = 10**5,
    delta_witness: float = 0.05,
    max_denominator: int = 10**6,
) -> int:
    """An exponent k >= N such that the powers of T^k come back near T.

    k = 2^N * (product of finite rotation-block orders) + 1; the density of
    the group generated by T^k inside the closure of <T> is certified
    constructively by a witness z <= z_cap with ||T^(k z) - T|| < delta_witness.
    """
    if n < 1:
        raise GeometryError("N must be >= 1")
    t = np.asarray(t, dtype=float)
    form = block_diagonalize(t)
    k0 = 2**n
    for b in form.blocks:
        if b.kind is BlockKind.ROTATION:
            order = angle_order(b.angle, max_denominator=max_denominator)
            if order is not None:
                k0 *= order
    k = k0 + 1
    z, residual = power_witness(t, k, z_cap=z_cap)
    if residual >= delta_witness:
        raise NumericFailureError(
            f"density witness search failed: best residual {residual:.3e} at z={z}"
        )
    return k


class OrbitDensity(enum.Enum):
    DENSE = "dense"
    NOT_DENSE = "not_dense"
    UNKNOWN = "unknown"


def orbit_dense_classification(group: TransformationGroup, l: int) -> OrbitDensity:
    """Whether the group orbit of an l-plane is dense in the Grassmannian.

    Decidable only for d = 2, l = 1, where density is equivalent to the group
    being infinite; a finite group is never dense; otherwise unknown (an
    infinite group in d >= 3 need not act densely).
    """
    d = group.generators[0].shape[0]
    if not 1 <= l < d:
        raise GeometryError(f"need 1 <= l < d, got l={l}, d={d}")
    if group.is_finite:
        return OrbitDensity.NOT_DENSE
    if d == 2 and l == 1:
        return OrbitDensity.DENSE
    return OrbitDensity.UNKNOWN


def rotation_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Operator-norm distance (largest singular value of the difference)."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.linalg.norm(diff, 2))


def planar_rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])
