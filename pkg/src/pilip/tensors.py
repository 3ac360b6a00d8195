"""Dense tensors, multilinear operators, Segre points, and pair configurations.

This is the shared substrate: every norm estimator in the package works on
the types defined here.  An n-linear operator T into R^m is stored as a
dense kernel of shape (d1, ..., dn, m) together with the l_r norms carried
by each factor space and by the codomain.  Scalar-valued forms are the
m = 1 case.

All objects are immutable after construction (arrays are frozen), so they
can be shared freely across threads; the operations are pure functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ShapeError",
    "DegeneratePairWarning",
    "DenseTensor",
    "NormSpec",
    "MultilinearOperator",
    "SegrePoint",
    "PairConfiguration",
    "eval_operator",
    "elementary_tensor",
    "vector_norm",
    "dual_exponent",
    "dual_norming_vector",
    "project_to_ball",
    "flatten",
]

VALID_EXPONENTS = (1.0, 2.0, math.inf)


class ShapeError(ValueError):
    """Dimension or mode-partition mismatch."""


class DegeneratePairWarning(UserWarning):
    """A pair with equal elementary tensors was dropped from a configuration."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("entries must be finite")
    a.flags.writeable = False
    return a


def _check_exponent(r: float) -> float:
    r = float(r)
    if r not in VALID_EXPONENTS:
        raise ValueError(f"norm exponent must be 1, 2 or inf, got {r}")
    return r


@dataclass(frozen=True)
class DenseTensor:
    """A real multi-index array in row-major order.

    `shape` lists positive dimensions; `data` is the flat row-major buffer
    of length prod(shape).
    """

    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        shape = tuple(int(d) for d in self.shape)
        if any(d < 1 for d in shape):
            raise ShapeError(f"dimensions must be positive, got {shape}")
        data = _freeze(np.asarray(self.data).reshape(-1))
        if data.size != math.prod(shape):
            raise ShapeError(
                f"data length {data.size} does not match shape {shape} "
                f"(expected {math.prod(shape)})"
            )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "DenseTensor":
        array = np.asarray(array, dtype=float)
        return cls(array.shape, array.reshape(-1))

    @property
    def array(self) -> np.ndarray:
        """Read-only view with the tensor's natural shape."""
        return self.data.reshape(self.shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class NormSpec:
    """l_r exponents for the factor spaces and the codomain, r in {1, 2, inf}."""

    factors: tuple[float, ...]
    codomain: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(_check_exponent(r) for r in self.factors))
        object.__setattr__(self, "codomain", _check_exponent(self.codomain))

    @classmethod
    def all_l2(cls, n: int) -> "NormSpec":
        return cls((2.0,) * n, 2.0)

    def is_all_l2(self) -> bool:
        return all(r == 2.0 for r in self.factors) and self.codomain == 2.0


@dataclass(frozen=True)
class MultilinearOperator:
    """An n-linear operator R^{d1} x ... x R^{dn} -> R^m as a dense kernel.

    The kernel has shape (d1, ..., dn, m); evaluation contracts the first n
    modes against the argument's factors.  `norms.factors[i]` is the l_r
    exponent of factor space i, `norms.codomain` the exponent on R^m.
    """

    kernel: DenseTensor
    norms: NormSpec

    def __post_init__(self):
        if self.kernel.ndim < 2:
            raise ShapeError("kernel needs at least one factor mode plus a codomain mode")
        if len(self.norms.factors) != self.kernel.ndim - 1:
            raise ShapeError(
                f"{len(self.norms.factors)} factor norms for "
                f"{self.kernel.ndim - 1} factor modes"
            )

    @classmethod
    def from_array(cls, array: np.ndarray, norms: NormSpec | None = None) -> "MultilinearOperator":
        array = np.asarray(array, dtype=float)
        if norms is None:
            norms = NormSpec.all_l2(array.ndim - 1)
        return cls(DenseTensor.from_array(array), norms)

    @property
    def n(self) -> int:
        """Number of factor slots."""
        return self.kernel.ndim - 1

    @property
    def m(self) -> int:
        """Codomain dimension."""
        return self.kernel.shape[-1]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.kernel.shape[:-1]

    def __call__(self, x: "SegrePoint") -> np.ndarray:
        return eval_operator(self, x)

    def codomain_norm(self, y: np.ndarray) -> float:
        return vector_norm(y, self.norms.codomain)

    def is_form(self) -> bool:
        return self.m == 1

    def form_kernel(self) -> np.ndarray:
        """Kernel of a scalar form as a (d1, ..., dn) array."""
        if not self.is_form():
            raise ShapeError("operator is not scalar-valued")
        return self.kernel.array[..., 0]

    def pair_with(self, delta: np.ndarray) -> float:
        """Frobenius pairing of a scalar form's kernel with a tensor delta."""
        return float(np.dot(self.form_kernel().reshape(-1), np.asarray(delta).reshape(-1)))


@dataclass(frozen=True)
class SegrePoint:
    """A point (x1, ..., xn) of the product space, i.e. the elementary tensor
    x1 (x) ... (x) xn on the Segre cone."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(_freeze(f).reshape(-1) for f in self.factors))
        if not self.factors:
            raise ShapeError("a Segre point needs at least one factor")

    @classmethod
    def of(cls, *factors: Sequence[float]) -> "SegrePoint":
        return cls(tuple(np.asarray(f, dtype=float) for f in factors))

    @classmethod
    def zero(cls, dims: Sequence[int]) -> "SegrePoint":
        return cls(tuple(np.zeros(int(d)) for d in dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def factor_norms(self, spec: NormSpec) -> tuple[float, ...]:
        return tuple(vector_norm(f, r) for f, r in zip(self.factors, spec.factors))

    def scale(self, t: float) -> "SegrePoint":
        """Scale every factor by t (the tensor scales by t^n)."""
        return SegrePoint(tuple(t * f for f in self.factors))


@dataclass(frozen=True)
class PairConfiguration:
    """Weighted pairs (u_i, v_i) of Segre points.

    Weights default to 1.  Pairs whose elementary tensors coincide contribute
    nothing to any summing estimate and are dropped at construction with a
    `DegeneratePairWarning`.
    """

    pairs: tuple[tuple[SegrePoint, SegrePoint], ...]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        pairs = tuple(self.pairs)
        weights = tuple(float(w) for w in self.weights) or (1.0,) * len(pairs)
        if len(weights) != len(pairs):
            raise ValueError("one weight per pair required")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be strictly positive")
        if not pairs:
            raise ValueError("configuration must contain at least one pair")
        dims = pairs[0][0].dims
        for u, v in pairs:
            if u.dims != dims or v.dims != dims:
                raise ShapeError("all pairs must share the factor dimensions")
        kept_pairs, kept_weights = [], []
        for (u, v), w in zip(pairs, weights):
            delta = elementary_tensor(u).array - elementary_tensor(v).array
            if np.max(np.abs(delta)) <= 1e-300:
                warnings.warn(
                    "dropping degenerate pair (equal elementary tensors)",
                    DegeneratePairWarning,
                    stacklevel=2,
                )
                continue
            kept_pairs.append((u, v))
            kept_weights.append(w)
        if not kept_pairs:
            raise ValueError("configuration is empty after dropping degenerate pairs")
        object.__setattr__(self, "pairs", tuple(kept_pairs))
        object.__setattr__(self, "weights", tuple(kept_weights))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.pairs[0][0].dims

    def deltas(self) -> list[np.ndarray]:
        """Elementary-tensor differences u_i (x) ... - v_i (x) ... as arrays."""
        return [
            elementary_tensor(u).array - elementary_tensor(v).array for u, v in self.pairs
        ]

    def with_pairs(self, extra: Iterable[tuple[SegrePoint, SegrePoint]]) -> "PairConfiguration":
        extra = tuple(extra)
        return PairConfiguration(self.pairs + extra, self.weights + (1.0,) * len(extra))

    def reweighted(self, weights: Sequence[float]) -> "PairConfiguration":
        return PairConfiguration(self.pairs, tuple(weights))

    def scaled(self, t: float) -> "PairConfiguration":
        return PairConfiguration(
            tuple((u.scale(t), v.scale(t)) for u, v in self.pairs), self.weights
        )


def eval_operator(op: MultilinearOperator, x: SegrePoint) -> np.ndarray:
    """Evaluate T(x1, ..., xn): contract the kernel against the factors.

    Linear in each slot; equals the pairing of the kernel with the
    elementary tensor of x.
    """
    if x.dims != op.dims:
        raise ShapeError(f"factor dims {x.dims} do not match operator dims {op.dims}")
    out = op.kernel.array
    for f in x.factors:
        out = np.tensordot(f, out, axes=(0, 0))
    return out


def elementary_tensor(x: SegrePoint) -> DenseTensor:
    """The rank-one tensor with entries prod_k x_k[i_k]."""
    out = np.array(1.0)
    for f in x.factors:
        out = np.multiply.outer(out, f)
    return DenseTensor.from_array(out.reshape(x.dims))


def vector_norm(v: np.ndarray, r: float) -> float:
    """The l_r norm for r in {1, 2, inf} (max of absolute values at inf)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    r = _check_exponent(r)
    if v.size == 0:
        return 0.0
    if r == 1.0:
        return float(np.sum(np.abs(v)))
    if r == 2.0:
        return float(np.linalg.norm(v))
    return float(np.max(np.abs(v)))


def dual_exponent(r: float) -> float:
    """Conjugate exponent: 1 <-> inf, 2 <-> 2."""
    r = _check_exponent(r)
    if r == 1.0:
        return math.inf
    if r == math.inf:
        return 1.0
    return 2.0


def dual_norming_vector(g: np.ndarray, r: float) -> np.ndarray:
    """A maximizer of <g, w> over the unit l_r ball (any fixed choice at ties).

    For g = 0 returns the first basis vector, which lies on every unit sphere.
    """
    g = np.asarray(g, dtype=float).reshape(-1)
    r = _check_exponent(r)
    if not np.any(g):
        e = np.zeros_like(g)
        e[0] = 1.0
        return e
    if r == 2.0:
        return g / np.linalg.norm(g)
    if r == 1.0:
        i = int(np.argmax(np.abs(g)))
        e = np.zeros_like(g)
        e[i] = 1.0 if g[i] >= 0 else -1.0
        return e
    return np.where(g >= 0, 1.0, -1.0)


def project_to_ball(v: np.ndarray, r: float) -> np.ndarray:
    """Euclidean projection of v onto the unit l_r ball."""
    v = np.asarray(v, dtype=float).reshape(-1)
    r = _check_exponent(r)
    if r == math.inf:
        return np.clip(v, -1.0, 1.0)
    if r == 2.0:
        nrm = np.linalg.norm(v)
        return v if nrm <= 1.0 else v / nrm
    if np.sum(np.abs(v)) <= 1.0:
        return v
    # l1 ball: soft-threshold at the level set determined by sorting
    a = np.sort(np.abs(v))[::-1]
    cumsum = np.cumsum(a)
    ks = np.arange(1, a.size + 1)
    mask = a > (cumsum - 1.0) / ks
    k = int(np.max(ks[mask]))
    tau = (cumsum[k - 1] - 1.0) / k
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def flatten(t: DenseTensor, split: tuple[Sequence[int], Sequence[int]]) -> np.ndarray:
    """Matricize `t`: modes in split[0] become rows, split[1] columns.

    The split must cover every mode exactly once; the reshape is row-major
    and therefore invertible.
    """
    rows, cols = (tuple(int(i) for i in g) for g in split)
    if sorted(rows + cols) != list(range(t.ndim)):
        raise ShapeError(f"split {split} is not a partition of modes 0..{t.ndim - 1}")
    arr = t.array.transpose(rows + cols)
    nrow = math.prod(t.shape[i] for i in rows) if rows else 1
    return arr.reshape(nrow, -1)
