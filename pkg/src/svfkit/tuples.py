"""The matrix tuple container shared by every module."""
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DomainError, InputError
from .multilinear import check_invertible

BACKENDS = ("rational", "float")


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """N invertible d×d matrices sharing one numeric backend.

    ``matrices`` holds object arrays of Fractions for the rational backend and
    float64 arrays otherwise. Symbols index the matrices from 0.
    """

    matrices: tuple
    backend: str = "float"
    labels: tuple | None = None
    _floats: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise InputError(f"unknown backend {self.backend!r}")
        mats = []
        for M in self.matrices:
            if self.backend == "rational":
                M = linalg.fraction_array(M)
            else:
                M = np.array(M, dtype=float)
            mats.append(M)
        if len(mats) < 2:
            raise InputError("a tuple needs at least two matrices")
        d = mats[0].shape[0] if mats[0].ndim == 2 else -1
        for i, M in enumerate(mats):
            if M.ndim != 2 or M.shape != (d, d) or d < 1:
                raise InputError(f"matrix {i} has shape {M.shape}, expected ({d}, {d})")
            try:
                check_invertible(M)
            except DomainError as exc:
                raise DomainError(f"matrix {i}: {exc}") from None
        if self.labels is not None and len(self.labels) != len(mats):
            raise InputError("labels length does not match matrix count")
        object.__setattr__(self, "matrices", tuple(mats))
        floats = np.stack([linalg.as_float(M) for M in mats])
        floats.setflags(write=False)
        object.__setattr__(self, "_floats", floats)

    @classmethod
    def from_floats(cls, mats, labels=None) -> "MatrixTuple":
        return cls(tuple(np.asarray(m, dtype=float) for m in mats), "float", labels)

    @classmethod
    def from_rationals(cls, mats, labels=None) -> "MatrixTuple":
        return cls(tuple(linalg.fraction_array(m) for m in mats), "rational", labels)

    @property
    def exact(self) -> bool:
        return self.backend == "rational"

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def count(self) -> int:
        return len(self.matrices)

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, i):
        return self.matrices[i]

    def as_float(self) -> np.ndarray:
        """Read-only (N, d, d) float stack."""
        return self._floats

    def to_float(self) -> "MatrixTuple":
        if not self.exact:
            return self
        return MatrixTuple.from_floats(self._floats, self.labels)

    def remove(self, index: int) -> "MatrixTuple":
        if not 0 <= index < self.count:
            raise InputError(f"index {index} out of range")
        labels = None if self.labels is None else self.labels[:index] + self.labels[index + 1:]
        mats = self.matrices[:index] + self.matrices[index + 1:]
        return MatrixTuple(mats, self.backend, labels)

    def scaled(self, c) -> "MatrixTuple":
        if self.exact:
            c = linalg.to_fraction(c)
        return MatrixTuple(tuple(M * c for M in self.matrices), self.backend, self.labels)

    def conjugate(self, X) -> "MatrixTuple":
        """The tuple X^{-1} A_i X."""
        Xi = linalg.inverse(X)
        return MatrixTuple(tuple(Xi @ M @ X for M in self.matrices), self.backend, self.labels)

    def is_contractive(self) -> bool:
        return bool(np.all(np.linalg.svd(self._floats, compute_uv=False)[:, 0] < 1))


def as_matrix_list(tup) -> tuple[list, bool]:
    """Accept a MatrixTuple or a sequence of arrays; return (matrices, exact)."""
    if isinstance(tup, MatrixTuple):
        return list(tup.matrices), tup.exact
    mats = [np.asarray(M) for M in tup]
    if not mats:
        raise InputError("empty matrix list")
    exact = all(linalg.is_exact(M) for M in mats)
    if not exact:
        mats = [linalg.as_float(M) for M in mats]
    return mats, exact
