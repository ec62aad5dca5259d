"""Problem instances for the third-order attention loss."""

from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError
from .tensorops import col_kron, row_kron

MATRIX_FIELDS = ("A1", "A2", "A3", "A4", "A5", "E", "X1", "X2", "X3", "Y1", "Y2")


@dataclass(frozen=True)
class AttnInstance:
    """One optimization instance.

    A1..A5 and the target E are n x d; X1, X2, X3 parameterize the query/key
    projections and Y1, Y2 the value projection, all d x d.  The composite
    query-side variable is ``X = X1 @ (X2.T rowkron X3.T)`` of shape d x d^2;
    gradients are taken with respect to this X.
    """

    n: int
    d: int
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    A5: np.ndarray
    E: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    X3: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValidationError(f"n and d must be positive, got n={self.n} d={self.d}")
        for f in fields(self):
            if f.name in ("n", "d"):
                continue
            a = np.ascontiguousarray(np.asarray(getattr(self, f.name), dtype=np.float64))
            object.__setattr__(self, f.name, a)
            want = (self.n, self.d) if f.name in ("A1", "A2", "A3", "A4", "A5", "E") \
                else (self.d, self.d)
            if a.shape != want:
                raise ValidationError(
                    f"{f.name} must have shape {want}, got {a.shape}"
                )
            if not np.isfinite(a).all():
                raise ValidationError(f"{f.name} contains non-finite entries")

    def composite_x(self):
        """X = X1 @ (X2.T rowkron X3.T), shape d x d^2."""
        return self.X1 @ row_kron(self.X2.T, self.X3.T)

    def composite_y(self):
        """Y = col_kron(Y1, Y2), shape d^2 x d."""
        return col_kron(self.Y1, self.Y2)

    def projected(self):
        """The five projected inputs (Q, K1, K2, V1, V2), each n x d."""
        return (
            self.A1 @ self.X1,
            self.A2 @ self.X2,
            self.A3 @ self.X3,
            self.A4 @ self.Y1,
            self.A5 @ self.Y2,
        )

    def b_eff(self):
        """Largest absolute entry over the five projected inputs."""
        return max(float(np.abs(m).max()) for m in self.projected())


def random_instance(n, d, bound, seed):
    """Draw an instance with i.i.d. uniform entries in [-bound, bound].

    Uses the counter-based Philox generator keyed by ``seed``, drawing the
    blocks in the fixed order A1 A2 A3 A4 A5 E X1 X2 X3 Y1 Y2 (row-major
    within each block), so the same seed yields the same bytes on every
    platform.
    """
    if n < 1 or d < 1:
        raise ValidationError(f"n and d must be positive, got n={n} d={d}")
    if bound < 0:
        raise ValidationError(f"bound must be nonnegative, got {bound}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    blocks = {}
    for name in MATRIX_FIELDS:
        shape = (n, d) if name in ("A1", "A2", "A3", "A4", "A5", "E") else (d, d)
        blocks[name] = rng.uniform(-bound, bound, size=shape)
    return AttnInstance(n=n, d=d, **blocks)
