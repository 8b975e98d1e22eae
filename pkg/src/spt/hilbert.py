"""Truncated qutrit (x) cavity-1 (x) cavity-2 Hilbert space and elementary operators.

The basis is ordered qutrit-major: index(m, n1, n2) = m*(N1+1)*(N2+1) + n1*(N2+1) + n2
with m in {g=0, e=1, f=2}.  The ordering is fixed so CSV dumps and regression
fixtures are bit-stable across runs.

Operators are plain complex numpy arrays.  Dimensions stay small (a few hundred
at the largest truncations used here), so dense storage is the default; callers
that need sparsity convert with ``scipy.sparse.csr_matrix`` at the point of use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUTRIT_LEVELS = ("g", "e", "f")
_LEVEL_INDEX = {name: i for i, name in enumerate(QUTRIT_LEVELS)}


@dataclass(frozen=True)
class HilbertSpec:
    """Fock truncations for the two cavities: n1 in 0..n1_max, n2 in 0..n2_max."""

    n1_max: int
    n2_max: int

    def __post_init__(self):
        if self.n1_max < 0 or self.n2_max < 0:
            raise ValueError(f"truncations must be >= 0, got {self}")

    @property
    def dim(self) -> int:
        return 3 * (self.n1_max + 1) * (self.n2_max + 1)


@dataclass(frozen=True)
class HilbertSpace:
    """Concrete basis with index maps and cached elementary operators."""

    spec: HilbertSpec
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", self.spec.dim)

    # -- basis bookkeeping -------------------------------------------------

    def index(self, m, n1: int, n2: int) -> int:
        """Flat basis index of |m, n1, n2>; m is 'g'/'e'/'f' or 0/1/2."""
        mi = _LEVEL_INDEX[m] if isinstance(m, str) else int(m)
        if not (0 <= mi < 3):
            raise ValueError(f"qutrit level out of range: {m}")
        if not (0 <= n1 <= self.spec.n1_max and 0 <= n2 <= self.spec.n2_max):
            raise ValueError(f"Fock label out of range: ({m},{n1},{n2})")
        return (mi * (self.spec.n1_max + 1) + n1) * (self.spec.n2_max + 1) + n2

    def labels(self, i: int) -> tuple[str, int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= i < self.dim:
            raise ValueError(f"index out of range: {i}")
        per_m = (self.spec.n1_max + 1) * (self.spec.n2_max + 1)
        mi, rest = divmod(i, per_m)
        n1, n2 = divmod(rest, self.spec.n2_max + 1)
        return QUTRIT_LEVELS[mi], n1, n2

    def label_names(self) -> list[str]:
        return ["|%s,%d,%d>" % self.labels(i) for i in range(self.dim)]

    def basis_state(self, m, n1: int = 0, n2: int = 0) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(m, n1, n2)] = 1.0
        return psi

    # -- elementary operators ----------------------------------------------

    def annihilation(self, subsystem: str) -> np.ndarray:
        """Bare annihilation operator for 'cavity1' or 'cavity2'.

        Matrix elements <m,n1,n2-1| a2 |m,n1,n2> = sqrt(n2) (same pattern on
        n1 for cavity 1); the qutrit index is untouched.
        """
        if subsystem not in ("cavity1", "cavity2"):
            raise ValueError(f"unknown subsystem {subsystem!r}")
        a = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            m, n1, n2 = self.labels(i)
            if subsystem == "cavity1" and n1 > 0:
                a[self.index(m, n1 - 1, n2), i] = np.sqrt(n1)
            elif subsystem == "cavity2" and n2 > 0:
                a[self.index(m, n1, n2 - 1), i] = np.sqrt(n2)
        return a

    def number(self, subsystem: str) -> np.ndarray:
        a = self.annihilation(subsystem)
        return a.conj().T @ a

    def qutrit_op(self, to_level, from_level) -> np.ndarray:
        """|to><from| on the qutrit, tensored with identity on both cavities."""
        op = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            m, n1, n2 = self.labels(i)
            if m == (from_level if isinstance(from_level, str) else QUTRIT_LEVELS[from_level]):
                op[self.index(to_level, n1, n2), i] = 1.0
        return op

    def qutrit_projector(self, *levels) -> np.ndarray:
        """Projector onto the given qutrit levels (all n1, n2)."""
        return sum(self.qutrit_op(lv, lv) for lv in levels)


def build_space(spec: HilbertSpec) -> HilbertSpace:
    """Construct the truncated product space with deterministic basis ordering."""
    return HilbertSpace(spec)


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return np.max(np.abs(m - m.conj().T)) < tol
