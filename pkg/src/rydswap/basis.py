"""Multi-atom product bases for small dense Hilbert spaces.

Each atom carries an ordered list of internal levels; the product basis is
indexed mixed-radix with atom 0 most significant.  Dimensions in this package
stay at or below a few hundred, so states and operators are plain dense
complex numpy arrays throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LevelScheme:
    """Internal level structure of a single atom.

    Parameters
    ----------
    labels : tuple of str
        Ordered level identifiers, e.g. ``("0", "1", "r")``.  The first
        levels are the logical qubit states.
    rydberg_flags : tuple of bool
        Marks which levels have Rydberg character (interact, decay).
    decay_rates : tuple of float
        Population decay rate per level in 1/us.  Nonzero only for
        Rydberg-flagged levels.
    """

    labels: tuple[str, ...]
    rydberg_flags: tuple[bool, ...]
    decay_rates: tuple[float, ...]

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError(f"duplicate level labels: {self.labels}")
        if len(self.rydberg_flags) != n or len(self.decay_rates) != n:
            raise ValueError("labels, rydberg_flags and decay_rates must have equal length")
        n_logical = sum(1 for f in self.rydberg_flags if not f)
        if n_logical < 2:
            raise ValueError("a scheme needs at least two non-Rydberg logical levels")
        for lab, flag, rate in zip(self.labels, self.rydberg_flags, self.decay_rates):
            if rate < 0:
                raise ValueError(f"negative decay rate on level {lab!r}")
            if rate > 0 and not flag:
                raise ValueError(f"decay on non-Rydberg level {lab!r}")

    @property
    def n_levels(self) -> int:
        return len(self.labels)

    def level_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown level {label!r} (have {self.labels})") from None


def qubit_scheme(
    rydberg_labels: tuple[str, ...] = ("r",),
    decay_rate: float = 0.0,
) -> LevelScheme:
    """Logical |0>, |1> plus one or more decaying Rydberg levels."""
    labels = ("0", "1") + rydberg_labels
    flags = (False, False) + (True,) * len(rydberg_labels)
    rates = (0.0, 0.0) + (decay_rate,) * len(rydberg_labels)
    return LevelScheme(labels, flags, rates)


@dataclass(frozen=True)
class ProductBasis:
    """Mixed-radix product basis over several atoms.

    Atom 0 is most significant; within each atom the level order follows its
    scheme.  ``comp_indices`` lists, in lexicographic qubit order 00..0 to
    11..1, the basis indices whose atoms all occupy logical levels.
    """

    schemes: tuple[LevelScheme, ...]
    dim: int = field(init=False)
    comp_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not self.schemes:
            raise ValueError("need at least one atom")
        dim = 1
        for s in self.schemes:
            dim *= s.n_levels
        object.__setattr__(self, "dim", dim)

        # Logical levels are "0" and "1" by convention (first two of a scheme).
        comp = []
        for bits in range(2 ** len(self.schemes)):
            levels = []
            for a in range(len(self.schemes)):
                bit = (bits >> (len(self.schemes) - 1 - a)) & 1
                levels.append(self.schemes[a].labels[bit])
            comp.append(self.index_of(levels))
        object.__setattr__(self, "comp_indices", tuple(comp))

    @property
    def n_atoms(self) -> int:
        return len(self.schemes)

    def index_of(self, labels) -> int:
        """Basis index of a product state given per-atom level labels."""
        if len(labels) != self.n_atoms:
            raise ValueError(f"expected {self.n_atoms} labels, got {len(labels)}")
        idx = 0
        for scheme, lab in zip(self.schemes, labels):
            idx = idx * scheme.n_levels + scheme.level_index(lab)
        return idx

    def labels_of(self, index: int) -> tuple[str, ...]:
        """Per-atom level labels of basis state ``index``."""
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} outside [0, {self.dim})")
        out = []
        for scheme in reversed(self.schemes):
            index, lev = divmod(index, scheme.n_levels)
            out.append(scheme.labels[lev])
        return tuple(reversed(out))

    def level_arrays(self) -> list[np.ndarray]:
        """Per-atom integer level index of every basis state.

        Returns a list with one int array of length ``dim`` per atom; used to
        vectorize diagonal operators over the product space.
        """
        arrays = []
        trailing = self.dim
        for scheme in self.schemes:
            trailing //= scheme.n_levels
            idx = (np.arange(self.dim) // trailing) % scheme.n_levels
            arrays.append(idx)
        return arrays

    def occupation_mask(self, atom: int, label: str) -> np.ndarray:
        """Boolean mask of basis states where ``atom`` occupies ``label``."""
        lev = self.schemes[atom].level_index(label)
        return self.level_arrays()[atom] == lev

    def rydberg_projector_diagonal(self) -> np.ndarray:
        """Diagonal of the summed Rydberg-number operator.

        Entry k counts how many atoms of basis state k sit in a
        Rydberg-flagged level.
        """
        diag = np.zeros(self.dim)
        levels = self.level_arrays()
        for a, scheme in enumerate(self.schemes):
            flags = np.asarray(scheme.rydberg_flags)
            diag += flags[levels[a]].astype(float)
        return diag

    def decay_diagonal(self) -> np.ndarray:
        """Diagonal of the total population decay rate, 1/us."""
        diag = np.zeros(self.dim)
        levels = self.level_arrays()
        for a, scheme in enumerate(self.schemes):
            rates = np.asarray(scheme.decay_rates)
            diag += rates[levels[a]]
        return diag

    def single_atom_operator(self, atom: int, op: np.ndarray) -> np.ndarray:
        """Embed a single-atom operator into the product space.

        Dense kron with identities on the other atoms.
        """
        n = self.schemes[atom].n_levels
        if op.shape != (n, n):
            raise ValueError(f"operator shape {op.shape} does not match atom {atom} ({n} levels)")
        left = 1
        for s in self.schemes[:atom]:
            left *= s.n_levels
        right = self.dim // (left * n)
        return np.kron(np.kron(np.eye(left), op), np.eye(right)).astype(complex)

    def basis_state(self, labels) -> np.ndarray:
        """Unit vector for a labelled product state."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index_of(labels)] = 1.0
        return psi


def build_basis(schemes) -> ProductBasis:
    """Construct a ProductBasis from a list of LevelScheme."""
    return ProductBasis(tuple(schemes))


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors as columns).  Raises if the input is
    not Hermitian to 1e-10, which guards against accidentally feeding the
    decaying (non-Hermitian) Hamiltonian to unitary-only code paths.
    """
    h = np.asarray(h)
    if not np.allclose(h, h.conj().T, atol=1e-10):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(h)
