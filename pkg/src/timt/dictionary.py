"""Sparse dictionary learning for atom-trait suggestion.

Vertices of a multichannel dataset are treated as columns of an M x N
data matrix and approximated as sparse combinations of K learned unit
atoms.  Greedy orthogonal matching pursuit codes the columns, a per-atom
rank-1 SVD sweep updates the dictionary, and the two alternate for a
fixed number of rounds.  Learned atoms can then be offered back to the
user as point traits in the (scaled) attribute space, ranked by how much
the data actually used them.

The coding step keeps whichever of (fresh greedy code, previous code
re-fit by the update sweep) reconstructs a column better, which makes
the recorded error sequence non-increasing; plain greedy recoding alone
does not guarantee that.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DictionaryError, NonFiniteError, ValidationError
from .fields import MultiField
from .traits import PointTrait

_OMP_TOL = 1e-12


@dataclass(frozen=True)
class Dictionary:
    """Learned atoms as columns of an M x K matrix, each unit norm."""

    atoms: np.ndarray
    t0: int
    training_meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        atoms = np.ascontiguousarray(np.asarray(self.atoms, dtype=np.float64))
        if atoms.ndim != 2 or atoms.shape[1] < 1:
            raise DictionaryError("atoms must be an M x K matrix with K >= 1")
        if not np.all(np.isfinite(atoms)):
            raise NonFiniteError("atoms contain non-finite entries")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise DictionaryError("every atom must have unit norm",
                                  worst=float(np.abs(norms - 1.0).max()))
        if not (1 <= int(self.t0) <= atoms.shape[1]):
            raise DictionaryError("t0 must satisfy 1 <= t0 <= K")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "t0", int(self.t0))

    @property
    def m(self) -> int:
        return self.atoms.shape[0]

    @property
    def k(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SparseCodes:
    """Column-sparse coefficients in compressed form.

    Column j of the K x N code matrix owns ``indices[indptr[j]:indptr[j+1]]``
    with matching ``values``; every column has at most ``t0`` entries.
    """

    k: int
    t0: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        counts = np.diff(self.indptr)
        if counts.min(initial=0) < 0 or counts.max(initial=0) > self.t0:
            raise ValidationError("a code column exceeds the sparsity level")

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.indices[lo:hi], self.values[lo:hi]

    def to_dense(self) -> np.ndarray:
        c = np.zeros((self.k, self.n), dtype=np.float64)
        for j in range(self.n):
            idx, val = self.column(j)
            c[idx, j] = val
        return c

    def atom_usage(self) -> np.ndarray:
        """Sum of |coefficient| per atom across all columns."""
        return np.bincount(self.indices, weights=np.abs(self.values),
                           minlength=self.k)


def _codes_from_padded(k: int, t0: int, sel: np.ndarray, coef: np.ndarray) -> SparseCodes:
    keep = (sel >= 0) & (coef != 0.0)
    counts = keep.sum(axis=1)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return SparseCodes(k, t0, indptr, sel[keep].astype(np.int64),
                       coef[keep].astype(np.float64))


def _padded_from_codes(codes: SparseCodes) -> tuple[np.ndarray, np.ndarray]:
    sel = np.full((codes.n, codes.t0), -1, dtype=np.int64)
    coef = np.zeros((codes.n, codes.t0), dtype=np.float64)
    for j in range(codes.n):
        idx, val = codes.column(j)
        sel[j, :len(idx)] = idx
        coef[j, :len(val)] = val
    return sel, coef


def _reconstruct(atoms: np.ndarray, sel: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """D @ C for padded per-column supports, without forming dense C."""
    out = np.zeros((atoms.shape[0], sel.shape[0]), dtype=np.float64)
    safe = np.where(sel >= 0, sel, 0)
    for i in range(sel.shape[1]):
        out += atoms[:, safe[:, i]] * coef[:, i]
    return out


def _refit(atoms: np.ndarray, x: np.ndarray, sel: np.ndarray, lens: np.ndarray,
           coef: np.ndarray) -> None:
    """Least-squares coefficients for fixed per-column supports, in place.

    Columns are grouped by support size so each group solves one batched
    normal-equation system.
    """
    gram = atoms.T @ atoms
    dtx = atoms.T @ x
    for t in np.unique(lens):
        if t == 0:
            continue
        cols = np.flatnonzero(lens == t)
        s = sel[cols, :t]
        a = gram[s[:, :, None], s[:, None, :]]
        b = np.take_along_axis(dtx.T[cols], s, axis=1)
        try:
            sol = np.linalg.solve(a, b[..., None])[..., 0]
        except np.linalg.LinAlgError:
            sol = np.stack([np.linalg.lstsq(ai, bi, rcond=None)[0]
                            for ai, bi in zip(a, b)])
        coef[cols, :t] = sol
        coef[cols, t:] = 0.0


def _omp_batch(atoms: np.ndarray, x: np.ndarray, t0: int,
               tol: float = _OMP_TOL) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy coding of every column of x; returns padded (sel, lens, coef)."""
    m, k = atoms.shape
    n = x.shape[1]
    sel = np.full((n, t0), -1, dtype=np.int64)
    coef = np.zeros((n, t0), dtype=np.float64)
    lens = np.zeros(n, dtype=np.int64)
    residual = x.copy()
    taken = np.zeros((n, k), dtype=bool)
    for round_ in range(t0):
        norms = np.linalg.norm(residual, axis=0)
        active = norms > tol
        if not active.any():
            break
        corr = np.abs(atoms.T @ residual[:, active])
        corr[taken[active].T] = -np.inf
        pick = np.argmax(corr, axis=0)
        rows = np.flatnonzero(active)
        sel[rows, round_] = pick
        taken[rows, pick] = True
        lens[rows] += 1
        sub = coef[rows]
        _refit(atoms, x[:, rows], sel[rows], lens[rows], sub)
        coef[rows] = sub
        residual[:, rows] = x[:, rows] - _reconstruct(atoms, sel[rows], sub)
    return sel, lens, coef


def omp_sparse_code(d: Dictionary, signal: np.ndarray, t0: int | None = None) -> np.ndarray:
    """Greedy sparse code of one signal; returns a dense K-vector.

    At most ``t0`` atoms are selected (the dictionary's own level by
    default); after each pick the coefficients are re-solved by least
    squares on the whole selection, so per-round residuals are monotone.
    """
    t0 = d.t0 if t0 is None else int(t0)
    if not (1 <= t0 <= d.k):
        raise DictionaryError(f"t0 must be in [1, {d.k}], got {t0}")
    signal = np.asarray(signal, dtype=np.float64)
    if signal.shape != (d.m,):
        raise DictionaryError(f"signal must have length {d.m}")
    if not np.all(np.isfinite(signal)):
        raise NonFiniteError("signal contains non-finite entries")
    sel, lens, coef = _omp_batch(d.atoms, signal[:, None], t0)
    out = np.zeros(d.k, dtype=np.float64)
    t = int(lens[0])
    out[sel[0, :t]] = coef[0, :t]
    return out


def sparse_code(d: Dictionary, data: np.ndarray, t0: int | None = None) -> SparseCodes:
    """Greedy sparse codes of every column of an (M, N) data matrix."""
    t0 = d.t0 if t0 is None else int(t0)
    if not (1 <= t0 <= d.k):
        raise DictionaryError(f"t0 must be in [1, {d.k}], got {t0}")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] != d.m:
        raise DictionaryError(f"data must be ({d.m}, N), got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("data contains non-finite entries")
    sel, lens, coef = _omp_batch(d.atoms, data, t0)
    return _codes_from_padded(d.k, t0, sel, coef)


def _canonical_sign(u: np.ndarray) -> float:
    lead = u[np.argmax(np.abs(u))]
    return -1.0 if lead < 0 else 1.0


def ksvd_update_atoms(atoms: np.ndarray, data: np.ndarray,
                      sel: np.ndarray, coef: np.ndarray,
                      ) -> tuple[np.ndarray, np.ndarray, int]:
    """One dictionary-update sweep: per atom, rank-1 SVD of its residual.

    Works on padded supports as produced by the coding step; returns the
    new atoms, updated coefficients and how many dead atoms were reseeded
    from the worst-reconstructed data column.  Never increases the
    Frobenius error for the fixed supports.
    """
    atoms = atoms.copy()
    coef = coef.copy()
    k = atoms.shape[1]
    reseeds = 0
    for a in range(k):
        users, slots = np.nonzero((sel == a) & (coef != 0.0))
        if len(users) == 0:
            err = np.linalg.norm(data - _reconstruct(atoms, sel, coef), axis=0)
            worst = int(np.argmax(err))
            col = data[:, worst]
            norm = np.linalg.norm(col)
            if norm > 0 and err[worst] > _OMP_TOL:
                atoms[:, a] = col * (_canonical_sign(col) / norm)
                reseeds += 1
            continue
        hold = coef[users, slots].copy()
        coef[users, slots] = 0.0
        partial = data[:, users] - _reconstruct(atoms, sel[users], coef[users])
        u, s, vt = np.linalg.svd(partial, full_matrices=False)
        sign = _canonical_sign(u[:, 0])
        if s[0] <= _OMP_TOL:
            coef[users, slots] = hold
            continue
        atoms[:, a] = u[:, 0] * sign
        coef[users, slots] = s[0] * vt[0] * sign
    return atoms, coef, reseeds


def _keep_better(data, atoms, sel, coef, prev_sel, prev_coef):
    """Per column, fall back to the previous code when it fits better."""
    fresh = np.linalg.norm(data - _reconstruct(atoms, sel, coef), axis=0)
    kept = np.linalg.norm(data - _reconstruct(atoms, prev_sel, prev_coef), axis=0)
    worse = fresh > kept
    if worse.any():
        sel[worse] = prev_sel[worse]
        coef[worse] = prev_coef[worse]


def _train_once(data, k, t0, iterations, rng):
    col_norms = np.linalg.norm(data, axis=0)
    chosen = rng.choice(np.flatnonzero(col_norms > 0), size=k, replace=False)
    atoms = data[:, chosen] / col_norms[chosen]
    atoms *= np.array([_canonical_sign(atoms[:, j]) for j in range(k)])

    scale = np.sqrt(data.size)
    history: list[float] = []
    reseed_total = 0
    prev_sel = prev_coef = None
    for _ in range(iterations):
        sel, _, coef = _omp_batch(atoms, data, t0)
        if prev_sel is not None:
            _keep_better(data, atoms, sel, coef, prev_sel, prev_coef)
        rmse = float(np.linalg.norm(data - _reconstruct(atoms, sel, coef)) / scale)
        history.append(rmse)
        if len(history) >= 4 and np.all(-np.diff(history[-4:]) < 1e-7):
            break
        atoms, coef, reseeds = ksvd_update_atoms(atoms, data, sel, coef)
        reseed_total += reseeds
        prev_sel, prev_coef = sel, coef

    sel, _, coef = _omp_batch(atoms, data, t0)
    if prev_sel is not None:
        _keep_better(data, atoms, sel, coef, prev_sel, prev_coef)
    history.append(float(np.linalg.norm(data - _reconstruct(atoms, sel, coef)) / scale))
    return atoms, sel, coef, history, reseed_total


def ksvd_learn(data: np.ndarray, k: int | None = None, t0: int = 2,
               iterations: int = 30, seed: int = 0,
               restarts: int = 3) -> tuple[Dictionary, SparseCodes]:
    """Alternating sparse coding / atom updates on an M x N data matrix.

    ``k`` defaults to twice the attribute dimension.  Atoms start as a
    seeded sample of distinct data columns.  Within one run the recorded
    RMSE (after each coding step, over all matrix entries) never
    increases, and a run stops early once three consecutive improvements
    fall under 1e-7.  Alternating minimization is sensitive to where it
    starts, so ``restarts`` independent seeded runs are trained and the
    one with the lowest final RMSE is kept; the reported history is the
    winning run's.
    """
    data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if data.ndim != 2:
        raise DictionaryError("data must be an M x N matrix")
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("data contains non-finite entries")
    m, n = data.shape
    if k is None:
        k = 2 * m
    k = int(k)
    if k < 1 or k > n:
        raise DictionaryError(f"need 1 <= K <= N, got K={k}, N={n}")
    if not (1 <= t0 <= k):
        raise DictionaryError(f"t0 must be in [1, {k}], got {t0}")
    if iterations < 1:
        raise DictionaryError("need at least one iteration")
    if restarts < 1:
        raise DictionaryError("need at least one restart")
    nonzero = int((np.linalg.norm(data, axis=0) > 0).sum())
    if nonzero == 0:
        raise DictionaryError("data is identically zero")
    if nonzero < k:
        raise DictionaryError(f"only {nonzero} nonzero columns for {k} atoms")

    best = None
    finals = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        run = _train_once(data, k, t0, iterations, rng)
        finals.append(run[3][-1])
        if best is None or run[3][-1] < best[3][-1]:
            best, winner = run, r
    atoms, sel, coef, history, reseeds = best
    meta = {"t0": t0, "iterations": len(history) - 1, "seed": int(seed),
            "rmse": history[-1], "rmse_history": history, "reseeds": reseeds,
            "restarts": restarts, "restart_rmse": finals, "winner": winner}
    return Dictionary(atoms, t0, meta), _codes_from_padded(k, t0, sel, coef)


# ---------------------------------------------------------------------------
# atom analysis and suggestions

def atom_similarity_matrix(d: Dictionary) -> np.ndarray:
    """Pairwise cosine similarity of atoms; symmetric with unit diagonal."""
    s = d.atoms.T @ d.atoms
    s = np.clip((s + s.T) / 2.0, -1.0, 1.0)
    return s


@dataclass(frozen=True)
class AtomCluster:
    members: tuple[int, ...]
    representative: int


def cluster_atoms(s: np.ndarray, threshold: float) -> list[AtomCluster]:
    """Single-linkage clusters over |similarity| >= threshold.

    The representative is the member with the largest total similarity to
    the rest of its cluster, ties going to the lower atom index.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError("similarity matrix must be square")
    if not np.allclose(s, s.T, atol=1e-10):
        raise ValidationError("similarity matrix must be symmetric")
    if not np.allclose(np.diag(s), 1.0, atol=1e-8):
        raise ValidationError("similarity matrix must have unit diagonal")
    if not (0.0 < threshold < 1.0):
        raise ValidationError("threshold must lie strictly between 0 and 1")
    k = s.shape[0]
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if np.abs(s[i, j]) >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for root in sorted(groups):
        members = sorted(groups[root])
        totals = [sum(np.abs(s[i, j]) for j in members if j != i) for i in members]
        rep = members[int(np.argmax(totals))]
        clusters.append(AtomCluster(tuple(members), rep))
    return clusters


@dataclass(frozen=True)
class AtomSuggestion:
    atom: int
    trait: PointTrait
    usage: float


def suggest_atom_traits(d: Dictionary, codes: SparseCodes,
                        mf: MultiField) -> list[AtomSuggestion]:
    """Offer every atom as a point trait over the field's channels.

    The coordinates live in the same (possibly rescaled) space the
    dictionary was trained on, so pass the assembled field here.  Atoms
    are ranked by total |coefficient| across the coded columns, ties by
    atom index.
    """
    names = mf.channel_names
    if d.m != len(names):
        raise DictionaryError(
            f"dictionary has {d.m} rows but the field has {len(names)} channels")
    if codes.k != d.k:
        raise DictionaryError("codes and dictionary disagree on atom count")
    usage = codes.atom_usage()
    order = np.lexsort((np.arange(d.k), -usage))
    out = []
    for a in order:
        trait = PointTrait(tuple(names), tuple(d.atoms[:, a]))
        out.append(AtomSuggestion(int(a), trait, float(usage[a])))
    return out
