"""Associative *-algebra engine on dense matrices.

Given a set of error generators, build the generated *-algebra as a
Hilbert-Schmidt orthonormal basis, compute its commutant, and split the
carrier space into sectors C^n (x) C^d with explicit isometries.  The
decomposition is randomized (eigenvalue clustering of seeded random algebra
elements) but deterministic for a fixed seed.
"""

import json
from dataclasses import dataclass

import numpy as np

from .config import (DEFAULT_CONFIG, ConvergenceError, DegenerateSpectrumError,
                     EngineConfig, ResourceLimitError, spawn_rng)
from .pauli import PauliOp, to_dense

# above this basis size closure verification samples pairs instead of
# checking all of them (the fixed sample keeps runs reproducible)
_FULL_VERIFY_LIMIT = 300
_VERIFY_SAMPLE = 4000


@dataclass(frozen=True)
class ErrorSet:
    generators: tuple
    labels: tuple

    def __post_init__(self):
        if not self.generators:
            raise ValueError("need at least one generator")
        d = self.generators[0].shape[0]
        for g in self.generators:
            if g.shape != (d, d):
                raise ValueError("generators must be square with a common dimension")
        if len(self.labels) != len(self.generators):
            raise ValueError("one label per generator required")

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]


def error_set(mats, labels=None) -> ErrorSet:
    mats = tuple(np.asarray(m, dtype=complex) for m in mats)
    if labels is None:
        labels = tuple(f"E{i}" for i in range(len(mats)))
    return ErrorSet(mats, tuple(labels))


@dataclass(frozen=True)
class MatrixAlgebra:
    dim: int
    basis: tuple          # HS-orthonormal d x d matrices
    closed: bool = False
    closure_residual: float = float("nan")

    @property
    def algebra_dim(self) -> int:
        return len(self.basis)

    def stacked(self) -> np.ndarray:
        """Basis as an (m, d*d) row-orthonormal array."""
        return np.stack([b.reshape(-1) for b in self.basis])

    def random_element(self, rng, hermitian=False) -> np.ndarray:
        c = rng.standard_normal(len(self.basis)) + 1j * rng.standard_normal(len(self.basis))
        m = np.tensordot(c, np.stack(self.basis), axes=1)
        return (m + m.conj().T) / 2 if hermitian else m


@dataclass(frozen=True)
class Sector:
    label: int
    central_projector: np.ndarray
    n_J: int
    d_J: int
    isometry: np.ndarray  # d x (n_J * d_J), column (i*d_J + t) = |i> (x) |t>


@dataclass(frozen=True)
class SectorDecomposition:
    dim: int
    sectors: tuple

    @property
    def total_dim(self) -> int:
        return sum(s.n_J * s.d_J for s in self.sectors)

    @property
    def algebra_dim(self) -> int:
        return sum(s.d_J**2 for s in self.sectors)

    @property
    def commutant_dim(self) -> int:
        return sum(s.n_J**2 for s in self.sectors)

    @property
    def sector_shapes(self):
        return sorted((s.n_J, s.d_J) for s in self.sectors)


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product trace(a^dag b)."""
    return complex(np.vdot(a, b))


def _project_out(rows: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Remove the span of orthonormal `rows` from candidate row vectors."""
    if rows.size == 0:
        return cand
    for _ in range(2):  # reorthogonalization pass
        cand = cand - (cand @ rows.conj().T) @ rows
    return cand


def _orthonormal_rows(cand: np.ndarray, tol: float) -> np.ndarray:
    """Sequential MGS over candidate rows; drops residuals below tol."""
    kept = []
    for v in cand:
        for _ in range(2):
            for k in kept:
                v = v - np.vdot(k, v) * k
        nrm = np.linalg.norm(v)
        if nrm > tol:
            kept.append(v / nrm)
    if not kept:
        return np.empty((0, cand.shape[1]), dtype=complex)
    return np.stack(kept)


def close_algebra(errs: ErrorSet, config: EngineConfig = DEFAULT_CONFIG) -> MatrixAlgebra:
    """Span-growth closure of {1, E_a, E_a^dag} under products.

    Orthonormalizes with modified Gram-Schmidt, multiplies all basis pairs in
    a fixed order, projects out the current span, and repeats until no
    residual exceeds the closure tolerance.
    """
    d = errs.dim
    if d > config.algebra_dense_cap:
        raise ResourceLimitError(f"dense algebra capped at dimension {config.algebra_dense_cap}")
    seed_mats = [np.eye(d, dtype=complex)]
    seed_mats += [np.asarray(g, dtype=complex) for g in errs.generators]
    seed_mats += [g.conj().T for g in errs.generators]
    rows = _orthonormal_rows(
        np.stack([m.reshape(-1) for m in seed_mats]), config.hs_orthonormal_tol)

    last_residual = float("inf")
    for _ in range(config.closure_max_iter):
        m = rows.shape[0]
        mats = rows.reshape(m, d, d)
        new_rows = np.empty((0, d * d), dtype=complex)
        last_residual = 0.0
        for i in range(m):
            prods = np.matmul(mats[i], mats).reshape(m, d * d)
            prods = _project_out(rows, prods)
            if new_rows.size:
                prods = _project_out(new_rows, prods)
            norms = np.linalg.norm(prods, axis=1)
            last_residual = max(last_residual, float(norms.max(initial=0.0)))
            big = prods[norms > config.closure_residual_tol]
            if big.size:
                extracted = _orthonormal_rows(big, config.closure_residual_tol)
                new_rows = np.vstack([new_rows, extracted]) if new_rows.size else extracted
        if new_rows.shape[0] == 0:
            basis = tuple(rows.reshape(-1, d, d))
            alg = MatrixAlgebra(d, basis)
            resid = verify_closure(alg, config)
            return MatrixAlgebra(d, basis, closed=resid <= config.span_membership_tol,
                                 closure_residual=resid)
        rows = np.vstack([rows, new_rows])
        if rows.shape[0] > d * d:
            raise ConvergenceError("basis grew beyond d^2; numerical breakdown")
        if rows.nbytes > 2e9:
            raise ResourceLimitError(
                f"closure basis reached {rows.shape[0]} elements at dimension {d}; "
                "the generated algebra is too large for the dense engine")
    raise ConvergenceError(
        f"no closure after {config.closure_max_iter} iterations "
        f"(last residual {last_residual:.3e})")


def verify_closure(alg: MatrixAlgebra, config: EngineConfig = DEFAULT_CONFIG) -> float:
    """Max span residual over identity, adjoints, and basis pair products.

    All pairs are checked up to a size limit, beyond which a seeded fixed
    sample of pairs is used.
    """
    d = alg.dim
    rows = alg.stacked()
    m = rows.shape[0]
    worst = 0.0

    def span_residual(batch):
        flat = batch.reshape(batch.shape[0], -1)
        resid = _project_out(rows, flat.copy())
        return float(np.linalg.norm(resid, axis=1).max(initial=0.0))

    eye = np.eye(d, dtype=complex) / np.sqrt(d)
    worst = max(worst, span_residual(eye[None]))
    mats = rows.reshape(m, d, d)
    worst = max(worst, span_residual(mats.conj().transpose(0, 2, 1)))
    if m <= _FULL_VERIFY_LIMIT:
        pairs = ((i, j) for i in range(m) for j in range(m))
    else:
        rng = spawn_rng(config.seed, 9)
        pairs = zip(rng.integers(0, m, _VERIFY_SAMPLE), rng.integers(0, m, _VERIFY_SAMPLE))
    chunk = []
    for i, j in pairs:
        chunk.append(mats[i] @ mats[j])
        if len(chunk) == 256:
            worst = max(worst, span_residual(np.stack(chunk)))
            chunk = []
    if chunk:
        worst = max(worst, span_residual(np.stack(chunk)))
    return worst


def from_pauli_span(paulis, config: EngineConfig = DEFAULT_CONFIG) -> MatrixAlgebra:
    """Algebra spanned by a multiplicatively closed set of Pauli operators.

    The input must be all 2^k elements of a GF(2)-linear space of bit
    vectors (phases ignored); group closure is then exact, so the span is a
    *-algebra by construction and no numerical closure pass is needed.
    Paulis scaled by 1/sqrt(dim) are already HS-orthonormal.
    """
    ps = list(paulis)
    n = ps[0].n
    vecs = {(p.x_bits, p.z_bits) for p in ps}
    if len(vecs) != len(ps):
        raise ValueError("duplicate Pauli bit patterns in span input")
    if (0, 0) not in vecs:
        raise ValueError("span input must contain the identity")
    k = (len(vecs) - 1).bit_length()
    if len(vecs) != 1 << k:
        raise ValueError("span input size is not a power of two")
    for a in ps:
        for b in ps:
            if (a.x_bits ^ b.x_bits, a.z_bits ^ b.z_bits) not in vecs:
                raise ValueError("span input is not closed under multiplication")
    d = 1 << n
    if d > config.algebra_dense_cap:
        raise ResourceLimitError(f"dense algebra capped at dimension {config.algebra_dense_cap}")
    basis = tuple(to_dense(PauliOp(n, x, z, 0)) / np.sqrt(d) for x, z in sorted(vecs))
    return MatrixAlgebra(d, basis, closed=True, closure_residual=0.0)


# stacked-commutator SVD is used when the stacked matrix stays below this
# many complex entries; beyond it the squared map keeps memory bounded
_COMMUTANT_SVD_ENTRIES = 1 << 22


def commutant(alg: MatrixAlgebra, config: EngineConfig = DEFAULT_CONFIG) -> MatrixAlgebra:
    """All X with [X, B_i] = 0: null space of the stacked commutator map
    L_i = 1 (x) B_i^T - B_i (x) 1 (row-major vec convention).

    Small problems take an SVD of the stacked map itself (full precision);
    large ones fall back to eigenvectors of sum_i L_i^dag L_i, which squares
    the conditioning but needs only d^2 x d^2 memory.
    """
    if not alg.closed:
        raise ValueError("commutant needs a verified-closed algebra")
    d = alg.dim
    if d > config.commutant_dense_cap:
        raise ResourceLimitError(
            f"commutant eigenproblem capped at dimension {config.commutant_dense_cap}")
    eye = np.eye(d)
    if len(alg.basis) * d**4 <= _COMMUTANT_SVD_ENTRIES:
        stack = np.vstack([np.kron(eye, b.T) - np.kron(b, eye) for b in alg.basis])
        _, s, vh = np.linalg.svd(stack, full_matrices=True)
        s = np.concatenate([s, np.zeros(d * d - len(s))])
        null_tol = config.span_membership_tol * max(1.0, float(s[0]) if s.size else 1.0)
        cols = vh.conj().T[:, s < null_tol]
    else:
        M = np.zeros((d * d, d * d), dtype=complex)
        for b in alg.basis:
            L = np.kron(eye, b.T) - np.kron(b, eye)
            M += L.conj().T @ L
        w, V = np.linalg.eigh(M)
        null_tol = config.span_membership_tol * max(1.0, float(w[-1]) if len(w) else 1.0)
        cols = V[:, w < null_tol]
    basis = tuple(cols[:, i].reshape(d, d) for i in range(cols.shape[1]))
    out = MatrixAlgebra(d, basis)
    resid = verify_closure(out, config)
    return MatrixAlgebra(d, basis, closed=resid <= config.span_membership_tol,
                         closure_residual=resid)


def _cluster_sorted(w: np.ndarray, merge_tol: float, guard: float):
    """Split sorted eigenvalues into clusters; guard ambiguous gaps.

    Gaps below merge_tol*scale merge; gaps between that and guard*merge_tol*scale
    are ambiguous and raise DegenerateSpectrumError.
    """
    scale = max(1.0, float(np.max(np.abs(w))))
    merge = merge_tol * scale
    clusters = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > merge:
            clusters.append((start, i))
            start = i
    for (a0, a1), (b0, _) in zip(clusters, clusters[1:]):
        gap = w[b0] - w[a1 - 1]
        if gap < guard * merge:
            raise DegenerateSpectrumError(
                f"cluster gap {gap:.3e} within the guard band "
                f"({guard} x {merge:.1e}); rerun with a different seed")
    return clusters


def decompose(alg: MatrixAlgebra, config: EngineConfig = DEFAULT_CONFIG) -> SectorDecomposition:
    """Central decomposition A = (+)_J 1_{n_J} (x) M(d_J).

    A random Hermitian element of the center splits H into central sectors;
    inside each, the eigenspace pattern of a random Hermitian algebra element
    gives (n_J, d_J), and intertwiners between its eigenblocks assemble the
    isometry C^{n_J} (x) C^{d_J} -> H.
    """
    if not alg.closed:
        raise ValueError("decompose needs a verified-closed algebra")
    d = alg.dim
    m = len(alg.basis)
    rows = alg.stacked()
    mats = rows.reshape(m, d, d)

    # center = elements commuting with every basis matrix, solved in
    # coefficient space: T_i[l, k] = <B_l, [B_k, B_i]>
    blocks = []
    for i in range(m):
        comm = np.matmul(mats, mats[i]) - np.matmul(mats[i], mats)
        blocks.append(rows.conj() @ comm.reshape(m, d * d).T)
    T = np.vstack(blocks)
    _, s, vh = np.linalg.svd(T)
    tol = config.span_membership_tol * max(1.0, float(s[0]) if len(s) else 1.0)
    null = vh.conj().T[:, np.concatenate([s, np.zeros(m - len(s))]) < tol]

    rng_central = spawn_rng(config.seed, 1)
    if null.shape[1] <= 1:
        central_slices = [None]  # factor: single sector, no splitting needed
    else:
        coeff = rng_central.standard_normal(null.shape[1]) + 1j * rng_central.standard_normal(null.shape[1])
        zel = np.tensordot(null @ coeff, mats, axes=1)
        zel = (zel + zel.conj().T) / 2
        w, V = np.linalg.eigh(zel)
        central_slices = [V[:, a:b] for a, b in
                          _cluster_sorted(w, config.cluster_merge_tol, config.gap_ratio_guard)]

    sectors = []
    for label, S in enumerate(central_slices):
        if S is None:
            S = np.eye(d, dtype=complex)
        mJ = S.shape[1]
        comp = _orthonormal_rows(
            np.matmul(S.conj().T[None], np.matmul(mats, S[None])).reshape(m, mJ * mJ),
            config.hs_orthonormal_tol)
        comp_mats = comp.reshape(-1, mJ, mJ)

        rng_k = spawn_rng(config.seed, 2, label)
        ck = rng_k.standard_normal(len(comp)) + 1j * rng_k.standard_normal(len(comp))
        K = np.tensordot(ck, comp_mats, axes=1)
        K = (K + K.conj().T) / 2
        kw, kV = np.linalg.eigh(K)
        kcl = _cluster_sorted(kw, config.cluster_merge_tol, config.gap_ratio_guard)
        sizes = {b - a for a, b in kcl}
        if len(sizes) != 1:
            raise DegenerateSpectrumError(
                f"unequal eigenspace sizes {sorted(sizes)} in sector {label}; "
                "rerun with a different seed")
        n_J = sizes.pop()
        d_J = len(kcl)

        rng_b = spawn_rng(config.seed, 3, label)
        cb = rng_b.standard_normal(len(comp)) + 1j * rng_b.standard_normal(len(comp))
        B = np.tensordot(cb, comp_mats, axes=1)
        Q1 = kV[:, kcl[0][0]:kcl[0][1]]
        iso = np.zeros((d, n_J * d_J), dtype=complex)
        for t, (a0, b0) in enumerate(kcl):
            Qt = kV[:, a0:b0]
            W = Qt.conj().T @ B @ Q1
            U, sv, Vh = np.linalg.svd(W)
            if d_J > 1 and sv[-1] < config.span_membership_tol * max(1.0, sv[0]):
                raise DegenerateSpectrumError(
                    "singular intertwiner draw; rerun with a different seed")
            cols = S @ (Qt @ (U @ Vh))
            iso[:, t::d_J] = cols
        sectors.append(Sector(label, S @ S.conj().T, n_J, d_J, iso))

    dec = SectorDecomposition(d, tuple(sectors))
    if dec.total_dim != d:
        raise DegenerateSpectrumError(
            f"sector dimensions sum to {dec.total_dim} != {d}; "
            "rerun with a different seed")
    return dec


def noiseless_subsystems(dec: SectorDecomposition):
    """Sectors carrying a protected factor: [(label, n_J)] with n_J >= 2."""
    return [(s.label, s.n_J) for s in dec.sectors if s.n_J >= 2]


def block_structure_residual(sector: Sector, mat: np.ndarray):
    """Distance of iso^dag mat iso from the nearest 1_{n} (x) M form.

    Returns (residual, M) with M obtained by partial trace over the
    noiseless index.
    """
    V = sector.isometry
    n, dj = sector.n_J, sector.d_J
    T = (V.conj().T @ mat @ V).reshape(n, dj, n, dj)
    M = np.einsum("itiu->tu", T) / n
    resid = T - np.einsum("ij,tu->itju", np.eye(n), M)
    return float(np.linalg.norm(resid)), M


def span_projector_distance(a: MatrixAlgebra, b: MatrixAlgebra) -> float:
    """Frobenius distance between the HS-space span projectors of a and b."""
    if a.dim != b.dim:
        raise ValueError("algebras live on different spaces")
    Qa, Qb = a.stacked(), b.stacked()
    cross = np.linalg.norm(Qa @ Qb.conj().T) ** 2
    val = len(a.basis) + len(b.basis) - 2 * cross
    return float(np.sqrt(max(val, 0.0)))


# ---------------------------------------------------------------- JSON I/O

def _matrix_to_pairs(mat: np.ndarray):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(mat)]


def _matrix_from_pairs(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def error_set_to_json(errs: ErrorSet) -> str:
    doc = {
        "dimension": errs.dim,
        "labels": list(errs.labels),
        "matrices": [_matrix_to_pairs(g) for g in errs.generators],
    }
    return json.dumps(doc, indent=2)


def error_set_from_json(text: str) -> ErrorSet:
    doc = json.loads(text)
    mats = [_matrix_from_pairs(m) for m in doc["matrices"]]
    d = int(doc["dimension"])
    for mat in mats:
        if mat.shape != (d, d):
            raise ValueError("matrix shape disagrees with declared dimension")
    labels = doc.get("labels") or [f"E{i}" for i in range(len(mats))]
    return ErrorSet(tuple(mats), tuple(labels))


def decomposition_to_json(dec: SectorDecomposition, include_matrices: bool = True) -> str:
    sectors = []
    for s in dec.sectors:
        rec = {"label": s.label, "n": s.n_J, "d": s.d_J}
        if include_matrices:
            rec["central_projector"] = _matrix_to_pairs(s.central_projector)
            rec["isometry"] = _matrix_to_pairs(s.isometry)
        sectors.append(rec)
    doc = {
        "dimension": dec.dim,
        "sectors": sectors,
        "sector_shapes": [list(p) for p in dec.sector_shapes],
        "algebra_dim": dec.algebra_dim,
        "commutant_dim": dec.commutant_dim,
    }
    return json.dumps(doc, indent=2)
