"""Quantitative protection checks for the toric code.

Three layers: exact symplectic verdicts for Pauli errors (the projected
error-correction condition), dense/matrix-free spectral analysis of the
check Hamiltonian under local perturbations, and the size-scaling study of
the quasi-degenerate ground-multiplet splitting.
"""

import itertools
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import gf2
from .config import (DEFAULT_CONFIG, ConvergenceError, EngineConfig,
                     ResourceLimitError, spawn_rng)
from .algebra import ErrorSet
from .lattice import TorusLattice, build_torus, code_dimension, homology_basis
from .pauli import PauliOp, apply_to_vector, commutes, format_pauli, multiply


class InsufficientDataError(ValueError):
    """Too few usable points for the requested analysis."""


@dataclass(frozen=True)
class KLReport:
    c_values: dict           # label -> complex scalar
    per_error: tuple         # (label, deviation)
    max_deviation: float


@dataclass(frozen=True)
class SpectralReport:
    energies: tuple          # lowest computed eigenvalues, ascending
    ground_degeneracy: int
    gap_delta: float
    splitting: float
    coupling_k: float


@dataclass(frozen=True)
class ScalingRow:
    L1: int
    L2: int
    h: float
    splitting: float
    gap: float
    coupling_k: float
    deviation_max: float


@dataclass(frozen=True)
class ScalingResult:
    points: tuple            # (|lattice| = n_qubits, splitting)
    rows: tuple              # ScalingRow per size
    fits: dict               # n -> (alpha, offset, residual)
    fit_alpha: float
    fit_n: int
    fit_residual: float
    degenerate: bool
    notes: tuple


def _report(labels, cs, devs) -> KLReport:
    per = tuple(zip(labels, [float(d) for d in devs]))
    return KLReport(dict(zip(labels, cs)), per, max((d for _, d in per), default=0.0))


def kl_check_stabilizer(lat: TorusLattice, errors, labels=None) -> KLReport:
    """Exact error-correction verdict for Pauli errors.

    For each error: c = the exact eigenvalue if the error is a product of
    checks (deviation 0), c = 0 if some check detects it (deviation 0), and
    deviation 1 if it commutes with every check without being a product of
    them (an undetectable logical action on the code space).
    """
    checks = list(lat.vertex_stars) + list(lat.plaquette_checks)
    rows = lat.check_symplectic_rows()
    n = lat.n_qubits
    out_labels, cs, devs = [], [], []
    for i, err in enumerate(errors):
        if err.n != n:
            raise ValueError("error acts on the wrong qubit count")
        out_labels.append(labels[i] if labels else format_pauli(err))
        if any(not commutes(err, ch) for ch in checks):
            cs.append(0j)
            devs.append(0.0)
            continue
        combo = gf2.solve(rows, (err.x_bits << n) | err.z_bits)
        if combo is None:
            # normalizer minus stabilizer: acts within the code space
            cs.append(0j)
            devs.append(1.0)
            continue
        prod = PauliOp(n, 0, 0)
        for k, ch in enumerate(checks):
            if combo >> k & 1:
                prod = multiply(prod, ch)
        # err = i^(dphase) * prod, and prod acts as +1 on the code space
        cs.append(1j ** ((err.phase - prod.phase) % 4))
        devs.append(0.0)
    return _report(out_labels, cs, devs)


def kl_check_dense(code_projector: np.ndarray, errs: ErrorSet,
                   config: EngineConfig = DEFAULT_CONFIG) -> KLReport:
    """Numerical condition on a projector: c(X) = tr(PXP)/tr(P), deviation
    = operator norm of PXP - c(X) P."""
    P = np.asarray(code_projector, dtype=complex)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("projector must be square")
    if np.linalg.norm(P - P.conj().T) > config.projector_tol:
        raise ValueError("projector is not Hermitian within tolerance")
    if np.linalg.norm(P @ P - P) > config.projector_tol:
        raise ValueError("projector is not idempotent within tolerance")
    if errs.dim != P.shape[0]:
        raise ValueError("error dimension does not match projector")
    r = float(np.trace(P).real)
    cs, devs = [], []
    for g in errs.generators:
        pxp = P @ g @ P
        c = complex(np.trace(pxp) / r)
        devs.append(float(np.linalg.norm(pxp - c * P, 2)))
        cs.append(c)
    return _report(list(errs.labels), cs, devs)


def kl_check_ground_basis(basis_cols: np.ndarray, errors, labels=None) -> KLReport:
    """Same condition, matrix-free: deviation of G^dag X G from c*1.

    `basis_cols` holds orthonormal columns spanning the (possibly perturbed)
    code space; since PXP - cP is supported on that span, its operator norm
    equals the norm of the compressed matrix.
    """
    G = np.asarray(basis_cols)
    m = G.shape[1]
    out_labels, cs, devs = [], [], []
    for i, err in enumerate(errors):
        out_labels.append(labels[i] if labels else format_pauli(err))
        comp = G.conj().T @ apply_to_vector(err, G)
        c = complex(np.trace(comp) / m)
        cs.append(c)
        devs.append(float(np.linalg.norm(comp - c * np.eye(m), 2)))
    return _report(out_labels, cs, devs)


# ------------------------------------------------------------- code basis

def project_to_code(lat: TorusLattice, vec: np.ndarray) -> np.ndarray:
    """Apply the product of (1+S)/2 over all checks, matrix-free."""
    out = np.asarray(vec, dtype=complex)
    for ch in list(lat.vertex_stars) + list(lat.plaquette_checks):
        out = (out + apply_to_vector(ch, out)) / 2
    return out


def code_projector(lat: TorusLattice, config: EngineConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Dense projector onto the joint +1 check eigenspace."""
    if lat.n_qubits > config.dense_bridge_max_qubits:
        raise ResourceLimitError("code projector needs the dense bridge")
    dim = 1 << lat.n_qubits
    return project_to_code(lat, np.eye(dim, dtype=complex))


SECTOR_ORDER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def code_basis(lat: TorusLattice, config: EngineConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Orthonormal columns |J> for J in SECTOR_ORDER (Z-loop labels).

    Starting from |0...0> (a +1 eigenvector of both Z loops), the paired
    X-type loops flip the individual labels, and the check projector
    commutes with all four loop operators.
    """
    if lat.n_qubits > config.dense_bridge_max_qubits:
        raise ResourceLimitError("code basis needs the dense bridge")
    dim = 1 << lat.n_qubits
    loops = {lo.homology_class: lo.op for lo in homology_basis(lat)}
    cols = []
    for j1, j2 in SECTOR_ORDER:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        if j1 == -1:
            v = apply_to_vector(loops["g2_X"], v)   # anticommutes with g1_Z
        if j2 == -1:
            v = apply_to_vector(loops["g1_X"], v)   # anticommutes with g2_Z
        v = project_to_code(lat, v)
        cols.append(v / np.linalg.norm(v))
    return np.stack(cols, axis=1)


# ----------------------------------------------------------- sector orbits

@dataclass(frozen=True)
class OrbitReport:
    orbit_dims: tuple
    max_overlap: float
    total_dim: int
    fills_space: bool


def local_error_generators(lat: TorusLattice, max_weight: int = 2,
                           loop_commuting: bool = True):
    """Paulis of 1 <= weight <= max_weight, optionally restricted to the
    commutant of all four loop operators.

    Restricting to the loop commutant keeps the generated motion inside one
    sector; products of these operators reach every check and every defect
    pattern but never a bare logical.
    """
    n = lat.n_qubits
    loops = [lo.op for lo in homology_basis(lat)]
    gens = []
    combos = []
    for w in range(1, max_weight + 1):
        combos += list(itertools.combinations(range(n), w))
    for qs in combos:
        for kinds in itertools.product("XZY", repeat=len(qs)):
            x = z = 0
            for q, kind in zip(qs, kinds):
                if kind in "XY":
                    x |= 1 << q
                if kind in "ZY":
                    z |= 1 << q
            op = PauliOp(n, x, z)
            if not loop_commuting or all(commutes(op, lo) for lo in loops):
                gens.append(op)
    return gens


def sector_orbits(lat: TorusLattice, errors=None,
                  config: EngineConfig = DEFAULT_CONFIG) -> OrbitReport:
    """Orbit of each code vector |J> under iterated local errors.

    Grows span(|J>) by applying the generator set until stable, then checks
    mutual orthogonality of the four orbits, their equal dimensions, and
    whether the direct sum fills the whole space.
    """
    if lat.n_qubits > config.dense_bridge_max_qubits:
        raise ResourceLimitError("sector orbits need the dense bridge")
    gens = local_error_generators(lat) if errors is None else list(errors)
    basis = code_basis(lat, config)
    dim = basis.shape[0]
    orbits = []
    for j in range(basis.shape[1]):
        span = basis[:, j:j + 1]
        while True:
            if not gens:
                break
            images = np.hstack([apply_to_vector(g, span) for g in gens])
            images -= span @ (span.conj().T @ images)
            images -= span @ (span.conj().T @ images)
            u, s, _ = np.linalg.svd(images, full_matrices=False)
            new = u[:, s > config.orbit_overlap_tol * 10]
            if new.shape[1] == 0:
                break
            span = np.hstack([span, new])
        orbits.append(span)
    max_overlap = 0.0
    for a, b in itertools.combinations(orbits, 2):
        if a.size and b.size:
            max_overlap = max(max_overlap, float(np.abs(a.conj().T @ b).max()))
    dims = tuple(o.shape[1] for o in orbits)
    return OrbitReport(dims, max_overlap, sum(dims), sum(dims) == dim)


# ---------------------------------------------------------------- spectra

def toric_check_terms(lat: TorusLattice):
    """The unperturbed Hamiltonian terms: -1 per star and per plaquette."""
    return [(ch, -1.0) for ch in lat.vertex_stars] + \
           [(ch, -1.0) for ch in lat.plaquette_checks]


PERTURBATION_KINDS = ("z_field", "z_field_right", "z_field_down", "x_field")


def perturbation_terms(lat: TorusLattice, kind: str):
    """Single-edge field terms of the requested kind, unit coefficients.

    z_field acts on every edge; z_field_right / z_field_down restrict to the
    row-direction / column-direction edges, which keeps only the matching
    wrap direction active in perturbation theory.
    """
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    n = lat.n_qubits
    terms = []
    for e in range(n):
        _, _, d = lat.edge_coords(e)
        if kind == "z_field_right" and d != 0:
            continue
        if kind == "z_field_down" and d != 1:
            continue
        if kind == "x_field":
            terms.append((PauliOp(n, 1 << e, 0), 1.0))
        else:
            terms.append((PauliOp(n, 0, 1 << e), 1.0))
    return terms


def _assemble_terms(lat, perturbation, h):
    terms = list(toric_check_terms(lat))
    if h and perturbation:
        terms += [(op, h * coeff) for op, coeff in perturbation]
    for op, _ in terms:
        if op.adjoint() != op:
            raise ValueError(f"non-Hermitian Hamiltonian term {format_pauli(op)}")
    return terms


def _dense_hamiltonian(n, terms):
    dim = 1 << n
    cols = np.arange(dim)
    complex_needed = any((op.x_bits & op.z_bits) for op, _ in terms)
    H = np.zeros((dim, dim), dtype=complex if complex_needed else float)
    for op, coeff in terms:
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & op.z_bits) & 1)
        vals = coeff * (1j ** op.phase) * signs
        H[cols ^ op.x_bits, cols] += vals if complex_needed else vals.real
    return H


def _matfree_operator(n, terms):
    dim = 1 << n
    cols = np.arange(dim)
    complex_needed = any((op.x_bits & op.z_bits) for op, _ in terms)
    dtype = complex if complex_needed else np.float64
    prepared = []
    for op, coeff in terms:
        signs = (1 - 2 * (np.bitwise_count(cols & op.z_bits) & 1)).astype(np.int8)
        scale = coeff * (1j ** op.phase)
        prepared.append((cols ^ op.x_bits, signs, scale if complex_needed else scale.real))

    def matvec(v):
        v = v.reshape(-1)
        out = np.zeros(dim, dtype=dtype)
        for tgt, signs, scale in prepared:
            out[tgt] += scale * (signs * v)
        return out

    return spla.LinearOperator((dim, dim), matvec=matvec, dtype=dtype)


def _solve_lowest(n, terms, k, config):
    """Lowest k eigenpairs: one dense eigh below the cap, else ARPACK with a
    seeded random start (a deterministic start that still resolves exact
    multiplicities)."""
    dim = 1 << n
    if dim <= config.dense_spectrum_cap:
        H = _dense_hamiltonian(n, terms)
        w, V = np.linalg.eigh(H)
        k = min(k, dim)
        return w[:k], V[:, :k]
    A = _matfree_operator(n, terms)
    k = min(k, dim - 2)
    rng = spawn_rng(config.seed, 4, n)
    v0 = rng.standard_normal(dim)
    try:
        w, V = spla.eigsh(A, k=k, which="SA", v0=v0,
                          tol=config.eig_residual_tol * 1e-2,
                          maxiter=config.eig_max_iter)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    for i in range(len(w)):
        resid = np.linalg.norm(A @ V[:, i] - w[i] * V[:, i])
        if resid > config.eig_residual_tol * max(1.0, abs(w[i])):
            raise ConvergenceError(f"Ritz residual {resid:.2e} above tolerance")
    return w, V


def spectrum(lat: TorusLattice, perturbation=None, h: float = 0.0,
             config: EngineConfig = DEFAULT_CONFIG, return_vectors: bool = False):
    """Low part of the spectrum of -sum(stars) - sum(plaquettes) + h*V.

    The quasi-degenerate ground multiplet is taken to be the lowest
    code-dimension levels; gap_delta is measured from the ground energy to
    the first level above that multiplet, and splitting is the multiplet's
    spread.  coupling_k is the largest magnitude of a matrix element of the
    bare perturbation V between the multiplet and the computed excited
    vectors.
    """
    if lat.n_qubits > config.sparse_max_qubits:
        raise ResourceLimitError(
            f"spectrum capped at {config.sparse_max_qubits} qubits, got {lat.n_qubits}")
    terms = _assemble_terms(lat, perturbation, h)
    q = code_dimension(lat)
    k = max(config.eig_num_values, q + 2)
    w, V = _solve_lowest(lat.n_qubits, terms, k, config)
    gap = float(w[q] - w[0]) if len(w) > q else float("nan")
    splitting = float(w[q - 1] - w[0]) if len(w) >= q else 0.0
    tol = config.degeneracy_cluster_rel * max(abs(gap), 1.0)
    degeneracy = int(np.sum(w - w[0] <= tol))
    coupling = 0.0
    if perturbation and len(w) > q:
        pv = np.zeros(V[:, q:].shape, dtype=complex)
        for op, coeff in perturbation:
            pv += coeff * apply_to_vector(op, V[:, q:])
        coupling = float(np.abs(V[:, :q].conj().T @ pv).max())
    report = SpectralReport(tuple(float(x) for x in w), degeneracy, gap,
                            splitting, coupling)
    return (report, V) if return_vectors else report


# ------------------------------------------------------------ scaling fit

def _fit_exponential(sizes, values):
    """Least-squares log(value) = offset - alpha * size^(1/n) for n in {1,2}."""
    fits = {}
    x_raw = np.array(sizes, dtype=float)
    y = np.log(np.maximum(np.array(values, dtype=float), 1e-300))
    for n_exp in (1, 2):
        x = x_raw ** (1.0 / n_exp)
        A = np.stack([-x, np.ones_like(x)], axis=1)
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = float(np.sqrt(np.mean((A @ sol - y) ** 2)))
        fits[n_exp] = (float(sol[0]), float(sol[1]), resid)
    best = min(fits, key=lambda n_exp: fits[n_exp][2])
    return fits, best


def scaling_study(sizes, h: float, kind: str = "z_field",
                  config: EngineConfig = DEFAULT_CONFIG,
                  threads: int | None = None) -> ScalingResult:
    """Ground-multiplet splitting across lattice sizes, with an exponential
    fit of splitting against |lattice|^(1/n).

    Sizes are deduplicated (order kept, with a note); every size must fit
    the sparse cap or the whole run is refused.  Per-size deviation_max is
    the projected-condition deviation of the perturbation's own terms
    against the perturbed ground basis.
    """
    notes = []
    seen, uniq = set(), []
    for s in sizes:
        s = (int(s[0]), int(s[1]))
        if s in seen:
            notes.append(f"duplicate size {s[0]}x{s[1]} dropped")
            warnings.warn(f"duplicate size {s[0]}x{s[1]} dropped")
            continue
        seen.add(s)
        uniq.append(s)
    if len(uniq) < 3:
        raise InsufficientDataError("need at least 3 distinct sizes")
    for L1, L2 in uniq:
        if 2 * L1 * L2 > config.sparse_max_qubits:
            raise ResourceLimitError(f"size {L1}x{L2} exceeds the sparse cap")

    if threads is None:
        threads = int(os.environ.get("NSSLAB_THREADS", "1"))
    threads = max(1, min(threads, len(uniq)))

    def run_one(size):
        L1, L2 = size
        lat = build_torus(L1, L2)
        pert = perturbation_terms(lat, kind)
        report, V = spectrum(lat, pert, h, config, return_vectors=True)
        q = code_dimension(lat)
        kl = kl_check_ground_basis(V[:, :q], [op for op, _ in pert])
        return ScalingRow(L1, L2, h, report.splitting, report.gap_delta,
                          report.coupling_k, kl.max_deviation)

    if threads == 1:
        rows = [run_one(s) for s in uniq]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, uniq))

    points = tuple((2 * r.L1 * r.L2, r.splitting) for r in rows)
    if all(r.splitting < 1e-10 for r in rows):
        return ScalingResult(points, tuple(rows), {}, float("inf"), 0, 0.0,
                             True, tuple(notes) + ("exact degeneracy at every size",))
    fits, best = _fit_exponential([p[0] for p in points], [p[1] for p in points])
    alpha, _, resid = fits[best]
    return ScalingResult(points, tuple(rows), fits, alpha, best, resid,
                         False, tuple(notes))


CSV_HEADER = "L1,L2,h,splitting,gap,coupling_k,deviation_max"


def scaling_to_csv(result: ScalingResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(",".join([str(r.L1), str(r.L2)] +
                              ["%.17g" % v for v in
                               (r.h, r.splitting, r.gap, r.coupling_k, r.deviation_max)]))
    return "\n".join(lines) + "\n"
