"""Periodic L1 x L2 square lattice (genus 1) with one qubit per edge.

Edge layout: vertex (r, c) owns edge 2*(r*L2 + c) + d, where d = 0 is the
edge going right and d = 1 the edge going down.  Stars are all-X on the four
edges meeting a vertex; plaquettes are all-Z on the four edges bounding a
face (named by its top-left vertex).  Minimal homology representatives run
straight through row 0 / column 0.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import gf2
from .pauli import PauliOp, apply_to_vector, commutes

_DIRECTIONS = ("right", "down")


class NotAnEigenstateError(Exception):
    """State is not a joint eigenvector of the requested loop pair."""


@dataclass(frozen=True)
class SectorLabel:
    j: tuple  # 2g eigenvalues, each -1 or +1

    def __post_init__(self):
        if len(self.j) != 2 or any(v not in (-1, 1) for v in self.j):
            raise ValueError("sector label needs 2g = 2 eigenvalues in {-1,+1}")


@dataclass(frozen=True)
class LoopOperator:
    homology_class: str  # one of g1_Z, g2_Z, g1_X, g2_X
    op: PauliOp


@dataclass(frozen=True)
class TorusLattice:
    L1: int
    L2: int
    n_qubits: int
    vertex_stars: tuple
    plaquette_checks: tuple
    genus: int = 1

    def edge_index(self, r: int, c: int, d: int) -> int:
        return 2 * ((r % self.L1) * self.L2 + (c % self.L2)) + d

    def edge_coords(self, e: int) -> tuple:
        v, d = divmod(e, 2)
        r, c = divmod(v, self.L2)
        return r, c, d

    def star_edges(self, r: int, c: int) -> list:
        return [self.edge_index(r, c, 0), self.edge_index(r, c, 1),
                self.edge_index(r, c - 1, 0), self.edge_index(r - 1, c, 1)]

    def plaquette_edges(self, r: int, c: int) -> list:
        return [self.edge_index(r, c, 0), self.edge_index(r, c, 1),
                self.edge_index(r + 1, c, 0), self.edge_index(r, c + 1, 1)]

    def edge_vertices(self, e: int) -> tuple:
        r, c, d = self.edge_coords(e)
        if d == 0:
            other = r * self.L2 + (c + 1) % self.L2
        else:
            other = ((r + 1) % self.L1) * self.L2 + c
        return r * self.L2 + c, other

    def edge_faces(self, e: int) -> tuple:
        """The two plaquettes (face = top-left vertex index) sharing edge e."""
        r, c, d = self.edge_coords(e)
        if d == 0:
            # top edge of face (r,c), bottom edge of face (r-1,c)
            return r * self.L2 + c, ((r - 1) % self.L1) * self.L2 + c
        # left edge of face (r,c), right edge of face (r,c-1)
        return r * self.L2 + c, r * self.L2 + (c - 1) % self.L2

    def check_symplectic_rows(self) -> list:
        """Checks as (x << n) | z packed GF(2) vectors."""
        n = self.n_qubits
        return [(p.x_bits << n) | p.z_bits
                for p in list(self.vertex_stars) + list(self.plaquette_checks)]


def _mask(edges) -> int:
    m = 0
    for e in edges:
        m |= 1 << e
    return m


def build_torus(L1: int, L2: int) -> TorusLattice:
    """Construct the toric lattice with its star and plaquette checks."""
    if L1 < 2 or L2 < 2:
        raise ValueError("torus needs L1, L2 >= 2")
    n = 2 * L1 * L2
    stars = []
    plaqs = []
    # build via a throwaway instance for the index helpers
    proto = TorusLattice(L1, L2, n, (), ())
    for r in range(L1):
        for c in range(L2):
            stars.append(PauliOp(n, _mask(proto.star_edges(r, c)), 0))
            plaqs.append(PauliOp(n, 0, _mask(proto.plaquette_edges(r, c))))
    return TorusLattice(L1, L2, n, tuple(stars), tuple(plaqs))


def check_rank(lat: TorusLattice) -> int:
    return gf2.rank(lat.check_symplectic_rows())


def code_dimension(lat: TorusLattice) -> int:
    """2^(n - rank): dimension of the joint +1 eigenspace of all checks."""
    return 2 ** (lat.n_qubits - check_rank(lat))


def homology_basis(lat: TorusLattice) -> list:
    """The four minimal loop operators [g1_Z, g2_Z, g1_X, g2_X].

    g1 runs along row 0 (primal for Z, dual for X), g2 along column 0.
    Pairing: g1_Z anticommutes with g2_X, g2_Z with g1_X, all other pairs
    commute.
    """
    n = lat.n_qubits
    z1 = _mask(lat.edge_index(0, c, 0) for c in range(lat.L2))
    z2 = _mask(lat.edge_index(r, 0, 1) for r in range(lat.L1))
    x1 = _mask(lat.edge_index(0, c, 1) for c in range(lat.L2))
    x2 = _mask(lat.edge_index(r, 0, 0) for r in range(lat.L1))
    return [
        LoopOperator("g1_Z", PauliOp(n, 0, z1)),
        LoopOperator("g2_Z", PauliOp(n, 0, z2)),
        LoopOperator("g1_X", PauliOp(n, x1, 0)),
        LoopOperator("g2_X", PauliOp(n, x2, 0)),
    ]


def is_contractible(lat: TorusLattice, cycle: PauliOp) -> bool:
    """True iff the pure-type cycle is a product of same-type checks."""
    if cycle.n != lat.n_qubits:
        raise ValueError("cycle acts on the wrong qubit count")
    if cycle.x_bits and cycle.z_bits:
        raise ValueError("cycle must be pure X-type or pure Z-type")
    if cycle.z_bits or not cycle.x_bits:
        # Z-type (or identity): must commute with every star
        if any(not commutes(cycle, s) for s in lat.vertex_stars):
            raise ValueError("not a cycle: fails to commute with dual checks")
        gens = [p.z_bits for p in lat.plaquette_checks]
        return gf2.in_span(gens, cycle.z_bits)
    if any(not commutes(cycle, p) for p in lat.plaquette_checks):
        raise ValueError("not a cycle: fails to commute with dual checks")
    gens = [s.x_bits for s in lat.vertex_stars]
    return gf2.in_span(gens, cycle.x_bits)


def sector_of(lat: TorusLattice, state, loop_basis: str = "Z",
              tol: float = 1e-8) -> SectorLabel:
    """Joint loop eigenvalues (j1, j2) labelling the state's sector.

    `state` is a dense vector or any object exposing loop_eigenvalue(op).
    The default label basis is the Z-type loop pair; pass loop_basis="X" for
    the X-type convention (the two choices are conjugate frames).
    """
    loops = homology_basis(lat)
    pair = loops[0:2] if loop_basis == "Z" else loops[2:4]
    if hasattr(state, "loop_eigenvalue"):
        vals = []
        for lo in pair:
            v = state.loop_eigenvalue(lo.op)
            if v is None:
                raise NotAnEigenstateError(f"state undetermined on {lo.homology_class}")
            vals.append(v)
        return SectorLabel(tuple(vals))
    vec = np.asarray(state, dtype=complex)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise NotAnEigenstateError("zero vector")
    vals = []
    for lo in pair:
        image = apply_to_vector(lo.op, vec)
        ev = float(np.real(np.vdot(vec, image)) / nrm**2)
        j = 1 if ev >= 0 else -1
        if np.linalg.norm(image - j * vec) > tol * nrm:
            raise NotAnEigenstateError(
                f"state is not an eigenvector of {lo.homology_class} "
                f"(expectation {ev:.3g})")
        vals.append(j)
    return SectorLabel(tuple(vals))


def lattice_to_json(lat: TorusLattice) -> str:
    doc = {
        "L1": lat.L1,
        "L2": lat.L2,
        "genus": lat.genus,
        "n_qubits": lat.n_qubits,
        "edges": [
            {"index": e, "row": r, "col": c, "direction": _DIRECTIONS[d]}
            for e in range(lat.n_qubits)
            for r, c, d in [lat.edge_coords(e)]
        ],
        "stars": [sorted(lat.star_edges(r, c))
                  for r in range(lat.L1) for c in range(lat.L2)],
        "plaquettes": [sorted(lat.plaquette_edges(r, c))
                       for r in range(lat.L1) for c in range(lat.L2)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def lattice_from_json(text: str) -> TorusLattice:
    doc = json.loads(text)
    lat = build_torus(int(doc["L1"]), int(doc["L2"]))
    stored_stars = [sorted(s) for s in doc["stars"]]
    stored_plaqs = [sorted(p) for p in doc["plaquettes"]]
    built_stars = [sorted(lat.star_edges(r, c))
                   for r in range(lat.L1) for c in range(lat.L2)]
    built_plaqs = [sorted(lat.plaquette_edges(r, c))
                   for r in range(lat.L1) for c in range(lat.L2)]
    if stored_stars != built_stars or stored_plaqs != built_plaqs:
        raise ValueError("check supports in document do not match the layout")
    if int(doc["n_qubits"]) != lat.n_qubits:
        raise ValueError("inconsistent qubit count in document")
    return lat
