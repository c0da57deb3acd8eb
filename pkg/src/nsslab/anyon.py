"""Abelian anyon dynamics on the toric code in the stabilizer picture.

An AnyonState is the exact Pauli word `applied` acting on a fixed reference
code vector |J0>, plus bookkeeping: anyon records, the accumulated scalar
phase, and derived views (tableau signs, frame signs, energy).  Strings are
applied dynamically (exact Pauli products), never adiabatically.

Whenever a closed string turns out to act as a scalar on the reference
vector (a product of checks and frame loops), that scalar is moved out of
`applied` into accumulated_phase, so the state vector is always exactly
accumulated_phase * applied |J0>.  Braiding phases are therefore exact
integers of the symplectic arithmetic, and the dense bridge can cross-check
them on small lattices.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import gf2
from .config import DEFAULT_CONFIG, EngineConfig
from .lattice import SectorLabel, TorusLattice, homology_basis
from .pauli import PauliOp, apply_to_vector, identity, multiply
from .verify import SECTOR_ORDER, code_basis


class InvalidMoveError(Exception):
    pass


class InvalidFusionError(Exception):
    pass


class PathNotFoundError(Exception):
    pass


@dataclass(frozen=True)
class LatticePath:
    kind: str        # "vertex" (e transport) or "plaquette" (m transport)
    steps: tuple     # ordered edge indices, consecutive-adjacent

    def __post_init__(self):
        if self.kind not in ("vertex", "plaquette"):
            raise ValueError("path kind must be vertex or plaquette")
        if not self.steps:
            raise ValueError("empty path")


@dataclass(frozen=True)
class Anyon:
    kind: str        # "e" (vertex defect) or "m" (plaquette defect)
    position: int    # vertex index for e, face index for m
    string: PauliOp  # transport extensions applied by this anyon
    creation: PauliOp  # the pair's creation operator (shared record)
    pair_id: int


@dataclass(frozen=True)
class AnyonState:
    lat: TorusLattice
    sector0: SectorLabel
    applied: PauliOp
    anyons: tuple
    accumulated_phase: complex
    next_pair: int

    # -- derived views -----------------------------------------------------

    def _crossing_sign(self, op: PauliOp) -> int:
        par = ((op.x_bits & self.applied.z_bits).bit_count() +
               (op.z_bits & self.applied.x_bits).bit_count()) % 2
        return -1 if par else 1

    @property
    def frame_signs(self) -> dict:
        """Current signs of the two Z-type frame loops."""
        loops = homology_basis(self.lat)
        return {lo.homology_class: self.sector0.j[i] * self._crossing_sign(lo.op)
                for i, lo in enumerate(loops[:2])}

    @property
    def tableau(self) -> tuple:
        """Independent signed generating set of the current stabilizer group:
        all but one star, all but one plaquette, and the two frame loops."""
        rows = []
        for ch in self.lat.vertex_stars[:-1]:
            rows.append((ch, self._crossing_sign(ch)))
        for ch in self.lat.plaquette_checks[:-1]:
            rows.append((ch, self._crossing_sign(ch)))
        loops = homology_basis(self.lat)
        for i, lo in enumerate(loops[:2]):
            rows.append((lo.op, self.sector0.j[i] * self._crossing_sign(lo.op)))
        return tuple(rows)

    @property
    def check_signs(self) -> tuple:
        """Signs of every star then every plaquette (dependent set included)."""
        checks = list(self.lat.vertex_stars) + list(self.lat.plaquette_checks)
        return tuple(self._crossing_sign(ch) for ch in checks)

    @property
    def energy(self) -> int:
        """Number of violated (-1) checks."""
        return sum(1 for s in self.check_signs if s < 0)

    def loop_eigenvalue(self, op: PauliOp):
        """Exact eigenvalue of a loop operator on this state, else None."""
        w0 = _scalar_on_reference(self.lat, self.sector0, op)
        if w0 is None:
            return None
        val = w0 * self._crossing_sign(op)
        return int(np.real(val)) if abs(np.imag(val)) < 1e-12 else val

    def sector(self) -> SectorLabel:
        loops = homology_basis(self.lat)
        return SectorLabel(tuple(self.loop_eigenvalue(lo.op) for lo in loops[:2]))


# -------------------------------------------------- scalar-action solver

def _scalar_on_reference(lat: TorusLattice, sector0: SectorLabel, op: PauliOp):
    """Eigenvalue of op on the reference code vector, or None.

    The reference |J0> is stabilized by every check and by the two signed
    Z-type frame loops; op acts as a scalar exactly when its bit pattern is
    a GF(2) combination of those generators, and the scalar is the product
    of the combination's exact Pauli phase and the loop signs used.
    """
    n = lat.n_qubits
    loops = homology_basis(lat)
    gens = list(lat.vertex_stars) + list(lat.plaquette_checks) + \
        [loops[0].op, loops[1].op]
    rows = [(g.x_bits << n) | g.z_bits for g in gens]
    combo = gf2.solve(rows, (op.x_bits << n) | op.z_bits)
    if combo is None:
        return None
    prod = identity(n)
    val = 1.0 + 0j
    n_checks = len(gens) - 2
    for k, g in enumerate(gens):
        if combo >> k & 1:
            prod = multiply(prod, g)
            if k >= n_checks:
                val *= sector0.j[k - n_checks]
    return val * 1j ** ((op.phase - prod.phase) % 4)


def _absorb_if_scalar(state: AnyonState, cycle: PauliOp) -> AnyonState:
    """If `cycle` (already folded into applied) is a scalar on |J0>, strip
    its bits from `applied` and bank the scalar into accumulated_phase.

    The stripped word is re-gauged to the Hermitian representative of its
    bit pattern, so every scalar factor (loop eigenvalues and string
    crossing signs alike) ends up in accumulated_phase.
    """
    w0 = _scalar_on_reference(state.lat, state.sector0, cycle)
    if w0 is None:
        return state
    reduced = multiply(state.applied, cycle)
    herm_phase = (reduced.x_bits & reduced.z_bits).bit_count() % 4
    gauge = 1j ** ((reduced.phase - herm_phase) % 4)
    reduced = replace(reduced, phase=herm_phase)
    phase = state.accumulated_phase * gauge / w0
    return replace(state, applied=reduced, accumulated_phase=complex(phase))


# ------------------------------------------------------------ operations

def ground_state(lat: TorusLattice, sector=(1, 1)) -> AnyonState:
    """Anyon-free code state in the given Z-loop sector, phase +1."""
    if not isinstance(sector, SectorLabel):
        sector = SectorLabel(tuple(sector))
    return AnyonState(lat, sector, identity(lat.n_qubits), (), 1.0 + 0j, 0)


def _endpoints(lat: TorusLattice, kind: str, edge: int) -> tuple:
    return lat.edge_vertices(edge) if kind == "e" else lat.edge_faces(edge)


def _edge_operator(lat: TorusLattice, kind: str, edge: int) -> PauliOp:
    # Z strings excite the stars at their endpoints (e); X strings the
    # plaquettes (m)
    if kind == "e":
        return PauliOp(lat.n_qubits, 0, 1 << edge)
    return PauliOp(lat.n_qubits, 1 << edge, 0)


def create_pair(state: AnyonState, kind: str, edge: int) -> AnyonState:
    """Apply one edge Pauli, placing a defect pair at its two endpoints."""
    if kind not in ("e", "m"):
        raise ValueError("anyon type must be e or m")
    if not 0 <= edge < state.lat.n_qubits:
        raise ValueError("edge index out of range")
    a, b = _endpoints(state.lat, kind, edge)
    occupied = {an.position for an in state.anyons if an.kind == kind}
    if a in occupied or b in occupied:
        raise InvalidMoveError(f"endpoint already hosts an {kind} anyon")
    op = _edge_operator(state.lat, kind, edge)
    ext = identity(state.lat.n_qubits)
    pid = state.next_pair
    new = (Anyon(kind, a, ext, op, pid), Anyon(kind, b, ext, op, pid))
    return replace(state, applied=multiply(op, state.applied),
                   anyons=state.anyons + new, next_pair=pid + 1)


def _walk(lat: TorusLattice, kind: str, start: int, steps) -> tuple:
    """Follow edge steps from a node; returns (end node, visited nodes)."""
    pos = start
    visited = [start]
    for e in steps:
        a, b = _endpoints(lat, kind, e)
        if pos == a:
            pos = b
        elif pos == b:
            pos = a
        else:
            raise InvalidMoveError(f"edge {e} is not incident to node {pos}")
        visited.append(pos)
    return pos, visited


def move_anyon(state: AnyonState, index: int, path) -> AnyonState:
    """Extend one anyon's string along a connected path of edges.

    A path returning to its start is a closed cycle; if that cycle acts as
    a scalar on the reference vector (contractible, or a frame loop), the
    scalar is banked into accumulated_phase.  Terminating on a same-type
    anyon is allowed as preparation for fuse.
    """
    if not 0 <= index < len(state.anyons):
        raise ValueError("no such anyon")
    mover = state.anyons[index]
    steps = tuple(path.steps) if isinstance(path, LatticePath) else tuple(path)
    if isinstance(path, LatticePath):
        wanted = "vertex" if mover.kind == "e" else "plaquette"
        if path.kind != wanted:
            raise InvalidMoveError(f"{mover.kind} anyon needs a {wanted} path")
    if not steps:
        raise InvalidMoveError("empty path")
    end, _ = _walk(state.lat, mover.kind, mover.position, steps)
    op = identity(state.lat.n_qubits)
    for e in steps:
        op = multiply(_edge_operator(state.lat, mover.kind, e), op)
    out = replace(state, applied=multiply(op, state.applied))
    if end == mover.position:
        absorbed = _absorb_if_scalar(out, op)
        if absorbed is not out:
            # the loop acted as a scalar: the anyon record is unchanged,
            # so its string keeps only non-absorbed transport
            return absorbed
    new_anyons = list(state.anyons)
    new_anyons[index] = replace(mover, position=end,
                                string=multiply(op, mover.string))
    return replace(out, anyons=tuple(new_anyons))


# ------------------------------------------------------------------ braid

def _rectangle_cycle(lat: TorusLattice, kind: str, corner: tuple, dr: int, dc: int):
    """Boundary cycle of a dr x dc cell rectangle, clockwise from corner.

    Works in the vertex graph (kind e) or the face graph (kind m); returns
    (ordered edge steps, boundary nodes).  Node (r, c) -> node index uses
    the common row-major layout of vertices and faces.
    """
    r0, c0 = corner

    def node(r, c):
        return (r % lat.L1) * lat.L2 + (c % lat.L2)

    def step_edge(r, c, direction):
        # edge joining node (r,c) to its right/down neighbour in this graph
        if kind == "e":
            return lat.edge_index(r, c, 0 if direction == "right" else 1)
        if direction == "right":
            return lat.edge_index(r, c + 1, 1)
        return lat.edge_index(r + 1, c, 0)

    steps, nodes = [], []
    r, c = r0, c0
    for _ in range(dc):
        nodes.append(node(r, c))
        steps.append(step_edge(r, c, "right"))
        c += 1
    for _ in range(dr):
        nodes.append(node(r, c))
        steps.append(step_edge(r, c, "down"))
        r += 1
    for _ in range(dc):
        c -= 1
        nodes.append(node(r, c + 1))
        steps.append(step_edge(r, c, "right"))
    for _ in range(dr):
        r -= 1
        nodes.append(node(r + 1, c))
        steps.append(step_edge(r, c, "down"))
    return steps, nodes


def _enclosed_cells(lat: TorusLattice, kind: str, corner: tuple, dr: int, dc: int):
    """(dual-type cells, same-type interior nodes) enclosed by the rectangle."""
    r0, c0 = corner
    dual, interior = [], []
    for i in range(dr):
        for j in range(dc):
            dual.append(((r0 + i) % lat.L1) * lat.L2 + (c0 + j) % lat.L2)
    for i in range(1, dr):
        for j in range(1, dc):
            interior.append(((r0 + i) % lat.L1) * lat.L2 + (c0 + j) % lat.L2)
    if kind == "m":
        # face-graph rectangle encloses vertices shifted one step down-right
        dual = [((r0 + i + 1) % lat.L1) * lat.L2 + (c0 + j + 1) % lat.L2
                for i in range(dr) for j in range(dc)]
    return dual, interior


def braid(state: AnyonState, mover: int, around: int) -> AnyonState:
    """Carry one anyon around another along the smallest valid rectangle.

    The loop must strictly enclose the target and no other anyon of the
    phase-relevant type.  Rectangles whose boundary avoids all other
    same-type anyons are preferred (their strings commute with the loop,
    so crossing one is harmless but inelegant); remaining ties break on
    fewest edges, then the lexicographically smallest edge set.
    Encircling the dual type multiplies the phase by -1, the same type
    by +1.
    """
    if mover == around:
        raise ValueError("mover and target must differ")
    mv, tg = state.anyons[mover], state.anyons[around]
    lat = state.lat
    same_type = mv.kind == tg.kind
    same_positions = {an.position for k, an in enumerate(state.anyons)
                      if an.kind == mv.kind and k != mover}
    dual_anyons = {an.position for k, an in enumerate(state.anyons)
                   if an.kind != mv.kind and k != around}
    best = None
    for dr in range(1, lat.L1):
        for dc in range(1, lat.L2):
            for r0 in range(lat.L1):
                for c0 in range(lat.L2):
                    steps, nodes = _rectangle_cycle(lat, mv.kind, (r0, c0), dr, dc)
                    if mv.position not in nodes:
                        continue
                    dual, interior = _enclosed_cells(lat, mv.kind, (r0, c0), dr, dc)
                    target_cells = interior if same_type else dual
                    if tg.position not in target_cells:
                        continue
                    if dual_anyons & set(dual):
                        continue
                    crossed = len(same_positions & set(nodes))
                    key = (crossed, len(steps), tuple(sorted(steps)))
                    if best is None or key < best[0]:
                        best = (key, steps, nodes)
    if best is None:
        raise PathNotFoundError("no valid enclosing rectangle")
    _, steps, nodes = best
    # rotate the cycle to start at the mover's position
    k = nodes.index(mv.position)
    steps = steps[k:] + steps[:k]
    return move_anyon(state, mover, steps)


# ------------------------------------------------------------------- fuse

def fuse(state: AnyonState, a: int, b: int, via: int | None = None) -> AnyonState:
    """Annihilate a same-type pair, closing their combined string.

    The anyons must be co-located or adjacent; `via` picks the connecting
    edge when several exist (default: smallest edge index).  A contractible
    closed string leaves only a banked scalar; a non-contractible one keeps
    a frame-loop factor in `applied`, flipping the matching sector sign.
    """
    if a == b:
        raise InvalidFusionError("need two distinct anyons")
    an_a, an_b = state.anyons[a], state.anyons[b]
    if an_a.kind != an_b.kind:
        raise InvalidFusionError("cannot fuse different anyon types")
    lat = state.lat
    connector = identity(lat.n_qubits)
    out = state
    if an_a.position != an_b.position:
        if via is None:
            shared = [e for e in range(lat.n_qubits)
                      if set(_endpoints(lat, an_a.kind, e)) ==
                      {an_a.position, an_b.position}]
            if not shared:
                raise InvalidFusionError("anyons are neither adjacent nor co-located")
            via = min(shared)
        else:
            if set(_endpoints(lat, an_a.kind, via)) != {an_a.position, an_b.position}:
                raise InvalidFusionError("via edge does not connect the pair")
        connector = _edge_operator(lat, an_a.kind, via)
        out = replace(out, applied=multiply(connector, out.applied))
    cycle = multiply(connector,
                     multiply(an_a.string, multiply(an_b.string, an_a.creation)))
    remaining = tuple(an for k, an in enumerate(out.anyons) if k not in (a, b))
    out = replace(out, anyons=remaining)
    return _absorb_if_scalar(out, cycle)


# ----------------------------------------------------------- dense bridge

def dense_state(state: AnyonState, config: EngineConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Exact state vector accumulated_phase * applied |J0> (small lattices)."""
    basis = code_basis(state.lat, config)
    j_index = SECTOR_ORDER.index(tuple(state.sector0.j))
    vec = basis[:, j_index]
    return state.accumulated_phase * apply_to_vector(state.applied, vec)


def relative_phase(state_a: AnyonState, state_b: AnyonState) -> complex:
    """Exact interference phase <psi_b|psi_a> for states on the same ray.

    Demands identical lattice and reference sector; raises if the two
    states are not scalar multiples of each other.
    """
    if state_a.lat != state_b.lat or state_a.sector0 != state_b.sector0:
        raise ValueError("states share neither lattice nor reference sector")
    diff = multiply(state_b.applied.adjoint(), state_a.applied)
    w0 = _scalar_on_reference(state_a.lat, state_a.sector0, diff)
    if w0 is None:
        raise ValueError("states are not proportional")
    return complex(state_a.accumulated_phase * np.conj(state_b.accumulated_phase) * w0)


# ------------------------------------------------------- trajectory replay

def run_trajectory(lat: TorusLattice, script, sector=(1, 1)) -> dict:
    """Replay a JSON-style operation list; returns the final report.

    Each entry is {"op": name, ...args}: create_pair(type, edge),
    move(anyon, path), braid(mover, around), fuse(a, b[, via]).
    """
    state = ground_state(lat, sector)
    for k, entry in enumerate(script):
        op = entry.get("op")
        try:
            if op == "create_pair":
                state = create_pair(state, entry["type"], int(entry["edge"]))
            elif op == "move":
                state = move_anyon(state, int(entry["anyon"]),
                                   [int(e) for e in entry["path"]])
            elif op == "braid":
                state = braid(state, int(entry["mover"]), int(entry["around"]))
            elif op == "fuse":
                via = entry.get("via")
                state = fuse(state, int(entry["a"]), int(entry["b"]),
                             None if via is None else int(via))
            else:
                raise ValueError(f"unknown op {op!r}")
        except KeyError as exc:
            raise ValueError(f"step {k}: missing argument {exc}") from exc
    frame = state.frame_signs
    return {
        "phase": [float(np.real(state.accumulated_phase)),
                  float(np.imag(state.accumulated_phase))],
        "sector": [frame["g1_Z"], frame["g2_Z"]],
        "energy": state.energy,
        "open_anyons": len(state.anyons),
    }
