"""GF(2) linear algebra on int-packed bit vectors.

Vectors are Python ints (bit i = coordinate i).  Everything here is exact;
these routines back the rank/membership arguments that the numerical modules
then cross-check in floating point.
"""


def _eliminate(rows):
    """Row reduce, tracking which input rows combine into each pivot row.

    Returns a list of (pivot_bit, vector, combo) with distinct pivot bits,
    where combo is a bitmask over the input row indices.
    """
    basis = []  # (pivot, vector, combo)
    for i, row in enumerate(rows):
        v, c = row, 1 << i
        for p, bv, bc in basis:
            if v >> p & 1:
                v ^= bv
                c ^= bc
        if v:
            basis.append((v.bit_length() - 1, v, c))
            basis.sort(reverse=True)
    return basis


def rank(rows) -> int:
    return len(_eliminate(rows))


def solve(rows, target):
    """Express target in the span of rows.

    Returns a bitmask over row indices whose XOR equals target, or None if
    target is outside the span.  The mask is the canonical one produced by
    elimination order, so identical inputs give identical certificates.
    """
    basis = _eliminate(rows)
    v, c = target, 0
    for p, bv, bc in basis:
        if v >> p & 1:
            v ^= bv
            c ^= bc
    return c if v == 0 else None


def in_span(rows, target) -> bool:
    return solve(rows, target) is not None


def nullspace(rows, width):
    """Basis of {x : parity(row & x) == 0 for every row}.

    rows are constraint vectors over `width` coordinates; returns int-packed
    basis vectors of the solution space (dimension width - rank).
    """
    pivots = []  # (pivot_col, reduced_row)
    for row in rows:
        v = row
        for p, bv in pivots:
            if v >> p & 1:
                v ^= bv
        if v:
            pivots.append((v.bit_length() - 1, v))
            pivots.sort(reverse=True)
    # full reduction so every pivot column appears in exactly one row
    for i, (p, bv) in enumerate(pivots):
        for q, bw in pivots:
            if q != p and bv >> q & 1:
                bv ^= bw
        pivots[i] = (p, bv)
    pivot_cols = {p for p, _ in pivots}
    out = []
    for free in range(width):
        if free in pivot_cols:
            continue
        x = 1 << free
        for p, bv in pivots:
            if (bv & x).bit_count() % 2:
                x |= 1 << p
        out.append(x)
    return out


def span_members(rows):
    """All 2^rank distinct span elements (small rank only).

    Dependent input rows are reduced first, so each member appears once.
    """
    vecs = [0]
    for _, vec, _ in _eliminate(rows):
        vecs += [v ^ vec for v in vecs]
    return vecs
