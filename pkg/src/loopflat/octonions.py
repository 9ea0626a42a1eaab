"""Octonion product on Im(O) = R^7 and the derivation algebra g2.

Basis of the imaginary octonions, in order: i, j, k, x, ix, jx, kx, identified
with e_1 .. e_7.  Quaternion rules hold on i, j, k; x squares to -1; the
products of ix, jx, kx with the other units are the table below (row times
column); all remaining products follow from anticommutativity.
"""
import itertools

import numpy as np
import sympy

UNITS = ("1", "i", "j", "k", "x", "ix", "jx", "kx")

_ROWS = {
    "ix": ("x", "-kx", "jx", "-i", "-1", "-k", "j"),
    "jx": ("kx", "x", "-ix", "-j", "k", "-1", "-i"),
    "kx": ("-jx", "ix", "x", "-k", "-j", "i", "-1"),
}
_COLS = ("i", "j", "k", "x", "ix", "jx", "kx")


def _signed(token):
    if token.startswith("-"):
        return -1, UNITS.index(token[1:])
    return 1, UNITS.index(token)


def _build_table():
    # table[a, b] = (sign, index) with e_a e_b = sign * e_index
    table = {}
    for a in range(8):
        table[0, a] = (1, a)
        table[a, 0] = (1, a)
    for a in range(1, 8):
        table[a, a] = (-1, 0)

    def put(a, b, token):
        s, c = _signed(token)
        table[UNITS.index(a), UNITS.index(b)] = (s, c)
        if a != b:
            table[UNITS.index(b), UNITS.index(a)] = (-s, c)

    put("i", "j", "k")
    put("j", "k", "i")
    put("k", "i", "j")
    for q in ("i", "j", "k"):
        put(q, "x", q + "x")
    for row, entries in _ROWS.items():
        for col, token in zip(_COLS, entries):
            if row != col:
                put(row, col, token)
    if len(table) != 64:
        raise RuntimeError("octonion table incomplete")
    return table


TABLE = _build_table()

# structure tensor on R^8: (e_a e_b)_c = STRUCT[a, b, c]
STRUCT = np.zeros((8, 8, 8))
for (_a, _b), (_s, _c) in TABLE.items():
    STRUCT[_a, _b, _c] = _s


def multiply(u, v):
    """Octonion product of two length-8 vectors (real part first)."""
    return np.einsum("a,b,abc->c", u, v, STRUCT)


def imag_multiply(u, v):
    """Product of two imaginary octonions given as length-7 vectors, as an 8-vector."""
    return multiply(np.concatenate([[0.0], u]), np.concatenate([[0.0], v]))


def right_multiplication(u):
    """7x7 matrix of v -> (v u) restricted to Im(O), for unit imaginary u.

    On the orthogonal complement of u this is the almost complex structure of
    S^6 at u.
    """
    u8 = np.concatenate([[0.0], u])
    full = np.einsum("b,abc->ca", u8, STRUCT)
    return full[1:, 1:]


def alternativity_defect():
    """Largest violation of (aa)b = a(ab) and (ab)b = a(bb) over basis units."""
    eye = np.eye(8)
    worst = 0.0
    for a, b in itertools.product(range(8), repeat=2):
        ea, eb = eye[a], eye[b]
        left = multiply(multiply(ea, ea), eb) - multiply(ea, multiply(ea, eb))
        right = multiply(multiply(ea, eb), eb) - multiply(ea, multiply(eb, eb))
        worst = max(worst, np.abs(left).max(), np.abs(right).max())
    return worst


def derivation_constraints():
    """Integer matrix M with M @ vec(D) = 0 iff D (7x7) is a derivation of Im(O).

    Rows enforce D(e_a e_b) = D(e_a) e_b + e_a D(e_b) for all 49 ordered pairs,
    where D acts by zero on the real unit.  vec is row-major.
    """
    rows = []
    for a in range(1, 8):
        for b in range(1, 8):
            # each component c of the identity is linear in the 49 entries D[p, q]
            block = np.zeros((8, 7, 7), dtype=int)
            s, c = TABLE[a, b]
            if c != 0:
                # D(e_c) = sum_p D[p, c-1] e_p
                for p in range(7):
                    block[p + 1, p, c - 1] += s
            for p in range(7):
                # D(e_a) e_b = sum_p D[p, a-1] e_{p+1} e_b
                s2, c2 = TABLE[p + 1, b]
                block[c2, p, a - 1] -= s2
                # e_a D(e_b)
                s3, c3 = TABLE[a, p + 1]
                block[c3, p, b - 1] -= s3
            rows.extend(block.reshape(8, 49))
    return np.array(rows)


def g2_basis():
    """Basis of the 14-dimensional derivation algebra as 7x7 real matrices.

    Computed as the exact rational null space of the derivation constraints;
    ordering follows sympy's free-column order of the reduced row echelon form.
    """
    M = sympy.Matrix(derivation_constraints())
    null = M.nullspace()
    mats = []
    for vec in null:
        D = np.array([float(v) for v in vec]).reshape(7, 7)
        mats.append(D)
    return mats
