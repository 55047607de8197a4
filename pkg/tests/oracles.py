"""Independent reference computations used by the tests.

None of these share code with the package: zonal polynomials come from the
Legendre generating function (two variables) or from Gram-Schmidt in the
power-sum inner product (any number of variables), and the geometry oracles
build transforms by conjugation and lines from two points.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------------------
# partitions and symmetric functions


def brute_partitions(n: int, max_len: int) -> set:
    """All partitions of ``n`` with at most ``max_len`` parts, by filtering compositions."""
    out = set()
    for k in range(0, max_len + 1):
        for comp in itertools.product(range(1, n + 1), repeat=k):
            if sum(comp) == n:
                out.add(tuple(sorted(comp, reverse=True)))
    return out


def pochhammer_direct(a: Fraction, nu) -> Fraction:
    out = Fraction(1)
    for i, part in enumerate(nu):
        b = a - Fraction(i, 2)
        for j in range(part):
            out *= b + j
    return out


def _legendre_coefficients(k: int) -> dict:
    """Exact ``P_k(c) = sum_j a_j c^j``."""
    out = {}
    for m in range(k // 2 + 1):
        out[k - 2 * m] = Fraction((-1) ** m * math.comb(k, m) * math.comb(2 * k - 2 * m, k), 2 ** k)
    return out


def _poly_mul(p, q):
    out = {}
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            key = (a1 + a2, b1 + b2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _poly_pow(p, n):
    out = {(0, 0): Fraction(1)}
    for _ in range(n):
        out = _poly_mul(out, p)
    return out


def _legendre_row(k: int) -> dict:
    """``r^k P_k((x1 + x2) / (2 r))`` with ``r^2 = x1 x2`` as a polynomial ``{(e1, e2): coef}``."""
    total = {}
    s = {(1, 0): Fraction(1), (0, 1): Fraction(1)}
    prod = {(1, 1): Fraction(1)}
    for j, a in _legendre_coefficients(k).items():
        # r^k c^j = (x1 + x2)^j / 2^j * (x1 x2)^((k - j) / 2)
        term = _poly_mul(_poly_pow(s, j), _poly_pow(prod, (k - j) // 2))
        for key, v in term.items():
            total[key] = total.get(key, 0) + a * v / 2 ** j
    return {k_: v for k_, v in total.items() if v}


@lru_cache(maxsize=None)
def legendre_zonal_layer(n: int) -> dict:
    """Two-variable zonal polynomials of weight ``n`` as exact monomial dictionaries.

    ``C_(k1, k2)`` is proportional to ``(x1 x2)^k2 r^k P_k(c)`` with
    ``k = k1 - k2``; the scale factors are fixed by
    ``sum_nu C_nu = (x1 + x2)^n``, solved from the leading monomials.
    """
    shapes = {}
    for k2 in range(n // 2 + 1):
        k1 = n - k2
        shapes[(k1, k2)] = _poly_mul(_legendre_row(k1 - k2), {(k2, k2): Fraction(1)})
    target = _poly_pow({(1, 0): Fraction(1), (0, 1): Fraction(1)}, n)
    # each shape's highest x1 power is k1; solve top-down
    remaining = dict(target)
    scales = {}
    for nu in sorted(shapes, reverse=True):
        lead = shapes[nu][(nu[0], nu[1])]
        scales[nu] = remaining.get((nu[0], nu[1]), Fraction(0)) / lead
        for key, v in shapes[nu].items():
            remaining[key] = remaining.get(key, 0) - scales[nu] * v
    assert all(v == 0 for v in remaining.values())
    return {tuple(p for p in nu if p): {key: scales[nu] * v for key, v in poly.items()}
            for nu, poly in shapes.items()}


def eval_poly2(poly: dict, y1: float, y2: float) -> float:
    return math.fsum(float(c) * y1 ** a * y2 ** b for (a, b), c in poly.items())


def monomial_coefficients_2var(coefs: dict) -> dict:
    """Expand ``{mu: c}`` over monomial symmetric functions into ``{(e1, e2): c}``."""
    out = {}
    for mu, c in coefs.items():
        mu = tuple(mu) + (0,) * (2 - len(mu))
        for perm in set(itertools.permutations(mu)):
            out[perm] = out.get(perm, 0) + c
    return {k: v for k, v in out.items() if v}


def _all_partitions(n):
    return sorted(brute_partitions(n, n), reverse=True)


def _power_sum_in_monomials(mu, n):
    """Coefficients of ``p_mu`` over ``m_lambda`` (|lambda| = n), by counting."""
    out = {}
    k = len(mu)
    # assign each part of mu to a variable index in 0..n-1; collect exponent vectors
    for assign in itertools.product(range(n), repeat=k):
        exps = [0] * n
        for part, var in zip(mu, assign):
            exps[var] += part
        lam = tuple(sorted((e for e in exps if e), reverse=True))
        # count only the representative exponent vector (sorted, left-justified)
        if tuple(exps[:len(lam)]) == lam and all(e == 0 for e in exps[len(lam):]):
            out[lam] = out.get(lam, 0) + 1
    return out


def _z(mu):
    out = 1
    for part in set(mu):
        m = mu.count(part)
        out *= part ** m * math.factorial(m)
    return out


@lru_cache(maxsize=None)
def gram_schmidt_zonal_layer(n: int, alpha: int = 2) -> dict:
    """Zonal polynomials of weight ``n`` over ``m_lambda`` in any number of variables.

    Monomials are orthogonalized in increasing dominance-compatible order
    under ``<p_l, p_m> = delta z_l alpha^len(l)``, giving Jack polynomials,
    then scaled so they sum to ``p_1^n``.
    """
    parts = _all_partitions(n)
    idx = {lam: i for i, lam in enumerate(parts)}
    N = len(parts)
    # P[mu][lam]: coefficient of m_lam in p_mu
    P = [[Fraction(0)] * N for _ in range(N)]
    for mu in parts:
        for lam, c in _power_sum_in_monomials(mu, n).items():
            P[idx[mu]][idx[lam]] = Fraction(c)
    Q = _inverse(P)  # m_lam = sum_mu Q[lam][mu] p_mu
    Z = [Fraction(_z(mu) * alpha ** len(mu)) for mu in parts]

    def inner(u, v):  # u, v over monomials
        pu = [sum(u[l] * Q[l][m] for l in range(N)) for m in range(N)]
        pv = [sum(v[l] * Q[l][m] for l in range(N)) for m in range(N)]
        return sum(pu[m] * pv[m] * Z[m] for m in range(N))

    order = list(reversed(parts))  # (1^n) first
    basis = {}
    for lam in order:
        v = [Fraction(0)] * N
        v[idx[lam]] = Fraction(1)
        for prev in basis.values():
            c = inner(v, prev) / inner(prev, prev)
            v = [a - c * b for a, b in zip(v, prev)]
        basis[lam] = v
    # p_1^n over monomials
    target = [P[idx[(1,) * n]][j] for j in range(N)]
    scales = {}
    remaining = list(target)
    for lam in parts:  # leading monomial of each Jack is m_lam itself
        s = remaining[idx[lam]] / basis[lam][idx[lam]]
        scales[lam] = s
        remaining = [a - s * b for a, b in zip(remaining, basis[lam])]
    assert all(r == 0 for r in remaining)
    return {lam: {parts[j]: scales[lam] * basis[lam][j] for j in range(N) if basis[lam][j]}
            for lam in parts}


def _inverse(A):
    n = len(A)
    M = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:] for row in M]


def eval_monomial_symmetric(mu, y) -> float:
    exps = list(mu) + [0] * (len(y) - len(mu))
    if len(mu) > len(y):
        return 0.0
    return math.fsum(math.prod(v ** e for v, e in zip(y, perm)) for perm in set(itertools.permutations(exps)))


def brute_hyp0f1(lam1: float, lam2: float, truncation: int) -> float:
    """Double sum over weights and partitions with Legendre-oracle zonal values."""
    y1, y2 = lam1 * lam1 / 4.0, lam2 * lam2 / 4.0
    terms = []
    for n in range(truncation + 1):
        for nu, poly in legendre_zonal_layer(n).items():
            c = eval_poly2(poly, y1, y2) if nu else 1.0
            terms.append(c / float(pochhammer_direct(Fraction(3, 2), nu)) / math.factorial(n))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# geometry


def rotation_about(axis, angle):
    """Rotation matrix via scipy-free quaternion construction."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    w = math.cos(angle / 2)
    x, y, z = axis * math.sin(angle / 2)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def homogeneous(R, t):
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def screw_by_conjugation(point, direction, theta, d):
    """Translate the axis to the origin, rotate, translate back, slide along the axis."""
    direction = np.asarray(direction, dtype=float)
    to_origin = homogeneous(np.eye(3), -np.asarray(point))
    back = homogeneous(np.eye(3), np.asarray(point))
    rot = homogeneous(rotation_about(direction, theta), np.zeros(3))
    slide = homogeneous(np.eye(3), d * direction)
    return slide @ back @ rot @ to_origin


def line_from_points(a, b):
    """Plücker ``(direction, moment)`` of the line through two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = (b - a) / np.linalg.norm(b - a)
    return u, np.cross(a, u)


def skew_line_distance(p1, u1, p2, u2):
    """Minimise ``|p1 + s u1 - p2 - t u2|`` by solving the 2x2 normal equations."""
    A = np.array([[u1 @ u1, -(u1 @ u2)], [u1 @ u2, -(u2 @ u2)]])
    b = np.array([(p2 - p1) @ u1, (p2 - p1) @ u2])
    s, t = np.linalg.solve(A, b)
    return float(np.linalg.norm(p1 + s * u1 - p2 - t * u2))
