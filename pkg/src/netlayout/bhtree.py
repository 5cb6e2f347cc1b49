"""Barnes-Hut quadtree/octree for same-sign Coulomb summation.

The tree is stored as flat arrays so the build and the traversals can be
compiled with numba. Cells are created in breadth-first order, so every child
has a larger index than its parent and moments can be accumulated with one
reverse sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "BHTree",
    "build_tree",
    "coulomb_force",
    "coulomb_forces",
    "direct_coulomb",
    "direct_coulomb_all",
    "default_softening",
]


@dataclass(frozen=True)
class BHTree:
    """Flat-array Barnes-Hut tree.

    Cell ``c`` covers the axis-aligned cube ``center[c] +/- half[c]``. Its
    children are ``first_child[c] : first_child[c] + n_children[c]``; a cell
    with no children is a leaf holding bodies ``perm[start[c] : start[c] +
    count[c]]`` in ascending index order.
    """

    center: np.ndarray
    half: np.ndarray
    first_child: np.ndarray
    n_children: np.ndarray
    start: np.ndarray
    count: np.ndarray
    charge: np.ndarray
    coc: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    perm: np.ndarray
    positions: np.ndarray
    charges: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.half)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def is_leaf(self, c: int) -> bool:
        return self.n_children[c] == 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.n_children == 0)

    def bodies(self, c: int) -> np.ndarray:
        return self.perm[self.start[c] : self.start[c] + self.count[c]]

    def children(self, c: int) -> range:
        f = self.first_child[c]
        return range(f, f + self.n_children[c])


def default_softening(box_width: float, n: int, dim: int) -> float:
    """Softening length: 1e-3 of the mean inter-particle spacing."""
    return 1e-3 * box_width / max(n, 1) ** (1.0 / dim)


@njit(cache=True)
def _grow(a, cap):
    shape = (cap,) + a.shape[1:]
    b = np.empty(shape, a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True, inline="always")
def _add_moments(m2, m3, q, y, m2c, m3c):
    # shift a (charge q, second m2c, third m3c) moment set by y, add into m2/m3
    d = y.shape[0]
    for a in range(d):
        for b in range(d):
            m2[a, b] += m2c[a, b] + q * y[a] * y[b]
            for c in range(d):
                m3[a, b, c] += (m3c[a, b, c] + y[a] * m2c[b, c] + y[b] * m2c[a, c]
                                + y[c] * m2c[a, b] + q * y[a] * y[b] * y[c])


@njit(cache=True)
def _build(x, q, eps_cell):
    n, d = x.shape
    nsub = 1 << d
    cap = 2 * n + 16
    center = np.empty((cap, d))
    half = np.empty(cap)
    first_child = np.full(cap, -1, np.int64)
    n_children = np.zeros(cap, np.int64)
    start = np.zeros(cap, np.int64)
    count = np.zeros(cap, np.int64)

    perm = np.arange(n)
    tmp = np.empty(n, np.int64)
    codes = np.empty(n, np.int64)

    lo = x[0].copy()
    hi = x[0].copy()
    for i in range(1, n):
        for k in range(d):
            lo[k] = min(lo[k], x[i, k])
            hi[k] = max(hi[k], x[i, k])
    w = 0.0
    for k in range(d):
        center[0, k] = 0.5 * (lo[k] + hi[k])
        w = max(w, hi[k] - lo[k])
    # pad so points on the upper face stay strictly inside
    h = 0.5 * w * (1.0 + 1e-9)
    if h == 0.0:
        h = max(eps_cell, 1e-300)
    half[0] = h
    start[0] = 0
    count[0] = n
    ncells = 1

    bucket = np.zeros(nsub, np.int64)
    offs = np.zeros(nsub, np.int64)
    k_cell = 0
    while k_cell < ncells:
        c = k_cell
        k_cell += 1
        if count[c] <= 1 or 2.0 * half[c] <= eps_cell:
            continue
        s0 = start[c]
        s1 = s0 + count[c]
        bucket[:] = 0
        for p in range(s0, s1):
            i = perm[p]
            code = 0
            for k in range(d):
                if x[i, k] >= center[c, k]:
                    code |= 1 << k
            codes[p] = code
            bucket[code] += 1
        acc = s0
        for o in range(nsub):
            offs[o] = acc
            acc += bucket[o]
        # stable counting sort keeps ascending body order inside each child
        for p in range(s0, s1):
            o = codes[p]
            tmp[offs[o]] = perm[p]
            offs[o] += 1
        perm[s0:s1] = tmp[s0:s1]

        nnew = 0
        for o in range(nsub):
            if bucket[o] > 0:
                nnew += 1
        if ncells + nnew > cap:
            cap = max(2 * cap, ncells + nnew)
            center = _grow(center, cap)
            half = _grow(half, cap)
            first_child = _grow(first_child, cap)
            n_children = _grow(n_children, cap)
            start = _grow(start, cap)
            count = _grow(count, cap)
        first_child[c] = ncells
        n_children[c] = nnew
        hc = 0.5 * half[c]
        acc = s0
        for o in range(nsub):
            if bucket[o] == 0:
                continue
            cc = ncells
            ncells += 1
            for k in range(d):
                if (o >> k) & 1:
                    center[cc, k] = center[c, k] + hc
                else:
                    center[cc, k] = center[c, k] - hc
            half[cc] = hc
            first_child[cc] = -1
            n_children[cc] = 0
            start[cc] = acc
            count[cc] = bucket[o]
            acc += bucket[o]

    charge = np.zeros(ncells)
    coc = np.zeros((ncells, d))
    m2 = np.zeros((ncells, d, d))
    m3 = np.zeros((ncells, d, d, d))
    zero2 = np.zeros((d, d))
    zero3 = np.zeros((d, d, d))
    y = np.zeros(d)
    for c in range(ncells - 1, -1, -1):
        if n_children[c] == 0:
            for p in range(start[c], start[c] + count[c]):
                i = perm[p]
                charge[c] += q[i]
                for k in range(d):
                    coc[c, k] += q[i] * x[i, k]
        else:
            f = first_child[c]
            for cc in range(f, f + n_children[c]):
                charge[c] += charge[cc]
                for k in range(d):
                    coc[c, k] += charge[cc] * coc[cc, k]
        for k in range(d):
            coc[c, k] /= charge[c]
        # raw second and third moments about the center of charge
        if n_children[c] == 0:
            for p in range(start[c], start[c] + count[c]):
                i = perm[p]
                for k in range(d):
                    y[k] = x[i, k] - coc[c, k]
                _add_moments(m2[c], m3[c], q[i], y, zero2, zero3)
        else:
            f = first_child[c]
            for cc in range(f, f + n_children[c]):
                for k in range(d):
                    y[k] = coc[cc, k] - coc[c, k]
                _add_moments(m2[c], m3[c], charge[cc], y, m2[cc], m3[cc])
    return (
        center[:ncells].copy(),
        half[:ncells].copy(),
        first_child[:ncells].copy(),
        n_children[:ncells].copy(),
        start[:ncells].copy(),
        count[:ncells].copy(),
        charge,
        coc,
        m2,
        m3,
        perm,
    )


def build_tree(positions, charges, eps_cell: float | None = None) -> BHTree:
    """Build a Barnes-Hut tree over ``positions`` (N x d, d in {2, 3}).

    Bodies closer together than ``eps_cell`` end up in a shared leaf instead
    of forcing unbounded subdivision. The default is 2**-40 of the root width.
    """
    x = np.ascontiguousarray(positions, dtype=np.float64)
    q = np.ascontiguousarray(charges, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("build_tree needs a non-empty N x d position array")
    if x.shape[1] not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {x.shape[1]}")
    if q.shape != (x.shape[0],):
        raise ValueError("charges must have one entry per body")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite position in build_tree")
    if not (np.all(q > 0) or np.all(q < 0)):
        raise ValueError("charges must be non-zero and share one sign")
    if eps_cell is None:
        width = float(np.max(x.max(axis=0) - x.min(axis=0)))
        eps_cell = width * 2.0**-40
    arrays = _build(x, q, float(eps_cell))
    return BHTree(*arrays, positions=x, charges=q)


@njit(cache=True, inline="always")
def _accumulate(f, xi, xj, qj, eps2):
    d = xi.shape[0]
    r2 = 0.0
    for k in range(d):
        dx = xi[k] - xj[k]
        r2 += dx * dx
    r2 += eps2
    inv3 = qj / (r2 * np.sqrt(r2))
    for k in range(d):
        f[k] += (xi[k] - xj[k]) * inv3


@njit(cache=True)
def _pack_moments(m2, m3):
    # unique components of the symmetric tensors, plus the m3 partial traces
    nc, d = m2.shape[0], m2.shape[1]
    if d == 3:
        p = np.empty((nc, 19))
        for c in range(nc):
            p[c, 0] = m2[c, 0, 0]
            p[c, 1] = m2[c, 0, 1]
            p[c, 2] = m2[c, 0, 2]
            p[c, 3] = m2[c, 1, 1]
            p[c, 4] = m2[c, 1, 2]
            p[c, 5] = m2[c, 2, 2]
            p[c, 6] = m3[c, 0, 0, 0]
            p[c, 7] = m3[c, 0, 0, 1]
            p[c, 8] = m3[c, 0, 0, 2]
            p[c, 9] = m3[c, 0, 1, 1]
            p[c, 10] = m3[c, 0, 1, 2]
            p[c, 11] = m3[c, 0, 2, 2]
            p[c, 12] = m3[c, 1, 1, 1]
            p[c, 13] = m3[c, 1, 1, 2]
            p[c, 14] = m3[c, 1, 2, 2]
            p[c, 15] = m3[c, 2, 2, 2]
            p[c, 16] = p[c, 6] + p[c, 9] + p[c, 11]
            p[c, 17] = p[c, 7] + p[c, 12] + p[c, 14]
            p[c, 18] = p[c, 8] + p[c, 13] + p[c, 15]
    else:
        p = np.empty((nc, 9))
        for c in range(nc):
            p[c, 0] = m2[c, 0, 0]
            p[c, 1] = m2[c, 0, 1]
            p[c, 2] = m2[c, 1, 1]
            p[c, 3] = m3[c, 0, 0, 0]
            p[c, 4] = m3[c, 0, 0, 1]
            p[c, 5] = m3[c, 0, 1, 1]
            p[c, 6] = m3[c, 1, 1, 1]
            p[c, 7] = p[c, 3] + p[c, 5]
            p[c, 8] = p[c, 4] + p[c, 6]
    return p


# Quadrupole and octupole field terms of the 1/r potential, obtained by
# contracting raw moments with the third and fourth derivative tensors of 1/r:
#   quad_k = 15/2 r_k (r.M2.r)/r^7 - 3/2 (2 (M2.r)_k + tr(M2) r_k)/r^5
#   oct_k  = 35/2 r_k (M3:rrr)/r^9 - 15/2 ((M3:rr)_k + r_k (t.r))/r^7
#            + 3/2 t_k/r^5,  with t_k = M3_kaa


@njit(cache=True, inline="always")
def _multipole3(f, xi, yc, pm, eps2):
    x = xi[0] - yc[0]
    y = xi[1] - yc[1]
    z = xi[2] - yc[2]
    inv2 = 1.0 / (x * x + y * y + z * z + eps2)
    inv5 = inv2 * inv2 * np.sqrt(inv2)
    inv7 = inv5 * inv2
    inv9 = inv7 * inv2
    a00, a01, a02, a11, a12, a22 = pm[0], pm[1], pm[2], pm[3], pm[4], pm[5]
    u0 = a00 * x + a01 * y + a02 * z
    u1 = a01 * x + a11 * y + a12 * z
    u2 = a02 * x + a12 * y + a22 * z
    s2 = u0 * x + u1 * y + u2 * z
    tq = a00 + a11 + a22
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = 2.0 * x * y, 2.0 * x * z, 2.0 * y * z
    v0 = pm[6] * xx + pm[9] * yy + pm[11] * zz + pm[7] * xy + pm[8] * xz + pm[10] * yz
    v1 = pm[7] * xx + pm[12] * yy + pm[14] * zz + pm[9] * xy + pm[10] * xz + pm[13] * yz
    v2 = pm[8] * xx + pm[13] * yy + pm[15] * zz + pm[10] * xy + pm[11] * xz + pm[14] * yz
    t0, t1, t2 = pm[16], pm[17], pm[18]
    s3 = v0 * x + v1 * y + v2 * z
    tr = t0 * x + t1 * y + t2 * z
    g = 7.5 * s2 * inv7 - 1.5 * tq * inv5 + 17.5 * s3 * inv9 - 7.5 * tr * inv7
    f[0] += g * x - 3.0 * u0 * inv5 - 7.5 * v0 * inv7 + 1.5 * t0 * inv5
    f[1] += g * y - 3.0 * u1 * inv5 - 7.5 * v1 * inv7 + 1.5 * t1 * inv5
    f[2] += g * z - 3.0 * u2 * inv5 - 7.5 * v2 * inv7 + 1.5 * t2 * inv5


@njit(cache=True, inline="always")
def _multipole2(f, xi, yc, pm, eps2):
    x = xi[0] - yc[0]
    y = xi[1] - yc[1]
    inv2 = 1.0 / (x * x + y * y + eps2)
    inv5 = inv2 * inv2 * np.sqrt(inv2)
    inv7 = inv5 * inv2
    inv9 = inv7 * inv2
    a00, a01, a11 = pm[0], pm[1], pm[2]
    u0 = a00 * x + a01 * y
    u1 = a01 * x + a11 * y
    s2 = u0 * x + u1 * y
    tq = a00 + a11
    xx, yy, xy = x * x, y * y, 2.0 * x * y
    v0 = pm[3] * xx + pm[5] * yy + pm[4] * xy
    v1 = pm[4] * xx + pm[6] * yy + pm[5] * xy
    t0, t1 = pm[7], pm[8]
    s3 = v0 * x + v1 * y
    tr = t0 * x + t1 * y
    g = 7.5 * s2 * inv7 - 1.5 * tq * inv5 + 17.5 * s3 * inv9 - 7.5 * tr * inv7
    f[0] += g * x - 3.0 * u0 * inv5 - 7.5 * v0 * inv7 + 1.5 * t0 * inv5
    f[1] += g * y - 3.0 * u1 * inv5 - 7.5 * v1 * inv7 + 1.5 * t1 * inv5


@njit(cache=True)
def _direct_one(i, x, q, eps2):
    n, d = x.shape
    f = np.zeros(d)
    for j in range(n):
        if j != i:
            _accumulate(f, x[i], x[j], q[j], eps2)
    return f


@njit(cache=True)
def _direct_all(x, q, c_const, eps2):
    n, d = x.shape
    out = np.empty((n, d))
    for i in range(n):
        f = _direct_one(i, x, q, eps2)
        for k in range(d):
            out[i, k] = c_const * q[i] * f[k]
    return out


@njit(cache=True)
def _open_radius2(center, half, coc, theta):
    # squared distance beyond which a cell may stand in for its bodies:
    # s/r < theta, tightened by the center-of-charge offset from the center
    nc, d = coc.shape
    out = np.empty(nc)
    for c in range(nc):
        off2 = 0.0
        for k in range(d):
            off2 += (coc[c, k] - center[c, k]) ** 2
        if theta == 0.0:
            out[c] = np.inf
        else:
            lim = 2.0 * half[c] / theta + np.sqrt(off2)
            out[c] = lim * lim
    return out


@njit(cache=True)
def _tree_one(i, x, q, center, half, first_child, n_children, start, count,
              charge, coc, pm, perm, open2, eps2, ordered, stack, buf, f):
    d = x.shape[1]
    f[:] = 0.0
    xi = x[i]
    nbuf = 0
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        c = stack[sp]
        if n_children[c] == 0:
            for p in range(start[c], start[c] + count[c]):
                j = perm[p]
                if j == i:
                    continue
                if ordered:
                    buf[nbuf] = j
                    nbuf += 1
                else:
                    _accumulate(f, xi, x[j], q[j], eps2)
            continue
        if not ordered:
            r2 = 0.0
            inside = True
            for k in range(d):
                dx = xi[k] - coc[c, k]
                r2 += dx * dx
                if abs(xi[k] - center[c, k]) > half[c]:
                    inside = False
            if not inside and r2 > open2[c]:
                _accumulate(f, xi, coc[c], charge[c], eps2)
                if d == 3:
                    _multipole3(f, xi, coc[c], pm[c], eps2)
                else:
                    _multipole2(f, xi, coc[c], pm[c], eps2)
                continue
        fc = first_child[c]
        for cc in range(fc + n_children[c] - 1, fc - 1, -1):
            stack[sp] = cc
            sp += 1
    if ordered:
        js = np.sort(buf[:nbuf])
        for t in range(nbuf):
            j = js[t]
            _accumulate(f, xi, x[j], q[j], eps2)


@njit(cache=True)
def _tree_forces(idx, x, q, center, half, first_child, n_children, start, count,
                 charge, coc, m2, m3, perm, theta, c_const, eps2):
    n, d = x.shape
    out = np.empty((len(idx), d))
    open2 = _open_radius2(center, half, coc, theta)
    ordered = theta == 0.0
    stack = np.empty(len(half) * 8 + 8, np.int64)
    buf = np.empty(n if ordered else 1, np.int64)
    pm = _pack_moments(m2, m3)
    f = np.zeros(d)
    for t in range(len(idx)):
        i = idx[t]
        _tree_one(i, x, q, center, half, first_child, n_children, start, count,
                  charge, coc, pm, perm, open2, eps2, ordered, stack, buf, f)
        for k in range(d):
            out[t, k] = c_const * q[i] * f[k]
    return out


def _tree_args(tree: BHTree):
    return (
        tree.positions, tree.charges, tree.center, tree.half, tree.first_child,
        tree.n_children, tree.start, tree.count, tree.charge, tree.coc,
        tree.m2, tree.m3, tree.perm,
    )


def coulomb_force(tree: BHTree, i: int, theta: float, C: float = 1.0,
                  eps: float = 0.0) -> np.ndarray:
    """Barnes-Hut estimate of the Coulomb force on body ``i``.

    A cell of width ``s`` whose center of charge is at distance ``r`` is used
    as a single pseudo-particle (monopole plus quadrupole and octupole
    corrections) when ``s / r < theta``, body ``i`` lies outside it, and ``r``
    also clears the offset between the cell's center of charge and its
    geometric center. With ``theta == 0`` every cell is opened and the leaf
    terms are summed in ascending body order, reproducing
    :func:`direct_coulomb` exactly.
    """
    n = tree.positions.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"body index {i} out of range for {n} bodies")
    if theta < 0:
        raise ValueError("theta must be >= 0")
    idx = np.array([i], dtype=np.int64)
    return _tree_forces(idx, *_tree_args(tree), float(theta), float(C),
                        float(eps) ** 2)[0]


def coulomb_forces(tree: BHTree, theta: float, C: float = 1.0,
                   eps: float = 0.0) -> np.ndarray:
    """Barnes-Hut Coulomb forces on all bodies, shape (N, d)."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    # tree order keeps neighbouring traversals cache-local
    idx = tree.perm
    out = np.empty_like(tree.positions)
    out[idx] = _tree_forces(idx, *_tree_args(tree), float(theta), float(C),
                            float(eps) ** 2)
    return out


def direct_coulomb(i: int, C: float, q, x, eps: float = 0.0) -> np.ndarray:
    """Exact pairwise Coulomb force on body ``i``, summed in index order."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    if not 0 <= i < x.shape[0]:
        raise IndexError(f"body index {i} out of range for {x.shape[0]} bodies")
    return C * q[i] * _direct_one(i, x, q, float(eps) ** 2)


def direct_coulomb_all(C: float, q, x, eps: float = 0.0) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    return _direct_all(x, q, float(C), float(eps) ** 2)
