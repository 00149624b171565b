"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating-point evaluation order where it matters (the tree
sampler is bit-for-bit identical between the two backends).
"""

import numpy as np

# Upper bound on the number of float64 temporaries materialised per chunk
# in the broadcasted distance computation.
_CHUNK_ELEMS = 1 << 22


def assign_sq(X, C):
    """Nearest center (lowest index on ties) and squared distance per row."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, k * d))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = X[lo:hi, None, :] - C[None, :, :]
        d2 = np.einsum("ikj,ikj->ik", diff, diff)
        lab = np.argmin(d2, axis=1)
        labels[lo:hi] = lab
        best[lo:hi] = d2[np.arange(hi - lo), lab]
    return labels, best


def count_cells(X, origin, side, threshold):
    """Number of distinct grid cells hit by ``X``, capped at ``threshold``.

    Cell ids are ``floor((x - origin) / side)`` kept as float64 so that
    astronomically large index ranges do not overflow.
    """
    X = np.asarray(X, dtype=np.float64)
    cells = np.floor((X - origin) / side)
    # -0.0 and 0.0 must collapse to one key
    cells += 0.0
    view = np.ascontiguousarray(cells).view(
        np.dtype((np.void, cells.dtype.itemsize * cells.shape[1]))
    )
    count = np.unique(view.ravel()).shape[0]
    return min(count, threshold)


def block_sums(val, block):
    """Sequential per-block sums of ``val``."""
    n = val.shape[0]
    nb = (n + block - 1) // block
    out = np.empty(nb, dtype=np.float64)
    for b in range(nb):
        out[b] = np.cumsum(val[b * block:(b + 1) * block])[-1]
    return out


def _refresh_blocks(val, bsum, lo, hi, block):
    n = val.shape[0]
    for b in range(lo // block, (hi - 1) // block + 1):
        bsum[b] = np.cumsum(val[b * block:min(n, (b + 1) * block)])[-1]


def tree_draw(val, bsum, uniform, block):
    """Index drawn with probability proportional to ``val`` (-1 if all zero).

    ``uniform`` in [0, 1) is scaled by the sequential total of ``bsum``.
    """
    cb = np.cumsum(bsum)
    total = cb[-1]
    if not total > 0.0:
        return -1
    target = uniform * total
    b = int(np.searchsorted(cb, target, side="right"))
    if b >= bsum.shape[0]:
        b = int(np.flatnonzero(bsum > 0)[-1])
    acc = cb[b - 1] if b > 0 else 0.0
    seg = val[b * block:(b + 1) * block]
    cw = np.cumsum(np.concatenate(([acc], seg)))[1:]
    hit = np.flatnonzero(cw > target)
    if hit.shape[0]:
        return b * block + int(hit[0])
    return b * block + int(np.flatnonzero(seg > 0)[-1])


def tree_insert(start, end, w, levelcost, u, owner, val, bsum, pos, j, block):
    """Make sorted position ``pos`` center ``j``, updating in place.

    Points are in hierarchical order so that the cell of point ``i`` at
    level ``l`` is the contiguous range ``[start[l, i], end[l, i])``.
    ``u[i]`` is the deepest level at which ``i`` shares a cell with a chosen
    center (-1 before any center shares even a level-0 cell); the sampling
    mass of ``i`` is ``w[i] * levelcost[u[i] + 1]`` and ``owner[i]`` is the
    center whose subtree is deepest for ``i``. Only the cell of ``pos`` at
    level ``u[pos] + 1`` changes.
    """
    L = start.shape[0] - 1
    a = int(u[pos])
    lo = int(start[a + 1, pos])
    hi = int(end[a + 1, pos])
    for lev in range(a + 1, L + 1):
        s = int(start[lev, pos])
        e = int(end[lev, pos])
        if lev < L:
            ns = int(start[lev + 1, pos])
            ne = int(end[lev + 1, pos])
        else:
            ns = ne = e
        for a_, b_ in ((s, ns), (ne, e)):
            if b_ > a_:
                u[a_:b_] = lev
                owner[a_:b_] = j
                val[a_:b_] = w[a_:b_] * levelcost[lev + 1]
    _refresh_blocks(val, bsum, lo, hi, block)


def _seq_dist(x, c, z):
    diff = x - c
    d2 = np.cumsum(diff * diff)[-1]
    return d2 if z == 2 else np.sqrt(d2)


def tree_propose(val, bsum, u, owner, levelcost, Xs, C, j, z, uniforms, block):
    """Rejection-sample one new center from the tree proposal.

    Trial ``t`` draws a point with ``uniforms[2t]`` and accepts it when
    ``uniforms[2t+1] * tree_cost < dist(p, C[:j])^z``. The owner center is
    checked first, since it is usually the nearest. If every trial is
    rejected, the proposal with the largest observed distance-to-tree ratio
    is returned. Returns ``(pos, trials_used)``; ``pos`` is -1 when no mass
    remains.
    """
    best_pos, best_ratio = -1, -1.0
    trials = uniforms.shape[0] // 2
    for t in range(trials):
        pos = tree_draw(val, bsum, uniforms[2 * t], block)
        if pos < 0:
            return -1, t + 1
        tc = levelcost[u[pos] + 1]
        thr = uniforms[2 * t + 1] * tc
        dmin = _seq_dist(Xs[pos], C[owner[pos]], z)
        ok = dmin > thr
        if ok:
            for c in range(j):
                dc = _seq_dist(Xs[pos], C[c], z)
                if dc < dmin:
                    dmin = dc
                if dc <= thr:
                    ok = False
                    break
        if ok:
            return pos, t + 1
        ratio = dmin / tc
        if ratio > best_ratio:
            best_pos, best_ratio = pos, ratio
    return best_pos, trials
