"""Independent reference implementations used to cross-check the package.

The crossing oracle uses no closed-form intersection at all.  It bisects the
parameter intervals of every primitive pair, pruning with interval-arithmetic
bounding boxes, until the surviving boxes are smaller than ``leaf``.  The
leaves are then grouped into connected runs along the first primitive.
"""

import math

import numpy as np

TWO_PI = 2 * math.pi


def _param(prims):
    """Row per primitive: kind, x0, y0, x1/cx, y1/cy, radius, theta0, dtheta, length."""
    rows = []
    for p in prims:
        if p.kind == "segment":
            rows.append((0, p.start[0], p.start[1], p.end[0], p.end[1], 0.0, 0.0, 0.0, p.length))
        else:
            rows.append((1, 0.0, 0.0, p.center[0], p.center[1], p.radius,
                         math.radians(p.start_deg), math.radians(p.sweep_deg), p.length))
    return np.array(rows, dtype=float)


def _contains(lo, hi, phase):
    """Does [lo, hi] contain phase + 2*pi*k for some integer k?"""
    k = np.ceil((lo - phase) / TWO_PI)
    return phase + TWO_PI * k <= hi


def _boxes(P, t0, t1):
    kind = P[:, 0]
    # segments
    xa = P[:, 1] + t0 * (P[:, 3] - P[:, 1])
    xb = P[:, 1] + t1 * (P[:, 3] - P[:, 1])
    ya = P[:, 2] + t0 * (P[:, 4] - P[:, 2])
    yb = P[:, 2] + t1 * (P[:, 4] - P[:, 2])
    sx0, sx1 = np.minimum(xa, xb), np.maximum(xa, xb)
    sy0, sy1 = np.minimum(ya, yb), np.maximum(ya, yb)
    # arcs: interval enclosure of cos/sin over the angle interval
    ta = P[:, 6] + t0 * P[:, 7]
    tb = P[:, 6] + t1 * P[:, 7]
    lo, hi = np.minimum(ta, tb), np.maximum(ta, tb)
    c0, c1 = np.cos(lo), np.cos(hi)
    s0, s1 = np.sin(lo), np.sin(hi)
    cmax = np.where(_contains(lo, hi, 0.0), 1.0, np.maximum(c0, c1))
    cmin = np.where(_contains(lo, hi, math.pi), -1.0, np.minimum(c0, c1))
    smax = np.where(_contains(lo, hi, math.pi / 2), 1.0, np.maximum(s0, s1))
    smin = np.where(_contains(lo, hi, -math.pi / 2), -1.0, np.minimum(s0, s1))
    R = P[:, 5]
    ax0, ax1 = P[:, 3] + R * cmin, P[:, 3] + R * cmax
    ay0, ay1 = P[:, 4] + R * smin, P[:, 4] + R * smax
    arc = kind == 1
    return (np.where(arc, ax0, sx0), np.where(arc, ay0, sy0),
            np.where(arc, ax1, sx1), np.where(arc, ay1, sy1))


def subdivision_crossings(routes, leaf=1e-6, pad=1e-9, merge=1e-3, max_iter=200):
    """Count crossings between different routes by bisection.

    Returns ``(total, per_route)`` where ``per_route`` maps route id to count.
    Leaves closer than ``merge`` (mm, along the first primitive) belong to one
    crossing: a shallow crossing leaves a run about ``leaf / sin(angle)`` long
    with small gaps in it.  Grazing contacts are not distinguished from
    crossings, so inputs should be free of tangencies (random continuous
    geometry is).
    """
    prims, owner, offset = [], [], []
    for ri, r in enumerate(routes):
        s = 0.0
        for p in r.geometry:
            prims.append(p)
            owner.append(ri)
            offset.append(s)
            s += p.length
    n = len(prims)
    if n < 2:
        return 0, {r.id: 0 for r in routes}
    owner = np.array(owner)
    iu, ju = np.triu_indices(n, 1)
    keep = owner[iu] != owner[ju]
    ia, ib = iu[keep], ju[keep]
    PA, PB = _param(prims), None
    PB = PA
    A = PA[ia]
    B = PB[ib]
    pair = np.arange(len(ia))
    a0 = np.zeros(len(ia))
    a1 = np.ones(len(ia))
    b0 = np.zeros(len(ia))
    b1 = np.ones(len(ia))
    leaves = []
    for _ in range(max_iter):
        if len(pair) == 0:
            break
        ax0, ay0, ax1, ay1 = _boxes(A, a0, a1)
        bx0, by0, bx1, by1 = _boxes(B, b0, b1)
        hit = ((ax0 <= bx1 + pad) & (bx0 <= ax1 + pad) & (ay0 <= by1 + pad) & (by0 <= ay1 + pad))
        A, B, pair = A[hit], B[hit], pair[hit]
        a0, a1, b0, b1 = a0[hit], a1[hit], b0[hit], b1[hit]
        la = (a1 - a0) * A[:, 8]
        lb = (b1 - b0) * B[:, 8]
        done = (la <= leaf) & (lb <= leaf)
        if done.any():
            for p, u0, u1 in zip(pair[done], a0[done], a1[done]):
                leaves.append((int(p), 0.5 * (u0 + u1)))
        todo = ~done
        A, B, pair = A[todo], B[todo], pair[todo]
        a0, a1, b0, b1, la, lb = a0[todo], a1[todo], b0[todo], b1[todo], la[todo], lb[todo]
        # split the longer of the two pieces
        split_a = la >= lb
        am = 0.5 * (a0 + a1)
        bm = 0.5 * (b0 + b1)
        A = np.concatenate([A, A])
        B = np.concatenate([B, B])
        pair = np.concatenate([pair, pair])
        na0 = np.concatenate([a0, np.where(split_a, am, a0)])
        na1 = np.concatenate([np.where(split_a, am, a1), a1])
        nb0 = np.concatenate([b0, np.where(split_a, b0, bm)])
        nb1 = np.concatenate([np.where(split_a, b1, bm), b1])
        a0, a1, b0, b1 = na0, na1, nb0, nb1
    else:
        raise RuntimeError("subdivision did not converge")

    # group leaves into connected runs along the first primitive of each pair
    by_pair = {}
    for p, u in leaves:
        by_pair.setdefault(p, []).append(u * PA[ia[p], 8])
    found = {}
    for p, ss in by_pair.items():
        ss.sort()
        runs = 1 + sum(1 for x, y in zip(ss, ss[1:]) if y - x > merge)
        key = (owner[ia[p]], owner[ib[p]])
        found[key] = found.get(key, 0) + runs
    per = {r.id: 0 for r in routes}
    total = 0
    for (ra, rb), c in found.items():
        per[routes[ra].id] += c
        per[routes[rb].id] += c
        total += c
    return total, per


def piecewise_crossing_loss(k1, k2, x, knee=10):
    """Crossing loss written out term by term (no branches shared with the package)."""
    total = 0.0
    for i in range(1, x + 1):
        total += k1 if i <= knee else k2
    return total


def interp_oracle(samples, r):
    """Linear interpolation via numpy, for comparison with the hand-rolled version."""
    xs, ys = zip(*samples)
    return float(np.interp(r, xs, ys))


def pav_bruteforce(values):
    """Non-increasing least-squares fit by exhaustive block partitioning (small inputs)."""
    n = len(values)
    best, best_err = None, math.inf
    for mask in range(1 << (n - 1)):
        blocks, cur = [], [values[0]]
        for i in range(1, n):
            if mask >> (i - 1) & 1:
                blocks.append(cur)
                cur = []
            cur.append(values[i])
        blocks.append(cur)
        means = [sum(b) / len(b) for b in blocks]
        if any(m2 > m1 + 1e-12 for m1, m2 in zip(means, means[1:])):
            continue
        fit = [m for b, m in zip(blocks, means) for _ in b]
        err = sum((f - v) ** 2 for f, v in zip(fit, values))
        if err < best_err - 1e-15:
            best, best_err = fit, err
    return best
