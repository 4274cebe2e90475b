"""Compiled Monte Carlo loops.

Cones reach these kernels in a flat encoding (see ``sampler._encode``):

* ``kind == 0``: intersection of half-spaces ``{n_i . x > 0}`` given by the
  rows of ``normals`` (unit vectors).  Brownian-bridge crossing rejection
  ``exp(-2 a b / dt)`` is applied per facet when ``bridge`` is set.
* ``kind == 1``: circular cone ``{x1 > 0, angle(x, e1) < theta0}`` with plain
  grid checks.

``axis >= 0`` marks a single facet orthogonal to a coordinate axis; only that
coordinate then drives the exit test and the remaining coordinates are filled
in afterwards as independent Brownian motions at the recorded steps.

Step indices in ``rec`` must be sorted ascending.
"""

import math

import numpy as np
from numba import njit

_BRIDGE_CUT = 50.0  # exp(-50) ~ 2e-22: skip the uniform draw beyond this


@njit(cache=True)
def _inside(kind, normals, theta0, pos):
    if kind == 0:
        for i in range(normals.shape[0]):
            s = 0.0
            for c in range(pos.size):
                s += normals[i, c] * pos[c]
            if s <= 0.0:
                return False
        return True
    if pos[0] <= 0.0:
        return False
    perp = 0.0
    for c in range(1, pos.size):
        perp += pos[c] * pos[c]
    return math.atan2(math.sqrt(perp), pos[0]) < theta0


@njit(cache=True)
def _distances(normals, pos, out):
    for i in range(normals.shape[0]):
        s = 0.0
        for c in range(pos.size):
            s += normals[i, c] * pos[c]
        out[i] = s


@njit(cache=True)
def _run_path(gen, kind, normals, theta0, axis, pos, sdt, dt, k0, nsteps, bridge, rec, ri, row):
    """Advance ``pos`` from step ``k0`` to ``nsteps``; return the exit step or -1.

    Recorded positions go to ``row``; ``ri`` is the first unused entry of
    ``rec``.  Returns ``(exit_step, ri)``.
    """
    d = pos.size
    nf = normals.shape[0]
    a = np.empty(max(nf, 1))
    b = np.empty(max(nf, 1))
    if kind == 0:
        _distances(normals, pos, a)
    for k in range(k0 + 1, nsteps + 1):
        if axis >= 0:
            pos[axis] += sdt * gen.standard_normal()
        else:
            for c in range(d):
                pos[c] += sdt * gen.standard_normal()
        if kind == 0:
            if axis >= 0:
                b[0] = pos[axis] * normals[0, axis]
            else:
                _distances(normals, pos, b)
            for i in range(nf):
                if b[i] <= 0.0:
                    return k, ri
            if bridge:
                for i in range(nf):
                    e = 2.0 * a[i] * b[i] / dt
                    if e < _BRIDGE_CUT and gen.random() < math.exp(-e):
                        return k, ri
            for i in range(nf):
                a[i] = b[i]
        else:
            if not _inside(kind, normals, theta0, pos):
                return k, ri
        while ri < rec.size and rec[ri] == k:
            for c in range(d):
                row[ri, c] = pos[c]
            ri += 1
    return -1, ri


@njit(cache=True)
def _fill_free_coords(gen, axis, x0, rec, dt, row):
    d = x0.size
    for c in range(d):
        if c == axis:
            continue
        val = x0[c]
        prev = 0
        for r in range(rec.size):
            gap = rec[r] - prev
            if gap > 0:
                val += math.sqrt(gap * dt) * gen.standard_normal()
            row[r, c] = val
            prev = rec[r]


@njit(cache=True)
def conditioned_batch(gen, kind, normals, theta0, axis, x0, dt, nsteps, n_accept, max_attempts, bridge, rec):
    """Rejection sampling of Brownian paths from ``x0`` that stay in the cone up to ``nsteps``.

    Returns ``(out, attempts, accepted)`` with ``out[i, r]`` the position of
    accepted path ``i`` at step ``rec[r]``.
    """
    d = x0.size
    nrec = rec.size
    out = np.empty((n_accept, nrec, d))
    row = np.empty((nrec, d))
    pos = np.empty(d)
    sdt = math.sqrt(dt)
    attempts = 0
    acc = 0
    while acc < n_accept and attempts < max_attempts:
        attempts += 1
        for c in range(d):
            pos[c] = x0[c]
        ri = 0
        while ri < nrec and rec[ri] == 0:
            for c in range(d):
                row[ri, c] = pos[c]
            ri += 1
        ex, ri = _run_path(gen, kind, normals, theta0, axis, pos, sdt, dt, 0, nsteps, bridge, rec, ri, row)
        if ex >= 0:
            continue
        if axis >= 0:
            _fill_free_coords(gen, axis, x0, rec, dt, row)
        for r in range(nrec):
            for c in range(d):
                out[acc, r, c] = row[r, c]
        acc += 1
    return out[:acc], attempts, acc


@njit(cache=True)
def killed_batch(gen, kind, normals, theta0, axis, starts, dt, nsteps, bridge):
    """Run Brownian motion from each start until it leaves the cone or ``nsteps`` elapse.

    Returns ``(exit_step, final)``: exit step per path (-1 if it survived) and
    the final positions of survivors (exited rows hold the exit position).
    """
    n, d = starts.shape
    exit_step = np.empty(n, dtype=np.int64)
    final = np.empty((n, d))
    pos = np.empty(d)
    sdt = math.sqrt(dt)
    rec = np.empty(0, dtype=np.int64)
    row = np.empty((0, d))
    for p in range(n):
        for c in range(d):
            pos[c] = starts[p, c]
        ex, _ = _run_path(gen, kind, normals, theta0, axis, pos, sdt, dt, 0, nsteps, bridge, rec, 0, row)
        exit_step[p] = ex
        if axis >= 0:
            steps = nsteps if ex < 0 else ex
            for c in range(d):
                if c != axis:
                    pos[c] += math.sqrt(steps * dt) * gen.standard_normal()
        for c in range(d):
            final[p, c] = pos[c]
    return exit_step, final


@njit(cache=True)
def bm_batch(gen, x0, dt, nsteps, n, rec):
    """Free Brownian motion from ``x0`` recorded at steps ``rec``."""
    d = x0.size
    out = np.empty((n, rec.size, d))
    sdt = math.sqrt(dt)
    pos = np.empty(d)
    for p in range(n):
        for c in range(d):
            pos[c] = x0[c]
        ri = 0
        while ri < rec.size and rec[ri] == 0:
            out[p, ri] = pos
            ri += 1
        for k in range(1, nsteps + 1):
            for c in range(d):
                pos[c] += sdt * gen.standard_normal()
            while ri < rec.size and rec[ri] == k:
                for c in range(d):
                    out[p, ri, c] = pos[c]
                ri += 1
    return out


@njit(cache=True)
def meander_transform_batch(gen, m, n, tq, min_span):
    """Meander by rescaling the post-last-zero segment of a BM on ``[0, 1]``.

    ``m`` grid steps on ``[0, 1]``; output at fractional times ``tq`` in
    ``[0, 1]``.  The last zero is located in the last grid step that either
    changes sign (root by linear interpolation) or whose Brownian bridge
    touches zero (drawn with probability ``exp(-2 a b / dt)``, zero placed at
    the step midpoint).  Paths whose final excursion is shorter than
    ``min_span`` (or than two steps) are redrawn; the rescaled excursion is
    independent of the last zero, so this adds no bias and keeps the
    effective step of the output at most ``dt / min_span``.
    Returns ``(out, redraws)``.
    """
    dt = 1.0 / m
    sdt = math.sqrt(dt)
    x = np.empty(m + 1)
    out = np.empty((n, tq.size))
    redraws = 0
    p = 0
    while p < n:
        x[0] = 0.0
        for k in range(1, m + 1):
            x[k] = x[k - 1] + sdt * gen.standard_normal()
        # scan backwards for the last step holding a zero, counting zeros of
        # the Brownian bridge between same-sign grid points
        last = 0
        sigma = 0.0
        for k in range(m - 1, -1, -1):
            if x[k] == 0.0:
                last = k
                sigma = k * dt
                break
            if (x[k] > 0.0) != (x[k + 1] > 0.0):
                last = k
                sigma = (k + x[k] / (x[k] - x[k + 1])) * dt
                break
            e = 2.0 * x[k] * x[k + 1] / dt
            if e < _BRIDGE_CUT and gen.random() < math.exp(-e):
                last = k
                sigma = (k + 0.5) * dt
                break
        span = 1.0 - sigma
        if last == m - 1 or span < min_span:
            redraws += 1
            continue
        scale = 1.0 / math.sqrt(span)
        for q in range(tq.size):
            s = sigma + tq[q] * span
            u = s * m
            k = int(math.floor(u))
            if k >= m:
                val = x[m]
            elif k < last + 1:
                # inside the step holding the zero: interpolate from the root
                w = (s - sigma) / ((last + 1) * dt - sigma)
                val = w * x[last + 1]
            else:
                f = u - k
                val = (1.0 - f) * x[k] + f * x[k + 1]
            out[p, q] = abs(val) * scale
        p += 1
    return out, redraws


@njit(cache=True)
def meander_section_batch(gen, level, m, n, max_steps, rec):
    """Path segments after ``T_level``: first hit of ``level`` followed by ``m`` positive steps.

    Hits and zeros between grid points are detected with the Brownian-bridge
    probabilities ``exp(-2 a b / dt)``; a hit inside step ``j`` is placed at
    grid index ``j - 1``.

    Runs a fresh Brownian motion from 0 for each sample and returns
    ``(out, hit_steps, failures)``; ``out[i, r]`` is the segment at relative
    step ``rec[r]`` with the starting point set to ``level``.  Samples that
    exceed ``max_steps`` are counted in ``failures`` and redrawn; the segment
    after ``T_level`` is independent of ``T_level``, so redrawing adds no
    bias.  Once ``failures`` reaches ``n`` the batch stops short.
    """
    dt = 1.0 / m
    sdt = math.sqrt(dt)
    size = m + 1
    ring = np.empty(size)
    queue = np.empty(size + 1, dtype=np.int64)
    out = np.empty((n, rec.size))
    hits = np.empty(n, dtype=np.int64)
    failures = 0
    p = 0
    while p < n and failures < n:
        head = 0
        count = 0
        xprev = 0.0
        ring[0] = 0.0
        found = -1
        j = 0
        while j < max_steps:
            j += 1
            xj = xprev + sdt * gen.standard_normal()
            ring[j % size] = xj
            if xj <= 0.0:
                count = 0
            else:
                cross = (xprev < level) != (xj < level) or (level == 0.0 and xprev <= 0.0)
                if not cross and xprev > 0.0:
                    # zeros and level hits of the bridge between grid points
                    e = 2.0 * xprev * xj / dt
                    if e < _BRIDGE_CUT and gen.random() < math.exp(-e):
                        count = 0
                        cross = level == 0.0
                    elif level > 0.0:
                        e = 2.0 * (xprev - level) * (xj - level) / dt
                        cross = e < _BRIDGE_CUT and gen.random() < math.exp(-e)
                if cross:
                    queue[(head + count) % (size + 1)] = j - 1
                    count += 1
            if count > 0:
                front = queue[head % (size + 1)]
                if j - front >= m:
                    found = front
                    break
            if count == 0:
                head = 0
            xprev = xj
        if found < 0:
            failures += 1
            continue
        for r in range(rec.size):
            idx = found + rec[r]
            out[p, r] = ring[idx % size]
        for r in range(rec.size):
            if rec[r] == 0:
                out[p, r] = level
        hits[p] = found
        p += 1
    return out[:p], hits[:p], failures


@njit(cache=True)
def halfspace_ball_batch(gen, lam, d, dt, nsteps, check_steps, n_accept, max_attempts, bridge):
    """Paths from ``lam * e1`` conditioned on ``x1 > 0`` up to ``nsteps``; first grid exit from the unit ball at ``e1``.

    Only the first ``check_steps`` steps are scanned for the ball exit.
    Returns ``(ball_exit, attempts, accepted)``; ``ball_exit`` holds the first
    step ``k >= 1`` with ``|X_k - e1| >= 1`` or -1.
    """
    sdt = math.sqrt(dt)
    x1 = np.empty(check_steps + 1)
    ball_exit = np.empty(n_accept, dtype=np.int64)
    perp = np.empty(d)
    attempts = 0
    acc = 0
    while acc < n_accept and attempts < max_attempts:
        attempts += 1
        x = lam
        x1[0] = x
        ok = True
        for k in range(1, nsteps + 1):
            xn = x + sdt * gen.standard_normal()
            if xn <= 0.0:
                ok = False
                break
            if bridge:
                e = 2.0 * x * xn / dt
                if e < _BRIDGE_CUT and gen.random() < math.exp(-e):
                    ok = False
                    break
            x = xn
            if k <= check_steps:
                x1[k] = x
        if not ok:
            continue
        for c in range(d):
            perp[c] = 0.0
        first = -1
        for k in range(1, check_steps + 1):
            r2 = (x1[k] - 1.0) ** 2
            for c in range(1, d):
                perp[c] += sdt * gen.standard_normal()
                r2 += perp[c] * perp[c]
            if r2 >= 1.0:
                first = k
                break
        ball_exit[acc] = first
        acc += 1
    return ball_exit[:acc], attempts, acc
