"""Jitted numeric core shared by the public modules.

Everything numerically load-bearing lives here exactly once: the counter-based
random generator, torus arithmetic, cell-grid neighbor queries, the zonal
direction rules, coverage rasterization, and the fused tick loop.  The public
modules (`geometry`, `spatial`, `behavior`, `engine`) wrap these functions, so
the readable per-operation path and the fast simulation loop cannot drift
apart; the test suite additionally checks the two paths bit for bit.

Conventions baked in here:
  - positions live in [0, L)^2 on a square torus of side L
  - headings are degrees measured from the +x axis; trig only at call sites
  - all sensing comparisons against a radius are inclusive (<= radius)
  - neighbor enumeration order is cell-major over the 3x3 neighborhood,
    ascending agent id within a cell (deterministic, documented, relied on
    for bitwise reproducibility)
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Behavioral state codes (shared with behavior.py / engine.py).
SEARCH = 0
LOCK = 1
FIND = 2
ARRIVED = 3

_NORM_EPS = 1e-9  # below this, a direction sum is treated as degenerate
_ZERO_EPS = 1e-12  # below this, a displacement has no usable direction

# ---------------------------------------------------------------------------
# Counter-based random draws.
#
# A keyed draw is mix64(mix64(mix64(seed) ^ stream) ^ counter) where mix64 is
# the splitmix64 finalizer.  Pure integer arithmetic, so the uint64 layer is
# bit-identical on every platform; draws are random-access in (stream,
# counter), which is what makes replicates and per-agent noise streams
# independent and order-free.
# ---------------------------------------------------------------------------

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_MULT2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U64_1 = np.uint64(1)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def mix64(z):
    z = z + _GOLD
    z = (z ^ (z >> _S30)) * _MULT1
    z = (z ^ (z >> _S27)) * _MULT2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def stream_key(seed, stream):
    return mix64(mix64(seed) ^ stream)


@njit(cache=True, inline="always")
def keyed_u64(seed, stream, counter):
    return mix64(stream_key(seed, stream) ^ counter)


@njit(cache=True, inline="always")
def u01(seed, stream, counter):
    """Uniform double in [0, 1)."""
    return float(keyed_u64(seed, stream, counter) >> _S11) * _INV_2_53


@njit(cache=True, inline="always")
def u01_open(seed, stream, counter):
    """Uniform double in (0, 1]; safe under log()."""
    return float((keyed_u64(seed, stream, counter) >> _S11) + _U64_1) * _INV_2_53


@njit(cache=True, inline="always")
def normal_block(seed, stream, block):
    """Box-Muller pair (z0, z1) from counters (2*block, 2*block + 1)."""
    c0 = np.uint64(2) * block
    u1 = u01_open(seed, stream, c0)
    u2 = u01(seed, stream, c0 + _U64_1)
    r = math.sqrt(-2.0 * math.log(u1))
    a = 2.0 * math.pi * u2
    return r * math.cos(a), r * math.sin(a)


@njit(cache=True)
def normal_at(seed, stream, k):
    """k-th standard normal of the stream (random access)."""
    z0, z1 = normal_block(seed, stream, k >> _U64_1)
    if k & _U64_1:
        return z1
    return z0


# ---------------------------------------------------------------------------
# Torus arithmetic.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def wrap1(x, length):
    """Map a coordinate into [0, length)."""
    y = x % length
    if y >= length:  # x == -eps can round the modulo up to length
        y -= length
    elif y < 0.0:
        y += length
    return y


@njit(cache=True, inline="always")
def delta1(a, b, length):
    """Shortest signed displacement from a to b, in [-length/2, length/2)."""
    d = (b - a) % length
    if d >= length:
        d -= length
    elif d < 0.0:
        d += length
    if d >= 0.5 * length:
        d -= length
    return d


@njit(cache=True, inline="always")
def torus_dist2(ax, ay, bx, by, length):
    dx = delta1(ax, bx, length)
    dy = delta1(ay, by, length)
    return dx * dx + dy * dy


# ---------------------------------------------------------------------------
# Uniform cell grid (CSR over cell keys, rebuilt per tick).
#
# The grid has dim = floor(L / cell_size) cells per side (cell width
# L / dim >= cell_size), so the 3x3 neighborhood around a point is a superset
# of everything within cell_size of it.  With dim < 3 queries fall back to an
# exhaustive scan in ascending id order.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def grid_dim_for(length, cell_size):
    d = int(length / cell_size)
    if d < 1:
        d = 1
    return d


@njit(cache=True, inline="always")
def cell_coord(x, length, dim):
    i = int(x * dim / length)
    if i >= dim:
        i = dim - 1
    elif i < 0:
        i = 0
    return i


@njit(cache=True)
def build_cell_index(xs, ys, length, dim):
    """Sort point ids by (cell key, id); returns (order, sorted cell keys)."""
    n = xs.shape[0]
    comp = np.empty(n, np.int64)
    for i in range(n):
        key = cell_coord(ys[i], length, dim) * dim + cell_coord(xs[i], length, dim)
        comp[i] = key * n + i
    order = np.argsort(comp)
    keys_sorted = np.empty(n, np.int64)
    for r in range(n):
        keys_sorted[r] = comp[order[r]] // n
    return order, keys_sorted


@njit(cache=True)
def query_radius(xs, ys, order, keys_sorted, dim, length, qx, qy, radius,
                 exclude, out_idx, out_d2):
    """Collect ids with torus distance <= radius from (qx, qy).

    Excludes `exclude` (pass -1 to keep everything).  Fills out_idx/out_d2 in
    the canonical enumeration order and returns the count.  Requires cell
    width >= radius unless dim < 3 (exhaustive fallback).
    """
    n = xs.shape[0]
    r2 = radius * radius
    cnt = 0
    if dim < 3:
        for j in range(n):
            if j == exclude:
                continue
            d2 = torus_dist2(qx, qy, xs[j], ys[j], length)
            if d2 <= r2:
                out_idx[cnt] = j
                out_d2[cnt] = d2
                cnt += 1
        return cnt
    qix = cell_coord(qx, length, dim)
    qiy = cell_coord(qy, length, dim)
    for dj in range(-1, 2):
        cy = (qiy + dj) % dim
        for di in range(-1, 2):
            cx = (qix + di) % dim
            key = cy * dim + cx
            lo = np.searchsorted(keys_sorted, key, side="left")
            hi = np.searchsorted(keys_sorted, key, side="right")
            for r in range(lo, hi):
                j = order[r]
                if j == exclude:
                    continue
                d2 = torus_dist2(qx, qy, xs[j], ys[j], length)
                if d2 <= r2:
                    out_idx[cnt] = j
                    out_d2[cnt] = d2
                    cnt += 1
    return cnt


# ---------------------------------------------------------------------------
# Zonal direction rules.
# ---------------------------------------------------------------------------


@njit(cache=True)
def social_core(sx, sy, cnt, nxs, nys, nhx, nhy, nd2, r1, r2, rs, length):
    """Repulsion / alignment / attraction sum over pre-filtered neighbors.

    Neighbors arrive in the canonical enumeration order with squared torus
    distances nd2 (all <= rs^2).  Returns (has_direction, x, y); the vector is
    unit-norm when has_direction is True.  Any neighbor strictly inside r1
    switches the rule to pure repulsion; a sum whose norm degenerates yields
    (False, 0, 0).
    """
    r1sq = r1 * r1
    r2sq = r2 * r2
    rssq = rs * rs
    repelled = False
    accx = 0.0
    accy = 0.0
    for k in range(cnt):
        if nd2[k] < r1sq:
            if not repelled:
                repelled = True
                accx = 0.0
                accy = 0.0
            d = math.sqrt(nd2[k])
            if d > _ZERO_EPS:
                accx += delta1(nxs[k], sx, length) / d
                accy += delta1(nys[k], sy, length) / d
        elif not repelled:
            if nd2[k] < r2sq:
                accx += nhx[k]
                accy += nhy[k]
            elif nd2[k] <= rssq:
                d = math.sqrt(nd2[k])
                if d > _ZERO_EPS:
                    accx += delta1(sx, nxs[k], length) / d
                    accy += delta1(sy, nys[k], length) / d
    if cnt == 0:
        return False, 0.0, 0.0
    nrm = math.hypot(accx, accy)
    if nrm < _NORM_EPS:
        return False, 0.0, 0.0
    return True, accx / nrm, accy / nrm


@njit(cache=True, inline="always")
def blend_core(dsx, dsy, has_social, sox, soy, rho):
    """Self/social blend.

    Returns (blended, x, y); blended is False when the result is exactly
    d_self (rho == 0, no social direction, or a degenerate blend norm).
    """
    if (not has_social) or rho == 0.0:
        return False, dsx, dsy
    bx = (1.0 - rho) * dsx + rho * sox
    by = (1.0 - rho) * dsy + rho * soy
    nrm = math.hypot(bx, by)
    if nrm < _NORM_EPS:
        return False, dsx, dsy
    return True, bx / nrm, by / nrm


@njit(cache=True, inline="always")
def heading_unit(deg):
    """Unit vector of a heading given in degrees."""
    a = math.radians(deg)
    return math.cos(a), math.sin(a)


@njit(cache=True)
def goal_step_core(px, py, gx, gy, step, length):
    """One goal-steering move toward (gx, gy).

    Returns (snapped, new_x, new_y, heading_deg, ux, uy, has_dir).  Within one
    step-length of the goal the agent snaps onto it exactly; has_dir is False
    only when the agent already sat on the goal (heading is then unusable and
    the caller keeps the previous one).
    """
    dxg = delta1(px, gx, length)
    dyg = delta1(py, gy, length)
    dg2 = dxg * dxg + dyg * dyg
    if dg2 <= step * step:
        dg = math.sqrt(dg2)
        if dg > _ZERO_EPS:
            ux = dxg / dg
            uy = dyg / dg
            return True, gx, gy, math.degrees(math.atan2(uy, ux)), ux, uy, True
        return True, gx, gy, 0.0, 0.0, 0.0, False
    dg = math.sqrt(dg2)
    ux = dxg / dg
    uy = dyg / dg
    return (False, wrap1(px + step * ux, length), wrap1(py + step * uy, length),
            math.degrees(math.atan2(uy, ux)), ux, uy, True)


@njit(cache=True)
def search_step_core(px, py, prev_deg, sigma, z, use_noise, rho,
                     cnt, sn_x, sn_y, sn_hx, sn_hy, sn_d2,
                     r1, r2, rs, length, step):
    """One correlated-walk move with the zonal social blend.

    z is the agent's standard-normal draw for this tick (ignored on the first
    tick, where the initial uniform heading is used as drawn).  The neighbor
    arrays hold the pre-filtered non-arrived neighbors in canonical order.
    Returns (new_x, new_y, final_heading_deg, ux, uy).
    """
    if use_noise:
        a_deg = prev_deg + sigma * z
    else:
        a_deg = prev_deg
    dsx, dsy = heading_unit(a_deg)
    fx = dsx
    fy = dsy
    fdeg = a_deg
    if rho > 0.0:
        has, sox, soy = social_core(px, py, cnt, sn_x, sn_y, sn_hx, sn_hy,
                                    sn_d2, r1, r2, rs, length)
        if has:
            blended, bx, by = blend_core(dsx, dsy, True, sox, soy, rho)
            if blended:
                fx = bx
                fy = by
                fdeg = math.degrees(math.atan2(fy, fx))
    return (wrap1(px + step * fx, length), wrap1(py + step * fy, length),
            fdeg, fx, fy)


# ---------------------------------------------------------------------------
# Union-find (component counting inside the tick loop).
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _uf_find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:  # path compression
        up = parent[i]
        parent[i] = root
        i = up
    return root


@njit(cache=True)
def count_components(xs, ys, order, keys_sorted, dim, length, radius,
                     parent, nb_idx, nb_d2):
    """Connected components of the <=radius proximity graph over all points."""
    n = xs.shape[0]
    for i in range(n):
        parent[i] = i
    comps = n
    for i in range(n):
        cnt = query_radius(xs, ys, order, keys_sorted, dim, length,
                           xs[i], ys[i], radius, i, nb_idx, nb_d2)
        for k in range(cnt):
            j = nb_idx[k]
            ri = _uf_find(parent, i)
            rj = _uf_find(parent, j)
            if ri != rj:
                parent[rj] = ri
                comps -= 1
    return comps


# ---------------------------------------------------------------------------
# Coverage rasterization.
#
# The coverage grid has m cells per side of width w = L / m (m chosen by the
# caller as ceil(L / (r_t / 2))).  A cell is covered once its center lies
# within r_t of any agent position; in point mode only the cell containing
# the agent is marked.
# ---------------------------------------------------------------------------


@njit(cache=True)
def mark_coverage(covered, m, length, px, py, r_t, point_mode, count):
    w = length / m
    if point_mode:
        ix = cell_coord(px, length, m)
        iy = cell_coord(py, length, m)
        idx = iy * m + ix
        if covered[idx] == 0:
            covered[idx] = 1
            count += 1
        return count
    span = int(r_t / w) + 1
    i_lo = -span
    i_hi = span
    if 2 * span + 1 >= m:  # disc wider than the whole torus: every column
        i_lo = 0
        i_hi = m - 1
    base_i = int(px / w)
    rt2 = r_t * r_t
    for di in range(i_lo, i_hi + 1):
        i = base_i + di if 2 * span + 1 < m else di
        cx = (i + 0.5) * w
        dx = delta1(px, cx, length)
        if dx * dx > rt2:
            continue
        dymax = math.sqrt(rt2 - dx * dx)
        ii = i % m
        if ii < 0:
            ii += m
        j_lo = int(math.ceil((py - dymax) / w - 0.5))
        j_hi = int(math.floor((py + dymax) / w - 0.5))
        if j_hi - j_lo + 1 >= m:
            j_lo = 0
            j_hi = m - 1
        for j in range(j_lo, j_hi + 1):
            jj = j % m
            if jj < 0:
                jj += m
            idx = jj * m + ii
            if covered[idx] == 0:
                covered[idx] = 1
                count += 1
    return count


# ---------------------------------------------------------------------------
# The fused tick loop.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nearest_target_within(tx, ty, t_order, t_keys, t_dim, length, qx, qy,
                           radius, nb_idx, nb_d2):
    """(index, dist^2) of the nearest target within radius, or (-1, inf)."""
    nt = tx.shape[0]
    best_j = -1
    best_d2 = math.inf
    r2 = radius * radius
    if nt <= 8 or t_dim < 3:
        for j in range(nt):
            d2 = torus_dist2(qx, qy, tx[j], ty[j], length)
            if d2 <= r2 and (d2 < best_d2 or (d2 == best_d2 and j < best_j)):
                best_j = j
                best_d2 = d2
        return best_j, best_d2
    cnt = query_radius(tx, ty, t_order, t_keys, t_dim, length, qx, qy,
                       radius, -1, nb_idx, nb_d2)
    for k in range(cnt):
        if nb_d2[k] < best_d2 or (nb_d2[k] == best_d2 and nb_idx[k] < best_j):
            best_j = nb_idx[k]
            best_d2 = nb_d2[k]
    return best_j, best_d2


@njit(cache=True)
def simulate(length, step, r_t, r_s, r1, r2, rho, sigma, seed,
             noise_stream_base, tx, ty, targets_enabled, budget,
             x0, y0, h0,
             rec_components, rec_census, rec_traj, rec_cover,
             cover_point_mode, cover_m,
             arrival_ticks, final_target,
             comp_counts, census, traj, traj_state, cover_counts, covered,
             out_x, out_y, out_h, out_state):
    """Advance the world from its initial state until done.

    Reads the initial state from x0/y0/h0, writes the final state into
    out_x/out_y/out_h/out_state, and fills the recording arrays.  Search mode
    (targets_enabled) runs until every agent has arrived or `budget` ticks
    elapsed; otherwise exactly `budget` ticks are run.  The recorded series
    hold one entry per snapshot 0..n_ticks inclusive.

    Returns (n_ticks, arrived_total, lock_transitions).
    """
    n = x0.shape[0]
    nt = tx.shape[0]

    x = x0.copy()
    y = y0.copy()
    h = h0.copy()
    states = np.zeros(n, np.int8)
    anchor_x = np.zeros(n)
    anchor_y = np.zeros(n)
    anchor_t = np.full(n, -1, np.int32)
    uhx = np.empty(n)
    uhy = np.empty(n)
    for i in range(n):
        a = math.radians(h[i])
        uhx[i] = math.cos(a)
        uhy[i] = math.sin(a)

    nx = x.copy()
    ny = y.copy()
    nh = h.copy()
    nuhx = uhx.copy()
    nuhy = uhy.copy()
    nstates = states.copy()

    # target grid (static)
    t_dim = 1
    t_order = np.empty(0, np.int64)
    t_keys = np.empty(0, np.int64)
    if nt > 8:
        t_dim = grid_dim_for(length, r_t)
        if t_dim >= 3:
            t_order, t_keys = build_cell_index(tx, ty, length, t_dim)

    fed = np.zeros(max(nt, 1), np.uint8)
    any_fed = False

    # agent grid scratch
    a_dim = grid_dim_for(length, r_s)
    a_order = np.empty(n, np.int64)
    a_keys = np.empty(n, np.int64)
    nb_idx = np.empty(n, np.int64)
    nb_d2 = np.empty(n)
    sn_x = np.empty(n)
    sn_y = np.empty(n)
    sn_hx = np.empty(n)
    sn_hy = np.empty(n)
    sn_d2 = np.empty(n)
    parent = np.empty(n, np.int64)
    tnb_idx = np.empty(max(nt, 1), np.int64)
    tnb_d2 = np.empty(max(nt, 1), np.float64)

    # per-agent noise streams with a cached Box-Muller block
    akey = np.empty(n, np.uint64)
    base = mix64(seed)
    for i in range(n):
        akey[i] = mix64(base ^ (noise_stream_base + np.uint64(i)))
    cache_blk = np.full(n, -1, np.int64)
    cache_z0 = np.zeros(n)
    cache_z1 = np.zeros(n)

    cover_count = 0
    arrived_total = 0
    lock_transitions = 0
    need_grid = (rho > 0.0) or rec_components
    step2 = step * step
    rt2 = r_t * r_t

    tick = np.int64(0)
    while True:
        grid_built = False
        if need_grid:
            a_order, a_keys = build_cell_index(x, y, length, a_dim)
            grid_built = True

        # --- record the snapshot at time `tick` ---
        if rec_census:
            c0 = 0
            c1 = 0
            c2 = 0
            c3 = 0
            for i in range(n):
                s = states[i]
                if s == SEARCH:
                    c0 += 1
                elif s == LOCK:
                    c1 += 1
                elif s == FIND:
                    c2 += 1
                else:
                    c3 += 1
            census[tick * 4 + 0] = c0
            census[tick * 4 + 1] = c1
            census[tick * 4 + 2] = c2
            census[tick * 4 + 3] = c3
        if rec_traj:
            for i in range(n):
                off = (tick * n + i) * 3
                traj[off] = x[i]
                traj[off + 1] = y[i]
                traj[off + 2] = h[i]
                traj_state[tick * n + i] = states[i]
        if rec_cover:
            for i in range(n):
                cover_count = mark_coverage(covered, cover_m, length, x[i],
                                            y[i], r_t, cover_point_mode,
                                            cover_count)
            cover_counts[tick] = cover_count
        if rec_components:
            comp_counts[tick] = count_components(x, y, a_order, a_keys, a_dim,
                                                 length, r_s, parent, nb_idx,
                                                 nb_d2)

        # --- termination ---
        if tick == budget:
            break
        if targets_enabled and arrived_total == n:
            break

        # --- advance tick -> tick + 1 from the snapshot ---
        for i in range(n):
            st = states[i]
            if st == ARRIVED:
                nx[i] = x[i]
                ny[i] = y[i]
                nh[i] = h[i]
                nuhx[i] = uhx[i]
                nuhy[i] = uhy[i]
                nstates[i] = ARRIVED
                continue

            # state transition from the snapshot
            if targets_enabled and st != FIND:
                bj, bd2 = _nearest_target_within(tx, ty, t_order, t_keys,
                                                 t_dim, length, x[i], y[i],
                                                 r_t, tnb_idx, tnb_d2)
                if bj >= 0 and bd2 <= rt2:
                    st = FIND
                    final_target[i] = bj
                    if arrival_ticks[i] < 0:
                        arrival_ticks[i] = tick
                elif any_fed:
                    fj = -1
                    fd2 = math.inf
                    rs2 = r_s * r_s
                    for j in range(nt):
                        if fed[j] == 1:
                            d2 = torus_dist2(x[i], y[i], tx[j], ty[j], length)
                            if d2 <= rs2 and d2 < fd2:
                                fj = j
                                fd2 = d2
                    if fj >= 0:
                        if st == SEARCH:
                            lock_transitions += 1
                        st = LOCK
                        anchor_x[i] = tx[fj]
                        anchor_y[i] = ty[fj]
                        anchor_t[i] = fj

            if st == FIND or st == LOCK:
                if st == FIND:
                    gx = tx[final_target[i]]
                    gy = ty[final_target[i]]
                else:
                    gx = anchor_x[i]
                    gy = anchor_y[i]
                snapped, px2, py2, hdeg, ux, uy, has_dir = goal_step_core(
                    x[i], y[i], gx, gy, step, length)
                nx[i] = px2
                ny[i] = py2
                if has_dir:
                    nh[i] = hdeg
                    nuhx[i] = ux
                    nuhy[i] = uy
                else:
                    nh[i] = h[i]
                    nuhx[i] = uhx[i]
                    nuhy[i] = uhy[i]
                if snapped:
                    if st == LOCK:
                        final_target[i] = anchor_t[i]
                    if arrival_ticks[i] < 0:
                        arrival_ticks[i] = tick + 1
                    nstates[i] = ARRIVED
                else:
                    nstates[i] = st
                continue

            # Search: correlated walk blended with the zonal direction
            z = 0.0
            if tick > 0:
                k = np.uint64(tick)
                blk = np.int64(k >> _U64_1)
                if cache_blk[i] != blk:
                    z0, z1 = normal_block(seed, noise_stream_base + np.uint64(i),
                                          np.uint64(blk))
                    cache_blk[i] = blk
                    cache_z0[i] = z0
                    cache_z1[i] = z1
                if k & _U64_1:
                    z = cache_z1[i]
                else:
                    z = cache_z0[i]
            scnt = 0
            if rho > 0.0 and grid_built:
                cnt = query_radius(x, y, a_order, a_keys, a_dim, length,
                                   x[i], y[i], r_s, i, nb_idx, nb_d2)
                for k2 in range(cnt):
                    j = nb_idx[k2]
                    if states[j] != ARRIVED:
                        sn_x[scnt] = x[j]
                        sn_y[scnt] = y[j]
                        sn_hx[scnt] = uhx[j]
                        sn_hy[scnt] = uhy[j]
                        sn_d2[scnt] = nb_d2[k2]
                        scnt += 1
            px2, py2, fdeg, fx, fy = search_step_core(
                x[i], y[i], h[i], sigma, z, tick > 0, rho,
                scnt, sn_x, sn_y, sn_hx, sn_hy, sn_d2,
                r1, r2, r_s, length, step)
            nx[i] = px2
            ny[i] = py2
            nh[i] = fdeg
            nuhx[i] = fx
            nuhy[i] = fy
            nstates[i] = SEARCH

        # --- commit the synchronous update ---
        for i in range(n):
            if nstates[i] == ARRIVED and states[i] != ARRIVED:
                arrived_total += 1
                fed[final_target[i]] = 1
                any_fed = True
        tmp = x
        x = nx
        nx = tmp
        tmp = y
        y = ny
        ny = tmp
        tmp = h
        h = nh
        nh = tmp
        tmp = uhx
        uhx = nuhx
        nuhx = tmp
        tmp = uhy
        uhy = nuhy
        nuhy = tmp
        tmps = states
        states = nstates
        nstates = tmps
        tick += 1

    for i in range(n):
        out_x[i] = x[i]
        out_y[i] = y[i]
        out_h[i] = h[i]
        out_state[i] = states[i]
    return tick, arrived_total, lock_transitions
