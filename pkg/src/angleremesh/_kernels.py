"""Compiled inner loops: point/triangle distance, tree traversal, bounded
Voronoi Lloyd relaxation and a counter-based random stream.

Everything here works on plain float64/int64 arrays so the Python layers
can stay readable.
"""

import numpy as np
from numba import njit

_TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def closest_on_triangle(p, a, b, c):
    """Closest point of triangle abc to p.

    Returns (qx, qy, qz, squared distance, u, v, w) with q = u*a + v*b + w*c.
    Region tests follow Ericson, Real-Time Collision Detection, 5.1.5.
    """
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    acx, acy, acz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    apx, apy, apz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    u = 1.0
    v = 0.0
    w = 0.0
    done = False
    if d1 <= 0.0 and d2 <= 0.0:
        done = True
    if not done:
        bpx, bpy, bpz = p[0] - b[0], p[1] - b[1], p[2] - b[2]
        d3 = abx * bpx + aby * bpy + abz * bpz
        d4 = acx * bpx + acy * bpy + acz * bpz
        if d3 >= 0.0 and d4 <= d3:
            u, v, w = 0.0, 1.0, 0.0
            done = True
        if not done:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                t = d1 / (d1 - d3)
                u, v, w = 1.0 - t, t, 0.0
                done = True
            if not done:
                cpx, cpy, cpz = p[0] - c[0], p[1] - c[1], p[2] - c[2]
                d5 = abx * cpx + aby * cpy + abz * cpz
                d6 = acx * cpx + acy * cpy + acz * cpz
                if d6 >= 0.0 and d5 <= d6:
                    u, v, w = 0.0, 0.0, 1.0
                    done = True
                if not done:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                        t = d2 / (d2 - d6)
                        u, v, w = 1.0 - t, 0.0, t
                        done = True
                    if not done:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                            t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                            u, v, w = 0.0, 1.0 - t, t
                            done = True
                        if not done:
                            denom = va + vb + vc
                            if denom != 0.0:
                                v = vb / denom
                                w = vc / denom
                                u = 1.0 - v - w
                            else:
                                u, v, w = 1.0, 0.0, 0.0
    qx = u * a[0] + v * b[0] + w * c[0]
    qy = u * a[1] + v * b[1] + w * c[1]
    qz = u * a[2] + v * b[2] + w * c[2]
    dx, dy, dz = p[0] - qx, p[1] - qy, p[2] - qz
    return qx, qy, qz, dx * dx + dy * dy + dz * dz, u, v, w


@njit(cache=True)
def brute_closest(points, tris):
    """Closest facet for every point by exhaustive search.

    points: (n, 3); tris: (m, 3, 3). Returns (face, foot, dist2, bary).
    Facets whose bounding box is farther than the best hit so far are
    skipped; ties keep the lowest facet index.
    """
    n = points.shape[0]
    m = tris.shape[0]
    lo = np.empty((m, 3))
    hi = np.empty((m, 3))
    for j in range(m):
        for k in range(3):
            lo[j, k] = min(tris[j, 0, k], tris[j, 1, k], tris[j, 2, k])
            hi[j, k] = max(tris[j, 0, k], tris[j, 1, k], tris[j, 2, k])
    face = np.full(n, -1, np.int64)
    foot = np.zeros((n, 3))
    dist2 = np.full(n, np.inf)
    bary = np.zeros((n, 3))
    for i in range(n):
        p = points[i]
        # warm start from the nearest box so later boxes prune early
        j0 = 0
        b0 = np.inf
        for j in range(m):
            b = _box_dist2(p, lo[j], hi[j])
            if b < b0:
                b0 = b
                j0 = j
        best = np.inf
        for t in range(-1, m):
            j = j0 if t < 0 else t
            if t == j0 or _box_dist2(p, lo[j], hi[j]) > best:
                continue
            qx, qy, qz, d2, u, v, w = closest_on_triangle(p, tris[j, 0], tris[j, 1], tris[j, 2])
            if d2 < best or (d2 == best and j < face[i]):
                best = d2
                face[i] = j
                foot[i, 0] = qx
                foot[i, 1] = qy
                foot[i, 2] = qz
                bary[i, 0] = u
                bary[i, 1] = v
                bary[i, 2] = w
        dist2[i] = best
    return face, foot, dist2, bary


@njit(cache=True)
def _box_dist2(p, lo, hi):
    s = 0.0
    for k in range(3):
        if p[k] < lo[k]:
            d = lo[k] - p[k]
            s += d * d
        elif p[k] > hi[k]:
            d = p[k] - hi[k]
            s += d * d
    return s


@njit(cache=True)
def tree_query(points, tris, node_lo, node_hi, node_left, node_right,
               node_start, node_count, order):
    """Exact closest facet via best-first descent of an AABB hierarchy.

    Children are visited nearer box first; a subtree is skipped only when
    its box is strictly farther than the best distance found so far.
    """
    n = points.shape[0]
    face = np.full(n, -1, np.int64)
    foot = np.zeros((n, 3))
    dist2 = np.full(n, np.inf)
    bary = np.zeros((n, 3))
    stack = np.empty(128, np.int64)
    for i in range(n):
        p = points[i]
        best = np.inf
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            node = stack[top]
            if _box_dist2(p, node_lo[node], node_hi[node]) > best:
                continue
            left = node_left[node]
            if left < 0:
                s = node_start[node]
                for k in range(s, s + node_count[node]):
                    j = order[k]
                    qx, qy, qz, d2, u, v, w = closest_on_triangle(
                        p, tris[j, 0], tris[j, 1], tris[j, 2])
                    if d2 < best or (d2 == best and j < face[i]):
                        best = d2
                        face[i] = j
                        foot[i, 0] = qx
                        foot[i, 1] = qy
                        foot[i, 2] = qz
                        bary[i, 0] = u
                        bary[i, 1] = v
                        bary[i, 2] = w
            else:
                right = node_right[node]
                dl = _box_dist2(p, node_lo[left], node_hi[left])
                dr = _box_dist2(p, node_lo[right], node_hi[right])
                if dl <= dr:
                    stack[top] = right
                    stack[top + 1] = left
                else:
                    stack[top] = left
                    stack[top + 1] = right
                top += 2
        dist2[i] = best
    return face, foot, dist2, bary


# --- counter-based random numbers -------------------------------------------

@njit(cache=True)
def _splitmix(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def hashed_uniform(key, counter):
    """Uniform double in [0, 1) from a 4-word key and a counter."""
    h = np.uint64(0x243F6A8885A308D3)
    for k in range(key.shape[0]):
        h = _splitmix(h ^ np.uint64(key[k]))
    h = _splitmix(h ^ np.uint64(counter))
    return np.float64(h >> np.uint64(11)) * _TWO_M53


# --- bounded Voronoi diagram on a triangle ----------------------------------

@njit(cache=True)
def _clip(px, py, m, nx, ny, c, outx, outy):
    """Clip polygon (px, py)[:m] to the half-plane nx*x + ny*y <= c."""
    k = 0
    for i in range(m):
        j = (i + 1) % m
        si = nx * px[i] + ny * py[i] - c
        sj = nx * px[j] + ny * py[j] - c
        if si <= 0.0:
            outx[k] = px[i]
            outy[k] = py[i]
            k += 1
        if (si < 0.0 < sj) or (sj < 0.0 < si):
            t = si / (si - sj)
            outx[k] = px[i] + t * (px[j] - px[i])
            outy[k] = py[i] + t * (py[j] - py[i])
            k += 1
    return k


@njit(cache=True)
def _cell(i, sx, sy, tri, px, py, bx, by):
    """Bounded Voronoi cell of site i; returns vertex count (written to px, py)."""
    m = 3
    for k in range(3):
        px[k] = tri[k, 0]
        py[k] = tri[k, 1]
    for j in range(sx.shape[0]):
        if j == i or m == 0:
            continue
        nx = sx[j] - sx[i]
        ny = sy[j] - sy[i]
        if nx == 0.0 and ny == 0.0:
            continue
        c = nx * 0.5 * (sx[i] + sx[j]) + ny * 0.5 * (sy[i] + sy[j])
        m = _clip(px, py, m, nx, ny, c, bx, by)
        for k in range(m):
            px[k] = bx[k]
            py[k] = by[k]
    return m


@njit(cache=True)
def _area_centroid(px, py, m):
    a = 0.0
    cx = 0.0
    cy = 0.0
    for k in range(m):
        j = (k + 1) % m
        cr = px[k] * py[j] - px[j] * py[k]
        a += cr
        cx += (px[k] + px[j]) * cr
        cy += (py[k] + py[j]) * cr
    a *= 0.5
    if abs(a) < 1e-300:
        return 0.0, 0.0, 0.0
    return a, cx / (6.0 * a), cy / (6.0 * a)


@njit(cache=True)
def lloyd_triangle(tri, sx, sy, iterations, tol):
    """Lloyd relaxation of sites (sx, sy) on the bounded Voronoi diagram of a
    2D triangle (counter-clockwise).

    Returns (sx, sy, cell area, boundary length of each cell on each of the
    three triangle edges, edge k running from vertex k to vertex k+1).
    """
    n = sx.shape[0]
    cap = n + 8
    px = np.empty(cap)
    py = np.empty(cap)
    bx = np.empty(cap)
    by = np.empty(cap)
    for _ in range(iterations):
        nx_ = np.empty(n)
        ny_ = np.empty(n)
        for i in range(n):
            m = _cell(i, sx, sy, tri, px, py, bx, by)
            a, cx, cy = _area_centroid(px, py, m)
            if a > 0.0:
                nx_[i] = cx
                ny_[i] = cy
            else:
                nx_[i] = sx[i]
                ny_[i] = sy[i]
        sx = nx_
        sy = ny_
    area = np.zeros(n)
    touch = np.zeros((n, 3))
    for i in range(n):
        m = _cell(i, sx, sy, tri, px, py, bx, by)
        a, cx, cy = _area_centroid(px, py, m)
        area[i] = a
        for e in range(3):
            x0, y0 = tri[e, 0], tri[e, 1]
            x1, y1 = tri[(e + 1) % 3, 0], tri[(e + 1) % 3, 1]
            ex, ey = x1 - x0, y1 - y0
            el = np.sqrt(ex * ex + ey * ey)
            if el == 0.0:
                continue
            for k in range(m):
                j = (k + 1) % m
                dk = abs((px[k] - x0) * ey - (py[k] - y0) * ex) / el
                dj = abs((px[j] - x0) * ey - (py[j] - y0) * ex) / el
                if dk <= tol * el and dj <= tol * el:
                    touch[i, e] += np.sqrt((px[j] - px[k]) ** 2 + (py[j] - py[k]) ** 2)
    return sx, sy, area, touch


@njit(cache=True)
def sample_triangles(tris, counts, keys, iterations, tol):
    """Random sites relaxed by Lloyd on each triangle of a batch.

    tris: (m, 3, 3); counts: (m,); keys: (m, 4) uint64 seeds.
    Returns flattened (owner, bary, area, touch) over all sites.
    """
    total = 0
    for f in range(tris.shape[0]):
        total += counts[f]
    owner = np.empty(total, np.int64)
    bary = np.empty((total, 3))
    area = np.empty(total)
    touch = np.empty((total, 3))
    tri2 = np.empty((3, 2))
    out = 0
    for f in range(tris.shape[0]):
        n = counts[f]
        a = tris[f, 0]
        b = tris[f, 1]
        c = tris[f, 2]
        ex = b - a
        l1 = np.sqrt(ex[0] ** 2 + ex[1] ** 2 + ex[2] ** 2)
        ac = c - a
        ux = ex / l1 if l1 > 0.0 else ex
        x2 = ac[0] * ux[0] + ac[1] * ux[1] + ac[2] * ux[2]
        r = ac - x2 * ux
        y2 = np.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
        tri2[0, 0] = 0.0
        tri2[0, 1] = 0.0
        tri2[1, 0] = l1
        tri2[1, 1] = 0.0
        tri2[2, 0] = x2
        tri2[2, 1] = y2
        if l1 <= 0.0 or y2 <= 1e-150 * l1:
            # degenerate facet: one-third barycentres, no area
            for i in range(n):
                owner[out] = f
                bary[out, 0] = 1.0 / 3.0
                bary[out, 1] = 1.0 / 3.0
                bary[out, 2] = 1.0 / 3.0
                area[out] = 0.0
                touch[out, 0] = 0.0
                touch[out, 1] = 0.0
                touch[out, 2] = 0.0
                out += 1
            continue
        sx = np.empty(n)
        sy = np.empty(n)
        for i in range(n):
            r1 = hashed_uniform(keys[f], 2 * i)
            r2 = hashed_uniform(keys[f], 2 * i + 1)
            s = np.sqrt(r1)
            u = 1.0 - s
            v = s * (1.0 - r2)
            w = s * r2
            sx[i] = v * l1 + w * x2
            sy[i] = w * y2
        sx, sy, ar, tc = lloyd_triangle(tri2, sx, sy, iterations, tol)
        for i in range(n):
            w = sy[i] / y2
            v = (sx[i] - w * x2) / l1
            u = 1.0 - v - w
            if u < 0.0:
                u = 0.0
            if v < 0.0:
                v = 0.0
            if w < 0.0:
                w = 0.0
            s = u + v + w
            owner[out] = f
            bary[out, 0] = u / s
            bary[out, 1] = v / s
            bary[out, 2] = w / s
            area[out] = ar[i]
            touch[out, 0] = tc[i, 0]
            touch[out, 1] = tc[i, 1]
            touch[out, 2] = tc[i, 2]
            out += 1
    return owner, bary, area, touch


@njit(cache=True)
def _tri_area(t):
    ux = t[1, 0] - t[0, 0]
    uy = t[1, 1] - t[0, 1]
    uz = t[1, 2] - t[0, 2]
    vx = t[2, 0] - t[0, 0]
    vy = t[2, 1] - t[0, 1]
    vz = t[2, 2] - t[0, 2]
    cx = uy * vz - uz * vy
    cy = uz * vx - ux * vz
    cz = ux * vy - uy * vx
    return 0.5 * np.sqrt(cx * cx + cy * cy + cz * cz)


@njit(cache=True)
def _shares_vertex(vids, i, j):
    for a in range(3):
        for b in range(3):
            if vids[i, a] == vids[j, b]:
                return True
    return False


@njit(cache=True)
def _find_edge(vids, lo, hi, u, v, skip):
    """First facet in [lo, hi) other than ``skip`` holding edge (u, v) in
    either orientation -> (facet, local edge) or (-1, -1)."""
    for g in range(lo, hi):
        if g == skip:
            continue
        for e in range(3):
            a = vids[g, e]
            b = vids[g, (e + 1) % 3]
            if (a == u and b == v) or (a == v and b == u):
                return g, e
    return -1, -1


@njit(cache=True)
def stratify_patch(tris, vids, n_target, n_f, seed, ctx_touch, iterations, tol):
    """Stratified samples on the first ``n_target`` facets of a facet batch.

    Facets past ``n_target`` are context: they contribute neighbour areas
    to the per-facet counts and, through ``ctx_touch`` (cells touching each
    of their edges), to the edge-sample counts of shared edges.

    Returns (points, kind, host, bary, area, face_touch); samples are
    ordered vertex, edge, facet, hosts index the batch.
    """
    m = tris.shape[0]
    areas = np.empty(m)
    for f in range(m):
        areas[f] = _tri_area(tris[f])
    counts = np.ones(n_target, np.int64)
    for i in range(n_target):
        if areas[i] <= 0.0:
            continue
        k = 0
        s = 0.0
        for j in range(m):
            if j != i and _shares_vertex(vids, i, j):
                k += 1
                s += areas[j]
        c = np.floor(n_f * (1.0 + k) / (1.0 + s / areas[i]) + 0.5)
        if c > 1.0:
            counts[i] = np.int64(c)
    keys = np.empty((n_target, 4), np.uint64)
    for f in range(n_target):
        a, b, c = vids[f, 0], vids[f, 1], vids[f, 2]
        if a > b:
            a, b = b, a
        if b > c:
            b, c = c, b
        if a > b:
            a, b = b, a
        keys[f, 0] = np.uint64(seed)
        keys[f, 1] = np.uint64(a)
        keys[f, 2] = np.uint64(b)
        keys[f, 3] = np.uint64(c)
    target = tris[:n_target]
    owner, fbary, farea, touch = sample_triangles(target, counts, keys, iterations, tol)

    face_touch = np.zeros((n_target, 3), np.int64)
    touch_area = np.zeros((n_target, 3))
    mean_cell = np.zeros(n_target)
    for s in range(owner.shape[0]):
        f = owner[s]
        mean_cell[f] += farea[s]
    for f in range(n_target):
        mean_cell[f] /= counts[f]
    for s in range(owner.shape[0]):
        f = owner[s]
        for e in range(3):
            p = tris[f, e]
            q = tris[f, (e + 1) % 3]
            el = np.sqrt((q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2 + (q[2] - p[2]) ** 2)
            if touch[s, e] > tol * max(el, 1e-300):
                face_touch[f, e] += 1
                touch_area[f, e] += farea[s]

    # edge counts, each edge owned by its first target facet
    edge_count = np.zeros((n_target, 3), np.int64)
    edge_weight = np.zeros((n_target, 3))
    n_edge = 0
    for f in range(n_target):
        for e in range(3):
            u = vids[f, e]
            v = vids[f, (e + 1) % 3]
            g, _ = _find_edge(vids, 0, f, u, v, -1)
            if g >= 0:
                continue
            cnt = face_touch[f, e]
            asum = touch_area[f, e]
            g, ge = _find_edge(vids, f + 1, n_target, u, v, -1)
            if g >= 0:
                cnt += face_touch[g, ge]
                asum += touch_area[g, ge]
            own = cnt
            g, ge = _find_edge(vids, n_target, m, u, v, -1)
            if g >= 0:
                cnt += ctx_touch[g - n_target, ge]
            if cnt <= 0:
                continue
            p = tris[f, e]
            q = tris[f, (e + 1) % 3]
            el = np.sqrt((q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2 + (q[2] - p[2]) ** 2)
            mean_area = asum / own if own > 0 else mean_cell[f]
            edge_count[f, e] = cnt
            edge_weight[f, e] = el / cnt * np.sqrt(mean_area)
            n_edge += cnt

    # vertex samples: first occurrence of each vertex id
    first = np.zeros((n_target, 3), np.bool_)
    n_vert = 0
    for f in range(n_target):
        for k in range(3):
            seen = False
            for g in range(f + 1):
                for j in range(3):
                    if (g < f or j < k) and vids[g, j] == vids[f, k]:
                        seen = True
            if not seen:
                first[f, k] = True
                n_vert += 1

    n_fac = owner.shape[0]
    total = n_vert + n_edge + n_fac
    points = np.empty((total, 3))
    kind = np.empty(total, np.int8)
    host = np.empty(total, np.int64)
    bary = np.zeros((total, 3))
    area = np.empty(total)
    out = 0
    for f in range(n_target):
        for k in range(3):
            if first[f, k]:
                points[out] = tris[f, k]
                kind[out] = 0
                host[out] = f
                bary[out, k] = 1.0
                area[out] = mean_cell[f]
                out += 1
    for f in range(n_target):
        for e in range(3):
            c = edge_count[f, e]
            for k in range(1, c + 1):
                s = k / (c + 1.0)
                bary[out, e] = 1.0 - s
                bary[out, (e + 1) % 3] = s
                for d in range(3):
                    points[out, d] = (1.0 - s) * tris[f, e, d] + s * tris[f, (e + 1) % 3, d]
                kind[out] = 1
                host[out] = f
                area[out] = edge_weight[f, e]
                out += 1
    for s in range(n_fac):
        f = owner[s]
        for d in range(3):
            points[out, d] = (fbary[s, 0] * tris[f, 0, d] + fbary[s, 1] * tris[f, 1, d]
                              + fbary[s, 2] * tris[f, 2, d])
        bary[out] = fbary[s]
        kind[out] = 2
        host[out] = f
        area[out] = farea[s]
        out += 1
    return points, kind, host, bary, area, face_touch


@njit(cache=True)
def corner_angles(tris):
    m = tris.shape[0]
    out = np.empty((m, 3))
    for i in range(m):
        for k in range(3):
            a = tris[i, k]
            b = tris[i, (k + 1) % 3]
            c = tris[i, (k + 2) % 3]
            ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
            vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
            cx = uy * vz - uz * vy
            cy = uz * vx - ux * vz
            cz = ux * vy - uy * vx
            out[i, k] = np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz), ux * vx + uy * vy + uz * vz)
    return out


@njit(cache=True)
def triangle_normals(tris):
    m = tris.shape[0]
    out = np.empty((m, 3))
    for i in range(m):
        ux = tris[i, 1, 0] - tris[i, 0, 0]
        uy = tris[i, 1, 1] - tris[i, 0, 1]
        uz = tris[i, 1, 2] - tris[i, 0, 2]
        vx = tris[i, 2, 0] - tris[i, 0, 0]
        vy = tris[i, 2, 1] - tris[i, 0, 1]
        vz = tris[i, 2, 2] - tris[i, 0, 2]
        out[i, 0] = uy * vz - uz * vy
        out[i, 1] = uz * vx - ux * vz
        out[i, 2] = ux * vy - uy * vx
    return out
