"""Compiled inner loops for polytope clipping and moment integration.

Polytopes are passed as flat arrays: ``verts`` (V, 3), ``fidx`` holding the
concatenated face loops, ``fptr`` (F + 1) offsets into ``fidx`` and ``ftag``
(F,) integer face labels.
"""
import math

import numpy as np
from numba import njit

UNCHANGED = 0
CLIPPED = 1
EMPTY = 2


@njit(cache=True)
def extent(verts):
    lo0 = verts[0, 0]
    lo1 = verts[0, 1]
    lo2 = verts[0, 2]
    hi0 = lo0
    hi1 = lo1
    hi2 = lo2
    for i in range(1, verts.shape[0]):
        x = verts[i, 0]
        y = verts[i, 1]
        z = verts[i, 2]
        if x < lo0:
            lo0 = x
        elif x > hi0:
            hi0 = x
        if y < lo1:
            lo1 = y
        elif y > hi1:
            hi1 = y
        if z < lo2:
            lo2 = z
        elif z > hi2:
            hi2 = z
    return math.sqrt((hi0 - lo0) ** 2 + (hi1 - lo1) ** 2 + (hi2 - lo2) ** 2)


@njit(cache=True)
def max_dist2(verts, q):
    best = 0.0
    for i in range(verts.shape[0]):
        dx = verts[i, 0] - q[0]
        dy = verts[i, 1] - q[1]
        dz = verts[i, 2] - q[2]
        r = dx * dx + dy * dy + dz * dz
        if r > best:
            best = r
    return best


@njit(cache=True)
def clip(verts, fidx, fptr, ftag, normal, offset, tag, plane_tol, dedup_tol):
    nv = verts.shape[0]
    nf = fptr.shape[0] - 1
    d = np.empty(nv)
    cls = np.empty(nv, dtype=np.int8)
    eps = plane_tol * extent(verts)
    n_out = 0
    n_in = 0
    for i in range(nv):
        d[i] = verts[i, 0] * normal[0] + verts[i, 1] * normal[1] + verts[i, 2] * normal[2] - offset
        if d[i] > eps:
            cls[i] = 1
            n_out += 1
        elif d[i] < -eps:
            cls[i] = -1
            n_in += 1
        else:
            cls[i] = 0
    if n_out == 0:
        return verts, fidx, fptr, ftag, UNCHANGED
    if n_in == 0:
        return verts[:0], fidx[:0], fptr[:1], ftag[:0], EMPTY

    cap_v = nv + fidx.shape[0] // 2 + 2
    nverts = np.empty((cap_v, 3))
    nverts[:nv] = verts
    on_plane = np.zeros(cap_v, dtype=np.bool_)
    for i in range(nv):
        if cls[i] == 0:
            on_plane[i] = True
    cnt = nv
    # crossing edges: small linear table
    ca = np.empty(fidx.shape[0], dtype=np.int64)
    cb = np.empty(fidx.shape[0], dtype=np.int64)
    cv = np.empty(fidx.shape[0], dtype=np.int64)
    ncross = 0

    cap_l = fidx.shape[0] + 2 * nf + 2
    nidx = np.empty(cap_l + cap_v, dtype=np.int64)
    nptr = np.empty(nf + 2, dtype=np.int64)
    ntag = np.empty(nf + 1, dtype=np.int64)
    nptr[0] = 0
    pos = 0
    nface = 0
    coplanar = False
    for f in range(nf):
        start = pos
        k0 = fptr[f]
        k1 = fptr[f + 1]
        k = k1 - k0
        all_on = True
        for j in range(k):
            s = fidx[k0 + j]
            e = fidx[k0 + (j + 1) % k]
            if cls[s] != 0:
                all_on = False
            if cls[s] != 1:
                if pos == start or nidx[pos - 1] != s:
                    nidx[pos] = s
                    pos += 1
            if (cls[s] == -1 and cls[e] == 1) or (cls[s] == 1 and cls[e] == -1):
                a = s if s < e else e
                b = e if s < e else s
                vi = -1
                for c in range(ncross):
                    if ca[c] == a and cb[c] == b:
                        vi = cv[c]
                        break
                if vi < 0:
                    t = d[a] / (d[a] - d[b])
                    px = verts[a, 0] + t * (verts[b, 0] - verts[a, 0])
                    py = verts[a, 1] + t * (verts[b, 1] - verts[a, 1])
                    pz = verts[a, 2] + t * (verts[b, 2] - verts[a, 2])
                    da = math.sqrt((px - verts[a, 0]) ** 2 + (py - verts[a, 1]) ** 2 + (pz - verts[a, 2]) ** 2)
                    db = math.sqrt((px - verts[b, 0]) ** 2 + (py - verts[b, 1]) ** 2 + (pz - verts[b, 2]) ** 2)
                    if da <= dedup_tol and cls[a] != 1:
                        vi = a
                    elif db <= dedup_tol and cls[b] != 1:
                        vi = b
                    else:
                        vi = cnt
                        nverts[cnt, 0] = px
                        nverts[cnt, 1] = py
                        nverts[cnt, 2] = pz
                        cnt += 1
                    on_plane[vi] = True
                    ca[ncross] = a
                    cb[ncross] = b
                    cv[ncross] = vi
                    ncross += 1
                if pos == start or nidx[pos - 1] != vi:
                    nidx[pos] = vi
                    pos += 1
        if all_on:
            coplanar = True
        # wrap-around duplicate
        if pos - start > 1 and nidx[pos - 1] == nidx[start]:
            pos -= 1
        if pos - start >= 3:
            ntag[nface] = ftag[f]
            nface += 1
            nptr[nface] = pos
        else:
            pos = start

    # cap face
    if not coplanar:
        m = 0
        for i in range(cnt):
            if on_plane[i]:
                m += 1
        if m >= 3:
            ids = np.empty(m, dtype=np.int64)
            j = 0
            cx = 0.0
            cy = 0.0
            cz = 0.0
            for i in range(cnt):
                if on_plane[i]:
                    ids[j] = i
                    cx += nverts[i, 0]
                    cy += nverts[i, 1]
                    cz += nverts[i, 2]
                    j += 1
            cx /= m
            cy /= m
            cz /= m
            if abs(normal[0]) < 0.9:
                ax, ay, az = 1.0, 0.0, 0.0
            else:
                ax, ay, az = 0.0, 1.0, 0.0
            ux = normal[1] * az - normal[2] * ay
            uy = normal[2] * ax - normal[0] * az
            uz = normal[0] * ay - normal[1] * ax
            un = math.sqrt(ux * ux + uy * uy + uz * uz)
            ux /= un
            uy /= un
            uz /= un
            wx = normal[1] * uz - normal[2] * uy
            wy = normal[2] * ux - normal[0] * uz
            wz = normal[0] * uy - normal[1] * ux
            ang = np.empty(m)
            for j in range(m):
                rx = nverts[ids[j], 0] - cx
                ry = nverts[ids[j], 1] - cy
                rz = nverts[ids[j], 2] - cz
                ang[j] = math.atan2(rx * wx + ry * wy + rz * wz, rx * ux + ry * uy + rz * uz)
            order = np.argsort(ang, kind="mergesort")
            start = pos
            for j in range(m):
                v = ids[order[j]]
                if pos > start:
                    u = nidx[pos - 1]
                    dist = math.sqrt((nverts[v, 0] - nverts[u, 0]) ** 2 + (nverts[v, 1] - nverts[u, 1]) ** 2
                                     + (nverts[v, 2] - nverts[u, 2]) ** 2)
                    if dist <= dedup_tol:
                        continue
                nidx[pos] = v
                pos += 1
            if pos - start > 1:
                u = nidx[start]
                v = nidx[pos - 1]
                dist = math.sqrt((nverts[v, 0] - nverts[u, 0]) ** 2 + (nverts[v, 1] - nverts[u, 1]) ** 2
                                 + (nverts[v, 2] - nverts[u, 2]) ** 2)
                if dist <= dedup_tol:
                    pos -= 1
            if pos - start >= 3:
                ntag[nface] = tag
                nface += 1
                nptr[nface] = pos
            else:
                pos = start

    if nface < 4:
        return verts[:0], fidx[:0], fptr[:1], ftag[:0], EMPTY

    # compact vertices
    remap = np.full(cnt, -1, dtype=np.int64)
    nused = 0
    for i in range(pos):
        v = nidx[i]
        if remap[v] < 0:
            remap[v] = 0
    for v in range(cnt):
        if remap[v] == 0:
            remap[v] = nused
            nused += 1
    out_v = np.empty((nused, 3))
    for v in range(cnt):
        if remap[v] >= 0:
            out_v[remap[v]] = nverts[v]
    out_i = np.empty(pos, dtype=np.int64)
    for i in range(pos):
        out_i[i] = remap[nidx[i]]
    return out_v, out_i, nptr[:nface + 1].copy(), ntag[:nface].copy(), CLIPPED


@njit(cache=True)
def moments(verts, fidx, fptr, q):
    """Return (volume, centroid, second moment about q)."""
    nv = verts.shape[0]
    ax = 0.0
    ay = 0.0
    az = 0.0
    for i in range(nv):
        ax += verts[i, 0] - q[0]
        ay += verts[i, 1] - q[1]
        az += verts[i, 2] - q[2]
    ax /= nv
    ay /= nv
    az /= nv
    a2 = ax * ax + ay * ay + az * az
    vol = 0.0
    sx = 0.0
    sy = 0.0
    sz = 0.0
    m2 = 0.0
    nf = fptr.shape[0] - 1
    for f in range(nf):
        k0 = fptr[f]
        k1 = fptr[f + 1]
        i0 = fidx[k0]
        p0x = verts[i0, 0] - q[0]
        p0y = verts[i0, 1] - q[1]
        p0z = verts[i0, 2] - q[2]
        for j in range(k0 + 1, k1 - 1):
            i1 = fidx[j]
            i2 = fidx[j + 1]
            p1x = verts[i1, 0] - q[0]
            p1y = verts[i1, 1] - q[1]
            p1z = verts[i1, 2] - q[2]
            p2x = verts[i2, 0] - q[0]
            p2y = verts[i2, 1] - q[1]
            p2z = verts[i2, 2] - q[2]
            ux = p0x - ax
            uy = p0y - ay
            uz = p0z - az
            vx = p1x - ax
            vy = p1y - ay
            vz = p1z - az
            wx = p2x - ax
            wy = p2y - ay
            wz = p2z - az
            v6 = ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) + uz * (vx * wy - vy * wx)
            v = v6 / 6.0
            tx = ax + p0x + p1x + p2x
            ty = ay + p0y + p1y + p2y
            tz = az + p0z + p1z + p2z
            sq = (a2 + p0x * p0x + p0y * p0y + p0z * p0z + p1x * p1x + p1y * p1y + p1z * p1z
                  + p2x * p2x + p2y * p2y + p2z * p2z + tx * tx + ty * ty + tz * tz)
            vol += v
            sx += v * tx
            sy += v * ty
            sz += v * tz
            m2 += v * sq
    c = np.empty(3)
    if vol != 0.0:
        c[0] = sx / (4.0 * vol) + q[0]
        c[1] = sy / (4.0 * vol) + q[1]
        c[2] = sz / (4.0 * vol) + q[2]
    else:
        c[0] = q[0]
        c[1] = q[1]
        c[2] = q[2]
    return vol, c, m2 / 20.0


@njit(cache=True)
def voronoi_clip(verts, fidx, fptr, ftag, y, cand, cand_tag, cand_dist, plane_tol, dedup_tol):
    """Clip a cell of generator ``y`` by bisectors with sorted candidates.

    Stops at the first candidate farther than twice the current bounding
    radius; returns the cell, the count of candidates consumed and that radius.
    """
    r = math.sqrt(max_dist2(verts, y))
    used = 0
    normal = np.empty(3)
    for c in range(cand.shape[0]):
        if cand_dist[c] >= 2.0 * r:
            break
        used = c + 1
        dx = cand[c, 0] - y[0]
        dy = cand[c, 1] - y[1]
        dz = cand[c, 2] - y[2]
        ln = math.sqrt(dx * dx + dy * dy + dz * dz)
        normal[0] = dx / ln
        normal[1] = dy / ln
        normal[2] = dz / ln
        off = normal[0] * (y[0] + 0.5 * dx) + normal[1] * (y[1] + 0.5 * dy) + normal[2] * (y[2] + 0.5 * dz)
        verts, fidx, fptr, ftag, status = clip(verts, fidx, fptr, ftag, normal, off,
                                               cand_tag[c], plane_tol, dedup_tol)
        if status == EMPTY:
            return verts, fidx, fptr, ftag, used, 0.0
        if status == CLIPPED:
            r = math.sqrt(max_dist2(verts, y))
    return verts, fidx, fptr, ftag, used, r


@njit(cache=True)
def box_arrays(lo, hi, tag0):
    verts = np.empty((8, 3))
    for i in range(8):
        verts[i, 0] = hi if i & 1 else lo
        verts[i, 1] = hi if i & 2 else lo
        verts[i, 2] = hi if i & 4 else lo
    fidx = np.array([0, 4, 6, 2, 1, 3, 7, 5, 0, 1, 5, 4, 2, 6, 7, 3, 0, 2, 3, 1, 4, 5, 7, 6],
                    dtype=np.int64)
    fptr = np.array([0, 4, 8, 12, 16, 20, 24], dtype=np.int64)
    ftag = np.empty(6, dtype=np.int64)
    for i in range(6):
        ftag[i] = tag0 - i
    return verts, fidx, fptr, ftag


@njit(cache=True)
def halfspace_polytope(normals, offsets, bound, plane_tol, dedup_tol):
    """Intersect {n_i . x <= h_i} inside [-bound, bound]^3.

    Face tags are the half-space indices; faces left over from the bounding
    box carry negative tags.  Status is EMPTY when nothing remains.
    """
    verts, fidx, fptr, ftag = box_arrays(-bound, bound, -1)
    status = CLIPPED
    for i in range(normals.shape[0]):
        verts, fidx, fptr, ftag, st = clip(verts, fidx, fptr, ftag, normals[i], offsets[i], i,
                                           plane_tol, dedup_tol)
        if st == EMPTY:
            return verts, fidx, fptr, ftag, EMPTY
    return verts, fidx, fptr, ftag, status


@njit(cache=True)
def shape_moment(normals, offsets, bound, plane_tol, dedup_tol):
    """Second moment about the centroid over volume^{5/3}; inf if empty or unbounded."""
    verts, fidx, fptr, ftag, st = halfspace_polytope(normals, offsets, bound, plane_tol, dedup_tol)
    if st == EMPTY:
        return np.inf
    for i in range(ftag.shape[0]):
        if ftag[i] < 0:
            return np.inf
    q = np.zeros(3)
    for i in range(verts.shape[0]):
        q += verts[i]
    q /= verts.shape[0]
    vol, c, _ = moments(verts, fidx, fptr, q)
    if not vol > 0.0:
        return np.inf
    vol, c2, m2 = moments(verts, fidx, fptr, c)
    return m2 / vol ** (5.0 / 3.0)
