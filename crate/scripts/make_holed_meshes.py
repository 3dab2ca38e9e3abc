#!/usr/bin/env python3
"""Generate the bundled .node/.ele meshes for the holed domains.

Produces a conforming Delaunay triangulation of the unit square with
circular holes approximated by regular polygons, written in Triangle-style
ASCII (1-based ids). Rerunning regenerates the assets deterministically.
"""

import math
import sys

import numpy as np
from scipy.spatial import Delaunay


def polygon_points(center, radius, m, phase=0.0):
    cx, cy = center
    return [
        (cx + radius * math.cos(phase + 2 * math.pi * k / m),
         cy + radius * math.sin(phase + 2 * math.pi * k / m))
        for k in range(m)
    ]


def build(holes, n_grid, m_circle, ring_scale=1.45):
    s = 1.0 / n_grid
    pts = []
    # outer square grid, skipping points swallowed by holes
    for j in range(n_grid + 1):
        for i in range(n_grid + 1):
            x, y = i * s, j * s
            if all(math.hypot(x - cx, y - cy) > ring_scale * r + 0.55 * s
                   for (cx, cy), r in holes):
                pts.append((x, y))
    hole_polys = []
    for (c, r) in holes:
        poly = polygon_points(c, r, m_circle)
        hole_polys.append(poly)
        pts.extend(poly)
        # relief ring between the hole polygon and the background grid
        pts.extend(polygon_points(c, ring_scale * r, m_circle,
                                  phase=math.pi / m_circle))
    pts = np.array(pts)
    tri = Delaunay(pts)
    keep = []
    for simplex in tri.simplices:
        cx = pts[simplex, 0].mean()
        cy = pts[simplex, 1].mean()
        if all(math.hypot(cx - hx, cy - hy) > r
               for (hx, hy), r in holes):
            keep.append(simplex)
    keep = np.array(keep)
    return pts, keep, hole_polys


def edge_set(tris):
    es = set()
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            es.add((min(a, b), max(a, b)))
    return es


def check(pts, tris, hole_polys):
    # conformity: every hole polygon segment is a mesh edge
    es = edge_set(tris)
    index = {tuple(p): i for i, p in enumerate(map(tuple, pts))}
    for poly in hole_polys:
        ids = [index[p] for p in poly]
        for k in range(len(ids)):
            a, b = ids[k], ids[(k + 1) % len(ids)]
            assert (min(a, b), max(a, b)) in es, "hole polygon edge missing"
    # edge-manifold: every edge borders at most 2 triangles
    from collections import Counter
    cnt = Counter()
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            cnt[(min(a, b), max(a, b))] += 1
    assert max(cnt.values()) <= 2
    # quality
    angles = []
    for t in tris:
        p = pts[t]
        for k in range(3):
            u = p[(k + 1) % 3] - p[k]
            v = p[(k + 2) % 3] - p[k]
            c = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
            angles.append(math.degrees(math.acos(max(-1.0, min(1.0, c)))))
    n_bnd = sum(1 for e, c in cnt.items() if c == 1)
    n_int = sum(1 for e, c in cnt.items() if c == 2)
    used = set(t for tri_ in tris for t in tri_)
    bnd_v = set()
    for e, c in cnt.items():
        if c == 1:
            bnd_v.update(e)
    n_v_int = len(used) - len(bnd_v)
    defect = (n_int + 1) - (n_v_int + len(tris))
    return min(angles), len(tris), len(used), defect


def write_mesh(path_base, pts, tris):
    used = sorted(set(t for tri_ in tris for t in tri_))
    remap = {old: new for new, old in enumerate(used)}
    with open(path_base + ".node", "w") as f:
        f.write(f"{len(used)} 2 0 0\n")
        for new, old in enumerate(used):
            f.write(f"{new + 1} {pts[old][0]:.17g} {pts[old][1]:.17g}\n")
    with open(path_base + ".ele", "w") as f:
        f.write(f"{len(tris)} 3 0\n")
        for i, t in enumerate(tris):
            a, b, c = (remap[v] + 1 for v in t)
            f.write(f"{i + 1} {a} {b} {c}\n")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "."
    jobs = [
        ("ex2_holed_square",
         [((0.5, 0.5), 0.1), ((0.2, 0.8), 0.1), ((0.8, 0.8), 0.1)]),
        ("ex4_channel_hole",
         [((0.5, 0.5), 0.1)]),
    ]
    for name, holes in jobs:
        pts, tris, polys = build(holes, n_grid=10, m_circle=12)
        min_angle, nt, nv, defect = check(pts, tris, polys)
        print(f"{name}: {nt} triangles, {nv} vertices, "
              f"min angle {min_angle:.1f} deg, euler defect {defect} "
              f"(expect {len(holes)})")
        assert defect == len(holes)
        assert min_angle > 18.0
        write_mesh(f"{out}/{name}", pts, tris)


if __name__ == "__main__":
    main()
