"""Deterministic SVG rendering and the exact polygon oracle for d = 2."""

import numpy as np


def boundary_polyline(body, n=720):
    """n radial samples of the boundary, ordered by angle."""
    ang = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    U = np.c_[np.cos(ang), np.sin(ang)]
    r = body.radial_batch(U)
    return r[:, None] * U


def sort_by_angle(Y):
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ang = np.arctan2(Y[:, 1], Y[:, 0])
    return Y[np.argsort(ang, kind="stable")]


def convex_polygon_contains(polygon, points, tol=1e-12):
    """Exact orientation test: all points inside the CCW convex polygon.

    polygon must be angularly sorted vertices of a convex set containing
    the origin (which the transversal construction guarantees).
    """
    P = np.asarray(polygon, dtype=float)
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    A = P
    B = np.roll(P, -1, axis=0)
    e = B - A
    scale = max(float(np.abs(P).max()), 1.0)
    # cross(e_i, q - a_i) >= -tol for all edges i
    cross = (e[:, 0][:, None] * (Q[:, 1][None, :] - A[:, 1][:, None])
             - e[:, 1][:, None] * (Q[:, 0][None, :] - A[:, 0][:, None]))
    return bool(np.all(cross >= -tol * scale * scale))


def polygon_containment_check(body, Y, eps, n=720):
    """d=2 oracle, independent of support probing: is (1-eps) bd K inside conv(Y)?"""
    if body.dim != 2:
        raise ValueError("polygon check is d = 2 only")
    ring = (1.0 - eps) * boundary_polyline(body, n)
    poly = sort_by_angle(Y)
    return convex_polygon_contains(poly, ring)


def _fmt(x):
    return format(float(x), ".6f")


def _path(points, closed=True):
    parts = [f"M {_fmt(points[0][0])} {_fmt(points[0][1])}"]
    parts += [f"L {_fmt(p[0])} {_fmt(p[1])}" for p in points[1:]]
    if closed:
        parts.append("Z")
    return " ".join(parts)


def plot2d(body, Y, eps, path, n=720):
    """Write an SVG of bd K, (1-eps) bd K, conv(Y) and the vertex markers.

    Output bytes are a pure function of the inputs.
    """
    if body.dim != 2:
        raise ValueError("plot2d supports d = 2 only")
    outer = boundary_polyline(body, n)
    inner = (1.0 - eps) * outer
    poly = sort_by_angle(Y)
    lim = float(np.abs(outer).max()) * 1.1
    size = 640
    scale = size / (2 * lim)

    def to_px(P):
        return np.c_[(P[:, 0] + lim) * scale, (lim - P[:, 1]) * scale]

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<path d="{_path(to_px(outer))}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>',
        f'<path d="{_path(to_px(inner))}" fill="none" stroke="#7f7f7f" '
        'stroke-width="1.0" stroke-dasharray="4 3"/>',
        f'<path d="{_path(to_px(poly))}" fill="#ff7f0e" fill-opacity="0.15" '
        'stroke="#ff7f0e" stroke-width="1.2"/>',
    ]
    for px, py in to_px(poly):
        lines.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="2.2" fill="#d62728"/>')
    lines.append("</svg>")
    data = "\n".join(lines) + "\n"
    with open(path, "w") as f:
        f.write(data)
    return data
