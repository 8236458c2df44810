#!/usr/bin/env python3
"""Writes the planetary-gear style example meshes used by configs/*.json.

All meshes are in millimetres (configs import them with scale 0.001). Gear
bodies are extrusions of star-shaped profiles around a circular bore, so every
cap is a simple quad strip between the bore and the outer profile.

    python3 tools/make_example_assets.py [out_dir]
"""

import math
import struct
import sys
from pathlib import Path


def tooth_wave(phase):
    """Trapezoidal tooth profile over one pitch, phase in [0, 1)."""
    if phase < 0.15:
        return phase / 0.15
    if phase < 0.45:
        return 1.0
    if phase < 0.6:
        return 1.0 - (phase - 0.45) / 0.15
    return 0.0


def gear_profile(root, tip, teeth, samples_per_tooth=12):
    pts = []
    n = teeth * samples_per_tooth
    for i in range(n):
        theta = 2.0 * math.pi * i / n
        phase = (i % samples_per_tooth) / samples_per_tooth
        r = root + (tip - root) * tooth_wave(phase)
        pts.append((theta, r))
    return pts


def circle_profile(radius, n):
    return [(2.0 * math.pi * i / n, radius) for i in range(n)]


def lobed_profile(radius, lobes, amplitude, n):
    return [(2.0 * math.pi * i / n, radius * (1.0 + amplitude * math.cos(lobes * 2.0 * math.pi * i / n)))
            for i in range(n)]


def extrude_annulus(outer, inner_radius, height):
    """Solid between an outer star-shaped profile and a circular bore."""
    tris = []
    n = len(outer)

    def p(theta, r, z):
        return (r * math.cos(theta), r * math.sin(theta), z)

    for i in range(n):
        t0, r0 = outer[i]
        t1, r1 = outer[(i + 1) % n]
        if i + 1 == n:
            t1 += 2.0 * math.pi
        o0b, o1b = p(t0, r0, 0.0), p(t1, r1, 0.0)
        o0t, o1t = p(t0, r0, height), p(t1, r1, height)
        i0b, i1b = p(t0, inner_radius, 0.0), p(t1, inner_radius, 0.0)
        i0t, i1t = p(t0, inner_radius, height), p(t1, inner_radius, height)
        # outer wall
        tris += [(o0b, o1b, o1t), (o0b, o1t, o0t)]
        # bore wall (facing inwards)
        tris += [(i0b, i1t, i1b), (i0b, i0t, i1t)]
        # top and bottom caps
        tris += [(i0t, o0t, o1t), (i0t, o1t, i1t)]
        tris += [(i0b, o1b, o0b), (i0b, i1b, o1b)]
    return tris


def ring_with_inner_teeth(outer_radius, root, tip, teeth, height, samples_per_tooth=12):
    """Ring gear: circular outside, teeth pointing inwards."""
    tris = []
    inner = gear_profile(root, tip, teeth, samples_per_tooth)
    n = len(inner)

    def p(theta, r, z):
        return (r * math.cos(theta), r * math.sin(theta), z)

    for i in range(n):
        t0, r0 = inner[i]
        t1, r1 = inner[(i + 1) % n]
        if i + 1 == n:
            t1 += 2.0 * math.pi
        o0b, o1b = p(t0, outer_radius, 0.0), p(t1, outer_radius, 0.0)
        o0t, o1t = p(t0, outer_radius, height), p(t1, outer_radius, height)
        i0b, i1b = p(t0, r0, 0.0), p(t1, r1, 0.0)
        i0t, i1t = p(t0, r0, height), p(t1, r1, height)
        tris += [(o0b, o1b, o1t), (o0b, o1t, o0t)]
        tris += [(i0b, i1t, i1b), (i0b, i0t, i1t)]
        tris += [(i0t, o0t, o1t), (i0t, o1t, i1t)]
        tris += [(i0b, o1b, o0b), (i0b, i1b, o1b)]
    return tris


def normal(a, b, c):
    u = [b[k] - a[k] for k in range(3)]
    v = [c[k] - a[k] for k in range(3)]
    n = (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])
    length = math.sqrt(sum(x * x for x in n))
    return tuple(x / length for x in n) if length > 0 else (0.0, 0.0, 0.0)


def write_binary(path, tris):
    with open(path, "wb") as f:
        f.write(b"synthasm example asset".ljust(80, b"\0"))
        f.write(struct.pack("<I", len(tris)))
        for t in tris:
            f.write(struct.pack("<3f", *normal(*t)))
            for v in t:
                f.write(struct.pack("<3f", *v))
            f.write(b"\0\0")


def write_ascii(path, name, tris):
    with open(path, "w") as f:
        f.write(f"solid {name}\n")
        for t in tris:
            f.write("  facet normal %.6e %.6e %.6e\n" % normal(*t))
            f.write("    outer loop\n")
            for v in t:
                f.write("      vertex %.6e %.6e %.6e\n" % v)
            f.write("    endloop\n  endfacet\n")
        f.write(f"endsolid {name}\n")


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "assets"
    out.mkdir(parents=True, exist_ok=True)
    write_binary(out / "sun_gear.stl", extrude_annulus(gear_profile(10.5, 12.0, 12), 3.0, 8.0))
    write_binary(out / "spur_gear.stl", extrude_annulus(gear_profile(13.5, 15.0, 16), 3.0, 8.0))
    write_binary(out / "ring_gear.stl", ring_with_inner_teeth(50.0, 43.5, 42.0, 40, 8.0, 8))
    write_binary(out / "holder.stl", extrude_annulus(lobed_profile(35.0, 3, 0.12, 96), 6.0, 6.0))
    write_ascii(out / "bearing.stl", "bearing", extrude_annulus(circle_profile(5.0, 24), 2.5, 4.0))


if __name__ == "__main__":
    main()
