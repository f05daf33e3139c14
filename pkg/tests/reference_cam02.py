"""Scalar CIECAM02 / CAM02-UCS reference evaluator used as a test oracle.

This follows the published appearance-model recipe step by step with plain
math-module scalars and no shared code with palette_forge. It exists so the
library's vectorized conversion can be checked against an independently
written second implementation; keep it boring and close to the textbook
presentation.
"""

import math

# sRGB (IEC 61966-2-1) to XYZ under D65, XYZ scaled to 0..100.
_SRGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)

_CAT02 = (
    (0.7328, 0.4296, -0.1624),
    (-0.7036, 1.6975, 0.0061),
    (0.0030, 0.0136, 0.9834),
)

_HPE = (
    (0.38971, 0.68898, -0.07868),
    (-0.22981, 1.18340, 0.04641),
    (0.0, 0.0, 1.0),
)

_SURROUNDS = {
    "average": (1.0, 0.69, 1.0),  # F, c, N_c
    "dim": (0.9, 0.59, 0.9),
    "dark": (0.8, 0.525, 0.8),
}


def _mat_vec(m, v):
    return tuple(m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] for i in range(3))


def _mat_inv(m):
    """3x3 inverse via the adjugate, enough for the fixed model matrices."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return (
        ((e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det),
        ((f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det),
        ((d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det),
    )


_CAT02_INV = _mat_inv(_CAT02)


def srgb_to_linear_ref(rgb8):
    out = []
    for v in rgb8:
        u = v / 255.0
        out.append(u / 12.92 if u <= 0.04045 else ((u + 0.055) / 1.055) ** 2.4)
    return tuple(out)


def linear_to_xyz_ref(rgb_lin):
    return tuple(100.0 * x for x in _mat_vec(_SRGB_TO_XYZ, rgb_lin))


def _adapt(x, f_l):
    """Post-adaptation cone response, sign-symmetric for negative inputs."""
    sign = -1.0 if x < 0 else 1.0
    p = (f_l * abs(x) / 100.0) ** 0.42
    return sign * 400.0 * p / (27.13 + p) + 0.1


def ciecam02_ref(xyz, white_xyz, l_a, y_b, surround="average"):
    """Full forward CIECAM02, returning a dict of correlates."""
    f, c, n_c = _SURROUNDS[surround]
    y_w = white_xyz[1]

    rgb = _mat_vec(_CAT02, xyz)
    rgb_w = _mat_vec(_CAT02, white_xyz)

    d = f * (1.0 - (1.0 / 3.6) * math.exp((-l_a - 42.0) / 92.0))
    d = min(1.0, max(0.0, d))

    rgb_c = tuple((y_w * d / rgb_w[i] + 1.0 - d) * rgb[i] for i in range(3))
    rgb_wc = tuple((y_w * d / rgb_w[i] + 1.0 - d) * rgb_w[i] for i in range(3))

    k = 1.0 / (5.0 * l_a + 1.0)
    f_l = 0.2 * k ** 4 * (5.0 * l_a) + 0.1 * (1.0 - k ** 4) ** 2 * (5.0 * l_a) ** (1.0 / 3.0)

    n = y_b / y_w
    z = 1.48 + math.sqrt(n)
    n_bb = 0.725 * (1.0 / n) ** 0.2
    n_cb = n_bb

    rgb_p = _mat_vec(_HPE, _mat_vec(_CAT02_INV, rgb_c))
    rgb_wp = _mat_vec(_HPE, _mat_vec(_CAT02_INV, rgb_wc))

    ra, ga, ba = (_adapt(v, f_l) for v in rgb_p)
    ra_w, ga_w, ba_w = (_adapt(v, f_l) for v in rgb_wp)

    a = ra - 12.0 * ga / 11.0 + ba / 11.0
    b = (ra + ga - 2.0 * ba) / 9.0
    h = math.degrees(math.atan2(b, a)) % 360.0

    e_t = 0.25 * (math.cos(math.radians(h) + 2.0) + 3.8)

    a_ach = (2.0 * ra + ga + ba / 20.0 - 0.305) * n_bb
    a_ach_w = (2.0 * ra_w + ga_w + ba_w / 20.0 - 0.305) * n_bb
    a_ach = max(a_ach, 0.0)

    j = 100.0 * (a_ach / a_ach_w) ** (c * z)

    t_num = (50000.0 / 13.0) * n_c * n_cb * e_t * math.hypot(a, b)
    t = t_num / (ra + ga + 21.0 * ba / 20.0)
    cc = t ** 0.9 * math.sqrt(j / 100.0) * (1.64 - 0.29 ** n) ** 0.73
    m = cc * f_l ** 0.25

    return {"J": j, "C": cc, "M": m, "h": h}


def srgb_to_ucs_ref(rgb8, white_xyz, l_a, y_b, surround="average"):
    """sRGB 8-bit to CAM02-UCS (J', a', b')."""
    cam = ciecam02_ref(
        linear_to_xyz_ref(srgb_to_linear_ref(rgb8)), white_xyz, l_a, y_b, surround
    )
    jp = 1.7 * cam["J"] / (1.0 + 0.007 * cam["J"])
    mp = math.log(1.0 + 0.0228 * cam["M"]) / 0.0228
    hr = math.radians(cam["h"])
    return (jp, mp * math.cos(hr), mp * math.sin(hr))


def srgb_to_lab_ref(rgb8, white_xyz):
    """sRGB 8-bit to CIELAB under the given white."""
    xyz = linear_to_xyz_ref(srgb_to_linear_ref(rgb8))

    def fwd(t):
        return t ** (1.0 / 3.0) if t > (6.0 / 29.0) ** 3 else t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0

    fx = fwd(xyz[0] / white_xyz[0])
    fy = fwd(xyz[1] / white_xyz[1])
    fz = fwd(xyz[2] / white_xyz[2])
    return (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def delta_e_ref(u1, u2):
    return math.dist(u1, u2)
