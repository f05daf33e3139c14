"""Color conversions: sRGB, linear RGB, XYZ, CIECAM02/CAM02-UCS, CIELAB.

All perceptual math in this package happens in CAM02-UCS coordinates
(J', a', b'); Euclidean distance there is the perceptual distance dE'.
Conversions are vectorized over (N, 3) float arrays, with thin scalar
wrappers for single colors. The precomputed gamut table lives here too.
"""

from __future__ import annotations

import functools
import hashlib
import os
import struct
from typing import Iterable, NamedTuple

import numpy as np

Srgb8 = tuple  # (r, g, b), ints in [0, 255]


class UcsCoord(NamedTuple):
    j: float
    a: float
    b: float


class LabCoord(NamedTuple):
    l: float
    a: float
    b: float


class ViewingConditions(NamedTuple):
    """CIECAM02 viewing conditions; hashable so derived params can be cached."""

    white: tuple  # XYZ of the adopted white, Y ~ 100
    la: float  # adapting luminance, cd/m^2
    yb: float  # background luminance factor
    surround: str  # average | dim | dark


class PaletteError(ValueError):
    """Domain error raised across the package (maps to CLI exit code 1)."""


# sRGB (IEC 61966-2-1) to XYZ under D65, for XYZ scaled to [0, 100].
M_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

M_CAT02 = np.array(
    [
        [0.7328, 0.4296, -0.1624],
        [-0.7036, 1.6975, 0.0061],
        [0.0030, 0.0136, 0.9834],
    ]
)

M_HPE = np.array(
    [
        [0.38971, 0.68898, -0.07868],
        [-0.22981, 1.18340, 0.04641],
        [0.00000, 0.00000, 1.00000],
    ]
)

# F, c, N_c per surround category.
SURROUND_PARAMS = {
    "average": (1.0, 0.69, 1.0),
    "dim": (0.9, 0.59, 0.9),
    "dark": (0.8, 0.525, 0.8),
}

# Default white is the matrix image of sRGB white (Y = 100.00001, not the
# nominal 100), so that (255,255,255) lands on J' = 100 exactly.
_WHITE_XYZ = tuple(100.0 * M_SRGB_TO_XYZ @ np.ones(3))

DEFAULT_VC = ViewingConditions(
    white=_WHITE_XYZ,
    la=64.0 / (5.0 * np.pi),
    yb=20.0,
    surround="average",
)

# CAM02-UCS rescaling constants (the KL=1 uniform-space variant).
_UCS_C1 = 0.007
_UCS_C2 = 0.0228

CACHE_VERSION = 1
CACHE_MAGIC = b"PFGT"


def parse_hex(text: str) -> Srgb8:
    """Parse '#RRGGBB' or 'RRGGBB' into an (r, g, b) tuple."""
    s = text.strip().lstrip("#")
    if len(s) != 6:
        raise PaletteError(f"not a hex color: {text!r}")
    try:
        return (int(s[0:2], 16), int(s[2:4], 16), int(s[4:6], 16))
    except ValueError:
        raise PaletteError(f"not a hex color: {text!r}") from None


def format_hex(c: Srgb8) -> str:
    check_srgb8(c)
    return "#{:02x}{:02x}{:02x}".format(*c)


def check_srgb8(c) -> Srgb8:
    """Validate channel bounds; returns the color as a plain tuple."""
    r, g, b = c
    for v in (r, g, b):
        if not (isinstance(v, (int, np.integer)) and 0 <= v <= 255):
            raise PaletteError(f"sRGB channels must be ints in [0, 255], got {c!r}")
    return (int(r), int(g), int(b))


def pack_rgb(c: Srgb8) -> int:
    return (c[0] << 16) | (c[1] << 8) | c[2]


def unpack_rgb(packed):
    """Packed 24-bit value(s) to an (N, 3) uint8 array."""
    p = np.asarray(packed, dtype=np.uint32)
    return np.stack([(p >> 16) & 0xFF, (p >> 8) & 0xFF, p & 0xFF], axis=-1).astype(np.uint8)


def linearize(rgb):
    """sRGB EOTF on values already scaled to [0, 1]; works elementwise."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)


def delinearize(lin):
    """Inverse EOTF, linear [0, 1] back to gamma-encoded sRGB [0, 1]."""
    lin = np.asarray(lin, dtype=np.float64)
    return np.where(lin <= 0.0031308, lin * 12.92, 1.055 * lin ** (1.0 / 2.4) - 0.055)


def srgb8_to_linear(c: Srgb8):
    c = check_srgb8(c)
    return tuple(linearize(np.array(c, dtype=np.float64) / 255.0))


def linear_to_srgb8(lin) -> Srgb8:
    v = np.clip(np.rint(delinearize(np.clip(lin, 0.0, 1.0)) * 255.0), 0, 255)
    return tuple(int(x) for x in v)


class _CamParams(NamedTuple):
    m_full: np.ndarray  # linear RGB -> adapted HPE cone space, one 3x3
    m_xyz: np.ndarray  # XYZ -> adapted HPE cone space (for non-RGB inputs)
    f_l: float
    n: float
    z: float
    n_bb: float
    n_c: float
    c: float
    a_w: float


@functools.lru_cache(maxsize=8)
def _cam_params(vc: ViewingConditions) -> _CamParams:
    f, c, n_c = SURROUND_PARAMS[vc.surround]
    white = np.asarray(vc.white, dtype=np.float64)
    y_w = white[1]

    rgb_w = M_CAT02 @ white
    d = f * (1.0 - (1.0 / 3.6) * np.exp((-vc.la - 42.0) / 92.0))
    d = float(np.clip(d, 0.0, 1.0))
    gains = y_w * d / rgb_w + 1.0 - d

    k = 1.0 / (5.0 * vc.la + 1.0)
    f_l = 0.2 * k ** 4 * 5.0 * vc.la + 0.1 * (1.0 - k ** 4) ** 2 * (5.0 * vc.la) ** (1.0 / 3.0)

    n = vc.yb / y_w
    z = 1.48 + np.sqrt(n)
    n_bb = 0.725 * n ** -0.2

    m_hpe_cat = M_HPE @ np.linalg.inv(M_CAT02)
    m_xyz = m_hpe_cat @ np.diag(gains) @ M_CAT02
    m_full = m_xyz @ M_SRGB_TO_XYZ * 100.0

    cone_w = _adapt_cones(m_xyz @ white, f_l)
    a_w = (2.0 * cone_w[0] + cone_w[1] + cone_w[2] / 20.0 - 0.305) * n_bb

    return _CamParams(m_full, m_xyz, float(f_l), float(n), float(z), float(n_bb),
                      float(n_c), float(c), float(a_w))


def _adapt_cones(cones, f_l):
    x = np.asarray(cones, dtype=np.float64)
    p = (f_l * np.abs(x) / 100.0) ** 0.42
    return np.sign(x) * 400.0 * p / (27.13 + p) + 0.1


def _cam_forward(lin, vc: ViewingConditions):
    """Linear RGB (N, 3) to (J', a', b', C); the single CIECAM02 code path."""
    p = _cam_params(vc)
    cones = _adapt_cones(np.asarray(lin, dtype=np.float64) @ p.m_full.T, p.f_l)
    ra, ga, ba = cones[..., 0], cones[..., 1], cones[..., 2]

    a = ra - 12.0 * ga / 11.0 + ba / 11.0
    b = (ra + ga - 2.0 * ba) / 9.0
    h = np.arctan2(b, a)

    e_t = 0.25 * (np.cos(h + 2.0) + 3.8)
    a_ach = np.maximum((2.0 * ra + ga + ba / 20.0 - 0.305) * p.n_bb, 0.0)
    j = 100.0 * (a_ach / p.a_w) ** (p.c * p.z)

    t = (50000.0 / 13.0) * p.n_c * p.n_bb * e_t * np.hypot(a, b) / (ra + ga + 21.0 * ba / 20.0)
    big_c = t ** 0.9 * np.sqrt(j / 100.0) * (1.64 - 0.29 ** p.n) ** 0.73
    m = big_c * p.f_l ** 0.25

    jp = 1.7 * j / (1.0 + _UCS_C1 * j)
    mp = np.log1p(_UCS_C2 * m) / _UCS_C2
    return jp, mp * np.cos(h), mp * np.sin(h), big_c


def linear_to_ucs(lin, vc: ViewingConditions = DEFAULT_VC):
    """Linear RGB array (..., 3) to CAM02-UCS (..., 3)."""
    jp, ap, bp, _ = _cam_forward(lin, vc)
    return np.stack([jp, ap, bp], axis=-1)


def linear_to_cam_chroma(lin, vc: ViewingConditions = DEFAULT_VC):
    """CIECAM02 chroma C for linear RGB input, same shape minus the last axis."""
    return _cam_forward(lin, vc)[3]


def srgb8_to_ucs(c: Srgb8, vc: ViewingConditions = DEFAULT_VC) -> UcsCoord:
    lin = linearize(np.array(check_srgb8(c), dtype=np.float64) / 255.0)
    return UcsCoord(*(float(x) for x in linear_to_ucs(lin, vc)))


def srgb8_to_lab(c: Srgb8, vc: ViewingConditions = DEFAULT_VC) -> LabCoord:
    lin = linearize(np.array(check_srgb8(c), dtype=np.float64) / 255.0)
    return LabCoord(*(float(x) for x in linear_to_lab(lin, vc)))


def linear_to_lab(lin, vc: ViewingConditions = DEFAULT_VC):
    """Linear RGB (..., 3) to CIELAB (..., 3) under the vc white point."""
    xyz = np.asarray(lin, dtype=np.float64) @ (M_SRGB_TO_XYZ * 100.0).T
    ratio = xyz / np.asarray(vc.white, dtype=np.float64)
    delta = 6.0 / 29.0
    f = np.where(ratio > delta ** 3, np.cbrt(ratio), ratio / (3.0 * delta ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def delta_e(u1, u2) -> float:
    """Euclidean distance in CAM02-UCS."""
    d = np.asarray(u1, dtype=np.float64) - np.asarray(u2, dtype=np.float64)
    return float(np.sqrt(np.sum(d * d, axis=-1)))


def white_ucs(vc: ViewingConditions = DEFAULT_VC) -> UcsCoord:
    return srgb8_to_ucs((255, 255, 255), vc)


def _vc_hash(vc: ViewingConditions) -> int:
    parts = ["%.12g" % x for x in (*vc.white, vc.la, vc.yb)]
    parts.append(vc.surround)
    parts.append("%d" % CACHE_VERSION)
    digest = hashlib.blake2b("|".join(parts).encode(), digest_size=8).digest()
    return struct.unpack("<Q", digest)[0]


_CACHE_RECORD = np.dtype(
    [
        ("rgb", "<u4"),
        ("ucs", "<f4", (3,)),
        ("deutan", "<f4", (3,)),
        ("protan", "<f4", (3,)),
        ("tritan", "<f4", (3,)),
    ]
)

_CACHE_HEADER = struct.Struct("<4sIQddQ")


class GamutTable:
    """Per-color UCS coordinates (normal vision plus the three dichromacies at
    severity 100) for every 8-bit sRGB color whose J' falls in [j_min, j_max].

    Rows are ordered by packed 24-bit RGB. Arrays are float32; metric-grade
    math should convert colors directly instead of reading the table.
    """

    def __init__(self, rgb, ucs, deutan, protan, tritan, j_min, j_max, vc):
        self.rgb = rgb
        self.ucs = ucs
        self.deutan = deutan
        self.protan = protan
        self.tritan = tritan
        self.j_min = float(j_min)
        self.j_max = float(j_max)
        self.vc = vc
        self._inverse = None

    def __len__(self):
        return len(self.rgb)

    def colors(self):
        """All table colors as an (N, 3) uint8 array."""
        return unpack_rgb(self.rgb)

    def spaces(self):
        """The four coordinate arrays in fixed order."""
        return (self.ucs, self.deutan, self.protan, self.tritan)

    def index_of(self, c: Srgb8) -> int:
        if self._inverse is None:
            inv = np.full(1 << 24, -1, dtype=np.int32)
            inv[self.rgb] = np.arange(len(self.rgb), dtype=np.int32)
            self._inverse = inv
        idx = int(self._inverse[pack_rgb(check_srgb8(c))])
        if idx < 0:
            raise PaletteError(f"color {format_hex(c)} not in gamut table")
        return idx

    def __contains__(self, c) -> bool:
        try:
            self.index_of(c)
            return True
        except PaletteError:
            return False

    def save(self, path):
        rec = np.empty(len(self), dtype=_CACHE_RECORD)
        rec["rgb"] = self.rgb
        rec["ucs"] = self.ucs
        rec["deutan"] = self.deutan
        rec["protan"] = self.protan
        rec["tritan"] = self.tritan
        header = _CACHE_HEADER.pack(
            CACHE_MAGIC, CACHE_VERSION, _vc_hash(self.vc), self.j_min, self.j_max, len(self)
        )
        tmp = str(path) + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(header)
            rec.tofile(fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, vc: ViewingConditions = DEFAULT_VC):
        with open(path, "rb") as fh:
            raw = fh.read(_CACHE_HEADER.size)
            if len(raw) != _CACHE_HEADER.size:
                raise PaletteError(f"truncated gamut cache: {path}")
            magic, version, vch, j_min, j_max, count = _CACHE_HEADER.unpack(raw)
            if magic != CACHE_MAGIC or version != CACHE_VERSION:
                raise PaletteError(f"unrecognized gamut cache format: {path}")
            if vch != _vc_hash(vc):
                raise PaletteError(f"gamut cache was built for different viewing conditions: {path}")
            rec = np.fromfile(fh, dtype=_CACHE_RECORD, count=count)
        if len(rec) != count:
            raise PaletteError(f"truncated gamut cache: {path}")
        return cls(
            rec["rgb"].copy(), rec["ucs"].copy(), rec["deutan"].copy(),
            rec["protan"].copy(), rec["tritan"].copy(), j_min, j_max, vc,
        )


def build_gamut_table(j_min, j_max, vc: ViewingConditions = DEFAULT_VC,
                      chunk=1 << 22, progress=None) -> GamutTable:
    """Convert all 2^24 sRGB colors, keeping those with j_min <= J' <= j_max.

    Takes a couple of minutes for the full gamut; use the disk cache via
    load_or_build for anything interactive.
    """
    if not (0.0 <= j_min < j_max <= 100.0):
        raise PaletteError(f"bad J' range [{j_min}, {j_max}]")
    from palette_forge import cvd  # late import, cvd depends on this module

    sim_mats = [cvd.cvd_matrix(kind, 100).matrix for kind in cvd.KINDS]
    keep_rgb, keep = [], [[], [], [], []]
    for start in range(0, 1 << 24, chunk):
        packed = np.arange(start, min(start + chunk, 1 << 24), dtype=np.uint32)
        lin = linearize(unpack_rgb(packed).astype(np.float64) / 255.0)
        ucs = linear_to_ucs(lin, vc)
        mask = (ucs[:, 0] >= j_min) & (ucs[:, 0] <= j_max)
        keep_rgb.append(packed[mask])
        keep[0].append(ucs[mask].astype(np.float32))
        lin = lin[mask]
        for i, m in enumerate(sim_mats):
            keep[i + 1].append(linear_to_ucs(lin @ m.T, vc).astype(np.float32))
        if progress is not None:
            progress(min(start + chunk, 1 << 24), 1 << 24)
    arrays = [np.concatenate(parts) for parts in keep]
    return GamutTable(np.concatenate(keep_rgb), *arrays, j_min, j_max, vc)


def default_cache_dir() -> str:
    env = os.environ.get("PALETTE_FORGE_CACHE")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "palette-forge")


def load_or_build(j_min, j_max, vc: ViewingConditions = DEFAULT_VC,
                  cache_dir=None, progress=None) -> GamutTable:
    """Fetch the gamut table from the disk cache, building and caching on miss."""
    cache_dir = cache_dir or default_cache_dir()
    name = "gamut_v%d_%08x_%s_%s.bin" % (
        CACHE_VERSION, _vc_hash(vc) & 0xFFFFFFFF, ("%.4f" % j_min), ("%.4f" % j_max))
    path = os.path.join(cache_dir, name)
    if os.path.exists(path):
        try:
            table = GamutTable.load(path, vc)
            if table.j_min == float(j_min) and table.j_max == float(j_max):
                return table
        except PaletteError:
            pass  # stale or corrupt cache, rebuild below
    table = build_gamut_table(j_min, j_max, vc, progress=progress)
    os.makedirs(cache_dir, exist_ok=True)
    table.save(path)
    return table
