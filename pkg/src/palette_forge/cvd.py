"""Color vision deficiency simulation and the CVD-aware distance.

Simulation applies a severity-dependent 3x3 matrix in linear RGB (the
physiologically fitted matrices of Machado, Oliveira & Fernandes 2009).
The distance between two colors is the worst case over normal vision and
every requested (kind, severity) simulation, measured in CAM02-UCS.

Simulated linear RGB can leave the sRGB gamut; the CIECAM02 chain accepts
that directly (its adaptation is sign-symmetric), and distances computed on
the unclamped values are what reproduce the published reference numbers.
Clamping happens only when a simulated color must be rendered back to 8-bit.
"""

from __future__ import annotations

import functools
from typing import Iterable, NamedTuple

import numpy as np

from palette_forge.colorspace import (
    DEFAULT_VC,
    PaletteError,
    Srgb8,
    UcsCoord,
    ViewingConditions,
    check_srgb8,
    linear_to_srgb8,
    linear_to_ucs,
    linearize,
)

KINDS = ("deutan", "protan", "tritan")

FULL_SEVERITIES = tuple(range(1, 101))

# Severity-10k matrices for k = 1..10 (severity 0 is the identity).
# Rows are R', G', B' as mixtures of R, G, B in linear sRGB.
_PROTAN = np.array([
    [[0.856167, 0.182038, -0.038205],
     [0.029342, 0.955115, 0.015544],
     [-0.002880, -0.001563, 1.004443]],
    [[0.734766, 0.334872, -0.069637],
     [0.051840, 0.919198, 0.028963],
     [-0.004928, -0.004209, 1.009137]],
    [[0.630323, 0.465641, -0.095964],
     [0.069181, 0.890046, 0.040773],
     [-0.006308, -0.007724, 1.014032]],
    [[0.539009, 0.579343, -0.118352],
     [0.082546, 0.866121, 0.051332],
     [-0.007136, -0.011959, 1.019095]],
    [[0.458064, 0.679578, -0.137642],
     [0.092785, 0.846313, 0.060902],
     [-0.007494, -0.016807, 1.024301]],
    [[0.385450, 0.769005, -0.154455],
     [0.100526, 0.829802, 0.069673],
     [-0.007442, -0.022190, 1.029632]],
    [[0.319627, 0.849633, -0.169261],
     [0.106241, 0.815969, 0.077790],
     [-0.007025, -0.028051, 1.035076]],
    [[0.259411, 0.923008, -0.182420],
     [0.110296, 0.804340, 0.085364],
     [-0.006276, -0.034346, 1.040622]],
    [[0.203876, 0.990338, -0.194214],
     [0.112975, 0.794542, 0.092483],
     [-0.005222, -0.041043, 1.046265]],
    [[0.152286, 1.052583, -0.204868],
     [0.114503, 0.786281, 0.099216],
     [-0.003882, -0.048116, 1.051998]],
])

_DEUTAN = np.array([
    [[0.866435, 0.177704, -0.044139],
     [0.049567, 0.939063, 0.011370],
     [-0.003453, 0.007233, 0.996220]],
    [[0.760729, 0.319078, -0.079807],
     [0.090568, 0.889315, 0.020117],
     [-0.006027, 0.013325, 0.992702]],
    [[0.675425, 0.433850, -0.109275],
     [0.125303, 0.847755, 0.026942],
     [-0.007950, 0.018572, 0.989378]],
    [[0.605511, 0.528560, -0.134071],
     [0.155318, 0.812366, 0.032316],
     [-0.009376, 0.023176, 0.986200]],
    [[0.547494, 0.607765, -0.155259],
     [0.181692, 0.781742, 0.036566],
     [-0.010410, 0.027275, 0.983136]],
    [[0.498864, 0.674741, -0.173604],
     [0.205199, 0.754872, 0.039929],
     [-0.011131, 0.030969, 0.980162]],
    [[0.457771, 0.731899, -0.189670],
     [0.226409, 0.731012, 0.042579],
     [-0.011595, 0.034333, 0.977261]],
    [[0.422823, 0.781057, -0.203881],
     [0.245752, 0.709602, 0.044646],
     [-0.011843, 0.037423, 0.974421]],
    [[0.392952, 0.823610, -0.216562],
     [0.263559, 0.690210, 0.046232],
     [-0.011910, 0.040281, 0.971630]],
    [[0.367322, 0.860646, -0.227968],
     [0.280085, 0.672501, 0.047413],
     [-0.011820, 0.042940, 0.968881]],
])

_TRITAN = np.array([
    [[0.926670, 0.092514, -0.019184],
     [0.021191, 0.964503, 0.014306],
     [0.008437, 0.054813, 0.936750]],
    [[0.895720, 0.133330, -0.029050],
     [0.029997, 0.945400, 0.024603],
     [0.013027, 0.104707, 0.882266]],
    [[0.905871, 0.127791, -0.033662],
     [0.026856, 0.941251, 0.031893],
     [0.013410, 0.148296, 0.838294]],
    [[0.948035, 0.089490, -0.037526],
     [0.014364, 0.946792, 0.038844],
     [0.010853, 0.193991, 0.795156]],
    [[1.017277, 0.027029, -0.044306],
     [-0.006113, 0.958479, 0.047634],
     [0.006379, 0.248708, 0.744913]],
    [[1.104996, -0.046633, -0.058363],
     [-0.032137, 0.971635, 0.060503],
     [0.001336, 0.317922, 0.680742]],
    [[1.193214, -0.109812, -0.083402],
     [-0.058496, 0.979410, 0.079086],
     [-0.002346, 0.403492, 0.598854]],
    [[1.257728, -0.139648, -0.118081],
     [-0.078003, 0.975409, 0.102594],
     [-0.003316, 0.501214, 0.502102]],
    [[1.278864, -0.125333, -0.153531],
     [-0.084748, 0.957674, 0.127074],
     [-0.000989, 0.601151, 0.399838]],
    [[1.255528, -0.076749, -0.178779],
     [-0.078411, 0.930809, 0.147602],
     [0.004733, 0.691367, 0.303900]],
])

_TABLES = {"protan": _PROTAN, "deutan": _DEUTAN, "tritan": _TRITAN}


class CvdMatrix(NamedTuple):
    kind: str
    severity: int
    matrix: np.ndarray


def cvd_matrix(kind: str, severity: int) -> CvdMatrix:
    """Simulation matrix for a deficiency kind and severity in [0, 100].

    Severities between the published 10-step anchors interpolate entrywise
    linearly; severity 0 is the exact identity.
    """
    if kind not in _TABLES:
        raise PaletteError(f"unknown deficiency kind {kind!r}, expected one of {KINDS}")
    severity = int(severity)
    if not 0 <= severity <= 100:
        raise PaletteError(f"severity must be in [0, 100], got {severity}")
    if severity == 0:
        return CvdMatrix(kind, 0, np.eye(3))
    table = _TABLES[kind]
    hi = -(-severity // 10)  # ceil division
    lo = hi - 1
    frac = severity / 10.0 - lo
    low = np.eye(3) if lo == 0 else table[lo - 1]
    mat = low * (1.0 - frac) + table[hi - 1] * frac
    return CvdMatrix(kind, severity, mat)


def simulate_linear(lin, kind: str, severity: int):
    """Vectorized simulation on linear RGB (..., 3); output may leave [0, 1]."""
    mat = cvd_matrix(kind, severity).matrix
    return np.asarray(lin, dtype=np.float64) @ mat.T


def simulate(c: Srgb8, kind: str, severity: int,
             vc: ViewingConditions = DEFAULT_VC) -> UcsCoord:
    """UCS coordinates of one color as seen with the given deficiency."""
    lin = linearize(np.array(check_srgb8(c), dtype=np.float64) / 255.0)
    return UcsCoord(*(float(x) for x in linear_to_ucs(simulate_linear(lin, kind, severity), vc)))


def simulate_srgb8(c: Srgb8, kind: str, severity: int) -> Srgb8:
    """Displayable 8-bit rendering of a simulation (clamps into gamut)."""
    lin = linearize(np.array(check_srgb8(c), dtype=np.float64) / 255.0)
    return linear_to_srgb8(np.clip(simulate_linear(lin, kind, severity), 0.0, 1.0))


def canonical_severities(severities: Iterable[int]):
    sev = sorted({int(s) for s in severities})
    if not sev:
        raise PaletteError("severity set must be non-empty")
    if sev[0] < 1 or sev[-1] > 100:
        raise PaletteError(f"severities must be in [1, 100], got {sev[0]}..{sev[-1]}")
    return tuple(sev)


@functools.lru_cache(maxsize=16)
def _view_matrices(severities):
    """Stack of simulation matrices, identity first: (1 + 3*len(sev), 3, 3)."""
    mats = [np.eye(3)]
    for kind in KINDS:
        for sev in severities:
            mats.append(cvd_matrix(kind, sev).matrix)
    return np.stack(mats)


def view_signatures(colors, severities=FULL_SEVERITIES, vc: ViewingConditions = DEFAULT_VC):
    """UCS coordinates of each color under each view: (n_colors, n_views, 3).

    View 0 is normal vision, then deutan, protan, tritan at each severity.
    """
    sev = canonical_severities(severities)
    lin = linearize(np.array([check_srgb8(c) for c in colors], dtype=np.float64) / 255.0)
    sims = np.einsum("vij,nj->nvi", _view_matrices(sev), lin)
    return linear_to_ucs(sims, vc)


def delta_e_cvd(c1: Srgb8, c2: Srgb8, severities: Iterable[int] = FULL_SEVERITIES,
                vc: ViewingConditions = DEFAULT_VC) -> float:
    """Worst-case CAM02-UCS distance over normal vision and all simulations."""
    sig = view_signatures([c1, c2], severities, vc)
    d = sig[0] - sig[1]
    return float(np.sqrt(np.sum(d * d, axis=-1)).min())


def pairwise_cvd_matrix(colors, severities: Iterable[int] = FULL_SEVERITIES,
                        vc: ViewingConditions = DEFAULT_VC):
    """All pairwise worst-case distances as a symmetric (n, n) array."""
    sig = view_signatures(list(colors), severities, vc)
    diff = sig[:, None, :, :] - sig[None, :, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1)).min(axis=-1)


def min_pairwise_cvd(colors, severities: Iterable[int] = FULL_SEVERITIES,
                     vc: ViewingConditions = DEFAULT_VC) -> float:
    """Smallest worst-case distance over all unordered pairs in the set."""
    colors = list(colors)
    if len(colors) < 2:
        raise PaletteError("need at least two colors")
    dists = pairwise_cvd_matrix(colors, severities, vc)
    iu = np.triu_indices(len(colors), k=1)
    return float(dists[iu].min())
