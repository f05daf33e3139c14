"""Randomized generation of accessible color sets.

The sampler walks the precomputed gamut table: pick a uniform random start,
repeatedly filter the surviving candidates against every chosen color
(severity-100 dichromacy distance, lightness separation, white floors),
and draw the next color by rejection sampling toward uniform density over
the CAM02-UCS volume of the survivors. Finished sets are re-checked at all
integer severities 1..100 and discarded wholesale on any violation.

Candidate filtering runs on the float32 table through a numba kernel when
numba is importable, with a numpy fallback written against the exact same
float32 expression shapes so both paths make identical keep/drop decisions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from palette_forge import cvd
from palette_forge.colorspace import (
    DEFAULT_VC,
    GamutTable,
    PaletteError,
    Srgb8,
    check_srgb8,
    format_hex,
    unpack_rgb,
)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without the extra
    HAVE_NUMBA = False

WHITE = (255, 255, 255)

SNAP_EPS = 1.0
PROPOSAL_CAP = 100_000
PROPOSAL_BATCH = 1024


@dataclass(frozen=True)
class ConstraintProfile:
    set_size: int
    min_de_cvd: float
    min_dj: float
    j_range: tuple
    white_min_distance: float

    def __post_init__(self):
        lo, hi = self.j_range
        if self.set_size < 1:
            raise PaletteError(f"set_size must be >= 1, got {self.set_size}")
        if not self.min_de_cvd > 0:
            raise PaletteError(f"min_de_cvd must be positive, got {self.min_de_cvd}")
        if self.min_dj < 0:
            raise PaletteError(f"min_dj must be >= 0, got {self.min_dj}")
        if not (0.0 <= lo < hi <= 100.0):
            raise PaletteError(f"j_range must be an ordered pair within [0, 100], got {self.j_range}")
        if self.white_min_distance < 0:
            raise PaletteError(f"white_min_distance must be >= 0, got {self.white_min_distance}")


_PRESETS = {
    6: ConstraintProfile(6, 20.0, 5.0, (40.0, 80.0), 20.0),
    8: ConstraintProfile(8, 18.0, 4.2, (40.0, 82.0), 18.0),
    10: ConstraintProfile(10, 16.0, 3.6, (40.0, 84.0), 16.0),
}


def preset_profile(size: int) -> ConstraintProfile:
    """The published constraint sets for 6, 8, and 10 colors."""
    try:
        return _PRESETS[size]
    except KeyError:
        raise PaletteError(f"no preset for size {size}; presets exist for 6, 8, 10") from None


class PaletteSet:
    """An unordered accessible color set plus how it was produced."""

    def __init__(self, colors, profile: ConstraintProfile, seed: int):
        self.colors = tuple(check_srgb8(c) for c in colors)
        if len(set(self.colors)) != len(self.colors):
            raise PaletteError("palette colors must be distinct")
        self.profile = profile
        self.seed = int(seed)

    def __len__(self):
        return len(self.colors)

    def __iter__(self):
        return iter(self.colors)

    def __eq__(self, other):
        return (isinstance(other, PaletteSet) and self.colors == other.colors
                and self.profile == other.profile and self.seed == other.seed)

    def __repr__(self):
        return "PaletteSet([%s], seed=%d)" % (
            ", ".join(format_hex(c) for c in self.colors), self.seed)

    def hex_colors(self):
        return [format_hex(c) for c in self.colors]


@dataclass(frozen=True)
class GenerationFailure:
    reason: str  # "exhausted" | "severity_check"
    partial: tuple  # colors chosen before the failure
    seed: int
    profile: ConstraintProfile


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    value: Optional[float]
    subject: Optional[tuple]  # offending pair or color


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def validate_set(colors, profile: ConstraintProfile, vc=DEFAULT_VC,
                 severities=cvd.FULL_SEVERITIES) -> ValidationReport:
    """Check every constraint the profile states, in float64, reporting the
    worst offender per constraint."""
    colors = [check_srgb8(c) for c in colors]
    checks = []

    sig = cvd.view_signatures(list(colors) + [WHITE], severities, vc) if colors else None

    if len(colors) >= 2:
        diff = sig[:-1, None, :, :] - sig[None, :-1, :, :]
        dmat = np.sqrt(np.sum(diff * diff, axis=-1)).min(axis=-1)
        iu = np.triu_indices(len(colors), k=1)
        flat = dmat[iu]
        k = int(np.argmin(flat))
        pair = (colors[iu[0][k]], colors[iu[1][k]])
        val = float(flat[k])
        checks.append(ConstraintCheck("pairwise_de_cvd", val >= profile.min_de_cvd, val, pair))

        j = sig[:-1, 0, 0]
        djmat = np.abs(j[:, None] - j[None, :])[iu]
        k = int(np.argmin(djmat))
        pair = (colors[iu[0][k]], colors[iu[1][k]])
        val = float(djmat[k])
        checks.append(ConstraintCheck("pairwise_dj", val >= profile.min_dj, val, pair))
    else:
        checks.append(ConstraintCheck("pairwise_de_cvd", True, None, None))
        checks.append(ConstraintCheck("pairwise_dj", True, None, None))

    if colors:
        j = sig[:-1, 0, 0]
        lo, hi = profile.j_range
        bad = (j < lo) | (j > hi)
        if bad.any():
            k = int(np.argmax(bad))
            checks.append(ConstraintCheck("j_range", False, float(j[k]), colors[k]))
        else:
            checks.append(ConstraintCheck("j_range", True, None, None))

        dw = sig[:-1] - sig[-1][None, :, :]
        dw = np.sqrt(np.sum(dw * dw, axis=-1)).min(axis=-1)
        k = int(np.argmin(dw))
        val = float(dw[k])
        checks.append(ConstraintCheck(
            "white_de_cvd", val >= profile.white_min_distance, val, colors[k]))

        djw = np.abs(j - sig[-1, 0, 0])
        k = int(np.argmin(djw))
        val = float(djw[k])
        checks.append(ConstraintCheck(
            "white_dj", val >= profile.white_min_distance, val, colors[k]))
    else:
        checks.append(ConstraintCheck("j_range", True, None, None))
        checks.append(ConstraintCheck("white_de_cvd", True, None, None))
        checks.append(ConstraintCheck("white_dj", True, None, None))

    return ValidationReport(tuple(checks))


# -- candidate filtering ------------------------------------------------------
#
# Everything below works on positions into the profile index's Morton-sorted
# candidate pool. Per-row comparisons run in float32 so the numba and numpy
# paths agree bit for bit; the final full-severity validation is float64.
#
# The numba filter prunes at block granularity first: a block whose
# precomputed view-space bounding boxes sit entirely beyond the distance
# threshold (and clear of the lightness slab) survives wholesale, one
# entirely inside a kill region dies wholesale. Only boundary blocks pay a
# per-row scan. The wholesale tests run in float64 with a safety margin a
# few orders of magnitude above float32 rounding, so they can never disagree
# with the per-row float32 arithmetic on which rows live or die.

_MARGIN_DE2 = 1.0 / 128.0
_MARGIN_J = 1.0 / 1024.0

if HAVE_NUMBA:

    @numba.njit(inline="always")
    def _box_vs_cref(bmin, bmax, row, cref, thr2d, mdj):
        """Wholesale verdict for one bounding box against cref.

        Returns (kill, far): kill means every row inside the box fails,
        far means every row inside it passes. Neither set means the box
        straddles a boundary and its rows need individual checks.
        """
        kill = False
        far = True
        for v in range(4):
            c0 = 3 * v
            dmin2 = 0.0
            dmax2 = 0.0
            for d in range(3):
                lo = np.float64(bmin[row, c0 + d])
                hi = np.float64(bmax[row, c0 + d])
                c = np.float64(cref[c0 + d])
                dmn = lo - c
                if c - hi > dmn:
                    dmn = c - hi
                if dmn < 0.0:
                    dmn = 0.0
                dmx = c - lo
                if hi - c > dmx:
                    dmx = hi - c
                dmin2 += dmn * dmn
                dmax2 += dmx * dmx
            if dmax2 + _MARGIN_DE2 <= thr2d:
                return True, False
            if dmin2 < thr2d + _MARGIN_DE2:
                far = False
        if mdj > 0.0:
            jlo = np.float64(bmin[row, 0])
            jhi = np.float64(bmax[row, 0])
            cj = np.float64(cref[0])
            if jlo >= cj - mdj + _MARGIN_J and jhi <= cj + mdj - _MARGIN_J:
                return True, False
            if not (jhi <= cj - mdj - _MARGIN_J or jlo >= cj + mdj + _MARGIN_J):
                far = False
        return kill, far

    @numba.njit(inline="always")
    def _scan_block_nb(comb_t, k, alive, scratch, cref, thr_de2, min_dj):
        """Re-check every lane of one block. Returns (count, bbox).

        First pass is straight-line arithmetic into scratch so it can
        vectorize; the second touches only surviving lanes.
        """
        c0 = cref[0]
        c1 = cref[1]
        c2 = cref[2]
        c3 = cref[3]
        c4 = cref[4]
        c5 = cref[5]
        c6 = cref[6]
        c7 = cref[7]
        c8 = cref[8]
        c9 = cref[9]
        c10 = cref[10]
        c11 = cref[11]
        for lane in range(comb_t.shape[2]):
            dx = comb_t[k, 0, lane] - c0
            dy = comb_t[k, 1, lane] - c1
            dz = comb_t[k, 2, lane] - c2
            dj = abs(dx)
            d2 = dx * dx
            d2 += dy * dy
            d2 += dz * dz
            ok = (dj >= min_dj) & (d2 >= thr_de2)
            dx = comb_t[k, 3, lane] - c3
            dy = comb_t[k, 4, lane] - c4
            dz = comb_t[k, 5, lane] - c5
            d2 = dx * dx
            d2 += dy * dy
            d2 += dz * dz
            ok = ok & (d2 >= thr_de2)
            dx = comb_t[k, 6, lane] - c6
            dy = comb_t[k, 7, lane] - c7
            dz = comb_t[k, 8, lane] - c8
            d2 = dx * dx
            d2 += dy * dy
            d2 += dz * dz
            ok = ok & (d2 >= thr_de2)
            dx = comb_t[k, 9, lane] - c9
            dy = comb_t[k, 10, lane] - c10
            dz = comb_t[k, 11, lane] - c11
            d2 = dx * dx
            d2 += dy * dy
            d2 += dz * dz
            scratch[lane] = ok & (d2 >= thr_de2)
        inf = np.float32(np.inf)
        xlo = ylo = zlo = inf
        xhi = yhi = zhi = -inf
        m = 0
        o = k * comb_t.shape[2]
        for lane in range(comb_t.shape[2]):
            keep = alive[o + lane] & scratch[lane]
            alive[o + lane] = keep
            if keep:
                m += 1
                x = comb_t[k, 0, lane]
                y = comb_t[k, 1, lane]
                z = comb_t[k, 2, lane]
                if x < xlo:
                    xlo = x
                if x > xhi:
                    xhi = x
                if y < ylo:
                    ylo = y
                if y > yhi:
                    yhi = y
                if z < zlo:
                    zlo = z
                if z > zhi:
                    zhi = z
        return m, xlo, xhi, ylo, yhi, zlo, zhi

    @numba.njit(cache=True, nogil=True)
    def _filter_blocks_nb(comb_t, bb_min, bb_max, sb_min, sb_max,
                          state, counts, cur_min, cur_max,
                          sstate, scount, scur_min, scur_max,
                          alive, cref, thr_de2, min_dj, sshift):
        """One filter pass against cref. Mutates the per-attempt pool state.

        Two pruning levels above the rows: superblocks (contiguous runs of
        blocks) and blocks. state/sstate: 0 dead, nonzero live; counts and
        the cur bboxes track each unit's live rows. Dead units keep stale
        alive[] flags, so every consumer must test state before alive.
        Returns the live total and the survivors' UCS bbox.
        """
        thr2d = np.float64(thr_de2)
        mdj = np.float64(min_dj)
        inf = np.float32(np.inf)
        gxlo = gylo = gzlo = inf
        gxhi = gyhi = gzhi = -inf
        tot = 0
        nblocks = state.shape[0]
        for g in range(sstate.shape[0]):
            if sstate[g] == 0:
                continue
            skill, sfar = _box_vs_cref(sb_min, sb_max, g, cref, thr2d, mdj)
            ks = g << sshift
            ke = min(nblocks, ks + (1 << sshift))
            if skill:
                sstate[g] = 0
                scount[g] = 0
                for k in range(ks, ke):
                    state[k] = 0
                    counts[k] = 0
                continue
            if sfar:
                tot += scount[g]
                if scur_min[g, 0] < gxlo:
                    gxlo = scur_min[g, 0]
                if scur_max[g, 0] > gxhi:
                    gxhi = scur_max[g, 0]
                if scur_min[g, 1] < gylo:
                    gylo = scur_min[g, 1]
                if scur_max[g, 1] > gyhi:
                    gyhi = scur_max[g, 1]
                if scur_min[g, 2] < gzlo:
                    gzlo = scur_min[g, 2]
                if scur_max[g, 2] > gzhi:
                    gzhi = scur_max[g, 2]
                continue
            sc = 0
            sxlo = sylo = szlo = inf
            sxhi = syhi = szhi = -inf
            for k in range(ks, ke):
                if state[k] == 0:
                    continue
                kill, far = _box_vs_cref(bb_min, bb_max, k, cref, thr2d, mdj)
                if kill:
                    state[k] = 0
                    counts[k] = 0
                    continue
                if not far:
                    m, xlo, xhi, ylo, yhi, zlo, zhi = _scan_block_nb(
                        comb_t, k, alive, cref, thr_de2, min_dj)
                    counts[k] = m
                    if m == 0:
                        state[k] = 0
                        continue
                    state[k] = 1
                    cur_min[k, 0] = xlo
                    cur_min[k, 1] = ylo
                    cur_min[k, 2] = zlo
                    cur_max[k, 0] = xhi
                    cur_max[k, 1] = yhi
                    cur_max[k, 2] = zhi
                sc += counts[k]
                if cur_min[k, 0] < sxlo:
                    sxlo = cur_min[k, 0]
                if cur_max[k, 0] > sxhi:
                    sxhi = cur_max[k, 0]
                if cur_min[k, 1] < sylo:
                    sylo = cur_min[k, 1]
                if cur_max[k, 1] > syhi:
                    syhi = cur_max[k, 1]
                if cur_min[k, 2] < szlo:
                    szlo = cur_min[k, 2]
                if cur_max[k, 2] > szhi:
                    szhi = cur_max[k, 2]
            scount[g] = sc
            if sc == 0:
                sstate[g] = 0
                continue
            sstate[g] = 1
            scur_min[g, 0] = sxlo
            scur_min[g, 1] = sylo
            scur_min[g, 2] = szlo
            scur_max[g, 0] = sxhi
            scur_max[g, 1] = syhi
            scur_max[g, 2] = szhi
            tot += sc
            if sxlo < gxlo:
                gxlo = sxlo
            if sxhi > gxhi:
                gxhi = sxhi
            if sylo < gylo:
                gylo = sylo
            if syhi > gyhi:
                gyhi = syhi
            if szlo < gzlo:
                gzlo = szlo
            if szhi > gzhi:
                gzhi = szhi
        return tot, gxlo, gxhi, gylo, gyhi, gzlo, gzhi

    @numba.njit(cache=True, nogil=True)
    def _snap_nb(props, comb_t, cell_lo, cell_hi, state, shift, alive,
                 ox, oy, oz, nx, ny, nz, eps2):
        nynz = ny * nz
        lanemask = (1 << shift) - 1
        for p in range(props.shape[0]):
            px, py, pz = props[p, 0], props[p, 1], props[p, 2]
            cx = int(np.floor(px - ox))
            cy = int(np.floor(py - oy))
            cz = int(np.floor(pz - oz))
            best = -1
            bestd = np.inf
            for dx in range(-1, 2):
                ix = cx + dx
                if ix < 0 or ix >= nx:
                    continue
                for dy in range(-1, 2):
                    iy = cy + dy
                    if iy < 0 or iy >= ny:
                        continue
                    for dz in range(-1, 2):
                        iz = cz + dz
                        if iz < 0 or iz >= nz:
                            continue
                        cell = ix * nynz + iy * nz + iz
                        for i in range(cell_lo[cell], cell_hi[cell]):
                            blk = i >> shift
                            if state[blk] == 0 or not alive[i]:
                                continue
                            lane = i & lanemask
                            ex = px - comb_t[blk, 0, lane]
                            ey = py - comb_t[blk, 1, lane]
                            ez = pz - comb_t[blk, 2, lane]
                            d2 = ex * ex + ey * ey + ez * ez
                            if d2 < bestd:
                                bestd = d2
                                best = i
            if best >= 0 and bestd <= eps2:
                return best
        return -1

    @numba.njit(cache=True, nogil=True)
    def _pick_nth_nb(state, counts, block_start, alive, r):
        """Position of the r-th live row in block order (the fallback pick)."""
        acc = 0
        for k in range(state.shape[0]):
            if state[k] == 0:
                continue
            c = counts[k]
            if r < acc + c:
                off = r - acc
                if state[k] == 2:
                    return block_start[k] + off
                seen = 0
                for i in range(block_start[k], block_start[k + 1]):
                    if alive[i]:
                        if seen == off:
                            return i
                        seen += 1
            acc += c
        return -1


def _filter_alive_np(comb_t, pos, cref, thr_de2, min_dj, alive):
    """Flat reference filter: same float32 arithmetic, no block shortcuts."""
    v = comb_t[pos >> _BLOCK_SHIFT, :, pos & (_BLOCK_ROWS - 1)]
    keep = np.abs(v[:, 0] - cref[0]) >= min_dj
    for c in (0, 3, 6, 9):
        dx = v[:, c] - cref[c]
        dy = v[:, c + 1] - cref[c + 1]
        dz = v[:, c + 2] - cref[c + 2]
        d2 = dx * dx
        d2 += dy * dy
        d2 += dz * dz
        keep &= d2 >= thr_de2
    alive[pos[~keep]] = False
    out = pos[keep]
    if out.size:
        u = v[keep, :3]
        lo = u.min(axis=0)
        hi = u.max(axis=0)
        return out, lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]
    f = np.float32(np.inf)
    return out, f, -f, f, -f, f, -f


def _snap_np(props, comb_t, cell_lo, cell_hi, alive, ox, oy, oz, nx, ny, nz, eps2):
    nynz = ny * nz
    for p in range(props.shape[0]):
        px, py, pz = props[p]
        cx, cy, cz = int(np.floor(px - ox)), int(np.floor(py - oy)), int(np.floor(pz - oz))
        cand = []
        for dx in (-1, 0, 1):
            ix = cx + dx
            if not 0 <= ix < nx:
                continue
            for dy in (-1, 0, 1):
                iy = cy + dy
                if not 0 <= iy < ny:
                    continue
                for dz in (-1, 0, 1):
                    iz = cz + dz
                    if not 0 <= iz < nz:
                        continue
                    cell = ix * nynz + iy * nz + iz
                    if cell_hi[cell] > cell_lo[cell]:
                        cand.append(np.arange(cell_lo[cell], cell_hi[cell]))
        if not cand:
            continue
        t = np.concatenate(cand)
        t = t[alive[t]]
        if t.size == 0:
            continue
        d = comb_t[t >> _BLOCK_SHIFT, :3, t & (_BLOCK_ROWS - 1)].astype(np.float64)
        d2 = (px - d[:, 0]) ** 2 + (py - d[:, 1]) ** 2 + (pz - d[:, 2]) ** 2
        k = int(np.argmin(d2))
        if d2[k] <= eps2:
            return int(t[k])
    return -1


_BLOCK_SHIFT = 7
_BLOCK_ROWS = 1 << _BLOCK_SHIFT
_SUPER_SHIFT = 5  # blocks per superblock, as a shift


def _spread_bits_lut():
    bits = (np.arange(256)[:, None] >> np.arange(8)) & 1
    return (bits.astype(np.uint32) << (3 * np.arange(8)).astype(np.uint32)).sum(
        axis=1, dtype=np.uint32)


_MORTON = _spread_bits_lut()


class _ProfileIndex:
    """Per-(table, j_range, white floor) candidate pool, spatially ordered.

    The pool is sorted along a Morton curve over unit UCS cells so that any
    run of _BLOCK_ROWS consecutive rows is spatially compact; comb holds all
    four view coordinates of each row, gathered into that order, and
    bb_min/bb_max the per-block bounding boxes in the four view spaces.
    Rows of one cell are contiguous, so cell_lo/cell_hi double as the snap
    lookup grid. Everything here is immutable and shared across attempts.
    """

    def __init__(self, table: GamutTable, j_range, white_min, vc):
        lo, hi = j_range
        j = table.ucs[:, 0]
        mask = (j >= np.float32(lo)) & (j <= np.float32(hi))

        wsig = cvd.view_signatures([WHITE], (100,), vc)[0].astype(np.float32)
        wfloor = np.float32(white_min)
        for arr, row in ((table.ucs, wsig[0]), (table.deutan, wsig[1]),
                         (table.protan, wsig[2]), (table.tritan, wsig[3])):
            dx = arr[:, 0] - row[0]
            dy = arr[:, 1] - row[1]
            dz = arr[:, 2] - row[2]
            d2 = dx * dx
            d2 += dy * dy
            d2 += dz * dz
            mask &= d2 >= wfloor * wfloor
        mask &= np.abs(j - wsig[0, 0]) >= wfloor

        base_idx = np.nonzero(mask)[0].astype(np.int32)
        del mask
        if base_idx.size == 0:
            raise PaletteError("no gamut colors satisfy the profile's range and white floor")

        u = table.ucs[base_idx]
        self.origin = np.floor(u.min(axis=0).astype(np.float64))
        spans = np.floor(u.max(axis=0).astype(np.float64) - self.origin).astype(np.int64) + 1
        self.dims = tuple(int(x) for x in spans)
        nx, ny, nz = self.dims
        cx = np.floor(u[:, 0].astype(np.float64) - self.origin[0]).astype(np.int64)
        cy = np.floor(u[:, 1].astype(np.float64) - self.origin[1]).astype(np.int64)
        cz = np.floor(u[:, 2].astype(np.float64) - self.origin[2]).astype(np.int64)
        del u
        cell = (cx * ny + cy) * nz + cz
        if max(self.dims) <= 256:
            key = ((_MORTON[cx] << 2) | (_MORTON[cy] << 1) | _MORTON[cz]).astype(np.int64)
        else:
            key = cell
        order = np.argsort(key, kind="stable")
        del key

        n = base_idx.size
        self.n = n
        items = base_idx[order]
        del base_idx
        comb = np.empty((n, 12), np.float32)
        comb[:, 0:3] = table.ucs[items]
        comb[:, 3:6] = table.deutan[items]
        comb[:, 6:9] = table.protan[items]
        comb[:, 9:12] = table.tritan[items]

        cell = cell[order]
        runs = np.flatnonzero(np.r_[True, cell[1:] != cell[:-1]])
        ncells = nx * ny * nz
        cell_lo = np.zeros(ncells, np.int32)
        cell_hi = np.zeros(ncells, np.int32)
        cell_lo[cell[runs]] = runs
        cell_hi[cell[runs]] = np.r_[runs[1:], n]
        del cell, runs

        block_start = np.append(np.arange(0, n, _BLOCK_ROWS, dtype=np.int64), n).astype(np.int32)
        self.block_sizes = np.diff(block_start).astype(np.int32)
        self.bb_min = np.minimum.reduceat(comb, block_start[:-1], axis=0)
        self.bb_max = np.maximum.reduceat(comb, block_start[:-1], axis=0)

        nblocks = self.block_sizes.shape[0]
        sb_at = np.arange(0, nblocks, 1 << _SUPER_SHIFT)
        self.sb_min = np.minimum.reduceat(self.bb_min, sb_at, axis=0)
        self.sb_max = np.maximum.reduceat(self.bb_max, sb_at, axis=0)
        self.super_sizes = np.add.reduceat(self.block_sizes, sb_at).astype(np.int32)

        # Lay each block out column-major (coordinate, then lane) so the
        # filter's per-row arithmetic runs as straight-line SIMD over lanes.
        # Lanes past n in the last block are padding; they start dead.
        comb_t = np.zeros((nblocks, 12, _BLOCK_ROWS), np.float32)
        pad = nblocks * _BLOCK_ROWS - n
        if pad:
            comb = np.concatenate([comb, np.zeros((pad, 12), np.float32)])
        comb_t[:] = comb.reshape(nblocks, _BLOCK_ROWS, 12).transpose(0, 2, 1)
        del comb

        for arr in (items, comb_t, cell_lo, cell_hi, block_start,
                    self.block_sizes, self.bb_min, self.bb_max,
                    self.sb_min, self.sb_max, self.super_sizes):
            arr.setflags(write=False)
        self.items = items
        self.comb_t = comb_t
        self.cell_lo = cell_lo
        self.cell_hi = cell_hi
        self.block_start = block_start

    def row12(self, pos):
        """All twelve view coordinates of one pool row, as a flat float32 copy."""
        return self.comb_t[pos >> _BLOCK_SHIFT, :, pos & (_BLOCK_ROWS - 1)].copy()


def _profile_index(table: GamutTable, profile: ConstraintProfile, vc) -> _ProfileIndex:
    key = (profile.j_range, profile.white_min_distance, vc)
    cache = getattr(table, "_gen_indexes", None)
    if cache is None:
        cache = {}
        table._gen_indexes = cache
    if key in cache:
        cache[key] = cache.pop(key)  # refresh LRU position
    else:
        cache[key] = _ProfileIndex(table, profile.j_range, profile.white_min_distance, vc)
        while len(cache) > 2:  # each pool costs ~50 bytes/row; keep two at most
            cache.pop(next(iter(cache)))
    return cache[key]


def generate_set(profile: ConstraintProfile, seed: int, table: GamutTable,
                 vc=DEFAULT_VC, use_numba: Optional[bool] = None):
    """One generation attempt. Returns a PaletteSet or a GenerationFailure."""
    lo, hi = profile.j_range
    if table.j_min > lo or table.j_max < hi:
        raise PaletteError(
            "gamut table J' range [%g, %g] does not cover profile range [%g, %g]"
            % (table.j_min, table.j_max, lo, hi))
    if use_numba is None:
        use_numba = HAVE_NUMBA
    if use_numba and not HAVE_NUMBA:
        raise PaletteError("numba requested but not installed")

    pidx = _profile_index(table, profile, vc)
    rng = np.random.default_rng(int(seed))

    thr = np.float32(profile.min_de_cvd)
    thr_de2 = thr * thr
    min_dj = np.float32(profile.min_dj)
    comb_t = pidx.comb_t
    ox, oy, oz = pidx.origin
    nx, ny, nz = pidx.dims

    alive = np.ones(comb_t.shape[0] << _BLOCK_SHIFT, np.bool_)
    alive[pidx.n:] = False
    if use_numba:
        state = np.full(pidx.block_sizes.shape[0], 2, np.uint8)
        counts = pidx.block_sizes.copy()
        cur_min = pidx.bb_min[:, :3].copy()
        cur_max = pidx.bb_max[:, :3].copy()
        sstate = np.ones(pidx.super_sizes.shape[0], np.uint8)
        scount = pidx.super_sizes.copy()
        scur_min = pidx.sb_min[:, :3].copy()
        scur_max = pidx.sb_max[:, :3].copy()
    else:
        alive_pos = np.arange(pidx.n, dtype=np.int32)

    chosen = [int(rng.integers(pidx.n))]

    def partial_colors():
        return tuple(tuple(int(x) for x in unpack_rgb(table.rgb[pidx.items[i]]))
                     for i in chosen)

    while len(chosen) < profile.set_size:
        cref = pidx.row12(chosen[-1])
        if use_numba:
            tot, xlo, xhi, ylo, yhi, zlo, zhi = _filter_blocks_nb(
                comb_t, pidx.bb_min, pidx.bb_max,
                pidx.sb_min, pidx.sb_max, state, counts, cur_min, cur_max,
                sstate, scount, scur_min, scur_max,
                alive, cref, thr_de2, min_dj, _SUPER_SHIFT)
        else:
            alive_pos, xlo, xhi, ylo, yhi, zlo, zhi = _filter_alive_np(
                comb_t, alive_pos, cref, thr_de2, min_dj, alive)
            tot = alive_pos.size
        if tot == 0:
            return GenerationFailure("exhausted", partial_colors(), int(seed), profile)

        blo = np.array([xlo, ylo, zlo], dtype=np.float64)
        bhi = np.array([xhi, yhi, zhi], dtype=np.float64)

        pick = -1
        proposed = 0
        while proposed < PROPOSAL_CAP:
            n = min(PROPOSAL_BATCH, PROPOSAL_CAP - proposed)
            props = rng.uniform(blo, bhi, size=(n, 3))
            proposed += n
            if use_numba:
                pick = _snap_nb(props, comb_t, pidx.cell_lo, pidx.cell_hi,
                                state, _BLOCK_SHIFT, alive,
                                ox, oy, oz, nx, ny, nz, SNAP_EPS * SNAP_EPS)
            else:
                pick = _snap_np(props, comb_t, pidx.cell_lo, pidx.cell_hi, alive,
                                ox, oy, oz, nx, ny, nz, SNAP_EPS * SNAP_EPS)
            if pick >= 0:
                break
        if pick < 0:
            r = int(rng.integers(tot))
            if use_numba:
                pick = _pick_nth_nb(state, counts, pidx.block_start, alive, r)
            else:
                pick = int(alive_pos[r])
        chosen.append(int(pick))

    colors = partial_colors()
    if not validate_set(colors, profile, vc).passed:
        return GenerationFailure("severity_check", colors, int(seed), profile)
    return PaletteSet(colors, profile, int(seed))


def subseed(seed: int, k: int) -> int:
    """Derived seed for batch attempt k; documented, portable scheme."""
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class BatchResult:
    sets: tuple
    attempts: int
    failures: tuple  # GenerationFailure per failed attempt, in attempt order

    def __iter__(self):
        return iter(self.sets)

    def __len__(self):
        return len(self.sets)


def batch_generate(profile: ConstraintProfile, count: int, seed: int,
                   table: GamutTable, vc=DEFAULT_VC, threads: int = 1,
                   use_numba: Optional[bool] = None) -> BatchResult:
    """Generate `count` sets, retrying failed attempts on derived sub-seeds.

    Attempt k always uses subseed(seed, k), so the output is one fixed
    function of (profile, count, seed, table) no matter the thread count.
    """
    if count < 1:
        raise PaletteError(f"count must be >= 1, got {count}")
    _profile_index(table, profile, vc)  # build once before any worker starts

    def attempt(k):
        return generate_set(profile, subseed(seed, k), table, vc, use_numba)

    sets, fails = [], []
    attempts = 0
    next_k = 0
    block = max(1, threads)
    with ThreadPoolExecutor(max_workers=block) as pool:
        while len(sets) < count:
            ks = list(range(next_k, next_k + block))
            next_k += block
            outs = pool.map(attempt, ks) if threads > 1 else map(attempt, ks)
            for k, out in zip(ks, outs):
                if isinstance(out, PaletteSet):
                    sets.append(out)
                else:
                    fails.append(out)
                attempts = k + 1
                if len(sets) == count:
                    break
    return BatchResult(tuple(sets), attempts, tuple(fails))
