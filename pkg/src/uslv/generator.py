"""Markov chain generators on 1D and 2D state grids.

The 2D generators are quasi-birth-death (QBD): block-tridiagonal in the
first (level) coordinate with tridiagonal-within-level blocks plus one
corner diagonal whose side follows the sign of the correlation.  Mixed
derivatives are discretized with one-sided product differences; central
differencing of the cross term produces negative off-diagonal entries and
is provided only as a deliberately invalid construction for validation
demos.

All builders conserve probability exactly: the diagonal of every row is
the negated sum of its off-diagonal entries, including at grid edges
where stencil legs fall outside the grid.  Interior rows additionally
satisfy the zero-drift identity sum_j a_ij (z_j - z_i) = 0, which is what
keeps the discretized driver a martingale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InvalidGeneratorError
from .grids import Grid1D, Grid2D, step_band

__all__ = [
    "SparseGenerator",
    "GeneratorSplit",
    "GeneratorReport",
    "generator_1d",
    "generator_2d_uniform",
    "generator_2d_nonuniform",
    "generator_2d_uniform_central",
    "split_generator",
    "conditional_generator",
    "validate_generator",
]


@dataclass
class SparseGenerator:
    """A sparse rate matrix with its block-structure descriptor.

    level_size is the within-level dimension p2 for block-tridiagonal
    (QBD) generators and None for plain tridiagonal ones.  stored_nonzeros
    is the banded-storage budget of the builder (QBD builders keep the
    block bands of both the plain form and its level/phase split); it
    defaults to the number of structural nonzeros in the matrix.
    """

    matrix: sp.csr_matrix
    level_size: int = None
    stored_nonzeros: int = None

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        n, m = self.matrix.shape
        if n != m:
            raise ConfigError(f"generator must be square, got {self.matrix.shape}")
        if self.stored_nonzeros is None:
            self.stored_nonzeros = int(self.matrix.nnz)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_levels(self):
        return None if self.level_size is None else self.dimension // self.level_size

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def max_exit_rate(self) -> float:
        d = self.matrix.diagonal()
        return float(np.max(np.abs(d))) if len(d) else 0.0

    def scaled(self, factor: float) -> "SparseGenerator":
        if factor < 0:
            raise ConfigError(f"activity must be nonnegative, got {factor}")
        return SparseGenerator(self.matrix * factor, level_size=self.level_size)

    def to_coo_text(self) -> str:
        """Coordinate-list text (row col rate), one entry per line."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{self.dimension} {self.level_size if self.level_size else 0}"]
        for k in order:
            lines.append(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_coo_text(cls, text: str) -> "SparseGenerator":
        rows = text.strip().splitlines()
        dim, lvl = (int(v) for v in rows[0].split())
        i, j, v = [], [], []
        for line in rows[1:]:
            a, b, c = line.split()
            i.append(int(a))
            j.append(int(b))
            v.append(float(c))
        mat = sp.csr_matrix((v, (i, j)), shape=(dim, dim))
        return cls(mat, level_size=lvl or None)


@dataclass
class GeneratorSplit:
    """Level-changing (a1) and within-level (a2) parts of a QBD generator.

    Both parts are valid generators on their own: a1 carries the off-level
    blocks compensated on its diagonal, a2 the within-level blocks with
    the compensation added back.  a1 + a2 reproduces the original.
    """

    a1: SparseGenerator
    a2: SparseGenerator

    @property
    def dimension(self) -> int:
        return self.a1.dimension

    def combined(self, y1: float = 1.0, y2: float = 1.0) -> SparseGenerator:
        return conditional_generator(self, y1, y2)


@dataclass
class GeneratorReport:
    """Validation outcome; empty violation list means the matrix is a
    valid generator."""

    violations: list = field(default_factory=list)
    dimension: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return f"valid generator on {self.dimension} states"
        head = [f"{len(self.violations)} violation(s) on {self.dimension} states"]
        head += [f"  {kind} at ({i},{j}): {val:.6g}" for kind, i, j, val in self.violations[:20]]
        if len(self.violations) > 20:
            head.append(f"  ... {len(self.violations) - 20} more")
        return "\n".join(head)


def validate_generator(g, row_tol: float = 1e-12) -> GeneratorReport:
    """Check sign structure and row sums; report violations with locations.

    Row sums are judged relative to the largest entry magnitude in the
    row.  Accepts a SparseGenerator or any sparse/dense matrix.
    """
    mat = g.matrix if isinstance(g, SparseGenerator) else sp.csr_matrix(g)
    n = mat.shape[0]
    report = GeneratorReport(dimension=n)
    coo = mat.tocoo()
    scale = max(1.0, float(np.max(np.abs(coo.data))) if coo.nnz else 0.0)
    for i, j, v in zip(coo.row, coo.col, coo.data):
        if i == j and v > row_tol * scale:
            report.violations.append(("positive diagonal", int(i), int(j), float(v)))
        elif i != j and v < -row_tol * scale:
            report.violations.append(("negative off-diagonal", int(i), int(j), float(v)))
    sums = np.asarray(mat.sum(axis=1)).ravel()
    row_scale = np.maximum(1.0, np.abs(mat).max(axis=1).toarray().ravel())
    bad = np.where(np.abs(sums) > row_tol * row_scale)[0]
    for i in bad:
        report.violations.append(("row sum", int(i), int(i), float(sums[i])))
    return report


def generator_1d(grid: Grid1D, s, t: float = 0.0) -> SparseGenerator:
    """Tridiagonal generator for the driver chain with nodewise speeds s.

    Interior rates follow the standard nonuniform second-difference
    weights scaled by the local speed, so the chain drift vanishes at
    every interior node.  Edge rows keep a single inward rate (same
    magnitude law as the interior) compensated on the diagonal, which
    conserves probability at the cost of drift in the two outermost rows.
    """
    s = np.asarray(s, dtype=float)
    p = len(grid)
    if p < 3:
        raise ConfigError("1D generator needs at least 3 nodes")
    if s.shape != (p,):
        raise ConfigError(f"speed array shape {s.shape} does not match grid ({p},)")
    if np.any(s < 0):
        raise InvalidGeneratorError("negative speed factor", [("speed", int(np.argmin(s)))])
    h = grid.steps
    rows, cols, vals = [], [], []

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    for i in range(1, p - 1):
        dm, dp = h[i - 1], h[i]
        down = s[i] / (dm * (dm + dp))
        up = s[i] / (dp * (dm + dp))
        add(i, i - 1, down)
        add(i, i + 1, up)
        add(i, i, -(down + up))
    up0 = s[0] / (h[0] * (h[0] + h[1]))
    add(0, 1, up0)
    add(0, 0, -up0)
    dn = s[p - 1] / (h[p - 2] * (h[p - 2] + h[p - 3]))
    add(p - 1, p - 2, dn)
    add(p - 1, p - 1, -dn)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(p, p))
    return SparseGenerator(mat, level_size=None)


# 2D stencil assembly: each entry below maps an offset (di, dj) to a rate
# plane of shape (p1, p2).  Offsets landing outside the grid are dropped
# and the diagonal re-balanced, so every builder shares one edge policy.


def _mixed_parts(rho):
    """One-sided product-difference decomposition of the cross term.

    Returns a list of (step-pair keys, {offset: coeff}) where the step
    pair selects which local spacings divide the part.  The split by the
    correlation sign keeps all corner contributions nonnegative.
    """
    if rho >= 0:
        return [
            (("p", "p"), {(1, 1): 0.5, (1, 0): -0.5, (0, 1): -0.5, (0, 0): 0.5}),
            (("m", "m"), {(0, 0): 0.5, (-1, 0): -0.5, (0, -1): -0.5, (-1, -1): 0.5}),
        ]
    return [
        (("p", "m"), {(1, 0): 0.5, (1, -1): -0.5, (0, 0): -0.5, (0, -1): 0.5}),
        (("m", "p"), {(0, 1): 0.5, (0, 0): -0.5, (-1, 1): -0.5, (-1, 0): 0.5}),
    ]


def _axis_steps(nodes):
    """(h_minus, h_plus) arrays; NaN where the side does not exist."""
    h = np.diff(nodes)
    hm = np.concatenate(([np.nan], h))
    hp = np.concatenate((h, [np.nan]))
    return hm, hp


def _assemble_2d(grid: Grid2D, s, mixed_parts, check_positivity: bool):
    p1, p2 = grid.shape
    if p1 < 3 or p2 < 3:
        raise ConfigError("2D generators need at least 3 nodes per axis")
    s = np.asarray(s, dtype=float)
    if s.shape != (p1, p2):
        raise ConfigError(f"speed array shape {s.shape} does not match grid {grid.shape}")
    if np.any(s < 0):
        raise InvalidGeneratorError("negative speed factor", [("speed",)])
    h1m, h1p = _axis_steps(grid.axis1.nodes)
    h2m, h2p = _axis_steps(grid.axis2.nodes)
    sig1, sig2, rho = grid.sigma1, grid.sigma2, grid.rho

    planes = {}

    def plane(off):
        if off not in planes:
            planes[off] = np.zeros((p1, p2))
        return planes[off]

    # Second derivatives, central where both neighbors exist, one inward
    # leg otherwise (edge rows re-balance on the diagonal).
    H1m = h1m[:, None] * np.ones((1, p2))
    H1p = h1p[:, None] * np.ones((1, p2))
    H2m = np.ones((p1, 1)) * h2m[None, :]
    H2p = np.ones((p1, 1)) * h2p[None, :]

    def second_deriv(sig, hm, hp, off_minus, off_plus):
        interior = ~np.isnan(hm) & ~np.isnan(hp)
        with np.errstate(invalid="ignore", divide="ignore"):
            rate_m = np.where(interior, sig**2 / (hm * (hm + hp)), 0.0)
            rate_p = np.where(interior, sig**2 / (hp * (hm + hp)), 0.0)
        plane(off_minus)[...] += s * np.nan_to_num(rate_m)
        plane(off_plus)[...] += s * np.nan_to_num(rate_p)

    second_deriv(sig1, H1m, H1p, (-1, 0), (1, 0))
    second_deriv(sig2, H2m, H2p, (0, -1), (0, 1))

    # Edge rows of each axis: inward one-sided rate using the two nearest
    # steps, mirroring the 1D builder.
    if p1 >= 3:
        hA, hB = h1p[0], h1p[1]
        plane((1, 0))[0, :] += s[0, :] * sig1**2 / (hA * (hA + hB))
        hA, hB = h1m[p1 - 1], h1m[p1 - 2]
        plane((-1, 0))[p1 - 1, :] += s[p1 - 1, :] * sig1**2 / (hA * (hA + hB))
    if p2 >= 3:
        hA, hB = h2p[0], h2p[1]
        plane((0, 1))[:, 0] += s[:, 0] * sig2**2 / (hA * (hA + hB))
        hA, hB = h2m[p2 - 1], h2m[p2 - 2]
        plane((0, -1))[:, p2 - 1] += s[:, p2 - 1] * sig2**2 / (hA * (hA + hB))

    # Cross term, only where the full part fits inside the grid.
    cross = rho * sig1 * sig2
    if cross != 0.0:
        step_of = {"m": (H1m, H2m), "p": (H1p, H2p)}
        for (k1, k2), offsets in mixed_parts:
            d1 = step_of[k1][0]
            d2 = step_of[k2][1]
            denom = d1 * d2
            valid = ~np.isnan(denom)
            for off, coeff in offsets.items():
                with np.errstate(invalid="ignore", divide="ignore"):
                    contrib = np.where(valid, cross * coeff / denom, 0.0)
                # A part is dropped in full wherever any of its offsets
                # leaves the grid; mask by the part's own reach.
                reach1 = -1 if k1 == "m" else 1
                reach2 = -1 if k2 == "m" else 1
                mask = np.ones((p1, p2), dtype=bool)
                if reach1 == 1:
                    mask[p1 - 1, :] = False
                else:
                    mask[0, :] = False
                if reach2 == 1:
                    mask[:, p2 - 1] = False
                else:
                    mask[:, 0] = False
                plane(off)[...] += np.where(mask, s * np.nan_to_num(contrib), 0.0)

    # Assemble sparse matrix from offset planes; diagonal balances rows.
    n = p1 * p2
    I, J, V = [], [], []
    diag = np.zeros((p1, p2))
    violations = []
    ii, jj = np.meshgrid(np.arange(p1), np.arange(p2), indexing="ij")
    for (di, dj), vals in sorted(planes.items()):
        if (di, dj) == (0, 0):
            # Stencil self-contributions are implied by the row balance
            # below; adding them too would double-count.
            continue
        in_range = (
            (ii + di >= 0) & (ii + di < p1) & (jj + dj >= 0) & (jj + dj < p2)
        )
        active = in_range & (vals != 0.0)
        if check_positivity:
            neg = active & (vals < -1e-14 * np.maximum(1.0, np.abs(vals)))
            for a, b in zip(*np.nonzero(neg)):
                violations.append(
                    (f"negative rate toward offset ({di},{dj})", int(a), int(b), float(vals[a, b]))
                )
        src = ii[active] * p2 + jj[active]
        dst = (ii[active] + di) * p2 + (jj[active] + dj)
        I.append(src)
        J.append(dst)
        V.append(vals[active])
        diag -= np.where(in_range, vals, 0.0)
    if violations:
        raise InvalidGeneratorError(
            "2D stencil produced negative off-diagonal rates; "
            "offending (node, entry) pairs attached",
            violations,
        )
    I.append((ii * p2 + jj).ravel())
    J.append((ii * p2 + jj).ravel())
    V.append(diag.ravel())
    mat = sp.csr_matrix(
        (np.concatenate(V), (np.concatenate(I), np.concatenate(J))), shape=(n, n)
    )
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def generator_2d_nonuniform(grid: Grid2D, s, t: float = 0.0) -> SparseGenerator:
    """Nine-point QBD generator on a (possibly) nonuniform 2D grid.

    Every off-diagonal rate is checked for nonnegativity at build time;
    a violation is rejected with the offending node and entry, since on
    irregular grids the step constraints interact in ways that are hard
    to guard analytically.  On uniform grids this reduces entrywise to
    `generator_2d_uniform`.
    """
    mat = _assemble_2d(grid, s, _mixed_parts(grid.rho), check_positivity=True)
    return SparseGenerator(mat, level_size=len(grid.axis2))


def generator_2d_uniform(grid: Grid2D, s, t: float = 0.0) -> SparseGenerator:
    """QBD generator on a uniform 2D grid.

    Interior rates follow the closed-form stencil
        a(i,j -> i+-1,j)   = s/2 (sigma1^2/dz1^2 - |rho| sigma1 sigma2/(dz1 dz2))
        a(i,j -> i,j+-1)   = s/2 (sigma2^2/dz2^2 - |rho| sigma1 sigma2/(dz1 dz2))
        a(i,j -> corners)  = s/2 |rho| sigma1 sigma2/(dz1 dz2)
    with the corner pair on the main diagonal for rho >= 0 and on the
    anti-diagonal for rho < 0.  The step-ratio band is enforced up front.

    The returned generator's stored_nonzeros reports the banded storage
    of the QBD artifact (plain within-level blocks plus the level/phase
    split bands), which for a p x p grid is (3p-2)p + 2(2p-1)^2 entries.
    """
    if not (grid.axis1.is_uniform and grid.axis2.is_uniform):
        raise ConfigError("generator_2d_uniform requires uniform axes")
    d1 = float(grid.axis1.steps[0])
    d2 = float(grid.axis2.steps[0])
    if grid.rho != 0.0:
        lo, hi = step_band(d1, grid.sigma1, grid.sigma2, grid.rho)
        if not (lo - 1e-12 * hi <= d2 <= hi + 1e-12 * hi):
            raise InvalidGeneratorError(
                f"step dz2={d2} violates the admissible band [{lo}, {hi}]",
                [("step band", lo, hi, d2)],
            )
    mat = _assemble_2d(grid, s, _mixed_parts(grid.rho), check_positivity=True)
    p1, p2 = grid.shape
    stored = _qbd_stored_count(p1, p2)
    return SparseGenerator(mat, level_size=p2, stored_nonzeros=stored)


def _qbd_stored_count(p1: int, p2: int) -> int:
    # Banded storage of the QBD artifact: within-level tridiagonal blocks
    # of the plain form, plus the split form (within-level blocks again,
    # bidiagonal up/down blocks, and the compensation diagonal).
    plain_l = p1 * (3 * p2 - 2)
    split_l = p1 * (3 * p2 - 2)
    split_fb = 2 * (p1 - 1) * (2 * p2 - 1)
    split_fhat = p1 * p2
    return plain_l + split_l + split_fb + split_fhat


def generator_2d_uniform_central(grid: Grid2D, s) -> SparseGenerator:
    """Deliberately invalid construction: central differencing of the
    cross term.

    Provided only to demonstrate (via `validate_generator`) that central
    mixed differences break the sign structure at nonzero correlation.
    No positivity checks are applied.
    """
    central = [
        (("p", "p"), {(1, 1): 0.25}),
        (("m", "m"), {(-1, -1): 0.25}),
        (("p", "m"), {(1, -1): -0.25}),
        (("m", "p"), {(-1, 1): -0.25}),
    ]
    mat = _assemble_2d(grid, s, central, check_positivity=False)
    return SparseGenerator(mat, level_size=len(grid.axis2))


def split_generator(g: SparseGenerator) -> GeneratorSplit:
    """Split a QBD generator into level-changing and within-level parts.

    a1 holds every entry whose level index changes, compensated by the
    per-row sum on its diagonal.  a2 holds the within-level entries with
    the compensation added back, so a1 + a2 equals the input.
    """
    if g.level_size is None:
        raise ConfigError("split requires a block-tridiagonal (QBD) generator")
    p2 = g.level_size
    coo = g.matrix.tocoo()
    lvl_row = coo.row // p2
    lvl_col = coo.col // p2
    ld = lvl_col - lvl_row
    if np.any(np.abs(ld) > 1):
        raise ConfigError("generator is not block-tridiagonal in the level index")
    off = ld != 0
    n = g.dimension
    fhat = np.zeros(n)
    np.add.at(fhat, coo.row[off], coo.data[off])
    a1 = sp.csr_matrix((coo.data[off], (coo.row[off], coo.col[off])), shape=(n, n))
    a1 = a1 + sp.diags(-fhat)
    a2 = sp.csr_matrix((coo.data[~off], (coo.row[~off], coo.col[~off])), shape=(n, n))
    a2 = a2 + sp.diags(fhat)
    return GeneratorSplit(
        a1=SparseGenerator(sp.csr_matrix(a1), level_size=p2),
        a2=SparseGenerator(sp.csr_matrix(a2), level_size=p2),
    )


def conditional_generator(split: GeneratorSplit, y1: float, y2: float) -> SparseGenerator:
    """Activity-scaled generator y1*a1 + y2*a2.

    Valid for any nonnegative activities; reduces to the original
    generator at (1, 1).
    """
    if y1 < 0 or y2 < 0:
        raise ConfigError(f"activities must be nonnegative, got ({y1}, {y2})")
    mat = split.a1.matrix * y1 + split.a2.matrix * y2
    return SparseGenerator(sp.csr_matrix(mat), level_size=split.a1.level_size)
