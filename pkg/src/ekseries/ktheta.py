"""The Kronecker theta function, its translates, and Taylor extraction.

    Theta(z, w) = theta(z + w) / (theta(z) * theta(w))

has simple poles on z in L and w in L, residue 1 in each variable, and is
symmetric in (z, w).  The translate by (z0, w0) is

    Theta_{z0,w0}(z, w) = exp(-(z*conj(w0) + w*conj(z0) + z0*conj(w0))/A)
                          * Theta(z + z0, w + w0),

the exponent convention being pinned by the one fully explicit special case
checked in the tests: with real torsion s = 1/N, t = 1/D,

    Theta_{Ds,Nt}(Dz, Nw) = exp(-(Nz + Dw + 1)/A) * Theta(Dz + Ds, Nw + Nt).

For nonzero torsion translates the two-variable Taylor coefficients around
the origin carry the whole Eisenstein-Kronecker family:

    a! b! * c[a][b] = ebar_{a,b+1}(z0, w0),   c[a][b] = coeff of z^b w^a,

which :func:`taylor_coeffs` extracts through nested Cauchy integrals on
circles |z| = rho_z, |w| = rho_w (trapezoid rule; spectrally accurate for the
analytic integrand).  The contour radius defaults to 1/4 of the distance
from the origin to the nearest pole of the translate, and the node count
escalates 2^m -> 2^(m+1) until two successive levels agree.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import backend as B
from .errors import ContourTooLarge, PoleEncountered, PrecisionBudget
from .lattice import Lattice
from .precision import PrecisionContext

_NODE_LADDER = (96, 192, 384, 768)  # aliasing at radius/4 is 4^-N per level
_RADIUS_FRACTION = 4  # contour at dist-to-pole / 4


def kronecker_theta(z, w, lattice: Lattice, ctx: PrecisionContext | None = None):
    """Theta(z, w) = theta(z+w)/(theta(z) theta(w)); poles on z or w in L."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        zc, wc = B.C(z), B.C(w)
        for name, val in (("z", zc), ("w", wc)):
            if lattice.in_lattice(val):
                raise PoleEncountered(f"kronecker theta has a pole at {name} in the lattice")
        return lattice.theta(zc + wc) / (lattice.theta(zc) * lattice.theta(wc))


@dataclass(frozen=True)
class ThetaTranslate:
    """A translate Theta_{z0,w0} of the Kronecker theta on a fixed lattice."""

    z0: object
    w0: object
    lattice: Lattice

    def exponent_factor(self, z, w):
        """exp(-(z*conj(w0) + w*conj(z0) + z0*conj(w0))/A)."""
        L = self.lattice
        z0, w0 = B.C(self.z0), B.C(self.w0)
        return B.exp(-(z * B.conj(w0) + w * B.conj(z0) + z0 * B.conj(w0)) / L.area_A)

    def __call__(self, z, w):
        L = self.lattice
        z, w = B.C(z), B.C(w)
        return self.exponent_factor(z, w) * (
            L.theta(z + B.C(self.z0) + w + B.C(self.w0))
            / (L.theta(z + B.C(self.z0)) * L.theta(w + B.C(self.w0)))
        )


def translated_theta(tr: ThetaTranslate, z, w, ctx: PrecisionContext | None = None):
    """Evaluate the translate at (z, w); pole error near z+z0 or w+w0 in L."""
    ctx = ctx or tr.lattice.ctx
    with B.workprec(ctx.work_bits()):
        zc, wc = B.C(z), B.C(w)
        L = tr.lattice
        if L.in_lattice(zc + B.C(tr.z0)) or L.in_lattice(wc + B.C(tr.w0)):
            raise PoleEncountered("translated theta evaluated at a pole")
        return tr(zc, wc)


def _dist_to_shifted_lattice(lattice, shift):
    """Distance from the origin to L - shift (nearest pole of the translate)."""
    return B.sqrt(lattice.dist_to_lattice_sq(shift))


def pole_distances(tr: ThetaTranslate):
    dz = _dist_to_shifted_lattice(tr.lattice, B.C(tr.z0))
    dw = _dist_to_shifted_lattice(tr.lattice, B.C(tr.w0))
    return dz, dw


def taylor_coeffs(
    tr: ThetaTranslate,
    max_a,
    max_b,
    ctx: PrecisionContext | None = None,
    radius_fraction: int = _RADIUS_FRACTION,
):
    """Taylor coefficients c[a][b] (coeff of z^b w^a) of the translate at (0,0).

    Contract (checked against the Lerch continuation in the suite):
    a! b! c[a][b] = ebar_{a,b+1}(z0, w0).  Raises ContourTooLarge when z0 or
    w0 sits on the lattice (no contour radius separates the poles), and
    PrecisionBudget when the node ladder is exhausted without two successive
    levels agreeing.
    """
    ctx = ctx or tr.lattice.ctx
    L = tr.lattice
    guard = 64 + 4 * (max_a + max_b)
    with B.workprec(ctx.work_bits(guard)):
        dz, dw = pole_distances(tr)
        scale = L.scale_length()
        if dz < scale * B.R(2) ** (-(ctx.prec_bits // 2)) or dw < scale * B.R(2) ** (
            -(ctx.prec_bits // 2)
        ):
            raise ContourTooLarge("translate parameter lies on the lattice; no valid contour")
        rho_z = dz / radius_fraction
        rho_w = dw / radius_fraction

        def grid_eval(nodes):
            return _translate_grid(tr, rho_z, rho_w, nodes)

        prev = None
        tol = ctx.tolerance() / 16
        for nodes in _NODE_LADDER:
            values = grid_eval(nodes)
            coeffs = _coeffs_from_grid(values, rho_z, rho_w, max_a, max_b, L, nodes)
            if prev is not None and _grids_agree(prev, coeffs, tol):
                return coeffs
            prev = coeffs
        raise PrecisionBudget("contour node ladder exhausted without agreement")


def taylor_grid_of(f, rho_z, rho_w, max_a, max_b, lattice, nodes, ctx=None):
    """Cauchy-contour Taylor grid of an arbitrary two-variable callable.

    Oracle path for the extraction machinery itself (e.g. injecting
    exp(z + w) recovers 1/(a! b!) in every slot).
    """
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits(64)):
        rho_z, rho_w = B.R(rho_z), B.R(rho_w)
        zs = _circle_nodes(lattice, nodes, rho_z)
        ws = _circle_nodes(lattice, nodes, rho_w)
        values = [[f(zs[j], ws[l]) for l in range(nodes)] for j in range(nodes)]
        return _coeffs_from_grid(values, rho_z, rho_w, max_a, max_b, lattice, nodes)


def _circle_nodes(lattice, n, rho):
    return [rho * lattice.root_of_unity(j, n) for j in range(n)]


def _translate_grid(tr, rho_z, rho_w, nodes):
    """Values of the translate on the product contour grid.

    Row/column separation keeps this at one theta evaluation per grid point:
    theta(z_j + z0) and theta(w_l + w0) are cached along the axes, as are the
    separable exponential factors, so only theta(z_j + w_l + z0 + w0) is a
    per-cell evaluation.
    """
    L = tr.lattice
    z0, w0 = B.C(tr.z0), B.C(tr.w0)
    A = L.area_A
    zs = _circle_nodes(L, nodes, rho_z)
    ws = _circle_nodes(L, nodes, rho_w)
    c0 = B.exp(-z0 * B.conj(w0) / A)
    exp_row = [B.exp(-zs[j] * B.conj(w0) / A) for j in range(nodes)]
    exp_col = [B.exp(-ws[l] * B.conj(z0) / A) for l in range(nodes)]
    th_row = [L.theta(zs[j] + z0) for j in range(nodes)]
    th_col = [L.theta(ws[l] + w0) for l in range(nodes)]
    shift = z0 + w0
    values = []
    for j in range(nodes):
        pref_j = c0 * exp_row[j] / th_row[j]
        zj = zs[j]
        row = []
        for l in range(nodes):
            num = L.theta(zj + ws[l] + shift)
            row.append(pref_j * exp_col[l] * num / th_col[l])
        values.append(row)
    return values


def _coeffs_from_grid(values, rho_z, rho_w, max_a, max_b, lattice, nodes):
    """Partial 2-D DFT of the contour grid down to Taylor coefficients."""
    # first stage: for each w-node l, hat[b][l] = (1/N) sum_j f[j][l] zeta^{-jb}
    hat = [[B.C(0)] * nodes for _ in range(max_b + 1)]
    for j in range(nodes):
        f_j = values[j]
        for b in range(max_b + 1):
            root = lattice.root_of_unity((-j * b) % nodes, nodes)
            for l in range(nodes):
                hat[b][l] += f_j[l] * root
    inv_n = 1 / B.R(nodes)
    coeffs = [[B.C(0)] * (max_b + 1) for _ in range(max_a + 1)]
    for a in range(max_a + 1):
        for b in range(max_b + 1):
            acc = B.C(0)
            for l in range(nodes):
                acc += hat[b][l] * lattice.root_of_unity((-l * a) % nodes, nodes)
            coeffs[a][b] = acc * inv_n * inv_n / (rho_z**b * rho_w**a)
    return coeffs


def _grids_agree(c1, c2, tol):
    for row1, row2 in zip(c1, c2):
        for v1, v2 in zip(row1, row2):
            scale = max(B.absval(v2), B.R(1))
            if B.absval(v1 - v2) > tol * scale:
                return False
    return True
