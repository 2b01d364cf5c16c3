"""Eisenstein-Kronecker series: direct lattice sums and analytic continuation.

The twisted lattice sum

    e*_{k,r}(s, t; L) = sum_{g in L, g != -s} (conj(s+g))^k / (s+g)^r * <g, t>

converges absolutely for r - k > 2 and is evaluated there by shell summation
with a rigorous integral tail bound (:func:`ek_direct`).  Everywhere else it
is reached through the Eisenstein-Kronecker-Lerch function

    K_a(z, w, s) = sum_{g != -z} (conj(z+g))^a / |z+g|^(2s) * <g, w>,

continued in s by the two-piece incomplete-gamma representation
(:func:`lerch_kstar`): splitting the Mellin integral at the symmetric point
u = 1/A and Poisson-dualizing the lower piece (the pairing makes the lattice
self-dual) gives

    Gamma(s) K_a(z,w,s) = I_a(s; z,w) + A^(a+1-2s) <w,z> I_a(a+1-s; w,z)
                          - c1 A^(-s)/s + c2 A^(-s)/(s-a-1),

    I_a(s; z,w) = sum_{g != -z} (conj(z+g))^a <g,w> |z+g|^(-2s)
                  * Gamma(s, |z+g|^2 / A),

with c1 = <w,z> when a = 0 and z in L (else 0), c2 = 1 when a = 0 and w in L
(else 0).  Both I-sums converge like exp(-|g|^2/A), a few hundred terms at
256 bits regardless of tau.  The only pole in s is s = 1 for a = 0, w in L.

The normalization used by every higher-level module is

    ebar_{k,r+1}(s, t) = (-1)^(k+r) r! / A^k * e*_{k,r+1}(s, t),

with e*_{k,r+1}(s,t) = K_{k+r+1}(s, t, r+1) by the continuation.  Setting
a = k+r+1 in the reflection above yields the functional equation

    r! K_{k+r+1}(x, 0, r+1) / A^k  =  k! K_{k+r+1}(0, x, k+1) / A^r,

which the verification suite checks numerically over a (k, r) grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import backend as B
from .errors import NotConvergent, PoleEncountered, PrecisionBudget
from .lattice import Lattice, TorsionPoint, _shell_coords
from .precision import PrecisionContext

_TAIL_GUARD_BITS = 16


@dataclass
class EKValue:
    """A computed Eisenstein-Kronecker value with its evaluation metadata."""

    value: object
    method: str
    est_error: float

    def __iter__(self):
        return iter((self.value, self.method, self.est_error))


# ---------------------------------------------------------------------------
# direct summation in the absolutely convergent range
# ---------------------------------------------------------------------------


def _shell_floor(lattice):
    """min |x*w1 + y*w2| over the unit square-shell boundary max(|x|,|y|)=1.

    Shell ell then keeps |g| >= ell * floor, which feeds the tail bound.
    """
    w1, w2 = lattice.omega1, lattice.omega2
    best = None
    # minimize |w1 + y*w2| over y in [-1,1] and |x*w1 + w2| over x in [-1,1]
    for fixed, free in ((w1, w2), (w2, w1)):
        y_star = -B.re(fixed * B.conj(free)) / B.norm(free)
        cands = [B.R(-1), B.R(1), y_star] if -1 <= float(y_star) <= 1 else [B.R(-1), B.R(1)]
        for y in cands:
            val = B.absval(fixed + y * free)
            best = val if best is None else min(best, val)
    return best


def _char_fn(lattice, t):
    """Return chi(m, n) = <m*w1 + n*w2, t> as a fast table lookup.

    For torsion t the value is the exact root of unity
    exp(2*pi*i*(m*t.b - n*t.a)/N); for t = 0 it is identically 1.
    """
    if isinstance(t, TorsionPoint):
        if t.is_zero():
            return lambda m, n: 1
        a, b, nn = t.a, t.b, t.order_N
        root = lattice.root_of_unity
        return lambda m, n: root(m * b - n * a, nn)
    w = B.C(t)
    if B.absval(w) == 0:
        return lambda m, n: 1
    return lambda m, n: lattice.pairing(lattice.lattice_vector(m, n), w)


def _embed(lattice, p):
    return lattice.embed(p) if isinstance(p, TorsionPoint) else B.C(p)


def ek_direct(k, r, s, t, lattice: Lattice, ctx: PrecisionContext | None = None):
    """e*_{k,r}(s,t;L) by shell summation; requires the convergent range r > k+2.

    Shells are summed inner-to-outer in a fixed order; the returned
    ``est_error`` adds the integral tail bound for the skipped shells to the
    rounding slack, and the sum stops as soon as the tail bound is below
    tol_rel relative to the accumulated value.  Raises PrecisionBudget when
    ctx.sum_radius shells cannot reach that target.
    """
    ctx = ctx or lattice.ctx
    if r - k <= 2:
        raise NotConvergent(f"direct sum needs r > k+2, got k={k}, r={r}")
    work = ctx.work_bits(_TAIL_GUARD_BITS + max(0, r.bit_length() * 2))
    with B.workprec(work):
        s_emb = _embed(lattice, s)
        chi = _char_fn(lattice, t)
        skip_origin = bool(isinstance(s, TorsionPoint) and s.is_zero()) or (
            not isinstance(s, TorsionPoint) and B.absval(s_emb) == 0
        )
        h = _shell_floor(lattice)
        a_shift = float(B.absval(s_emb) / h)
        m_pow = r - k
        tol = ctx.tolerance()

        total = B.C(0)
        max_term = B.R(0)
        n_terms = 0
        shell = 0
        while True:
            if shell == 0:
                coords = [] if skip_origin else [(0, 0)]
            else:
                coords = _shell_coords(shell)
            shell_sum = B.C(0)
            for mm, nn in coords:
                g = lattice.lattice_vector(mm, nn)
                w = s_emb + g
                if B.norm(w) == 0:
                    continue  # g = -s (s itself a lattice point)
                num = B.conj(w) ** k if k else 1
                term = num / w**r * chi(mm, nn)
                shell_sum += term
                mag = B.absval(B.re(term)) + B.absval(B.im(term))
                if mag > max_term:
                    max_term = mag
                n_terms += 1
            total += shell_sum
            shell += 1
            if shell <= a_shift + 2:
                continue
            tail = _direct_tail(shell, a_shift, h, m_pow)
            # Absolute floor: a value that is genuinely zero (forced by lattice
            # symmetry) must still terminate, so accuracy bottoms out at
            # sqrt(tol) relative to the largest term of the series.
            scale = max(B.absval(total), max_term * B.sqrt(tol))
            if tail <= tol * scale:
                break
            if shell >= ctx.sum_radius or (
                shell > a_shift + 4 and _direct_tail(ctx.sum_radius, a_shift, h, m_pow) > 2 * tol * scale
            ):
                raise PrecisionBudget(
                    f"direct tail bound cannot reach tol {float(tol):.3e} within "
                    f"sum_radius={ctx.sum_radius} (k={k}, r={r}); use the lerch method"
                )
        rounding = B.R(n_terms) * B.R(2) ** (-work + 4) * max(B.absval(total), B.R(1))
        est = float(tail + rounding)
    with B.workprec(ctx.work_bits()):
        return EKValue(B.C(total), "direct", est)


def _direct_tail(shell_next, a_shift, h, m):
    """Integral bound for sum over shells >= shell_next of 8*ell*(h(ell-a))^-m."""
    S = B.R(shell_next - 1)
    a = B.R(a_shift)
    base = S - a
    if float(base) <= 0:
        return B.R("inf")
    return (
        8
        / h**m
        * (base ** (2 - m) / (m - 2) + (a + 1) * base ** (1 - m) / (m - 1))
    )


# ---------------------------------------------------------------------------
# Eisenstein-Kronecker-Lerch continuation
# ---------------------------------------------------------------------------


def _gamma_upper_int(s_int, x, exp_neg_x, fact_table):
    """Gamma(s, x) for integer s >= 1: (s-1)! e^-x sum_{j<s} x^j/j!."""
    acc = B.R(1)
    xp = B.R(1)
    for j in range(1, s_int):
        xp = xp * x / j
        acc += xp
    return fact_table * exp_neg_x * acc


def _recip_gamma(s):
    """1/Gamma(s) for real s (exactly zero at non-positive integers)."""
    fs = float(s)
    if fs <= 0 and abs(fs - round(fs)) < 1e-15:
        return B.R(0)
    return 1 / B.gamma(s)


def _kstar_partial(a, z_pt, w_pt, s_param, lattice, ctx):
    """I_a(s; z, w): the exponentially convergent half of the continuation."""
    z = _embed(lattice, z_pt)
    chi = _char_fn(lattice, w_pt)
    A = lattice.area_A
    work = B.getprec()
    thresh = B.R(2) ** (-(work - 8))
    s_is_int = isinstance(s_param, int) and s_param >= 1
    fact = B.R(math.factorial(s_param - 1)) if s_is_int else None

    total = B.C(0)
    shell = 0
    small_run = 0
    maxmag = B.R(1)
    while True:
        coords = [(0, 0)] if shell == 0 else _shell_coords(shell)
        shell_max = B.R(0)
        shell_sum = B.C(0)
        for mm, nn in coords:
            g = lattice.lattice_vector(mm, nn)
            zg = z + g
            x = B.norm(zg) / A
            if x == 0:
                continue  # g = -z term (the c1 bookkeeping handles it)
            if s_is_int:
                gam = _gamma_upper_int(s_param, x, B.exp(-x), fact)
                weight = gam * x ** (-s_param)
            else:
                gam = B.gamma_upper(s_param, x)
                weight = gam * x ** (-B.R(s_param))
            num = B.conj(zg) ** a if a else B.R(1)
            term = num * chi(mm, nn) * weight
            shell_sum += term
            mag = B.absval(B.re(term)) + B.absval(B.im(term))
            if mag > shell_max:
                shell_max = mag
        total += shell_sum
        maxmag = max(maxmag, shell_max)
        shell += 1
        if shell_max < thresh * maxmag and shell > 1:
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
        if shell > ctx.sum_radius:
            raise PrecisionBudget("Lerch shell sum exceeded sum_radius")
    # weight carried x^{-s}; the representation wants |z+g|^{-2s} Gamma(s,x)
    # and |z+g|^{-2s} = (A x)^{-s}, so scale once by A^{-s} at the end.
    if s_is_int:
        return total * A ** (-s_param)
    return total * A ** (-B.R(s_param))


def _in_lattice_point(lattice, p):
    if isinstance(p, TorsionPoint):
        return p.is_zero()
    return lattice.in_lattice(B.C(p))


def lerch_kstar(a, z, w, s_param, lattice: Lattice, ctx: PrecisionContext | None = None):
    """K_a(z, w, s): analytic continuation of the Lerch-type lattice sum.

    ``z`` and ``w`` may be TorsionPoints (exact characters) or complex
    numbers; ``s_param`` is real (integers use closed-form incomplete
    gammas).  Agrees with the raw Dirichlet sum for 2*Re(s) - a > 2 and is
    entire in s except the classical pole at s = 1 when a = 0, w in L.
    """
    ctx = ctx or lattice.ctx
    if a < 0 or a != int(a):
        raise ValueError("a must be a non-negative integer")
    a = int(a)
    with B.workprec(ctx.work_bits(_TAIL_GUARD_BITS)):
        A = lattice.area_A
        z_in = _in_lattice_point(lattice, z)
        w_in = _in_lattice_point(lattice, w)
        s_val = s_param if isinstance(s_param, int) else B.R(repr(float(s_param)))
        if a == 0 and w_in and abs(float(s_param) - 1) < 1e-12:
            raise PoleEncountered("K_0(z, w, s) has its pole at s = 1 for w in the lattice")

        i1 = _kstar_partial(a, z, w, s_param, lattice, ctx)
        dual_s = a + 1 - s_param if isinstance(s_param, int) else B.R(a + 1) - s_val
        i2 = _kstar_partial(a, w, z, dual_s, lattice, ctx)

        z_emb = _embed(lattice, z)
        w_emb = _embed(lattice, w)
        pair_wz = lattice.pairing(w_emb, z_emb)

        recip = _recip_gamma(s_val)
        a_pow = A ** (a + 1 - 2 * s_val) if isinstance(s_val, int) else A ** (B.R(a + 1) - 2 * s_val)
        a_neg_s = A ** (-s_val)
        val = (i1 + a_pow * pair_wz * i2) * recip
        if a == 0:
            if z_in:
                # -c1 A^{-s}/(s Gamma(s)) = -c1 A^{-s}/Gamma(s+1), finite at s = 0
                c1 = pair_wz  # <w, z> = <z, w>^{-1} at a lattice z
                val -= c1 * a_neg_s * _recip_gamma(s_val + 1)
            if w_in:
                val += a_neg_s / (s_val - a - 1) * recip
        return val


def raw_kstar_sum(a, z, w, s_param, lattice: Lattice, radius, ctx: PrecisionContext | None = None):
    """Truncated defining sum of K_a (oracle for the convergent region)."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        z_emb = _embed(lattice, z)
        chi = _char_fn(lattice, w)
        total = B.C(0)
        for shell in range(radius + 1):
            coords = [(0, 0)] if shell == 0 else _shell_coords(shell)
            for mm, nn in coords:
                zg = z_emb + lattice.lattice_vector(mm, nn)
                n2 = B.norm(zg)
                if n2 == 0:
                    continue
                num = B.conj(zg) ** a if a else B.R(1)
                total += num * chi(mm, nn) / n2 ** B.R(repr(float(s_param)))
        return total


# ---------------------------------------------------------------------------
# the factorial/area normalization used by all higher modules
# ---------------------------------------------------------------------------


def ek_normalized(k, r, s, t, lattice: Lattice, ctx: PrecisionContext | None = None, method="auto"):
    """ebar_{k,r+1}(s,t) = (-1)^(k+r) r!/A^k e*_{k,r+1}(s,t), any k, r >= 0.

    method: 'auto' (direct when the tail bound reaches tol in budget, else
    Lerch continuation), 'direct', 'lerch', or 'theta_taylor' (coefficient
    extraction from the translated Kronecker theta; requires nonzero s, t).
    """
    ctx = ctx or lattice.ctx
    if k < 0 or r < 0:
        raise ValueError("k and r must be non-negative")
    if method == "auto":
        if r > k + 1:
            try:
                return ek_normalized(k, r, s, t, lattice, ctx, method="direct")
            except (NotConvergent, PrecisionBudget):
                pass
        return ek_normalized(k, r, s, t, lattice, ctx, method="lerch")

    with B.workprec(ctx.work_bits()):
        norm_const = B.R(math.factorial(r)) * (-1) ** ((k + r) % 2) / lattice.area_A**k

    if method == "direct":
        raw = ek_direct(k, r + 1, s, t, lattice, ctx)
        with B.workprec(ctx.work_bits()):
            return EKValue(norm_const * raw.value, "direct", raw.est_error * float(B.absval(norm_const)))
    if method == "lerch":
        kval = lerch_kstar(k + r + 1, s, t, r + 1, lattice, ctx)
        with B.workprec(ctx.work_bits()):
            val = norm_const * kval
            return EKValue(val, "lerch", float(B.absval(val)) * ctx.tol / 4)
    if method == "theta_taylor":
        from .ktheta import ThetaTranslate, taylor_coeffs

        if not (isinstance(s, TorsionPoint) and isinstance(t, TorsionPoint)) or s.is_zero() or t.is_zero():
            raise ValueError("theta_taylor route needs nonzero torsion s and t")
        with B.workprec(ctx.work_bits()):
            tr = ThetaTranslate(lattice.embed(s), lattice.embed(t), lattice)
        coeffs = taylor_coeffs(tr, k, r, ctx)
        with B.workprec(ctx.work_bits()):
            val = B.R(math.factorial(k)) * B.R(math.factorial(r)) * coeffs[k][r]
            return EKValue(val, "theta_taylor", float(B.absval(val)) * ctx.tol / 4)
    raise ValueError(f"unknown method {method!r}")
