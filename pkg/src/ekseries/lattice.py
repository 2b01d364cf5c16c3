"""Complex lattices, torsion points, and the theta-function kernel.

A lattice L = omega1*Z + omega2*Z carries the derived invariants used
everywhere else: the normalized covolume A = Im(omega1 * conj(omega2))/pi,
the quasi-periods eta1, eta2 of the Weierstrass zeta function, and the
calibration constant e2star that turns the Weierstrass sigma function into
the normalized theta function

    theta(z) = exp(-e2star/2 * z^2) * sigma(z),    theta'(0) = 1,

satisfying the transformation law

    theta(z + g) = alpha(g) * exp(z*conj(g)/A + g*conj(g)/(2A)) * theta(z)

for every lattice vector g, with alpha(g) in {+1, -1}.  e2star is calibrated
as the unique constant making this law hold for the generators (equivalently
e2star = eta(omega2)/omega2 - conj(omega2)/(omega2*A) in the oriented basis);
the Legendre relation then forces the law for the full lattice, which the
test suite asserts rather than assumes.

All evaluation happens on the normalized lattice Z + tau*Z (tau in the upper
half plane) via rapidly convergent q-series, and is rescaled to L by the
homogeneity of sigma/zeta/theta.  The Weierstrass product is kept only as a
slow cross-check oracle (:func:`sigma_product`).

The pairing is  <z, w> = exp((z*conj(w) - w*conj(z))/A),  which restricts to
roots of unity on torsion points; on exact torsion the exponent is computed
by integer arithmetic alone (no drift in torsion sums).
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import gcd

from . import backend as B
from .errors import PoleEncountered, PrecisionBudget
from .precision import DEFAULT_CTX, PrecisionContext

_CALIBRATION_GUARD = 96  # extra bits used once, at lattice construction


# ---------------------------------------------------------------------------
# torsion points
# ---------------------------------------------------------------------------


class TorsionPoint:
    """Exact rational point (a*omega1 + b*omega2)/N of the lattice basis.

    The stored representative is canonical: 0 <= a, b < N and
    gcd(a, b, N) = 1 (the zero point is (0, 0, 1)).  Two torsion points are
    equal iff their canonical triples agree; ``order_N`` of the canonical
    form is the exact order.  Embedding into C happens only at evaluation
    time, so torsion sums stay drift-free.
    """

    __slots__ = ("a", "b", "order_N")

    def __init__(self, a, b, n):
        if n <= 0:
            raise ValueError("torsion denominator must be positive")
        a %= n
        b %= n
        g = gcd(gcd(a, b), n)
        self.a = a // g
        self.b = b // g
        self.order_N = n // g

    @classmethod
    def zero(cls):
        return cls(0, 0, 1)

    @classmethod
    def parse(cls, text):
        """Parse CLI syntax: ``0`` or ``a/N,b/N`` (either entry may be ``0``)."""
        text = text.strip()
        if text in ("0", "0,0"):
            return cls.zero()
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'a/N,b/N' or '0', got {text!r}")

        def frac(s):
            s = s.strip()
            if "/" in s:
                num, den = s.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(s))

        fa, fb = frac(parts[0]), frac(parts[1])
        n = math.lcm(fa.denominator, fb.denominator)
        return cls(int(fa * n), int(fb * n), n)

    @property
    def order(self):
        return self.order_N

    def is_zero(self):
        return self.order_N == 1

    def key(self):
        return (self.a, self.b, self.order_N)

    def __eq__(self, other):
        return isinstance(other, TorsionPoint) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __mul__(self, m):
        if not isinstance(m, int):
            return NotImplemented
        return TorsionPoint(self.a * m, self.b * m, self.order_N)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, TorsionPoint):
            return NotImplemented
        n = math.lcm(self.order_N, other.order_N)
        return TorsionPoint(
            self.a * (n // self.order_N) + other.a * (n // other.order_N),
            self.b * (n // self.order_N) + other.b * (n // other.order_N),
            n,
        )

    def __neg__(self):
        return TorsionPoint(-self.a, -self.b, self.order_N)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"TorsionPoint({self.a}/{self.order_N}, {self.b}/{self.order_N})"

    def as_text(self):
        n = self.order_N
        return "0" if self.is_zero() else f"{self.a}/{n},{self.b}/{n}"


def nonzero_torsion(d):
    """The d^2 - 1 nonzero d-torsion points in a fixed deterministic order."""
    return [TorsionPoint(a, b, d) for a in range(d) for b in range(d) if (a, b) != (0, 0)]


def pairing_exponent(s: TorsionPoint, t: TorsionPoint) -> Fraction:
    """Exact rational e with <s_emb, t_emb> = exp(2*pi*i*e), basis-independent.

    For s = (a1*w1 + b1*w2)/N1 and t = (a2*w1 + b2*w2)/N2 the pairing exponent
    is (a1*b2 - a2*b1)/(N1*N2), because Im(w1*conj(w2)) = pi*A.
    """
    num = s.a * t.b - t.a * s.b
    return Fraction(num, s.order_N * t.order_N)


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


class Lattice:
    """Oriented lattice with calibrated theta kernel.

    Construction normalizes the basis so Im(omega1 * conj(omega2)) > 0
    (swapping the generators if needed), puts tau = omega1/omega2 in the
    upper half plane, and calibrates eta1, eta2, e2star once via q-series on
    Z + tau*Z.  Instances are immutable; every method is pure and safe to
    call concurrently.
    """

    __slots__ = (
        "ctx",
        "omega1",
        "omega2",
        "tau",
        "area_A",
        "eta1",
        "eta2",
        "e2star",
        "legendre_sign",
        "_c",
        "_im_tau",
        "_re_tau",
        "_A_tau",
        "_eta_one_norm",
        "_eta_tau_norm",
        "_e2star_norm",
        "_Q",
        "_Q_quarter",
        "_q",
        "_theta1p0",
        "_min_norm",
        "_inv_c",
        "_root_cache",
        "_work_bits",
    )

    def __init__(self, omega1, omega2, ctx: PrecisionContext | None = None):
        self.ctx = ctx if ctx is not None else DEFAULT_CTX
        work = self.ctx.prec_bits + _CALIBRATION_GUARD
        self._work_bits = work
        self._root_cache = {}
        with B.workprec(work):
            w1, w2 = B.C(omega1), B.C(omega2)
            orient = B.im(w1 * B.conj(w2))
            if B.absval(orient) == 0:
                raise ValueError("periods are R-linearly dependent")
            if orient < 0:
                w1, w2 = w2, w1
            self.omega1, self.omega2 = w1, w2
            self._c = w2
            tau = w1 / w2
            self.tau = tau
            self._re_tau = B.re(tau)
            self._im_tau = B.im(tau)
            if float(self._im_tau) < 0.05:
                raise PrecisionBudget(
                    "Im(tau) < 0.05 after orientation; q-series evaluation is not "
                    "practical this close to the real axis (lattice basis reduction "
                    "is out of scope)"
                )
            pi = B.pi()
            self._A_tau = self._im_tau / pi
            self.area_A = B.im(w1 * B.conj(w2)) / pi

            i_pi_tau = B.C(0, 1) * pi * tau
            self._Q = B.exp(i_pi_tau)  # nome exp(i*pi*tau)
            self._Q_quarter = B.exp(i_pi_tau / 4)
            self._q = B.exp(2 * i_pi_tau)
            self._inv_c = 1 / self._c

            nterms = self.ctx.series_terms_for(float(self._im_tau), extra_bits=_CALIBRATION_GUARD)

            # eta(1) on Z + tau*Z from the weight-two Lambert series.
            lam = B.C(0)
            qn = B.C(1)
            for n in range(1, nterms + 1):
                qn = qn * self._q
                lam += n * qn / (1 - qn)
            self._eta_one_norm = pi * pi / 3 * (1 - 24 * lam)

            # eta(tau), computed independently through the zeta q-series at
            # tau/2 so the Legendre relation is a real cross-check.
            self._eta_tau_norm = 2 * self._zeta_series_norm(tau / 2, work + 16)

            self._e2star_norm = self._eta_one_norm - 1 / self._A_tau

            # theta1'(0) = 2 * sum (-1)^n (2n+1) Q^((n+1/2)^2)
            acc = B.C(0)
            qpow = self._Q_quarter
            step = self._Q * self._Q
            fac = step  # Q^{(n+3/2)^2 - (n+1/2)^2} = Q^{2n+2}
            sign = 1
            n = 0
            while n <= nterms + 4:
                acc += sign * (2 * n + 1) * qpow
                qpow = qpow * fac
                fac = fac * step
                sign = -sign
                n += 1
            self._theta1p0 = 2 * acc

            # rescale normalized invariants to the given basis
            c = self._c
            self.eta1 = self._eta_tau_norm / c
            self.eta2 = self._eta_one_norm / c
            self.e2star = self._e2star_norm / (c * c)
            res = self.eta1 * self.omega2 - self.eta2 * self.omega1
            self.legendre_sign = 1 if B.im(res) > 0 else -1

            m1 = min(B.norm(w1), B.norm(w2), B.norm(w1 + w2), B.norm(w1 - w2))
            self._min_norm = m1

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_tau(cls, tau, ctx=None):
        """Lattice Z + tau*Z (constructed as tau*Z + 1*Z, oriented)."""
        prec = (ctx or DEFAULT_CTX).prec_bits + _CALIBRATION_GUARD
        with B.workprec(prec):
            return cls(B.C(tau), B.C(1), ctx)

    @classmethod
    def square(cls, ctx=None):
        """Z + iZ."""
        return cls.from_tau(B.C(0, 1), ctx)

    @classmethod
    def hexagonal(cls, ctx=None):
        """Z + rho*Z with rho = (1 + i*sqrt(3))/2."""
        prec = (ctx or DEFAULT_CTX).prec_bits + _CALIBRATION_GUARD
        with B.workprec(prec):
            rho = (B.C(1) + B.C(0, 1) * B.sqrt(B.R(3))) / 2
            return cls(rho, B.C(1), ctx)

    def cache_key(self):
        """Exact serialization key for the quasi-period cache."""
        with B.workprec(self._work_bits):
            return (
                B.to_hex(B.re(self.omega1)),
                B.to_hex(B.im(self.omega1)),
                B.to_hex(B.re(self.omega2)),
                B.to_hex(B.im(self.omega2)),
                self.ctx.prec_bits,
            )

    def __repr__(self):
        with B.workprec(53):
            return f"Lattice(tau={complex(B.C(self.tau)):.6g}, prec={self.ctx.prec_bits})"

    # -- basic geometry ------------------------------------------------------

    def scale_length(self):
        """Length of the shortest basis-adjacent vector (pole-guard scale)."""
        return B.sqrt(self._min_norm)

    def embed(self, t: TorsionPoint):
        """Complex embedding (a*omega1 + b*omega2)/N at current precision."""
        return (t.a * self.omega1 + t.b * self.omega2) / t.order_N

    def lattice_vector(self, m, n):
        return m * self.omega1 + n * self.omega2

    def coords(self, z):
        """Real coordinates (x, y) with z = x*omega1 + y*omega2."""
        z = B.C(z)
        # x = Im(z * conj(w2)) / Im(w1 * conj(w2)),  y = Im(w1 * conj(z)) / same
        den = B.im(self.omega1 * B.conj(self.omega2))
        x = B.im(z * B.conj(self.omega2)) / den
        y = B.im(self.omega1 * B.conj(z)) / den
        return x, y

    def reduce(self, z):
        """(z0, m, n) with z = z0 + m*omega1 + n*omega2, z0 in the centered cell."""
        x, y = self.coords(z)
        m, n = B.round_int(x), B.round_int(y)
        return B.C(z) - self.lattice_vector(m, n), m, n

    def dist_to_lattice_sq(self, z):
        """Squared distance from z to the nearest lattice point."""
        z0, _, _ = self.reduce(z)
        best = B.norm(z0)
        for dm in (-1, 0, 1):
            for dn in (-1, 0, 1):
                if dm or dn:
                    best = min(best, B.norm(z0 - self.lattice_vector(dm, dn)))
        return best

    def in_lattice(self, z, slack_bits=None):
        bits = self.ctx.prec_bits // 2 if slack_bits is None else slack_bits
        return self.dist_to_lattice_sq(z) < self._min_norm * B.R(2) ** (-2 * bits)

    def root_of_unity(self, num, den):
        """exp(2*pi*i*num/den) from a per-denominator table (exact torsion characters)."""
        num %= den
        key = (den, B.getprec())
        table = self._root_cache.get(key)
        if table is None:
            two_pi_i = 2 * B.C(0, 1) * B.pi()
            table = [B.exp(two_pi_i * k / den) for k in range(den)]
            self._root_cache[key] = table
        return table[num]

    def pairing(self, z, w):
        """<z, w> = exp((z*conj(w) - w*conj(z))/A); unimodular, antisymmetric."""
        z, w = B.C(z), B.C(w)
        expo = B.C(0, 2 * B.im(z * B.conj(w))) / self.area_A
        return B.exp(expo)

    # -- q-series kernels on the normalized lattice Z + tau*Z ---------------

    def _nterms(self, extra_bits=0.0):
        return self.ctx.series_terms_for(float(self._im_tau), extra_bits=extra_bits)

    def _theta1_series(self, v, tail_bits):
        """Jacobi theta1(v | tau) by direct summation (no argument reduction).

        theta1(v) = -i * sum_n (-1)^n Q^((n+1/2)^2) (u^(2n+1) - u^-(2n+1))
        with u = exp(i*v); the Q-power and the uing powers are maintained by
        two-term recurrences, so each term costs four multiplications.
        """
        acc = B.C(0)
        qpow = self._Q_quarter
        step = self._Q * self._Q
        fac = step  # Q^{(n+3/2)^2-(n+1/2)^2} = Q^{2n+2}
        u = B.exp(B.C(0, 1) * v)
        u2 = u * u
        u2i = 1 / u2
        w_pos = u  # u^{2n+1}
        w_neg = 1 / u
        thresh2 = B.R(2) ** (-2 * int(tail_bits))
        maxnorm = B.R(1)
        n = 0
        small_run = 0
        while True:
            term = qpow * (w_pos - w_neg)
            acc = acc + term if not (n & 1) else acc - term
            mag2 = B.norm(term)
            if mag2 > maxnorm:
                maxnorm = mag2
            if mag2 < thresh2 * maxnorm:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
            qpow = qpow * fac
            fac = fac * step
            w_pos = w_pos * u2
            w_neg = w_neg * u2i
            n += 1
            if n > 20000:
                raise PrecisionBudget("theta1 series did not converge (Im tau too small?)")
        return B.C(0, -1) * acc

    def _theta_norm_raw(self, zn, tail_bits):
        """Normalized theta on Z + tau*Z at zn, direct series, no reduction."""
        pi = B.pi()
        v = pi * zn
        pref = B.exp(zn * zn / (2 * self._A_tau))
        return pref * self._theta1_series(v, tail_bits) / (pi * self._theta1p0)

    def _sigma_norm_raw(self, zn, tail_bits):
        pi = B.pi()
        v = pi * zn
        pref = B.exp(self._eta_one_norm * zn * zn / 2)
        return pref * self._theta1_series(v, tail_bits) / (pi * self._theta1p0)

    def _zeta_series_norm(self, zn, tail_bits):
        """Weierstrass zeta on Z + tau*Z (no reduction; |Im zn| must be < Im tau).

        The Lambert terms decay like exp(-n*(2*pi*Im tau - 2*pi*|Im zn|}), so
        the loop is adaptive with a deterministic two-small-terms stop rule.
        """
        pi = B.pi()
        i = B.C(0, 1)
        w = B.exp(2 * i * pi * zn)  # e^{2 pi i zn}
        cot = i * (w + 1) / (w - 1)
        acc = B.C(0)
        qn = B.C(1)
        wp = B.C(1)
        wm = B.C(1)
        winv = 1 / w
        thresh = B.R(2) ** (-int(tail_bits))
        small_run = 0
        n = 0
        while True:
            n += 1
            qn = qn * self._q
            wp = wp * w
            wm = wm * winv
            term = qn / (1 - qn) * (wp - wm)
            acc += term
            if B.absval(B.re(term)) + B.absval(B.im(term)) < thresh:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
            if n > 40000:
                raise PrecisionBudget("zeta q-series did not converge (z too far from the cell?)")
        # sin(2 pi n zn) = (wp - wm)/(2i)
        return self._eta_one_norm * zn + pi * cot + 4 * pi * acc / (2 * i)

    @staticmethod
    def sign_multiplier(m, n):
        """alpha(m*omega1 + n*omega2) = (-1)^(m+n+mn); cross-checked by tests."""
        return -1 if (m + n + m * n) % 2 else 1

    # -- public evaluators (caller sets working precision) ------------------

    def theta(self, z):
        """Normalized theta at z: reduce to the centered cell, then q-series."""
        zn = B.C(z) * self._inv_c
        zn0, m, n = self._reduce_norm(zn)
        val = self._theta_norm_raw(zn0, B.getprec() + 16)
        if m or n:
            g = m * self.tau + n
            law = B.exp((zn0 * B.conj(g) + B.norm(g) / 2) / self._A_tau)
            val = self.sign_multiplier(m, n) * law * val
        return self._c * val

    def theta_raw(self, z, guard_hint=0):
        """theta at z via the unreduced series (independent-oracle path).

        Works at elevated precision to absorb the cancellation that grows
        quadratically with |Im(z/c)|; used by the transformation-law checks,
        which must not reuse the reduction law they are checking.
        """
        prec = B.getprec()
        with B.workprec(prec + 32):
            zn = B.C(z) * self._inv_c
        imv = abs(float(B.im(zn))) * math.pi
        loss = int(1.6 * imv * imv / (math.pi * float(self._im_tau)) * 1.443) + 64
        with B.workprec(prec + loss + guard_hint):
            zn = B.C(z) * self._inv_c
            val = self._c * self._theta_norm_raw(zn, prec + loss)
        with B.workprec(prec):
            return B.C(val)

    def _reduce_norm(self, zn):
        x = B.im(zn) / self._im_tau
        y = B.re(zn) - x * self._re_tau
        m, n = B.round_int(x), B.round_int(y)
        return zn - (m * self.tau + n), m, n

    def sigma(self, z):
        """Weierstrass sigma at z (odd; simple zeros exactly on the lattice)."""
        zn = B.C(z) * self._inv_c
        zn0, m, n = self._reduce_norm(zn)
        val = self._sigma_norm_raw(zn0, B.getprec() + 16)
        if m or n:
            g = m * self.tau + n
            eta_g = m * self._eta_tau_norm + n * self._eta_one_norm
            val = self.sign_multiplier(m, n) * B.exp(eta_g * (zn0 + g / 2)) * val
        return self._c * val

    def _pole_guard(self, z, what):
        if self.in_lattice(z):
            raise PoleEncountered(f"{what} has a pole at a lattice point (z = {z})")

    def log_derivative(self, z):
        """Z(z) = theta'(z)/theta(z) = zeta_w(z) - e2star*z."""
        self._pole_guard(z, "theta'/theta")
        zn = B.C(z) * self._inv_c
        zn0, m, n = self._reduce_norm(zn)
        val = self._zeta_series_norm(zn0, B.getprec() + 16) - self._e2star_norm * zn0
        if m or n:
            g = m * self.tau + n
            val += B.conj(g) / self._A_tau
        return val / self._c

    def zeta_w(self, z):
        """Weierstrass zeta at z (quasi-periodic with eta1, eta2)."""
        self._pole_guard(z, "zeta")
        zn = B.C(z) * self._inv_c
        zn0, m, n = self._reduce_norm(zn)
        val = self._zeta_series_norm(zn0, B.getprec() + 16)
        if m or n:
            val += m * self._eta_tau_norm + n * self._eta_one_norm
        return val / self._c


# ---------------------------------------------------------------------------
# spec-level operations (thin wrappers that manage working precision)
# ---------------------------------------------------------------------------


def pairing(z, w, lattice: Lattice, ctx: PrecisionContext | None = None):
    """<z, w> = exp((z*conj(w) - w*conj(z))/A(L)); modulus one on finite inputs."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        return lattice.pairing(z, w)


def sigma(z, lattice: Lattice, ctx: PrecisionContext | None = None):
    """Weierstrass sigma(z; L): odd, sigma(z) = z + O(z^5) near the origin."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        return lattice.sigma(z)


def theta(z, lattice: Lattice, ctx: PrecisionContext | None = None):
    """Normalized theta: exp(-e2star/2 z^2) sigma(z), with theta'(0) = 1."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        return lattice.theta(z)


def log_derivative_Z(z, lattice: Lattice, ctx: PrecisionContext | None = None):
    """theta'(z)/theta(z); raises PoleEncountered too close to the lattice."""
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        return lattice.log_derivative(z)


def theta_transform_check(gamma, z, lattice: Lattice, ctx: PrecisionContext | None = None):
    """Check theta(z+g) = alpha(g) exp(z*conj(g)/A + |g|^2/(2A)) theta(z).

    ``gamma`` is an integer coefficient pair (m, n).  Returns
    ``(alpha, defect)`` where alpha in {+1, -1} is the measured sign and
    defect the relative residual of the law.  Both sides are evaluated with
    the unreduced series so the check is independent of the reduction path.
    """
    ctx = ctx or lattice.ctx
    m, n = gamma
    with B.workprec(ctx.work_bits()):
        g = lattice.lattice_vector(m, n)
        zc = B.C(z)
        lhs = lattice.theta_raw(zc + g)
        law = B.exp((zc * B.conj(g) + B.norm(g) / 2) / lattice.area_A)
        rhs0 = law * lattice.theta_raw(zc)
        ratio = lhs / rhs0
        alpha = 1 if B.absval(ratio - 1) < B.absval(ratio + 1) else -1
        defect = B.absval(lhs - alpha * rhs0) / B.absval(lhs)
        return alpha, defect


def sigma_product(z, lattice: Lattice, radius: int, ctx: PrecisionContext | None = None):
    """Truncated Weierstrass product for sigma: slow independent oracle.

    sigma(z) ~ z * prod_{0 < max(|m|,|n|) <= radius} (1 - z/g) exp(z/g + z^2/(2g^2)).
    Converges only polynomially in ``radius``; test use only.
    """
    ctx = ctx or lattice.ctx
    with B.workprec(ctx.work_bits()):
        zc = B.C(z)
        acc = B.C(zc)
        for shell in range(1, radius + 1):
            shell_prod = B.C(1)
            for m, n in _shell_coords(shell):
                g = lattice.lattice_vector(m, n)
                w = zc / g
                shell_prod *= (1 - w) * B.exp(w + w * w / 2)
            acc *= shell_prod
        return acc


def _shell_coords(shell):
    """Integer pairs with max(|m|, |n|) == shell, in a fixed deterministic order."""
    if shell == 0:
        return [(0, 0)]
    coords = []
    for m in range(-shell, shell + 1):
        if abs(m) == shell:
            coords.extend((m, n) for n in range(-shell, shell + 1))
        else:
            coords.append((m, -shell))
            coords.append((m, shell))
    return coords
