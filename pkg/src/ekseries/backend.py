"""Arbitrary-precision arithmetic backend.

Every analytic computation in this package runs on one of two interchangeable
multiprecision cores:

* ``gmpy2`` -- compiled MPFR/MPC kernels (the fast path), and
* ``mpmath`` -- a pure-Python fallback with the same semantics.

The backend is chosen once at import time: ``gmpy2`` when importable,
otherwise ``mpmath``.  Set ``EKSERIES_BACKEND=mpmath`` (or ``gmpy2``) to force
a choice; ``benchmarks/bench_backends.py`` compares the two on the hot
kernels.

All code in this package goes through the small function set below plus
ordinary arithmetic operators, so the two cores stay drop-in compatible.
Precision is the *thread-current* working precision in bits; use
:func:`workprec` around any computation.  Note the mpmath core keeps a single
global precision state, so concurrent workers should prefer the gmpy2 core.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

_requested = os.environ.get("EKSERIES_BACKEND", "").strip().lower()
if _requested not in ("", "gmpy2", "mpmath"):
    raise ImportError(f"EKSERIES_BACKEND must be 'gmpy2' or 'mpmath', got {_requested!r}")

if _requested in ("", "gmpy2"):
    try:
        import gmpy2

        BACKEND = "gmpy2"
    except ImportError:
        if _requested == "gmpy2":
            raise
        BACKEND = "mpmath"
else:
    BACKEND = "mpmath"

if BACKEND == "mpmath":
    import mpmath


if BACKEND == "gmpy2":

    @contextmanager
    def workprec(bits):
        """Run a block at ``bits`` of working precision (thread-local)."""
        ctx = gmpy2.get_context()
        old = ctx.precision
        ctx.precision = int(bits)
        try:
            yield
        finally:
            gmpy2.get_context().precision = old

    def getprec():
        return gmpy2.get_context().precision

    def R(x):
        """Real number at current precision from int/str/float/real."""
        return gmpy2.mpfr(x)

    def C(re, im=None):
        """Complex number at current precision.

        One argument: accepts mpc/complex/str/real.  Two arguments: the real
        and imaginary parts, each real-valued.
        """
        if im is None:
            return gmpy2.mpc(re)
        return gmpy2.mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))

    def re(z):
        return z.real if isinstance(z, gmpy2.mpc) else gmpy2.mpfr(z)

    def im(z):
        return z.imag if isinstance(z, gmpy2.mpc) else gmpy2.mpfr(0)

    def conj(z):
        return gmpy2.mpc(z).conjugate() if not isinstance(z, gmpy2.mpc) else z.conjugate()

    exp = gmpy2.exp
    sin = gmpy2.sin
    cos = gmpy2.cos
    log = gmpy2.log
    sqrt = gmpy2.sqrt
    atan2 = gmpy2.atan2

    def norm(z):
        """|z|^2 as a real number."""
        if isinstance(z, gmpy2.mpc):
            return gmpy2.norm(z)
        x = gmpy2.mpfr(z)
        return x * x

    def absval(z):
        return abs(z)

    def pi():
        return gmpy2.const_pi()

    def round_int(x):
        """Round a real to the nearest integer (ties to even)."""
        return int(gmpy2.rint(gmpy2.mpfr(x)))

    def gamma_upper(s, x):
        """Upper incomplete gamma of real arguments at current precision.

        MPFR's gamma_inc covers most of the (s, x) range; anything it cannot
        do (it can be unstable for very negative s) falls back to mpmath via
        exact mantissa/exponent conversion.
        """
        s, x = gmpy2.mpfr(s), gmpy2.mpfr(x)
        try:
            val = gmpy2.gamma_inc(s, x)
            if gmpy2.is_finite(val):
                return val
        except (ValueError, OverflowError):
            pass
        import mpmath

        old = mpmath.mp.prec
        mpmath.mp.prec = gmpy2.get_context().precision + 16
        try:
            res = mpmath.gammainc(_mpfr_to_mpmath(s), _mpfr_to_mpmath(x))
            return _mpmath_to_mpfr(res)
        finally:
            mpmath.mp.prec = old

    def _mpfr_to_mpmath(x):
        import mpmath

        if gmpy2.is_zero(x):
            return mpmath.mpf(0)
        man, exp = x.as_mantissa_exp()
        return mpmath.mpf(int(man)) * mpmath.power(2, int(exp))

    def _mpmath_to_mpfr(v):
        sign, man, exp, _ = v._mpf_
        r = gmpy2.mpfr(int(man)) * gmpy2.mpfr(2) ** int(exp)
        return -r if sign else r

    def gamma(s):
        """Gamma function of a real at current precision."""
        return gmpy2.gamma(gmpy2.mpfr(s))

    def is_finite(z):
        if isinstance(z, gmpy2.mpc):
            return gmpy2.is_finite(z.real) and gmpy2.is_finite(z.imag)
        return gmpy2.is_finite(gmpy2.mpfr(z))

    def real_digits(x, ndigits):
        """(digit string, decimal exponent, sign) of a real; deterministic."""
        x = gmpy2.mpfr(x)
        if gmpy2.is_zero(x):
            return "0" * ndigits, 0, False
        digs, expo, _ = gmpy2.digits(x, 10, ndigits)
        neg = digs.startswith("-")
        if neg:
            digs = digs[1:]
        return digs, expo, neg

    def to_hex(x):
        """Exact hex serialization of a real (round-trips bitwise)."""
        return format(gmpy2.mpfr(x), "a")

    def from_hex(s):
        return gmpy2.mpfr(s)

else:  # mpmath

    @contextmanager
    def workprec(bits):
        """Run a block at ``bits`` of working precision (global for mpmath)."""
        old = mpmath.mp.prec
        mpmath.mp.prec = int(bits)
        try:
            yield
        finally:
            mpmath.mp.prec = old

    def getprec():
        return mpmath.mp.prec

    def R(x):
        if isinstance(x, str):
            return mpmath.mpf(x.replace("_", ""))
        return mpmath.mpf(x)

    def C(re, im=None):
        if im is None:
            if isinstance(re, str):
                return mpmath.mpc(mpmath.mpmathify(re.replace(" ", "")))
            return mpmath.mpc(re)
        return mpmath.mpc(R(re), R(im))

    def re(z):
        return mpmath.mpf(z.real) if isinstance(z, mpmath.mpc) else mpmath.mpf(z)

    def im(z):
        return mpmath.mpf(z.imag) if isinstance(z, mpmath.mpc) else mpmath.mpf(0)

    def conj(z):
        return mpmath.conj(z)

    exp = mpmath.exp
    sin = mpmath.sin
    cos = mpmath.cos
    log = mpmath.log
    sqrt = mpmath.sqrt
    atan2 = mpmath.atan2

    def norm(z):
        if isinstance(z, mpmath.mpc):
            return z.real * z.real + z.imag * z.imag
        x = mpmath.mpf(z)
        return x * x

    def absval(z):
        return abs(z)

    def pi():
        return mpmath.pi()

    def round_int(x):
        return int(mpmath.nint(mpmath.mpf(x)))

    def gamma_upper(s, x):
        return mpmath.gammainc(mpmath.mpf(s), mpmath.mpf(x))

    def gamma(s):
        return mpmath.gamma(mpmath.mpf(s))

    def is_finite(z):
        return mpmath.isfinite(z)

    def real_digits(x, ndigits):
        """(digit string, decimal exponent, sign); value = 0.digits * 10**expo."""
        x = mpmath.mpf(x)
        if x == 0:
            return "0" * ndigits, 0, False
        sign, digs, expo = mpmath.libmp.to_digits_exp(x._mpf_, ndigits + 10)
        # to_digits_exp returns unrounded digits; round to ndigits by hand
        digs = digs.ljust(ndigits + 1, "0")
        keep, nxt = digs[:ndigits], digs[ndigits]
        if nxt >= "5":
            rounded = str(int(keep) + 1)
            if len(rounded) > ndigits:  # carry over 999..9
                rounded = rounded[:ndigits]
                expo += 1
            keep = rounded.zfill(ndigits)
        return keep, expo + 1, sign == "-"

    def to_hex(x):
        sign, man, expo, bc = mpmath.mpf(x)._mpf_
        m = hex(man)
        return f"{'-' if sign else ''}{m}p{expo}"

    def from_hex(s):
        neg = s.startswith("-")
        if neg:
            s = s[1:]
        mant, expo = s.split("p")
        val = mpmath.mpf(int(mant, 16)) * mpmath.power(2, int(expo))
        return -val if neg else val


def decimal_str(x, ndigits):
    """Deterministic scientific-notation string with ``ndigits`` digits."""
    digs, expo, neg = real_digits(x, ndigits)
    if set(digs) == {"0"}:
        return "0"
    head, tail = digs[0], digs[1:].rstrip("0")
    mant = head if not tail else f"{head}.{tail}"
    return f"{'-' if neg else ''}{mant}e{expo - 1:+d}"
