"""Working-precision bookkeeping threaded through every analytic computation."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import backend as B
from .errors import PrecisionBudget

MIN_PREC_BITS = 64


@dataclass(frozen=True)
class PrecisionContext:
    """Precision budget for analytic evaluation.

    prec_bits   -- working binary precision (>= 64)
    sum_radius  -- hard cap on lattice-sum shell index max(|m|, |n|)
    q_terms     -- hard cap on theta/Eisenstein q-series terms (None = derive
                   from prec_bits and the lattice at the point of use)
    tol_rel     -- target relative tolerance; defaults to 2**(-prec_bits/2),
                   the scale all suite thresholds are expressed against
    """

    prec_bits: int = 256
    sum_radius: int = 400
    q_terms: int | None = None
    tol_rel: float | None = None

    def __post_init__(self):
        if self.prec_bits < MIN_PREC_BITS:
            raise ValueError(f"prec_bits must be >= {MIN_PREC_BITS}, got {self.prec_bits}")
        if self.sum_radius < 1:
            raise ValueError("sum_radius must be positive")
        if self.q_terms is not None and self.q_terms < 4:
            raise ValueError("q_terms must be at least 4 when given")
        if self.tol_rel is not None and not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")

    @property
    def tol(self):
        """Relative tolerance as a float (2**(-prec_bits/2) by default)."""
        return self.tol_rel if self.tol_rel is not None else 2.0 ** (-self.prec_bits // 2)

    def tolerance(self):
        """Relative tolerance as a backend real at working precision."""
        with B.workprec(self.prec_bits):
            if self.tol_rel is not None:
                return B.R(repr(self.tol_rel))
            return B.R(2) ** (-(self.prec_bits // 2))

    def work_bits(self, guard=32):
        return self.prec_bits + guard

    def series_terms_for(self, im_tau: float, extra_bits: float = 0.0):
        """Number of q-series terms so |q|**n < 2**-(prec_bits+extra).

        |q| = exp(-2*pi*Im(tau)); raises PrecisionBudget when an explicit
        q_terms cap is too small for the requested precision.
        """
        import math

        if im_tau <= 0:
            raise ValueError("Im(tau) must be positive")
        need = int(math.ceil((self.prec_bits + extra_bits + 16) * math.log(2) / (2 * math.pi * im_tau))) + 2
        if self.q_terms is not None and need > self.q_terms:
            raise PrecisionBudget(
                f"q-series needs {need} terms for {self.prec_bits} bits at Im(tau)={im_tau:.3g}, "
                f"but q_terms caps it at {self.q_terms}"
            )
        return need

    def scaled(self, factor: int) -> "PrecisionContext":
        """Same budgets at ``factor`` times the binary precision."""
        return PrecisionContext(
            prec_bits=self.prec_bits * factor,
            sum_radius=self.sum_radius,
            q_terms=self.q_terms,
            tol_rel=None if self.tol_rel is None else self.tol_rel ** factor,
        )


DEFAULT_CTX = PrecisionContext()
