"""Dense complex polynomials in two unknowns ``a`` and ``b``."""
from __future__ import annotations

import numpy as np


class BivariatePolynomial:
    """Polynomial ``sum c[p, q] a**p b**q`` with a dense coefficient matrix.

    The matrix is square, ``(bound + 1) x (bound + 1)``, where ``bound`` is
    an upper bound on the total degree.  Entries with ``p + q > bound`` are
    always zero.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 2:
            raise ValueError("coefficient array must be 2-D")
        n = max(c.shape)
        if c.shape != (n, n):
            c = np.pad(c, ((0, n - c.shape[0]), (0, n - c.shape[1])))
        c.flags.writeable = False
        self.coeffs = c

    # construction helpers
    @classmethod
    def zero(cls, bound=0):
        return cls(np.zeros((bound + 1, bound + 1)))

    @classmethod
    def constant(cls, c):
        return cls([[c]])

    @classmethod
    def linear(cls, ca, cb, c0):
        """``ca * a + cb * b + c0``."""
        return cls([[c0, cb], [ca, 0.0]])

    @classmethod
    def monomial(cls, p, q, c=1.0):
        out = np.zeros((p + q + 1, p + q + 1), dtype=complex)
        out[p, q] = c
        return cls(out)

    @property
    def bound(self):
        return self.coeffs.shape[0] - 1

    @property
    def degree(self):
        """Total degree; ``-1`` for the zero polynomial."""
        p, q = np.nonzero(self.coeffs)
        return int((p + q).max()) if p.size else -1

    def _padded(self, bound):
        c = np.zeros((bound + 1, bound + 1), dtype=complex)
        n = self.coeffs.shape[0]
        c[:n, :n] = self.coeffs
        return c

    def __add__(self, other):
        if not isinstance(other, BivariatePolynomial):
            other = BivariatePolynomial.constant(other)
        b = max(self.bound, other.bound)
        return BivariatePolynomial(self._padded(b) + other._padded(b))

    __radd__ = __add__

    def __neg__(self):
        return BivariatePolynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, BivariatePolynomial) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, BivariatePolynomial):
            return BivariatePolynomial(self.coeffs * other)
        n1, n2 = self.coeffs.shape[0], other.coeffs.shape[0]
        out = np.zeros((n1 + n2 - 1, n1 + n2 - 1), dtype=complex)
        for p, q in zip(*np.nonzero(self.coeffs)):
            out[p:p + n2, q:q + n2] += self.coeffs[p, q] * other.coeffs
        return BivariatePolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = BivariatePolynomial.constant(1.0)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, s):
        return BivariatePolynomial(self.coeffs * s)

    def deriv(self, var):
        """Partial derivative with respect to ``"a"`` (index 0) or ``"b"`` (index 1)."""
        axis = {"a": 0, "b": 1, 0: 0, 1: 1}[var]
        n = self.coeffs.shape[0]
        k = np.arange(1, n)
        if axis == 0:
            d = self.coeffs[1:, :] * k[:, None]
            d = np.vstack([d, np.zeros((1, n))])
        else:
            d = self.coeffs[:, 1:] * k[None, :]
            d = np.hstack([d, np.zeros((n, 1))])
        return BivariatePolynomial(d)

    def trimmed(self):
        """Copy whose bound equals the true degree."""
        d = max(self.degree, 0)
        return BivariatePolynomial(self.coeffs[:d + 1, :d + 1])

    def max_abs_coeff(self):
        return float(np.max(np.abs(self.coeffs)))

    def normalized(self):
        s = self.max_abs_coeff()
        return self if s == 0 else self.scale(1.0 / s)

    def __call__(self, a, b):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        n = self.coeffs.shape[0]
        e = np.arange(n)
        A = a[..., None] ** e
        B = b[..., None] ** e
        out = np.einsum("...p,pq,...q->...", A, self.coeffs, B)
        return out if out.ndim else complex(out)

    def __repr__(self):
        terms = [f"({self.coeffs[p, q]:.4g})a^{p}b^{q}" for p, q in zip(*np.nonzero(self.coeffs))]
        return "BivariatePolynomial(" + (" + ".join(terms) or "0") + ")"
