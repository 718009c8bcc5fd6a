"""Multivariate polynomials over named variables with integer coefficients.

Used both as the meaning of size expressions (after composing an
interpretation) and as the value assigned to unknown index symbols by the
solver.  A monomial is a sorted tuple of (variable, exponent) pairs; the
empty tuple is the constant monomial.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple

Monomial = Tuple[Tuple[str, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps: Dict[str, int] = {}
    for v, e in a:
        exps[v] = exps.get(v, 0) + e
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_key(m: Monomial):
    # Canonical display/search order: by total degree, then lexicographic.
    return (mono_degree(m), m)


class Polynomial:
    """Immutable polynomial; coefficients may be negative (differences)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[Monomial, int] = ()):
        clean = {m: c for m, c in dict(coeffs).items() if c != 0}
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Polynomial is immutable")

    @staticmethod
    def const(n: int) -> "Polynomial":
        return Polynomial({(): n} if n else {})

    @staticmethod
    def var(name: str) -> "Polynomial":
        return Polynomial({((name, 1),): 1})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) - c
        return Polynomial(out)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out: Dict[Monomial, int] = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial(out)

    def scale(self, k: int) -> "Polynomial":
        return Polynomial({m: k * c for m, c in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.coeffs.items())))

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.coeffs), default=0)

    def variables(self) -> set:
        return {v for m in self.coeffs for v, _ in m}

    def all_coeffs_nonneg(self) -> bool:
        return all(c >= 0 for c in self.coeffs.values())

    def constant_term(self) -> int:
        return self.coeffs.get((), 0)

    def compose(self, args: Mapping[str, "Polynomial"]) -> "Polynomial":
        """Substitute polynomials for variables (missing vars stay themselves)."""
        result = Polynomial.const(0)
        for m, c in self.coeffs.items():
            term = Polynomial.const(c)
            for v, e in m:
                base = args.get(v, Polynomial.var(v))
                for _ in range(e):
                    term = term * base
            result = result + term
        return result

    def evaluate(self, env: Mapping[str, int]) -> int:
        total = 0
        for m, c in self.coeffs.items():
            val = c
            for v, e in m:
                val *= env.get(v, 0) ** e
            total += val
        return total

    def monomials_sorted(self) -> Iterable[Tuple[Monomial, int]]:
        return sorted(self.coeffs.items(), key=lambda mc: _mono_key(mc[0]))

    def pretty(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for m, c in self.monomials_sorted():
            factors = []
            for v, e in m:
                factors.extend([v] * e)
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        out = " + ".join(parts)
        return out.replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Polynomial({self.pretty()})"
