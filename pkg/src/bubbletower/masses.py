"""Blow-up mass tables, partial-sum identities and the rotational symmetry order."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ValidationError
from .spectrum import BetaSequence, SystemParams, beta_recurrence, compute_betas, eval_P

EVEN_TOL = 1e-9
MASS_RTOL = 1e-10


@dataclass(frozen=True)
class MassPair:
    """Local masses at the origin divided by 2*pi."""

    m1_over_2pi: float | Fraction
    m2_over_2pi: float | Fraction
    k: int
    orientation: str = "original"

    def as_tuple(self):
        return (self.m1_over_2pi, self.m2_over_2pi)


@dataclass(frozen=True)
class SymmetryInfo:
    even_index_set: frozenset
    chosen_m_ell: dict = field(hash=False)
    m: int


def _check_k(betas, k):
    if k < 1 or k > len(betas):
        raise ValidationError(f"k={k} outside 1..{len(betas)}")
    for ell in range(1, k + 1):
        if not betas[ell - 1] > 0:
            raise ValidationError(f"beta_{ell} = {betas[ell - 1]} is not positive")


def local_masses(betas: BetaSequence, k: int) -> MassPair:
    """Sums of odd- and even-indexed betas up to index k."""
    seq = betas.betas if isinstance(betas, BetaSequence) else tuple(betas)
    _check_k(seq, k)
    m1 = sum(seq[0:k:2], start=seq[0] * 0)
    m2 = sum(seq[1:k:2], start=seq[0] * 0)
    return MassPair(m1, m2, k)


def odd_partial_sum(params: SystemParams, n: int):
    """beta_1 + beta_3 + ... (n terms) through P_l(ab)."""
    if n == 0:
        return params.alpha1 * 0
    t = params.ab
    pn, pm = eval_P(n, t), eval_P(n - 1, t)
    if n % 2 == 1:
        return pn * (params.alpha1 * pn + params.a * params.alpha2 * pm)
    return params.a * pn * (params.b * params.alpha1 * pn + params.alpha2 * pm)


def even_partial_sum(params: SystemParams, n: int):
    """beta_2 + beta_4 + ... (n terms) through P_l(ab)."""
    if n == 0:
        return params.alpha1 * 0
    t = params.ab
    pn, pp = eval_P(n, t), eval_P(n + 1, t)
    if n % 2 == 1:
        return pn * (params.b * params.alpha1 * pp + params.alpha2 * pn)
    return params.b * pn * (params.alpha1 * pp + params.a * params.alpha2 * pn)


def local_masses_product(params: SystemParams, k: int) -> MassPair:
    """Masses as products of P_l(ab) values.

    The component-1 sum has ``(k+1)//2`` terms and the component-2 sum ``k//2``;
    the form of each product depends on the parity of that term count, i.e. on
    ``k mod 4``.
    """
    seq = beta_recurrence(params, k)
    _check_k(seq, k)
    return MassPair(odd_partial_sum(params, (k + 1) // 2), even_partial_sum(params, k // 2), k)


def verify_partial_sums(params: SystemParams, j: int) -> dict:
    """Residuals of the four partial-sum identities at index ``j``.

    Two readings of the summation bound are evaluated. Under ``"count"`` the
    bound is the number of summed terms (the sum over odd betas with bound
    2j+1 is beta_1 + ... + beta_{4j+1}); under ``"literal"`` the bound is the
    last value of the summation index. Identities are algebraic, so betas past
    k_max are used as produced by the recurrence.
    """
    if j < 0:
        raise ValidationError("j must be nonnegative")
    n_terms = {"count": (2 * j + 1, 2 * j + 2), "literal": (2 * j + 2, 2 * j + 3)}
    rhs = (
        odd_partial_sum(params, 2 * j + 1),
        odd_partial_sum(params, 2 * j + 2),
        even_partial_sum(params, 2 * j + 1),
        even_partial_sum(params, 2 * j + 2),
    )
    seq = beta_recurrence(params, 2 * (2 * j + 3))
    report = {"rhs": rhs}
    for reading, (n_a, n_b) in n_terms.items():
        lhs = (
            sum(seq[0 : 2 * n_a : 2]),
            sum(seq[0 : 2 * n_b : 2]),
            sum(seq[1 : 2 * n_a : 2]),
            sum(seq[1 : 2 * n_b : 2]),
        )
        report[reading] = {"lhs": lhs, "residuals": tuple(abs(x - y) for x, y in zip(lhs, rhs))}
    def _matches(reading):
        return all(
            abs(r) <= MASS_RTOL * max(1.0, abs(float(v)))
            for r, v in zip(report[reading]["residuals"], rhs)
        )
    report["matching"] = [name for name in n_terms if _matches(name)]
    return report


def enumerate_mass_table(params: SystemParams, k_limit: int | None = None) -> list:
    """All mass pairs for k up to k_max (or k_limit), in both orientations, deduplicated."""
    rows = []
    seen = set()
    for orientation, p in (("original", params), ("swapped", params.swapped())):
        seq = compute_betas(p, 1)
        kmax = seq.kmax
        if math.isinf(kmax) and k_limit is None:
            raise ValidationError("k_max is infinite; a finite k_limit is required")
        top = kmax if k_limit is None else min(kmax, k_limit)
        top = int(top)
        seq = compute_betas(p, top)
        for k in range(1, top + 1):
            pair = local_masses(seq, k)
            if orientation == "swapped":
                pair = MassPair(pair.m2_over_2pi, pair.m1_over_2pi, k, "swapped")
            key = _dedup_key(pair.as_tuple())
            if key not in seen:
                seen.add(key)
                rows.append(pair)
    return rows


def _dedup_key(pair):
    return tuple(v if isinstance(v, Fraction) else round(float(v), 9) for v in pair)


def _even_natural(q) -> bool:
    if isinstance(q, Fraction):
        return q.denominator == 1 and q > 0 and q.numerator % 2 == 0
    q = float(q)
    n = round(q)
    return abs(q - n) <= EVEN_TOL and n > 0 and n % 2 == 0


def symmetry_order(betas, divisors_only: bool = False) -> SymmetryInfo:
    """Minimal symmetry order m over admissible choices of m_l.

    For every l with beta_l an even natural number a positive integer m_l with
    beta_l / m_l not an even natural number is chosen, minimizing the lcm of
    the choices. ``divisors_only`` additionally restricts m_l to divisors of
    beta_l.
    """
    seq = betas.betas if isinstance(betas, BetaSequence) else tuple(betas)
    index = [ell for ell, b in enumerate(seq, start=1) if _even_natural(b)]
    if not index:
        return SymmetryInfo(frozenset(), {}, 1)
    values = {ell: seq[ell - 1] for ell in index}

    def feasible(ell, cand):
        beta = values[ell]
        if cand > 2 * beta:
            return False
        q = beta / cand if isinstance(beta, Fraction) else float(beta) / cand
        if _even_natural(q):
            return False
        if divisors_only:
            return (Fraction(beta) / cand).denominator == 1 if isinstance(beta, Fraction) else abs(
                float(beta) / cand - round(float(beta) / cand)) <= EVEN_TOL
        return True

    # The minimal lcm is the least m admitting a feasible divisor of m for every l.
    m = 1
    while True:
        chosen = {}
        for ell in index:
            cands = [d for d in range(1, m + 1) if m % d == 0 and feasible(ell, d)]
            if not cands:
                break
            chosen[ell] = cands[0]
        else:
            lcm = math.lcm(*chosen.values())
            if lcm == m:
                return SymmetryInfo(frozenset(index), chosen, m)
        m += 1


def domain_compatible(m: int) -> bool:
    """The unit disc is invariant under every rotation."""
    return True
