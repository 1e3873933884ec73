"""Gaussian suffix-rate bounds, constant-gap certificates, parameter sweeps.

Outer and inner bounds are both suffix-sum regions over SNR/INR.  Their
per-k difference is certified against the closed-form budget
``(K - k + 1) * (log2 K + 1/2)`` bits, which depends on the user count
only; the certificate also verifies the per-term inequality
``zeta_i - xi_i <= 0.5 * log2(i + 1)`` that the budget rests on.

The published outer bound admits two readings of one subscript in the
subtrahend's denominator sum.  The default ("consistent") uses the
interference term of the summation variable, which is the only reading
the gap algebra goes through with; the verbatim alternative ("printed")
keeps the fixed interference index and is available for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Iterable, Sequence

import numpy as np

from .channel import GaussianParams
from .errors import InvariantViolation
from .regions import SuffixRateRegion

GAP_TOL = 1e-9
VARIANTS = ("consistent", "printed")


def _upsilon(g: GaussianParams) -> list[float]:
    """ups[i] = sum_{j=i}^K (SNR_j + INR_j), 1-based, ups[K+1] = 0."""
    snr, inr = g.snr, g.inr
    ups = [0.0] * (g.K + 2)
    for i in range(g.K, 0, -1):
        ups[i] = ups[i + 1] + snr[i - 1] + inr[i - 1]
    return ups


def _half_log2_pos(x: float) -> float:
    return 0.5 * math.log2(x) if x > 1.0 else 0.0


def outer_bound(g: GaussianParams, variant: str = "consistent") -> SuffixRateRegion:
    """Converse suffix bounds on achievable rates, bits per channel use."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    snr, inr = g.snr, g.inr
    ups = _upsilon(g)
    bounds = []
    for k in range(1, g.K + 1):
        b = 0.5 * math.log2(1.0 + 2.0 * ups[k + 1] + snr[k - 1])
        for i in range(k + 1, g.K + 1):
            if variant == "consistent":
                den = 1.0 + 2.0 * ups[i + 1] + snr[i - 1]
            else:
                den = (1.0 + 2.0 * (sum(snr[i:]) + (g.K - i) * inr[i - 1])
                       + snr[i - 1])
            b -= _half_log2_pos(inr[i - 1] / den)
        # the expression is provably nonnegative; absorb float dust only
        bounds.append(0.0 if -1e-12 < b < 0.0 else b)
    return SuffixRateRegion(tuple(bounds))


def inner_bound(g: GaussianParams) -> SuffixRateRegion:
    """Achievable suffix bounds of the layered scheme, bits per channel use.

    Evaluated directly over SNR/INR; agrees with the suffix-summed layer
    rate caps of :mod:`dirtymac.scheme` to float identity, which the test
    suite checks as a cross-route consistency property.
    """
    snr = g.snr
    ups = _upsilon(g)
    terms = []
    for i in range(1, g.K + 1):
        snr_next = snr[i] if i < g.K else 0.0
        num = 1.0 + i * snr[i - 1] + ups[i + 1]
        den = i * (1.0 + i * snr_next + ups[i + 1])
        terms.append(_half_log2_pos(num / den))
    bounds = []
    total = 0.0
    for t in reversed(terms):
        total += t
        bounds.append(total)
    return SuffixRateRegion(tuple(reversed(bounds)))


@dataclass(frozen=True)
class GapCertificate:
    """Inner/outer bounds with the audited constant-gap budget.

    ``upsilon[i-1]``, ``zeta[i-2]``, ``xi[i-2]`` follow the 1-based user
    indexing (zeta/xi exist for i in 2..K only); ``gap_bounds[k-1]`` is
    the budget for suffix constraint k.
    """

    inner: tuple[float, ...]
    outer: tuple[float, ...]
    gaps: tuple[float, ...]
    gap_bounds: tuple[float, ...]
    upsilon: tuple[float, ...]
    zeta: tuple[float, ...]
    xi: tuple[float, ...]
    per_term_bounds: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.gaps)

    def to_dict(self) -> dict:
        return {
            "inner": list(self.inner), "outer": list(self.outer),
            "gaps": list(self.gaps), "gap_bounds": list(self.gap_bounds),
            "upsilon": list(self.upsilon), "zeta": list(self.zeta),
            "xi": list(self.xi), "per_term_bounds": list(self.per_term_bounds),
        }


def gap_certificate(g: GaussianParams, variant: str = "consistent") -> GapCertificate:
    """Compute and audit the constant-gap certificate for one instance.

    Raises :class:`InvariantViolation` if any audited inequality fails:
    inner above outer, a gap over its budget, or a per-term bound breach.
    """
    inner = inner_bound(g).bounds
    outer = outer_bound(g, variant).bounds
    ups = _upsilon(g)
    snr, inr = g.snr, g.inr
    K = g.K
    zeta, xi, per_term = [], [], []
    for i in range(2, K + 1):
        base = 1.0 + ups[i + 1] + i * snr[i - 1]
        zeta.append(0.5 * math.log2((base + inr[i - 1]) / base))
        xi.append(_half_log2_pos(inr[i - 1] / (1.0 + ups[i + 1] + snr[i - 1])))
        per_term.append(0.5 * math.log2(i + 1))
    gaps = tuple(o - b for o, b in zip(outer, inner))
    gap_bounds = tuple((K - k + 1) * (math.log2(K) + 0.5) for k in range(1, K + 1))
    for k, (gap, bound) in enumerate(zip(gaps, gap_bounds), start=1):
        if gap < -GAP_TOL:
            raise InvariantViolation(
                f"inner bound exceeds outer at k={k}: gap {gap}")
        if gap > bound + GAP_TOL:
            raise InvariantViolation(
                f"gap {gap} over budget {bound} at k={k}")
    for i, (z, x, b) in enumerate(zip(zeta, xi, per_term), start=2):
        if z - x > b + GAP_TOL:
            raise InvariantViolation(
                f"per-term bound breached at i={i}: {z - x} > {b}")
    return GapCertificate(inner=inner, outer=outer, gaps=gaps,
                          gap_bounds=gap_bounds, upsilon=tuple(ups[1:K + 2]),
                          zeta=tuple(zeta), xi=tuple(xi),
                          per_term_bounds=tuple(per_term))


# ---------------------------------------------------------------------------
# vectorized sweep

def _vec_half_log2_pos(x: np.ndarray) -> np.ndarray:
    return 0.5 * np.log2(np.maximum(x, 1.0))


def _vec_suffix(arr: np.ndarray) -> np.ndarray:
    """suffix[:, i] = sum over columns i..K-1; one extra zero column."""
    out = np.zeros((arr.shape[0], arr.shape[1] + 1))
    out[:, :-1] = np.cumsum(arr[:, ::-1], axis=1)[:, ::-1]
    return out


def _vec_bounds(snr: np.ndarray, inr: np.ndarray, variant: str):
    """Outer/inner bounds plus per-term gap pieces for a grid of instances.

    snr/inr have shape (rows, K); returns dict of arrays.
    """
    R, K = snr.shape
    ups = _vec_suffix(snr + inr)  # (R, K+1); ups[:, i] = Upsilon_{i+1}
    # outer: lead term minus suffix-summed subtrahends
    sub = np.zeros((R, K + 1))
    for i in range(2, K + 1):
        c = i - 1
        if variant == "consistent":
            den = 1.0 + 2.0 * ups[:, i] + snr[:, c]
        else:
            den = (1.0 + 2.0 * (snr[:, i:].sum(axis=1) + (K - i) * inr[:, c])
                   + snr[:, c])
        sub[:, c] = _vec_half_log2_pos(inr[:, c] / den)
    sub_suffix = _vec_suffix(sub[:, :K])
    outer = np.empty((R, K))
    for k in range(1, K + 1):
        lead = 0.5 * np.log2(1.0 + 2.0 * ups[:, k] + snr[:, k - 1])
        outer[:, k - 1] = lead - sub_suffix[:, k]
    # inner: suffix sums of per-layer caps
    caps = np.empty((R, K))
    for i in range(1, K + 1):
        snr_next = snr[:, i] if i < K else np.zeros(R)
        num = 1.0 + i * snr[:, i - 1] + ups[:, i]
        den = i * (1.0 + i * snr_next + ups[:, i])
        caps[:, i - 1] = _vec_half_log2_pos(num / den)
    inner = _vec_suffix(caps)[:, :K]
    # per-term pieces (defined for i in 2..K)
    zeta_minus_xi = np.zeros((R, K + 1))
    for i in range(2, K + 1):
        c = i - 1
        base = 1.0 + ups[:, i] + i * snr[:, c]
        zeta = 0.5 * np.log2((base + inr[:, c]) / base)
        xi = _vec_half_log2_pos(inr[:, c] / (1.0 + ups[:, i] + snr[:, c]))
        zeta_minus_xi[:, c] = zeta - xi
    return {"outer": outer, "inner": inner, "zeta_minus_xi": zeta_minus_xi[:, :K]}


def _vec_bitlevel_outer(snr: np.ndarray, inr: np.ndarray) -> np.ndarray:
    """Vectorized bit-level outer bounds for the bridging diagnostic."""
    def depths(x):
        v = 0.5 * np.log2(np.maximum(x, 1.0))
        f = np.floor(v)
        return (f + (v - f > 1.0 - 1e-9)).astype(np.int64)

    n = depths(snr)
    m = depths(inr)
    R, K = n.shape
    smax = np.zeros((R, K + 2), dtype=np.int64)
    for i in range(K, 0, -1):
        smax[:, i] = np.maximum(m[:, i - 1], smax[:, i + 1])
    loss = np.zeros((R, K + 1), dtype=np.int64)
    for i in range(2, K + 1):
        loss[:, i - 1] = np.maximum(
            m[:, i - 1] - np.maximum(smax[:, i + 1], n[:, i - 1]), 0)
    loss_suffix = _vec_suffix(loss[:, :K].astype(float))
    out = np.empty((R, K))
    for k in range(1, K + 1):
        out[:, k - 1] = np.maximum(smax[:, k + 1], n[:, k - 1]) - loss_suffix[:, k]
    return out


@dataclass
class SweepBlock:
    """All certificate fields for one user count over a parameter grid."""

    K: int
    snr_db: np.ndarray  # (rows, K)
    inr_db: np.ndarray  # (rows, K)
    inner: np.ndarray   # (rows, K)
    outer: np.ndarray   # (rows, K)
    gaps: np.ndarray    # (rows, K)
    gap_bounds: np.ndarray       # (K,)
    zeta_minus_xi: np.ndarray    # (rows, K); col i-1 defined for i >= 2
    per_term_bounds: np.ndarray  # (K,); col i-1 defined for i >= 2
    bitlevel_outer_diff: np.ndarray  # (rows, K)


@dataclass
class SweepResult:
    blocks: list[SweepBlock]
    summary: dict


def sweep(k_values: Iterable[int], db_values: Sequence[float],
          variant: str = "consistent") -> SweepResult:
    """Certificate audit over a dB grid, vectorized per user count.

    SNR tuples run over nonincreasing combinations of the grid (the model
    fixes the power ordering, so sorted tuples cover every distinct
    instance); INR tuples run over the full product.  The summary counts
    violations of the gap budget, the gap sign, and the per-term bound,
    and records the worst bit-level-vs-Gaussian outer-bound discrepancy as
    a diagnostic.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    db_values = [float(v) for v in db_values]
    blocks = []
    total_rows = 0
    gap_violations = 0
    sign_violations = 0
    per_term_violations = 0
    max_ratio = 0.0
    bridge_max = 0.0
    for K in sorted(set(int(k) for k in k_values)):
        if K < 1:
            raise ValueError("user counts must be >= 1")
        snr_tuples = [t for t in combinations_with_replacement(
            sorted(db_values, reverse=True), K)]
        inr_tuples = list(product(db_values, repeat=K))
        snr_db = np.repeat(np.array(snr_tuples), len(inr_tuples), axis=0)
        inr_db = np.tile(np.array(inr_tuples), (len(snr_tuples), 1))
        snr = 10.0 ** (snr_db / 10.0)
        inr = 10.0 ** (inr_db / 10.0)
        res = _vec_bounds(snr, inr, variant)
        gaps = res["outer"] - res["inner"]
        gap_bounds = np.array([(K - k + 1) * (math.log2(K) + 0.5)
                               for k in range(1, K + 1)])
        per_term_bounds = np.array(
            [0.5 * math.log2(i + 1) if i >= 2 else 0.0 for i in range(1, K + 1)])
        bridge = np.abs(res["outer"] - _vec_bitlevel_outer(snr, inr))
        blocks.append(SweepBlock(
            K=K, snr_db=snr_db, inr_db=inr_db, inner=res["inner"],
            outer=res["outer"], gaps=gaps, gap_bounds=gap_bounds,
            zeta_minus_xi=res["zeta_minus_xi"], per_term_bounds=per_term_bounds,
            bitlevel_outer_diff=bridge))
        total_rows += gaps.size
        sign_violations += int((gaps < -GAP_TOL).sum())
        gap_violations += int((gaps > gap_bounds[None, :] + GAP_TOL).sum())
        if K >= 2:
            margin = res["zeta_minus_xi"][:, 1:] - per_term_bounds[None, 1:]
            per_term_violations += int((margin > GAP_TOL).sum())
        max_ratio = max(max_ratio, float((gaps / gap_bounds[None, :]).max()))
        bridge_max = max(bridge_max, float(bridge.max()))
    summary = {
        "points": total_rows,
        "gap_sign_violations": sign_violations,
        "gap_bound_violations": gap_violations,
        "per_term_violations": per_term_violations,
        "max_gap_to_bound_ratio": max_ratio,
        "bitlevel_outer_abs_diff_max": bridge_max,
        "variant": variant,
    }
    return SweepResult(blocks=blocks, summary=summary)
