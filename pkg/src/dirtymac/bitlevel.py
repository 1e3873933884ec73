"""Deterministic bit-level channel: exact capacity region and zero-error codec.

Words are plain ints.  Bit j of an int is level j+1, where level 1 is the
least significant received level; a user with signal depth n occupies
output levels 1..n, an interference with depth m occupies levels 1..m, and
the channel adds everything per level over GF(2) (XOR).

Capacity has a suffix-sum form whose inner and outer expressions coincide
for every instance; :func:`capacity_region` computes both and refuses to
return unless they match exactly.  The codec realizes the matching
strategy: each transmitter XORs away its known interference on the levels
it can reach, and message bits ride on the interference-free levels of a
layered assignment, so decoding is a plain projection with zero errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .channel import BitLevelParams
from .errors import InvariantViolation
from .regions import (Allocation, SuffixRateRegion, decompose_rates,
                      region_from_layer_caps)


def _suffix_interference_max(p: BitLevelParams) -> list[int]:
    """smax[i] = max(m_i, ..., m_K) for i in 1..K+1 (empty max = 0)."""
    smax = [0] * (p.K + 2)
    for i in range(p.K, 0, -1):
        smax[i] = max(p.interference_depths[i - 1], smax[i + 1])
    return smax


def transfer(word: int, depth: int, word_size: int) -> int:
    """Embed a depth-n participant into the output word.

    The n input bits land on the n lowest output levels and all higher
    levels are zero; under the int encoding this is the identity on the
    value, so the function's job is validating the depth contract.
    """
    if not 0 <= depth <= word_size:
        raise ValueError(f"depth {depth} outside [0, {word_size}]")
    if not 0 <= word < (1 << depth):
        raise ValueError(f"word {word:#x} exceeds depth {depth}")
    return word


def channel_output(xs, ss, p: BitLevelParams) -> int:
    """Noiseless channel: XOR of all transferred signals and interferences."""
    if len(xs) != p.K or len(ss) != p.K:
        raise ValueError("need one signal and one interference word per user")
    q = p.word_size
    y = 0
    for x, n in zip(xs, p.signal_depths):
        y ^= transfer(x, n, q)
    for s, m in zip(ss, p.interference_depths):
        y ^= transfer(s, m, q)
    return y


def outer_bound(p: BitLevelParams) -> SuffixRateRegion:
    """Suffix bounds no achievable rate tuple can exceed."""
    smax = _suffix_interference_max(p)
    n, m = p.signal_depths, p.interference_depths
    bounds = []
    for k in range(1, p.K + 1):
        b = max(smax[k + 1], n[k - 1])
        for i in range(k + 1, p.K + 1):
            b -= max(0, m[i - 1] - max(smax[i + 1], n[i - 1]))
        bounds.append(b)
    return SuffixRateRegion(tuple(bounds))


def layer_caps(p: BitLevelParams) -> tuple[int, ...]:
    """Interference-free width of each receive layer.

    Layer i spans levels n_{i+1}+1 .. n_i; the residual interference of
    users below wipes its lowest levels up to max(m_{i+1..K}, n_{i+1}),
    leaving ``(n_i - max(m_{i+1..K}, n_{i+1}))^+`` clean levels.
    """
    smax = _suffix_interference_max(p)
    return tuple(
        max(0, p.signal_depths[i - 1] - max(smax[i + 1], p.signal_depth(i + 1)))
        for i in range(1, p.K + 1))


def inner_bound(p: BitLevelParams) -> SuffixRateRegion:
    """Suffix bounds achieved by the layered zero-error strategy."""
    return region_from_layer_caps(layer_caps(p))


def capacity_region(p: BitLevelParams) -> SuffixRateRegion:
    """The exact capacity region; inner and outer bounds must coincide."""
    inner = inner_bound(p)
    outer = outer_bound(p)
    if inner.bounds != outer.bounds:
        raise InvariantViolation(
            f"inner/outer bound mismatch for {p}: {inner.bounds} != {outer.bounds}")
    return inner


@dataclass(frozen=True)
class LayerAssignment:
    """One receive layer: its level span, clean span, and user slots.

    ``slots`` holds (user, level_lo, level_hi) blocks, contiguous within
    the clean span and ordered by increasing user index from the lowest
    clean level upward.
    """

    layer: int
    level_lo: int
    level_hi: int
    clean_lo: int
    clean_hi: int
    slots: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class TransmissionPlan:
    """Level assignment realizing an integer rate tuple, plus cancel depths."""

    params: BitLevelParams
    rates: tuple[int, ...]
    layers: tuple[LayerAssignment, ...]
    cancel_depths: tuple[int, ...]

    def user_levels(self, user: int) -> tuple[int, ...]:
        """Absolute levels carrying this user's bits, in message-bit order."""
        levels = []
        for lay in self.layers:
            for u, lo, hi in lay.slots:
                if u == user:
                    levels.extend(range(lo, hi + 1))
        return tuple(levels)


def build_plan(p: BitLevelParams, rates) -> TransmissionPlan:
    """Assign message bits of an achievable integer rate tuple to levels."""
    rates = tuple(int(r) for r in rates)
    if len(rates) != p.K:
        raise ValueError(f"rate tuple has dimension {len(rates)}, expected {p.K}")
    caps = layer_caps(p)
    alloc: Allocation = decompose_rates(rates, caps)
    smax = _suffix_interference_max(p)
    layers = []
    for l in range(1, p.K + 1):
        lo = p.signal_depth(l + 1) + 1
        hi = p.signal_depths[l - 1]
        clean_lo = max(smax[l + 1], p.signal_depth(l + 1)) + 1
        slots = []
        level = clean_lo
        for user in range(1, l + 1):
            amount = alloc.amount(user, l)
            if amount > 0:
                slots.append((user, level, level + amount - 1))
                level += amount
        if level - 1 > hi:
            raise InvariantViolation(f"layer {l} assignment exceeds clean span")
        layers.append(LayerAssignment(l, lo, hi, clean_lo, hi, tuple(slots)))
    cancel = tuple(min(n, m) for n, m in
                   zip(p.signal_depths, p.interference_depths))
    return TransmissionPlan(p, rates, tuple(layers), cancel)


def encode(user: int, message, interference_word: int,
           plan: TransmissionPlan) -> int:
    """Transmit word for one user: placed message bits XOR owned interference.

    The lowest ``min(n_i, m_i)`` levels of the user's own interference are
    folded into the transmit word so they vanish from the channel output;
    message bits sit at the plan's assigned levels.  Overlaps compose
    correctly because everything is XOR.
    """
    levels = plan.user_levels(user)
    if len(message) != len(levels):
        raise ValueError(
            f"user {user} message has {len(message)} bits, plan assigns {len(levels)}")
    x = 0
    for bit, lvl in zip(message, levels):
        x |= (int(bit) & 1) << (lvl - 1)
    cancel_mask = (1 << plan.cancel_depths[user - 1]) - 1
    return x ^ (interference_word & cancel_mask)


def decode(y: int, plan: TransmissionPlan) -> tuple[tuple[int, ...], ...]:
    """Read each user's message bits straight off its assigned levels."""
    return tuple(
        tuple((y >> (lvl - 1)) & 1 for lvl in plan.user_levels(user))
        for user in range(1, plan.params.K + 1))


def _random_words(gen: np.random.Generator, count: int, depth: int) -> np.ndarray:
    """Uniform depth-bit words as a uint64 array."""
    if depth == 0:
        return np.zeros(count, dtype=np.uint64)
    bits = gen.integers(0, 2, size=(count, depth), dtype=np.uint64)
    return (bits << np.arange(depth, dtype=np.uint64)).sum(
        axis=1, dtype=np.uint64)


def roundtrip_errors(p: BitLevelParams, rates, trials: int, seed: int = 0) -> int:
    """Number of trials (out of ``trials``) with any decoding error.

    Each trial draws uniform messages and uniform interference words,
    pushes them through encoders + channel + decoder, and compares.  The
    plan construction guarantees the count is zero for achievable rates;
    running the trials keeps that claim executable.
    """
    rates = tuple(int(r) for r in rates)
    capacity_region(p)  # refuse to simulate if the bound identity ever broke
    plan = build_plan(p, rates)  # raises InfeasibleRate outside the region
    user_levels = [plan.user_levels(u) for u in range(1, p.K + 1)]

    def chunk_errors(ci: int, lo: int, hi: int) -> int:
        count = hi - lo
        gen = rng.substream(seed, rng.TRIAL, ci)
        y = np.zeros(count, dtype=np.uint64)
        messages = []
        for u in range(1, p.K + 1):
            msg = _random_words(gen, count, len(user_levels[u - 1]))
            s = _random_words(gen, count, p.interference_depths[u - 1])
            x = np.zeros(count, dtype=np.uint64)
            for j, lvl in enumerate(user_levels[u - 1]):
                x |= ((msg >> np.uint64(j)) & np.uint64(1)) << np.uint64(lvl - 1)
            cancel = np.uint64((1 << plan.cancel_depths[u - 1]) - 1)
            y ^= (x ^ (s & cancel)) ^ s
            messages.append(msg)
        bad = np.zeros(count, dtype=bool)
        for u in range(1, p.K + 1):
            recon = np.zeros(count, dtype=np.uint64)
            for j, lvl in enumerate(user_levels[u - 1]):
                recon |= ((y >> np.uint64(lvl - 1)) & np.uint64(1)) << np.uint64(j)
            bad |= recon != messages[u - 1]
        return int(bad.sum())

    return sum(rng.map_chunks(trials, chunk_errors, chunk=1 << 12))
