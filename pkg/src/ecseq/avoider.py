"""Constructive avoidance of per-length forbidden sets.

Start from uniform random bits and, while some forbidden string occurs,
redraw the leftmost (shortest first) violating occurrence, in the style of
Moser-Tardos constraint resampling.  A brute-force enumerator doubles as the
testing oracle at small lengths.
"""

from dataclasses import dataclass
from typing import Optional

from .core import BitString, RandomSource
from .forbidden import LevelFamily, SampledLevel


@dataclass(frozen=True)
class AvoidanceInstance:
    family: LevelFamily
    length: int
    max_resamples: int
    source: RandomSource

    def __post_init__(self):
        if self.length <= 0 or self.max_resamples <= 0:
            raise ValueError("length and resample budget must be positive")
        if not self.family.explicit_only():
            raise ValueError("avoidance needs explicit level sets")
        for n in self.family.level_lengths():
            if n > self.length:
                raise ValueError(f"forbidden length {n} exceeds target length {self.length}")
            size = self.family.size_of(n)
            bound = self.family.size_bound(n)
            if size > bound:
                raise ValueError(
                    f"density guard: level {n} holds {size} strings, bound {bound}"
                )


@dataclass(frozen=True)
class AvoidanceResult:
    succeeded: bool
    string: Optional[BitString]
    resamples: int
    residual_violations: int


def scan_violations(x: BitString, family: LevelFamily) -> list:
    """All (position, length) pairs whose window is forbidden, sorted."""
    found = []
    for n in family.level_lengths():
        if n > len(x):
            continue
        level = family.levels[n]
        explicit = level.strings if isinstance(level, SampledLevel) else None
        for k, w in enumerate(x.numeral_windows(n)):
            if explicit is not None:
                if w in explicit:
                    found.append((k, n))
            elif family.membership(n, w):
                found.append((k, n))
    found.sort()
    return found


def _level_tables(family: LevelFamily, length: int):
    lengths = [n for n in family.level_lengths() if n <= length]
    sets = {n: family.levels[n].strings for n in lengths}
    return lengths, sets


def _first_violation(bits: list, lengths: list, sets: dict, start: int):
    """Leftmost violating occurrence at position >= start, shortest length
    first at equal positions; assumes no violation starts before `start`."""
    total = len(bits)
    values = {}
    for n in lengths:
        if start + n <= total:
            v = 0
            for i in range(start, start + n):
                v = (v << 1) | bits[i]
            values[n] = v
    for k in range(start, total):
        for n in lengths:
            if n in values and k + n <= total and values[n] in sets[n]:
                return k, n
        for n in lengths:
            if n in values:
                if k + n < total:
                    values[n] = ((values[n] & ((1 << (n - 1)) - 1)) << 1) | bits[k + n]
                else:
                    del values[n]
    return None


def build_avoiding_string(inst: AvoidanceInstance) -> AvoidanceResult:
    """Resample until no forbidden string occurs or the budget runs out.

    Deterministic for a fixed instance: the initial draw, the resample order
    (leftmost violation, shortest on ties), and every redraw come from the
    instance's source in a fixed sequence.
    """
    lengths, sets = _level_tables(inst.family, inst.length)
    longest = max(lengths, default=1)
    rs = inst.source
    bits = rs.bits(inst.length).to_bits()
    resamples = 0
    scan_from = 0
    while True:
        hit = _first_violation(bits, lengths, sets, scan_from)
        if hit is None:
            return AvoidanceResult(True, BitString.from_bits(bits), resamples, 0)
        if resamples >= inst.max_resamples:
            residual = len(scan_violations(BitString.from_bits(bits), inst.family))
            return AvoidanceResult(False, None, resamples, residual)
        k, n = hit
        redraw = rs.bits(n)
        for i in range(n):
            bits[k + i] = redraw[i]
        resamples += 1
        # fresh violations can only overlap the redrawn block
        scan_from = max(0, k - longest + 1)


def brute_force_avoider(family: LevelFamily, length: int) -> Optional[BitString]:
    """Numerically smallest avoiding string of the given length, or None when
    none exists.  Depth-first with prefix pruning, which visits candidates in
    exactly numeric (most-significant-bit-first) order."""
    if length > 24:
        raise ValueError("brute force capped at length 24")
    lengths, sets = _level_tables(family, length)
    prefix = []

    def forbidden_suffix() -> bool:
        d = len(prefix)
        for n in lengths:
            if n <= d:
                v = 0
                for i in range(d - n, d):
                    v = (v << 1) | prefix[i]
                if v in sets[n]:
                    return True
        return False

    def descend() -> bool:
        if len(prefix) == length:
            return True
        for b in (0, 1):
            prefix.append(b)
            if not forbidden_suffix() and descend():
                return True
            prefix.pop()
        return False

    if descend():
        return BitString.from_bits(prefix)
    return None
