"""Bit-spreading generator.

Output positions are partitioned into arithmetic progressions whose common
differences are powers of two.  Level m owns count(m) progressions with
difference 2**m, each carrying one source bit repeated along the progression.
Because every progression's first term is smaller than its difference, any
output window of length 2**m contains each level-m source bit exactly once
and every earlier source bit at least once, so a window plus its offset
modulo 2**m determines a full prefix of the source bits.

Levels are built greedily: starting from the 2**m0 progressions of
difference 2**m0, each level takes the count(m) available progressions with
the smallest first terms, then splits every remaining progression into its
even- and odd-index halves for the next level.  The per-level counts are
ceil(a_m * 2**m + m**2) for a chosen weight series a_m; the start level m0
is certified so the total density never exceeds 1 and the pool can never run
dry.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .core import BitString, CertificateError, RandomSource, frac_to_str


class CoverageError(RuntimeError):
    """A queried position is not covered by any level within the cap."""


class InconsistentWindowError(ValueError):
    """Duplicate reads of one source bit disagree inside a window."""


@dataclass(frozen=True)
class WeightSeries:
    """A computable series of non-negative rational weights with a certified
    upper bound on every tail sum."""

    name: str
    term: Callable[[int], Fraction]
    tail_bound: Callable[[int], Fraction]


def inverse_triangular() -> WeightSeries:
    """a_m = 1/(m(m+1)) for m >= 1; exact tail sum from M is 1/M."""
    return WeightSeries(
        "inverse-triangular",
        lambda m: Fraction(1, m * (m + 1)) if m >= 1 else Fraction(0),
        lambda start: Fraction(1, max(start, 1)),
    )


def geometric(ratio) -> WeightSeries:
    ratio = Fraction(ratio)
    if not 0 < ratio < 1:
        raise ValueError("geometric ratio must be in (0, 1)")
    return WeightSeries(
        f"geometric:{frac_to_str(ratio)}",
        lambda m: ratio ** m,
        lambda start: ratio ** start / (1 - ratio),
    )


def zero_series() -> WeightSeries:
    return WeightSeries("zero", lambda m: Fraction(0), lambda start: Fraction(0))


def weight_preset(text: str) -> WeightSeries:
    if text == "inverse-triangular":
        return inverse_triangular()
    if text == "zero":
        return zero_series()
    if text.startswith("geometric:"):
        return geometric(Fraction(text.split(":", 1)[1]))
    raise ValueError(f"unknown weight preset: {text!r}")


def boosted_count(weights: WeightSeries, level: int) -> int:
    """Progressions reserved at a level: ceil(a * 2**level + level**2)."""
    return math.ceil(weights.term(level) * (1 << level) + level * level)


def boost_tail(start: int) -> Fraction:
    """Exact sum over m >= start of (m**2 + 1) / 2**m.

    Closed forms: sum m**2/2**m = (2M**2 + 4M + 6)/2**M and
    sum 1/2**m = 2**(1 - M), both from M upward.
    """
    m = start
    return Fraction(2 * m * m + 4 * m + 6, 1 << m) + Fraction(2, 1 << m)


def start_level_certificate(weights: WeightSeries, start: int) -> Fraction:
    """Certified density bound if allocation starts at the given level.

    Covers the weight tail, the quadratic boost, and one unit of ceiling
    slack per level.  A start level is admissible when this is <= 1.
    """
    return weights.tail_bound(start) + boost_tail(start)


def choose_start_level(weights: WeightSeries) -> int:
    level = 0
    while start_level_certificate(weights, level) > 1:
        level += 1
    return level


class _Intervals:
    """Sorted disjoint half-open integer intervals with rank queries."""

    __slots__ = ("los", "his", "cum")

    def __init__(self, pairs=()):
        los, his = [], []
        for lo, hi in pairs:
            if hi > lo:
                los.append(lo)
                his.append(hi)
        cum = [0]
        for lo, hi in zip(los, his):
            cum.append(cum[-1] + (hi - lo))
        self.los, self.his, self.cum = los, his, cum

    @property
    def total(self) -> int:
        return self.cum[-1]

    def first(self):
        return self.los[0] if self.los else None

    def pairs(self):
        return list(zip(self.los, self.his))

    def index_of(self, x: int):
        """Rank of x among the elements, or None when absent."""
        j = bisect_right(self.los, x) - 1
        if j >= 0 and x < self.his[j]:
            return self.cum[j] + (x - self.los[j])
        return None

    def take_prefix(self, k: int):
        """Split off the k smallest elements (all of them if k >= total)."""
        if k >= self.total:
            return self, _Intervals(())
        j = bisect_right(self.cum, k) - 1
        cut = self.los[j] + (k - self.cum[j])
        taken = list(zip(self.los[:j], self.his[:j]))
        rest = []
        if cut > self.los[j]:
            taken.append((self.los[j], cut))
        if cut < self.his[j]:
            rest.append((cut, self.his[j]))
        rest.extend(zip(self.los[j + 1:], self.his[j + 1:]))
        return _Intervals(taken), _Intervals(rest)

    def enumerate_range(self, lo: int, hi: int):
        """Yield (value, rank) for every element in [lo, hi)."""
        j = max(bisect_right(self.los, lo) - 1, 0)
        for i in range(j, len(self.los)):
            if self.los[i] >= hi:
                break
            start = max(self.los[i], lo)
            stop = min(self.his[i], hi)
            base = self.cum[i] + (start - self.los[i])
            for off, value in enumerate(range(start, stop)):
                yield value, base + off


@dataclass
class _Level:
    level: int
    count: int
    assigned: _Intervals
    source_base: int
    least_after: object = None


class Allocation:
    """Greedy progression allocation, built level by level on demand.

    Only first terms below a movable cap are stored explicitly; pool sizes
    and source-bit numbering are tracked exactly as integers, so queries
    below the cap are exact even when a level's assignment extends past it.
    """

    def __init__(self, start_level: int, max_level: int, count_for: Callable[[int], int],
                 test_mode: bool = False):
        if start_level < 0 or max_level < start_level:
            raise ValueError("need 0 <= start_level <= max_level")
        self.start_level = start_level
        self.max_level = max_level
        self.test_mode = test_mode
        self._count_for = count_for
        self._cap = 1 << max(start_level, 13)
        self._reset()

    def _reset(self):
        self._levels = []
        size = 1 << self.start_level
        self._pool = _Intervals([(0, min(size, self._cap))])
        self._pool_total = size
        self._source_total = 0
        self._least_uncovered = 0  # None once every natural number is covered

    def _build_next(self) -> bool:
        m = self.start_level + len(self._levels)
        if m > self.max_level:
            return False
        count = self._count_for(m)
        if count < 0:
            raise ValueError(f"negative progression count at level {m}")
        if count > self._pool_total:
            raise CertificateError(
                f"level {m} needs {count} progressions but only {self._pool_total} remain"
            )
        taken, rest = self._pool.take_prefix(count)
        record = _Level(m, count, taken, self._source_total)
        self._levels.append(record)
        self._source_total += count
        remaining = self._pool_total - count
        if remaining == 0:
            self._least_uncovered = None
            self._pool = _Intervals(())
            self._pool_total = 0
        else:
            first = rest.first()
            self._least_uncovered = first if first is not None else self._cap
            step = 1 << m
            pairs = rest.pairs()
            shifted = [(lo + step, min(hi + step, self._cap))
                       for lo, hi in pairs if lo + step < self._cap]
            self._pool = _Intervals(pairs + shifted)
            self._pool_total = 2 * remaining
        record.least_after = self._least_uncovered
        return True

    def _grow_cap(self, need: int, exact: int = None):
        new_cap = exact if exact is not None else 1 << max(need.bit_length() + 1, self.start_level)
        if new_cap < need:
            raise ValueError("cap below requested horizon")
        built = len(self._levels)
        self._cap = new_cap
        self._reset()
        for _ in range(built):
            self._build_next()

    def ensure_cap(self, need: int):
        if need > self._cap:
            self._grow_cap(need)

    def ensure_level(self, level: int):
        if level > self.max_level:
            raise ValueError(f"level {level} beyond max_level {self.max_level}")
        while self.start_level + len(self._levels) <= level:
            if not self._build_next():
                break

    def ensure_horizon(self, horizon: int):
        """Build levels until every position below the horizon is covered,
        or the level budget runs out."""
        self.ensure_cap(horizon)
        while self._least_uncovered is not None and self._least_uncovered < horizon:
            if not self._build_next():
                break

    def least_uncovered(self):
        return self._least_uncovered

    def levels_built(self) -> int:
        return len(self._levels)

    def level_records(self):
        """Read-only view: (level, count, source_base, assigned first-term pairs)."""
        return [(lv.level, lv.count, lv.source_base, lv.assigned.pairs())
                for lv in self._levels]

    def counts(self) -> dict:
        return {lv.level: lv.count for lv in self._levels}

    def source_count_through(self, level: int) -> int:
        """Number of source bits placed at levels up to and including `level`."""
        self.ensure_level(level)
        idx = level - self.start_level
        if not 0 <= idx < len(self._levels):
            raise ValueError(f"level {level} outside [{self.start_level}, {self.max_level}]")
        record = self._levels[idx]
        return record.source_base + record.count

    def budget_used(self, through_level: int = None) -> Fraction:
        if through_level is not None:
            self.ensure_level(through_level)
        total = Fraction(0)
        for lv in self._levels:
            if through_level is not None and lv.level > through_level:
                break
            total += Fraction(lv.count, 1 << lv.level)
        return total

    def _require_covered(self, end: int):
        if self._least_uncovered is not None and self._least_uncovered < end:
            raise CoverageError(
                f"position {self._least_uncovered} is not covered by levels up to "
                f"{self.max_level}; raise max_level"
            )

    def source_index(self, position: int) -> int:
        """The source bit carried at an output position."""
        if position < 0:
            raise ValueError("position must be non-negative")
        self.ensure_horizon(position + 1)
        self._require_covered(position + 1)
        for lv in self._levels:
            r = position & ((1 << lv.level) - 1)
            idx = lv.assigned.index_of(r)
            if idx is not None:
                return lv.source_base + idx
        raise AssertionError("progression partition violated")

    def source_map(self, start: int, length: int) -> list:
        """Source indices for every position in [start, start + length)."""
        if start < 0 or length < 0:
            raise ValueError("bad range")
        end = start + length
        self.ensure_horizon(end)
        self._require_covered(end)
        out = [-1] * length
        for lv in self._levels:
            step = 1 << lv.level
            if step <= length:
                for lo, hi in lv.assigned.pairs():
                    base = lv.assigned.index_of(lo) + lv.source_base
                    for off, c in enumerate(range(lo, hi)):
                        p = start + ((c - start) % step)
                        for q in range(p, end, step):
                            out[q - start] = base + off
            else:
                lo_res = start % step
                spans = [(lo_res, min(lo_res + length, step))]
                if lo_res + length > step:
                    spans.append((0, lo_res + length - step))
                for a, b in spans:
                    for c, rank in lv.assigned.enumerate_range(a, b):
                        p = start + ((c - start) % step)
                        if p < end:
                            out[p - start] = lv.source_base + rank
        if any(v < 0 for v in out):
            raise AssertionError("progression partition left a hole")
        return out

    def export(self) -> dict:
        return {
            "start_level": self.start_level,
            "max_level": self.max_level,
            "cap": self._cap,
            "least_uncovered": self._least_uncovered,
            "source_total": self._source_total,
            "levels": [
                {
                    "level": lv.level,
                    "count": lv.count,
                    "source_base": lv.source_base,
                    "assigned": lv.assigned.pairs(),
                }
                for lv in self._levels
            ],
        }

    @classmethod
    def from_export(cls, doc: dict) -> "Allocation":
        """Rebuild by replaying the recorded counts, then verify the recorded
        assignments match the replay exactly."""
        counts = {entry["level"]: entry["count"] for entry in doc["levels"]}
        if not counts:
            raise ValueError("allocation export lists no levels")
        alloc = cls(doc["start_level"], doc["max_level"],
                    lambda m: counts.get(m, 0), test_mode=True)
        alloc._grow_cap(doc["cap"], exact=doc["cap"])
        alloc.ensure_level(max(counts))
        if len(doc["levels"]) != alloc.levels_built():
            raise CertificateError("allocation export inconsistent: level list length")
        for entry, (level, count, base, pairs) in zip(doc["levels"], alloc.level_records()):
            recorded = [tuple(p) for p in entry["assigned"]]
            if (entry["level"], entry["count"], entry["source_base"]) != (level, count, base) \
                    or recorded != pairs:
                raise CertificateError(f"allocation export inconsistent at level {level}")
        if alloc._least_uncovered != doc.get("least_uncovered"):
            raise CertificateError("allocation export inconsistent: coverage frontier")
        return alloc


def plan_allocation(weights: WeightSeries, start_level: int = None, max_level: int = 64,
                    explicit_counts: dict = None) -> Allocation:
    """Build an allocation from a weight series, or from explicit per-level
    counts in test mode (no certificate; feasibility still enforced)."""
    if explicit_counts is not None:
        if not explicit_counts:
            raise ValueError("explicit counts must name at least one level")
        m0 = min(explicit_counts) if start_level is None else start_level
        top = max(max(explicit_counts), max_level if max_level is not None else 0)
        return Allocation(m0, top, lambda m: explicit_counts.get(m, 0), test_mode=True)
    if weights is None:
        raise ValueError("weight series required outside test mode")
    m0 = choose_start_level(weights) if start_level is None else start_level
    cert = start_level_certificate(weights, m0)
    if cert > 1:
        raise CertificateError(
            f"start level {m0} rejected: certified density {frac_to_str(cert)} exceeds 1"
        )
    return Allocation(m0, max_level, lambda m: boosted_count(weights, m))


def spread(alloc: Allocation, source_bits, length: int) -> BitString:
    """Output of the generator: position i carries source bit source_index(i).

    source_bits may be a BitString or a RandomSource (drawn on demand)."""
    if isinstance(source_bits, RandomSource):
        return spread_random(alloc, source_bits, length)[0]
    mapping = alloc.source_map(0, length)
    needed = max(mapping) + 1 if mapping else 0
    if len(source_bits) < needed:
        raise ValueError(f"source too short: need {needed} bits, got {len(source_bits)}")
    src = source_bits.to_bits()
    return BitString.from_bits(src[j] for j in mapping)


def spread_random(alloc: Allocation, rs: RandomSource, length: int):
    """Draw exactly the source bits the range needs, then spread them."""
    mapping = alloc.source_map(0, length)
    needed = max(mapping) + 1 if mapping else 0
    source_bits = rs.bits(needed)
    src = source_bits.to_bits()
    return BitString.from_bits(src[j] for j in mapping), source_bits


def recover_prefix(alloc: Allocation, win: BitString, offset_mod: int, level: int) -> BitString:
    """Reconstruct the source prefix carried by a window of length 2**level.

    offset_mod is the window's start position modulo 2**level.  Every source
    bit placed at levels up to `level` occurs in the window; bits from levels
    below occur several times and all copies must agree, otherwise the window
    was not produced by this allocation and InconsistentWindowError is raised.
    """
    if level < alloc.start_level:
        raise ValueError(f"level {level} below start level {alloc.start_level}")
    size = 1 << level
    if len(win) != size:
        raise ValueError(f"window length {len(win)} is not 2**{level}")
    if not 0 <= offset_mod < size:
        raise ValueError("offset_mod out of range")
    alloc.ensure_cap(size)
    alloc.ensure_level(level)
    wbits = win.to_bits()
    out = []
    for lv_level, count, base, pairs in alloc.level_records():
        if lv_level > level:
            break
        step = 1 << lv_level
        seen = 0
        for lo, hi in pairs:
            for c in range(lo, hi):
                t0 = (c - offset_mod) % step
                value = wbits[t0]
                for t in range(t0 + step, size, step):
                    if wbits[t] != value:
                        raise InconsistentWindowError(
                            f"source bit {base + seen} reads differently at window "
                            f"offsets {t0} and {t}"
                        )
                out.append(value)
                seen += 1
        if seen != count:
            raise AssertionError(f"level {lv_level} assignment not fully tracked")
    return BitString.from_bits(out)
