"""Exact two-level minimization: Quine-McCluskey primes, branch-and-bound cover selection,
structural sharing across outputs and static-1 hazard removal.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from afc import kernels

log = logging.getLogger(__name__)

MAX_WIDTH = 16
EXACT_LIMIT = 12
NODE_BUDGET = 2_000_000


@dataclass(frozen=True, order=False)
class Cube:
    """Product term over ``width`` inputs.

    Bit ``i`` of ``mask`` is set when input ``X_i`` appears as a literal;
    the same bit of ``value`` gives its polarity.
    """

    mask: int
    value: int
    width: int

    def __post_init__(self):
        full = (1 << self.width) - 1
        if self.mask & ~full or self.value & ~self.mask:
            raise ValueError(f"inconsistent cube mask={self.mask:b} value={self.value:b} width={self.width}")

    @classmethod
    def minterm(cls, code: int, width: int) -> "Cube":
        return cls((1 << width) - 1, code, width)

    @classmethod
    def universal(cls, width: int) -> "Cube":
        return cls(0, 0, width)

    @classmethod
    def from_string(cls, text: str) -> "Cube":
        """Parse ``{0,1,-}`` characters, most significant input first."""
        mask = value = 0
        for ch in text:
            mask <<= 1
            value <<= 1
            if ch == "1":
                mask |= 1
                value |= 1
            elif ch == "0":
                mask |= 1
            elif ch != "-":
                raise ValueError(f"bad cube character {ch!r} in {text!r}")
        return cls(mask, value, len(text))

    def __str__(self) -> str:
        out = []
        for i in range(self.width - 1, -1, -1):
            bit = 1 << i
            out.append("-" if not self.mask & bit else ("1" if self.value & bit else "0"))
        return "".join(out)

    @property
    def literal_count(self) -> int:
        return bin(self.mask).count("1")

    @property
    def size(self) -> int:
        return 1 << (self.width - self.literal_count)

    def literals(self) -> list[tuple[int, bool]]:
        """``(input index, positive)`` pairs, most significant input first."""
        return [(i, bool(self.value >> i & 1)) for i in range(self.width - 1, -1, -1) if self.mask >> i & 1]

    def contains_minterm(self, code: int) -> bool:
        return (code & self.mask) == self.value

    def contains(self, other: "Cube") -> bool:
        return (other.mask & self.mask) == self.mask and (other.value & self.mask) == self.value

    def intersects(self, other: "Cube") -> bool:
        common = self.mask & other.mask
        return (self.value & common) == (other.value & common)

    def minterms(self) -> list[int]:
        free = [1 << i for i in range(self.width) if not self.mask >> i & 1]
        out = [self.value]
        for bit in free:
            out += [m | bit for m in out]
        return sorted(out)

    def sort_key(self) -> str:
        return str(self)


def _sorted_cubes(cubes: Iterable[Cube]) -> tuple[Cube, ...]:
    return tuple(sorted(set(cubes), key=Cube.sort_key))


@dataclass(frozen=True)
class SopCover:
    """Sum of products for one output column."""

    width: int
    cubes: tuple[Cube, ...]
    output: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cubes", _sorted_cubes(self.cubes))

    def evaluate(self, code: int) -> bool:
        return any(c.contains_minterm(code) for c in self.cubes)

    @property
    def literal_count(self) -> int:
        return sum(c.literal_count for c in self.cubes)

    def __len__(self) -> int:
        return len(self.cubes)


@dataclass(frozen=True)
class PlaCover:
    """Shared AND plane plus one product-index set per output.

    ``outputs[j]`` lists the products ORed into output ``Y_j``.  Products are
    kept in lexicographic order of their ``{0,1,-}`` strings and are unique.
    """

    n_in: int
    n_out: int
    products: tuple[Cube, ...]
    outputs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.outputs) != self.n_out:
            raise ValueError("one product list per output required")
        if len(set(self.products)) != len(self.products):
            raise ValueError("duplicate cubes in the AND plane")
        for c in self.products:
            if c.width != self.n_in:
                raise ValueError("cube width does not match cover width")
        for idx in self.outputs:
            for p in idx:
                if not 0 <= p < len(self.products):
                    raise ValueError(f"product index {p} out of range")

    @classmethod
    def build(cls, n_in: int, n_out: int, rows: Iterable[tuple[Cube, Iterable[int]]]) -> "PlaCover":
        """Canonical cover from ``(cube, outputs)`` rows; repeated cubes are merged."""
        member: dict[Cube, set[int]] = {}
        for cube, outs in rows:
            member.setdefault(cube, set()).update(outs)
        products = _sorted_cubes(member)
        outputs = tuple(tuple(i for i, c in enumerate(products) if j in member[c]) for j in range(n_out))
        return cls(n_in, n_out, products, outputs)

    @classmethod
    def from_sops(cls, n_in: int, sops: Sequence[SopCover]) -> "PlaCover":
        return cls.build(n_in, len(sops), ((c, (j,)) for j, s in enumerate(sops) for c in s.cubes))

    def sop(self, j: int) -> SopCover:
        return SopCover(self.n_in, tuple(self.products[p] for p in self.outputs[j]), j)

    def output_sets(self) -> list[frozenset[int]]:
        """For each product, the set of outputs it feeds."""
        out = [set() for _ in self.products]
        for j, idx in enumerate(self.outputs):
            for p in idx:
                out[p].add(j)
        return [frozenset(s) for s in out]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        masks = np.array([c.mask for c in self.products], dtype=np.int64)
        values = np.array([c.value for c in self.products], dtype=np.int64)
        or_matrix = np.zeros((self.n_out, len(self.products)), dtype=np.bool_)
        for j, idx in enumerate(self.outputs):
            or_matrix[j, list(idx)] = True
        return masks, values, or_matrix

    def evaluate_all(self) -> np.ndarray:
        masks, values, or_matrix = self.arrays()
        return kernels.eval_cover(masks, values, or_matrix, np.arange(1 << self.n_in, dtype=np.int64))

    @property
    def product_count(self) -> int:
        return len(self.products)


# -- prime implicants ------------------------------------------------------


def _check_width(n: int) -> None:
    if not 1 <= n <= MAX_WIDTH:
        raise ValueError(f"width {n} outside 1..{MAX_WIDTH}")


def prime_implicants(onset: Iterable[int], dcset: Iterable[int], n: int) -> list[Cube]:
    """All maximal cubes inside ``onset | dcset`` that touch ``onset``."""
    _check_width(n)
    onset = set(onset)
    dcset = set(dcset)
    if onset & dcset:
        raise ValueError("onset and dcset overlap")
    full = (1 << n) - 1
    current = {(full, m) for m in onset | dcset}
    primes: set[tuple[int, int]] = set()
    while current:
        merged = set()
        nxt = set()
        for mask, val in current:
            m = mask
            while m:
                bit = m & -m
                m ^= bit
                if val & bit:
                    continue
                partner = (mask, val | bit)
                if partner in current:
                    nxt.add((mask & ~bit, val))
                    merged.add((mask, val))
                    merged.add(partner)
        primes |= current - merged
        current = nxt
    on = np.fromiter(onset, dtype=np.int64, count=len(onset))
    keep = [Cube(mask, val, n) for mask, val in primes if on.size and np.any((on & mask) == val)]
    return sorted(keep, key=Cube.sort_key)


# -- cover selection -------------------------------------------------------


def _cover_key(cubes: Sequence[Cube]) -> tuple:
    return (len(cubes), sum(c.literal_count for c in cubes), tuple(sorted(str(c) for c in cubes)))


def _coverage(primes: Sequence[Cube], onset: Sequence[int]) -> list[int]:
    index = {m: i for i, m in enumerate(onset)}
    masks = []
    for p in primes:
        bits = 0
        for m in p.minterms():
            i = index.get(m)
            if i is not None:
                bits |= 1 << i
        masks.append(bits)
    return masks


def _essentials(cov: list[int], n_on: int) -> set[int]:
    chosen: set[int] = set()
    for i in range(n_on):
        bit = 1 << i
        cands = [p for p, c in enumerate(cov) if c & bit]
        if len(cands) == 1:
            chosen.add(cands[0])
    return chosen


def minimum_cover(primes: Sequence[Cube], onset: Iterable[int], node_budget: int = NODE_BUDGET) -> SopCover:
    """Minimum-cardinality subset of ``primes`` covering ``onset``.

    Ties go to fewer literals, then to the lexicographically smallest sorted
    list of cube strings, so the result is fully deterministic.
    """
    onset = sorted(set(onset))
    primes = _sorted_cubes(primes)
    width = primes[0].width if primes else 1
    if not onset:
        return SopCover(width, ())
    cov = _coverage(primes, onset)
    full = (1 << len(onset)) - 1
    union = 0
    for c in cov:
        union |= c
    if union != full:
        missing = [onset[i] for i in range(len(onset)) if not union >> i & 1]
        raise ValueError(f"primes do not cover minterms {missing[:8]}")

    essential = _essentials(cov, len(onset))
    start = 0
    for p in essential:
        start |= cov[p]
    lits = [p.literal_count for p in primes]
    cands_of = [[p for p, c in enumerate(cov) if c >> i & 1] for i in range(len(onset))]

    best: list = [None, None]  # [key, index list]
    nodes = 0

    def lower_bound(uncovered: int) -> int:
        used = set()
        lb = 0
        rest = [i for i in range(len(onset)) if uncovered >> i & 1]
        rest.sort(key=lambda i: len(cands_of[i]))
        for i in rest:
            cs = cands_of[i]
            if used.isdisjoint(cs):
                used.update(cs)
                lb += 1
        return lb

    def rec(chosen: list[int], covered: int, lit_sum: int) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            return
        uncovered = full & ~covered
        if not uncovered:
            key = _cover_key([primes[p] for p in chosen])
            if best[0] is None or key < best[0]:
                best[0], best[1] = key, list(chosen)
            return
        if best[0] is not None:
            lb = len(chosen) + lower_bound(uncovered)
            if lb > best[0][0] or (lb >= best[0][0] and lit_sum > best[0][1]):
                return
        # branch on the hardest uncovered minterm
        pick = min((i for i in range(len(onset)) if uncovered >> i & 1), key=lambda i: (len(cands_of[i]), i))
        options = sorted(
            cands_of[pick],
            key=lambda p: (-bin(cov[p] & uncovered).count("1"), lits[p], str(primes[p])),
        )
        for p in options:
            rec(chosen + [p], covered | cov[p], lit_sum + lits[p])

    base = sorted(essential)
    rec(base, start, sum(lits[p] for p in base))
    if nodes > node_budget:
        warnings.warn(f"cover search stopped after {node_budget} nodes; result may not be minimum", stacklevel=2)
        if best[1] is None:
            return greedy_cover(primes, onset)
    return SopCover(width, tuple(primes[p] for p in best[1]))


def greedy_cover(primes: Sequence[Cube], onset: Iterable[int]) -> SopCover:
    """Essential primes first, then repeatedly the prime covering most remaining minterms."""
    onset = sorted(set(onset))
    primes = _sorted_cubes(primes)
    width = primes[0].width if primes else 1
    if not onset:
        return SopCover(width, ())
    cov = _coverage(primes, onset)
    full = (1 << len(onset)) - 1
    chosen = set(_essentials(cov, len(onset)))
    covered = 0
    for p in chosen:
        covered |= cov[p]
    while covered != full:
        rest = full & ~covered
        p = min(
            (p for p in range(len(primes)) if p not in chosen and cov[p] & rest),
            key=lambda p: (-bin(cov[p] & rest).count("1"), primes[p].literal_count, str(primes[p])),
            default=None,
        )
        if p is None:
            raise ValueError("primes do not cover the onset")
        chosen.add(p)
        covered |= cov[p]
    return SopCover(width, tuple(primes[p] for p in chosen))


# -- hazards ---------------------------------------------------------------


def _onset_vector(onset: Iterable[int], n: int) -> np.ndarray:
    vec = np.zeros(1 << n, dtype=np.bool_)
    vec[list(onset)] = True
    return vec


def uncovered_pairs(cubes: Sequence[Cube], onset: Iterable[int], n: int) -> np.ndarray:
    """Hamming-adjacent onset pairs that no single cube contains, as rows ``(a, b)`` with ``a < b``."""
    masks = np.array([c.mask for c in cubes], dtype=np.int64)
    values = np.array([c.value for c in cubes], dtype=np.int64)
    return kernels.uncovered_adjacent_pairs(_onset_vector(onset, n), masks, values, n)


def hazard_free_augment(cover: SopCover, onset: Iterable[int], dcset: Iterable[int] = ()) -> SopCover:
    """Add consensus primes until every adjacent onset pair shares a cube.

    This removes static-1 hazards under single-input changes.
    """
    onset = set(onset)
    n = cover.width
    cubes = list(cover.cubes)
    if not uncovered_pairs(cubes, onset, n).size:
        return cover
    primes = prime_implicants(onset, dcset, n)
    while True:
        pairs = uncovered_pairs(cubes, onset, n)
        if not pairs.size:
            break
        a, b = int(pairs[0, 0]), int(pairs[0, 1])
        best = min(
            (p for p in primes if p.contains_minterm(a) and p.contains_minterm(b)),
            key=lambda p: (p.literal_count, str(p)),
        )
        cubes.append(best)
    return SopCover(n, tuple(cubes), cover.output)


# -- multi-output ----------------------------------------------------------


class DcPolicy(str, Enum):
    NONE = "none"
    OUT_OF_REGION = "out_of_region"


def minimize_function(
    onset: Iterable[int],
    dcset: Iterable[int],
    n: int,
    hazard_free: bool = False,
    exact_limit: int = EXACT_LIMIT,
    output: int = 0,
) -> SopCover:
    onset = sorted(set(onset))
    dcset = sorted(set(dcset) - set(onset))
    if not onset:
        return SopCover(n, (), output)
    primes = prime_implicants(onset, dcset, n)
    solve = minimum_cover if n <= exact_limit else greedy_cover
    cover = solve(primes, onset)
    cover = SopCover(n, cover.cubes, output)
    if hazard_free:
        cover = hazard_free_augment(cover, onset, dcset)
    return cover


def minimize_columns(
    entries: Sequence[int],
    n_in: int,
    n_out: int,
    dcset: Iterable[int] = (),
    hazard_free: bool = False,
    exact_limit: int = EXACT_LIMIT,
) -> PlaCover:
    """Per-output exact minimization, then cube sharing by structural identity."""
    entries = np.asarray(entries, dtype=np.int64)
    dc = set(int(c) for c in dcset)
    sops = []
    for j in range(n_out):
        onset = [int(c) for c in np.flatnonzero((entries >> j) & 1) if int(c) not in dc]
        sops.append(minimize_function(onset, dc, n_in, hazard_free, exact_limit, j))
        log.debug("output %d: %d cubes", j, len(sops[-1]))
    return PlaCover.from_sops(n_in, sops)


def dont_care_codes(table, policy: DcPolicy | str) -> list[int]:
    """Input codes whose table value the region wrapper never selects."""
    policy = DcPolicy(policy)
    if policy is DcPolicy.NONE:
        return []
    region = table.region
    bound = -region.lo if region.kind.value == "negative_exp_saturating" else region.hi
    nearest = table.convention.domain_point.value == "nearest_grid"
    step = table.in_fmt.step
    out = []
    for c in range(1, 1 << table.n_in):
        # smallest magnitude that indexes code c
        lowest = (c - 0.5) * step if nearest else c * step
        if lowest >= bound:
            out.append(c)
    return out


def multi_output_minimize(
    table,
    dc_policy: DcPolicy | str = DcPolicy.NONE,
    hazard_free: bool = False,
    exact_limit: int = EXACT_LIMIT,
) -> PlaCover:
    return minimize_columns(
        table.entries, table.n_in, table.n_out, dont_care_codes(table, dc_policy), hazard_free, exact_limit
    )
