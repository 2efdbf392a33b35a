"""Brute-force reference implementations used by several test modules."""

from itertools import combinations, product

from afc.minimizer import Cube


def all_cubes(n):
    for chars in product("01-", repeat=n):
        yield Cube.from_string("".join(chars))


def brute_primes(onset, dcset, n):
    allowed = set(onset) | set(dcset)
    imps = [c for c in all_cubes(n) if set(c.minterms()) <= allowed]
    primes = [c for c in imps if not any(o != c and o.contains(c) for o in imps)]
    return [p for p in primes if set(p.minterms()) & set(onset)]


def brute_min_cover_size(onset, dcset, n):
    onset = set(onset)
    if not onset:
        return 0
    primes = brute_primes(onset, dcset, n)
    sets = [set(p.minterms()) & onset for p in primes]
    for k in range(1, len(primes) + 1):
        for combo in combinations(range(len(primes)), k):
            if set().union(*(sets[i] for i in combo)) == onset:
                return k
    raise AssertionError("primes do not cover onset")


def adjacent_pairs(onset, n):
    onset = set(onset)
    return [(a, a | 1 << b) for a in sorted(onset) for b in range(n) if not a >> b & 1 and a | 1 << b in onset]
