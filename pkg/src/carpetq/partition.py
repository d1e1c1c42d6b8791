"""Stopping-time partitions of the carpet address space.

For a threshold ratio eta = p_min * q_min, the level-k partition
collects every word sigma whose mass first drops below eta^k:

    mass(flat_predecessor(sigma)) >= eta^k > mass(sigma).

Each address ray crosses this frontier exactly once, so the collected
squares tile the carpet and their masses sum to one exactly.  The
enumerator walks the flat-predecessor tree depth first; every prune
and emit decision is an exact integer comparison on scaled masses
nu = mass * L^len (L the common weight denominator), so the boundary
case mass == eta^k needs no padding and is decided strictly.

The construction is well defined for every k >= 1 even though the
asymptotic statements about it kick in only for k >= 1/theta.
"""

from __future__ import annotations

import math
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional

import numpy as np

from .measure import DerivedParams
from .summation import KahanSum
from .words import CarpetWord, decode_word, ell, word_from_digits

__all__ = [
    "DEFAULT_CAP",
    "EnumerationCapError",
    "PartitionLambdaK",
    "PartitionStats",
    "StoppedStats",
    "DisjointnessReport",
    "LocalDimEstimate",
    "enumerate_lambda_k",
    "stream_lambda_k",
    "stopped_statistics",
    "partition_stats",
    "check_phi_growth",
    "check_square_disjointness",
    "squares_overlap",
    "sample_digit_matrix",
    "sample_address",
    "local_dimension_estimate",
]

DEFAULT_CAP = 10_000_000

_SHARD_ROWS = 1 << 15


class EnumerationCapError(RuntimeError):
    """Word-count guard tripped before the walk finished."""


class _Tables:
    """Integer factor tables shared by the enumerator and the DP."""

    def __init__(self, params: DerivedParams, k: int):
        spec = params.spec
        L = params.denom_lcm
        self.L = L
        self.k = k
        self.a = {ij: int(w * L) for ij, w in zip(spec.digits, spec.weights)}
        self.b = {j: int(params.q[j] * L) for j in params.gy}
        self.appends = [(j, self.b[j]) for j in params.gy]
        self.promotions = {
            j: [(i, self.a[(i, j)]) for i in params.gx[j]] for j in params.gy
        }
        self.pair_roots = [(ij, self.a[ij]) for ij in spec.digits]
        eta = params.eta
        self.eta_den_k = eta.denominator ** k
        eta_num_k = eta.numerator ** k

        # Safe depth bound: the largest possible mass at length h is
        # p_max^ell(h) * q_max^(h - ell(h)); the walk cannot go deeper
        # than the first h where even that is below eta^k.
        h = 1
        top = Fraction(1)
        threshold = eta ** k
        while True:
            l_prev = ell(params, h - 1)
            l_now = ell(params, h)
            top *= params.p_max if l_now > l_prev else params.q_max
            if top < threshold:
                break
            h += 1
            if h > 10_000_000:
                raise RuntimeError("depth bound search runaway; spec degenerate")
        self.h_max = h
        self.emit_rhs = [eta_num_k * L ** hh for hh in range(h + 2)]
        self.rises = [
            ell(params, hh + 1) == ell(params, hh) + 1 for hh in range(h + 2)
        ]


class _Counter:
    """Emission counter with a cap; lock only taken in batches."""

    BATCH = 1024

    def __init__(self, cap: int):
        self.cap = cap
        self._lock = threading.Lock()
        self._total = 0

    def bump(self, amount: int) -> None:
        with self._lock:
            self._total += amount
            if self._total > self.cap:
                raise EnumerationCapError(
                    f"enumeration exceeded cap of {self.cap} words")


@dataclass
class _RootResult:
    counts: dict            # length -> word count
    nu_sums: dict           # length -> exact sum of scaled masses
    entropy: dict           # length -> KahanSum of mass * log(mass)
    encodings: Optional[list]
    lengths: Optional[list]
    nus: Optional[list]


def _walk_root(
    params: DerivedParams,
    tables: _Tables,
    root,
    keep: bool,
    visitor: Optional[Callable],
    counter: _Counter,
) -> _RootResult:
    L = tables.L
    log_l = math.log(L)
    eta_den_k = tables.eta_den_k
    rhs = tables.emit_rhs
    rises = tables.rises
    appends = tables.appends
    promotions = tables.promotions
    b = tables.b

    counts: dict[int, int] = {}
    nu_sums: dict[int, int] = {}
    entropy: dict[int, KahanSum] = {}
    encodings: Optional[list] = [] if keep else None
    lengths: Optional[list] = [] if keep else None
    nus: Optional[list] = [] if keep else None

    buf = bytearray()
    pending = 0  # emissions since the last counter bump

    def emit(h: int, nu: int) -> None:
        nonlocal pending
        counts[h] = counts.get(h, 0) + 1
        nu_sums[h] = nu_sums.get(h, 0) + nu
        log_mass = math.log(nu) - h * log_l
        acc = entropy.get(h)
        if acc is None:
            acc = entropy[h] = KahanSum()
        acc.add(math.exp(log_mass) * log_mass)
        if keep:
            encodings.append(bytes(buf))
            lengths.append(h)
            nus.append(nu)
        if visitor is not None:
            visitor(decode_word(params, bytes(buf), h), Fraction(nu, L ** h))
        pending += 1
        if pending >= _Counter.BATCH:
            counter.bump(pending)
            pending = 0

    pair_roots = tables.pair_roots

    def go(h: int, nu: int, twol: int) -> None:
        if rises[h]:
            if twol == len(buf):
                # no pending tail digit: the whole step appends one pair
                for (i, j), fa in pair_roots:
                    nu2 = nu * fa
                    buf.extend((i, j))
                    if nu2 * eta_den_k < rhs[h + 1]:
                        emit(h + 1, nu2)
                    else:
                        go(h + 1, nu2, twol + 2)
                    del buf[-2:]
                return
            jstar = buf[twol]
            divisor = b[jstar]
            for i, fa in promotions[jstar]:
                base = nu * fa // divisor
                buf.insert(twol, i)
                for j, fb in appends:
                    nu2 = base * fb
                    buf.append(j)
                    if nu2 * eta_den_k < rhs[h + 1]:
                        emit(h + 1, nu2)
                    else:
                        go(h + 1, nu2, twol + 2)
                    buf.pop()
                del buf[twol]
        else:
            for j, fb in appends:
                nu2 = nu * fb
                buf.append(j)
                if nu2 * eta_den_k < rhs[h + 1]:
                    emit(h + 1, nu2)
                else:
                    go(h + 1, nu2, twol)
                buf.pop()

    if isinstance(root, tuple) and len(root) == 2 and isinstance(root[0], tuple):
        (i, j), nu0 = root
        buf.extend((i, j))
        twol0 = 2
    else:
        j, nu0 = root
        buf.append(j)
        twol0 = 0
    if nu0 * eta_den_k < rhs[1]:
        emit(1, nu0)
    else:
        go(1, nu0, twol0)
    counter.bump(pending)
    return _RootResult(counts, nu_sums, entropy, encodings, lengths, nus)


class PartitionLambdaK:
    """One collected (or aggregate-only) stopping-time partition.

    Word storage is columnar: byte-encoded digits, lengths, and scaled
    integer masses nu with mass = nu / L^length.  Exact aggregates are
    computed during the walk, so consumers rarely have to touch every
    Fraction again.
    """

    def __init__(self, params: DerivedParams, k: int, roots: list[_RootResult],
                 stored: bool):
        self.params = params
        self.k = k
        self.eta_k: Fraction = params.eta ** k
        self.stored = stored
        L = params.denom_lcm

        counts: dict[int, int] = {}
        nu_sums: dict[int, int] = {}
        entropy: dict[int, KahanSum] = {}
        for r in roots:
            for h, c in r.counts.items():
                counts[h] = counts.get(h, 0) + c
            for h, s in r.nu_sums.items():
                nu_sums[h] = nu_sums.get(h, 0) + s
            for h, acc in r.entropy.items():
                tgt = entropy.get(h)
                if tgt is None:
                    tgt = entropy[h] = KahanSum()
                tgt.merge(acc)

        self.length_counts = dict(sorted(counts.items()))
        self.length_nu_sums = dict(sorted(nu_sums.items()))
        self.phi_k = sum(counts.values())
        self.xi_min = min(counts) if counts else 0
        self.xi_max = max(counts) if counts else 0
        self.mass_total = sum(
            (Fraction(s, L ** h) for h, s in nu_sums.items()), Fraction(0))
        self.mass_len_total = sum(
            (h * Fraction(s, L ** h) for h, s in nu_sums.items()), Fraction(0))
        self.entropy_sum = math.fsum(acc.total for acc in entropy.values())

        if stored:
            self.encodings: list[bytes] = []
            self.lengths: list[int] = []
            self.nus: list[int] = []
            for r in roots:
                self.encodings.extend(r.encodings)
                self.lengths.extend(r.lengths)
                self.nus.extend(r.nus)
        else:
            self.encodings = self.lengths = self.nus = None  # type: ignore

    def __len__(self) -> int:
        return self.phi_k

    def _need_words(self) -> None:
        if not self.stored:
            raise ValueError("partition was built in aggregate-only mode")

    def word_at(self, idx: int) -> CarpetWord:
        self._need_words()
        return decode_word(self.params, self.encodings[idx], self.lengths[idx])

    def mass_at(self, idx: int) -> Fraction:
        self._need_words()
        return Fraction(self.nus[idx], self.params.denom_lcm ** self.lengths[idx])

    def iter_words(self) -> Iterator[tuple[CarpetWord, Fraction]]:
        self._need_words()
        for idx in range(self.phi_k):
            yield self.word_at(idx), self.mass_at(idx)


def _roots(params: DerivedParams, tables: _Tables):
    if ell(params, 1) == 1:
        return [(ij, nu) for ij, nu in tables.pair_roots]
    return [(j, nu) for j, nu in tables.appends]


def enumerate_lambda_k(
    params: DerivedParams,
    k: int,
    *,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> PartitionLambdaK:
    """Collect the level-k partition with exact per-word masses.

    ``threads`` parallelizes over the root subtrees; results are merged
    in root order, so the output is identical for any thread count.
    """
    return _enumerate(params, k, keep=True, visitor=None, cap=cap, threads=threads)


def stream_lambda_k(
    params: DerivedParams,
    k: int,
    visitor: Optional[Callable[[CarpetWord, Fraction], None]] = None,
    *,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> PartitionLambdaK:
    """Walk the level-k partition without storing words.

    The returned partition carries the exact aggregates only.  A
    visitor, when given, sees every word in deterministic order and
    therefore forces threads = 1.
    """
    if visitor is not None and threads != 1:
        raise ValueError("a visitor requires threads=1 for a deterministic order")
    return _enumerate(params, k, keep=False, visitor=visitor, cap=cap, threads=threads)


def _enumerate(params, k, *, keep, visitor, cap, threads) -> PartitionLambdaK:
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    tables = _Tables(params, k)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), tables.h_max + 500))
    counter = _Counter(cap)
    roots = _roots(params, tables)
    if threads <= 1 or len(roots) <= 1:
        results = [_walk_root(params, tables, r, keep, visitor, counter)
                   for r in roots]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda r: _walk_root(params, tables, r, keep, None, counter),
                roots))
    return PartitionLambdaK(params, k, results, stored=keep)


@dataclass(frozen=True)
class StoppedStats:
    """Exact aggregates of a partition, computed without materializing it."""

    params: DerivedParams
    k: int
    eta_k: Fraction
    phi_k: int
    xi_min: int
    xi_max: int
    mass_total: Fraction
    mass_len_total: Fraction
    entropy_sum: float


def stopped_statistics(
    params: DerivedParams, k: int, *, max_states: int = 5_000_000
) -> StoppedStats:
    """Aggregate the level-k partition by memoized descent.

    Subtrees of the walk coincide whenever the current length, the
    mass-to-threshold ratio, and the pending tail digits coincide, and
    all emitted quantities scale linearly with the subtree root mass.
    Collapsing those classes turns the walk into a small dynamic
    program, with counts and masses exact; only entropy terms are
    floats.  Agrees with the enumerator wherever both run (see tests),
    while reaching k far beyond what materialized word lists allow.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    tables = _Tables(params, k)
    sys.setrecursionlimit(max(sys.getrecursionlimit(), tables.h_max + 500))
    L = tables.L
    eta_k = params.eta ** k
    rises = tables.rises
    append_fracs = [(j, Fraction(bb, L)) for j, bb in tables.appends]
    promote_fracs = {
        j: [
            (i, Fraction(aa * bb, tables.b[j] * L), jj)
            for i, aa in tables.promotions[j]
            for jj, bb in tables.appends
        ]
        for j in params.gy
    }
    # Empty queue means every step appends a whole pair (square grids).
    pair_fracs = [Fraction(aa, L) for _, aa in tables.pair_roots]
    memo: dict = {}

    def rel(h: int, ratio: Fraction, queue: tuple) -> tuple:
        # ratio = mass / eta^k of the live word; returns aggregates over
        # its stopped descendants tau, scaled by 1/mass: (R0 exact sum of
        # relative masses, R1 = sum r ln r, RL = sum r * reldepth, count,
        # min reldepth, max reldepth).
        key = (h, ratio, queue)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if len(memo) >= max_states:
            raise RuntimeError(f"stopped_statistics exceeded {max_states} states")
        r0 = Fraction(0)
        r1 = 0.0
        rl = 0.0
        cnt = 0
        dmin = None
        dmax = 0
        if not rises[h]:
            transitions = [(f, queue + (jj,)) for jj, f in append_fracs]
        elif queue:
            jstar = queue[0]
            rest = queue[1:]
            transitions = [(f, rest + (jj,)) for _, f, jj in promote_fracs[jstar]]
        else:
            transitions = [(f, ()) for f in pair_fracs]
        for f, queue2 in transitions:
            child_ratio = ratio * f
            ff = float(f)
            if child_ratio < 1:
                r0 += f
                r1 += ff * math.log(ff)
                rl += ff
                cnt += 1
                if dmin is None or dmin > 1:
                    dmin = 1
                dmax = max(dmax, 1)
            else:
                s0, s1, sl, sc, sdmin, sdmax = rel(h + 1, child_ratio, queue2)
                lf = math.log(ff)
                r0 += f * s0
                r1 += ff * (s1 + lf * float(s0))
                rl += ff * (sl + float(s0))
                cnt += sc
                if dmin is None or sdmin + 1 < dmin:
                    dmin = sdmin + 1
                dmax = max(dmax, sdmax + 1)
        result = (r0, r1, rl, cnt, dmin, dmax)
        memo[key] = result
        return result

    inv_eta_k = 1 / eta_k
    mass_total = Fraction(0)
    entropy = KahanSum()
    phi = 0
    xi_min = None
    xi_max = 0
    for root in _roots(params, tables):
        tag, nu0 = root
        mass = Fraction(nu0, L)
        queue = () if isinstance(tag, tuple) else (tag,)
        ratio = mass * inv_eta_k
        mf = float(mass)
        if ratio < 1:
            mass_total += mass
            entropy.add(mf * math.log(mf))
            phi += 1
            xi_min = 1 if xi_min is None else min(xi_min, 1)
            xi_max = max(xi_max, 1)
            continue
        r0, r1, rl, cnt, dmin, dmax = rel(1, ratio, queue)
        mass_total += mass * r0
        entropy.add(mf * r1 + mf * math.log(mf) * float(r0))
        phi += cnt
        xi_min = (1 + dmin) if xi_min is None else min(xi_min, 1 + dmin)
        xi_max = max(xi_max, 1 + dmax)
    # Mass-weighted length stays exact via a parallel memo over the same
    # state space; absolute length of a stopped word is 1 + its depth
    # below the root.
    mass_len_total = Fraction(0)
    exact_memo: dict = {}

    def rel_len(h: int, ratio: Fraction, queue: tuple) -> tuple:
        key = (h, ratio, queue)
        hit = exact_memo.get(key)
        if hit is not None:
            return hit
        r0 = Fraction(0)
        rlen = Fraction(0)
        if not rises[h]:
            transitions = [(f, queue + (jj,)) for jj, f in append_fracs]
        elif queue:
            jstar = queue[0]
            rest = queue[1:]
            transitions = [(f, rest + (jj,)) for _, f, jj in promote_fracs[jstar]]
        else:
            transitions = [(f, ()) for f in pair_fracs]
        for f, queue2 in transitions:
            child_ratio = ratio * f
            if child_ratio < 1:
                r0 += f
                rlen += f
            else:
                s0, slen = rel_len(h + 1, child_ratio, queue2)
                r0 += f * s0
                rlen += f * (slen + s0)
        result = (r0, rlen)
        exact_memo[key] = result
        return result

    for root in _roots(params, tables):
        tag, nu0 = root
        mass = Fraction(nu0, L)
        queue = () if isinstance(tag, tuple) else (tag,)
        ratio = mass * inv_eta_k
        if ratio < 1:
            mass_len_total += mass
            continue
        r0, rlen = rel_len(1, ratio, queue)
        mass_len_total += mass * (rlen + r0)

    return StoppedStats(
        params=params,
        k=k,
        eta_k=eta_k,
        phi_k=phi,
        xi_min=xi_min or 0,
        xi_max=xi_max,
        mass_total=mass_total,
        mass_len_total=mass_len_total,
        entropy_sum=entropy.total,
    )


@dataclass(frozen=True)
class PartitionStats:
    """Exact bound checks for one partition level."""

    k: int
    phi_k: int
    xi_min: int
    xi_max: int
    mass_exact: bool          # total mass == 1
    phi_window_ok: bool       # phi * eta^(k+1) <= 1 < phi * eta^k
    xi_window_ok: bool        # p_min^xi_min < eta^k <= q_max^(xi_max - 1)
    ratio_bounds_ok: bool     # every parent-to-word mass ratio in [eta, q_max]

    @property
    def ok(self) -> bool:
        return (self.mass_exact and self.phi_window_ok
                and self.xi_window_ok and self.ratio_bounds_ok)


def _ratio_bounds_hold(params: DerivedParams) -> bool:
    # Single-step mass ratios come from a finite factor set; checking
    # the set once covers every word of every level exactly.
    eta, q_max = params.eta, params.q_max
    for j in params.gy:
        if not eta <= params.q[j] <= q_max:
            return False
        for i in params.gx[j]:
            ratio = params.prob(i, j) / params.q[j]
            for j2 in params.gy:
                if not eta <= ratio * params.q[j2] <= q_max:
                    return False
    if ell(params, 1) == 1:  # theta = 1 steps append whole pairs
        for ij, w in zip(params.spec.digits, params.spec.weights):
            if not eta <= w <= q_max:
                return False
    return True


def partition_stats(partition) -> PartitionStats:
    """Exact invariant checks; accepts a collected partition or StoppedStats."""
    params = partition.params
    k = partition.k
    eta = params.eta
    eta_k = eta ** k
    phi = partition.phi_k
    return PartitionStats(
        k=k,
        phi_k=phi,
        xi_min=partition.xi_min,
        xi_max=partition.xi_max,
        mass_exact=partition.mass_total == 1,
        phi_window_ok=(phi * eta ** (k + 1) <= 1 < phi * eta_k),
        xi_window_ok=(
            params.p_min ** partition.xi_min < eta_k
            and eta_k <= params.q_max ** (partition.xi_max - 1)
        ),
        ratio_bounds_ok=_ratio_bounds_hold(params),
    )


def check_phi_growth(earlier, later) -> bool:
    """phi_k <= phi_{k+1} <= eta^-2 phi_k, exactly."""
    if later.k != earlier.k + 1:
        raise ValueError("growth check needs consecutive levels")
    eta = earlier.params.eta
    return (earlier.phi_k <= later.phi_k
            and Fraction(later.phi_k) <= Fraction(earlier.phi_k) * (1 / eta) ** 2)


@dataclass(frozen=True)
class DisjointnessReport:
    checked: int
    violations: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_square_disjointness(partition: PartitionLambdaK) -> DisjointnessReport:
    """Verify that all square interiors are pairwise disjoint, exactly.

    Grid-aligned intervals nest if and only if their digit strings are
    prefix-comparable, so interior intersection is equivalent to
    simultaneous x- and y-digit prefix nesting; no interval arithmetic
    beyond digit comparison is needed.  Sorting by y-digits makes each
    word's y-ancestors a contiguous stack, and candidate x-strings per
    ancestor group live in one hash set, so the scan is near-linear.
    """
    partition._need_words()
    params = partition.params
    items = []
    for idx in range(partition.phi_k):
        enc = partition.encodings[idx]
        h = partition.lengths[idx]
        l = ell(params, h)
        y = bytes(enc[1:2 * l:2]) + enc[2 * l:]
        x = bytes(enc[0:2 * l:2])
        items.append((y, x, idx))
    items.sort()

    violations: list[tuple[int, int]] = []
    # Stack of groups (y, xlen, {x digits -> idx}); every group below the
    # top holds a proper prefix of the y above it after popping.
    stack: list[tuple[bytes, int, dict]] = []
    for y, x, idx in items:
        while stack and not y.startswith(stack[-1][0]):
            stack.pop()
        merged = False
        for gy, gxlen, gxmap in stack:
            if gy == y:
                other = gxmap.get(x)
                if other is not None:
                    violations.append((other, idx))  # identical word
                else:
                    gxmap[x] = idx
                merged = True
            else:
                other = gxmap.get(x[:gxlen])
                if other is not None:
                    violations.append((other, idx))
        if not merged:
            stack.append((y, len(x), {x: idx}))
    return DisjointnessReport(checked=partition.phi_k, violations=tuple(violations))


def squares_overlap(a, b) -> bool:
    """Exact interior-overlap test for two approximate squares (oracle path)."""
    return (max(a.x_low, b.x_low) < min(a.x_high(), b.x_high())
            and max(a.y_low, b.y_low) < min(a.y_high(), b.y_high()))


def sample_digit_matrix(
    params: DerivedParams, count: int, depth: int, seed: int, threads: int = 1
) -> np.ndarray:
    """Draw an i.i.d. digit-index matrix of shape (count, depth).

    Sampling is sharded in fixed row blocks with per-shard generators
    seeded by (seed, shard); the result is byte-identical for any
    thread count.
    """
    probs = np.array([float(w) for w in params.spec.weights])
    cum = np.cumsum(probs)
    card = len(probs)
    out = np.empty((count, depth), dtype=np.uint8)

    shards = [(s, lo, min(lo + _SHARD_ROWS, count))
              for s, lo in enumerate(range(0, count, _SHARD_ROWS))]

    def fill(shard):
        s, lo, hi = shard
        rng = np.random.default_rng([int(seed), s])
        u = rng.random((hi - lo, depth))
        idx = np.searchsorted(cum, u, side="right")
        np.minimum(idx, card - 1, out=idx)
        out[lo:hi] = idx.astype(np.uint8)

    if threads <= 1 or len(shards) <= 1:
        for shard in shards:
            fill(shard)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, shards))
    return out


def sample_address(
    params: DerivedParams, depth: int, seed: int
) -> tuple[CarpetWord, tuple[float, float]]:
    """One random address: the depth-long word and the sampled point."""
    idx = sample_digit_matrix(params, 1, depth, seed)[0]
    digits = params.spec.digits
    address = [digits[t] for t in idx]
    word = word_from_digits(params, address, depth)
    x = math.fsum(i / params.n ** t for t, (i, _) in enumerate(address, start=1))
    y = math.fsum(j / params.m ** t for t, (_, j) in enumerate(address, start=1))
    return word, (x, y)


@dataclass(frozen=True)
class LocalDimEstimate:
    k: int
    samples: int
    mean: float
    std: float
    stderr: float


def local_dimension_estimate(
    params: DerivedParams, k: int, samples: int, seed: int, threads: int = 1
) -> LocalDimEstimate:
    """Monte Carlo mean of log mass(word(x, k)) / (-k log m).

    The level-k word of a sampled address keeps the first ell(k) digit
    pairs whole and only the column digit beyond, so its log mass is a
    sum of per-digit table lookups.
    """
    if k < 1 or samples < 1:
        raise ValueError("need k >= 1 and samples >= 1")
    idx = sample_digit_matrix(params, samples, k, seed, threads=threads)
    log_p = np.array([math.log(w) for w in params.spec.weights])
    log_q = np.array([math.log(params.q[j]) for _, j in params.spec.digits])
    l = ell(params, k)
    log_mass = log_p[idx[:, :l]].sum(axis=1) + log_q[idx[:, l:]].sum(axis=1)
    vals = log_mass / (-k * math.log(params.m))
    mean = float(np.mean(vals))
    std = float(np.std(vals, ddof=1)) if samples > 1 else 0.0
    return LocalDimEstimate(
        k=k, samples=samples, mean=mean, std=std,
        stderr=std / math.sqrt(samples),
    )
