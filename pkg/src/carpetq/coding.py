"""Product-order words and the replacement antichain.

A carpet word splits into a block of digit pairs and a column tail.
Comparing the two blocks by prefix separately, instead of through the
geometric refinement order, yields a coarser partial order in which two
stopping words can nest even though their carpet cylinders never do.
``build_antichain`` repairs those nestings: working up a short ladder of
lengths, it removes each offending sibling family and inserts an
equal-mass family obtained by interchanging the last pair's column
digit with the last tail digit.  Family masses and word lengths are
preserved exactly at every step, so the result is a maximal antichain
carrying the same length-weighted mass as the stopping set it replaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .measure import DerivedParams
from .summation import KahanSum
from .words import CarpetWord, ell


__all__ = [
    "CodingWord",
    "CodingWordError",
    "AntichainInvariantError",
    "AntichainCollisionError",
    "StageLog",
    "Antichain",
    "AntichainReport",
    "l_map",
    "l_inverse",
    "make_coding_word",
    "lambda_mass",
    "coding_predecessor",
    "is_descendant",
    "comparable",
    "naive_comparable_pairs",
    "xi_sequence",
    "swap_tail",
    "raw_coding_antichain",
    "build_antichain",
    "verify_maximal_antichain",
]


class CodingWordError(ValueError):
    """Raised for digit strings that do not form a valid coding word."""


class AntichainInvariantError(RuntimeError):
    """A structural guarantee of the replacement construction failed."""


class AntichainCollisionError(AntichainInvariantError):
    """Two replacement families produced the same word."""


@dataclass(frozen=True)
class CodingWord:
    """A pair block and a column tail, ordered blockwise by prefix.

    Unlike a carpet word, whose refinements weave tail digits into new
    pairs, a coding word descends by extending either block in place.
    The pair block length is pinned to ``ell`` of the total length.
    """

    pairs: tuple[tuple[int, int], ...]
    tail: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.pairs) + len(self.tail)


def make_coding_word(params: DerivedParams, pairs, tail) -> CodingWord:
    """Validate digits and the block-length constraint, then build."""
    pairs = tuple((int(i), int(j)) for i, j in pairs)
    tail = tuple(int(j) for j in tail)
    total = len(pairs) + len(tail)
    if total < 1:
        raise CodingWordError("empty coding word")
    want = ell(params, total)
    if len(pairs) != want:
        raise CodingWordError(
            f"length-{total} coding word needs {want} pairs, got {len(pairs)}")
    digits = set(params.spec.digits)
    for p in pairs:
        if p not in digits:
            raise CodingWordError(f"pair {p} not a map of this carpet")
    for j in tail:
        if j not in params.gx:
            raise CodingWordError(f"tail digit {j} hits no occupied column")
    return CodingWord(pairs, tail)


def l_map(word: CarpetWord) -> CodingWord:
    """Reinterpret a carpet word blockwise; digits are untouched."""
    return CodingWord(word.pairs, word.tail)


def l_inverse(params: DerivedParams, w: CodingWord) -> CarpetWord:
    """Inverse reinterpretation; rejects malformed block lengths."""
    total = len(w)
    if len(w.pairs) != ell(params, total):
        raise CodingWordError(
            f"length-{total} word needs {ell(params, total)} pairs, "
            f"got {len(w.pairs)}")
    return CarpetWord(w.pairs, w.tail)


def lambda_mass(params: DerivedParams, w: CodingWord) -> Fraction:
    """Product mass: pair weights times column weights, exact."""
    mass = Fraction(1)
    for p in w.pairs:
        mass *= params.prob(*p)
    for j in w.tail:
        mass *= params.q[j]
    return mass


def coding_predecessor(params: DerivedParams, w: CodingWord) -> CodingWord:
    """Drop the last tail digit, or the last pair when ``ell`` stepped."""
    total = len(w)
    if total < 2:
        raise CodingWordError("length-1 coding word has no predecessor")
    if ell(params, total) == ell(params, total - 1):
        return CodingWord(w.pairs, w.tail[:-1])
    return CodingWord(w.pairs[:-1], w.tail)


def is_descendant(a: CodingWord, b: CodingWord) -> bool:
    """True iff both blocks of ``a`` are prefixes of those of ``b``."""
    return (len(a.pairs) <= len(b.pairs)
            and len(a.tail) <= len(b.tail)
            and a.pairs == b.pairs[:len(a.pairs)]
            and a.tail == b.tail[:len(a.tail)])


def comparable(a: CodingWord, b: CodingWord) -> bool:
    return is_descendant(a, b) or is_descendant(b, a)


def naive_comparable_pairs(words) -> list[tuple[int, int]]:
    """All-pairs comparability scan; a slow oracle for small sets."""
    words = list(words)
    if len(words) > 10_000:
        raise ValueError("all-pairs scan refused above 10^4 words")
    hits = []
    for x in range(len(words)):
        for y in range(x + 1, len(words)):
            if comparable(words[x], words[y]):
                hits.append((x, y))
    return hits


def xi_sequence(partition) -> tuple[int, ...]:
    """The ladder of lengths at which the pair block grows.

    Starts at the shortest word length; each later entry is the first
    length in the window with one more pair than its predecessor.  The
    entry count always equals the pair-count spread plus one.
    """
    params = partition.params
    lo, hi = partition.xi_min, partition.xi_max
    seq = [lo]
    cur = lo
    while ell(params, cur) < ell(params, hi):
        h = cur + 1
        while ell(params, h) != ell(params, cur) + 1:
            h += 1
        seq.append(h)
        cur = h
    if len(seq) != ell(params, hi) - ell(params, lo) + 1:
        raise AntichainInvariantError("length ladder miscounted")
    return tuple(seq)


def swap_tail(params: DerivedParams, w: CodingWord, i: int) -> CodingWord:
    """Interchange the last pair's column digit with the last tail digit.

    The last pair (i_l, j_l) becomes (i, j_t) where j_t is the final
    tail digit, and the final tail digit becomes j_l.  Total length and
    block lengths are unchanged, so the result is again a valid coding
    word; its mass differs only through the swapped pair weight.
    """
    if not w.pairs or not w.tail:
        raise CodingWordError("swap needs both a pair block and a tail")
    j_l = w.pairs[-1][1]
    j_t = w.tail[-1]
    if i not in params.gx[j_t]:
        raise CodingWordError(f"digit {i} does not occupy column {j_t}")
    return CodingWord(w.pairs[:-1] + ((i, j_t),), w.tail[:-1] + (j_l,))


@dataclass(frozen=True)
class StageLog:
    """Summary of one replacement stage."""

    stage: int                # 2-based, matching the ladder position
    target_length: int
    family_count: int
    removed_count: int        # words taken out at the target length
    inserted_count: int       # words put back in their place
    removed_mass: Fraction    # total mass exchanged (equal both ways)
    removed_entropy: float    # sum of mass*log(mass) over removed words
    inserted_entropy: float
    max_family_gap: float     # max over families of |entropy gap| / mass
    families: Optional[tuple] = None  # (removed words, inserted words) pairs

    @property
    def entropy_shift(self) -> float:
        return self.inserted_entropy - self.removed_entropy


@dataclass(frozen=True)
class Antichain:
    """A finite set of coding words with exact masses and stage history.

    Words are stored columnwise: interleaved pair bytes, tail bytes, a
    length, and a scaled integer mass per word (denominator L**length,
    where L clears all weight denominators).  ``base_*`` aggregates
    describe the stopping set the construction started from.
    """

    params: DerivedParams
    k: int
    xi_stages: tuple[int, ...]
    lengths: list
    pair_bytes: list
    tail_bytes: list
    nus: list
    mass_total: Fraction
    mass_len_total: Fraction
    entropy_sum: float
    base_size: int
    base_entropy_sum: float
    base_mass_len_total: Fraction
    stage_logs: tuple[StageLog, ...]

    @property
    def size(self) -> int:
        return len(self.lengths)

    @property
    def l_min(self) -> int:
        return min(self.lengths)

    @property
    def l_max(self) -> int:
        return max(self.lengths)

    def word_at(self, idx: int) -> CodingWord:
        ob = self.pair_bytes[idx]
        pairs = tuple((ob[r], ob[r + 1]) for r in range(0, len(ob), 2))
        return CodingWord(pairs, tuple(self.tail_bytes[idx]))

    def mass_at(self, idx: int) -> Fraction:
        L = self.params.denom_lcm
        return Fraction(self.nus[idx], L ** self.lengths[idx])

    def iter_words(self) -> Iterator[tuple[CodingWord, Fraction]]:
        for idx in range(self.size):
            yield self.word_at(idx), self.mass_at(idx)


def _bucketize(partition) -> dict[int, dict[tuple[bytes, bytes], int]]:
    # length -> {(pair bytes, tail bytes) -> scaled mass}
    params = partition.params
    if partition.encodings is None:
        raise ValueError("antichain construction needs a collected partition")
    buckets: dict[int, dict[tuple[bytes, bytes], int]] = {}
    for idx in range(partition.phi_k):
        h = partition.lengths[idx]
        enc = partition.encodings[idx]
        split = 2 * ell(params, h)
        buckets.setdefault(h, {})[(enc[:split], enc[split:])] = \
            partition.nus[idx]
    return buckets


def _columns(params, k, buckets, xi_stages, base, stage_logs):
    # Deterministic flatten: by length, then bytes.
    L = params.denom_lcm
    log_l = math.log(L)
    lengths: list[int] = []
    pair_bytes: list[bytes] = []
    tail_bytes: list[bytes] = []
    nus: list[int] = []
    mass_total = Fraction(0)
    mass_len_total = Fraction(0)
    entropy = KahanSum()
    for h in sorted(buckets):
        bucket = buckets[h]
        if not bucket:
            continue
        nu_sum = 0
        for (ob, rb) in sorted(bucket):
            nu = bucket[(ob, rb)]
            lengths.append(h)
            pair_bytes.append(ob)
            tail_bytes.append(rb)
            nus.append(nu)
            nu_sum += nu
            log_mass = math.log(nu) - h * log_l
            entropy.add(math.exp(log_mass) * log_mass)
        mass_h = Fraction(nu_sum, L ** h)
        mass_total += mass_h
        mass_len_total += mass_h * h
    base_size, base_entropy, base_mass_len = base
    return Antichain(
        params=params,
        k=k,
        xi_stages=xi_stages,
        lengths=lengths,
        pair_bytes=pair_bytes,
        tail_bytes=tail_bytes,
        nus=nus,
        mass_total=mass_total,
        mass_len_total=mass_len_total,
        entropy_sum=entropy.total,
        base_size=base_size,
        base_entropy_sum=base_entropy,
        base_mass_len_total=base_mass_len,
        stage_logs=tuple(stage_logs),
    )


def raw_coding_antichain(partition) -> Antichain:
    """The stopping set reinterpreted blockwise, with no replacements.

    This is the construction's starting point.  It conserves mass but
    may contain nested pairs under the blockwise order; feed it to
    ``verify_maximal_antichain`` to surface them.
    """
    params = partition.params
    buckets = _bucketize(partition)
    base = (partition.phi_k, partition.entropy_sum, partition.mass_len_total)
    return _columns(params, partition.k, buckets, (partition.xi_min,),
                    base, ())


def build_antichain(partition, *, keep_stage_words: Optional[bool] = None
                    ) -> Antichain:
    """Rebuild a stopping set into a maximal antichain, stage by stage.

    Stage l+1 targets the ladder length xi_{l+1}.  Words of that length
    with a blockwise ancestor among the shorter survivors are grouped
    into sibling families (same word up to the x digit of the final
    pair); each family is swapped for the equal-mass family produced by
    ``swap_tail`` on its smallest-x representative.  All mass identities
    are checked in exact integers as the stages run:

    * each family is complete (one sibling per occupant of its column);
    * removed and inserted family masses agree exactly;
    * every inserted word sits strictly below the stopping threshold
      while its predecessor sits at or above it;
    * no inserted word collides with a survivor or another insertion.

    ``keep_stage_words`` attaches full word-level family logs (default:
    only when k <= 4).
    """
    params = partition.params
    k = partition.k
    if keep_stage_words is None:
        keep_stage_words = k <= 4
    L = params.denom_lcm
    log_l = math.log(L)
    a = {ij: int(w * L)
         for ij, w in zip(params.spec.digits, params.spec.weights)}
    b = {j: int(params.q[j] * L) for j in params.gy}
    eta_k = params.eta ** k
    eta_num_k, eta_den_k = eta_k.numerator, eta_k.denominator

    buckets = _bucketize(partition)
    base = (partition.phi_k, partition.entropy_sum, partition.mass_len_total)
    xi_stages = xi_sequence(partition)
    xi_1 = xi_stages[0]
    stage_logs: list[StageLog] = []

    def entropy_of(nu: int, h: int) -> float:
        log_mass = math.log(nu) - h * log_l
        return math.exp(log_mass) * log_mass

    for pos in range(1, len(xi_stages)):
        target = xi_stages[pos]
        bucket = buckets.get(target, {})
        # Words at the target length whose blockwise ancestor survived at
        # some shorter length.  Ancestor prefixes never overrun a block:
        # both block lengths are nondecreasing in the word length.
        flagged = []
        for (ob, rb) in bucket:
            for h in range(xi_1, target):
                sub = buckets.get(h)
                if not sub:
                    continue
                lh = ell(params, h)
                if (ob[:2 * lh], rb[:h - lh]) in sub:
                    flagged.append((ob, rb))
                    break
        if not flagged:
            stage_logs.append(StageLog(
                stage=pos + 1, target_length=target, family_count=0,
                removed_count=0, inserted_count=0,
                removed_mass=Fraction(0), removed_entropy=0.0,
                inserted_entropy=0.0, max_family_gap=0.0,
                families=() if keep_stage_words else None))
            continue

        families: dict[tuple[bytes, int, bytes], list] = {}
        for (ob, rb) in flagged:
            families.setdefault((ob[:-2], ob[-1], rb), []).append(ob[-2])

        removed_count = 0
        inserted_count = 0
        removed_nu = 0
        removed_entropy = KahanSum()
        inserted_entropy = KahanSum()
        max_gap = 0.0
        logged_families = [] if keep_stage_words else None
        inserts: list[tuple[tuple[bytes, bytes], int]] = []
        h_scale = L ** target

        for (stem, j_l, rb), xs in sorted(families.items()):
            if not rb:
                raise AntichainInvariantError(
                    "replacement family with an empty tail")
            # Completeness: one sibling per occupant of column j_l.
            if sorted(xs) != list(params.gx[j_l]):
                raise AntichainInvariantError(
                    f"family over column {j_l} is missing siblings")
            j_t = rb[-1]
            rep_i = min(xs)
            rep_key = (stem + bytes((rep_i, j_l)), rb)
            nu_rep = bucket[rep_key]
            stem_nu, rem = divmod(nu_rep, a[(rep_i, j_l)] * b[j_t])
            if rem:
                raise AntichainInvariantError("family mass not factorable")

            fam_nu = 0
            fam_removed_e = 0.0
            for i in xs:
                key = (stem + bytes((i, j_l)), rb)
                nu = bucket.pop(key)
                fam_nu += nu
                e = entropy_of(nu, target)
                fam_removed_e += e
                removed_entropy.add(e)
                removed_count += 1
            removed_nu += fam_nu

            grb = rb[:-1] + bytes((j_l,))
            fam_g_nu = 0
            fam_inserted_e = 0.0
            g_keys = []
            for i in params.gx[j_t]:
                nu_g = stem_nu * a[(i, j_t)] * b[j_l]
                gkey = (stem + bytes((i, j_t)), grb)
                if nu_g * eta_den_k >= eta_num_k * h_scale:
                    raise AntichainInvariantError(
                        "inserted word at or above the stopping threshold")
                nu_pred = nu_g // a[(i, j_t)]
                if nu_pred * eta_den_k * L < eta_num_k * h_scale:
                    raise AntichainInvariantError(
                        "inserted word's predecessor below the threshold")
                fam_g_nu += nu_g
                e = entropy_of(nu_g, target)
                fam_inserted_e += e
                inserted_entropy.add(e)
                inserts.append((gkey, nu_g))
                g_keys.append(gkey)
                inserted_count += 1
            if fam_g_nu != fam_nu:
                raise AntichainInvariantError("family mass not conserved")
            gap = abs(fam_inserted_e - fam_removed_e) / (fam_nu / h_scale)
            max_gap = max(max_gap, gap)
            if keep_stage_words:
                logged_families.append((
                    tuple(_decode(stem + bytes((i, j_l)), rb) for i in xs),
                    tuple(_decode(*gk) for gk in g_keys),
                ))

        for gkey, nu_g in inserts:
            if gkey in bucket:
                raise AntichainCollisionError(
                    f"replacement collision at length {target}")
            bucket[gkey] = nu_g

        stage_logs.append(StageLog(
            stage=pos + 1,
            target_length=target,
            family_count=len(families),
            removed_count=removed_count,
            inserted_count=inserted_count,
            removed_mass=Fraction(removed_nu, h_scale),
            removed_entropy=removed_entropy.total,
            inserted_entropy=inserted_entropy.total,
            max_family_gap=max_gap,
            families=tuple(logged_families) if keep_stage_words else None,
        ))

    return _columns(params, k, buckets, xi_stages, base, stage_logs)


def _decode(ob: bytes, rb: bytes) -> CodingWord:
    pairs = tuple((ob[r], ob[r + 1]) for r in range(0, len(ob), 2))
    return CodingWord(pairs, tuple(rb))


@dataclass(frozen=True)
class AntichainReport:
    """Maximality certificate: exact mass plus pairwise incomparability."""

    k: int
    size: int
    mass_total: Fraction
    mass_exact: bool
    comparable_pairs: tuple[tuple[int, int], ...]
    below_threshold: bool     # every mass < eta^k
    l_min: int
    l_max: int

    @property
    def ok(self) -> bool:
        return self.mass_exact and not self.comparable_pairs


def verify_maximal_antichain(antichain: Antichain) -> AntichainReport:
    """Certify maximality from scratch.

    Masses are resummed exactly from the stored integers.  For the
    incomparability scan, each word's unique candidate ancestor at every
    shorter occupied length is looked up in a per-length hash index, so
    the scan is linear in the word count times the length spread.
    Exact mass one plus pairwise incomparability certify that the
    cylinders tile the whole product space.
    """
    params = antichain.params
    L = params.denom_lcm
    eta_k = params.eta ** antichain.k
    eta_num_k, eta_den_k = eta_k.numerator, eta_k.denominator

    index: dict[int, dict[tuple[bytes, bytes], int]] = {}
    nu_by_len: dict[int, int] = {}
    below = True
    for idx in range(antichain.size):
        h = antichain.lengths[idx]
        nu = antichain.nus[idx]
        index.setdefault(h, {})[
            (antichain.pair_bytes[idx], antichain.tail_bytes[idx])] = idx
        nu_by_len[h] = nu_by_len.get(h, 0) + nu
        if nu * eta_den_k >= eta_num_k * L ** h:
            below = False
    mass_total = sum(
        (Fraction(nu, L ** h) for h, nu in nu_by_len.items()), Fraction(0))

    shorter = sorted(index)
    violations: list[tuple[int, int]] = []
    for idx in range(antichain.size):
        h = antichain.lengths[idx]
        ob = antichain.pair_bytes[idx]
        rb = antichain.tail_bytes[idx]
        for hp in shorter:
            if hp >= h:
                break
            lh = ell(params, hp)
            anc = index[hp].get((ob[:2 * lh], rb[:hp - lh]))
            if anc is not None:
                violations.append((anc, idx))
    return AntichainReport(
        k=antichain.k,
        size=antichain.size,
        mass_total=mass_total,
        mass_exact=mass_total == 1,
        comparable_pairs=tuple(violations),
        below_threshold=below,
        l_min=antichain.l_min if antichain.size else 0,
        l_max=antichain.l_max if antichain.size else 0,
    )
