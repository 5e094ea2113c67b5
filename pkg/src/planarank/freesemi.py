"""Enumeration of finitely generated relatively free semigroups.

Given an identity system and a generator count n, this module computes the
n-generated relatively free semigroup of the variety the system defines, as
a finite right-action table with shortlex-minimal word representatives.

Correctness rests on a quotient sandwich, and the code below is organised
around it.  During construction, word classes are merged only when justified
by an instance of a defining identity (variables replaced by concrete
representative words) or by congruence propagation of earlier merges.  Every
merged pair therefore lies in the fully invariant congruence of the system,
so the candidate quotient S always maps onto the relatively free semigroup F
by a surjection fixing generators.  The verification pass then checks,
exhaustively over all substitutions of S-elements for variables, that S is
associative and satisfies every defining identity.  When the pass succeeds,
S lies in the variety and is generated by its n generators, so F in turn
maps onto S fixing generators; two generator-fixing surjections between
finite semigroups compose to generator-fixing surjective endomorphisms,
which on finite carriers are automorphisms, hence both maps are inverse
isomorphisms and S is exactly F.  When the pass fails, each failing pair of
elements evaluates two words that are provably congruent (an identity
instance in context), so merging the pair is again justified; merging
strictly decreases the element count, which forces termination at a
verified fixed point.  Bounded substitution tracing during the search phase
is purely an accelerant: it decides how fast the table closes, never what
the final object is.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from planarank.catalog import IdentitySystem
from planarank.words import Identity, Word, _match_symbols
from planarank import textio


DEFAULT_VERIFY_BUDGET = 60_000_000_000


class VerificationBudgetError(Exception):
    """Raised when an exhaustive check would exceed its work budget."""


class _CapExceeded(Exception):
    def __init__(self, reason: str):
        self.reason = reason


@dataclass
class EnumerationCaps:
    max_elements: int = 50_000
    max_word_length: int = 24
    max_subst_length: int = 4

    def __post_init__(self):
        if min(self.max_elements, self.max_word_length, self.max_subst_length) < 1:
            raise ValueError("caps must be positive")


class FiniteSemigroup:
    """A finite semigroup with shortlex word representatives.

    Elements are 0..size-1 in shortlex order of their representatives; the
    first n_gens elements are the free generators.  The right action by
    generators determines the full multiplication table: the product of i
    and j folds j's representative through the action starting from i.
    """

    def __init__(self, n_gens: int, reps: tuple[tuple[int, ...], ...],
                 action: tuple[tuple[int, ...], ...], label: str = ""):
        self.n_gens = n_gens
        self.reps = reps
        self.action = action
        self.label = label
        self._table: Optional[np.ndarray] = None
        self._action_arr: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return len(self.reps)

    @property
    def generators(self) -> tuple[int, ...]:
        return tuple(range(self.n_gens))

    def rep_word(self, e: int) -> Word:
        return Word(self.reps[e])

    def action_array(self) -> np.ndarray:
        if self._action_arr is None:
            self._action_arr = np.array(self.action, dtype=np.int32).reshape(self.size, self.n_gens)
        return self._action_arr

    def table(self) -> np.ndarray:
        """Full size x size multiplication table (derived, cached)."""
        if self._table is None:
            s = self.size
            act = self.action_array()
            m = np.empty((s, s), dtype=np.int32)
            base = np.arange(s, dtype=np.int32)
            for j, rep in enumerate(self.reps):
                v = base
                for g in rep:
                    v = act[v, g]
                m[:, j] = v
            self._table = m
        return self._table

    def product(self, i: int, j: int) -> int:
        return int(self.table()[i, j])

    def __repr__(self):
        tag = f" {self.label}" if self.label else ""
        return f"FiniteSemigroup(size={self.size}, gens={self.n_gens}{tag})"

    # --- text form -------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"semigroup gens={self.n_gens} size={self.size}"
                 + (f" label={self.label}" if self.label else "")]
        for e, rep in enumerate(self.reps):
            lines.append(f"rep {e} {textio.word_to_text(rep)}")
        for e in range(self.size):
            row = " ".join(str(self.action[e][g]) for g in range(self.n_gens))
            lines.append(f"action {e} {row}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FiniteSemigroup":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if head[0] != "semigroup":
            raise ValueError("not a semigroup table")
        fields = dict(part.split("=", 1) for part in head[1:])
        n_gens, size = int(fields["gens"]), int(fields["size"])
        reps: list[Optional[tuple[int, ...]]] = [None] * size
        action: list[Optional[tuple[int, ...]]] = [None] * size
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "rep":
                reps[int(parts[1])] = tuple(textio.parse_word(parts[2]).letters)
            elif parts[0] == "action":
                action[int(parts[1])] = tuple(int(x) for x in parts[2:])
            else:
                raise ValueError(f"bad line: {ln!r}")
        if any(r is None for r in reps) or any(a is None for a in action):
            raise ValueError("incomplete semigroup table")
        return cls(n_gens, tuple(reps), tuple(action), fields.get("label", ""))


@dataclass
class EnumerationOutcome:
    """CONVERGED with the finished semigroup, or INDETERMINATE with a reason."""

    semigroup: Optional[FiniteSemigroup] = None
    reason: Optional[str] = None
    partial: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.semigroup is None) == (self.reason is None):
            raise ValueError("exactly one of semigroup/reason must be set")

    @property
    def converged(self) -> bool:
        return self.semigroup is not None


def element_of(S: FiniteSemigroup, w: Word) -> int:
    """The element of S a word evaluates to (fold through the right action)."""
    if w.max_letter() >= S.n_gens:
        raise ValueError(f"word uses generator {w.max_letter()} but S has {S.n_gens}")
    e = w.letters[0]
    for g in w.letters[1:]:
        e = S.action[e][g]
    return e


# ---------------------------------------------------------------------------
# vectorised exhaustive checks (shared by verification and refinement)

_CHUNK_CELLS = 4_000_000


def _check_work(size: int, identities) -> int:
    work = size ** 3  # associativity
    for ident in identities:
        k = len(ident.variables())
        splittable = k == 4 and any(
            {ls[2], ls[3]} == {rs[2], rs[3]}
            for ls in _split_two_two(ident.lhs.symbols)
            for rs in _split_two_two(ident.rhs.symbols))
        if splittable:
            # split fast path: half-value grids plus deduplicated comparison
            work += 8 * size ** 2 + size ** 3
        else:
            work += (size ** k) * (len(ident.lhs) + len(ident.rhs))
    return work


def _eval_env(table, symbols, env, rows, cols):
    """Evaluate a pattern under env (var -> scalar / 'rows' / 'cols')."""

    def operand(sym):
        v = env[sym]
        if v == "rows":
            return rows
        if v == "cols":
            return cols
        return v

    acc = operand(symbols[0])
    for sym in symbols[1:]:
        acc = table[acc, operand(sym)]
    return acc


def _split_two_two(symbols: tuple[int, ...]):
    """All ways to split a 4-variable pattern as prefix*suffix where the
    prefix uses one 2-set of variables and the suffix the complementary one."""
    out = []
    for i in range(1, len(symbols)):
        a, b = frozenset(symbols[:i]), frozenset(symbols[i:])
        if len(a) == 2 and len(b) == 2 and not (a & b):
            out.append((symbols[:i], symbols[i:], a, b))
    return out


def _eval_pair_grid(table, symbols, va, vb):
    """Values of a 2-variable pattern on the full (s, s) grid (va rows)."""
    s = table.shape[0]
    rows = np.arange(s, dtype=np.int32)[:, None]
    cols = np.arange(s, dtype=np.int32)[None, :]
    env = {va: "rows", vb: "cols"}
    acc = _eval_env(table, symbols, env, rows, cols)
    return np.broadcast_to(acc, (s, s))


def _split_mismatches(table: np.ndarray, ident: Identity, limit: int):
    """Fast exhaustive check for 4-variable identities whose sides both
    factor as (pattern over one variable pair) * (pattern over the other).

    Sound because associativity is verified before identities are checked,
    so each side may be evaluated through its two halves.  Substitution
    tuples inducing the same half-value pairs are deduplicated; the check
    then compares products of the deduplicated pair values, which preserves
    exhaustiveness over all s^4 tuples.  Returns None when not applicable.
    """
    match = None
    for lsplit in _split_two_two(ident.lhs.symbols):
        for rsplit in _split_two_two(ident.rhs.symbols):
            if {lsplit[2], lsplit[3]} == {rsplit[2], rsplit[3]}:
                match = (lsplit, rsplit)
                break
        if match:
            break
    if match is None:
        return None
    (lpre, lsuf, la, lb), (rpre, rsuf, ra, rb) = match
    la_t, lb_t = tuple(sorted(la)), tuple(sorted(lb))
    crossed = ra == lb
    F = _eval_pair_grid(table, lpre, *la_t)
    G = _eval_pair_grid(table, lsuf, *lb_t)
    # second component per A-tuple / B-tuple: the rhs half over the same vars
    F2 = _eval_pair_grid(table, rsuf if crossed else rpre, *la_t)
    G2 = _eval_pair_grid(table, rpre if crossed else rsuf, *lb_t)
    P = np.unique(np.stack([F.ravel(), F2.ravel()], axis=1), axis=0)
    Q = np.unique(np.stack([G.ravel(), G2.ravel()], axis=1), axis=0)
    pu, pv = P[:, 0], P[:, 1]
    qu, qv = Q[:, 0], Q[:, 1]
    if len(P) * len(Q) > 4_000_000_000:
        raise VerificationBudgetError(
            f"deduplicated split check still needs {len(P)}x{len(Q)} comparisons")
    out: list[tuple[int, int]] = []
    chunk = max(1, _CHUNK_CELLS // max(len(Q), 1))
    for lo in range(0, len(P), chunk):
        u, u2 = pu[lo : lo + chunk], pv[lo : lo + chunk]
        lhs_vals = table[u[:, None], qu[None, :]]
        if crossed:
            rhs_vals = table[qv[None, :], u2[:, None]]
        else:
            rhs_vals = table[u2[:, None], qv[None, :]]
        neq = lhs_vals != rhs_vals
        if neq.any():
            for i, j in np.argwhere(neq)[: max(0, limit - len(out))]:
                out.append((int(lhs_vals[i, j]), int(rhs_vals[i, j])))
            if len(out) >= limit:
                break
    return out


def _identity_mismatches(table: np.ndarray, ident: Identity, limit: int):
    """Element pairs (lhs value, rhs value) over all substitutions where the
    identity fails, capped at limit pairs; empty list means it holds."""
    s = table.shape[0]
    vars_ = sorted(ident.variables())
    k = len(vars_)
    if k == 4:
        fast = _split_mismatches(table, ident, limit)
        if fast is not None:
            return fast
    out: list[tuple[int, int]] = []
    full = np.arange(s, dtype=np.int32)

    if k == 1:
        env = {vars_[0]: "cols"}
        lv = _eval_env(table, ident.lhs.symbols, env, None, full)
        rv = _eval_env(table, ident.rhs.symbols, env, None, full)
        bad = np.nonzero(lv != rv)[0]
        for idx in bad[:limit]:
            out.append((int(lv[idx]), int(rv[idx])))
        return out

    row_chunk = max(1, _CHUNK_CELLS // max(s, 1))
    loop_vars = vars_[:-2]
    rvar, cvar = vars_[-2], vars_[-1]
    cols = full[None, :]
    for assign in itertools.product(range(s), repeat=len(loop_vars)):
        env = dict(zip(loop_vars, assign))
        env[rvar], env[cvar] = "rows", "cols"
        for lo in range(0, s, row_chunk):
            rows = full[lo : lo + row_chunk, None]
            lv = _eval_env(table, ident.lhs.symbols, env, rows, cols)
            rv = _eval_env(table, ident.rhs.symbols, env, rows, cols)
            neq = lv != rv
            if neq.any():
                lvb, rvb = np.broadcast_to(lv, neq.shape), np.broadcast_to(rv, neq.shape)
                idx = np.argwhere(neq)
                for i, j in idx[: max(0, limit - len(out))]:
                    out.append((int(lvb[i, j]), int(rvb[i, j])))
                if len(out) >= limit:
                    return out
    return out


def _associativity_mismatches(table: np.ndarray, limit: int):
    s = table.shape[0]
    out: list[tuple[int, int]] = []
    for a in range(s):
        x = table[table[a], :]          # (ab)c
        y = np.take(table[a], table)    # a(bc)
        neq = x != y
        if neq.any():
            idx = np.argwhere(neq)
            for b, c in idx[: max(0, limit - len(out))]:
                out.append((int(x[b, c]), int(y[b, c])))
            if len(out) >= limit:
                return out
    return out


def verify_free(S: FiniteSemigroup, sys: IdentitySystem,
                check_budget: int = DEFAULT_VERIFY_BUDGET) -> bool:
    """Exhaustively check that S is associative and satisfies every identity
    of sys under all element substitutions.  Work beyond check_budget raises
    VerificationBudgetError (distinct from a False verdict)."""
    work = _check_work(S.size, sys.identities)
    if work > check_budget:
        raise VerificationBudgetError(
            f"exhaustive check needs ~{work:.2e} operations, budget {check_budget:.2e}")
    table = S.table()
    if _associativity_mismatches(table, 1):
        return False
    for ident in sys.identities:
        if _identity_mismatches(table, ident, 1):
            return False
    return True


# ---------------------------------------------------------------------------
# the enumerator

_ROOT_TUPLE_BUDGET = 40_000
_CTX_OP_BUDGET = 3_000_000
_SUBST_VALUE_CAP = 48
_LONG_VALUE_CAP = 4_000
_REWRITE_OP_BUDGET = 50_000_000
_SEARCH_EXCURSION = 6
_SEARCH_NODES = 400
_MERGE_BATCH = 50_000


class _Enumerator:
    def __init__(self, sys: IdentitySystem, n_gens: int, caps: EnumerationCaps,
                 eager_search: bool = False):
        self.sys = sys
        self.n_gens = n_gens
        self.caps = caps
        self.eager_search = eager_search
        self.parent: list[int] = []
        self.rep: list[Optional[tuple[int, ...]]] = []
        self.tbl: list[Optional[list[int]]] = []
        self.alive = 0
        self.created = 0
        self.node_budget = max(8 * caps.max_elements, 100_000)
        self.heap: list[tuple[int, tuple[int, ...], int]] = []
        self.root_traced: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
        self.rewritten: set[tuple[int, ...]] = set()
        self.searched: set[tuple[int, ...]] = set()
        self.fresh: list[int] = []
        self.rewrite_ops = 0
        # identity sides as raw symbol tuples, deduplicated
        self.sides = [(i.lhs.symbols, i.rhs.symbols, tuple(sorted(i.variables())))
                      for i in sys.identities]
        self.gen_class = [self._new_class((g,)) for g in range(n_gens)]

    # --- union-find with table/rep propagation ---------------------------

    def _new_class(self, rep: tuple[int, ...]) -> int:
        if self.created >= self.node_budget:
            raise _CapExceeded("node budget exhausted")
        cid = len(self.parent)
        self.parent.append(cid)
        self.rep.append(rep)
        self.tbl.append([-1] * self.n_gens)
        self.ltbl.append([-1] * self.n_gens)
        self.created += 1
        self.alive += 1
        if self.alive > self.caps.max_elements:
            raise _CapExceeded(f"element cap {self.caps.max_elements} exceeded")
        heapq.heappush(self.heap, (len(rep), rep, cid))
        self.fresh.append(cid)
        self.lfill.append(cid)
        return cid

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        """Merge the classes of a and b, propagating right-action coincidences."""
        stack = [(a, b)]
        merged = False
        while stack:
            x, y = stack.pop()
            rx, ry = self.find(x), self.find(y)
            if rx == ry:
                continue
            # survivor keeps the shortlex-smaller representative
            if (len(self.rep[ry]), self.rep[ry]) < (len(self.rep[rx]), self.rep[rx]):
                rx, ry = ry, rx
            self.parent[ry] = rx
            self.alive -= 1
            merged = True
            trow, srow = self.tbl[rx], self.tbl[ry]
            for g in range(self.n_gens):
                t = srow[g]
                if t != -1:
                    if trow[g] == -1:
                        trow[g] = t
                    elif self.find(trow[g]) != self.find(t):
                        stack.append((trow[g], t))
            self.tbl[ry] = None
        return merged

    def fold(self, c: int, letters: tuple[int, ...], define: bool) -> int:
        """Right action of a word on class c; -1 if undefined and not defining."""
        for g in letters:
            c = self.find(c)
            nxt = self.tbl[c][g]
            if nxt == -1:
                if not define:
                    return -1
                nxt = self._new_class(self.rep[c] + (g,))
                self.tbl[self.find(c)][g] = nxt
            c = nxt
        return self.find(c)

    def fold_root(self, letters: tuple[int, ...], define: bool) -> int:
        c = self.gen_class[letters[0]]
        if len(letters) == 1:
            return self.find(c)
        return self.fold(c, letters[1:], define)

    # --- instance tracing --------------------------------------------------

    def _subst_values(self, max_len: int) -> list[tuple[int, ...]]:
        vals = [self.rep[r] for r in range(len(self.parent))
                if self.parent[r] == r and len(self.rep[r]) <= max_len]
        vals.sort(key=lambda w: (len(w), w))
        return vals[:_SUBST_VALUE_CAP]

    def _instances(self, s: int, max_vars: Optional[int] = None):
        """Deduplicated word-instance pairs from substituting representatives
        of length <= s, in deterministic order.  Instances longer than the
        word-length cap are skipped so that tracing never defines classes the
        cap would forbid."""
        vals = self._subst_values(s)
        seen: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
        out = []
        len_cap = self.caps.max_word_length
        for lhs, rhs, vars_ in self.sides:
            if max_vars is not None and len(vars_) > max_vars:
                continue
            count = 0
            for combo in itertools.product(vals, repeat=len(vars_)):
                count += 1
                if count > _ROOT_TUPLE_BUDGET:
                    break
                env = dict(zip(vars_, combo))
                u = tuple(x for sym in lhs for x in env[sym])
                v = tuple(x for sym in rhs for x in env[sym])
                if u == v or max(len(u), len(v)) > len_cap:
                    continue
                key = (u, v) if (len(u), u) <= (len(v), v) else (v, u)
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def _root_pass(self, s: int) -> bool:
        merged = False
        for u, v in self._instances(s):
            if (u, v) in self.root_traced:
                continue
            self.root_traced.add((u, v))
            a = self.fold_root(u, True)
            b = self.fold_root(v, True)
            if a != b:
                merged |= self.union(a, b)
        return merged

    def _long_pass(self) -> bool:
        """Instances with one whole representative of any length substituted
        into a two-variable identity (other variables bound to short reps).
        Needed for systems whose closure hinges on relations like w = w^k
        holding for every discovered word w, not just short ones."""
        longs = [self.rep[r] for r in range(len(self.parent))
                 if self.parent[r] == r]
        longs.sort(key=lambda w: (len(w), w))
        longs = longs[:_LONG_VALUE_CAP]
        shorts = self._subst_values(2)
        len_cap = self.caps.max_word_length
        merged = False
        for lhs, rhs, vars_ in self.sides:
            if len(vars_) > 2:
                continue
            for vlong in vars_:
                others = [v for v in vars_ if v != vlong]
                for w in longs:
                    for combo in itertools.product(shorts, repeat=len(others)):
                        env = dict(zip(others, combo))
                        env[vlong] = w
                        u = tuple(x for sym in lhs for x in env[sym])
                        v = tuple(x for sym in rhs for x in env[sym])
                        if u == v or max(len(u), len(v)) > len_cap:
                            continue
                        key = (u, v) if (len(u), u) <= (len(v), v) else (v, u)
                        if key in self.root_traced:
                            continue
                        self.root_traced.add(key)
                        a = self.fold_root(key[0], True)
                        b = self.fold_root(key[1], True)
                        if a != b:
                            merged |= self.union(a, b)
        return merged

    def _rewrite_word(self, r: tuple[int, ...]) -> set[tuple[int, ...]]:
        """Non-lengthening one-step identity rewrites of a word.  These reach
        equalities sitting mid-word behind an arbitrary left context, e.g.
        collapsing a*w*w -> a*w in systems where all products are idempotent,
        which bounded-substitution tracing alone misses."""
        targets: set[tuple[int, ...]] = set()
        for lhs, rhs, _vars in self.sides:
            for src, dst in ((lhs, rhs), (rhs, lhs)):
                if len(src) < len(dst):
                    continue
                for i in range(len(r) - len(src) + 1):
                    for env, end in _match_symbols(r, src, i):
                        self.rewrite_ops += 1
                        out = r[:i] + tuple(
                            x for sym in dst for x in env[sym]) + r[end:]
                        if len(out) <= len(r) and out != r:
                            targets.add(out)
        return targets

    def _drain_fresh(self):
        """Eagerly merge every newly created class with its one-step rewrite
        targets; keeps the discovered ball close to the true quotient as it
        grows instead of letting whole levels balloon between passes."""
        while self.fresh:
            c = self.fresh.pop()
            c = self.find(c)
            r = self.rep[c]
            if len(r) < 2 or r in self.rewritten:
                continue
            if self.rewrite_ops > _REWRITE_OP_BUDGET:
                self.fresh.clear()
                return
            self.rewritten.add(r)
            for out in sorted(self._rewrite_word(r)):
                d = self.fold_root(out, True)
                c2 = self.find(c)
                if c2 != d:
                    self.union(c2, d)
            if self.eager_search:
                c2 = self.find(c)
                r2 = self.rep[c2]
                if len(r2) >= 2 and r2 not in self.searched:
                    self.searched.add(r2)
                    smaller = self._search_smaller(r2)
                    if smaller is not None:
                        d = self.fold_root(smaller, True)
                        if self.find(c2) != d:
                            self.union(self.find(c2), d)

    def _rewrite_pass(self) -> bool:
        """Rewrite every live representative once (covers classes whose rep
        shrank after their eager scan)."""
        roots = [r for r in range(len(self.parent)) if self.parent[r] == r]
        roots.sort(key=lambda r: (len(self.rep[r]), self.rep[r]))
        before = self.alive
        self.fresh.extend(roots)
        self._drain_fresh()
        return self.alive < before

    def _search_smaller(self, r: tuple[int, ...]) -> Optional[tuple[int, ...]]:
        """Bounded search for a shortlex-smaller word congruent to r, over
        one-step rewrites that may temporarily lengthen the word.  Reaches
        grow-then-shrink derivations (e.g. Green-Rees style band collapses)
        that no non-lengthening rewrite sequence can realise."""
        cap = len(r) + _SEARCH_EXCURSION
        key0 = (len(r), r)
        seen = {r}
        frontier = [(len(r), r)]
        while frontier and len(seen) < _SEARCH_NODES:
            _, w = heapq.heappop(frontier)
            for lhs, rhs, _vars in self.sides:
                for src, dst in ((lhs, rhs), (rhs, lhs)):
                    for i in range(len(w) - len(src) + 1):
                        for env, end in _match_symbols(w, src, i):
                            self.rewrite_ops += 1
                            out = w[:i] + tuple(
                                x for sym in dst for x in env[sym]) + w[end:]
                            if out in seen or len(out) > cap:
                                continue
                            if (len(out), out) < key0:
                                return out
                            seen.add(out)
                            if len(seen) >= _SEARCH_NODES:
                                return None
                            heapq.heappush(frontier, (len(out), out))
        return None

    def _search_pass(self) -> bool:
        """Last-resort pass when everything else stalls: run the bounded
        grow-shrink search on every unsearched representative."""
        roots = [r for r in range(len(self.parent)) if self.parent[r] == r]
        roots.sort(key=lambda r: (len(self.rep[r]), self.rep[r]))
        merged = False
        for c in roots:
            if self.parent[c] != c:
                continue
            r = self.rep[c]
            if len(r) < 2 or r in self.searched:
                continue
            self.searched.add(r)
            smaller = self._search_smaller(r)
            if smaller is not None:
                d = self.fold_root(smaller, True)
                c2 = self.find(c)
                if c2 != d:
                    merged |= self.union(c2, d)
        return merged

    def _context_pass(self) -> bool:
        """Trace short instances from every class: handles left contexts,
        which root traces alone cannot reach."""
        pairs = self._instances(1)
        pairs += [p for p in self._instances(2, max_vars=3) if p not in set(pairs)]
        if not pairs:
            return False
        step_cost = sum(len(u) + len(v) for u, v in pairs)
        ctx_limit = max(1, _CTX_OP_BUDGET // max(step_cost, 1))
        roots = [r for r in range(len(self.parent)) if self.parent[r] == r]
        roots.sort(key=lambda r: (len(self.rep[r]), self.rep[r]))
        merged = False
        for c in roots[:ctx_limit]:
            if self.parent[c] != c:
                continue
            for u, v in pairs:
                a = self.fold(c, u, False)
                if a == -1:
                    continue
                b = self.fold(c, v, False)
                if b == -1:
                    continue
                if a != b:
                    merged |= self.union(a, b)
        return merged

    # --- search phase -------------------------------------------------------

    def close_table(self):
        """Extend and merge until every live class has a total action row."""
        level = 1
        while True:
            if self.alive > self.caps.max_elements:
                raise _CapExceeded(f"element cap {self.caps.max_elements} exceeded")
            progressed = False
            while self.heap and self.heap[0][0] <= level:
                _, w, cid = heapq.heappop(self.heap)
                r = self.find(cid)
                if self.rep[r] != w:
                    continue  # stale: class merged into one with a smaller rep
                row = self.tbl[r]
                for g in range(self.n_gens):
                    if row[g] == -1:
                        nc = self._new_class(w + (g,))
                        self.tbl[self.find(r)][g] = nc
                        row = self.tbl[self.find(r)]
                        progressed = True
                self._drain_fresh()
            merged = False
            for s in range(1, self.caps.max_subst_length + 1):
                if self._root_pass(s):
                    merged = True
                    break
            if not merged:
                merged = self._rewrite_pass()
            if not merged:
                merged = self._long_pass()
            if not merged:
                merged = self._context_pass()
            if not merged:
                merged = self._search_pass()
            if merged or progressed:
                continue
            # drop stale heap entries (classes merged into smaller reps)
            while self.heap:
                _, w, cid = self.heap[0]
                if self.rep[self.find(cid)] == w:
                    break
                heapq.heappop(self.heap)
            if not self.heap:
                return
            level = self.heap[0][0]
            if level > self.caps.max_word_length:
                raise _CapExceeded(f"word length cap {self.caps.max_word_length} exceeded")

    # --- verification / refinement ------------------------------------------

    def _snapshot(self):
        roots = [r for r in range(len(self.parent)) if self.parent[r] == r]
        roots.sort(key=lambda r: (len(self.rep[r]), self.rep[r]))
        index = {r: i for i, r in enumerate(roots)}
        s = len(roots)
        T = np.empty((s, self.n_gens), dtype=np.int32)
        for r in roots:
            i = index[r]
            for g in range(self.n_gens):
                T[i, g] = index[self.find(self.tbl[r][g])]
        return roots, index, T

    def refine(self, check_budget: int):
        """Merge elements until associativity and all identities hold.

        Returns the verified snapshot (roots, index, T, M).  Each failed
        check merges at least one pair, so the loop terminates.
        """
        while True:
            roots, index, T = self._snapshot()
            s = len(roots)
            work = _check_work(s, self.sys.identities)
            if work > check_budget:
                raise _CapExceeded(
                    f"verification budget exceeded (size {s}, ~{work:.2e} ops)")

            # representatives must fold back onto their own class
            viol: list[tuple[int, int]] = []
            for r in roots:
                f = self.fold_root(self.rep[r], False)
                if f != r:
                    viol.append((index[f], index[r]))
            if viol:
                self._merge_batch(viol, roots)
                continue

            # multiplication table from the right action
            M = np.empty((s, s), dtype=np.int32)
            base = np.arange(s, dtype=np.int32)
            for r in roots:
                v = base
                for g in self.rep[r]:
                    v = T[v, g]
                M[:, index[r]] = v

            viol = _associativity_mismatches(M, _MERGE_BATCH)
            if viol:
                self._merge_batch(viol, roots)
                continue

            for ident in self.sys.identities:
                viol = _identity_mismatches(M, ident, _MERGE_BATCH)
                if viol:
                    break
            if viol:
                self._merge_batch(viol, roots)
                continue

            return roots, index, T, M

    def _merge_batch(self, pairs, roots):
        for i, j in pairs:
            self.union(roots[i], roots[j])

    # --- final object ---------------------------------------------------------

    def build(self, check_budget: int) -> FiniteSemigroup:
        self.close_table()
        self.refine(check_budget)
        # canonical shortlex representatives: first reach over the final table
        order: dict[int, int] = {}
        reps: list[tuple[int, ...]] = []
        final_heap: list[tuple[int, tuple[int, ...], int]] = []
        for g in range(self.n_gens):
            heapq.heappush(final_heap, (1, (g,), self.find(self.gen_class[g])))
        while final_heap:
            _, w, r = heapq.heappop(final_heap)
            if r in order:
                continue
            order[r] = len(reps)
            reps.append(w)
            for g in range(self.n_gens):
                t = self.find(self.tbl[r][g])
                if t not in order:
                    heapq.heappush(final_heap, (len(w) + 1, w + (g,), t))
        action = tuple(
            tuple(order[self.find(self.tbl[r][g])] for g in range(self.n_gens))
            for r in sorted(order, key=order.get)
        )
        return FiniteSemigroup(self.n_gens, tuple(reps), action, label=self.sys.label())


def enumerate_free(sys: IdentitySystem, n_gens: int,
                   caps: Optional[EnumerationCaps] = None,
                   check_budget: int = DEFAULT_VERIFY_BUDGET) -> EnumerationOutcome:
    """Enumerate the n-generated relatively free semigroup of var(sys).

    Returns CONVERGED with the table once the exhaustive verification pass
    succeeds, or INDETERMINATE when a cap is hit first (never a wrong table:
    see the module docstring for the sandwich argument).
    """
    if n_gens < 1:
        raise ValueError("n_gens must be >= 1")
    caps = caps or EnumerationCaps()
    enum = _Enumerator(sys, n_gens, caps)
    try:
        S = enum.build(check_budget)
    except _CapExceeded:
        # retry once with the eager grow-shrink search enabled: slower per
        # class, but keeps ball growth near the true quotient for systems
        # whose collapses need lengthening derivations
        enum = _Enumerator(sys, n_gens, caps, eager_search=True)
        try:
            S = enum.build(check_budget)
        except _CapExceeded as exc:
            return EnumerationOutcome(
                reason=exc.reason,
                partial={"classes": enum.alive, "nodes": enum.created},
            )
    # the verified fixed point must re-verify as a standalone object
    if not verify_free(S, sys, check_budget):
        raise AssertionError("internal error: verified quotient failed re-verification")
    return EnumerationOutcome(semigroup=S)
