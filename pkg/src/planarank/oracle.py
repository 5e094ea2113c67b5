"""Word-problem oracle: derivation search plus finite counter-model search.

decide_equal answers whether two concrete words are equal modulo an identity
system, independently of the table-based enumeration: EQUAL comes with a
replayable step-by-step derivation, DISTINCT with a finite semigroup that
satisfies every identity of the system yet separates the two words, and
UNDECIDED only after both the bidirectional rewrite search and the
exhaustive model search are out of budget.  Everything is deterministic for
fixed budgets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from planarank.catalog import IdentitySystem
from planarank.words import Identity, Substitution, Word, pattern_matches, substitute
from planarank import textio

FORWARD = "lhs->rhs"
BACKWARD = "rhs->lhs"


class MalformedProofError(Exception):
    """A proof whose steps cannot even be interpreted against the system."""


@dataclass(frozen=True)
class ProofStep:
    position: int
    identity_index: int
    direction: str  # FORWARD | BACKWARD
    substitution: dict[int, Word]

    def sides(self, sys: IdentitySystem) -> tuple[Word, Word]:
        if not (0 <= self.identity_index < len(sys.identities)):
            raise MalformedProofError(f"identity index {self.identity_index} out of range")
        ident = sys.identities[self.identity_index]
        if self.direction == FORWARD:
            src, dst = ident.lhs, ident.rhs
        elif self.direction == BACKWARD:
            src, dst = ident.rhs, ident.lhs
        else:
            raise MalformedProofError(f"bad direction {self.direction!r}")
        sub = Substitution(self.substitution)
        try:
            return substitute(src, sub), substitute(dst, sub)
        except ValueError as exc:
            raise MalformedProofError(str(exc)) from exc


@dataclass
class DerivationProof:
    start: Word
    end: Word
    steps: list[ProofStep] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"start {textio.word_to_text(self.start)}"]
        for st in self.steps:
            sub = ",".join(f"{v}={textio.word_to_text(w)}"
                           for v, w in sorted(st.substitution.items()))
            lines.append(f"step pos={st.position} identity={st.identity_index} "
                         f"dir={'fwd' if st.direction == FORWARD else 'bwd'} sub={sub}")
        lines.append(f"end {textio.word_to_text(self.end)}")
        return "\n".join(lines) + "\n"


@dataclass
class CounterModel:
    """A finite semigroup in the variety separating the queried words."""

    order: int
    table: tuple[tuple[int, ...], ...]
    assignment: tuple[int, ...]  # generator index -> element

    def eval_word(self, w: Word) -> int:
        e = self.assignment[w.letters[0]]
        for g in w.letters[1:]:
            e = self.table[e][self.assignment[g]]
        return e

    def to_text(self) -> str:
        lines = [f"model order={self.order}"]
        for row in self.table:
            lines.append("row " + " ".join(str(x) for x in row))
        lines.append("assign " + " ".join(str(x) for x in self.assignment))
        return "\n".join(lines) + "\n"


EQUAL = "EQUAL"
DISTINCT = "DISTINCT"
UNDECIDED = "UNDECIDED"


@dataclass
class EqVerdict:
    kind: str
    proof: Optional[DerivationProof] = None
    model: Optional[CounterModel] = None

    def __post_init__(self):
        populated = (self.proof is not None) + (self.model is not None)
        if self.kind == EQUAL and (populated != 1 or self.proof is None):
            raise ValueError("EQUAL verdict carries exactly a proof")
        if self.kind == DISTINCT and (populated != 1 or self.model is None):
            raise ValueError("DISTINCT verdict carries exactly a model")
        if self.kind == UNDECIDED and populated:
            raise ValueError("UNDECIDED carries nothing")


@dataclass
class EqBudget:
    length_cap: Optional[int] = None   # None: derived from the query
    node_cap: int = 120_000
    model_order_cap: int = 4
    length_cap_ceiling_factor: int = 2  # doubling limit on UNDECIDED


def _default_length_cap(u: Word, v: Word, sys: IdentitySystem) -> int:
    longest_side = max(max(len(i.lhs), len(i.rhs)) for i in sys.identities)
    return max(len(u), len(v)) + 2 * longest_side


def rewrite_neighbors(w: Word, sys: IdentitySystem, length_cap: int) -> set[Word]:
    """All words one identity-instance replacement away from w, length-capped.

    Symmetric as a relation on the words of length <= length_cap."""
    return {nw for nw, _ in _neighbor_steps(w, sys, length_cap)}


def _neighbor_steps(w: Word, sys: IdentitySystem, length_cap: int) -> Iterator[tuple[Word, ProofStep]]:
    for idx, ident in enumerate(sys.identities):
        for direction, src, dst in ((FORWARD, ident.lhs, ident.rhs),
                                    (BACKWARD, ident.rhs, ident.lhs)):
            if len(w) - len(src) + len(dst) > length_cap:
                continue
            for pos in range(len(w) - len(src) + 1):
                for sub, end in pattern_matches(w, src, pos):
                    replacement = substitute(dst, sub)
                    nw = Word(w.letters[:pos] + replacement.letters + w.letters[end:])
                    if nw != w:
                        yield nw, ProofStep(pos, idx, direction, dict(sub.assignment))


def _reverse_step(st: ProofStep) -> ProofStep:
    direction = BACKWARD if st.direction == FORWARD else FORWARD
    return ProofStep(st.position, st.identity_index, direction, st.substitution)


def _bidirectional_search(u: Word, v: Word, sys: IdentitySystem,
                          length_cap: int, node_cap: int) -> Optional[DerivationProof]:
    """Meet-in-the-middle search over one-step rewrites; returns a proof of
    u = v or None when the budget is exhausted.  parents_* record, for each
    visited word, the predecessor and the step that produced the word."""
    if u == v:
        return DerivationProof(u, v, [])
    parents_u: dict[Word, Optional[tuple[Word, ProofStep]]] = {u: None}
    parents_v: dict[Word, Optional[tuple[Word, ProofStep]]] = {v: None}
    frontier_u, frontier_v = [u], [v]

    def chain(word: Word, parents) -> list[tuple[Word, ProofStep]]:
        out = []
        cur = word
        while parents[cur] is not None:
            prev, step = parents[cur]
            out.append((cur, step))
            cur = prev
        out.reverse()
        return out

    def assemble(meet: Word) -> DerivationProof:
        steps = [step for _, step in chain(meet, parents_u)]
        back = chain(meet, parents_v)
        for word, step in reversed(back):
            steps.append(_reverse_step(step))
        return DerivationProof(u, v, steps)

    while frontier_u and frontier_v:
        if len(parents_u) + len(parents_v) > node_cap:
            return None
        # expand the smaller frontier (deterministic tie: the u side)
        if len(frontier_u) <= len(frontier_v):
            frontier, parents, others = frontier_u, parents_u, parents_v
            new_frontier: list[Word] = []
            for word in frontier:
                for nw, step in _neighbor_steps(word, sys, length_cap):
                    if len(nw) > length_cap or nw in parents:
                        continue
                    parents[nw] = (word, step)
                    if nw in others:
                        return assemble(nw)
                    new_frontier.append(nw)
            frontier_u = sorted(new_frontier, key=Word.shortlex_key)
        else:
            new_frontier = []
            for word in frontier_v:
                for nw, step in _neighbor_steps(word, sys, length_cap):
                    if len(nw) > length_cap or nw in parents_v:
                        continue
                    parents_v[nw] = (word, step)
                    if nw in parents_u:
                        return assemble(nw)
                    new_frontier.append(nw)
            frontier_v = sorted(new_frontier, key=Word.shortlex_key)
    return None


def replay_proof(p: DerivationProof, sys: IdentitySystem) -> bool:
    """True iff every step is a legal instance replacement and the chain
    connects start to end.  Structurally broken steps raise
    MalformedProofError; a well-formed proof that does not replay is False."""
    cur = p.start
    for st in p.steps:
        src_word, dst_word = st.sides(sys)
        if st.position < 0 or st.position + len(src_word) > len(cur):
            raise MalformedProofError(
                f"step position {st.position} outside word of length {len(cur)}")
        if cur.letters[st.position : st.position + len(src_word)] != src_word.letters:
            return False
        cur = Word(cur.letters[: st.position] + dst_word.letters
                   + cur.letters[st.position + len(src_word) :])
    return cur == p.end


# ---------------------------------------------------------------------------
# finite counter-model search

def _associative_tables(order: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All associative multiplication tables on {0..order-1}, in lexicographic
    cell-filling order with associativity propagation pruning."""
    n = order
    cells = [(i, j) for i in range(n) for j in range(n)]
    table = [[-1] * n for _ in range(n)]

    def consistent(i: int, j: int) -> bool:
        # check all triples whose products are fully determined
        t = table
        for a in range(n):
            for b in range(n):
                ab = t[a][b]
                if ab < 0:
                    continue
                for c in range(n):
                    bc = t[b][c]
                    if bc < 0:
                        continue
                    left = t[ab][c]
                    right = t[a][bc]
                    if left >= 0 and right >= 0 and left != right:
                        return False
        return True

    def fill(k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
        if k == len(cells):
            yield tuple(tuple(row) for row in table)
            return
        i, j = cells[k]
        for val in range(n):
            table[i][j] = val
            if consistent(i, j):
                yield from fill(k + 1)
        table[i][j] = -1

    yield from fill(0)


def _table_satisfies(table, order: int, sys: IdentitySystem) -> bool:
    for ident in sys.identities:
        vars_ = sorted(ident.variables())
        for combo in itertools.product(range(order), repeat=len(vars_)):
            env = dict(zip(vars_, combo))

            def ev(symbols):
                acc = env[symbols[0]]
                for s in symbols[1:]:
                    acc = table[acc][env[s]]
                return acc

            if ev(ident.lhs.symbols) != ev(ident.rhs.symbols):
                return False
    return True


def find_counter_model(u: Word, v: Word, sys: IdentitySystem,
                       max_order: int) -> Optional[CounterModel]:
    """Exhaustive deterministic search for a semigroup of order <= max_order
    in var(sys) in which some generator assignment separates u and v."""
    n_gens = max(u.max_letter(), v.max_letter()) + 1
    for order in range(1, max_order + 1):
        for table in _associative_tables(order):
            if not _table_satisfies(table, order, sys):
                continue
            for assignment in itertools.product(range(order), repeat=n_gens):
                model = CounterModel(order, table, assignment)
                if model.eval_word(u) != model.eval_word(v):
                    return model
    return None


def verify_counter_model(model: CounterModel, u: Word, v: Word,
                         sys: IdentitySystem) -> bool:
    """Re-check a counter-model from scratch: associativity, every identity
    under all substitutions, and separation of u from v."""
    n, t = model.order, model.table
    if len(t) != n or any(len(row) != n for row in t):
        return False
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if t[t[a][b]][c] != t[a][t[b][c]]:
                    return False
    if not _table_satisfies(t, n, sys):
        return False
    return model.eval_word(u) != model.eval_word(v)


# ---------------------------------------------------------------------------
# the combined decision procedure

def decide_equal(u: Word, v: Word, sys: IdentitySystem,
                 budget: Optional[EqBudget] = None) -> EqVerdict:
    """Decide u = v modulo sys: derivation search first, then counter-model
    search, then one retry of the derivation search with a doubled length
    cap.  UNDECIDED only when all phases exhaust their budgets."""
    budget = budget or EqBudget()
    base_cap = (budget.length_cap if budget.length_cap is not None
                else _default_length_cap(u, v, sys))
    proof = _bidirectional_search(u, v, sys, base_cap, budget.node_cap)
    if proof is not None:
        return EqVerdict(EQUAL, proof=proof)
    model = find_counter_model(u, v, sys, budget.model_order_cap)
    if model is not None:
        return EqVerdict(DISTINCT, model=model)
    cap = base_cap
    while cap < base_cap * budget.length_cap_ceiling_factor:
        cap = min(cap * 2, base_cap * budget.length_cap_ceiling_factor)
        proof = _bidirectional_search(u, v, sys, cap, budget.node_cap)
        if proof is not None:
            return EqVerdict(EQUAL, proof=proof)
    return EqVerdict(UNDECIDED)
