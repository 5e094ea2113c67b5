"""The 47-family identity-system catalog and its expected planarity ranks.

The catalog is data: each family is a template string over the variables
x, y, z, t with optional exponents (literal, or one of n / n+1 / n+2), plus
an optional leading permutation identity x1x2x3x4 = x(1pi) x(2pi) x(3pi) x(4pi)
drawn from one of three fixed permutation sets.  Chained equalities such as
x^2y=xyx=yx^2 split into pairwise identities between consecutive terms.

Convention for permutation identities: position i of the right-hand side
carries the variable with index pi(i) (the permutation acts on positions).
The test suite validates this reading against the route-witness corpus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from planarank.words import Identity, Pattern


# ---------------------------------------------------------------------------
# permutations of {1,2,3,4}

@dataclass(frozen=True, order=True)
class Permutation4:
    """A permutation of {1,2,3,4}; images[i-1] is the image of i."""

    images: tuple[int, int, int, int]

    def __post_init__(self):
        if sorted(self.images) != [1, 2, 3, 4]:
            raise ValueError(f"not a permutation of 1..4: {self.images}")

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def cycle_notation(self) -> str:
        seen, out = set(), []
        for start in (1, 2, 3, 4):
            if start in seen or self(start) == start:
                seen.add(start)
                continue
            cyc, j = [], start
            while j not in seen:
                seen.add(j)
                cyc.append(j)
                j = self(j)
            out.append("(" + "".join(str(k) for k in cyc) + ")")
        return "".join(out) or "()"

    def __str__(self) -> str:
        return self.cycle_notation()


def parse_permutation(text: str) -> Permutation4:
    """Parse cycle notation over {1,2,3,4}, e.g. "(123)" or "(12)(34)"."""
    s = text.replace(" ", "")
    images = {i: i for i in (1, 2, 3, 4)}
    pos = 0
    if not s:
        raise ValueError("empty permutation")
    while pos < len(s):
        if s[pos] != "(":
            raise ValueError(f"bad cycle notation: {text!r}")
        end = s.find(")", pos)
        if end < 0:
            raise ValueError(f"unclosed cycle in {text!r}")
        cyc = [int(c) for c in s[pos + 1 : end]]
        if len(set(cyc)) != len(cyc) or any(c not in (1, 2, 3, 4) for c in cyc):
            raise ValueError(f"bad cycle {s[pos:end+1]!r}")
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            images[a] = b
        pos = end + 1
    return Permutation4((images[1], images[2], images[3], images[4]))


def _perms(*texts: str) -> tuple[Permutation4, ...]:
    return tuple(parse_permutation(t) for t in texts)


# Pi sets in the order the catalog lists them; ordering is part of the
# deterministic instance enumeration contract.
PI_1 = _perms("(123)", "(124)", "(134)", "(234)", "(12)(34)", "(13)(24)", "(14)(23)")
PI_2 = PI_1[:6]
PI_3 = PI_1[:5]
_PI_SETS = {1: PI_1, 2: PI_2, 3: PI_3}


def permutation_set(k: int) -> tuple[Permutation4, ...]:
    """The k-th permutation set (k in {1,2,3}), in catalog order."""
    if k not in _PI_SETS:
        raise ValueError(f"permutation set index must be 1, 2 or 3, got {k}")
    return _PI_SETS[k]


# ---------------------------------------------------------------------------
# identity templates

_VARS = {"x": 0, "y": 1, "z": 2, "t": 3}
_EXPRS = {"n": lambda n: n, "n+1": lambda n: n + 1, "n+2": lambda n: n + 2}


def _parse_side(text: str, n: Optional[int]) -> Pattern:
    """Parse one template side into a Pattern, expanding exponents."""

    def parse_seq(pos: int, closer: Optional[str]) -> tuple[list[int], int]:
        out: list[int] = []
        while pos < len(text):
            c = text[pos]
            if c == closer:
                return out, pos + 1
            if c == "(":
                grp, pos = parse_seq(pos + 1, ")")
                base = grp
            elif c in _VARS:
                base = [_VARS[c]]
                pos += 1
            else:
                raise ValueError(f"unexpected {c!r} in template {text!r}")
            exp = 1
            if pos < len(text) and text[pos] == "^":
                pos += 1
                if text[pos] == "{":
                    end = text.index("}", pos)
                    expr = text[pos + 1 : end]
                    if expr not in _EXPRS:
                        raise ValueError(f"unknown exponent expression {expr!r}")
                    if n is None:
                        raise ValueError("template requires the parameter n")
                    exp = _EXPRS[expr](n)
                    pos = end + 1
                else:
                    start = pos
                    while pos < len(text) and text[pos].isdigit():
                        pos += 1
                    exp = int(text[start:pos])
            out.extend(base * exp)
        if closer is not None:
            raise ValueError(f"unclosed group in {text!r}")
        return out, pos

    symbols, _ = parse_seq(0, None)
    return Pattern(tuple(symbols))


def _expand_template(template: str, n: Optional[int]) -> list[Identity]:
    """Expand 'a=b=c' chains into pairwise identities between neighbours."""
    sides = [_parse_side(part.strip(), n) for part in template.split("=")]
    if len(sides) < 2:
        raise ValueError(f"template needs at least two sides: {template!r}")
    return [Identity(a, b) for a, b in zip(sides, sides[1:])]


def permutation_identity(pi: Permutation4) -> Identity:
    """x1x2x3x4 = x(1pi)x(2pi)x(3pi)x(4pi): position i carries variable pi(i)."""
    lhs = Pattern((0, 1, 2, 3))
    rhs = Pattern(tuple(pi(i) - 1 for i in (1, 2, 3, 4)))
    return Identity(lhs, rhs)


# ---------------------------------------------------------------------------
# the family table (audited line by line against the catalog source)

# index -> (pi-set index or None, takes n, template strings)
_FAMILY_TABLE: dict[int, tuple[Optional[int], bool, tuple[str, ...]]] = {
    1: (None, True, ("xy=(xy)^{n+1}",)),
    2: (None, True, ("xy=x^{n+1}y", "(xy)^{n+1}=xy^{n+1}", "xyzt=xyx^{n}zt")),
    3: (None, True, ("xy=xy^{n+1}", "(xy)^{n+1}=x^{n+1}y", "xyzt=xyt^{n}zt")),
    4: (1, True, ("x^2y=xyx=yx^2=x^{n+2}y",)),
    5: (1, False, ("x^2y=xyx=yx^2", "x^3yz=xy^3z", "x^6=x^7")),
    6: (1, False, ("x^2y=xyx=yx^2", "x^2y^2z=xy^2z^2")),
    7: (1, False, ("x^2y=xyx=yx^2", "x^3yz=xy^2z^2")),
    8: (1, False, ("x^2y=xyx", "xy^2=yx^2")),
    9: (1, False, ("x^2y=y^2x", "xy^2=yxy")),
    10: (1, False, ("x^2y=yxy", "xy^2=yx^2")),
    11: (1, False, ("x^2y=y^2x", "xy^2=xyx")),
    12: (1, False, ("x^2y=xy^2", "xyx=yxy")),
    13: (1, False, ("x^2y=yxy=yx^2",)),
    14: (1, False, ("x^2y=xyx=xy^2", "x^4y=yx^4")),
    15: (1, False, ("x^2y=yxy=xy^2", "x^4y=yx^4")),
    16: (1, False, ("x^2y=y^2x", "xyx=x^2yx", "x^3y=yx^3")),
    17: (1, False, ("xy^2=yx^2", "xyx=xyx^2", "x^3y=yx^3")),
    18: (1, False, ("x^2y=x^3y", "xyx=yxy", "x^3y=yx^3")),
    19: (1, False, ("xy^2=xy^3", "xyx=yxy", "x^3y=yx^3")),
    20: (2, False, ("x^2y=yx^2", "xyx=yxy")),
    21: (None, False, ("xyzt=tzyx", "x^2y=yx^2", "xyx=yxy", "x^2yz=y^2zx")),
    22: (None, False, ("xyzt=tzyx", "x^2y=yx^2", "xyx=yxy", "x^2yz=yzyx")),
    23: (None, False, ("xyzt=tzyx", "x^2y=yx^2", "xyx=yxy", "xyxz=yzyx")),
    24: (3, False, ("x^2y=x^3y", "xy^2=yx^2", "x^3y=yx^3")),
    25: (3, False, ("x^2y=y^2x", "xy^2=xy^3", "x^3y=yx^3")),
    26: (None, False, ("xyzt=ztxy", "x^2y=x^3y", "xy^2=yx^2", "xyxz=yxzx")),
    27: (None, False, ("xyzt=ztxy", "x^2y=x^3y", "xy^2=yx^2", "xyxz=yxyz")),
    28: (None, False, ("xyzt=ztxy", "x^2y=x^3y", "xy^2=yx^2", "xyzy=xzyz")),
    29: (None, False, ("xyzt=ztxy", "x^2y=y^2x", "xy^2=xy^3", "xyxz=yxzx")),
    30: (None, False, ("xyzt=ztxy", "x^2y=y^2x", "xy^2=xy^3", "xyxz=yxyz")),
    31: (None, False, ("xyzt=ztxy", "x^2y=y^2x", "xy^2=xy^3", "xyzy=xzyz")),
    32: (None, False, ("xyzt=tzyx", "x^2y=x^3y", "xy^2=yx^2", "xyxz=xyzx")),
    33: (None, False, ("xyzt=tzyx", "x^2y=x^3y", "xy^2=yx^2", "xyxz=yxzy")),
    34: (None, False, ("xyzt=tzyx", "x^2y=x^3y", "xy^2=yx^2", "xyxz=zxyz")),
    35: (None, False, ("xyzt=tzyx", "x^2y=x^3y", "xy^2=yx^2", "xyxz=yzyx")),
    36: (None, False, ("xyzt=tzyx", "x^2y=x^3y", "xy^2=yx^2", "xyzx=yxzy")),
    37: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=xy^3", "xyxz=xyzx")),
    38: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=xy^3", "xyxz=yxzy")),
    39: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=xy^3", "xyxz=zxyz")),
    40: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=xy^3", "xyxz=yzyx")),
    41: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=xy^3", "xyzx=yxzy")),
    42: (None, False, ("xyzt=yxtz", "x^2y=y^2x", "xy^2=(xy)^2")),
    43: (None, False, ("xyzt=yxtz", "x^2y=(xy)^2", "xy^2=yx^2")),
    44: (None, False, ("xyzt=ztxy", "x^2y=y^2x", "xy^2=(xy)^2", "xyxz=yxzx")),
    45: (None, False, ("xyzt=ztxy", "x^2y=(xy)^2", "xy^2=yx^2", "xyxz=yxzx")),
    46: (None, False, ("xyzt=tzyx", "x^2y=y^2x", "xy^2=(xy)^2", "xyzx=yxzy")),
    47: (None, False, ("xyzt=tzyx", "x^2y=(xy)^2", "xy^2=yx^2", "xyzx=yxzy")),
}

FAMILY_INDICES = tuple(sorted(_FAMILY_TABLE))

# parameter-kind labels per the catalog's parameterisation
PARAM_EXPONENT = "exponent-n"
PARAM_PERMUTATION = "permutation-pi"
PARAM_BOTH = "exponent-and-permutation"
PARAM_NONE = "none"


@dataclass(frozen=True, order=True)
class FamilyId:
    """One of the 47 catalog families, with its parameter kind."""

    index: int

    def __post_init__(self):
        if self.index not in _FAMILY_TABLE:
            raise ValueError(f"unknown family m{self.index}")

    @property
    def pi_set_index(self) -> Optional[int]:
        return _FAMILY_TABLE[self.index][0]

    @property
    def takes_n(self) -> bool:
        return _FAMILY_TABLE[self.index][1]

    @property
    def takes_pi(self) -> bool:
        return self.pi_set_index is not None

    @property
    def param_kind(self) -> str:
        if self.takes_n and self.takes_pi:
            return PARAM_BOTH
        if self.takes_n:
            return PARAM_EXPONENT
        if self.takes_pi:
            return PARAM_PERMUTATION
        return PARAM_NONE

    @property
    def templates(self) -> tuple[str, ...]:
        return _FAMILY_TABLE[self.index][2]

    @property
    def label(self) -> str:
        return f"m{self.index}"


@dataclass(frozen=True)
class IdentitySystem:
    """A concrete family instance: identities with n and pi bound."""

    family: FamilyId
    n: Optional[int]
    pi: Optional[Permutation4]
    identities: tuple[Identity, ...]

    def label(self) -> str:
        params = []
        if self.n is not None:
            params.append(f"n={self.n}")
        if self.pi is not None:
            params.append(f"pi={self.pi}")
        return self.family.label + (f"[{','.join(params)}]" if params else "")

    def max_variables(self) -> int:
        return max(max(i.variables()) for i in self.identities) + 1


def instantiate(family: FamilyId | int, n: Optional[int] = None,
                pi: Optional[Permutation4] = None) -> IdentitySystem:
    """Bind a family's parameters and expand its identity list.

    Raises ValueError on a missing or extra parameter, or a permutation
    outside the family's permitted set.
    """
    fam = FamilyId(family) if isinstance(family, int) else family
    if fam.takes_n:
        if n is None:
            raise ValueError(f"{fam.label} requires the parameter n")
        if n < 1:
            raise ValueError("n must be a positive integer")
    elif n is not None:
        raise ValueError(f"{fam.label} does not take a parameter n")
    if fam.takes_pi:
        if pi is None:
            raise ValueError(f"{fam.label} requires a permutation")
        if pi not in permutation_set(fam.pi_set_index):
            raise ValueError(f"{pi} is not in the permitted set Pi_{fam.pi_set_index} of {fam.label}")
    elif pi is not None:
        raise ValueError(f"{fam.label} does not take a permutation")

    identities: list[Identity] = []
    if fam.takes_pi:
        identities.append(permutation_identity(pi))
    for template in fam.templates:
        identities.extend(_expand_template(template, n))
    return IdentitySystem(fam, n, pi, tuple(identities))


# ---------------------------------------------------------------------------
# expected ranks

_FIXED_RANKS = {
    5: 1, 6: 1, 7: 1, 8: 2, 9: 1, 10: 1, 11: 2, 12: 2, 13: 2, 14: 3,
    15: 2, 16: 2, 17: 2, 18: 2, 19: 2, 20: 1, 21: 1, 22: 1, 23: 1,
    24: 2, 25: 2,
    26: 2, 27: 2, 28: 2, 29: 2, 30: 2, 31: 2, 32: 2, 33: 2, 34: 2,
    35: 2, 36: 2, 37: 2, 38: 2, 39: 2, 40: 2, 41: 2, 42: 2,
    43: 1, 44: 2, 45: 1, 46: 2, 47: 1,
}


def expected_rank(family: FamilyId | int, n: Optional[int] = None) -> int:
    """The published planarity rank of the instance (independent of pi)."""
    fam = FamilyId(family) if isinstance(family, int) else family
    if fam.takes_n:
        if n is None:
            raise ValueError(f"{fam.label} rank depends on n")
        if fam.index == 1:
            return 2 if n == 1 else 1
        if fam.index == 2:
            return 2 if n <= 2 else 1
        if fam.index == 3:
            return 2 if n == 1 else 1
        if fam.index == 4:
            return 2 if n == 1 else 1
        raise AssertionError("unreachable")
    return _FIXED_RANKS[fam.index]


# ---------------------------------------------------------------------------
# instance enumeration

@dataclass(frozen=True, order=True)
class VarietyInstance:
    """A (family, n, pi) triple identifying one table row."""

    family_index: int
    n: Optional[int] = None
    pi: Optional[Permutation4] = None

    def label(self) -> str:
        return self.system().label()

    def system(self) -> IdentitySystem:
        return instantiate(self.family_index, self.n, self.pi)

    def expected_rank(self) -> int:
        return expected_rank(self.family_index, self.n)


def enumerate_instances(families: Optional[Iterable[int]] = None,
                        n_values: Iterable[int] = (1, 2, 3, 4, 5)) -> list[VarietyInstance]:
    """All instances for the given families, in deterministic catalog order:
    family index ascending, then n ascending, then pi in listed Pi order."""
    fams = sorted(set(families)) if families is not None else list(FAMILY_INDICES)
    ns = sorted(set(n_values))
    out: list[VarietyInstance] = []
    for fi in fams:
        fam = FamilyId(fi)
        n_opts: list[Optional[int]] = list(ns) if fam.takes_n else [None]
        pi_opts: list[Optional[Permutation4]] = (
            list(permutation_set(fam.pi_set_index)) if fam.takes_pi else [None]
        )
        for n, pi in itertools.product(n_opts, pi_opts):
            out.append(VarietyInstance(fi, n, pi))
    return out


def export_catalog() -> list[dict]:
    """Machine-readable catalog (one record per family) for audit."""
    records = []
    for fi in FAMILY_INDICES:
        fam = FamilyId(fi)
        params = []
        if fam.takes_n:
            params.append("n")
        if fam.takes_pi:
            params.append(f"pi in Pi_{fam.pi_set_index}")
        rec = {
            "label": fam.label,
            "parameters": params,
            "identities": list(fam.templates),
        }
        if fam.takes_pi:
            rec["identities"] = ["x1x2x3x4=x(1pi)x(2pi)x(3pi)x(4pi)"] + rec["identities"]
            rec["pi_set"] = [str(p) for p in permutation_set(fam.pi_set_index)]
        records.append(rec)
    return records
