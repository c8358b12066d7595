"""Finite hypothesis classes, labeled samples, and brute-force dimension searches.

A class is a matrix of labels: one row per hypothesis, one column per domain
point. Rows are deduplicated and sorted lexicographically on construction so
that every downstream tie-break is deterministic.

Labels are ``int`` for binary and multiclass alphabets, ``int`` or :data:`STAR`
for partial classes, and :class:`fractions.Fraction` in ``[0, 1]`` for real
classes. Exact fractions keep the margin comparisons ``z <= tau - gamma``
free of rounding.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import BudgetExceeded, InvalidArgument, ParseError, RealizabilityError

BINARY = "binary"
MULTICLASS = "multiclass"
PARTIAL = "partial"
REAL = "real"
ALPHABETS = (BINARY, MULTICLASS, PARTIAL, REAL)


class _Star:
    """The "don't know" label of partial classes.

    Compares greater than every integer so rows containing it still sort.
    """

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "*"

    __str__ = __repr__

    def __reduce__(self):
        return (_Star, ())

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return 0x5A5A

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


STAR = _Star()


def as_fraction(value) -> Fraction:
    """Convert a float, string, int or Fraction into an exact Fraction.

    Floats go through ``str`` so ``0.1`` becomes ``1/10`` rather than its
    binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def check_gamma(gamma) -> Fraction:
    g = as_fraction(gamma)
    if not 0 < g < 1:
        raise InvalidArgument(f"gamma must lie in (0, 1), got {gamma}")
    return g


@dataclass(frozen=True)
class Budget:
    """Size limits for the exhaustive searches. Exceeding one raises BudgetExceeded."""

    vc_domain: int = 16
    vgamma_domain: int = 10
    fat_domain: int = 8
    fat_grid: int = 64
    ds_rows: int = 12
    ds_domain: int = 5
    density_vertices: int = 20
    density_domain: int = 10


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    rows: tuple[tuple, ...]
    alphabet: str
    domain_size: int

    def __post_init__(self):
        if self.alphabet not in ALPHABETS:
            raise InvalidArgument(f"unknown alphabet {self.alphabet!r}")
        rows = tuple(sorted({tuple(r) for r in self.rows}))
        if not rows:
            raise InvalidArgument("a hypothesis class needs at least one row")
        for r in rows:
            if len(r) != self.domain_size:
                raise InvalidArgument(
                    f"row {r!r} has length {len(r)}, expected {self.domain_size}"
                )
            for v in r:
                _check_label(v, self.alphabet)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], alphabet: str | None = None) -> "HypothesisClass":
        rows = [tuple(r) for r in rows]
        if not rows:
            raise InvalidArgument("a hypothesis class needs at least one row")
        if alphabet is None:
            alphabet = infer_alphabet(v for r in rows for v in r)
        if alphabet == REAL:
            rows = [tuple(as_fraction(v) for v in r) for r in rows]
        return cls(tuple(rows), alphabet, len(rows[0]))

    # structural equality; the hash is cached because predictor caches key on the class
    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, HypothesisClass):
            return NotImplemented
        return (self.alphabet, self.domain_size, self.rows) == (
            other.alphabet,
            other.domain_size,
            other.rows,
        )

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self):
        return hash((self.alphabet, self.domain_size, self.rows))

    def __len__(self):
        return len(self.rows)

    @property
    def is_discrete(self) -> bool:
        return self.alphabet != REAL

    @cached_property
    def label_values(self) -> tuple:
        return tuple(sorted({v for r in self.rows for v in r}))

    @cached_property
    def full_mask(self) -> int:
        return (1 << len(self.rows)) - 1

    @cached_property
    def label_masks(self) -> tuple[dict, ...]:
        """Per point, a map label -> bitmask of rows carrying that label."""
        masks = []
        for p in range(self.domain_size):
            m: dict = {}
            for k, r in enumerate(self.rows):
                m[r[p]] = m.get(r[p], 0) | (1 << k)
            masks.append(m)
        return tuple(masks)

    def consistent_mask(self, entries: Iterable[tuple[int, object]]) -> int:
        """Bitmask of rows agreeing with every (point, label) entry."""
        mask = self.full_mask
        for p, y in entries:
            mask &= self.label_masks[p].get(y, 0)
            if not mask:
                break
        return mask

    def row_index(self, row: Sequence) -> int:
        try:
            return self.rows.index(tuple(row))
        except ValueError:
            raise InvalidArgument(f"row {tuple(row)!r} is not in the class") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"point_{i}" for i in range(self.domain_size)])
        for r in self.rows:
            w.writerow([_format_label(v) for v in r])
        return buf.getvalue()


def _check_label(v, alphabet):
    if alphabet == REAL:
        if not isinstance(v, Fraction) or not 0 <= v <= 1:
            raise InvalidArgument(f"real label {v!r} must be a Fraction in [0, 1]")
    elif v is STAR:
        if alphabet != PARTIAL:
            raise InvalidArgument("the * label is only allowed in partial classes")
    elif not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise InvalidArgument(f"discrete label {v!r} must be a non-negative integer")
    elif alphabet in (BINARY, PARTIAL) and v > 1:
        raise InvalidArgument(f"label {v} is not allowed in a {alphabet} class")


def infer_alphabet(values: Iterable) -> str:
    values = list(values)
    has_star = any(v is STAR for v in values)
    has_real = any(isinstance(v, (Fraction, float)) for v in values)
    ints = [v for v in values if isinstance(v, int)]
    if has_star and has_real:
        raise ParseError("mixed alphabets: * together with real labels")
    if has_real:
        return REAL
    if has_star:
        return PARTIAL
    return BINARY if all(v in (0, 1) for v in ints) else MULTICLASS


def _format_label(v) -> str:
    if v is STAR:
        return "*"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return repr(float(v)) if Fraction(repr(float(v))) == v else f"{v.numerator}/{v.denominator}"
    return str(v)


def _parse_token(tok: str):
    tok = tok.strip()
    if tok == "*":
        return STAR
    if "." in tok or "/" in tok or "e" in tok.lower():
        return Fraction(tok)
    return int(tok)


def parse_class_csv(text: str) -> HypothesisClass:
    """Parse the class CSV format: a ``point_i`` header then one row per hypothesis."""
    reader = csv.reader(io.StringIO(text))
    lines = [row for row in reader if row and any(c.strip() for c in row)]
    lines = [row for row in lines if not row[0].lstrip().startswith("#")]
    if not lines:
        raise ParseError("class file is empty")
    header = [c.strip() for c in lines[0]]
    if header != [f"point_{i}" for i in range(len(header))]:
        raise ParseError("header must be point_0,...,point_{m-1}")
    rows, kinds = [], set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if len(raw) != len(header):
            raise ParseError(f"row {lineno}: expected {len(header)} fields, got {len(raw)}")
        try:
            row = tuple(_parse_token(t) for t in raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"row {lineno}: {exc}") from None
        for v in row:
            if v is STAR:
                kinds.add("star")
            elif isinstance(v, Fraction):
                kinds.add("real")
                if not 0 <= v <= 1:
                    raise ParseError(f"row {lineno}: real label {v} outside [0, 1]")
            elif v < 0:
                raise ParseError(f"row {lineno}: negative label {v}")
        rows.append(row)
    if kinds == {"star", "real"}:
        raise ParseError("mixed alphabets: * together with real labels")
    if "real" in kinds:
        ints = {v for r in rows for v in r if isinstance(v, int)}
        if not ints <= {0, 1}:
            raise ParseError("mixed alphabets: integer labels above 1 in a real class")
        rows = [tuple(as_fraction(v) for v in r) for r in rows]
        return HypothesisClass(tuple(rows), REAL, len(header))
    try:
        return HypothesisClass.from_rows(rows)
    except InvalidArgument as exc:
        raise ParseError(str(exc)) from None


def load_class(path: str | Path) -> HypothesisClass:
    return parse_class_csv(Path(path).read_text())


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class LabeledSample:
    entries: tuple[tuple[int, object], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(p), y) for p, y in self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def points(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.entries)

    @property
    def labels(self) -> tuple:
        return tuple(y for _, y in self.entries)

    @property
    def unique_points(self) -> frozenset[int]:
        return frozenset(self.points)

    def as_set(self) -> frozenset:
        return frozenset(self.entries)

    def without(self, i: int) -> "LabeledSample":
        """The sample with the i-th entry removed (0-based)."""
        return LabeledSample(self.entries[:i] + self.entries[i + 1 :])

    def prefix(self, t: int) -> "LabeledSample":
        return LabeledSample(self.entries[:t])

    def permuted(self, order: Sequence[int]) -> "LabeledSample":
        return LabeledSample(tuple(self.entries[i] for i in order))

    def validate(self, cls: HypothesisClass) -> None:
        for p, _ in self.entries:
            if not 0 <= p < cls.domain_size:
                raise InvalidArgument(f"point index {p} outside domain of size {cls.domain_size}")

    def is_realizable(self, cls: HypothesisClass) -> bool:
        self.validate(cls)
        return cls.consistent_mask(self.as_set()) != 0


def parse_sample_csv(text: str, alphabet: str) -> LabeledSample:
    """Parse ``point,label`` rows (header optional)."""
    entries = []
    for lineno, raw in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not raw or raw[0].lstrip().startswith("#") or not any(c.strip() for c in raw):
            continue
        if [c.strip() for c in raw] == ["point", "label"]:
            continue
        if len(raw) != 2:
            raise ParseError(f"sample row {lineno}: expected point,label")
        try:
            p = int(raw[0])
            y = _parse_token(raw[1])
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"sample row {lineno}: {exc}") from None
        if alphabet == REAL:
            y = as_fraction(y)
        entries.append((p, y))
    return LabeledSample(tuple(entries))


def load_sample(path: str | Path, alphabet: str) -> LabeledSample:
    return parse_sample_csv(Path(path).read_text(), alphabet)


# ---------------------------------------------------------------------------
# projection and thresholding


def project(cls: HypothesisClass, points: Iterable[int]) -> HypothesisClass:
    """H restricted to ``points``; columns in ascending point order, rows deduplicated."""
    pts = sorted(set(points))
    if not pts:
        raise InvalidArgument("cannot project onto an empty point set")
    for p in pts:
        if not 0 <= p < cls.domain_size:
            raise InvalidArgument(f"point index {p} outside domain of size {cls.domain_size}")
    rows = {tuple(r[p] for p in pts) for r in cls.rows}
    return HypothesisClass(tuple(rows), cls.alphabet, len(pts))


def threshold_value(z: Fraction, gamma: Fraction, tau: Fraction):
    if z <= tau - gamma:
        return 0
    if z >= tau + gamma:
        return 1
    return STAR


def apply_threshold(cls: HypothesisClass, gamma, tau) -> HypothesisClass:
    """Map every real label to 0 / 1 / * with margin ``gamma`` around level ``tau``."""
    if cls.alphabet != REAL:
        raise InvalidArgument("thresholding needs a real-valued class")
    gamma = check_gamma(gamma)
    tau = as_fraction(tau)
    rows = {tuple(threshold_value(z, gamma, tau) for z in r) for r in cls.rows}
    return HypothesisClass(tuple(rows), PARTIAL, cls.domain_size)


def level_grid(cls: HypothesisClass, gamma) -> tuple[Fraction, ...]:
    """Candidate levels for tau / s(x) that lose nothing for a finite class.

    Every label value v contributes v - gamma, v, v + gamma; consecutive
    distinct values contribute their midpoint; 0 and 1 are always included.
    Only points in [0, 1] are kept.
    """
    gamma = as_fraction(gamma)
    values = sorted(set(cls.label_values))
    cand = {Fraction(0), Fraction(1)}
    for v in values:
        cand.update((v - gamma, v, v + gamma))
    for a, b in zip(values, values[1:]):
        cand.add((a + b) / 2)
    return tuple(sorted(c for c in cand if 0 <= c <= 1))


# ---------------------------------------------------------------------------
# dimensions


@dataclass(frozen=True)
class DimensionReport:
    value: int
    witness: tuple[int, ...] = ()
    levels: tuple = field(default=())  # tau (single entry) or s(x) per witness point
    subclass: tuple = field(default=())  # DS only: projected rows of the pseudo-cube

    def as_dict(self) -> dict:
        out = {"value": self.value, "witness": list(self.witness)}
        if self.levels:
            out["levels"] = [str(v) for v in self.levels]
        if self.subclass:
            out["subclass"] = [list(r) for r in self.subclass]
        return out


def _largest_shattered(atoms: Sequence[Sequence[tuple[int, int, object]]], full: int, cap: int):
    """Depth-first search for the largest shattered point set.

    ``atoms[p]`` lists the ways point ``p`` may join a set, each as
    ``(zero_mask, one_mask, tag)``. A set is shattered when every 0/1 pattern
    over it is witnessed by some row, tracked as one row mask per pattern.
    Subsets of shattered sets are shattered, which is what makes the pruning valid.
    """
    best = [0, (), ()]
    m = len(atoms)

    def dfs(start, patterns, chosen, tags):
        depth = len(chosen)
        if depth > best[0]:
            best[:] = [depth, tuple(chosen), tuple(tags)]
        if depth >= cap:
            return
        for p in range(start, m):
            if depth + (m - p) <= best[0]:
                return
            for zero, one, tag in atoms[p]:
                nxt = []
                for mk in patterns:
                    a, b = mk & zero, mk & one
                    if not a or not b:
                        break
                    nxt.append(a)
                    nxt.append(b)
                else:
                    chosen.append(p)
                    tags.append(tag)
                    dfs(p + 1, nxt, chosen, tags)
                    chosen.pop()
                    tags.pop()

    dfs(0, [full], [], [])
    return best[0], best[1], best[2]


def _log2_cap(n_rows: int) -> int:
    return max(n_rows.bit_length() - 1, 0)


def vc_dimension(cls: HypothesisClass, budget: Budget = DEFAULT_BUDGET) -> DimensionReport:
    """Exact VC dimension; for partial classes * never counts toward shattering."""
    if cls.alphabet not in (BINARY, PARTIAL):
        raise InvalidArgument("VC dimension needs a binary or partial class")
    if cls.domain_size > budget.vc_domain:
        raise BudgetExceeded(f"domain size {cls.domain_size} exceeds VC budget {budget.vc_domain}")
    atoms = [
        [(cls.label_masks[p].get(0, 0), cls.label_masks[p].get(1, 0), None)]
        for p in range(cls.domain_size)
    ]
    value, witness, _ = _largest_shattered(atoms, cls.full_mask, _log2_cap(len(cls)))
    return DimensionReport(value, witness)


def is_shattered(cls: HypothesisClass, points: Sequence[int]) -> bool:
    """Direct check that {0,1}^|points| is contained in the projection."""
    proj = {tuple(r[p] for p in points) for r in cls.rows}
    return all(pat in proj for pat in itertools.product((0, 1), repeat=len(points)))


def _threshold_masks(cls: HypothesisClass, gamma: Fraction, level: Fraction, p: int):
    zero = one = 0
    for k, r in enumerate(cls.rows):
        z = r[p]
        if z <= level - gamma:
            zero |= 1 << k
        elif z >= level + gamma:
            one |= 1 << k
    return zero, one


def v_gamma_dimension(cls: HypothesisClass, gamma, budget: Budget = DEFAULT_BUDGET) -> DimensionReport:
    """Largest set shattered with margin ``gamma`` around one common level tau."""
    if cls.alphabet != REAL:
        raise InvalidArgument("V_gamma dimension needs a real-valued class")
    gamma = check_gamma(gamma)
    if cls.domain_size > budget.vgamma_domain:
        raise BudgetExceeded(
            f"domain size {cls.domain_size} exceeds V_gamma budget {budget.vgamma_domain}"
        )
    best = DimensionReport(0)
    cap = _log2_cap(len(cls))
    for tau in level_grid(cls, gamma):
        atoms = []
        for p in range(cls.domain_size):
            zero, one = _threshold_masks(cls, gamma, tau, p)
            atoms.append([(zero, one, tau)] if zero and one else [])
        value, witness, _ = _largest_shattered(atoms, cls.full_mask, cap)
        if value > best.value:
            best = DimensionReport(value, witness, (tau,))
    return best


def fat_dimension(cls: HypothesisClass, gamma, budget: Budget = DEFAULT_BUDGET) -> DimensionReport:
    """Largest set shattered with margin ``gamma`` around per-point levels s(x)."""
    if cls.alphabet != REAL:
        raise InvalidArgument("fat-shattering dimension needs a real-valued class")
    gamma = check_gamma(gamma)
    grid = level_grid(cls, gamma)
    if cls.domain_size > budget.fat_domain or len(grid) > budget.fat_grid:
        raise BudgetExceeded(
            f"fat search over {cls.domain_size} points x {len(grid)} levels exceeds budget "
            f"({budget.fat_domain} x {budget.fat_grid})"
        )
    atoms = []
    for p in range(cls.domain_size):
        opts, seen = [], set()
        for s in grid:
            zero, one = _threshold_masks(cls, gamma, s, p)
            if zero and one and (zero, one) not in seen:
                seen.add((zero, one))
                opts.append((zero, one, s))
        atoms.append(opts)
    value, witness, levels = _largest_shattered(atoms, cls.full_mask, _log2_cap(len(cls)))
    return DimensionReport(value, witness, levels)


def _pseudo_cube_core(rows: set[tuple]) -> set[tuple]:
    """Largest subset in which every row has a partner differing only at i, for every i."""
    core = set(rows)
    d = len(next(iter(rows))) if rows else 0
    changed = True
    while changed and core:
        changed = False
        groups: dict = {}
        for r in core:
            for i in range(d):
                groups.setdefault((i, r[:i] + r[i + 1 :]), []).append(r)
        drop = {
            r
            for r in core
            if any(len(groups[(i, r[:i] + r[i + 1 :])]) < 2 for i in range(d))
        }
        if drop:
            core -= drop
            changed = True
    return core


def ds_dimension(cls: HypothesisClass, budget: Budget = DEFAULT_BUDGET) -> DimensionReport:
    """Exact DS dimension of a finite class.

    A subclass on d points has average degree d exactly when every vertex has
    a neighbour in every direction, so for each candidate point set we peel
    vertices lacking a neighbour until the (unique maximal) pseudo-cube remains.
    """
    if cls.alphabet not in (BINARY, MULTICLASS):
        raise InvalidArgument("DS dimension needs a binary or multiclass class")
    if len(cls) > budget.ds_rows or cls.domain_size > budget.ds_domain:
        raise BudgetExceeded(
            f"DS search over |H|={len(cls)}, domain={cls.domain_size} exceeds budget "
            f"({budget.ds_rows}, {budget.ds_domain})"
        )
    for d in range(cls.domain_size, 0, -1):
        for pts in itertools.combinations(range(cls.domain_size), d):
            proj = {tuple(r[p] for p in pts) for r in cls.rows}
            core = _pseudo_cube_core(proj)
            if core:
                return DimensionReport(d, pts, subclass=tuple(sorted(core)))
    return DimensionReport(0)


def check_realizable(cls: HypothesisClass, entries: Iterable[tuple[int, object]]) -> int:
    mask = cls.consistent_mask(entries)
    if not mask:
        raise RealizabilityError("no hypothesis in the class is consistent with the sample")
    return mask
