"""Random instances, cross-route checks and a shrinker.

Everything here is seeded explicitly; the same seed always produces the same
instances.  The exponent semantics in :mod:`freesub.algebra` is the oracle:
it knows nothing about the rewrite rules and only evaluates expressions.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from .algebra import (
    FREE_GROUP,
    FSP,
    LF,
    FactorAtom,
    Family,
    FreeJoin,
    Rescale,
    ScaledAtom,
    exponent_semantics,
    form_semantics,
    atoms_in,
    children,
    pretty,
)
from .decomposition import (
    cor32A_closed_form,
    prop21_decompose,
    prop31_corner,
    prop31_decompose,
    thm_subfin,
)
from .errors import FreesubError, ValidationError
from .rewrite import normal_form, rescale
from .scalar import FreeParam, Scalar, ScaleSequence
from .squares import (
    CommutingSquareData,
    all_gamma_selections,
    connectivity_order,
    matrix_square,
    require_valid_square,
    validate,
)


@dataclass(frozen=True)
class RandomSquareSpec:
    seed: int = 0
    max_rows: int = 6
    max_cols: int = 8
    max_mult: int = 3
    max_den: int = 12

    def __post_init__(self):
        if not (1 <= self.max_rows <= 6 and 1 <= self.max_cols <= 8 and 1 <= self.max_mult <= 3):
            raise ValidationError("bounds: rows <= 6, cols <= 8, multiplicity <= 3, all >= 1")
        if self.max_den < 1:
            raise ValidationError("max_den must be positive")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    value: Optional[str] = None

    def __bool__(self):
        return self.passed


# ---------------------------------------------------------------------------
# generators


def _fraction(rng: random.Random, max_den: int) -> Fraction:
    return Fraction(rng.randint(1, max_den), rng.randint(1, max_den))


def gen_square(spec: RandomSquareSpec) -> CommutingSquareData:
    """Valid connected square with total trace 1 (alpha and mult drawn, beta derived)."""
    rng = random.Random(spec.seed)
    while True:
        rows = rng.randint(1, spec.max_rows)
        cols = rng.randint(1, spec.max_cols)
        mult = [[rng.randint(0, spec.max_mult) if rng.random() < 0.6 else 0 for _ in range(cols)]
                for _ in range(rows)]
        if any(not any(r) for r in mult):
            continue
        if any(not any(mult[i][j] for i in range(rows)) for j in range(cols)):
            continue
        alphas = [_fraction(rng, spec.max_den) for _ in range(cols)]
        data = CommutingSquareData.from_mult(alphas, mult)
        if validate(data):
            return data.normalized()


def gen_betas(rng: random.Random, max_m: int = 6, max_den: int = 12) -> list:
    """Normalized beta vector (sum 1) with at most ``max_m`` entries."""
    raw = [_fraction(rng, max_den) for _ in range(rng.randint(1, max_m))]
    total = sum(raw)
    return [x / total for x in raw]


def atom_pool(*, flags: bool = False) -> list:
    """Atoms for random expressions; ``flags`` adds absorbing, fundamental-group
    and free-group atoms."""
    pool = [FactorAtom("P"), FactorAtom("Q"), FactorAtom("R")]
    if flags:
        pool += [FactorAtom("A", absorbs_LFinf=True),
                 FactorAtom("U", fundamental_group_all_positive=True),
                 FactorAtom("F3", FREE_GROUP, FreeParam(3)),
                 FactorAtom("F5/2", FREE_GROUP, FreeParam(Fraction(5, 2)))]
    return pool


_SCALES = [Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3), Fraction(1, 3),
           Fraction(3, 2), Fraction(2, 3), Fraction(5, 4)]


def _scale(rng) -> Scalar:
    if rng.random() < 0.1:
        return Scalar.radical(rng.choice([1, Fraction(1, 2), 2]), rng.choice([2, 3]))
    return Scalar(rng.choice(_SCALES))


def gen_expr(rng: random.Random, depth: int = 5, *, flags: bool = False,
             infinite: bool = False, max_width: int = 3):
    """Random expression tree of depth at most ``depth``.

    ``infinite`` allows families and ``L(F_inf)``; such expressions have no
    exponent semantics but can still be normalized.
    """
    pool = atom_pool(flags=flags)
    generic = [a for a in pool if a.kind != FREE_GROUP]

    def leaf():
        roll = rng.random()
        if infinite and roll < 0.1:
            return Family(rng.choice(generic), ScaleSequence([_scale(rng)], rng.choice([1, 1, Fraction(1, 2), 2])))
        if infinite and roll < 0.15:
            return LF(FreeParam("inf"))
        if roll < 0.35:
            return LF(FreeParam(Fraction(rng.randint(-6, 12), rng.randint(1, 4))))
        return ScaledAtom(rng.choice(pool), _scale(rng))

    def build(d):
        if d <= 1 or rng.random() < 0.25:
            return leaf()
        kind = rng.random()
        if kind < 0.3:
            return FreeJoin(tuple(build(d - 1) for _ in range(rng.randint(0, max_width))))
        if kind < 0.7:
            terms = tuple((_scale(rng), build(d - 1)) for _ in range(rng.randint(0, max_width)))
            base = build(d - 1) if rng.random() < 0.8 else FreeJoin(())
            return FSP(base, terms)
        return Rescale(build(d - 1), _scale(rng))

    return build(depth)


def random_assignment(rng: random.Random, atoms=("P", "Q", "R", "A", "U")) -> dict:
    return {a: Fraction(rng.randint(2, 40), rng.randint(1, 7)) + 1 for a in atoms}


# ---------------------------------------------------------------------------
# cross-route checks


def cross_check_cor22A(base, betas, qs) -> CheckResult:
    """Pipeline (both routes) against the closed form with ``t = -m + sum beta^2``."""
    direct = prop21_decompose(base, betas, qs)
    units = prop21_decompose(base, betas, qs, route="matrix-units")
    cc = direct.cross_check
    t = cc.expected.excess
    if not cc.passed:
        return CheckResult("cor22A", False, cc.detail, str(t))
    if units.form != direct.form:
        return CheckResult("cor22A", False,
                           f"routes disagree: {pretty(direct.form)} vs {pretty(units.form)}", str(t))
    return CheckResult("cor22A", True, "", str(t))


def cross_check_cor32A(square: CommutingSquareData, qs) -> CheckResult:
    """Pipeline against ``t = -n + 1 + sum beta^2 - sum alpha^2`` for every
    admissible gamma selection."""
    require_valid_square(square)
    perm = connectivity_order(square)
    data = square.permuted(perm)
    if isinstance(qs, (list, tuple)):
        qs = [qs[p] for p in perm]
    expected = cor32A_closed_form(data, qs)
    amplify = data.total_beta() / data.betas[0]
    count = 0
    for sel in all_gamma_selections(data):
        _, form, _, r = prop31_corner(data, qs if isinstance(qs, list) else [qs] * data.n_rows, sel)
        count += 1
        actual = rescale(form, amplify)
        if actual != expected:
            return CheckResult("cor32A", False,
                               f"selection {sel.j} (r={r}): expected {pretty(expected)}, "
                               f"got {pretty(actual)}", str(expected.excess))
    return CheckResult("cor32A", True, f"{count} selection(s)", str(expected.excess))


def semantic_diff(e1, e2, trials: int = 20, seed: int = 0) -> CheckResult:
    """Equal exponent semantics at ``trials`` random assignments and identical
    normal forms."""
    rng = random.Random(seed)
    ids = sorted({a.id for a in atoms_in(e1) | atoms_in(e2) if a.kind != FREE_GROUP})
    for _ in range(trials):
        assign = random_assignment(rng, ids)
        v1, v2 = exponent_semantics(e1, assign), exponent_semantics(e2, assign)
        if v1 != v2:
            return CheckResult("semantic-diff", False, f"{v1} != {v2} at {assign}")
    f1, f2 = normal_form(e1, top_level=False), normal_form(e2, top_level=False)
    if f1 != f2:
        return CheckResult("semantic-diff", False, f"normal forms {pretty(f1)} vs {pretty(f2)}")
    return CheckResult("semantic-diff", True)


def _oracle_applies(expr) -> bool:
    """Finite, no L(F_inf) and no flag-driven atoms (whose rules are not
    exponent-preserving by design)."""
    if isinstance(expr, LF):
        return not expr.param.is_inf
    if isinstance(expr, ScaledAtom):
        a = expr.atom
        return not (a.absorbs_LFinf or a.fundamental_group_all_positive
                    or (a.param is not None and a.param.is_inf))
    if isinstance(expr, Family):
        return False
    return all(_oracle_applies(c) for c in children(expr))


def check_confluence(expr, rng: random.Random, orders: int = 2) -> CheckResult:
    """Innermost normal form equals the one reached by ``orders`` random orders."""
    ref = normal_form(expr, top_level=False)
    for _ in range(orders):
        got = normal_form(expr, top_level=False, strategy="random", rng=rng)
        if got != ref:
            return CheckResult("confluence", False,
                               f"{pretty(expr)}: {pretty(ref)} vs {pretty(got)}")
    if _oracle_applies(expr):
        assign = random_assignment(rng)
        if exponent_semantics(expr, assign) != form_semantics(ref, assign):
            return CheckResult("confluence", False, f"{pretty(expr)}: semantics changed")
    return CheckResult("confluence", True)


def check_gamma_independence(square: CommutingSquareData, q) -> CheckResult:
    """The subfactor pair does not depend on the gamma selection.

    The pair is a function of the two corners, so every selection's corner is
    compared; the full pair is also computed under two named policies.
    """
    require_valid_square(square)
    data = square.permuted(connectivity_order(square))
    qs = [q] * data.n_rows
    corners = {prop31_corner(data, qs, sel)[1] for sel in all_gamma_selections(data)}
    if len(corners) != 1:
        return CheckResult("gamma-independence", False, f"{len(corners)} distinct corners")
    other = matrix_square(2)
    a = thm_subfin(data, other, q, policy="max-alpha")
    b = thm_subfin(data, other, q, policy="min-alpha")
    if (a.P0, a.P_minus1) != (b.P0, b.P_minus1):
        return CheckResult("gamma-independence", False,
                           f"{pretty(a.P0)} vs {pretty(b.P0)} between named policies")
    return CheckResult("gamma-independence", True)


def check_scale_invariance(square: CommutingSquareData, q, factor: Fraction) -> CheckResult:
    """Normalized-trace outputs do not change when all traces are multiplied."""
    a = prop31_decompose(square, q).cross_check.actual
    b = prop31_decompose(square.scaled(factor), q).cross_check.actual
    if a != b:
        return CheckResult("scale-invariance", False, f"{pretty(a)} vs {pretty(b)} (x{factor})")
    betas = list(square.betas)
    c = prop21_decompose(FactorAtom("N"), betas, q).cross_check.actual
    d = prop21_decompose(FactorAtom("N"), [x * Scalar(factor) for x in betas], q).cross_check.actual
    # the base atom carries the total trace, so compare after removing it
    strip = lambda f: (tuple(x for x in f.atoms if x.atom.id != "N"), f.excess)
    if strip(c) != strip(d):
        return CheckResult("scale-invariance", False, f"{pretty(c)} vs {pretty(d)} (x{factor})")
    return CheckResult("scale-invariance", True)


# ---------------------------------------------------------------------------
# shrinking and regression fixtures


def _drop_row(square: CommutingSquareData, i: int) -> Optional[CommutingSquareData]:
    rows = [r for k, r in enumerate(square.mult) if k != i]
    keep = [j for j in range(square.n_cols) if any(r[j] for r in rows)]
    if not rows or not keep:
        return None
    mult = [[r[j] for j in keep] for r in rows]
    return CommutingSquareData.from_mult([square.alphas[j] for j in keep], mult)


def _simpler_alphas(square, j):
    a = square.alphas[j].as_fraction()
    for simpler in (Fraction(1), Fraction(round(a)), a.limit_denominator(max(1, a.denominator // 2))):
        if 0 < simpler != a:
            alphas = list(square.alphas)
            alphas[j] = Scalar(simpler)
            yield CommutingSquareData.from_mult(alphas, square.mult)


def _lower_mult(square, i, j) -> Optional[CommutingSquareData]:
    if square.mult[i][j] <= 1:
        return None
    mult = [list(r) for r in square.mult]
    mult[i][j] -= 1
    return CommutingSquareData.from_mult(square.alphas, mult)


def _size(square: CommutingSquareData) -> tuple:
    """Shrink order: rows, then alpha complexity, then multiplicities."""
    fr = [a.as_fraction() for a in square.alphas]
    return (square.n_rows, square.n_cols,
            sum(f.numerator + f.denominator for f in fr), sum(map(sum, square.mult)))


def _candidates(square):
    for i in range(square.n_rows):
        yield _drop_row(square, i)
    for j in range(square.n_cols):
        yield from _simpler_alphas(square, j)
    for i in range(square.n_rows):
        for j in range(square.n_cols):
            yield _lower_mult(square, i, j)


def shrink_square(square: CommutingSquareData,
                  fails: Callable[[CommutingSquareData], bool]) -> CommutingSquareData:
    """Greedy shrink of a failing square: fewer rows, then simpler alphas,
    then smaller multiplicities.  ``fails`` must hold for the input.

    Every accepted move strictly decreases :func:`_size`, so this terminates.
    The result is returned with total trace 1 when that still fails.
    """
    current = square
    progress = True
    while progress:
        progress = False
        for candidate in _candidates(current):
            if candidate is None or not validate(candidate) or _size(candidate) >= _size(current):
                continue
            try:
                still = fails(candidate)
            except FreesubError:
                still = False
            if still:
                current = candidate
                progress = True
                break
    try:
        normal = current.normalized()
        if normal != current and fails(normal):
            return normal
    except FreesubError:
        pass
    return current


def save_regression(square: CommutingSquareData, directory, name: str) -> Path:
    path = Path(directory) / f"{name}.json"
    path.write_text(json.dumps(square.to_json(), indent=2, sort_keys=True) + "\n")
    return path


def load_regressions(directory) -> list:
    return [(p.stem, CommutingSquareData.from_json(json.loads(p.read_text())))
            for p in sorted(Path(directory).glob("*.json"))]


# ---------------------------------------------------------------------------
# suites


SUITES = ("cor22A", "cor32A", "confluence", "gamma-independence", "scale-invariance")


@dataclass
class SuiteResult:
    suite: str
    seed: int
    cases: int
    passed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.cases

    def to_json(self):
        return {"suite": self.suite, "seed": self.seed, "cases": self.cases,
                "passed": self.passed, "failures": self.failures}


def run_suite(suite: str, seed: int = 0, cases: int = 100) -> SuiteResult:
    """Run ``cases`` random instances; per-case seeds derive from ``seed``.

    Failing squares are shrunk before being reported.
    """
    if suite not in SUITES:
        raise ValidationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if cases < 0:
        raise ValidationError("cases must be nonnegative")
    result = SuiteResult(suite, seed, cases)
    master = random.Random(seed)
    q = FactorAtom("Q")
    for _ in range(cases):
        case_seed = master.randrange(2**32)
        rng = random.Random(case_seed)
        if suite == "cor22A":
            betas = gen_betas(rng)
            qs = [FactorAtom(f"Q{i + 1}") for i in range(len(betas))]
            res = cross_check_cor22A(FactorAtom("N"), betas, qs)
            failing = None
        elif suite == "confluence":
            res = check_confluence(gen_expr(rng, flags=True, infinite=rng.random() < 0.3), rng)
            failing = None
        else:
            square = gen_square(RandomSquareSpec(case_seed))
            if suite == "cor32A":
                check = lambda s: cross_check_cor32A(s, [FactorAtom(f"Q{i + 1}") for i in range(s.n_rows)])
            elif suite == "gamma-independence":
                check = lambda s: check_gamma_independence(s, q)
            else:
                factor = Fraction(rng.randint(1, 9), rng.randint(1, 9))
                check = lambda s, f=factor: check_scale_invariance(s, q, f)
            res = check(square)
            failing = None if res.passed else shrink_square(square, lambda s: not check(s).passed)
        if res.passed:
            result.passed += 1
        else:
            entry = {"case_seed": case_seed, "detail": res.detail}
            if failing is not None:
                entry["shrunk"] = failing.to_json()
            result.failures.append(entry)
    return result
