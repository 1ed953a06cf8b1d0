"""Command-line front-end: ``freesub <command> [input.json]``.

The payload is read from the given path or from standard input and the
report is written to standard output, as sorted JSON or as text.  Exit
status: 0 success, 1 internal error, 2 invalid input, 3 domain error,
4 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys

from .algebra import FactorAtom, ScaledAtom, pretty
from .decomposition import (
    Betas,
    prop21_decompose,
    prop31_decompose,
    thm_msub,
    thm_subfin,
    thm_subinf,
    thm_univ,
)
from .errors import FreesubError, ValidationError
from .lattice import BipartiteGraph, pf_weights, square_from_inclusion
from .rewrite import DerivationTrace, normalize, replay
from .scalar import ONE, Scalar
from .serialize import AtomTable, expr_from_json, expr_to_json, form_to_json
from .squares import CommutingSquareData
from .testkit import SUITES, run_suite

COMMANDS = ("normalize", "decompose-prop21", "decompose-prop31", "subfactor-subfin",
            "subfactor-subinf", "subfactor-msub", "subfactor-univ", "pf-weights", "verify")


# ---------------------------------------------------------------------------
# payload helpers


def _get(payload, *keys, default=None, required=False):
    for k in keys:
        if k in payload:
            return payload[k]
    if required:
        raise ValidationError(f"payload needs {keys[0]!r}")
    return default


def _factor(data, atoms: AtomTable):
    """An unscaled atom comes back as a FactorAtom, anything else as an expression."""
    e = expr_from_json(data, atoms)
    if isinstance(e, ScaledAtom) and e.scale == ONE:
        return e.atom
    return e


def _factors(data, atoms):
    if isinstance(data, list):
        return [_factor(x, atoms) for x in data]
    return _factor(data, atoms)


def _atom(data, atoms, what="Q") -> FactorAtom:
    f = _factor(data, atoms)
    if not isinstance(f, FactorAtom):
        raise ValidationError(f"{what} must be a single unscaled atom")
    return f


def _square(payload, *keys):
    data = _get(payload, *keys)
    if data is None:
        if "alphas" in payload:
            data = payload
        else:
            raise ValidationError(f"payload needs {keys[0]!r}")
    return CommutingSquareData.from_json(data)


def _pair(payload):
    """Upper and lower squares; a single ``square`` serves both levels."""
    s0 = _get(payload, "square0", "square")
    s1 = _get(payload, "square_m1", "square-1", "square")
    if s0 is None and s1 is None and "alphas" in payload:
        s0 = s1 = payload
    if s0 is None or s1 is None:
        raise ValidationError("payload needs 'square0' and 'square_m1' (or one 'square')")
    return CommutingSquareData.from_json(s0), CommutingSquareData.from_json(s1)


def _policy(data):
    if data is None:
        return "max-alpha"
    if isinstance(data, dict):
        try:
            return {int(k): v for k, v in data.items()}
        except ValueError as exc:
            raise ValidationError("gamma policy keys are 1-based level numbers") from exc
    return data


def _lam(args, payload, default):
    lam = args.lam if args.lam is not None else _get(payload, "lambda", default=default)
    if isinstance(lam, str) and lam.startswith("zero-"):
        return lam
    return lam if lam is None else Scalar.from_json(lam)


# ---------------------------------------------------------------------------
# commands


def cmd_normalize(payload, args):
    atoms = AtomTable(payload.get("atoms")) if isinstance(payload, dict) else AtomTable()
    data = payload["expr"] if isinstance(payload, dict) and "expr" in payload else payload
    expr = expr_from_json(data, atoms)
    if isinstance(payload, dict) and "trace" in payload:
        form = replay(expr, DerivationTrace.from_json(payload["trace"]))
        trace = DerivationTrace.from_json(payload["trace"])
    else:
        form, trace = normalize(expr, record=args.trace)
    return {"kind": "normalize", "expr": expr_to_json(expr), "form": form_to_json(form),
            "text": pretty(form), "trace": trace.to_json()}


def cmd_prop21(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    base = _factor(_get(payload, "base", "N", "M", required=True), atoms)
    qs = _factors(_get(payload, "Q", required=True), atoms)
    tail_q = payload.get("tail_Q")
    rep = prop21_decompose(base, Betas.from_json(_get(payload, "betas", required=True)), qs,
                           route=payload.get("route", "direct"),
                           tail_q=None if tail_q is None else _factor(tail_q, atoms),
                           include_first=payload.get("include_first", True))
    return rep.to_json()


def cmd_prop31(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    qs = _factors(_get(payload, "Q", default="Q"), atoms)
    tail_q = payload.get("tail_Q")
    rep = prop31_decompose(_square(payload, "square"), qs, policy=_policy(payload.get("policy")),
                           tail_q=None if tail_q is None else _factor(tail_q, atoms))
    return rep.to_json()


def cmd_subfin(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    s0, s1 = _pair(payload)
    policy_m1 = payload.get("policy_m1")
    rep = thm_subfin(s0, s1, _factor(_get(payload, "Q", default="Q"), atoms),
                     lam=_lam(args, payload, 1), policy=_policy(payload.get("policy")),
                     policy_m1=None if policy_m1 is None else _policy(policy_m1),
                     label=payload.get("label"))
    return rep.to_json()


def cmd_subinf(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    s0, s1 = _pair(payload)
    rep = thm_subinf(s0, s1, _atom(_get(payload, "Q", default="Q"), atoms),
                     depth=payload.get("depth", "finite"), lam=_lam(args, payload, None),
                     policy=_policy(payload.get("policy")), label=payload.get("label"))
    return rep.to_json()


def cmd_msub(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    s0, s1 = _pair(payload)
    m0 = _factor(_get(payload, "M0", default="M0"), atoms)
    m1 = _factor(_get(payload, "M_m1", "M-1", default="M-1"), atoms)
    rep = thm_msub(s0, s1, m0, m1, _factor(_get(payload, "Q", default="Q"), atoms),
                   variant=payload.get("variant", "fin"), lam=_lam(args, payload, 1),
                   include_first_summand=payload.get("include_first_summand", True),
                   label=payload.get("label"))
    return rep.to_json()


def cmd_univ(payload, args):
    atoms = AtomTable(payload.get("atoms"))
    s0, s1 = _pair(payload)
    variant = payload.get("variant", "subfactor")
    m0 = m1 = None
    if variant == "nm":
        m0 = _factor(_get(payload, "M0", default="M0"), atoms)
        m1 = _factor(_get(payload, "M_m1", "M-1", default="M-1"), atoms)
    rep = thm_univ(s0, s1, _atom(_get(payload, "Q", default="Q"), atoms),
                   variant=variant, m0=m0, m_m1=m1, label=payload.get("label"))
    return rep.to_json()


def cmd_pf(payload, args):
    graph = BipartiteGraph.from_json(payload.get("graph", payload))
    w = pf_weights(graph, tol=args.tol, max_iter=args.max_iter)
    out = {"kind": "pf-weights", "graph": graph.to_json(), "weights": w.to_json()}
    try:
        out["square"] = square_from_inclusion(graph, w).to_json()
    except ValidationError as exc:
        out["square_error"] = str(exc)
    return out


def cmd_verify(payload, args):
    suite = args.suite or payload.get("suite")
    if suite is None:
        raise ValidationError(f"verify needs a suite: {', '.join(SUITES)}")
    seed = args.seed if args.seed is not None else payload.get("seed", 0)
    cases = args.cases if args.cases is not None else payload.get("cases", 100)
    if not isinstance(seed, int) or not isinstance(cases, int):
        raise ValidationError("seed and cases must be integers")
    res = run_suite(suite, seed, cases)
    out = res.to_json()
    out["kind"] = "verify"
    out["ok"] = res.ok
    return out


HANDLERS = {
    "normalize": cmd_normalize,
    "decompose-prop21": cmd_prop21,
    "decompose-prop31": cmd_prop31,
    "subfactor-subfin": cmd_subfin,
    "subfactor-subinf": cmd_subinf,
    "subfactor-msub": cmd_msub,
    "subfactor-univ": cmd_univ,
    "pf-weights": cmd_pf,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# output


def render_text(report: dict, trace: bool) -> str:
    kind = report.get("kind", "")
    lines = []
    if kind == "pf-weights":
        w = report["weights"]
        norm = w["exact_norm_sq"] if w["exact"] else repr(w["norm_sq"])
        lines.append(f"||Gamma||^2 = {norm}" + ("" if w["exact"] else f"  (+- {w['error_bound']:.2e})"))
        even = w["exact_even"] if w["exact"] else [repr(x) for x in w["even"]]
        odd = w["exact_odd"] if w["exact"] else [repr(x) for x in w["odd"]]
        g = report["graph"]
        lines += [f"  {v}: {x}" for v, x in zip(g["even"], even)]
        lines += [f"  {v}: {x}" for v, x in zip(g["odd"], odd)]
    elif kind == "verify":
        status = "PASS" if report["ok"] else "FAIL"
        lines.append(f"{status} {report['suite']}: {report['passed']}/{report['cases']} "
                     f"(seed {report['seed']})")
        lines += [f"  case {f['case_seed']}: {f['detail']}" for f in report["failures"]]
    elif "P0" in report:
        lines.append(f"P0 = {report['text']['P0']}")
        lines.append(f"P-1 = {report['text']['P-1']}")
        if report["lambda"] is not None:
            lines.append(f"lambda^2 = {report['lambda_squared']}")
        lines.append(f"excess: P0 {report['P0']['excess']}, P-1 {report['P-1']['excess']}")
    else:
        lines.append(report["text"])
        if "r" in report:
            lines.append(f"r = {report['r']}")
        for c in report.get("conditions", []):
            lines.append(f"condition: {c}")
        if "cross_check" in report:
            cc = report["cross_check"]
            lines.append(f"cross-check {cc['name']}: {'pass' if cc['passed'] else 'FAIL'}")
    if trace:
        steps = report.get("trace")
        if steps is None and "levels" in report:
            steps = [s for level in report["levels"] for s in level["trace"]]
        if steps:
            lines.append("")
            lines.append(str(DerivationTrace.from_json(steps)))
    return "\n".join(lines)


def _read(path):
    try:
        if path in (None, "-"):
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freesub",
                                description="Free product decompositions of amalgamated products and subfactors.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", nargs="?", help="JSON payload file (default: standard input)")
    p.add_argument("--trace", action="store_true", help="include the derivation trace")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--lambda", dest="lam", default=None,
                   help="trace of q: a scalar such as 1/2, or zero-a / zero-b")
    p.add_argument("--tol", type=float, default=1e-12, help="power iteration tolerance")
    p.add_argument("--max-iter", type=int, default=10**6, help="power iteration step limit")
    p.add_argument("--suite", choices=SUITES, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cases", type=int, default=None)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify" and args.input is None and args.suite is not None:
            payload = {}
        else:
            payload = _read(args.input)
        if args.command != "normalize" and not isinstance(payload, dict):
            raise ValidationError("payload must be a JSON object")
        report = HANDLERS[args.command](payload, args)
        if not args.trace:
            _drop_traces(report)
    except FreesubError as exc:
        print(f"freesub: error: {exc}", file=stderr)
        return exc.exit_code
    except RecursionError:
        print("freesub: error: input nested too deeply", file=stderr)
        return 2
    if args.format == "json":
        stdout.write(json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    else:
        stdout.write(render_text(report, args.trace) + "\n")
    return 0 if report.get("ok", True) else 1


def _drop_traces(report):
    if isinstance(report, dict):
        report.pop("trace", None)
        for v in report.values():
            _drop_traces(v)
    elif isinstance(report, list):
        for v in report:
            _drop_traces(v)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
