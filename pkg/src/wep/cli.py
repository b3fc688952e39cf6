"""``wep`` command line.

Exit codes: 0 success (for ``ep-check``: consistent and EP), 1 a negative
but consistent outcome (``ep-check``: not EP; ``wpinv``: inverse not
certified), 2 an inconsistency between characterizations, 64 usage error,
65 bad input data.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from wep.epcheck import (
    full_report,
    generate_instance,
    random_pd,
)
from wep.factor import (
    CornerSingularError,
    NotWeightedEPError,
    ReverseOrderError,
    canonical_ep_decomposition,
    ep_block_decomposition,
    factor_parts_wmp,
    full_rank_factorize,
    reverse_order_wmp,
)
from wep.hermitian import (
    NormContext,
    NotPositiveError,
    Weight,
    is_hermitian,
    is_hermitian_weighted,
    is_positive,
    numerical_range,
)
from wep.matcore import MatrixError, Tolerance, op_norm, rank
from wep.matio import MatrixFileError, format_report, read_matrix, write_matrix
from wep.wmp import WeightedInverseError, mp_inverse, wmp_inverse

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONSISTENT = 0, 1, 2
EXIT_USAGE, EXIT_DATA = 64, 65


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_tol(cli_tol: Optional[float]) -> Tolerance:
    """Default tolerance, overridden by ``WEP_TOL`` and then by ``--tol``."""
    residual = Tolerance().residual_rel
    env = os.environ.get("WEP_TOL")
    if env:
        try:
            residual = float(env)
        except ValueError:
            raise InputError(f"WEP_TOL is not a number: {env!r}") from None
    if cli_tol is not None:
        residual = cli_tol
    try:
        return Tolerance(residual_rel=residual)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _tol_fields(tol: Tolerance) -> List[Tuple[str, object]]:
    return [("tol.rank_rel", tol.rank_rel), ("tol.residual_rel", tol.residual_rel),
            ("tol.herm_abs", tol.herm_abs)]


def _load(path: Optional[str], what: str) -> np.ndarray:
    if path is None:
        raise InputError(f"missing {what} (use -i/--input)")
    return read_matrix(path)


def _weight(path: Optional[str], n: int, ctx: NormContext, tol: Tolerance, name: str) -> Weight:
    if path is None:
        return Weight.identity(n, ctx)
    u = read_matrix(path)
    if u.shape != (n, n):
        raise InputError(f"weight {name} must be {n}x{n}, got {u.shape[0]}x{u.shape[1]}")
    try:
        return Weight.from_matrix(u, ctx, tol)
    except NotPositiveError as exc:
        raise InputError(f"weight {name} failed validation: {exc}") from None


def _out_path(args, default_suffix: str) -> Path:
    if args.output:
        return Path(args.output)
    if args.input:
        p = Path(args.input)
        return p.with_name(p.stem + default_suffix)
    return Path("wep" + default_suffix)


def _emit(text: str) -> None:
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_pinv(args, tol: Tolerance) -> int:
    a = _load(args.input, "input matrix")
    x = mp_inverse(a, tol)
    scale = 1.0 + max(op_norm(a), op_norm(x))
    ax, xa = a @ x, x @ a
    res = {
        "res_aba": op_norm(ax @ a - a) / scale,
        "res_bab": op_norm(xa @ x - x) / scale,
        "res_herm_left": op_norm(ax - ax.conj().T) / (1.0 + op_norm(ax)),
        "res_herm_right": op_norm(xa - xa.conj().T) / (1.0 + op_norm(xa)),
    }
    out = _out_path(args, ".pinv.mat")
    write_matrix(out, x)
    fields = [("command", "pinv"), ("input", args.input), ("output", out),
              ("rows", a.shape[0]), ("cols", a.shape[1]), ("rank", rank(a, tol))]
    fields += list(res.items())
    fields.append(("valid", all(v <= tol.residual_rel for v in res.values())))
    fields += _tol_fields(tol)
    _emit(format_report(fields, ["Moore-Penrose inverse from the SVD; residuals are relative."]))
    return EXIT_OK


def _weight_fields(name: str, w: Weight, given: bool, ctx: NormContext, tol: Tolerance):
    if not given:
        return [(f"weight.{name}", "identity")]
    herm = is_hermitian(w.u, ctx, tol, sample=False)
    lam = np.linalg.eigvals(w.u)
    return [(f"weight.{name}", "file"),
            (f"weight.{name}.hermitian", herm.hermitian),
            (f"weight.{name}.min_eigenvalue", float(lam.real.min())),
            (f"weight.{name}.positive", True)]


def cmd_wpinv(args, tol: Tolerance) -> int:
    ctx = NormContext(args.norm)
    a = _load(args.input, "input matrix")
    m, n = a.shape
    e = _weight(args.E, m, ctx, tol, "E")
    f = _weight(args.F, n, ctx, tol, "F")
    res = wmp_inverse(a, e, f, tol)
    out = _out_path(args, ".wpinv.mat")
    write_matrix(out, res.pinv)
    fields = [("command", "wpinv"), ("input", args.input), ("output", out), ("norm", ctx.kind),
              ("rows", m), ("cols", n), ("rank", rank(a, tol))]
    fields += _weight_fields("E", e, args.E is not None, ctx, tol)
    fields += _weight_fields("F", f, args.F is not None, ctx, tol)
    fields += [("res_aba", res.res_aba), ("res_bab", res.res_bab),
               ("herm_left_dev", res.herm_left_dev), ("herm_right_dev", res.herm_right_dev),
               ("status", res.status), ("valid", res.valid)]
    fields += _tol_fields(tol)
    notes = ["E weights the codomain and F the domain."]
    if res.status == "undetermined":
        notes.append("The congruence candidate is not hermitian under this norm; "
                     "existence of the weighted inverse is not decided.")
    _emit(format_report(fields, notes))
    return EXIT_OK if res.valid else EXIT_NEGATIVE


def _inner_weight(path, r, ctx, tol) -> Weight:
    if path is None:
        return Weight.identity(max(r, 1), ctx)
    return _weight(path, r, ctx, tol, "H")


def cmd_ep_check(args, tol: Tolerance) -> int:
    ctx = NormContext(args.norm)
    if args.synthesize:
        n = args.dim
        r = args.rank if args.rank is not None else n // 2 + (n % 2)
        if not 0 <= r <= n:
            raise InputError(f"--rank must be in [0, {n}]")
        inst = generate_instance(n, r, True, args.seed, tol=tol)
        a, e, f = inst.a, inst.e, inst.f
        source = f"synthesized(dim={n},rank={r},seed={args.seed})"
        if args.output:
            for name, mat in (("a", a), ("E", e.u), ("F", f.u)):
                write_matrix(f"{args.output}.{name}.mat", mat)
    else:
        a = _load(args.input, "input matrix")
        if a.shape[0] != a.shape[1]:
            raise InputError(f"ep-check needs a square matrix, got {a.shape[0]}x{a.shape[1]}")
        n = a.shape[0]
        e = _weight(args.E, n, ctx, tol, "E")
        f = _weight(args.F, n, ctx, tol, "F")
        source = args.input
    fr = full_rank_factorize(a, tol)
    inner = _inner_weight(args.H, fr.r, ctx, tol)
    try:
        rep = full_report(a, e, f, tol, inner=inner, fr=fr)
    except WeightedInverseError as exc:
        raise InputError(f"weighted inverse could not be certified: {exc}") from None
    fields = [("command", "ep-check"), ("input", source), ("norm", ctx.kind), ("dim", n),
              ("rank", fr.r), ("direct", rep.direct), ("direct_residual", rep.direct_residual),
              ("consistent", rep.consistent), ("statements", len(rep.statements))]
    for s in rep.statements:
        fields.append((f"statement.{s.id}.verdict", s.verdict))
        fields.append((f"statement.{s.id}.residual", s.residual))
    fields += _tol_fields(tol)
    notes = [f"{s.id}: {s.label}" for s in rep.statements]
    if not rep.consistent:
        notes.insert(0, "INCONSISTENT: " + ", ".join(s.id for s in rep.disagreements))
    _emit(format_report(fields, notes))
    if not rep.consistent:
        return EXIT_INCONSISTENT
    return EXIT_OK if rep.direct else EXIT_NEGATIVE


def cmd_factorize(args, tol: Tolerance) -> int:
    ctx = NormContext(args.norm)
    a = _load(args.input, "input matrix")
    if a.shape[0] != a.shape[1]:
        raise InputError(f"factorize needs a square matrix, got {a.shape[0]}x{a.shape[1]}")
    n = a.shape[0]
    e = _weight(args.E, n, ctx, tol, "E")
    f = _weight(args.F, n, ctx, tol, "F")
    prefix = str(_out_path(args, ""))
    fields: List[Tuple[str, object]] = [("command", "factorize"), ("mode", args.mode),
                                        ("input", args.input), ("output_prefix", prefix)]
    written = []

    def save(name, mat):
        path = f"{prefix}.{name}.mat"
        write_matrix(path, mat)
        written.append(path)

    if args.mode == "fullrank":
        fr = full_rank_factorize(a, tol)
        fields += [("rank", fr.r), ("degenerate", fr.degenerate)]
        if fr.degenerate:
            fields.append(("reconstruction_residual", op_norm(a) / (1.0 + op_norm(a))))
        else:
            save("b", fr.b)
            save("c", fr.c)
            fields.append(("reconstruction_residual",
                           op_norm(fr.product - a) / (1.0 + op_norm(a))))
            inner = _inner_weight(args.H, fr.r, ctx, tol)
            try:
                a_dag = wmp_inverse(a, e, f, tol).require_valid()
                parts = factor_parts_wmp(a, fr, e, inner, f, tol, a_dag=a_dag)
                reverse_order_wmp(fr, parts.b_dag, parts.c_dag, a_dag, tol)
            except WeightedInverseError as exc:
                raise InputError(str(exc)) from None
            except ReverseOrderError as exc:
                fields.append(("reverse_order", False))
                _emit(format_report(fields, [f"reverse-order check failed: {exc}"]))
                return EXIT_INCONSISTENT
            save("b_dag", parts.b_dag)
            save("c_dag", parts.c_dag)
            fields += [("b_dag_b_residual", parts.residual_b),
                       ("c_c_dag_residual", parts.residual_c),
                       ("reverse_order", True), ("valid", parts.valid)]
    elif args.mode == "block":
        try:
            blk = ep_block_decomposition(a, e, f, tol)
        except (NotWeightedEPError, WeightedInverseError) as exc:
            raise InputError(f"block decomposition needs a weighted-EP matrix: {exc}") from None
        for name, mat in (("x1", blk.x1_basis), ("x2", blk.x2_basis), ("t1", blk.t1), ("j", blk.j)):
            if mat.size:
                save(name, mat)
        fields.append(("rank", blk.x1_basis.shape[1]))
        for k, (ok, res) in blk.checks.items():
            key = k.replace(" ", "_")
            fields += [(f"check.{key}", ok), (f"check.{key}.residual", float(res))]
        fields.append(("verified", blk.verified))
    else:
        try:
            dec = canonical_ep_decomposition(a, e, f, tol)
        except (NotWeightedEPError, WeightedInverseError, CornerSingularError) as exc:
            raise InputError(f"canonical decomposition needs a weighted-EP matrix: {exc}") from None
        save("c", dec.c)
        save("p", dec.p)
        save("core", dec.core)
        fields.append(("degenerate", dec.degenerate))
        for k, (ok, res) in dec.checks.items():
            key = k.replace(" ", "_")
            fields += [(f"check.{key}", ok), (f"check.{key}.residual", float(res))]
    fields += [("files", ",".join(written) if written else "none")]
    fields += _tol_fields(tol)
    _emit(format_report(fields))
    return EXIT_OK


def cmd_hermitian_check(args, tol: Tolerance) -> int:
    ctx = NormContext(args.norm)
    a = _load(args.input, "input matrix")
    if a.shape[0] != a.shape[1]:
        raise InputError(f"hermitian-check needs a square matrix, got {a.shape[0]}x{a.shape[1]}")
    chk = is_hermitian(a, ctx, tol)
    fields = [("command", "hermitian-check"), ("input", args.input), ("norm", ctx.kind),
              ("hermitian", chk.hermitian), ("max_deviation", chk.deviation)]
    if chk.exact_residual is not None:
        fields.append(("exact_residual", chk.exact_residual))
    fields.append(("positive", is_positive(a, ctx, tol)))
    fields.append(("t_grid", ",".join(f"{t:g}" for t in ctx.t_grid)))
    if args.E:
        w = _weight(args.E, a.shape[0], ctx, tol, "E")
        wchk = is_hermitian_weighted(a, w, ctx, tol, sample=True)
        fields += [("weighted.hermitian", wchk.hermitian), ("weighted.deviation", wchk.deviation)]
        if wchk.congruence_residual is not None:
            fields += [("weighted.congruence_residual", wchk.congruence_residual),
                       ("weighted.routes_agree", wchk.routes_agree)]
    if args.samples:
        pts = numerical_range(a, args.samples)
        fields.append(("numerical_range.samples", args.samples))
        for k, z in enumerate(pts):
            fields.append((f"numerical_range.{k}", f"{z.real:.16e} {z.imag:.16e}"))
    fields += _tol_fields(tol)
    notes = ["l2 verdicts use the exact test a = a*; l1/linf verdicts sample ||exp(ita)|| on the grid."]
    _emit(format_report(fields, notes))
    return EXIT_OK


def run_fuzz(trials: int, dim: int, seed: int, tol: Tolerance) -> Tuple[str, int]:
    """Run the randomized equivalence check; returns (summary text, inconsistencies)."""
    counts = {"ep": 0, "non_ep": 0, "misclassified": 0, "inconsistent": 0}
    worst_true = 0.0          # largest residual among statements that hold
    closest_false = np.inf    # smallest residual among statements that fail
    per_statement = {}
    for i in range(trials):
        n = dim
        ep = True if n == 1 else i % 2 == 0
        r = (i // 2) % (n + 1) if ep else 1 + (i // 2) % (n - 1)
        general = (i // 2) % 2 == 1
        inst = generate_instance(n, r, ep, [seed, i], general=general, tol=tol)
        rng = np.random.default_rng([seed, i, 1])
        inner = Weight.from_matrix(random_pd(r, rng), tol=tol) if r else None
        rep = full_report(inst.a, inst.e, inst.f, tol, inner=inner)
        counts["ep" if ep else "non_ep"] += 1
        counts["misclassified"] += rep.direct != ep
        counts["inconsistent"] += not rep.consistent
        for s in rep.statements:
            agree, total = per_statement.get(s.id, (0, 0))
            per_statement[s.id] = (agree + (s.verdict == rep.direct), total + 1)
            if s.verdict:
                worst_true = max(worst_true, s.residual)
            else:
                closest_false = min(closest_false, s.residual)
    fields = [("command", "fuzz"), ("seed", seed), ("trials", trials), ("dim", dim)]
    fields += [(k, v) for k, v in counts.items()]
    fields += [("worst_true_residual", worst_true),
               ("closest_false_residual", float(closest_false) if np.isfinite(closest_false) else "none")]
    for sid in sorted(per_statement):
        agree, total = per_statement[sid]
        fields.append((f"agree.{sid}", f"{agree}/{total}"))
    fields += _tol_fields(tol)
    return format_report(fields, ["Half of the instances are weighted EP by construction."]), \
        counts["inconsistent"] + counts["misclassified"]


def cmd_fuzz(args, tol: Tolerance) -> int:
    if args.trials < 1 or args.dim < 1:
        raise InputError("--trials and --dim must be >= 1")
    text, bad = run_fuzz(args.trials, args.dim, args.seed, tol)
    if args.output:
        Path(args.output).write_text(text)
    _emit(text)
    return EXIT_INCONSISTENT if bad else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help="input matrix file")
    common.add_argument("-E", help="weight file (codomain / first weight)")
    common.add_argument("-F", help="weight file (domain / second weight)")
    common.add_argument("-H", help="inner weight for factorization chains (r x r)")
    common.add_argument("--norm", choices=["l1", "l2", "linf"], default="l2")
    common.add_argument("--tol", type=float, help="relative residual tolerance (overrides WEP_TOL)")
    common.add_argument("-o", "--output", help="output file or prefix")

    parser = _Parser(prog="wep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("pinv", parents=[common], help="Moore-Penrose inverse")
    sub.add_parser("wpinv", parents=[common], help="weighted Moore-Penrose inverse")
    p = sub.add_parser("ep-check", parents=[common], help="decide weighted-EP-ness by every characterization")
    p.add_argument("--synthesize", action="store_true", help="check a generated weighted-EP instance")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--rank", type=int)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("factorize", parents=[common], help="full-rank, block or canonical factorization")
    p.add_argument("--mode", choices=["fullrank", "block", "canonical"], default="fullrank")
    p = sub.add_parser("hermitian-check", parents=[common], help="hermitian / positive test")
    p.add_argument("--samples", type=int, default=0, help="numerical-range boundary samples (l2)")
    p = sub.add_parser("fuzz", parents=[common], help="randomized equivalence check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--dim", type=int, default=4)
    return parser


COMMANDS = {
    "pinv": cmd_pinv,
    "wpinv": cmd_wpinv,
    "ep-check": cmd_ep_check,
    "factorize": cmd_factorize,
    "hermitian-check": cmd_hermitian_check,
    "fuzz": cmd_fuzz,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = resolve_tol(args.tol)
        return COMMANDS[args.command](args, tol)
    except (InputError, MatrixFileError, MatrixError) as exc:
        print(f"wep {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
