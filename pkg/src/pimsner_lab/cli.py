"""Command-line front end.

Exit codes: 0 all checks pass, 1 usage or parse error, 2 a mathematical check
failed, 3 a precondition of the requested computation does not hold.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import graph_core as gc
from .bimodule import (
    DEFAULT_TOL,
    basis_vector,
    beta_exp,
    decompose_q,
    make_backend,
    verify_assumption_one,
    verify_q_properties,
)
from .graph_core import Graph, PreconditionError, SFTMatrix, ValidationError
from .ktheory import determinant, graph_K_groups, one_minus, pimsner_K0, pimsner_K1
from .operators import (
    commutator_norm,
    get_psi,
    is_nondecreasing_then_constant,
    spectral_decomposition,
    theta_converges,
    theta_trace,
)
from .report import Table, render, write_figures
from .shift_groupoid import basis_Rnk, compare_models
from .xi_module import phi_by_traces, phi_infty, symbol

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None
    backend: str = "graph"
    depth: int = 3
    cyl_depth: int | None = None
    n_min: int | None = None
    n_max: int | None = None
    k_max: int | None = None
    tol: float = DEFAULT_TOL
    exact: bool = True
    psi: str = "default"
    format: str = "tsv"
    figures: str | None = None
    theta_t: float | None = None
    shells: int = 8
    d_min: int | None = None
    all_pairs: bool = False

    def window(self) -> tuple[int, int, int]:
        d = self.depth
        n_min = -d if self.n_min is None else self.n_min
        n_max = d if self.n_max is None else self.n_max
        k_max = d if self.k_max is None else self.k_max
        if n_min > n_max or k_max < 0:
            raise UsageError(f"empty window: n in [{n_min},{n_max}], k <= {k_max}")
        return n_min, n_max, k_max

    def cylinder_depth(self) -> int:
        n_min, n_max, k_max = self.window()
        reach = max(n_max + k_max, k_max - min(n_min, 0), 1)
        m = reach if self.cyl_depth is None else self.cyl_depth
        if m < reach:
            raise UsageError(f"cylinder depth {m} is below the window reach {reach}")
        return m


# -- input -------------------------------------------------------------------------------

def _builtin(name: str, kind: str):
    m = re.fullmatch(r"(O|full|cycle)(\d+)|golden|fib|fibonacci", name)
    if m is None:
        raise ValidationError(f"unknown builtin {name!r}; try O2, O3, full2, golden, fib or cycle3")
    family, size = m.group(1), int(m.group(2)) if m.group(2) else None
    if family is not None and size < 1:
        raise ValidationError("builtin sizes start at 1")
    if family in ("O", "full"):
        if kind == "sft":
            return gc.full_shift(size)
        return gc.cuntz_graph(size) if family == "O" else gc.graph_from_adjacency([[1] * size] * size, name)
    if family == "cycle":
        if kind == "sft":
            raise ValidationError("cycle graphs have no shift-of-finite-type form here")
        return gc.cycle_graph(size)
    return gc.golden_mean() if kind == "sft" else gc.fibonacci_graph()


def load(cfg: RunConfig):
    if cfg.backend == "smeb-test":
        if cfg.input not in (None, "builtin:cycle3"):
            raise UsageError("the smeb-test backend has a fixed input (the 3-cycle)")
        return gc.cycle_graph(3)
    kind = "sft" if cfg.backend == "sft" else "graph"
    if cfg.input is None:
        raise UsageError("an input file or builtin:NAME is required")
    if cfg.input.startswith("builtin:"):
        return gc.validate(_builtin(cfg.input.split(":", 1)[1], kind))
    if not Path(cfg.input).is_file():
        raise ValidationError(f"no such input file: {cfg.input}")
    return gc.load_input(cfg.input, kind)


def _backend(cfg: RunConfig, obj):
    return make_backend(obj, exact=cfg.exact, tol=cfg.tol)


def _name(obj) -> str:
    return obj.name


def _compact(a):
    """A constant algebra element as one scalar, otherwise its values point by point."""
    vals = tuple(a.values)
    return vals[0] if len(set(vals)) == 1 else vals


# -- commands ------------------------------------------------------------------------------

def cmd_inspect(cfg: RunConfig, obj):
    info = Table("input", ["field", "value"])
    info.add("name", _name(obj))
    if isinstance(obj, Graph):
        info.add("kind", "graph")
        info.add("vertices", obj.n_vertices)
        info.add("edges", len(obj.edges))
    else:
        info.add("kind", "sft")
        info.add("alphabet", obj.size)
    info.add("primitive", gc.is_primitive(obj))
    if isinstance(obj, Graph) and gc.is_primitive(obj):
        info.add("perron eigenvalue", float(gc.perron_data(obj, "float").eigenvalue))
    b = _backend(cfg, obj)
    idx = Table("indices", ["l", "exp_beta_l"])
    for l in range(cfg.depth + 1):
        idx.add(l, _compact(beta_exp(b, l)))
    return [info, idx], [], EXIT_OK


def _decomposition_table(b, depth: int) -> tuple[Table, bool]:
    t = Table("decomposition", ["l", "success", "c_l", "P_l_is_identity", "notes"])
    ok = True
    for l in range(depth + 1):
        dec = decompose_q(b, l)
        ok = ok and dec.success
        ident = dec.success and all(x == 1 or abs(x - 1) <= b.zero_tol for x in dec.projection.values())
        c = _compact(dec.central) if dec.central is not None else None
        t.add(l, dec.success, c, ident, dec.notes or "-")
    return t, ok


def cmd_assumptions(cfg: RunConfig, obj):
    if isinstance(obj, Graph) and cfg.backend != "smeb-test" and not gc.is_primitive(obj):
        return [], [f"check failed: graph {_name(obj)} is not primitive"], EXIT_CHECK
    b = _backend(cfg, obj)
    tables, ok = [], True
    try:
        qrep = verify_q_properties(b, cfg.depth)
    except PreconditionError as exc:
        return [], [f"check failed: {exc}"], EXIT_CHECK
    qt = Table("q-properties", ["check", "passed"])
    for name, passed, _ in qrep.checks:
        qt.add(name, passed)
    ok = ok and qrep.passed
    dt, dec_ok = _decomposition_table(b, cfg.depth)
    ok = ok and dec_ok
    at = Table("assumption-1", ["vector", "passed", "final_deviation", "rate"])
    for p in b.paths(1):
        rep = verify_assumption_one(basis_vector(b, p), n_max=30, tol=cfg.tol)
        ok = ok and rep.passed
        at.add(b.label(p), rep.passed, rep.deviations[-1][1], rep.rate)
    tables += [qt, dt, at]
    return tables, ["all checks passed" if ok else "check failed"], EXIT_OK if ok else EXIT_CHECK


def cmd_decompose(cfg: RunConfig, obj):
    t, ok = _decomposition_table(_backend(cfg, obj), cfg.depth)
    return [t], [] if ok else ["check failed: decomposition unavailable"], EXIT_OK if ok else EXIT_CHECK


def cmd_spectrum(cfg: RunConfig, obj):
    b = _backend(cfg, obj)
    n_min, n_max, k_max = cfg.window()
    psi = get_psi(cfg.psi)
    dec = spectral_decomposition(b, psi, cfg.depth, n_min, n_max, k_max)
    t = Table("spectrum", ["n", "k", "rank", "psi"])
    for c in dec.ordered():
        t.add(c.n, c.k, c.rank, c.psi)
    tables, messages, code = [t], [], EXIT_OK
    if cfg.theta_t is not None:
        if not (isinstance(obj, Graph) and obj.n_vertices == 1):
            raise PreconditionError("the heat-trace shells use the O_N rank formula (one-vertex graphs)")
        rows = theta_trace(psi, cfg.theta_t, cfg.shells, len(obj.edges))
        th = Table("theta", ["shell", "rank", "shell_sum", "ratio", "partial_sum"])
        for r in rows:
            th.add(r.shell, r.rank, r.shell_sum, r.ratio, r.partial_sum)
        tables.append(th)
        if not theta_converges(rows):
            messages.append("check failed: shell ratios are not all below 1")
            code = EXIT_CHECK
    return tables, messages, code


def cmd_commutators(cfg: RunConfig, obj):
    b = _backend(cfg, obj)
    psi = get_psi(cfg.psi)
    d_min = min(3, cfg.depth) if cfg.d_min is None else cfg.d_min
    if d_min < 1 or d_min > cfg.depth:
        raise UsageError("need 1 <= --d-min <= --depth")
    t = Table("commutators", ["generator", "depth", "norm", "bound", "engine"])
    messages, ok = [], True
    for gen in b.paths(1):
        norms = []
        for d in range(d_min, cfg.depth + 1):
            r = commutator_norm(b, gen, psi, d)
            t.add(r.generator, d, r.norm, r.bound, r.engine)
            norms.append(r.norm)
            if r.norm > r.bound + 1e-8:
                ok = False
                messages.append(f"check failed: {r.generator} exceeds the bound at depth {d}")
        if not is_nondecreasing_then_constant(norms):
            ok = False
            messages.append(f"check failed: norms for {b.label(gen)} are not non-decreasing then constant")
    return [t], messages, EXIT_OK if ok else EXIT_CHECK


def cmd_ktheory(cfg: RunConfig, obj):
    if isinstance(obj, SFTMatrix):
        k0, k1 = pimsner_K0(obj), pimsner_K1(obj)
        m = one_minus(obj)
    else:
        k0, k1 = graph_K_groups(obj.adjacency_int())
        m = one_minus(obj.adjacency_int())
    det = determinant(m)
    t = Table("ktheory", ["group", "value", "free_rank", "torsion"])
    t.add("K0", str(k0), k0.free_rank, k0.torsion)
    t.add("K1", str(k1), k1.free_rank, k1.torsion)
    ok = (k1.order == abs(det)) if det else k1.free_rank > 0
    messages = [f"det(1 - A) = {det}"]
    if not ok:
        messages.append("check failed: |det(1 - A)| differs from the order of K1")
    return [t], messages, EXIT_OK if ok else EXIT_CHECK


def cmd_kms(cfg: RunConfig, obj):
    if not isinstance(obj, Graph):
        raise PreconditionError("the KMS table is computed on the graph backend")
    b = _backend(cfg, obj)
    paths = [p for l in range(cfg.depth + 1) for p in b.paths(l)]
    one_vertex = obj.n_vertices == 1
    t = Table("kms", ["mu", "nu", "phi_infty", "frame_trace"])
    mismatches, zeros = 0, 0
    for mu in paths:
        for nu in paths:
            if mu != nu and not cfg.all_pairs:
                if len(mu) == len(nu):
                    val = phi_by_traces(b, mu, nu, len(mu) - 1)
                    zeros += val.is_zero(b.zero_tol)
                    mismatches += not val.is_zero(b.zero_tol)
                else:
                    zeros += 1
                continue
            closed = phi_infty(symbol(b, mu, nu))
            traced = phi_by_traces(b, mu, nu, max(len(mu), len(nu)) - 1) if len(mu) == len(nu) else b.zero()
            if one_vertex:
                expect = Fraction(1, len(obj.edges) ** (len(mu) - 1)) if mu == nu else 0
                bad = not (closed.equals(b.const(expect), b.zero_tol) and traced.equals(closed, b.zero_tol))
                mismatches += bad
            t.add(b.label(mu), b.label(nu), _compact(closed), _compact(traced))
    messages = [] if cfg.all_pairs else [f"off-diagonal pairs: {zeros} zero"]
    if mismatches:
        messages.append(f"check failed: {mismatches} pairs differ from delta_(mu,nu) N^-|mu|")
    return [t], messages, EXIT_CHECK if mismatches else EXIT_OK


def cmd_groupoid_check(cfg: RunConfig, obj):
    if not isinstance(obj, SFTMatrix):
        raise PreconditionError("groupoid-check needs the sft backend")
    n_min, n_max, k_max = cfg.window()
    m = cfg.cylinder_depth()
    rep = compare_models(obj, n_min, n_max, k_max, m)
    t = Table("cells", ["n", "k", "basis_size"])
    for n in range(n_min, n_max + 1):
        for k in range(max(0, -n), k_max + 1):
            t.add(n, k, len(basis_Rnk(obj, n, k, m)))
    return [t], [rep.summary()], EXIT_OK if rep.passed else EXIT_CHECK


COMMANDS = {
    "inspect": cmd_inspect,
    "assumptions": cmd_assumptions,
    "decompose": cmd_decompose,
    "spectrum": cmd_spectrum,
    "commutators": cmd_commutators,
    "ktheory": cmd_ktheory,
    "kms": cmd_kms,
    "groupoid-check": cmd_groupoid_check,
}


# -- argument parsing ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("input", nargs="?", help="JSON graph/matrix file or builtin:NAME (O2, golden, fib, full3, cycle3)")
    common.add_argument("--backend", choices=["graph", "sft", "smeb-test"], default="graph")
    common.add_argument("--depth", type=int, default=3, help="truncation depth d")
    common.add_argument("--cyl-depth", type=int, help="cylinder depth m for groupoid checks")
    common.add_argument("--n-min", type=int)
    common.add_argument("--n-max", type=int)
    common.add_argument("--k-max", type=int)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=True, help="rational arithmetic (default)")
    mode.add_argument("--float", dest="exact", action="store_false", help="floating point arithmetic")
    common.add_argument("--psi", choices=["default", "variant-a", "variant-b"], default="default")
    common.add_argument("--format", choices=["tsv", "json"], default="tsv")
    common.add_argument("--figures", metavar="DIR", help="also write matplotlib figures into DIR")

    parser = _Parser(prog="pimsner-lab", description="Finite-window computations for Cuntz-Pimsner spectral triples.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "spectrum":
            p.add_argument("--theta-t", type=float, help="append heat-trace shell sums at this t")
            p.add_argument("--shells", type=int, default=8)
        if name == "commutators":
            p.add_argument("--d-min", type=int, help="smallest depth (default min(3, d))")
        if name == "kms":
            p.add_argument("--all-pairs", action="store_true", help="list every (mu, nu) pair")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__})
    if cfg.depth < 0:
        raise UsageError("--depth must be non-negative")
    if cfg.backend == "sft" and cfg.command in ("kms",):
        raise UsageError("kms runs on graph inputs")
    return cfg


def run(cfg: RunConfig) -> tuple[str, int]:
    obj = load(cfg)
    tables, messages, code = COMMANDS[cfg.command](cfg, obj)
    meta = {"command": cfg.command, "input": _name(obj), "backend": cfg.backend, "depth": cfg.depth,
            "psi": cfg.psi, "exact": cfg.exact, "exit_code": code}
    if cfg.figures:
        write_figures(tables, cfg.figures, f"{cfg.command}-{_name(obj)}")
    return render(tables, cfg.format, messages, meta), code


def main(argv: list | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        out, code = run(config_from_args(ns))
    except (UsageError, ValidationError) as exc:
        print(f"pimsner-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"pimsner-lab: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
