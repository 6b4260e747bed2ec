"""``exactcpd`` command line.

Exit codes: 0 answered, 1 verify mismatch, 2 usage or parse error,
3 refused because the step estimate is over budget.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click
import numpy as np

from .algebra import BorderRingSpec, as_field
from .border_search import border_concise, border_cost_log2, border_search_rank_le, embed
from .cpd_search import BRANCHES, SearchConfig, search_cost_log2, search_rank_le
from .errors import BudgetExceeded, CPDError, ParseError, ShapeMismatch, TooLarge
from .formats import (
    cpd_to_json,
    looks_like_tensor_file,
    parse_char_matrix,
    parse_cpd,
    parse_tensor,
    write_matrix_blocks,
)
from .maxrank import count_canonical, maxrank_exhaustive, shape_bounds
from .oracle import verify_cpd
from .pruners import DEFAULT_PRUNERS, PRUNER_NAMES
from .tensor import cpd_eval, generate, make_concise

CLI_BUDGET_LOG2 = 34

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class Refused(click.ClickException):
    exit_code = EXIT_BUDGET


class BadInput(click.ClickException):
    exit_code = EXIT_USAGE


def _err(msg: str):
    click.echo(msg, err=True)


def _parse_shape(text: str) -> tuple:
    try:
        shape = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise BadInput(f"cannot read shape {text!r}") from None
    if not shape or min(shape) < 1:
        raise BadInput(f"shape sides must be positive, got {text!r}")
    return shape


def _load(path, gen, p: int):
    """Field tensor and its modulus from a file, a char matrix or ``--gen``."""
    if (path is None) == (gen is None):
        raise BadInput("give exactly one of INPUT or --gen")
    if gen is not None:
        try:
            return generate(gen) % p, p, None
        except (CPDError, ValueError) as e:
            raise BadInput(str(e)) from None
    text = Path(path).read_text()
    try:
        if looks_like_tensor_file(text):
            tf = parse_tensor(text)
            return tf.data, tf.p, tf.H
        return parse_char_matrix(text, p), p, None
    except ParseError as e:
        raise BadInput(f"{path}: {e}") from None


def _progress(level, done, total, hits):
    pr = " ".join(f"{k}={v}" for k, v in sorted(hits.items()))
    _err(f"[progress] level={level} {done}/{total} ({100.0 * done / max(total, 1):.1f}%) {pr}")


def _guard(cost: float, long_ok: bool, what: str, ceiling: float = CLI_BUDGET_LOG2):
    _err(f"estimate: 2^{cost:.1f} steps for {what}")
    if cost > ceiling and not long_ok:
        raise Refused(f"estimate 2^{cost:.1f} exceeds the ceiling 2^{ceiling:g}; pass --long-ok to run anyway")


def _emit_witness(cpd, p, shape, H=None, json_out=None, **extra):
    click.echo(write_matrix_blocks(cpd, H), nl=False)
    if json_out:
        Path(json_out).write_text(cpd_to_json(cpd, p, shape, H, **extra) + "\n")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Exact CP decompositions over GF(p) and GF(p)[x]/(x^H)."""


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------


@main.command()
@click.argument("input", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--gen", help="tensor family such as wstate or mm:2,2,2")
@click.option("--le", "le", type=int, help="decide rank <= R")
@click.option("--exact", is_flag=True, help="compute the exact rank")
@click.option("--field", "p", type=int, default=2, show_default=True)
@click.option("--pruners", default=",".join(sorted(DEFAULT_PRUNERS)), show_default=True,
              help=f"comma list from {','.join(PRUNER_NAMES)} (empty for none)")
@click.option("--branch", type=click.Choice(BRANCHES), default="auto", show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--deterministic", is_flag=True, help="sequential canonical order")
@click.option("--long-ok", is_flag=True, help="run even over the step ceiling")
@click.option("--progress-interval", type=float, default=5.0, show_default=True)
@click.option("--json", "json_out", type=click.Path(dir_okay=False), help="also dump the witness as JSON")
def rank(input, gen, le, exact, p, pruners, branch, threads, deterministic, long_ok, progress_interval, json_out):
    """Decide rank <= R, or find the exact rank, over GF(p)."""
    if (le is None) == (not exact):
        raise BadInput("give exactly one of --le R or --exact")
    try:
        as_field(p)
    except (CPDError, ValueError) as e:
        raise BadInput(str(e)) from None
    T, p, H = _load(input, gen, p)
    if H is not None:
        raise BadInput("input is a border tensor; use border-rank")
    try:
        cfg = SearchConfig(
            pruners=frozenset(x for x in pruners.split(",") if x),
            branch=branch,
            deterministic=deterministic or threads == 1,
            threads=1 if deterministic else threads,
            progress=_progress,
            progress_interval=progress_interval,
        )
    except ValueError as e:
        raise BadInput(str(e)) from None
    Tc = make_concise(T, p, sort_axes=True)[0]
    t0 = time.perf_counter()
    if le is not None:
        _guard(search_cost_log2(Tc.shape, le, p), long_ok, f"R={le}")
        out = search_rank_le(T, le, cfg, p)
        click.echo(f"rank <= {le}: {'yes' if out.found else 'no'}")
        if out.found:
            _emit_witness(out.witness, p, T.shape, json_out=json_out)
        stats = out.stats
    else:
        R = max(Tc.shape, default=0)
        while True:
            _guard(search_cost_log2(Tc.shape, R, p), long_ok, f"R={R}")
            out = search_rank_le(T, R, cfg, p)
            if out.found:
                break
            R += 1
        click.echo(f"rank = {R}")
        _emit_witness(out.witness, p, T.shape, json_out=json_out)
        stats = out.stats
    _err(
        f"stats: nodes={stats.total_nodes} leaves={stats.leaves} "
        f"pruner_hits={dict(stats.pruner_hits)} time={time.perf_counter() - t0:.3f}s"
    )


# ---------------------------------------------------------------------------
# border-rank
# ---------------------------------------------------------------------------


@main.command("border-rank")
@click.argument("input", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--gen", help="tensor family such as wstate")
@click.option("--H", "H", type=int, required=True, help="exponent threshold, at least 1")
@click.option("--le", "le", type=int, help="decide border rank <= R")
@click.option("--exact", is_flag=True)
@click.option("--field", "p", type=int, default=2, show_default=True)
@click.option("--budget", type=float, default=CLI_BUDGET_LOG2, show_default=True, help="log2 step ceiling")
@click.option("--long-ok", is_flag=True)
@click.option("--json", "json_out", type=click.Path(dir_okay=False))
def border_rank_cmd(input, gen, H, le, exact, p, budget, long_ok, json_out):
    """Rank of x^(H-1) T over GF(p)[x]/(x^H).

    A file with its own ``H`` header is searched as given.
    """
    if H < 1:
        raise BadInput("--H must be at least 1")
    if (le is None) == (not exact):
        raise BadInput("give exactly one of --le R or --exact")
    T, p, fileH = _load(input, gen, p)
    ring = BorderRingSpec(as_field(p), H)
    if fileH is None:
        X = embed(T, H)
    elif fileH == H:
        X = T
    else:
        raise BadInput(f"file declares H={fileH} but --H {H} was given")
    ranks = border_concise(X, ring).ranks
    shape = X.shape[:-1]

    def run(R):
        _guard(border_cost_log2(ranks, R, ring), long_ok, f"R={R}", budget)
        return border_search_rank_le(X, R, ring, force=True)

    if le is not None:
        out = run(le)
        click.echo(f"border-rank(H={H}) <= {le}: {'yes' if out.found else 'no'}")
    else:
        R = 0
        while not (out := run(R)).found:
            R += 1
        click.echo(f"border-rank(H={H}) = {R}")
    if out.found:
        _emit_witness(out.witness, p, shape, H, json_out=json_out)
    st = out.stats
    _err(f"stats: nodes={st.nodes} terminations={st.terminations} time={st.wall_time:.3f}s")


# ---------------------------------------------------------------------------
# maxrank, bounds
# ---------------------------------------------------------------------------


@main.command()
@click.option("--shape", "shape_s", required=True, help="m,n,p")
@click.option("--field", "p", type=int, default=2, show_default=True)
@click.option("--R0", "R0", type=int, default=0, show_default=True, help="known lower bound on the max rank")
@click.option("--r0", "r0", type=int, default=None, help="identity block size (default R0 // m + 1)")
@click.option("--count-only", is_flag=True)
@click.option("--json", "json_out", type=click.Path(dir_okay=False))
def maxrank(shape_s, p, R0, r0, count_only, json_out):
    """Exhaustive maximum rank over canonical tensors of a shape."""
    shape = _parse_shape(shape_s)
    if len(shape) != 3:
        raise BadInput("maxrank needs a three-axis shape")
    if p != 2:
        raise BadInput("maxrank enumeration is implemented over GF(2)")
    r0 = R0 // shape[0] + 1 if r0 is None else r0
    try:
        if count_only:
            click.echo(count_canonical(shape, r0, p))
            return
        rep = maxrank_exhaustive(
            shape, p, R0, r0=r0, progress=lambda c, b: _err(f"[progress] tensors={c} max={b}")
        )
    except (TooLarge, BudgetExceeded) as e:
        raise Refused(str(e)) from None
    click.echo(f"tensors searched = {rep.tensors_searched}")
    click.echo(f"max rank = {rep.max_rank}")
    click.echo(rep.table_row())
    if json_out:
        import json

        Path(json_out).write_text(json.dumps(rep.to_dict(), indent=2) + "\n")


@main.command()
@click.option("--shape", "shape_s", required=True, help="m,n,p")
@click.option("--field", "p", type=int, default=2, show_default=True)
def bounds(shape_s, p):
    """Known lower and upper bounds on the maximum rank of a shape."""
    shape = _parse_shape(shape_s)
    try:
        b = shape_bounds(shape, p)
    except CPDError as e:
        raise BadInput(str(e)) from None
    for tag, v in sorted(b.lower.items()):
        click.echo(f"lower {tag}: {v}")
    for tag, v in sorted(b.upper.items()):
        click.echo(f"upper {tag}: {v}")
    lo, lt = b.best_lower
    hi, ht = b.best_upper
    click.echo(f"{lo} <= R{shape} <= {hi}  ({lt} / {ht})")


# ---------------------------------------------------------------------------
# verify, gen
# ---------------------------------------------------------------------------


@main.command()
@click.argument("tensor_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("cpd_file", type=click.Path(exists=True, dir_okay=False))
def verify(tensor_file, cpd_file):
    """Check that a CPD file evaluates to a tensor file."""
    try:
        tf = parse_tensor(Path(tensor_file).read_text())
        cpd, p, H = parse_cpd(Path(cpd_file).read_text())
    except ParseError as e:
        raise BadInput(str(e)) from None
    if (p, H) != (tf.p, tf.H):
        raise BadInput(f"tensor is over (p={tf.p}, H={tf.H}) but the CPD is over (p={p}, H={H})")
    ring = BorderRingSpec(as_field(p), H) if H is not None else p
    try:
        ok = verify_cpd(tf.data, cpd, ring)
    except ShapeMismatch as e:
        raise BadInput(str(e)) from None
    if ok:
        click.echo("OK")
        return
    diff = np.argwhere((cpd_eval(cpd, tf.shape, ring) - tf.data) % p)
    where = tuple(int(i) for i in diff[0][: len(tf.shape)])
    click.echo(f"MISMATCH at {where}")
    sys.exit(EXIT_MISMATCH)


@main.command()
@click.argument("family")
@click.option("--field", "p", type=int, default=2, show_default=True)
@click.option("--H", "H", type=int, default=None, help="embed at x^(H-1)")
def gen(family, p, H):
    """Write a named tensor family as a tensor file."""
    from .formats import write_tensor

    try:
        T = generate(family) % p
    except (CPDError, ValueError) as e:
        raise BadInput(str(e)) from None
    click.echo(write_tensor(T if H is None else embed(T, H), p, H), nl=False)


def run(argv=None) -> int:
    """Invoke the CLI and return its exit code instead of exiting."""
    try:
        main.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
