"""Text formats for tensors, CPDs and characteristic matrices.

Tensor file::

    # comments run to the end of the line
    field 2
    H 2            (optional; entries are then polynomials in x)
    shape 2 2 2
    0 1
    1 0

    x 0
    0 0

Entries are listed row-major and may be split over lines freely. The writer
puts one innermost row per line and a blank line between 2-D blocks.

CPD file::

    field 2
    rank 3
    factor 0 2
    1 0 1
    0 1 1
    factor 1 2
    ...

``factor d n`` is followed by ``n`` rows of ``rank`` entries each.

Characteristic matrix: rows separated by ``;``, newlines or ``],[`` (as in
``[[v0, v1], [v1, 0]]``), cells by commas, each cell a combination of
symbols such as ``v0+2*v1`` or ``0``. Cell ``(j, k)`` holding coefficient
``c`` of ``v_i`` means ``T[i, j, k] = c``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParseError
from .tensor import Cpd

__all__ = [
    "TensorFile",
    "parse_tensor",
    "write_tensor",
    "parse_cpd",
    "write_cpd",
    "write_matrix_blocks",
    "parse_char_matrix",
    "write_char_matrix",
    "parse_poly",
    "format_poly",
    "cpd_to_json",
    "looks_like_tensor_file",
]


@dataclass
class TensorFile:
    p: int
    shape: tuple
    data: np.ndarray
    H: Optional[int] = None

    @property
    def is_border(self) -> bool:
        return self.H is not None


# ---------------------------------------------------------------------------
# scalars
# ---------------------------------------------------------------------------

_TERM = re.compile(r"^(?:(\d+)\*?)?(x(?:\^(\d+))?)?$")


def parse_poly(text: str, p: int, H: int, line: int | None = None, column: int | None = None) -> np.ndarray:
    """Coefficients of a polynomial such as ``1+2*x+x^3`` reduced mod ``p`` and ``x^H``."""
    out = np.zeros(H, dtype=np.int64)
    s = text.replace(" ", "")
    if not s:
        raise ParseError("empty polynomial", line, column)
    for sign, body in re.findall(r"([+-]?)([^+-]+)", s):
        m = _TERM.match(body)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ParseError(f"cannot read polynomial term {body!r}", line, column)
        coef = int(m.group(1)) if m.group(1) is not None else 1
        power = 0 if m.group(2) is None else int(m.group(3) or 1)
        if sign == "-":
            coef = -coef
        if power < H:
            out[power] = (out[power] + coef) % p
    if re.sub(r"([+-]?)([^+-]+)", "", s):
        raise ParseError(f"cannot read polynomial {text!r}", line, column)
    return out


def format_poly(coeffs) -> str:
    terms = []
    for h, c in enumerate(int(x) for x in coeffs):
        if not c:
            continue
        if h == 0:
            terms.append(str(c))
        else:
            mono = "x" if h == 1 else f"x^{h}"
            terms.append(mono if c == 1 else f"{c}*{mono}")
    return "+".join(terms) if terms else "0"


def _parse_int(tok: str, p: int, line: int, col: int) -> int:
    try:
        return int(tok) % p
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", line, col) from None


# ---------------------------------------------------------------------------
# tensor files
# ---------------------------------------------------------------------------


def _tokens(text: str):
    """``(token, line, column)`` for every whitespace-separated token outside comments."""
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        for m in re.finditer(r"\S+", body):
            yield m.group(0), ln, m.start() + 1


def _header(toks, i, key, count=None):
    if i >= len(toks) or toks[i][0] != key:
        where = toks[i][1:] if i < len(toks) else (None, None)
        raise ParseError(f"expected '{key}' header", *where)
    line = toks[i][1]
    vals = []
    j = i + 1
    while j < len(toks) and toks[j][1] == line and (count is None or len(vals) < count):
        tok, ln, col = toks[j]
        try:
            vals.append(int(tok))
        except ValueError:
            raise ParseError(f"'{key}' takes integers, got {tok!r}", ln, col) from None
        j += 1
    return vals, j, line


def looks_like_tensor_file(text: str) -> bool:
    for tok, _, _ in _tokens(text):
        return tok in ("field", "shape")
    return False


def _parse_headers(toks):
    from .algebra import is_prime

    vals, i, line = _header(toks, 0, "field", 1)
    if len(vals) != 1 or not is_prime(vals[0]):
        raise ParseError("field needs one prime modulus", line, 1)
    p = vals[0]
    H = None
    if i < len(toks) and toks[i][0] == "H":
        vals, i, line = _header(toks, i, "H", 1)
        if len(vals) != 1 or vals[0] < 1:
            raise ParseError("H must be a positive integer", line, 1)
        H = vals[0]
    return p, H, i


def parse_tensor(text: str) -> TensorFile:
    toks = list(_tokens(text))
    p, H, i = _parse_headers(toks)
    shape, i, line = _header(toks, i, "shape")
    if not shape or any(n < 1 for n in shape):
        raise ParseError("shape needs one or more positive lengths", line, 1)
    body = toks[i:]
    N = int(np.prod(shape))
    if len(body) != N:
        where = body[N][1:] if len(body) > N else (toks[-1][1], None)
        raise ParseError(f"shape {tuple(shape)} needs {N} entries, found {len(body)}", *where)
    if H is None:
        data = np.array([_parse_int(t, p, ln, col) for t, ln, col in body], dtype=np.int64).reshape(shape)
    else:
        data = np.array([parse_poly(t, p, H, ln, col) for t, ln, col in body], dtype=np.int64).reshape(
            tuple(shape) + (H,)
        )
    return TensorFile(p, tuple(shape), data, H)


def _entry(x, border: bool) -> str:
    return format_poly(x) if border else str(int(x))


def _blocks(data: np.ndarray, border: bool) -> str:
    """One innermost row per line, blank lines between 2-D blocks."""
    shape = data.shape[:-1] if border else data.shape
    if len(shape) == 1:
        return " ".join(_entry(x, border) for x in data) + "\n"
    rows, cols = shape[-2], shape[-1]
    flat = data.reshape((-1, rows, cols) + ((data.shape[-1],) if border else ()))
    chunks = []
    for block in flat:
        chunks.append("\n".join(" ".join(_entry(x, border) for x in row) for row in block))
    return "\n\n".join(chunks) + "\n"


def write_tensor(T, p: int, H: Optional[int] = None) -> str:
    data = np.asarray(T, dtype=np.int64) % p
    shape = data.shape[:-1] if H is not None else data.shape
    head = [f"field {p}"]
    if H is not None:
        head.append(f"H {H}")
    head.append("shape " + " ".join(str(n) for n in shape))
    return "\n".join(head) + "\n" + _blocks(data, H is not None)


# ---------------------------------------------------------------------------
# CPD files
# ---------------------------------------------------------------------------


def write_matrix_blocks(cpd: Cpd, H: Optional[int] = None) -> str:
    lines = []
    for d, A in enumerate(cpd.factors):
        lines.append(f"factor {d} {A.shape[0]}")
        for row in A:
            lines.append(" ".join(_entry(x, H is not None) for x in row) if len(row) else "")
    return "\n".join(lines) + "\n"


def write_cpd(cpd: Cpd, p: int, H: Optional[int] = None) -> str:
    head = [f"field {p}"]
    if H is not None:
        head.append(f"H {H}")
    head.append(f"rank {cpd.rank}")
    return "\n".join(head) + "\n" + write_matrix_blocks(cpd, H)


def parse_cpd(text: str) -> tuple[Cpd, int, Optional[int]]:
    toks = list(_tokens(text))
    p, H, i = _parse_headers(toks)
    vals, i, line = _header(toks, i, "rank", 1)
    if len(vals) != 1 or vals[0] < 0:
        raise ParseError("rank needs one nonnegative integer", line, 1)
    R = vals[0]
    factors = []
    while i < len(toks):
        (d, n), i, line = _factor_header(toks, i)
        if d != len(factors):
            raise ParseError(f"expected factor {len(factors)}, got factor {d}", line, 1)
        need = n * R
        body = toks[i : i + need]
        if len(body) < need or any(t[0] == "factor" for t in body):
            raise ParseError(f"factor {d} needs {n} rows of {R} entries", line, 1)
        if H is None:
            A = np.array([_parse_int(t, p, ln, c) for t, ln, c in body], dtype=np.int64).reshape(n, R)
        else:
            A = np.array([parse_poly(t, p, H, ln, c) for t, ln, c in body], dtype=np.int64).reshape(n, R, H)
        factors.append(A)
        i += need
    if not factors:
        raise ParseError("no factor blocks found", toks[-1][1] if toks else None)
    return Cpd(factors), p, H


def _factor_header(toks, i):
    vals, j, line = _header(toks, i, "factor", 2)
    if len(vals) != 2 or vals[1] < 0:
        raise ParseError("factor header is 'factor <axis> <rows>'", line, 1)
    return tuple(vals), j, line


# ---------------------------------------------------------------------------
# characteristic matrices
# ---------------------------------------------------------------------------

_CELL_TERM = re.compile(r"^(?:(\d+)\*?)?([a-zA-Z]+)(\d+)$|^(\d+)$")


def parse_char_matrix(text: str, p: int = 2, m: Optional[int] = None) -> np.ndarray:
    """Tensor ``T[i, j, k]`` from cells of ``v x_0 T``."""
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    body = re.sub(r"\]\s*,?\s*\[", ";", body).replace("[", " ").replace("]", " ")
    rows = [r for r in re.split(r"[;\n]", body) if r.strip()]
    if not rows:
        raise ParseError("empty characteristic matrix", 1)
    cells: list[list[dict]] = []
    top = 0
    for ln, row in enumerate(rows, start=1):
        parsed = []
        for col, cell in enumerate(row.split(","), start=1):
            coeffs: dict[int, int] = {}
            s = cell.replace(" ", "")
            if not s:
                raise ParseError("empty cell", ln, col)
            for sign, term in re.findall(r"([+-]?)([^+-]+)", s):
                mt = _CELL_TERM.match(term)
                if not mt:
                    raise ParseError(f"cannot read term {term!r}", ln, col)
                if mt.group(4) is not None:
                    if int(mt.group(4)) % p:
                        raise ParseError(f"constant {term!r} has no symbol", ln, col)
                    continue
                c = int(mt.group(1)) if mt.group(1) else 1
                i = int(mt.group(3))
                coeffs[i] = (coeffs.get(i, 0) + (-c if sign == "-" else c)) % p
                top = max(top, i + 1)
            parsed.append(coeffs)
        cells.append(parsed)
    widths = {len(r) for r in cells}
    if len(widths) != 1:
        raise ParseError(f"rows have different lengths {sorted(widths)}")
    m = top if m is None else m
    if top > m:
        raise ParseError(f"symbol v{top - 1} exceeds m={m}")
    n, q = len(cells), widths.pop()
    T = np.zeros((m, n, q), dtype=np.int64)
    for j, row in enumerate(cells):
        for k, coeffs in enumerate(row):
            for i, c in coeffs.items():
                T[i, j, k] = c
    return T


def write_char_matrix(T) -> str:
    from .maxrank import char_matrix

    return "; ".join(", ".join(row) for row in char_matrix(T)) + "\n"


# ---------------------------------------------------------------------------
# structured dump
# ---------------------------------------------------------------------------


def cpd_to_json(cpd: Optional[Cpd], p: int, shape, H: Optional[int] = None, **extra) -> str:
    """JSON object with keys ``field``, ``H``, ``shape``, ``rank``, ``factors`` plus ``extra``.

    ``factors[d]`` is a row-major nested list (entries are coefficient lists
    over a border ring).
    """
    obj = {
        "field": p,
        "H": H,
        "shape": [int(n) for n in shape],
        "rank": None if cpd is None else cpd.rank,
        "factors": None if cpd is None else [A.tolist() for A in cpd.factors],
    }
    obj.update(extra)
    return json.dumps(obj, indent=2, sort_keys=True)
