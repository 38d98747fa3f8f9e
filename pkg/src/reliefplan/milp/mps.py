"""Free-format MPS writer and reader.

The writer is canonical: rows in model order, columns in model order, each
column's entries in row order (objective first), numbers in ``repr`` form.
Runs of integer columns are wrapped in ``MARKER INTORG/INTEND`` pairs and
integer columns always get explicit bounds (``BV`` for 0/1 columns), since
solvers disagree on default integer bounds.  A nonzero objective constant is
written as the right-hand side of the objective row, negated, which is the
usual convention.

Names that cannot appear in a free-format file (whitespace, leading ``$``,
longer than :data:`MAX_NAME`, or clashing with the objective row) are
replaced by ``_v<j>`` / ``_r<i>``; the :class:`NameMap` returned by the
writer translates back.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path

from .model import INF, MilpModel, Sense, VarType

MAX_NAME = 255
OBJ_ROW = "OBJ"
_VALID = re.compile(r"^[A-Za-z0-9_\[\]().,:;+\-<>=!@#%&*/|{}~^?'\"]+$")


class MpsError(ValueError):
    pass


@dataclasses.dataclass
class NameMap:
    """File names of variables and rows, and the reverse lookup."""

    var_names: list[str]
    row_names: list[str]

    def __post_init__(self) -> None:
        self.var_lookup = {name: j for j, name in enumerate(self.var_names)}
        self.row_lookup = {name: i for i, name in enumerate(self.row_names)}

    def original_var(self, model: MilpModel, file_name: str) -> str:
        j = self.var_lookup.get(file_name)
        return file_name if j is None else model.var_names[j]


def _valid(name: str) -> bool:
    return 0 < len(name) <= MAX_NAME and bool(_VALID.match(name)) and name != OBJ_ROW and not name.startswith("$")


def _mangle(names: list[str], prefix: str) -> list[str]:
    out = [n if _valid(n) else f"_{prefix}{i}" for i, n in enumerate(names)]
    seen: set[str] = set()
    for i, n in enumerate(out):
        if n in seen:
            k = 0
            while f"_{prefix}{i}_{k}" in seen:
                k += 1
            n = out[i] = f"_{prefix}{i}_{k}"
        seen.add(n)
    return out


def name_map(model: MilpModel) -> NameMap:
    return NameMap(_mangle(model.var_names, "v"), _mangle(model.constr_names, "r"))


def _num(v: float) -> str:
    return repr(float(v))


def mps_text(model: MilpModel) -> tuple[str, NameMap]:
    names = name_map(model)
    a = model.arrays()
    A = a.A.tocsc()
    out = [f"NAME {model.name if _valid(model.name) else 'model'}", "ROWS", f" N  {OBJ_ROW}"]
    code = {Sense.LE: "L", Sense.EQ: "E", Sense.GE: "G"}
    for i, s in enumerate(model.senses):
        out.append(f" {code[s]}  {names.row_names[i]}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j in range(model.num_vars):
        is_int = model.var_types[j] is not VarType.CONTINUOUS
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            out.append(f"    MARKER{marker} 'MARKER' {tag}")
            marker += not is_int
            in_int = is_int
        col = names.var_names[j]
        entries = []
        if a.c[j] != 0:
            entries.append((OBJ_ROW, a.c[j]))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for i, v in sorted(zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist())):
            entries.append((names.row_names[i], v))
        if not entries:
            # keep the column declared
            entries.append((OBJ_ROW, 0.0))
        for r, v in entries:
            out.append(f"    {col} {r} {_num(v)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if a.c0 != 0:
        out.append(f"    RHS {OBJ_ROW} {_num(-a.c0)}")
    for i, r in enumerate(model.rhs):
        if r != 0:
            out.append(f"    RHS {names.row_names[i]} {_num(r)}")
    out.append("BOUNDS")
    for j in range(model.num_vars):
        col = names.var_names[j]
        lb, ub = model.bounds(j)
        vt = model.var_types[j]
        if vt is VarType.BINARY and lb == 0 and ub == 1:
            out.append(f" BV BND {col}")
        elif lb == ub:
            out.append(f" FX BND {col} {_num(lb)}")
        elif lb == -INF and ub == INF:
            out.append(f" FR BND {col}")
        else:
            if lb == -INF:
                out.append(f" MI BND {col}")
            elif lb != 0 or vt is not VarType.CONTINUOUS:
                out.append(f" LO BND {col} {_num(lb)}")
            if ub != INF:
                out.append(f" UP BND {col} {_num(ub)}")
            elif vt is not VarType.CONTINUOUS:
                out.append(f" PL BND {col}")
    out.append("ENDATA")
    return "\n".join(out) + "\n", names


def write_mps(model: MilpModel, path: str | Path) -> NameMap:
    """Write ``model`` to ``path``; returns the name map used."""
    text, names = mps_text(model)
    Path(path).write_text(text)
    return names


def _float(tok: str, line_no: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MpsError(f"line {line_no}: expected a number, got {tok!r}") from None


def read_mps(path: str | Path) -> MilpModel:
    """Read a free-format MPS file (the subset produced by :func:`write_mps` plus common variants)."""
    text = Path(path).read_text()
    model = MilpModel()
    section = None
    obj_row = None
    row_sense: dict[str, Sense] = {}
    row_order: list[str] = []
    coefs: dict[str, list[tuple[str, float]]] = {}
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    obj: dict[str, float] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    c0 = 0.0
    integer = False
    sense_of = {"L": Sense.LE, "E": Sense.EQ, "G": Sense.GE}
    for line_no, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            section = tok[0].upper()
            if section == "NAME":
                model.name = tok[1] if len(tok) > 1 else "model"
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "OBJSENSE"):
                raise MpsError(f"line {line_no}: unknown section {section!r}")
            continue
        if section == "ROWS":
            kind, name = tok[0].upper(), tok[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = name
            elif kind in sense_of:
                row_sense[name] = sense_of[kind]
                row_order.append(name)
            else:
                raise MpsError(f"line {line_no}: bad row type {kind!r}")
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'\"").upper() == "MARKER":
                integer = tok[2].strip("'\"").upper() == "INTORG"
                continue
            col = tok[0]
            if col not in col_int:
                col_order.append(col)
                col_int[col] = integer
                coefs[col] = []
            pairs = tok[1:]
            if len(pairs) % 2:
                raise MpsError(f"line {line_no}: unpaired entry")
            for r, v in zip(pairs[::2], pairs[1::2]):
                val = _float(v, line_no)
                if r == obj_row:
                    obj[col] = obj.get(col, 0.0) + val
                elif r in row_sense:
                    coefs[col].append((r, val))
                else:
                    raise MpsError(f"line {line_no}: unknown row {r!r}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 else tok
            for r, v in zip(pairs[::2], pairs[1::2]):
                val = _float(v, line_no)
                if r == obj_row:
                    c0 = -val
                elif r in row_sense:
                    rhs[r] = val
                else:
                    raise MpsError(f"line {line_no}: unknown row {r!r}")
        elif section == "BOUNDS":
            kind = tok[0].upper()
            col = tok[2] if len(tok) >= 3 else tok[1]
            if col not in col_int:
                raise MpsError(f"line {line_no}: bound on unknown column {col!r}")
            b = bounds.setdefault(col, [0.0, INF])
            val = _float(tok[3], line_no) if len(tok) >= 4 else None
            if kind == "LO":
                b[0] = val
            elif kind == "UP":
                if val < 0 and b[0] == 0:
                    b[0] = -INF
                b[1] = val
            elif kind == "FX":
                b[0] = b[1] = val
            elif kind == "FR":
                b[0], b[1] = -INF, INF
            elif kind == "MI":
                b[0] = -INF
            elif kind == "PL":
                b[1] = INF
            elif kind == "BV":
                b[0], b[1] = 0.0, 1.0
                col_int[col] = True
            elif kind == "LI":
                b[0] = val
                col_int[col] = True
            elif kind == "UI":
                b[1] = val
                col_int[col] = True
            else:
                raise MpsError(f"line {line_no}: bad bound type {kind!r}")
        elif section in ("RANGES", "OBJSENSE"):
            raise MpsError(f"line {line_no}: section {section} is not supported")
    idx = {}
    for col in col_order:
        lb, ub = bounds.get(col, [0.0, INF])
        vt = VarType.CONTINUOUS
        if col_int[col]:
            vt = VarType.BINARY if (lb, ub) == (0.0, 1.0) else VarType.INTEGER
        idx[col] = model.add_var(col, lb, ub, vt, obj.get(col, 0.0))
    rows: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    for col in col_order:
        for r, v in coefs[col]:
            rows[r].append((idx[col], v))
    for r in row_order:
        model.add_constr(rows[r], row_sense[r], rhs.get(r, 0.0), name=r)
    model.obj_constant = c0
    return model


__all__ = ["MAX_NAME", "MpsError", "NameMap", "mps_text", "name_map", "read_mps", "write_mps"]
