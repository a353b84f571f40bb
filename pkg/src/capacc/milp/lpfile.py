"""CPLEX LP-format export/import and external solution files."""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ExportError, IngestionError
from .model import EQ, GE, LE, MilpModel

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")
_EXPONENT_LIKE = re.compile(r"^[eE][0-9]")
_WRAP = 8  # terms per output line


def _num(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return format(float(x), ".17g")


def _check_names(names, what: str) -> None:
    seen = set()
    for n in names:
        if not _NAME.match(n) or _EXPONENT_LIKE.match(n):
            raise ExportError(f"{what} name {n!r} is not valid in LP format")
        if n in seen:
            raise ExportError(f"{what} name collision: {n!r} appears more than once")
        seen.add(n)


def _terms(idx, vals, names) -> list[str]:
    out = []
    for j, v in zip(idx, vals):
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {_num(abs(v))} {names[j]}")
    return out


def _wrapped(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines = []
    for k in range(0, max(len(terms), 1), _WRAP):
        chunk = " ".join(terms[k:k + _WRAP])
        lines.append((f" {head} " if k == 0 else "   ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def write_lp(model: MilpModel) -> str:
    a = model.arrays()
    names = model.var_names
    _check_names(names, "variable")
    _check_names(model.row_names, "row")
    out = [f"\\ model {model.name}", "Minimize"]
    nz = np.nonzero(a.c)[0]
    obj_terms = _terms(nz, a.c[nz], names)
    if a.obj_constant:
        obj_terms.append(("- " if a.obj_constant < 0 else "+ ") + _num(abs(a.obj_constant)))
    out += _wrapped("obj:", obj_terms)
    out.append("Subject To")
    A = a.A.tocsr()
    sense_tok = {LE: "<=", GE: ">=", EQ: "="}
    rhs = model.rhs
    for r, rname in enumerate(model.row_names):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        idx, vals = A.indices[lo:hi], A.data[lo:hi]
        terms = _terms(idx, vals, names) if len(idx) else [f"+ 0 {names[0]}"]
        out += _wrapped(f"{rname}:", terms, f"{sense_tok[model.senses[r]]} {_num(rhs[r])}")
    out.append("Bounds")
    binaries, generals = [], []
    for j, n in enumerate(names):
        lb, ub = a.lb[j], a.ub[j]
        if a.integer[j] and lb == 0.0 and ub == 1.0:
            binaries.append(n)
        elif a.integer[j]:
            generals.append(n)
        if lb == -math.inf and ub == math.inf:
            out.append(f" {n} free")
        elif ub == math.inf:
            out.append(f" {n} >= {_num(lb)}")
        else:
            out.append(f" {_num(lb)} <= {n} <= {_num(ub)}")
    if binaries:
        out.append("Binaries")
        out += [" " + " ".join(binaries[k:k + _WRAP]) for k in range(0, len(binaries), _WRAP)]
    if generals:
        out.append("Generals")
        out += [" " + " ".join(generals[k:k + _WRAP]) for k in range(0, len(generals), _WRAP)]
    out.append("End")
    return "\n".join(out) + "\n"


def export_model(model: MilpModel, path: str | Path) -> Path:
    """Write ``model`` as an LP file; raises ExportError on bad names or I/O failure."""
    text = write_lp(model)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


# --------------------------------------------------------------------------
# import

_SECTIONS = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(
    r"\s*(<=|>=|=<|=>|=|<|>|:|[+-]|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[A-Za-z_][A-Za-z0-9_.\[\]]*)"
)


def _tokenize(text: str, path) -> list[str]:
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise IngestionError(f"LP parse error near {text[pos:pos + 20]!r}", path)
        toks.append(m.group(1))
        pos = m.end()
    return toks


def _is_num(tok: str) -> bool:
    return tok[0].isdigit() or tok[0] == "." or tok.lower() in ("inf", "infinity")


def _to_num(tok: str) -> float:
    return math.inf if tok.lower() in ("inf", "infinity") else float(tok)


_SENSES = ("<=", ">=", "=<", "=>", "=", "<", ">")


def _parse_expr(toks, k, path):
    """Linear expression starting at toks[k]; returns ({name: coef}, constant, next k)."""
    coefs: dict[str, float] = {}
    const = 0.0
    while k < len(toks) and toks[k] not in _SENSES:
        if k + 1 < len(toks) and toks[k + 1] == ":":
            break  # next row label
        sign = 1.0
        while k < len(toks) and toks[k] in ("+", "-"):
            sign = -sign if toks[k] == "-" else sign
            k += 1
        coef = None
        if k < len(toks) and _is_num(toks[k]):
            coef = _to_num(toks[k])
            k += 1
        nxt = toks[k] if k < len(toks) else None
        is_name = (
            nxt is not None and nxt not in _SENSES and nxt not in ("+", "-", ":") and not _is_num(nxt)
            and not (k + 1 < len(toks) and toks[k + 1] == ":")
        )
        if is_name:
            coefs[nxt] = coefs.get(nxt, 0.0) + sign * (1.0 if coef is None else coef)
            k += 1
        elif coef is not None:
            const += sign * coef
        else:
            raise IngestionError(f"LP parse error at token {nxt!r}", path)
    return coefs, const, k


def read_lp(path: str | Path) -> MilpModel:
    path = Path(path)
    sections: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": [], "gen": []}
    current = None
    name = path.stem
    for raw in path.read_text().splitlines():
        if raw.startswith("\\ model "):
            name = raw[len("\\ model "):].strip()
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS:
            current = _SECTIONS[key]
            if current == "end":
                break
            continue
        if current is None:
            raise IngestionError(f"content before any section: {line!r}", path)
        sections[current].append(line)

    order: list[str] = []
    info: dict[str, dict] = {}

    def var(n):
        if n not in info:
            info[n] = {"lb": 0.0, "ub": math.inf, "int": False, "cost": 0.0}
            order.append(n)
        return info[n]

    # objective
    toks = _tokenize(" ".join(sections["obj"]), path)
    if len(toks) >= 2 and toks[1] == ":":
        toks = toks[2:]
    coefs, obj_const, _ = _parse_expr(toks, 0, path)
    for n, c in coefs.items():
        var(n)["cost"] += c

    rows = []
    toks = _tokenize(" ".join(sections["rows"]), path)
    k, anon = 0, 0
    while k < len(toks):
        if k + 1 < len(toks) and toks[k + 1] == ":":
            rname = toks[k]
            k += 2
        else:
            anon += 1
            rname = f"R{anon}"
        coefs, const, k = _parse_expr(toks, k, path)
        if k >= len(toks):
            raise IngestionError(f"row {rname}: missing sense", path)
        op = toks[k]
        k += 1
        sign = 1.0
        while toks[k] in ("+", "-"):
            sign = -sign if toks[k] == "-" else sign
            k += 1
        rhs = sign * _to_num(toks[k]) - const
        k += 1
        sense = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}[op]
        for n in coefs:
            var(n)
        rows.append((rname, coefs, sense, rhs))

    bound_order = []
    for line in sections["bounds"]:
        t = _tokenize(line, path)
        low = [x.lower() for x in t]

        def val(i):
            s = -1.0 if t[i] == "-" else 1.0
            if t[i] in ("+", "-"):
                i += 1
            return s * _to_num(t[i]), i + 1

        if len(t) == 2 and low[1] == "free":
            v = var(t[0])
            v["lb"], v["ub"] = -math.inf, math.inf
            bound_order.append(t[0])
            continue
        if not _is_num(t[0]) and t[0] not in ("+", "-"):
            n, op = t[0], t[1]
            x, _ = val(2)
            v = var(n)
            if op in (">=", "=>"):
                v["lb"] = x
            elif op in ("<=", "=<"):
                v["ub"] = x
            else:
                v["lb"] = v["ub"] = x
            bound_order.append(n)
            continue
        lo, i = val(0)
        n = t[i + 1]
        v = var(n)
        v["lb"] = lo
        if i + 2 < len(t):
            hi, _ = val(i + 3)
            v["ub"] = hi
        bound_order.append(n)
    for line in sections["bin"]:
        for n in line.split():
            v = var(n)
            v["int"], v["lb"], v["ub"] = True, max(v["lb"], 0.0), min(v["ub"], 1.0)
    for line in sections["gen"]:
        for n in line.split():
            var(n)["int"] = True

    if set(bound_order) == set(order) and len(bound_order) == len(order):
        order = bound_order
    model = MilpModel(name)
    pos = {}
    for n in order:
        v = info[n]
        pos[n] = model.add_var(n, v["lb"], v["ub"], v["int"], v["cost"])
    model.obj_constant = obj_const
    for rname, coefs, sense, rhs in rows:
        model.add_constraint(rname, [pos[n] for n in coefs], list(coefs.values()), sense, rhs)
    return model


# --------------------------------------------------------------------------
# external solutions


def write_solution(model: MilpModel, x, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable_name", "value"])
        for n, v in zip(model.var_names, x):
            w.writerow([n, _num(v)])


def read_solution(model: MilpModel, path: str | Path) -> np.ndarray:
    idx = {n: j for j, n in enumerate(model.var_names)}
    x = np.full(model.n_vars, np.nan)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip() == "variable_name"):
                continue
            n = row[0].strip()
            if n not in idx:
                raise IngestionError(f"unknown variable {n!r}", path, lineno)
            try:
                x[idx[n]] = float(row[1])
            except (ValueError, IndexError):
                raise IngestionError(f"bad value {row!r}", path, lineno) from None
    missing = np.isnan(x)
    if missing.any():
        raise IngestionError(f"{int(missing.sum())} variables missing, e.g. {model.var_names[int(np.argmax(missing))]}", path)
    return x


@dataclass
class ExportHandle:
    """Returned by export-mode solves; re-imports a solution computed elsewhere."""

    model: MilpModel
    path: str | Path

    def load_solution(self, solution_path: str | Path) -> np.ndarray:
        return read_solution(self.model, solution_path)
