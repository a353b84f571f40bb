"""Solver-independent MILP container."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="


@dataclass
class MilpArrays:
    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray  # bool mask
    obj_constant: float


class MilpModel:
    """Variables with bounds/integrality, linear rows, linear objective (minimise).

    Names are free-form; uniqueness is only enforced on export.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._int: list[np.ndarray] = []
        self._cost: list[np.ndarray] = []
        self.obj_constant = 0.0
        self.row_names: list[str] = []
        self.senses: list[str] = []
        self._rhs: list[float] = []
        self._ri: list[np.ndarray] = []
        self._ci: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self._nrows = 0
        self._cache: MilpArrays | None = None

    # -- variables ---------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return self._nrows

    def add_vars(self, names, lb=0.0, ub=np.inf, binary=False, cost=0.0) -> np.ndarray:
        names = list(names)
        n = len(names)
        start = self.n_vars
        self.var_names.extend(names)
        lb = np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy()
        if binary:
            lb = np.maximum(lb, 0.0)
            ub = np.minimum(ub, 1.0)
        self._lb.append(lb)
        self._ub.append(ub)
        self._int.append(np.full(n, bool(binary)))
        self._cost.append(np.broadcast_to(np.asarray(cost, dtype=float), (n,)).copy())
        self._cache = None
        return np.arange(start, start + n)

    def add_var(self, name: str, lb=0.0, ub=np.inf, binary=False, cost=0.0) -> int:
        return int(self.add_vars([name], lb, ub, binary, cost)[0])

    # -- rows --------------------------------------------------------------

    def add_constraint(self, name: str, idx, coef, sense: str, rhs: float) -> int:
        idx = np.asarray(idx, dtype=np.int64)
        coef = np.broadcast_to(np.asarray(coef, dtype=float), idx.shape)
        r = self._nrows
        self._ri.append(np.full(idx.shape, r, dtype=np.int64))
        self._ci.append(idx)
        self._v.append(np.array(coef))
        self.row_names.append(name)
        self.senses.append(sense)
        self._rhs.append(float(rhs))
        self._nrows += 1
        self._cache = None
        return r

    def add_rows(self, names, rows, cols, vals, senses, rhs) -> np.ndarray:
        """Bulk-add rows from COO triplets; ``rows`` are 0-based within this batch."""
        names = list(names)
        k = len(names)
        base = self._nrows
        self._ri.append(np.asarray(rows, dtype=np.int64) + base)
        self._ci.append(np.asarray(cols, dtype=np.int64))
        self._v.append(np.asarray(vals, dtype=float))
        self.row_names.extend(names)
        if isinstance(senses, str):
            self.senses.extend([senses] * k)
        else:
            self.senses.extend(senses)
        self._rhs.extend(np.broadcast_to(np.asarray(rhs, dtype=float), (k,)).tolist())
        self._nrows += k
        self._cache = None
        return np.arange(base, base + k)

    # -- views -------------------------------------------------------------

    def arrays(self) -> MilpArrays:
        if self._cache is not None:
            return self._cache
        n, m = self.n_vars, self._nrows
        cat = lambda parts, dt=float: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt)
        A = sp.csr_matrix(
            (cat(self._v), (cat(self._ri, np.int64), cat(self._ci, np.int64))), shape=(m, n)
        )
        A.sum_duplicates()
        rhs = np.asarray(self._rhs, dtype=float)
        senses = np.asarray(self.senses)
        lo = np.where(senses == LE, -np.inf, rhs)
        hi = np.where(senses == GE, np.inf, rhs)
        self._cache = MilpArrays(
            c=cat(self._cost),
            A=A,
            row_lo=lo,
            row_hi=hi,
            lb=cat(self._lb),
            ub=cat(self._ub),
            integer=cat(self._int, bool),
            obj_constant=self.obj_constant,
        )
        return self._cache

    @property
    def lb(self) -> np.ndarray:
        return self.arrays().lb

    @property
    def ub(self) -> np.ndarray:
        return self.arrays().ub

    @property
    def integer(self) -> np.ndarray:
        return self.arrays().integer

    @property
    def objective(self) -> np.ndarray:
        return self.arrays().c

    @property
    def rhs(self) -> np.ndarray:
        return np.asarray(self._rhs, dtype=float)

    def set_bounds(self, idx, lb=None, ub=None) -> None:
        a = self.arrays()
        if lb is not None:
            a.lb[idx] = lb
        if ub is not None:
            a.ub[idx] = ub
        # keep the block lists consistent with the cached arrays
        self._lb, self._ub = [a.lb.copy()], [a.ub.copy()]

    def row_activity(self, x) -> np.ndarray:
        return self.arrays().A @ np.asarray(x, dtype=float)

    def evaluate(self, x) -> float:
        a = self.arrays()
        return float(a.c @ np.asarray(x, dtype=float) + a.obj_constant)

    def violations(self, x, tol: float = 1e-6) -> list[str]:
        """Rows/bounds/integrality violated by ``x`` (scaled tolerance)."""
        a = self.arrays()
        x = np.asarray(x, dtype=float)
        act = a.A @ x
        scale = 1.0 + np.abs(a.A).max(axis=1).toarray().ravel() if a.A.shape[0] else np.ones(0)
        out = []
        bad = np.where((act < a.row_lo - tol * scale) | (act > a.row_hi + tol * scale))[0]
        out.extend(f"row {self.row_names[r]}: activity {act[r]:.9g} outside [{a.row_lo[r]:.9g}, {a.row_hi[r]:.9g}]" for r in bad)
        badv = np.where((x < a.lb - tol) | (x > a.ub + tol))[0]
        out.extend(f"var {self.var_names[j]}: {x[j]:.9g} outside bounds" for j in badv)
        badi = np.where(a.integer & (np.abs(x - np.round(x)) > tol))[0]
        out.extend(f"var {self.var_names[j]}: {x[j]:.9g} not integral" for j in badi)
        return out

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        a = self.arrays()
        m.var_names = list(self.var_names)
        m._lb, m._ub, m._int, m._cost = [a.lb.copy()], [a.ub.copy()], [a.integer.copy()], [a.c.copy()]
        m.obj_constant = self.obj_constant
        coo = a.A.tocoo()
        m._ri, m._ci, m._v = [coo.row.astype(np.int64)], [coo.col.astype(np.int64)], [coo.data.copy()]
        m.row_names = list(self.row_names)
        m.senses = list(self.senses)
        m._rhs = list(self._rhs)
        m._nrows = self._nrows
        return m

    def __repr__(self) -> str:
        n_int = int(self.integer.sum()) if self.n_vars else 0
        return f"MilpModel({self.name!r}, vars={self.n_vars}, int={n_int}, rows={self.n_rows})"
