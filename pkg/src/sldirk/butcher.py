"""Stiffly accurate DIRK Butcher tableaus and their Shu-Osher rewriting.

A diagonally implicit Runge-Kutta (DIRK) method is stored as the usual
(A, b, c) tableau with lower-triangular A and positive diagonal.  For the
semi-Lagrangian update and the order-condition recursions it is convenient
to rewrite the stage equations in Shu-Osher form,

    stage_k = (1 - sum_j w_kj) * state_n + sum_j w_kj * stage_j
              + dt * a_kk * RHS(stage_k),

where the convex-combination coefficients w_kj (``b_coeffs`` below) follow
from A by a backward recursion over j at each stage k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

#: absolute tolerance for tableau consistency checks (all data is float64)
VALIDATION_TOL = 1e-12


@dataclass(frozen=True)
class ButcherTableau:
    """DIRK coefficients (A, c, b) with a stiff-accuracy flag.

    Immutable after construction; the arrays are marked read-only so a
    tableau can be shared freely across threads and worker processes.
    """

    name: str
    A: np.ndarray
    c: np.ndarray
    b_weights: np.ndarray
    stiffly_accurate: bool = True
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b_weights, dtype=float).ravel()
        for arr, attr in ((A, "A"), (c, "c"), (b, "b_weights")):
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def s(self) -> int:
        """Stage count."""
        return len(self.c)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.A)

    @classmethod
    def from_matrix(cls, name, A, stiffly_accurate=True, notes=()):
        """Build a tableau from A alone: c = row sums, b = last row."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(name=name, A=A, c=A.sum(axis=1), b_weights=A[-1].copy(),
                   stiffly_accurate=stiffly_accurate, notes=tuple(notes))


@dataclass(frozen=True)
class ShuOsherForm:
    """Shu-Osher coefficients of a DIRK tableau.

    ``b_coeffs`` is strictly lower triangular: entry (k, j) multiplies
    stage j in the update of stage k (0-based indices, k > j).  ``diag``
    carries the implicit weights a_kk and ``c`` the abscissae.
    """

    name: str
    b_coeffs: np.ndarray
    diag: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for attr in ("b_coeffs", "diag", "c"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def s(self) -> int:
        return len(self.c)


def validate_tableau(t: ButcherTableau, tol: float = VALIDATION_TOL) -> list[str]:
    """Check the structural invariants of a DIRK tableau.

    Returns a list of human-readable violations; an empty list means the
    tableau is accepted.  Nothing is raised: callers decide severity.
    """
    report = []
    A, c, b = t.A, t.c, t.b_weights
    s = t.s
    if A.shape != (s, s):
        report.append(f"A has shape {A.shape}, expected ({s}, {s})")
        return report
    if len(b) != s:
        report.append(f"b has length {len(b)}, expected {s}")
        return report
    upper = A[np.triu_indices(s, k=1)]
    if upper.size and np.max(np.abs(upper)) > 0.0:
        report.append("A is not lower triangular")
    diag = np.diag(A)
    if np.any(diag <= 0.0):
        bad = np.nonzero(diag <= 0.0)[0] + 1
        report.append(f"nonpositive diagonal at stage(s) {list(bad)}")
    row_err = np.max(np.abs(c - A.sum(axis=1)))
    if row_err > tol:
        report.append(f"row sums disagree with c (max deviation {row_err:.3e})")
    if t.stiffly_accurate:
        if abs(c[-1] - 1.0) > tol:
            report.append(f"flagged stiffly accurate but c_s = {c[-1]!r} != 1")
        sa_err = np.max(np.abs(A[-1] - b))
        if sa_err > tol:
            report.append(f"flagged stiffly accurate but last row differs from b "
                          f"(max deviation {sa_err:.3e})")
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(c)) or not np.all(np.isfinite(b)):
        report.append("non-finite entries")
    return report


def to_shu_osher(t: ButcherTableau) -> ShuOsherForm:
    """Convert a validated DIRK tableau to Shu-Osher form.

    For each stage k the coefficients are filled from j = k-1 down to 0:

        w_kj = a_kj / a_jj - sum_{l=j+1}^{k-1} a_kl * w_lj / a_ll

    Raises ValueError on a nonpositive diagonal (the rewrite divides by it).
    """
    A = t.A
    s = t.s
    diag = np.diag(A)
    if np.any(diag <= 0.0):
        raise ValueError(f"tableau {t.name!r}: Shu-Osher form needs a positive diagonal")
    w = np.zeros((s, s))
    for k in range(1, s):
        for j in range(k - 1, -1, -1):
            acc = A[k, j] / A[j, j]
            for l in range(j + 1, k):
                acc -= A[k, l] * w[l, j] / A[l, l]
            w[k, j] = acc
    return ShuOsherForm(name=t.name, b_coeffs=w, diag=diag.copy(), c=t.c.copy())


# ---------------------------------------------------------------------------
# tableau catalog
# ---------------------------------------------------------------------------

def _three_stage_dirk3_gamma() -> float:
    # real root of 6 g^3 - 18 g^2 + 9 g - 1 near 0.4359; solved at startup
    # rather than trusting a 15-digit literal, since downstream limit
    # coefficients are sensitive at the 1e-6 level.
    poly = lambda g: ((6.0 * g - 18.0) * g + 9.0) * g - 1.0
    return brentq(poly, 0.4, 0.5, xtol=1e-16, rtol=8.881784197001252e-16)


def _build_catalog() -> dict[str, ButcherTableau]:
    cat: dict[str, ButcherTableau] = {}

    def add(name, A, notes=()):
        cat[name] = ButcherTableau.from_matrix(name, A, notes=notes)

    # implicit (backward) Euler
    add("BE", [[1.0]], notes=("implicit Euler",))

    # classical 2-stage second-order SDIRK, nu = 1 - sqrt(2)/2
    nu = 1.0 - np.sqrt(2.0) / 2.0
    add("DIRK2", [[nu, 0.0],
                  [1.0 - nu, nu]],
        notes=("2-stage second order, diagonal 1 - sqrt(2)/2",))

    # classical 3-stage third-order DIRK; third order on the distribution
    # but only second order in the relaxation limit (the motivating case)
    g = _three_stage_dirk3_gamma()
    beta1 = -1.5 * g * g + 4.0 * g - 0.25
    beta2 = 1.5 * g * g - 5.0 * g + 1.25
    add("DIRK3-B2", [[g, 0.0, 0.0],
                     [(1.0 - g) / 2.0, g, 0.0],
                     [beta1, beta2, g]],
        notes=("3-stage third order; second order in the stiff limit",))

    # eight 4-stage third-order tableaus that additionally keep third order
    # in the relaxation limit
    add("DIRK3-B3", [
        [1.482285978970554, 0.0, 0.0, 0.0],
        [-0.6416366731243188, 1.482285978970554, 0.0, 0.0],
        [0.849139645385794, -1.961651886907531, 1.482285978970554, 0.0],
        [-0.1539440520308502, -1.343634476018696, 1.015292549078992, 1.482285978970554]])
    add("DIRK3-B4", [
        [0.1376586577601238, 0.0, 0.0, 0.0],
        [0.4224699960590905, 0.1376586577601238, 0.0, 0.0],
        [0.3693098698936377, 0.1203368321096427, 0.1376586577601238, 0.0],
        [0.330756291090243, 0.2479472066914047, 0.2836378444582285, 0.1376586577601238]])
    add("DIRK3-B5", [
        [4.025563222205342, 0.0, 0.0, 0.0],
        [-1.13430013749107, 4.025563222205342, 0.0, 0.0],
        [0.8450375691764959, -2.998987699483981, 4.025563222205342, 0.0],
        [-1.33950660036402, 4.925563641076701, -6.611620262918024, 4.025563222205342]])
    add("DIRK3-B6", [
        [1.0 / 2.0, 0.0, 0.0, 0.0],
        [-1.0 / 4.0, 1.0 / 2.0, 0.0, 0.0],
        [-1.0, 2.0, 1.0 / 2.0, 0.0],
        [-1.0 / 12.0, 2.0 / 3.0, -1.0 / 12.0, 1.0 / 2.0]],
        notes=("exact rational entries",))
    add("DIRK3-B7", [
        [0.153198102889014, 0.0, 0.0, 0.0],
        [0.448032922908699, 0.153198102889014, 0.0, 0.0],
        [0.0, 0.021595742145288, 0.153198102889014, 0.0],
        [0.0, 0.466155735240408, 0.380646161870577, 0.153198102889014]])
    add("DIRK3-B8", [
        [0.193031472980198, 0.0, 0.0, 0.0],
        [-0.105824758791290, 0.193031472980198, 0.0, 0.0],
        [0.0, 0.286826200347934, 0.193031472980198, 0.0],
        [0.0, 0.204409312996206, 0.602559214023597, 0.193031472980198]])
    add("DIRK3-B9", [
        [0.127224858518235, 0.0, 0.0, 0.0],
        [0.204378631032151, 0.127224858518235, 0.0, 0.0],
        [0.0, 0.862399381468212, 0.127224858518235, 0.0],
        [0.0, 0.746092420734223, 0.126682720747542, 0.127224858518235]])
    add("DIRK3-B10", [
        [1.0 / 4.0, 0.0, 0.0, 0.0],
        [1.0 / 7.0, 1.0 / 4.0, 0.0, 0.0],
        [61.0 / 144.0, -49.0 / 144.0, 1.0 / 4.0, 0.0],
        [0.0, 0.0, 3.0 / 4.0, 1.0 / 4.0]],
        notes=("exact rational entries; default third-order choice",))
    return cat


_CATALOG: dict[str, ButcherTableau] | None = None


def catalog() -> dict[str, ButcherTableau]:
    """Named map of the built-in tableaus (BE, DIRK2, DIRK3-B2 .. DIRK3-B10)."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return dict(_CATALOG)


def get_tableau(name: str) -> ButcherTableau:
    cat = catalog()
    try:
        return cat[name]
    except KeyError:
        known = ", ".join(sorted(cat))
        raise KeyError(f"unknown tableau {name!r}; known names: {known}") from None


# ---------------------------------------------------------------------------
# plain-text serialization (CLI interchange format)
# ---------------------------------------------------------------------------

def tableau_to_text(t: ButcherTableau) -> str:
    """Serialize as `key = value` lines; A is row-major on one line."""
    fmt = lambda vals: " ".join(repr(float(v)) for v in vals)
    lines = [
        f"name = {t.name}",
        f"s = {t.s}",
        f"A = {fmt(t.A.ravel())}",
        f"c = {fmt(t.c)}",
        f"b = {fmt(t.b_weights)}",
        f"stiffly_accurate = {int(t.stiffly_accurate)}",
    ]
    return "\n".join(lines) + "\n"


def tableau_from_text(text: str) -> ButcherTableau:
    """Parse the `key = value` format written by :func:`tableau_to_text`."""
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed tableau line (expected 'key = value'): {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    missing = {"s", "A", "c", "b"} - entries.keys()
    if missing:
        raise ValueError(f"tableau file missing keys: {sorted(missing)}")
    s = int(entries["s"])
    A = np.array([float(v) for v in entries["A"].split()], dtype=float)
    if A.size != s * s:
        raise ValueError(f"A has {A.size} entries, expected {s * s}")
    c = np.array([float(v) for v in entries["c"].split()], dtype=float)
    b = np.array([float(v) for v in entries["b"].split()], dtype=float)
    if len(c) != s or len(b) != s:
        raise ValueError(f"c and b must each have {s} entries")
    sa = bool(int(entries.get("stiffly_accurate", "1")))
    return ButcherTableau(name=entries.get("name", "custom"), A=A.reshape(s, s),
                          c=c, b_weights=b, stiffly_accurate=sa)


def load_tableau(path) -> ButcherTableau:
    return tableau_from_text(Path(path).read_text())


def resolve_tableau(name_or_path: str) -> ButcherTableau:
    """Look up a catalog name, falling back to reading a tableau file."""
    cat = catalog()
    if name_or_path in cat:
        return cat[name_or_path]
    p = Path(name_or_path)
    if p.exists():
        return load_tableau(p)
    known = ", ".join(sorted(cat))
    raise KeyError(f"{name_or_path!r} is neither a catalog tableau ({known}) "
                   f"nor an existing file")
