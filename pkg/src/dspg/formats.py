"""File formats: coordinate matrix files, instance manifests, reports.

Matrix files hold one symmetric matrix in upper-triangle coordinate form::

    %%SymCoord n nnz
    i j v

with 1-based indices ``i <= j``, unique positions, decimal reals written with
17 significant digits (exact float64 round-trip) and unlisted entries equal to
zero.  An instance manifest is a JSON document::

    {
      "schema_version": 1,
      "n": 4,
      "mu": 1.0,
      "rho": {"uniform": 0.1}            # or {"matrix": "rho.mtx"}
      "c_path": "C.mtx",
      "constraints": {"zero_pattern": [[1, 3], [2, 4]]}
                                          # or {"general": [{"matrix": "A1.mtx", "b": 0.0}]}
      "metadata": {...}                   # free-form provenance
    }

Relative paths resolve against the manifest's directory.  Zero-pattern pairs
are 1-based with ``i < j`` and become single-entry equality constraints
``X_ij = 0``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import ConstraintMap, ProblemInstance, build_instance

SCHEMA_VERSION = 1
MATRIX_TAG = "%%SymCoord"


class ParseError(Exception):
    """A file failed to parse; carries path and 1-based line number."""

    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = str(path)
        self.line = line


class ValidationError(Exception):
    """Structurally valid input violating an instance invariant."""


def write_matrix(path, a: np.ndarray) -> None:
    """Write the upper triangle of a symmetric matrix in coordinate form."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    iu, ju = np.triu_indices(n)
    vals = a[iu, ju]
    keep = vals != 0.0
    iu, ju, vals = iu[keep], ju[keep], vals[keep]
    lines = [f"{MATRIX_TAG} {n} {iu.size}"]
    lines.extend(f"{i + 1} {j + 1} {v:.17g}" for i, j, v in zip(iu, ju, vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_entries(path):
    """Parse a coordinate matrix file into ``(n, [(i, j, v), ...])``, 0-based."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, 0, f"cannot read file: {exc.strerror}") from exc
    lines = text.splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file, expected header")
    head = lines[0].split()
    if len(head) != 3 or head[0] != MATRIX_TAG:
        raise ParseError(path, 1, f"expected header '{MATRIX_TAG} n nnz'")
    try:
        n, nnz = int(head[1]), int(head[2])
    except ValueError:
        raise ParseError(path, 1, "header dimensions must be integers") from None
    if n < 1 or nnz < 0:
        raise ParseError(path, 1, f"bad header dimensions n={n} nnz={nnz}")
    entries = []
    seen = set()
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tok = line.split()
        if len(tok) != 3:
            raise ParseError(path, no, f"expected 'i j v', got {len(tok)} fields")
        try:
            i, j = int(tok[0]), int(tok[1])
            v = float(tok[2])
        except ValueError:
            raise ParseError(path, no, f"cannot parse entry {line!r}") from None
        if not (1 <= i <= j <= n):
            raise ParseError(path, no, f"indices ({i},{j}) outside 1 <= i <= j <= {n}")
        if not np.isfinite(v):
            raise ParseError(path, no, f"non-finite value at ({i},{j})")
        if (i, j) in seen:
            raise ParseError(path, no, f"duplicate coordinate ({i},{j})")
        seen.add((i, j))
        entries.append((i - 1, j - 1, v))
        if len(entries) > nnz:
            raise ParseError(path, no, f"more than the declared {nnz} entries")
    if len(entries) != nnz:
        raise ParseError(path, len(lines), f"declared {nnz} entries but found {len(entries)}")
    return n, entries


def read_matrix(path) -> np.ndarray:
    """Read a coordinate matrix file into a dense symmetric array."""
    n, entries = read_matrix_entries(path)
    a = np.zeros((n, n))
    for i, j, v in entries:
        a[i, j] = v
        a[j, i] = v
    return a


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def read_instance(manifest_path) -> ProblemInstance:
    """Load and fully validate a problem instance from a manifest."""
    manifest_path = Path(manifest_path)
    try:
        raw = manifest_path.read_text()
    except OSError as exc:
        raise ParseError(manifest_path, 0, f"cannot read file: {exc.strerror}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(manifest_path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    base = manifest_path.parent
    _require(isinstance(doc, dict), "manifest must be a JSON object")
    _require(doc.get("schema_version") == SCHEMA_VERSION,
             f"unsupported schema_version {doc.get('schema_version')!r}")
    n = doc.get("n")
    _require(isinstance(n, int) and n >= 1, f"n must be a positive integer, got {n!r}")
    mu = doc.get("mu")
    _require(isinstance(mu, (int, float)) and np.isfinite(mu) and mu > 0,
             f"mu must be a positive real, got {mu!r}")
    _require(isinstance(doc.get("c_path"), str), "c_path must be a path string")
    C = read_matrix(base / doc["c_path"])
    _require(C.shape[0] == n, f"C has dimension {C.shape[0]}, manifest says {n}")

    rho_spec = doc.get("rho")
    _require(isinstance(rho_spec, dict) and len(rho_spec) == 1
             and next(iter(rho_spec)) in ("uniform", "matrix"),
             "rho must be {'uniform': value} or {'matrix': path}")
    if "uniform" in rho_spec:
        val = rho_spec["uniform"]
        _require(isinstance(val, (int, float)) and np.isfinite(val) and val >= 0,
                 f"uniform rho must be >= 0, got {val!r}")
        rho = np.full((n, n), float(val))
    else:
        rho = read_matrix(base / rho_spec["matrix"])
        _require(rho.shape[0] == n, f"rho has dimension {rho.shape[0]}, manifest says {n}")

    constraints = None
    zero_pattern = None
    con_spec = doc.get("constraints")
    if con_spec is not None:
        _require(isinstance(con_spec, dict) and len(con_spec) == 1
                 and next(iter(con_spec)) in ("zero_pattern", "general"),
                 "constraints must be {'zero_pattern': ...} or {'general': ...}")
        if "zero_pattern" in con_spec:
            pairs = con_spec["zero_pattern"]
            _require(isinstance(pairs, list), "zero_pattern must be a list of [i, j] pairs")
            seen = set()
            zero_pattern = []
            for p in pairs:
                _require(isinstance(p, list) and len(p) == 2
                         and all(isinstance(x, int) for x in p),
                         f"zero_pattern entry {p!r} is not an [i, j] integer pair")
                i, j = p
                _require(1 <= i < j <= n, f"zero_pattern pair ({i},{j}) needs 1 <= i < j <= {n}")
                _require((i, j) not in seen, f"duplicate zero_pattern pair ({i},{j})")
                seen.add((i, j))
                zero_pattern.append((i - 1, j - 1))
            zero_pattern = tuple(zero_pattern)
        else:
            items = con_spec["general"]
            _require(isinstance(items, list) and items, "general constraints must be a nonempty list")
            coeffs, b = [], []
            for item in items:
                _require(isinstance(item, dict) and isinstance(item.get("matrix"), str)
                         and isinstance(item.get("b"), (int, float)),
                         f"general constraint {item!r} needs 'matrix' path and numeric 'b'")
                cn, entries = read_matrix_entries(base / item["matrix"])
                _require(cn == n, f"constraint matrix {item['matrix']} has dimension {cn}, manifest says {n}")
                coeffs.append(entries)
                b.append(float(item["b"]))
            constraints = ConstraintMap(n, coeffs, b)

    try:
        return build_instance(C, rho, float(mu), constraints=constraints,
                              zero_pattern=zero_pattern)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def write_instance(out_dir, C: np.ndarray, mu: float, rho_uniform: float,
                   zero_pattern=None, truth: np.ndarray | None = None,
                   metadata: dict | None = None) -> Path:
    """Write a generated instance (manifest, covariance, optional truth).

    Returns the manifest path.  Output bytes are a pure function of the
    arguments: keys are sorted and floats use repr-exact decimal forms.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(out_dir / "C.mtx", C)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": int(C.shape[0]),
        "mu": float(mu),
        "rho": {"uniform": float(rho_uniform)},
        "c_path": "C.mtx",
    }
    if zero_pattern:
        doc["constraints"] = {"zero_pattern": [[i + 1, j + 1] for (i, j) in zero_pattern]}
    meta = dict(metadata or {})
    if truth is not None:
        write_matrix(out_dir / "precision.mtx", truth)
        meta["truth_path"] = "precision.mtx"
    if meta:
        doc["metadata"] = meta
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def load_init(path):
    """Read an initial dual point from JSON ``{"y": [...], "w_matrix": path}``.

    Both keys are optional; omitted components default to zero.  Returns
    ``(y or None, W or None)``.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(path, 0, f"cannot read file: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    _require(isinstance(doc, dict), "init file must be a JSON object")
    y = None
    if "y" in doc:
        _require(isinstance(doc["y"], list), "'y' must be a list of reals")
        y = np.asarray(doc["y"], dtype=float)
    W = None
    if "w_matrix" in doc:
        _require(isinstance(doc["w_matrix"], str), "'w_matrix' must be a path string")
        W = read_matrix(path.parent / doc["w_matrix"])
    return y, W


def report_text(report, eps: float) -> str:
    """Render a solve report as an aligned key/value text document."""
    rows = [("status", report.status.value)]
    if report.message:
        rows.append(("message", report.message))
    rows += [
        ("eps", f"{eps:.6g}"),
        ("iterations", str(report.iterations)),
        ("inner_steps", str(report.inner_total)),
        ("wall_time_s", f"{report.wall_time:.6g}"),
    ]
    if report.y is not None:
        # objectives carry 12 significant digits so small gaps stay legible
        rows += [
            ("dual_obj", f"{report.dual_obj:.12g}"),
            ("primal_obj", f"{report.primal_obj:.12g}"),
            ("gap", f"{report.gap:.12g}"),
            ("kkt_direction_inf", f"{report.kkt.direction_inf:.6g}"),
            ("kkt_primal_feas", f"{report.kkt.primal_feas:.6g}"),
            ("kkt_gap", f"{report.kkt.gap:.12g}"),
            ("kkt_compl", f"{report.kkt.compl:.6g}"),
        ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def write_trace_csv(path, trace) -> None:
    """Write per-iteration trace rows as CSV."""
    lines = ["k,g,direction_inf,alpha,lambda,inner_steps"]
    lines.extend(
        f"{r.k},{r.g_val:.12g},{r.direction_inf:.6g},{r.alpha:.6g},{r.lam:.6g},{r.inner_steps}"
        for r in trace
    )
    Path(path).write_text("\n".join(lines) + "\n")
