"""Text file formats for configurations, distance matrices, oracles and reports.

All documents are JSON. Floats are written with ``repr`` (shortest
round-trip form, at most 17 significant digits), so a parse reproduces
every value bitwise.
"""

import hashlib
import json
import os
import tempfile

import numpy as np

from .core import PTH_POWER, RAW, Configuration, UpperTriangularMatrix
from .embedding import LINEAR_DISTORTION, ORACLE_KINDS, WEIGHTED_P, NormOracle, make_norm_oracle
from .errors import PreconditionError


class FormatError(PreconditionError):
    """A document does not match its declared format."""


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(doc):
    return json.dumps(_plain(doc), indent=2, sort_keys=False) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_document(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc


def _field(doc, name, where):
    if not isinstance(doc, dict):
        raise FormatError(f"{where}: expected an object at top level")
    if name not in doc:
        raise FormatError(f"{where}: missing field '{name}'")
    return doc[name]


def configuration_to_dict(config):
    return {"p": config.p, "points": config.points.tolist()}


def configuration_from_dict(doc, where="configuration"):
    p = _field(doc, "p", where)
    pts = _field(doc, "points", where)
    if not isinstance(pts, list) or not pts or not all(isinstance(r, list) for r in pts):
        raise FormatError(f"{where}: field 'points' must be an array of arrays")
    widths = {len(r) for r in pts}
    if len(widths) != 1:
        raise FormatError(f"{where}: field 'points' rows have differing lengths {sorted(widths)}")
    for i, row in enumerate(pts):
        for k, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise FormatError(f"{where}: points[{i}][{k}] is not a number")
    if not isinstance(p, (int, float)) or isinstance(p, bool):
        raise FormatError(f"{where}: field 'p' is not a number")
    return Configuration(p, np.array(pts, dtype=float))


def matrix_to_dict(m):
    return {"n": m.n, "kind": m.kind, "entries": m.entries.tolist()}


def matrix_from_dict(doc, where="distance matrix"):
    n = _field(doc, "n", where)
    kind = _field(doc, "kind", where)
    entries = _field(doc, "entries", where)
    if kind not in (PTH_POWER, RAW):
        raise FormatError(f"{where}: field 'kind' must be 'pth_power' or 'raw', got {kind!r}")
    if not isinstance(n, int) or isinstance(n, bool):
        raise FormatError(f"{where}: field 'n' must be an integer")
    if not isinstance(entries, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in entries):
        raise FormatError(f"{where}: field 'entries' must be an array of numbers")
    return UpperTriangularMatrix(n, np.array(entries, dtype=float), kind)


def oracle_to_dict(oracle):
    return oracle.to_dict()


def oracle_from_dict(doc, where="norm oracle"):
    kind = _field(doc, "kind", where)
    N = _field(doc, "N", where)
    p = _field(doc, "p", where)
    delta = _field(doc, "delta", where)
    if kind not in ORACLE_KINDS:
        raise FormatError(f"{where}: unknown kind {kind!r}")
    if kind == WEIGHTED_P:
        return make_norm_oracle(kind, N, p, delta, weights=_field(doc, "weights", where))
    if kind == LINEAR_DISTORTION:
        T = np.array(_field(doc, "matrix", where), dtype=float)
        if "scale" in doc:
            # stored certificate: restore without resampling
            T.setflags(write=False)
            return NormOracle(kind, N, float(p), float(delta), matrix=T, scale=float(doc["scale"]),
                              measured_slack=float(doc.get("measured_slack", 0.0)))
        return make_norm_oracle(kind, N, p, delta, matrix=T)
    return make_norm_oracle(kind, N, p)


def digest(doc):
    """sha256 of the canonical JSON form of ``doc``."""
    text = json.dumps(_plain(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_configuration(path):
    return configuration_from_dict(load_document(path), str(path))


def save_configuration(path, config):
    write_atomic(path, dumps(configuration_to_dict(config)))


def load_matrix(path):
    return matrix_from_dict(load_document(path), str(path))


def save_matrix(path, m):
    write_atomic(path, dumps(matrix_to_dict(m)))


def load_oracle(path):
    return oracle_from_dict(load_document(path), str(path))


def save_oracle(path, oracle):
    write_atomic(path, dumps(oracle_to_dict(oracle)))


def embedding_report(result):
    """Report document for an ``EmbeddingResult``."""
    from .core import pair_list

    pairs = []
    for (i, j), t, e in zip(pair_list(result.source.n), result.target_distances.entries,
                            result.e_norm_distances.entries):
        pairs.append({"i": i + 1, "j": j + 1, "lp_distance": t, "e_distance": e, "defect": abs(e - t)})
    return {
        "configuration_digest": digest(configuration_to_dict(result.source)),
        "oracle_digest": digest(oracle_to_dict(result.oracle)),
        "rho": result.rho,
        "fixed_point_residual": result.fixed_point_residual,
        "max_isometry_defect": result.max_isometry_defect,
        "phi_bound_violation": result.phi_bound_violation,
        "epsilon_cap": result.epsilon_cap,
        "iterations": result.iterations,
        "method": result.method,
        "converged": result.converged,
        "points": result.points,
        "pairs": pairs,
    }
