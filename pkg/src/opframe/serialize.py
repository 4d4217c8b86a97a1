"""JSON wire format shared by every command.

Complex scalars are ``[re, im]`` pairs and matrices are row-major nested
arrays of such pairs. Python's ``json`` writes floats with ``repr``, which
round-trips doubles exactly, so parse(serialize(x)) == x bit for bit.
Parsing is total: every malformed field raises :class:`ParseError` naming
its position, e.g. ``family[1].rep[0][2]``.
"""
import json
import math

import numpy as np

from .errors import ParseError
from .frames import ControlledSystem
from .module import ModuleVector
from .operators import GLPlusOperator, ModuleOperator

FORMAT_VERSION = 1


def encode_matrix(a):
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ParseError(f"{where}: non-finite entry")
    return float(value)


def decode_matrix(data, where="matrix", shape=None):
    if not isinstance(data, list) or not data:
        raise ParseError(f"{where}: expected a non-empty list of rows")
    rows = []
    width = None
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise ParseError(f"{where}[{i}]: expected a row list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{where}[{i}]: row has {len(row)} entries, expected {width}")
        out = []
        for j, pair in enumerate(row):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"{where}[{i}][{j}]: expected [re, im] pair")
            re = _number(pair[0], f"{where}[{i}][{j}][0]")
            im = _number(pair[1], f"{where}[{i}][{j}][1]")
            out.append(complex(re, im))
        rows.append(out)
    a = np.array(rows, dtype=complex)
    if shape is not None and a.shape != tuple(shape):
        raise ParseError(f"{where}: shape {a.shape}, expected {tuple(shape)}")
    return a


def _dim(obj, key, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}.{key}: missing")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ParseError(f"{where}.{key}: expected a positive integer")
    return v


def encode_vector(x):
    return {"n": x.n, "d": x.d, "blocks": [encode_matrix(b) for b in x.blocks]}


def decode_vector(obj, where="vector", n=None, d=None):
    n_ = _dim(obj, "n", where)
    d_ = _dim(obj, "d", where)
    if (n is not None and n_ != n) or (d is not None and d_ != d):
        raise ParseError(f"{where}: (n, d) = {(n_, d_)}, expected {(n, d)}")
    blocks = obj.get("blocks")
    if not isinstance(blocks, list) or len(blocks) != d_:
        raise ParseError(f"{where}.blocks: expected a list of {d_} matrices")
    mats = [decode_matrix(b, f"{where}.blocks[{k}]", (n_, n_)) for k, b in enumerate(blocks)]
    return ModuleVector(n_, d_, np.hstack(mats))


def encode_operator(T):
    return {"n": T.n, "d": T.d, "rep": encode_matrix(T.rep)}


def decode_operator(obj, where="operator", n=None, d=None):
    n_ = _dim(obj, "n", where)
    d_ = _dim(obj, "d", where)
    if (n is not None and n_ != n) or (d is not None and d_ != d):
        raise ParseError(f"{where}: (n, d) = {(n_, d_)}, expected {(n, d)}")
    if "rep" not in obj:
        raise ParseError(f"{where}.rep: missing")
    size = n_ * d_
    return ModuleOperator(n_, d_, decode_matrix(obj["rep"], f"{where}.rep", (size, size)))


def encode_system(sys, vectors=None):
    doc = {
        "version": FORMAT_VERSION,
        "n": sys.n,
        "d": sys.d,
        "family": [encode_operator(t) for t in sys.family],
        "C": encode_operator(sys.C),
        "Cprime": encode_operator(sys.Cp),
        "K": encode_operator(sys.K),
    }
    if vectors is not None:
        doc["vectors"] = [encode_vector(v) for v in vectors]
    return doc


def decode_system(doc):
    """Parse an instance document; returns ``(system, vectors or None)``."""
    if not isinstance(doc, dict):
        raise ParseError("instance: expected a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"version: expected {FORMAT_VERSION}, got {doc.get('version')!r}")
    n = _dim(doc, "n", "instance")
    d = _dim(doc, "d", "instance")
    family = doc.get("family")
    if not isinstance(family, list) or not family:
        raise ParseError("family: expected a non-empty list of operators")
    ops = tuple(decode_operator(t, f"family[{i}]", n, d) for i, t in enumerate(family))
    ctrl = {}
    for key in ("C", "Cprime", "K"):
        if key not in doc:
            raise ParseError(f"{key}: missing")
        ctrl[key] = decode_operator(doc[key], key, n, d)
    for key in ("C", "Cprime"):
        try:
            ctrl[key] = GLPlusOperator.certify(ctrl[key])
        except Exception as exc:
            raise ParseError(f"{key}: not positive invertible ({exc})") from exc
    vectors = None
    if "vectors" in doc:
        if not isinstance(doc["vectors"], list):
            raise ParseError("vectors: expected a list")
        vectors = [decode_vector(v, f"vectors[{i}]", n, d) for i, v in enumerate(doc["vectors"])]
    sys = ControlledSystem(ops, ctrl["C"], ctrl["Cprime"], ctrl["K"])
    return sys, vectors


def encode_value(v):
    """JSON-safe form of verdict witnesses: inf becomes "inf", arrays become matrices."""
    if isinstance(v, ModuleOperator):
        return encode_operator(v)
    if isinstance(v, np.ndarray):
        return encode_matrix(v) if v.ndim == 2 else [encode_value(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, dict):
        return {k: encode_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [encode_value(x) for x in v]
    return v


def dumps(doc):
    return json.dumps(doc, separators=(",", ":"), allow_nan=False)


def loads_system(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return decode_system(doc)


def loads_operator(text, where="operator"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return decode_operator(doc, where)
