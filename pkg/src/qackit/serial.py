"""JSON serialization for circuits and state vectors.

Circuit files are JSON objects with fields ``num_qubits``, ``targets``
(array or null), and ``layers`` (array of arrays of gate objects).  Gate
objects carry ``kind`` in {"u1", "toffoli", "or", "rtensor"} plus
kind-specific fields; complex numbers are [re, im] pairs.  Floats are printed
with 17 significant digits so that round-trips are bit-exact.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .ir import Circuit, Gate, Layer, LocalState, OneQubit, Or, RTensor, Toffoli


class CircuitFormatError(ValueError):
    """Malformed circuit/state JSON; message carries location information."""


def _fmt_float(x: float) -> str:
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("cannot serialize non-finite number")
    if x == int(x) and abs(x) < 1e16:
        return repr(x)
    return format(x, ".17g")


def _emit(obj: Any, out: list[str]) -> None:
    if isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit(val, out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def _dumps(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _gate_obj(g: Gate) -> dict:
    if isinstance(g, OneQubit):
        return {"kind": "u1", "qubit": g.qubit, "matrix": [_pair(z) for z in g.matrix.reshape(4)]}
    if isinstance(g, Toffoli):
        return {"kind": "toffoli", "controls": list(g.controls), "target": g.target}
    if isinstance(g, Or):
        return {"kind": "or", "controls": list(g.controls), "target": g.target}
    if isinstance(g, RTensor):
        return {
            "kind": "rtensor",
            "factors": [
                {"qubit": q, "amp0": _pair(s.amp0), "amp1": _pair(s.amp1)} for q, s in g.factors
            ],
        }
    raise TypeError(f"unknown gate {type(g)!r}")


def serialize(c: Circuit) -> str:
    doc = {
        "num_qubits": c.num_qubits,
        "targets": list(c.targets) if c.targets is not None else None,
        "layers": [[_gate_obj(g) for g in lay.gates] for lay in c.layers],
    }
    parts = ['{\n  "num_qubits": %d,\n  "targets": ' % doc["num_qubits"]]
    parts.append(_dumps(doc["targets"]))
    parts.append(',\n  "layers": [')
    for i, lay in enumerate(doc["layers"]):
        if i:
            parts.append(",")
        parts.append("\n    ")
        parts.append(_dumps(lay))
    parts.append("\n  ]\n}\n")
    return "".join(parts)


def _want(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise CircuitFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _as_complex(val: Any, where: str) -> complex:
    if (
        not isinstance(val, (list, tuple))
        or len(val) != 2
        or not all(isinstance(v, (int, float)) for v in val)
    ):
        raise CircuitFormatError(f"{where}: expected [re, im] pair")
    return complex(val[0], val[1])


def _parse_gate(obj: Any, where: str) -> Gate:
    if not isinstance(obj, dict):
        raise CircuitFormatError(f"{where}: gate must be an object")
    kind = _want(obj, "kind", where)
    if kind == "u1":
        mat = _want(obj, "matrix", where)
        if not isinstance(mat, list) or len(mat) != 4:
            raise CircuitFormatError(f"{where}: u1 matrix must have 4 entries")
        entries = [_as_complex(e, where) for e in mat]
        return OneQubit(int(_want(obj, "qubit", where)), np.array(entries).reshape(2, 2))
    if kind in ("toffoli", "or"):
        controls = _want(obj, "controls", where)
        if not isinstance(controls, list):
            raise CircuitFormatError(f"{where}: controls must be an array")
        cls = Toffoli if kind == "toffoli" else Or
        try:
            return cls(tuple(int(q) for q in controls), int(_want(obj, "target", where)))
        except ValueError as exc:
            raise CircuitFormatError(f"{where}: {exc}") from exc
    if kind == "rtensor":
        factors = _want(obj, "factors", where)
        if not isinstance(factors, list):
            raise CircuitFormatError(f"{where}: factors must be an array")
        pairs = []
        for i, f in enumerate(factors):
            fw = f"{where}, factor {i}"
            pairs.append(
                (
                    int(_want(f, "qubit", fw)),
                    LocalState(_as_complex(_want(f, "amp0", fw), fw), _as_complex(_want(f, "amp1", fw), fw)),
                )
            )
        try:
            return RTensor(tuple(pairs))
        except ValueError as exc:
            raise CircuitFormatError(f"{where}: {exc}") from exc
    raise CircuitFormatError(f"{where}: unknown gate kind {kind!r}")


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise CircuitFormatError("top level: expected an object")
    num_qubits = _want(doc, "num_qubits", "top level")
    if not isinstance(num_qubits, int) or num_qubits <= 0:
        raise CircuitFormatError("top level: num_qubits must be a positive integer")
    targets = _want(doc, "targets", "top level")
    if targets is not None:
        if not isinstance(targets, list):
            raise CircuitFormatError("top level: targets must be an array or null")
        targets = tuple(int(q) for q in targets)
    layers_doc = _want(doc, "layers", "top level")
    if not isinstance(layers_doc, list):
        raise CircuitFormatError("top level: layers must be an array")
    layers = []
    for k, lay in enumerate(layers_doc):
        if not isinstance(lay, list):
            raise CircuitFormatError(f"layer {k}: expected an array of gates")
        layers.append(Layer(tuple(_parse_gate(g, f"layer {k}, gate {j}") for j, g in enumerate(lay))))
    return Circuit(num_qubits, tuple(layers), targets)


def state_to_json(num_qubits: int, amplitudes: np.ndarray) -> str:
    amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if amps.shape[0] != 1 << num_qubits:
        raise ValueError("amplitude count must be 2**num_qubits")
    doc = {"num_qubits": num_qubits, "amplitudes": [_pair(z) for z in amps]}
    return _dumps(doc)


def state_from_json(text: str) -> tuple[int, np.ndarray]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    num_qubits = _want(doc, "num_qubits", "top level")
    pairs = _want(doc, "amplitudes", "top level")
    if not isinstance(pairs, list) or len(pairs) != 1 << num_qubits:
        raise CircuitFormatError("top level: amplitudes must have 2**num_qubits entries")
    amps = np.array([_as_complex(p, f"amplitude {i}") for i, p in enumerate(pairs)])
    return num_qubits, amps
