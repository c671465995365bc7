"""JSON documents for models and results, plus the bundled fixtures."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import TorusSpec, build_torus_model, make_model

FIXTURES = {
    # constant Fourier coefficient 3/2 on every momentum transfer
    "torus": {"torus": {"d": 1, "Kcut": 1, "vhat": [[[k], 1.5] for k in range(-2, 3)]}},
    # pair kernels equal to 3/2 at momenta 0 and +-1 (Fourier coefficient times 2 pi)
    "torus-coupling": {"torus": {"d": 1, "Kcut": 1,
                                 "vhat": [[[k], 1.5 * 2 * np.pi] for k in (-1, 0, 1)]}},
    "free": {"torus": {"d": 1, "Kcut": 1, "vhat": []}},
}


def _num(x, fmt="%.17g"):
    return float(fmt % x)


def model_to_doc(model):
    """Document with row-major complex pairs for T and a sparse list for V."""
    if model.torus is not None:
        spec = model.torus
        return {"torus": {"d": spec.d, "Kcut": spec.Kcut,
                          "vhat": [[list(k), _num(v)] for k, v in spec.vhat]},
                "label": model.label}
    T = [[[_num(z.real), _num(z.imag)] for z in row] for row in model.T]
    V = [[int(m), int(n), int(p), int(q), _num(model.V[m, n, p, q].real), _num(model.V[m, n, p, q].imag)]
         for m, n, p, q in zip(*np.nonzero(model.V))]
    return {"M": model.M, "T": T, "V": V, "positive_type": model.positive_type, "label": model.label}


def model_from_doc(doc):
    if not isinstance(doc, dict):
        raise ConfigError("model document must be a JSON object")
    label = doc.get("label") or ""
    if "torus" in doc:
        t = doc["torus"]
        try:
            spec = TorusSpec(d=int(t["d"]), Kcut=int(t["Kcut"]),
                             vhat=tuple((tuple(int(x) for x in k), float(v)) for k, v in t.get("vhat", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed torus document: {exc}") from exc
        return build_torus_model(spec, label=label or None)
    try:
        M = int(doc["M"])
        T = np.array([[complex(*z) for z in row] for row in doc["T"]])
        V = np.zeros((M,) * 4, dtype=complex)
        for m, n, p, q, re, im in doc.get("V", []):
            V[m, n, p, q] = complex(re, im)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed model document: {exc}") from exc
    return make_model(T, V, label=label, positive_type=doc.get("positive_type"))


def load_model(source):
    """``source`` is a fixture name, a path to a JSON file or inline JSON."""
    if source in FIXTURES:
        doc = dict(FIXTURES[source], label=source)
    elif source.lstrip().startswith("{"):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"inline model is not valid JSON: {exc}") from exc
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"model source not found: {source}", fixtures=sorted(FIXTURES))
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file is not valid JSON: {exc}") from exc
    return model_from_doc(doc)


def model_hash(model):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(model.T).tobytes())
    h.update(np.ascontiguousarray(model.V).tobytes())
    return h.hexdigest()[:16]


def _default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _round(obj):
    """Floats rounded through 17 significant digits; complex as pairs."""
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not np.isfinite(x) else _num(x)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps(obj):
    """Deterministic JSON text."""
    return json.dumps(_round(obj), sort_keys=True, indent=2, default=_default, allow_nan=True) + "\n"
