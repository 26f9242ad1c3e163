"""JSON and CSV encodings for matrices, vectors, systems and orbits.

Complex scalars are ``{"re": ..., "im": ...}`` objects. Forcing variants are
tagged by a ``"type"`` field.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .orbit import (DiscreteSystem, Geometric, OrbitSequence, PowerDecay, Sum,
                    Tabulated, TrigPoly, Zero)


def _clean(x: float) -> float:
    # normalise -0.0 so reruns and golden files compare byte for byte
    x = float(x)
    return 0.0 if x == 0 else x


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": _clean(z.real), "im": _clean(z.imag)}


def complex_from_json(obj) -> complex:
    if isinstance(obj, (int, float)):
        return complex(obj)
    return complex(float(obj["re"]), float(obj.get("im", 0.0)))


def vector_to_json(v) -> list:
    return [complex_to_json(z) for z in np.asarray(v).ravel()]


def vector_from_json(items) -> np.ndarray:
    return np.array([complex_from_json(z) for z in items], dtype=complex)


def matrix_to_json(A) -> dict:
    A = np.asarray(A)
    return {"dim": int(A.shape[0]), "entries": [vector_to_json(row) for row in A]}


def matrix_from_json(obj) -> np.ndarray:
    A = np.array([[complex_from_json(z) for z in row] for row in obj["entries"]], dtype=complex)
    if A.shape != (obj["dim"], obj["dim"]):
        raise ValueError(f"entries have shape {A.shape}, dim says {obj['dim']}")
    return A


def forcing_to_json(f) -> dict:
    if isinstance(f, Zero):
        return {"type": "Zero"}
    if isinstance(f, PowerDecay):
        return {"type": "PowerDecay", "c": vector_to_json(f.c), "alpha": float(f.alpha)}
    if isinstance(f, Geometric):
        return {"type": "Geometric", "c": vector_to_json(f.c), "rho": complex_to_json(f.rho)}
    if isinstance(f, TrigPoly):
        return {"type": "TrigPoly",
                "terms": [{"coef": vector_to_json(c), "freq": complex_to_json(z)} for c, z in f.terms]}
    if isinstance(f, Sum):
        return {"type": "Sum", "parts": [forcing_to_json(p) for p in f.parts]}
    if isinstance(f, Tabulated):
        out = {"type": "Tabulated", "samples": [vector_to_json(row) for row in f.samples]}
        if f.freqs:
            out["freqs"] = [complex_to_json(z) for z in f.freqs]
        return out
    raise TypeError(f"unknown forcing {f!r}")


def forcing_from_json(obj):
    kind = obj["type"]
    if kind == "Zero":
        return Zero()
    if kind == "PowerDecay":
        return PowerDecay(vector_from_json(obj["c"]), float(obj["alpha"]))
    if kind == "Geometric":
        return Geometric(vector_from_json(obj["c"]), complex_from_json(obj["rho"]))
    if kind == "TrigPoly":
        return TrigPoly(tuple((vector_from_json(t["coef"]), complex_from_json(t["freq"]))
                              for t in obj["terms"]))
    if kind == "Sum":
        return Sum(tuple(forcing_from_json(p) for p in obj["parts"]))
    if kind == "Tabulated":
        rows = [vector_from_json(r) for r in obj["samples"]]
        return Tabulated(np.array(rows), tuple(complex_from_json(z) for z in obj.get("freqs", [])))
    raise ValueError(f"unknown forcing type {kind!r}")


def system_to_json(sys: DiscreteSystem) -> dict:
    out = matrix_to_json(sys.B)
    out["x1"] = vector_to_json(sys.x1)
    out["forcing"] = forcing_to_json(sys.forcing)
    return out


def system_from_json(obj) -> DiscreteSystem:
    forcing = forcing_from_json(obj["forcing"]) if "forcing" in obj else Zero()
    return DiscreteSystem(matrix_from_json(obj), vector_from_json(obj["x1"]), forcing)


def dumps(payload) -> str:
    """Canonical JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def orbit_to_csv(x: OrbitSequence) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["n"]
    for k in range(x.dim):
        header += [f"re_{k}", f"im_{k}"]
    w.writerow(header)
    for n, row in enumerate(x.samples, start=1):
        cells = [str(n)]
        for z in row:
            cells += [repr(_clean(z.real)), repr(_clean(z.imag))]
        w.writerow(cells)
    return buf.getvalue()


def orbit_from_csv(text: str) -> OrbitSequence:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        raise ValueError("empty orbit CSV")
    header = rows[0]
    if header[0] != "n" or (len(header) - 1) % 2:
        raise ValueError("orbit CSV header must be n,re_0,im_0,...")
    d = (len(header) - 1) // 2
    expected = ["n"] + [f"{p}_{k}" for k in range(d) for p in ("re", "im")]
    if header != expected:
        raise ValueError(f"orbit CSV header mismatch: {header}")
    data = np.array([[float(c) for c in r[1:]] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 * d:
        raise ValueError("orbit CSV rows have the wrong width")
    return OrbitSequence.from_samples(data[:, 0::2] + 1j * data[:, 1::2])


def read_json(path) -> object:
    return json.loads(Path(path).read_text(encoding="utf-8"))
