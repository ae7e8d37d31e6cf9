"""Reading generator files and writing exports.

A generator file is a JSON document::

    {
      "name": "m003(-3,1)",
      "generators": [ [[[re, im], [re, im]], [[re, im], [re, im]]], ... ],
      "reference_volume": 0.9427...,          (optional)
      "relators": ["ABaBBBaBA", [1, -2, 1]]   (optional; strings or signed indices)
    }

Any further keys are kept in :attr:`GeneratorFile.extra`.  Exports are JSON
(polyhedron, verification report) or CSV (big and small lists); floats in
JSON are written with 17 significant digits so that they read back
bit-identically.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError
from .hypcore import DEFAULT_TOL, Tolerance, element, parse_word, word_to_string

FIXTURES = ("weeks", "m003_m2_3", "figure8")


@dataclass
class GeneratorFile:
    name: str
    generators: list
    reference_volume: Optional[float] = None
    relators: list = field(default_factory=list)  # tuples of signed 1-based indices
    extra: dict = field(default_factory=dict)
    raw_matrices: list = field(default_factory=list)  # entries exactly as read, before normalization


def _locate(text: str, needle_pos: int) -> int:
    return text.count("\n", 0, needle_pos) + 1


def _entry_lines(text: str) -> list:
    """Line numbers for each generator: ``(matrix line, {(i, j): entry line})``.

    Found by scanning the bracket structure after the ``"generators"`` key.
    """
    start = text.find('"generators"')
    if start < 0:
        return []
    out = []
    depth = 0
    row = col = -1
    pos = text.find("[", start)
    if pos < 0:
        return []
    for k in range(pos, len(text)):
        ch = text[k]
        if ch == "[":
            depth += 1
            if depth == 2:
                out.append((_locate(text, k), {}))
                row = -1
            elif depth == 3:
                row += 1
                col = -1
            elif depth == 4:
                col += 1
                out[-1][1][(row, col)] = _locate(text, k)
        elif ch == "]":
            depth -= 1
            if depth == 0:
                break
        elif depth == 3 and not ch.isspace() and ch != ",":
            # a bare scalar where an [re, im] pair belongs
            col += 1
            out[-1][1].setdefault((row, col), _locate(text, k))
    return out


def _number(v, where: str, line) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: expected a decimal number, got {v!r}", line)
    if not math.isfinite(v):
        raise ParseError(f"{where}: entry is not finite", line)
    return float(v)


def parse_generator_text(text: str, tol: Tolerance = DEFAULT_TOL) -> GeneratorFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", 1)
    lines = _entry_lines(text)
    raw = doc.get("generators")
    if not isinstance(raw, list) or not raw:
        raise ParseError("'generators' must be a non-empty list", _locate(text, max(text.find('"generators"'), 0)))
    gens, raws = [], []
    for k, m in enumerate(raw):
        line, entry_line = lines[k] if k < len(lines) else (None, {})
        where = f"generator {k + 1}"
        if not (isinstance(m, list) and len(m) == 2 and all(isinstance(r, list) and len(r) == 2 for r in m)):
            raise ParseError(f"{where}: expected a 2x2 matrix", line)
        entries = np.empty((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                z = m[i][j]
                at = entry_line.get((i, j), line)
                if not (isinstance(z, list) and len(z) == 2):
                    raise ParseError(f"{where}: entry ({i + 1},{j + 1}) must be [re, im]", at)
                entries[i, j] = complex(_number(z[0], where, at), _number(z[1], where, at))
        raws.append(entries)
        try:
            gens.append(element(entries, (k + 1,), tol))
        except Exception as exc:
            raise ParseError(f"{where}: {exc}", line) from None
    vol = doc.get("reference_volume")
    if vol is not None:
        vol = _number(vol, "reference_volume", _locate(text, text.find('"reference_volume"')))
    relators = []
    for r in doc.get("relators", []) or []:
        line = _locate(text, max(text.find('"relators"'), 0))
        try:
            if isinstance(r, str):
                relators.append(parse_word(r, len(gens)))
            else:
                w = tuple(int(a) for a in r)
                if any(a == 0 or abs(a) > len(gens) for a in w):
                    raise ValueError(f"generator index out of range in {r!r}")
                relators.append(w)
        except (ValueError, TypeError) as exc:
            raise ParseError(f"relator {r!r}: {exc}", line) from None
    name = str(doc.get("name", ""))
    extra = {k: v for k, v in doc.items() if k not in ("name", "generators", "reference_volume", "relators")}
    return GeneratorFile(name, gens, vol, relators, extra, raws)


def load_generator_file(path, tol: Tolerance = DEFAULT_TOL) -> GeneratorFile:
    return parse_generator_text(Path(path).read_text(), tol)


def fixture_path(name: str):
    return resources.files("hypdomain") / "fixtures" / f"{name}.json"


def load_fixture(name: str, tol: Tolerance = DEFAULT_TOL) -> GeneratorFile:
    """One of the bundled fixtures: ``weeks``, ``m003_m2_3`` or ``figure8``."""
    return parse_generator_text(fixture_path(name).read_text(), tol)


# ---------------------------------------------------------------- writing

def fmt(v: float) -> str:
    return "%.17g" % v


def _emit(obj, indent: int, out: list):
    pad = " " * indent
    if obj is None or (isinstance(obj, float) and not math.isfinite(obj)):
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for k, (key, v) in enumerate(items):
            out.append(pad + " " + json.dumps(str(key)) + ": ")
            _emit(v, indent + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
        elif all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            out.append("[")
            for k, v in enumerate(seq):
                _emit(v, indent, out)
                if k < len(seq) - 1:
                    out.append(", ")
            out.append("]")
        else:
            out.append("[\n")
            for k, v in enumerate(seq):
                out.append(pad + " ")
                _emit(v, indent + 1, out)
                out.append(",\n" if k < len(seq) - 1 else "\n")
            out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with sorted keys and floats written to 17 significant digits.

    Non-finite floats become ``null``.  Re-reading with :func:`json.loads`
    and dumping again reproduces the text byte for byte.
    """
    out = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"


def matrix_json(m) -> list:
    m = np.asarray(m)
    return [[[float(m[i, j].real), float(m[i, j].imag)] for j in range(2)] for i in range(2)]


def generator_file_text(gf: GeneratorFile) -> str:
    doc = dict(gf.extra)
    doc["name"] = gf.name
    mats = gf.raw_matrices or [g.matrix for g in gf.generators]
    doc["generators"] = [matrix_json(m) for m in mats]
    if gf.reference_volume is not None:
        doc["reference_volume"] = gf.reference_volume
    if gf.relators:
        doc["relators"] = [word_to_string(r) for r in gf.relators]
    return dumps(doc)


def polyhedron_dict(poly, stats=None) -> dict:
    faces = []
    for f in poly.faces:
        faces.append({
            "vertices": list(f.vertices),
            "word": None if f.element is None else word_to_string(f.element.word),
            "matrix": None if f.element is None else matrix_json(f.element.matrix),
            "klein_normal": [float(a) for a in f.halfspace.klein_normal],
            "klein_offset": float(f.halfspace.klein_offset),
            "paired_face": f.paired_face,
        })
    doc = {
        "basepoint": [float(a) for a in poly.basepoint],
        "vertices": [[float(a) for a in v] for v in poly.vertices],
        "ideal": [bool(a) for a in poly.ideal],
        "faces": faces,
        "edges": [[int(e[0]), int(e[1])] for e in poly.edges],
        "converged": bool(poly.converged),
        "word_length_reached": int(poly.word_length_reached),
        "near_misses": [list(n) for n in poly.near_misses],
    }
    if stats is not None:
        doc["stats"] = {
            "injectivity_radius": stats.injectivity_radius,
            "spine_radius": stats.spine_radius,
            "volume": stats.volume,
            "volume_error": stats.volume_error,
            "infinite_volume": stats.infinite_volume,
            "max_vertex_distance": stats.max_vertex_distance,
            "n_vertices": stats.n_vertices,
            "n_edges": stats.n_edges,
            "n_faces": stats.n_faces,
            "n_ideal_vertices": stats.n_ideal_vertices,
            "euler_characteristic": stats.euler_characteristic,
            "converged": stats.converged,
            "word_length_reached": stats.word_length_reached,
        }
    return doc


# CSV exports: each has a header, a typed row layout and a formatter per column.
BIGLIST_COLUMNS = ["word", "a_re", "a_im", "b_re", "b_im", "c_re", "c_im", "d_re", "d_im",
                   "distance", "depth", "parent"]
SMALLLIST_COLUMNS = ["lambda", "theta", "multiplicity", "representatives"]
EXCLUDED_COLUMNS = ["word", "reason", "reference"]


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(text: str, header) -> list:
    reader = csv.reader(_io.StringIO(text))
    try:
        got = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if got != list(header):
        raise ParseError(f"unexpected header {got}", 1)
    rows = []
    for n, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", n)
        rows.append((n, row))
    return rows


def biglist_rows(tileset) -> list:
    rows = []
    for t in tileset.tiles:
        m = t.element.matrix
        ents = [float(v) for z in m.ravel() for v in (z.real, z.imag)]
        rows.append((word_to_string(t.element.word) or "1", *ents, float(t.distance), int(t.depth),
                     None if t.parent is None else (int(t.parent[0]), int(t.parent[1]))))
    return rows


def biglist_text(rows) -> str:
    if not isinstance(rows, list):
        rows = biglist_rows(rows)
    out = []
    for r in rows:
        parent = "" if r[11] is None else f"{r[11][0]}:{r[11][1]}"
        out.append([r[0], *(fmt(v) for v in r[1:10]), r[10], parent])
    return _csv_text(BIGLIST_COLUMNS, out)


def parse_biglist(text: str) -> list:
    rows = []
    for n, row in _read_csv(text, BIGLIST_COLUMNS):
        try:
            parent = None if row[11] == "" else tuple(int(a) for a in row[11].split(":"))
            rows.append((row[0], *(float(v) for v in row[1:10]), int(row[10]), parent))
        except ValueError as exc:
            raise ParseError(str(exc), n) from None
    return rows


def smalllist_rows(spectrum) -> list:
    return [(e.length.lam, e.length.theta, e.multiplicity, tuple(e.representatives)) for e in spectrum.entries]


def smalllist_text(rows) -> str:
    if not isinstance(rows, list):
        rows = smalllist_rows(rows)
    out = [["%.12g" % r[0], "%.12g" % r[1], r[2], " ".join(r[3])] for r in rows]
    return _csv_text(SMALLLIST_COLUMNS, out)


def parse_smalllist(text: str) -> list:
    rows = []
    for n, row in _read_csv(text, SMALLLIST_COLUMNS):
        try:
            rows.append((float(row[0]), float(row[1]), int(row[2]), tuple(row[3].split())))
        except ValueError as exc:
            raise ParseError(str(exc), n) from None
    return rows


def excluded_rows(spectrum) -> list:
    return [(x.word, x.reason, x.reference) for x in spectrum.excluded]


def excluded_text(rows) -> str:
    if not isinstance(rows, list):
        rows = excluded_rows(rows)
    return _csv_text(EXCLUDED_COLUMNS, [[w, r, ref or ""] for w, r, ref in rows])


def parse_excluded(text: str) -> list:
    rows = []
    for n, row in _read_csv(text, EXCLUDED_COLUMNS):
        if row[1] not in ("zero-length", "over-cutoff", "conjugate-of", "power-of"):
            raise ParseError(f"unknown exclusion reason {row[1]!r}", n)
        rows.append((row[0], row[1], row[2] or None))
    return rows


def report_dict(report) -> dict:
    return {
        "delta_v": report.delta_v,
        "reference_volume": report.reference_volume,
        "domain_volume": report.domain_volume,
        "extra_area_lower": report.extra_area_lower,
        "hidden_wall_area_lower": report.hidden_wall_area_lower,
        "ndd_upper": report.ndd_upper,
        "injectivity_radius": report.injectivity_radius,
        "spine_radius_upper": report.spine_radius_upper,
        "tiling_radius": report.tiling_radius,
        "oracle_run": report.oracle_run,
        "oracle_frontier_closed": report.oracle_frontier_closed,
        "oracle_missing": [word_to_string(g.word) for g in report.oracle_missing],
        "oracle_extra": [word_to_string(g.word) for g in report.oracle_extra],
        "tiling_complete": report.tiling_complete,
        "coverage_fraction": report.coverage_fraction,
        "mean_multiplicity": report.mean_multiplicity,
    }


def spectrum_dict(spectrum) -> dict:
    return {
        "cutoff": spectrum.cutoff,
        "oriented": spectrum.oriented,
        "entries": [
            {"lambda": e.length.lam, "theta": e.length.theta, "multiplicity": e.multiplicity,
             "representatives": list(e.representatives)}
            for e in spectrum.entries
        ],
    }
