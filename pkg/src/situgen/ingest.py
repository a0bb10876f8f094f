"""Convert a 3RScan/3DSSG annotation dump into the normalized scene schema.

Inputs, per scan:

* ``semseg.v2.json``: ``segGroups[]`` with ``objectId``, ``label`` and
  ``obb = {centroid, axesLengths, normalizedAxes}``; axes are stored as three
  unit vectors (row-major, 9 floats) and lengths are full edge lengths.
* ``objects.json`` (optional, 3DSSG): ``scans[].objects[]`` with ``id``,
  ``attributes`` (category -> list of values) and ``affordances``.
* ``relationships.json`` (optional, 3DSSG): ``scans[].relationships[]`` as
  ``[subject_id, object_id, predicate_id, predicate]``.

Mapping: the box axis with the largest vertical component becomes ``ez``; of
the remaining two, the first listed gives ``yaw = atan2(ay, ax)`` and ``ex``.
Object ids become ``<label stem>_<objectId>``, relations become
``"<predicate> <target id>"`` strings, and only the first value of each
attribute category is kept.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

from .errors import SchemaError
from .scene import id_stem

logger = logging.getLogger(__name__)


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _scan_entry(doc, scan_id: str) -> dict:
    for scan in (doc or {}).get("scans", []):
        if scan.get("scan") == scan_id:
            return scan
    return {}


def obb_from_3rscan(obb: dict, path: str = "obb") -> dict:
    try:
        centroid = [float(v) for v in obb["centroid"]]
        lengths = [float(v) for v in obb["axesLengths"]]
        flat = [float(v) for v in obb["normalizedAxes"]]
    except (KeyError, TypeError, ValueError):
        raise SchemaError(path, "expected centroid, axesLengths and normalizedAxes") from None
    if len(centroid) != 3 or len(lengths) != 3 or len(flat) != 9:
        raise SchemaError(path, "wrong vector lengths")
    axes = [flat[0:3], flat[3:6], flat[6:9]]
    vertical = max(range(3), key=lambda i: abs(axes[i][2]))
    horizontal = [i for i in range(3) if i != vertical]
    first, second = horizontal
    yaw = math.degrees(math.atan2(axes[first][1], axes[first][0]))
    return {
        "center": centroid,
        "extents": [lengths[first] / 2.0, lengths[second] / 2.0, lengths[vertical] / 2.0],
        "yaw": yaw,
    }


def convert_scan(semseg: dict, objects_doc: dict | None = None,
                 relationships_doc: dict | None = None, scan_id: str | None = None) -> dict:
    scan_id = scan_id or semseg.get("scan_id") or semseg.get("sceneId")
    if not scan_id:
        raise SchemaError("scan_id", "scan id missing; pass it explicitly")
    meta = {str(o.get("id")): o for o in _scan_entry(objects_doc, scan_id).get("objects", [])}
    ids: dict[str, str] = {}
    out = []
    for i, group in enumerate(semseg.get("segGroups", [])):
        path = f"segGroups[{i}]"
        try:
            oid = str(group["objectId"])
            label = str(group["label"]).strip()
        except KeyError as exc:
            raise SchemaError(path, f"missing {exc}") from None
        obb = obb_from_3rscan(group.get("obb", {}), f"{path}.obb")
        if min(obb["extents"]) <= 0.0:
            logger.warning("skipping %s (%s): degenerate box", oid, label)
            continue
        info = meta.get(oid, {})
        attrs = {}
        for key, values in sorted((info.get("attributes") or {}).items()):
            if isinstance(values, list) and values:
                attrs[key] = str(values[0])
            elif isinstance(values, str) and values:
                attrs[key] = values
        ids[oid] = f"{id_stem(label)}_{oid}"
        out.append({"id": ids[oid], "label": label, "obb": obb, "attributes": attrs,
                    "affordances": [str(a) for a in info.get("affordances", [])],
                    "relations": []})
    by_id = {o["id"]: o for o in out}
    for rel in _scan_entry(relationships_doc, scan_id).get("relationships", []):
        subj, obj, _, predicate = rel
        s, o = ids.get(str(subj)), ids.get(str(obj))
        if s and o:
            by_id[s]["relations"].append(f"{predicate} {o}")
    return {"id": scan_id, "objects": out}


def ingest_directory(scan_dir, objects_path=None, relationships_path=None) -> dict:
    """Convert one scan directory holding ``semseg.v2.json`` (scan id = directory name)."""
    scan_dir = Path(scan_dir)
    semseg = _load(scan_dir / "semseg.v2.json")
    objects_doc = _load(objects_path) if objects_path else None
    rel_doc = _load(relationships_path) if relationships_path else None
    return convert_scan(semseg, objects_doc, rel_doc, scan_id=scan_dir.name)
