"""Case records and on-disk formats.

A dataset directory holds geometry shells (surface clouds plus planform
parameters), per-case field files, and a delimiter-separated manifest:

    <root>/geometries/<geometry_id>.bwb
    <root>/cases/<case_id>.bwb
    <root>/manifest.csv

Both .bwb kinds are the same checksummed block container (blockfile.py);
a case file may embed its cloud or reference the geometry shell by id.
A legacy-ASCII-VTK reader covers externally produced surface files.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .atmosphere import FLIGHT_NAMES, FlightCondition
from .blockfile import read_blockfile, write_blockfile
from .errors import DomainError, FormatError, ParseError, ShapeError
from .forces import IntegratedCoefficients
from .geometry import PARAM_NAMES, PlanformParams, SurfaceCloud

CASE_MAGIC = "BWBCASE"
CASE_VERSION = 1

GEOM_SUBDIR = "geometries"
CASE_SUBDIR = "cases"
MANIFEST_NAME = "manifest.csv"

DEFAULT_FIELD_NAMES = {"cp": "Cp", "cfx": "Cfx", "cfy": "Cfy", "cfz": "Cfz"}


@dataclass
class FieldQuad:
    """Pointwise Cp and skin-friction components aligned with a cloud."""

    cp: np.ndarray
    cfx: np.ndarray
    cfy: np.ndarray
    cfz: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.cp)

    def validate(self, n_points: int | None = None) -> None:
        n = len(self.cp)
        for name in ("cfx", "cfy", "cfz"):
            if len(getattr(self, name)) != n:
                raise ShapeError(f"field {name} has length {len(getattr(self, name))}, expected {n}")
        if n_points is not None and n != n_points:
            raise ShapeError(f"fields have {n} points, cloud has {n_points}")
        for name in ("cp", "cfx", "cfy", "cfz"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"field {name} contains non-finite values")

    @classmethod
    def zeros(cls, n: int) -> "FieldQuad":
        return cls(*(np.zeros(n) for _ in range(4)))


@dataclass
class CaseRecord:
    """One dataset sample; (geometry_id, flight) is unique within a dataset."""

    geometry_id: str
    params: PlanformParams | None = None
    flight: FlightCondition | None = None
    cloud: SurfaceCloud | None = None
    fields: FieldQuad | None = None
    integrated: IntegratedCoefficients | None = None
    case_id: str = ""


@dataclass
class DatasetSplit:
    """Geometry-disjoint partition of case ids (and their geometries)."""

    train: list[str] = field(default_factory=list)
    val: list[str] = field(default_factory=list)
    test: list[str] = field(default_factory=list)
    train_geometries: list[str] = field(default_factory=list)
    val_geometries: list[str] = field(default_factory=list)
    test_geometries: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# native container

def write_native(record: CaseRecord, path, config_hash: str | None = None) -> None:
    """Serialize a case record; read_native(write_native(r)) is bitwise identity."""
    manifest: dict = {"geometry_id": record.geometry_id, "case_id": record.case_id}
    if record.params is not None:
        manifest["params"] = {n: getattr(record.params, n) for n in PARAM_NAMES}
        manifest["params"]["c1"] = record.params.c1
    if record.flight is not None:
        manifest["flight"] = {n: getattr(record.flight, n) for n in FLIGHT_NAMES}
    if record.integrated is not None:
        ic = record.integrated
        manifest["integrated"] = {"cl": ic.cl, "cd": ic.cd, "cmy": ic.cmy,
                                  "a_ref": ic.a_ref, "c_ref": ic.c_ref}
    if config_hash is not None:
        manifest["config_hash"] = config_hash

    blocks: dict[str, np.ndarray] = {}
    if record.cloud is not None:
        blocks["points"] = record.cloud.points
        blocks["normals"] = record.cloud.normals
        blocks["areas"] = record.cloud.areas
    if record.fields is not None:
        for name in ("cp", "cfx", "cfy", "cfz"):
            blocks[name] = getattr(record.fields, name)
    write_blockfile(path, CASE_MAGIC, CASE_VERSION, manifest, blocks)


def read_native(path) -> CaseRecord:
    manifest, blocks = read_blockfile(path, CASE_MAGIC, CASE_VERSION)
    params = None
    if "params" in manifest:
        raw = manifest["params"]
        params = PlanformParams(**{n: raw[n] for n in PARAM_NAMES}, c1=raw.get("c1", 1.0))
    flight = None
    if "flight" in manifest:
        flight = FlightCondition(**manifest["flight"])
    integrated = None
    if "integrated" in manifest:
        integrated = IntegratedCoefficients(**manifest["integrated"])
    cloud = None
    if "points" in blocks:
        cloud = SurfaceCloud(points=blocks["points"], normals=blocks["normals"],
                             areas=blocks["areas"], geometry_id=manifest.get("geometry_id", ""))
    fields = None
    if "cp" in blocks:
        fields = FieldQuad(cp=blocks["cp"], cfx=blocks["cfx"],
                           cfy=blocks["cfy"], cfz=blocks["cfz"])
    return CaseRecord(geometry_id=manifest.get("geometry_id", ""), params=params,
                      flight=flight, cloud=cloud, fields=fields,
                      integrated=integrated, case_id=manifest.get("case_id", ""))


# ---------------------------------------------------------------------------
# legacy ASCII VTK (POLYDATA subset)

class _TokenStream:
    """Whitespace tokens from text lines, tracking the current line number."""

    def __init__(self, lines):
        self.lines = lines
        self.lineno = 0
        self._buf: list[str] = []

    def next_line(self) -> str | None:
        while self.lineno < len(self.lines):
            line = self.lines[self.lineno]
            self.lineno += 1
            if line.strip():
                return line.strip()
        return None

    def read_numbers(self, count: int, kind=float) -> np.ndarray:
        out = np.empty(count)
        got = 0
        while got < count:
            if not self._buf:
                line = self.next_line()
                if line is None:
                    raise ParseError(f"unexpected end of file, needed {count - got} more values",
                                     line=self.lineno)
                self._buf = line.split()
            while self._buf and got < count:
                tok = self._buf.pop(0)
                try:
                    out[got] = kind(tok)
                except ValueError:
                    raise ParseError(f"expected a number, got {tok!r}", line=self.lineno)
                got += 1
        return out


def read_vtk_surface(path, field_names: dict[str, str] | None = None,
                     strict: bool = True) -> tuple[SurfaceCloud, FieldQuad]:
    """Read a legacy ASCII VTK POLYDATA surface with pointwise scalar arrays.

    Points are taken verbatim; normals and per-point areas are recomputed
    from polygon connectivity (outward orientation decided by majority
    vote against the surface centroid). ``field_names`` remaps the scalar
    array names (defaults: Cp, Cfx, Cfy, Cfz). In strict mode a missing
    required array or unreferenced point is an error; lenient mode fills
    zeros. Unknown point-data arrays are parsed and ignored.
    """
    names = dict(DEFAULT_FIELD_NAMES)
    if field_names:
        names.update(field_names)
    with open(path, "r", encoding="utf-8") as fh:
        stream = _TokenStream(fh.read().splitlines())

    header = stream.next_line()
    if header is None or not header.startswith("# vtk DataFile Version"):
        raise ParseError("missing '# vtk DataFile Version' header", line=stream.lineno)
    stream.next_line()  # title
    fmt = stream.next_line()
    if fmt is None or fmt.upper() != "ASCII":
        raise ParseError(f"expected ASCII format, got {fmt!r}", line=stream.lineno)
    dataset = stream.next_line()
    if dataset is None or dataset.upper() != "DATASET POLYDATA":
        raise ParseError(f"expected 'DATASET POLYDATA', got {dataset!r}", line=stream.lineno)

    points: np.ndarray | None = None
    polygons: list[np.ndarray] = []
    scalars: dict[str, np.ndarray] = {}
    n_point_data = 0
    section = "points"  # points -> point_data / cell_data

    line = stream.next_line()
    while line is not None:
        words = line.split()
        key = words[0].upper()
        if key == "POINTS":
            n = int(words[1])
            points = stream.read_numbers(3 * n).reshape(n, 3)
        elif key == "POLYGONS":
            n_poly, total = int(words[1]), int(words[2])
            flat = stream.read_numbers(total, kind=int).astype(int)
            pos = 0
            for _ in range(n_poly):
                size = int(flat[pos])
                polygons.append(flat[pos + 1:pos + 1 + size])
                pos += 1 + size
            if pos != total:
                raise ParseError("POLYGONS size field does not match data", line=stream.lineno)
        elif key in ("VERTICES", "LINES", "TRIANGLE_STRIPS"):
            stream.read_numbers(int(words[2]), kind=int)
        elif key == "POINT_DATA":
            n_point_data = int(words[1])
            if points is not None and n_point_data != len(points):
                raise FormatError(
                    f"{path}: POINT_DATA count {n_point_data} != POINTS count {len(points)}")
            section = "point_data"
        elif key == "CELL_DATA":
            section = "cell_data"
            n_point_data_cells = int(words[1])
            n_point_data = n_point_data_cells  # reuse counter for skipping
        elif key == "SCALARS":
            name = words[1]
            ncomp = int(words[3]) if len(words) > 3 else 1
            nxt = stream.next_line()
            if nxt is None or not nxt.upper().startswith("LOOKUP_TABLE"):
                raise ParseError("expected LOOKUP_TABLE after SCALARS", line=stream.lineno)
            data = stream.read_numbers(n_point_data * ncomp)
            if section == "point_data" and ncomp == 1:
                scalars[name] = data
        elif key in ("VECTORS", "NORMALS"):
            stream.read_numbers(3 * n_point_data)
        else:
            raise ParseError(f"unsupported VTK section {words[0]!r}", line=stream.lineno)
        line = stream.next_line()

    if points is None:
        raise FormatError(f"{path}: no POINTS section found")

    cloud = _cloud_from_polygons(path, points, polygons, strict)
    arrays = {}
    for channel, vtk_name in names.items():
        if vtk_name in scalars:
            data = scalars[vtk_name]
            if len(data) != len(points):
                raise FormatError(
                    f"{path}: array {vtk_name!r} has {len(data)} values for {len(points)} points")
            arrays[channel] = data
        elif strict:
            raise FormatError(f"{path}: required point-data array {vtk_name!r} is missing")
        else:
            arrays[channel] = np.zeros(len(points))
    return cloud, FieldQuad(**arrays)


def _cloud_from_polygons(path, points, polygons, strict) -> SurfaceCloud:
    if strict and not polygons:
        raise FormatError(f"{path}: no polygon connectivity; cannot recompute normals")
    acc = np.zeros_like(points)
    areas = np.zeros(len(points))
    face_vecs = []
    for poly in polygons:
        if np.any(poly >= len(points)) or np.any(poly < 0):
            raise FormatError(f"{path}: polygon references point index out of range")
        verts = points[poly]
        vec = np.zeros(3)
        for k in range(1, len(poly) - 1):
            vec += 0.5 * np.cross(verts[k] - verts[0], verts[k + 1] - verts[0])
        face_vecs.append(vec)

    if face_vecs:
        centroid = points.mean(axis=0)
        votes = 0
        for poly, vec in zip(polygons, face_vecs):
            outward = points[poly].mean(axis=0) - centroid
            votes += 1 if float(np.dot(vec, outward)) >= 0.0 else -1
        flip = -1.0 if votes < 0 else 1.0
        for poly, vec in zip(polygons, face_vecs):
            area = float(np.linalg.norm(vec))
            acc[poly] += flip * vec
            areas[poly] += area / len(poly)

    lengths = np.linalg.norm(acc, axis=1)
    unreferenced = lengths == 0.0
    if np.any(unreferenced):
        if strict:
            raise FormatError(f"{path}: {int(unreferenced.sum())} points belong to no polygon")
        acc[unreferenced] = (0.0, 0.0, 1.0)
        lengths[unreferenced] = 1.0
    normals = acc / lengths[:, None]
    return SurfaceCloud(points=points, normals=normals, areas=areas)


def write_vtk_surface(path, cloud: SurfaceCloud, fields: FieldQuad | None = None,
                      field_names: dict[str, str] | None = None,
                      title: str = "bwbaero surface") -> None:
    """Write a cloud (as VERTICES polydata) with pointwise scalar arrays."""
    names = dict(DEFAULT_FIELD_NAMES)
    if field_names:
        names.update(field_names)
    n = cloud.n_points
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {n} float\n")
        for row in cloud.points:
            fh.write(f"{float(row[0])!r} {float(row[1])!r} {float(row[2])!r}\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        if fields is not None:
            fields.validate(n)
            fh.write(f"POINT_DATA {n}\n")
            for channel in ("cp", "cfx", "cfy", "cfz"):
                fh.write(f"SCALARS {names[channel]} float 1\nLOOKUP_TABLE default\n")
                for v in getattr(fields, channel):
                    fh.write(f"{float(v)!r}\n")


# ---------------------------------------------------------------------------
# geometry-disjoint splitting

def split_by_geometry(cases, ratio: float = 0.9, seed: int = 0,
                      test_geometry_ids=()) -> DatasetSplit:
    """Assign whole geometries to train/val; tagged geometries go to test.

    Deterministic for a fixed seed. ``cases`` may be CaseRecord objects or
    (case_id, geometry_id) pairs.
    """
    if not (0.0 < ratio < 1.0):
        raise DomainError(f"ratio must lie in (0, 1), got {ratio}")
    pairs = []
    for c in cases:
        if isinstance(c, CaseRecord):
            pairs.append((c.case_id or c.geometry_id, c.geometry_id))
        else:
            pairs.append((c[0], c[1]))
    test_set = set(test_geometry_ids)
    pool = sorted({g for _, g in pairs if g not in test_set})
    if len(pool) < 2:
        raise DomainError("need at least 2 distinct geometries to split")

    rng = np.random.default_rng(seed)
    order = [pool[i] for i in rng.permutation(len(pool))]
    n_val = max(1, round((1.0 - ratio) * len(pool)))
    val_geoms = set(order[:n_val])
    train_geoms = set(order[n_val:])

    split = DatasetSplit(
        train_geometries=sorted(train_geoms),
        val_geometries=sorted(val_geoms),
        test_geometries=sorted(test_set),
    )
    for case_id, geom in pairs:
        if geom in test_set:
            split.test.append(case_id)
        elif geom in val_geoms:
            split.val.append(case_id)
        else:
            split.train.append(case_id)
    return split


# ---------------------------------------------------------------------------
# dataset manifest and directory layout

_MANIFEST_COLUMNS = (("case_id", "geometry_id") + PARAM_NAMES + FLIGHT_NAMES
                     + ("cl", "cd", "cmy"))


def write_manifest(path, records, config_hash: str | None = None) -> None:
    """One delimiter-separated line per case: ids, params, flight, coefficients."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash: {config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(_MANIFEST_COLUMNS)
        for rec in records:
            row = [rec.case_id, rec.geometry_id]
            row += [repr(float(getattr(rec.params, n))) for n in PARAM_NAMES]
            row += [repr(float(getattr(rec.flight, n))) for n in FLIGHT_NAMES]
            if rec.integrated is not None:
                row += [repr(float(rec.integrated.cl)), repr(float(rec.integrated.cd)),
                        repr(float(rec.integrated.cmy))]
            else:
                row += ["", "", ""]
            writer.writerow(row)


def read_manifest(path) -> list[CaseRecord]:
    """Parse a manifest into shallow case records (no clouds or fields)."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != _MANIFEST_COLUMNS:
        raise FormatError(f"{path}: unexpected manifest header")
    for row in reader:
        vals = dict(zip(_MANIFEST_COLUMNS, row))
        params = PlanformParams(**{n: float(vals[n]) for n in PARAM_NAMES})
        flight = FlightCondition(**{n: float(vals[n]) for n in FLIGHT_NAMES})
        integrated = None
        if vals["cl"] != "":
            integrated = IntegratedCoefficients(cl=float(vals["cl"]), cd=float(vals["cd"]),
                                                cmy=float(vals["cmy"]))
        records.append(CaseRecord(geometry_id=vals["geometry_id"], params=params,
                                  flight=flight, integrated=integrated,
                                  case_id=vals["case_id"]))
    return records


def geometry_path(root, geometry_id: str) -> str:
    return os.path.join(root, GEOM_SUBDIR, f"{geometry_id}.bwb")


def case_path(root, case_id: str) -> str:
    return os.path.join(root, CASE_SUBDIR, f"{case_id}.bwb")


def load_geometries(root) -> dict[str, CaseRecord]:
    """All geometry shells in a dataset root, keyed by geometry id."""
    geom_dir = os.path.join(root, GEOM_SUBDIR)
    if not os.path.isdir(geom_dir):
        raise FormatError(f"{root}: missing {GEOM_SUBDIR}/ directory")
    shells = {}
    for name in sorted(os.listdir(geom_dir)):
        if name.endswith(".bwb"):
            rec = read_native(os.path.join(geom_dir, name))
            shells[rec.geometry_id] = rec
    return shells


def load_dataset(root) -> list[CaseRecord]:
    """Manifest cases with fields loaded and clouds resolved from shells.

    Cases of the same geometry share one cloud object in memory.
    """
    records = read_manifest(os.path.join(root, MANIFEST_NAME))
    shells = load_geometries(root)
    for rec in records:
        stored = read_native(case_path(root, rec.case_id))
        rec.fields = stored.fields
        rec.cloud = stored.cloud
        if rec.cloud is None:
            shell = shells.get(rec.geometry_id)
            if shell is None or shell.cloud is None:
                raise FormatError(
                    f"{root}: case {rec.case_id} references missing geometry {rec.geometry_id}")
            rec.cloud = shell.cloud
    return records
