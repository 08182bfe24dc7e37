"""Parametric blended-wing-body surface geometry.

A planform is defined by nine normalized parameters: three chord ratios
(C2/C1, C3/C1, C4/C1), three semispan segment ratios (B1/C1, B2/C1,
B3/C1) and three leading-edge sweep angles (S1, S2, S3, degrees), all
relative to the centerline chord C1. Airfoil sections use a degree-4
class-shape transformation, constant along the span, lofted linearly
between the four planform stations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError

# Sampling bounds for the nine planform parameters, in declaration order.
PARAM_BOUNDS: dict[str, tuple[float, float]] = {
    "c2_over_c1": (0.55, 0.85),
    "c3_over_c1": (0.18, 0.28),
    "c4_over_c1": (0.06, 0.09),
    "b1_over_c1": (0.10, 0.20),
    "b2_over_c1": (0.05, 0.20),
    "b3_over_c1": (0.20, 0.70),
    "s1": (40.0, 60.0),
    "s2": (40.0, 60.0),
    "s3": (24.0, 40.0),
}

PARAM_NAMES: tuple[str, ...] = tuple(PARAM_BOUNDS)

CST_DEGREE = 4
_BINOM = np.array([math.comb(CST_DEGREE, i) for i in range(CST_DEGREE + 1)], dtype=float)


@dataclass(frozen=True)
class PlanformParams:
    """The nine normalized design parameters plus the centerline chord."""

    c2_over_c1: float
    c3_over_c1: float
    c4_over_c1: float
    b1_over_c1: float
    b2_over_c1: float
    b3_over_c1: float
    s1: float
    s2: float
    s3: float
    c1: float = 1.0

    def __post_init__(self):
        for name in ("c2_over_c1", "c3_over_c1", "c4_over_c1",
                     "b1_over_c1", "b2_over_c1", "b3_over_c1", "c1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be strictly positive, got {v}")
        for name in ("s1", "s2", "s3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and -90.0 < v < 90.0):
                raise DomainError(f"sweep {name} must lie in (-90, 90) degrees, got {v}")

    def as_array(self) -> np.ndarray:
        """The nine parameters (without c1) in PARAM_NAMES order."""
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values, c1: float = 1.0) -> "PlanformParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(PARAM_NAMES),):
            raise DomainError(f"expected {len(PARAM_NAMES)} parameters, got shape {values.shape}")
        return cls(**dict(zip(PARAM_NAMES, values.tolist())), c1=c1)

    def validate_bounds(self) -> None:
        """Check every parameter against PARAM_BOUNDS (inclusive)."""
        bad = []
        for name, (lo, hi) in PARAM_BOUNDS.items():
            v = getattr(self, name)
            if not (lo <= v <= hi):
                bad.append(f"{name}={v} outside [{lo}, {hi}]")
        if bad:
            raise DomainError("parameters out of bounds: " + "; ".join(bad))

    @classmethod
    def midpoint(cls, c1: float = 1.0) -> "PlanformParams":
        """Planform at the center of every sampling range."""
        mids = [(lo + hi) / 2.0 for lo, hi in PARAM_BOUNDS.values()]
        return cls.from_array(mids, c1=c1)


@dataclass(frozen=True)
class CstSection:
    """Degree-4 CST airfoil: 5 shape coefficients per surface."""

    upper_coeffs: tuple[float, ...] = (0.15,) * 5
    lower_coeffs: tuple[float, ...] = (0.10,) * 5
    class_n1: float = 0.5
    class_n2: float = 1.0

    def __post_init__(self):
        for name in ("upper_coeffs", "lower_coeffs"):
            coeffs = tuple(float(c) for c in getattr(self, name))
            if len(coeffs) != CST_DEGREE + 1:
                raise DomainError(f"{name} needs {CST_DEGREE + 1} coefficients, got {len(coeffs)}")
            object.__setattr__(self, name, coeffs)


def cst_thickness(psi, coeffs, n1: float = 0.5, n2: float = 1.0):
    """Half-thickness (chord fraction) of a CST surface at chord fraction psi.

    C(psi) = psi^n1 (1-psi)^n2 times the degree-4 Bernstein shape sum; zero
    at both the leading and trailing edge for the default exponents.
    """
    psi = np.asarray(psi, dtype=float)
    if np.any(psi < 0.0) or np.any(psi > 1.0):
        raise DomainError("psi must lie in [0, 1]")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (CST_DEGREE + 1,):
        raise DomainError(f"expected {CST_DEGREE + 1} CST coefficients, got shape {coeffs.shape}")
    cls = psi ** n1 * (1.0 - psi) ** n2
    shape = np.zeros_like(psi)
    for i in range(CST_DEGREE + 1):
        shape = shape + coeffs[i] * _BINOM[i] * psi ** i * (1.0 - psi) ** (CST_DEGREE - i)
    out = cls * shape
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PlanformStations:
    """Spanwise station table: y position, leading-edge x, chord (4 each)."""

    y: np.ndarray
    le_x: np.ndarray
    chord: np.ndarray

    @property
    def semispan(self) -> float:
        return float(self.y[-1])


def build_planform(p: PlanformParams, validate: bool = False) -> PlanformStations:
    """Station table from the planform parameters.

    Stations sit at cumulative spanwise positions 0, B1, B1+B2, B1+B2+B3
    (times C1); the leading edge accumulates B_k * tan(S_k) per segment.
    """
    if validate:
        p.validate_bounds()
    widths = np.array([p.b1_over_c1, p.b2_over_c1, p.b3_over_c1]) * p.c1
    y = np.concatenate(([0.0], np.cumsum(widths)))
    chord = np.array([1.0, p.c2_over_c1, p.c3_over_c1, p.c4_over_c1]) * p.c1
    tans = np.tan(np.radians([p.s1, p.s2, p.s3]))
    if not np.all(np.isfinite(tans)):
        raise DomainError("sweep angle tangent is not finite")
    le_x = np.concatenate(([0.0], np.cumsum(widths * tans)))
    return PlanformStations(y=y, le_x=le_x, chord=chord)


@dataclass
class SurfaceCloud:
    """Sampled surface points with outward unit normals and panel areas."""

    points: np.ndarray   # (N, 3): x streamwise, y spanwise, z up
    normals: np.ndarray  # (N, 3), unit length
    areas: np.ndarray    # (N,), >= 0
    geometry_id: str = ""

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def total_area(self) -> float:
        return float(np.sum(self.areas))

    def validate(self, tol: float = 1e-9) -> None:
        n = self.n_points
        if self.normals.shape != (n, 3) or self.areas.shape != (n,):
            raise DomainError("points/normals/areas lengths disagree")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > tol):
            raise DomainError("normals are not unit length")
        if np.any(self.areas < 0.0) or not np.sum(self.areas) > 0.0:
            raise DomainError("panel areas must be non-negative with positive total")


def _span_grid(stations: PlanformStations, n_span: int) -> np.ndarray:
    """Half-span y grid: ~n_span rows, station positions included exactly."""
    widths = np.diff(stations.y)
    total = widths.sum()
    counts = [max(1, round(n_span * w / total)) for w in widths]  # intervals per segment
    ys = [np.array([0.0])]
    for k, npts in enumerate(counts):
        seg = np.linspace(stations.y[k], stations.y[k + 1], npts + 1)
        ys.append(seg[1:])
    return np.concatenate(ys)


def _sheet_vertices(psi, ys, stations, coeffs, n1, n2, z_sign):
    """Vertex grid (n_chord, n_rows, 3) for one surface sheet."""
    y_abs = np.abs(ys)
    le = np.interp(y_abs, stations.y, stations.le_x)
    chord = np.interp(y_abs, stations.y, stations.chord)
    half = cst_thickness(psi, coeffs, n1, n2)
    x = le[None, :] + psi[:, None] * chord[None, :]
    z = z_sign * half[:, None] * chord[None, :]
    y = np.broadcast_to(ys[None, :], x.shape)
    return np.stack([x, y, z], axis=-1)


def _sheet_normals_areas(verts, outward_z_sign):
    """Per-vertex unit normals and lumped areas from quad face vectors.

    Each quad's area vector (half the cross of its diagonals) is added to
    its four corner vertices; a quarter of its scalar area is lumped onto
    each corner. The sheet is flipped globally if the normal at the
    maximum-|z| crest vertex disagrees with ``outward_z_sign``.
    """
    d1 = verts[1:, 1:] - verts[:-1, :-1]
    d2 = verts[:-1, 1:] - verts[1:, :-1]
    face_vec = 0.5 * np.cross(d1, d2)
    face_area = np.linalg.norm(face_vec, axis=-1)

    acc = np.zeros_like(verts)
    area = np.zeros(verts.shape[:2])
    for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
        acc[di:di + face_vec.shape[0], dj:dj + face_vec.shape[1]] += face_vec
        area[di:di + face_vec.shape[0], dj:dj + face_vec.shape[1]] += 0.25 * face_area

    crest = np.unravel_index(np.argmax(np.abs(verts[..., 2])), verts.shape[:2])
    if acc[crest][2] * outward_z_sign < 0.0:
        acc = -acc
    lengths = np.linalg.norm(acc, axis=-1, keepdims=True)
    if np.any(lengths == 0.0):
        raise DomainError("degenerate surface cell produced a zero normal")
    return acc / lengths, area


def sample_surface(p: PlanformParams, section: CstSection | None = None,
                   n_chord: int = 40, n_span: int = 20, mirror: bool = True,
                   geometry_id: str = "") -> SurfaceCloud:
    """Sample the BWB surface into a point cloud with normals and areas.

    The CST section is lofted linearly between stations on a cosine-spaced
    chordwise grid (resolving the leading edge). Upper and lower sheets are
    emitted separately; ``mirror`` reflects about y=0 without duplicating
    the centerline row. Deterministic for identical inputs.
    """
    if section is None:
        section = CstSection()
    if n_chord < 4 or n_span < 4:
        raise DomainError("n_chord and n_span must each be at least 4")
    stations = build_planform(p)
    if np.any(stations.chord <= 0.0):
        raise DomainError("degenerate station: chord must be positive")

    j = np.arange(n_chord, dtype=float)
    psi = 0.5 * (1.0 - np.cos(np.pi * j / (n_chord - 1)))
    ys = _span_grid(stations, n_span)
    if mirror:
        ys = np.concatenate((-ys[::-1], ys[1:]))

    points, normals, areas = [], [], []
    for coeffs, z_sign in ((section.upper_coeffs, 1.0), (section.lower_coeffs, -1.0)):
        verts = _sheet_vertices(psi, ys, stations, coeffs,
                                section.class_n1, section.class_n2, z_sign)
        nrm, ar = _sheet_normals_areas(verts, z_sign)
        points.append(verts.reshape(-1, 3))
        normals.append(nrm.reshape(-1, 3))
        areas.append(ar.reshape(-1))

    cloud = SurfaceCloud(points=np.concatenate(points),
                         normals=np.concatenate(normals),
                         areas=np.concatenate(areas),
                         geometry_id=geometry_id)
    cloud.validate()
    return cloud


_GEOM_KEYS = PARAM_NAMES + ("c1", "upper_coeffs", "lower_coeffs", "class_n1", "class_n2")


def read_geometry_config(path) -> tuple[PlanformParams, CstSection]:
    """Parse a ``key = value`` geometry config file.

    Lists (CST coefficients) are comma separated. Lines starting with '#'
    are comments. Unknown keys and malformed values raise ParseError with
    the line number.
    """
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
            key, _, val = line.partition("=")
            key = key.strip().lower()
            if key not in _GEOM_KEYS:
                raise ParseError(f"unknown geometry key {key!r}", line=lineno)
            try:
                if key in ("upper_coeffs", "lower_coeffs"):
                    values[key] = tuple(float(tok) for tok in val.split(","))
                else:
                    values[key] = float(val)
            except ValueError:
                raise ParseError(f"malformed value for {key!r}: {val.strip()!r}", line=lineno)
    missing = [k for k in PARAM_NAMES if k not in values]
    if missing:
        raise ParseError(f"missing geometry keys: {', '.join(missing)}")
    params = PlanformParams(**{k: values[k] for k in PARAM_NAMES},
                            c1=values.get("c1", 1.0))
    section = CstSection(
        upper_coeffs=values.get("upper_coeffs", CstSection.upper_coeffs),
        lower_coeffs=values.get("lower_coeffs", CstSection.lower_coeffs),
        class_n1=values.get("class_n1", 0.5),
        class_n2=values.get("class_n2", 1.0),
    )
    return params, section


def write_geometry_config(path, params: PlanformParams,
                          section: CstSection | None = None) -> None:
    section = section or CstSection()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# planform parameters\n")
        for name in PARAM_NAMES:
            fh.write(f"{name} = {getattr(params, name)!r}\n")
        fh.write(f"c1 = {params.c1!r}\n")
        fh.write("# airfoil section\n")
        fh.write("upper_coeffs = " + ", ".join(repr(c) for c in section.upper_coeffs) + "\n")
        fh.write("lower_coeffs = " + ", ".join(repr(c) for c in section.lower_coeffs) + "\n")
        fh.write(f"class_n1 = {section.class_n1!r}\n")
        fh.write(f"class_n2 = {section.class_n2!r}\n")
