"""File formats: ENVI cubes, masks, score maps, priors and run configs."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .core import NORMALIZATION_MODES, GroundTruth, ScoreMap, SpectralCube, TargetPriorSet


class EnviHeaderError(ValueError):
    """Missing or malformed header field."""


class UnsupportedDataType(ValueError):
    pass


class TruncatedDataError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# ENVI data type code -> numpy base dtype
ENVI_DTYPES = {
    1: np.uint8,
    2: np.int16,
    3: np.int32,
    4: np.float32,
    5: np.float64,
    12: np.uint16,
    13: np.uint32,
    14: np.int64,
    15: np.uint64,
}
_DTYPE_CODES = {np.dtype(v).str[1:]: k for k, v in ENVI_DTYPES.items()}
INTERLEAVES = ("bsq", "bil", "bip")


@dataclass(frozen=True)
class EnviHeader:
    samples: int
    lines: int
    bands: int
    interleave: str
    data_type: int
    byte_order: int = 0  # 0 little endian, 1 big endian
    header_offset: int = 0

    def dtype(self) -> np.dtype:
        base = np.dtype(ENVI_DTYPES[self.data_type])
        return base.newbyteorder("<" if self.byte_order == 0 else ">")

    def expected_bytes(self) -> int:
        return self.header_offset + self.samples * self.lines * self.bands * self.dtype().itemsize


_MANDATORY = ("samples", "lines", "bands", "interleave", "data type", "byte order")


def parse_envi_header(text: str) -> EnviHeader:
    if not text.lstrip().upper().startswith("ENVI"):
        raise EnviHeaderError("header does not start with 'ENVI'")
    fields_ = {}
    # values may be wrapped in braces and span lines
    for m in re.finditer(r"^\s*([^=\n]+?)\s*=\s*(\{[^}]*\}|[^\n]*)", text, re.M):
        fields_[m.group(1).strip().lower()] = m.group(2).strip()
    for key in _MANDATORY:
        if key not in fields_:
            raise EnviHeaderError(f"ENVI header is missing mandatory field '{key}'")
    try:
        hdr = dict(
            samples=int(fields_["samples"]),
            lines=int(fields_["lines"]),
            bands=int(fields_["bands"]),
            interleave=fields_["interleave"].lower(),
            data_type=int(fields_["data type"]),
            byte_order=int(fields_["byte order"]),
            header_offset=int(fields_.get("header offset", 0)),
        )
    except ValueError as exc:
        raise EnviHeaderError(f"malformed ENVI header value: {exc}") from exc
    if min(hdr["samples"], hdr["lines"], hdr["bands"]) < 1:
        raise EnviHeaderError("samples, lines and bands must be >= 1")
    if hdr["interleave"] not in INTERLEAVES:
        raise EnviHeaderError(f"unknown interleave '{hdr['interleave']}'")
    if hdr["byte_order"] not in (0, 1):
        raise EnviHeaderError("byte order must be 0 or 1")
    if hdr["data_type"] not in ENVI_DTYPES:
        raise UnsupportedDataType(f"unsupported ENVI data type code {hdr['data_type']}")
    return EnviHeader(**hdr)


def _to_bip(raw, hdr: EnviHeader) -> np.ndarray:
    """Reorder a flat sample array into (lines, samples, bands)."""
    L, S, B = hdr.lines, hdr.samples, hdr.bands
    if hdr.interleave == "bsq":
        return raw.reshape(B, L, S).transpose(1, 2, 0)
    if hdr.interleave == "bil":
        return raw.reshape(L, B, S).transpose(0, 2, 1)
    return raw.reshape(L, S, B)


def load_envi(header_path, data_path=None) -> SpectralCube:
    """Read an ENVI cube; ``data_path`` defaults to the header path minus
    its ``.hdr`` suffix."""
    header_path = Path(header_path)
    hdr = parse_envi_header(header_path.read_text())
    if data_path is None:
        data_path = header_path.with_suffix("") if header_path.suffix == ".hdr" else header_path
    raw = Path(data_path).read_bytes()
    if len(raw) < hdr.expected_bytes():
        raise TruncatedDataError(
            f"{data_path}: {len(raw)} bytes, header requires {hdr.expected_bytes()}")
    n = hdr.samples * hdr.lines * hdr.bands
    values = np.frombuffer(raw, dtype=hdr.dtype(), count=n, offset=hdr.header_offset)
    image = _to_bip(values.astype(np.float64), hdr)
    return SpectralCube.from_image(image)


def write_envi(cube: SpectralCube, header_path, data_path=None, interleave="bsq",
               data_type=5, byte_order=0) -> None:
    if interleave not in INTERLEAVES:
        raise ValueError(f"unknown interleave '{interleave}'")
    header_path = Path(header_path)
    if data_path is None:
        data_path = header_path.with_suffix("")
    hdr = EnviHeader(cube.width, cube.height, cube.bands, interleave, data_type, byte_order)
    img = cube.to_image()  # (lines, samples, bands)
    if interleave == "bsq":
        arr = img.transpose(2, 0, 1)
    elif interleave == "bil":
        arr = img.transpose(0, 2, 1)
    else:
        arr = img
    Path(data_path).write_bytes(np.ascontiguousarray(arr).astype(hdr.dtype()).tobytes())
    header_path.write_text(
        "ENVI\n"
        f"samples = {hdr.samples}\n"
        f"lines = {hdr.lines}\n"
        f"bands = {hdr.bands}\n"
        "header offset = 0\n"
        "file type = ENVI Standard\n"
        f"data type = {hdr.data_type}\n"
        f"interleave = {interleave}\n"
        f"byte order = {byte_order}\n"
    )


def load_csv_cube(path, width: int, height: int) -> SpectralCube:
    """One pixel per row, comma separated bands, row-major pixel order."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return SpectralCube(width, height, data)


# --------------------------------------------------------------------------
# masks


def load_mask(path, width: int, height: int) -> GroundTruth:
    """Read a 0/1 mask stored as whitespace/comma separated text, a binary
    PGM (P5), or a raw 8-bit raster of exactly ``width*height`` bytes."""
    raw = Path(path).read_bytes()
    n = width * height
    if raw.startswith(b"P5"):
        values = _read_pgm(raw)
    elif len(raw) == n and not _looks_textual(raw):
        values = np.frombuffer(raw, dtype=np.uint8)
    else:
        tokens = re.split(rb"[\s,]+", raw.strip())
        values = np.array([float(t) for t in tokens if t], dtype=np.float64)
    values = np.ravel(values)
    if values.size != n:
        raise ValueError(f"{path}: mask has {values.size} values, expected {width}x{height}={n}")
    return GroundTruth(width, height, (values != 0).astype(np.int8))


def _looks_textual(raw: bytes) -> bool:
    return all(c in b"0123456789., \t\r\n-+eE" for c in raw)


def write_mask(truth: GroundTruth, path) -> None:
    img = truth.labels.reshape(truth.height, truth.width)
    with open(path, "w") as fh:
        for row in img:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def _read_pgm(raw: bytes) -> np.ndarray:
    tokens, pos = [], 2
    while len(tokens) < 3:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\d+)").match(raw, pos)
        tokens.append(int(m.group(2)))
        pos = m.end()
    w, h, maxval = tokens
    pos += 1  # single whitespace before the raster
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw, dtype=dtype, count=w * h, offset=pos).reshape(h, w)


# --------------------------------------------------------------------------
# score maps


def write_score_map(smap: ScoreMap, path, format: str | None = None) -> None:
    """Write a score map as CSV (one line per image row, round-trip float
    precision) or as a 16-bit binary PGM rescaled affinely to [0, 65535]."""
    path = Path(path)
    if format is None:
        format = "pgm16" if path.suffix.lower() == ".pgm" else "csv"
    img = smap.to_image()
    if format == "csv":
        with open(path, "w") as fh:
            for row in img:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    elif format == "pgm16":
        lo, hi = float(img.min()), float(img.max())
        if hi > lo:
            scaled = np.rint((img - lo) / (hi - lo) * 65535.0)
        else:
            scaled = np.zeros_like(img)
        header = f"P5\n{smap.width} {smap.height}\n65535\n".encode()
        with open(path, "wb") as fh:
            fh.write(header + scaled.astype(">u2").tobytes())
    else:
        raise ValueError(f"unknown score map format {format!r}")


def read_score_map(path) -> ScoreMap:
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"P5"):
        img = _read_pgm(raw).astype(np.float64)
    else:
        img = np.loadtxt(path, delimiter=",", ndmin=2)
    h, w = img.shape
    return ScoreMap(w, h, img.ravel())


# --------------------------------------------------------------------------
# priors


def load_prior_spectra(path) -> TargetPriorSet:
    return TargetPriorSet(np.loadtxt(path, delimiter=",", ndmin=2))


def write_prior_spectra(priors: TargetPriorSet, path) -> None:
    with open(path, "w") as fh:
        for row in priors.spectra:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_prior_coords(path, cube: SpectralCube) -> TargetPriorSet:
    """Look up priors from a file of ``row,col`` pixel coordinates."""
    rc = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.int64)
    if rc.shape[1] != 2:
        raise ValueError(f"{path}: expected 'row,col' per line")
    rows, cols = rc[:, 0], rc[:, 1]
    if (rows < 0).any() or (rows >= cube.height).any() or (cols < 0).any() \
            or (cols >= cube.width).any():
        raise ValueError(f"{path}: prior coordinate outside the {cube.width}x{cube.height} image")
    return TargetPriorSet(cube.data[rows * cube.width + cols])


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of a detection run.

    Defaults for learning rate, batch size, layer widths and prior count
    are the reference training settings; the rest are package defaults.
    """

    normalization: str = "per-band-minmax"
    ridge: str = "auto"
    fraction: float = 0.01
    k_target: int = 2
    k_background: int = 5
    kmeans_restarts: int = 5
    kmeans_max_iter: int = 100
    temperature: float = 0.5
    mix_noise: float = 0.0
    conv_channels: int = 8
    kernel: int = 3
    hidden: int = 128
    embed_dim: int = 64
    learning_rate: float = 1e-4
    batch_size: int = 128
    pretext_epochs: int = 10
    pretext_batches: int = 20
    npair_epochs: int = 10
    npair_steps: int = 20
    npair_classes: int = 0  # 0: every eligible sub-category
    npair_tuplets: int = 0  # 0: enough tuplet sets to fill batch_size
    hard_mining: bool = True
    n_priors: int = 10
    seed: int = 0
    cube: str = ""
    mask: str = ""
    priors: str = ""
    prior_coords: str = ""
    output_dir: str = ""

    def __post_init__(self):
        checks = {
            "normalization": self.normalization in NORMALIZATION_MODES,
            "fraction": 0.0 < self.fraction < 1.0,
            "k_target": self.k_target >= 1,
            "k_background": self.k_background >= 1,
            "kmeans_restarts": self.kmeans_restarts >= 1,
            "kmeans_max_iter": self.kmeans_max_iter >= 1,
            "temperature": self.temperature > 0,
            "mix_noise": self.mix_noise >= 0,
            "conv_channels": self.conv_channels >= 1,
            "kernel": self.kernel >= 1 and self.kernel % 2 == 1,
            "hidden": self.hidden >= 1,
            "embed_dim": self.embed_dim >= 1,
            "learning_rate": self.learning_rate > 0,
            "batch_size": self.batch_size >= 2,
            "pretext_epochs": self.pretext_epochs >= 0,
            "pretext_batches": self.pretext_batches >= 1,
            "npair_epochs": self.npair_epochs >= 0,
            "npair_steps": self.npair_steps >= 1,
            "npair_classes": self.npair_classes == 0 or self.npair_classes >= 2,
            "npair_tuplets": self.npair_tuplets >= 0,
            "n_priors": self.n_priors >= 1,
            "ridge": self.ridge == "auto" or _is_nonneg_float(self.ridge),
        }
        for key, ok in checks.items():
            if not ok:
                raise ConfigError(f"config value out of range: {key} = {getattr(self, key)!r}")

    def replace(self, **changes) -> "PipelineConfig":
        from dataclasses import replace
        return replace(self, **changes)

    def ridge_value(self):
        return "auto" if self.ridge == "auto" else float(self.ridge)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _is_nonneg_float(s) -> bool:
    try:
        v = float(s)
    except ValueError:
        return False
    return math.isfinite(v) and v >= 0


def _coerce(key, text, typ):
    if typ is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key '{key}': expected a boolean, got {text!r}")
    try:
        return typ(text)
    except ValueError as exc:
        raise ConfigError(f"config key '{key}': cannot parse {text!r}") from exc


_FIELD_TYPES = {"str": str, "int": int, "float": float, "bool": bool}


def parse_config(text: str, **overrides) -> PipelineConfig:
    """Parse ``key = value`` lines (``#`` comments, blank lines ignored)."""
    types = {f.name: _FIELD_TYPES[f.type] for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = _coerce(key, val, types[key])
    for key, val in overrides.items():
        if key not in types:
            raise ConfigError(f"unknown config key '{key}'")
        if val is not None:
            values[key] = _coerce(key, val, types[key]) if isinstance(val, str) else val
    return PipelineConfig(**values)


def load_config(path=None, **overrides) -> PipelineConfig:
    text = Path(path).read_text() if path else ""
    return parse_config(text, **overrides)


def write_config(config: PipelineConfig, path) -> None:
    with open(path, "w") as fh:
        for key, val in config.as_dict().items():
            fh.write(f"{key} = {str(val).lower() if isinstance(val, bool) else val}\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
