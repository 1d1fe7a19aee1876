"""Reader for the EUC_2D subset of the TSPLIB instance format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_WEIGHT_TYPES = ("EUC_2D",)


class TsplibError(ValueError):
    pass


class DimensionMismatchError(TsplibError):
    pass


class UnsupportedWeightTypeError(TsplibError):
    pass


class MissingEOFError(TsplibError):
    pass


@dataclass
class TsplibInstance:
    name: str
    dimension: int
    coords: np.ndarray = field(repr=False)


def parse_tsplib(text: str) -> TsplibInstance:
    """Parse NAME / TYPE / DIMENSION / EDGE_WEIGHT_TYPE headers and a
    NODE_COORD_SECTION terminated by EOF.

    Node ids are 1-based in the file; cities are returned 0-based in file order.
    """
    header = {}
    coords = []
    in_coords = False
    saw_eof = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            saw_eof = True
            break
        if line.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        if in_coords:
            parts = line.split()
            if len(parts) != 3:
                raise TsplibError(f"line {lineno}: expected 'id x y', got {line!r}")
            try:
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise TsplibError(f"line {lineno}: non-numeric coordinate in {line!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise TsplibError(f"line {lineno}: non-finite coordinate")
            coords.append((x, y))
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise TsplibError(f"line {lineno}: expected 'KEY: value', got {line!r}")
        header[key.strip().upper()] = value.strip()

    if not saw_eof:
        raise MissingEOFError("instance is not terminated by EOF")
    kind = header.get("TYPE", "TSP")
    if kind != "TSP":
        raise TsplibError(f"TYPE {kind!r} not supported; only TSP")
    weight = header.get("EDGE_WEIGHT_TYPE")
    if weight not in SUPPORTED_WEIGHT_TYPES:
        raise UnsupportedWeightTypeError(
            f"EDGE_WEIGHT_TYPE {weight!r} not supported; supported: {', '.join(SUPPORTED_WEIGHT_TYPES)}"
        )
    if "DIMENSION" not in header:
        raise TsplibError("missing DIMENSION")
    try:
        dimension = int(header["DIMENSION"])
    except ValueError:
        raise TsplibError(f"DIMENSION {header['DIMENSION']!r} is not an integer") from None
    if dimension != len(coords):
        raise DimensionMismatchError(f"DIMENSION {dimension} but {len(coords)} coordinate lines")
    return TsplibInstance(header.get("NAME", ""), dimension, np.array(coords, dtype=float).reshape(-1, 2))


def write_tsplib(name: str, coords) -> str:
    coords = np.asarray(coords, dtype=float)
    lines = [f"NAME: {name}", "TYPE: TSP", f"DIMENSION: {len(coords)}", "EDGE_WEIGHT_TYPE: EUC_2D", "NODE_COORD_SECTION"]
    lines += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(coords.tolist())]
    lines.append("EOF")
    return "\n".join(lines) + "\n"
