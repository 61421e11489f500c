"""MNT template files and dataset manifests.

MNT v1 is a transparent, diff-able text format (UTF-8, LF line endings):

    MNT 1
    <width> <height>          positive integers, pixels
    <count>                   non-negative integer
    <x> <y> <direction> <type> <quality>    exactly count records

Records use `.` as the decimal separator; type is E (ending) or B
(bifurcation). Lines starting with `#` and blank lines are ignored.

Dataset directories hold files named `<subject>_<impression>.mnt`; the
manifest is implied by the directory contents, there is no manifest file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateEntryError, FormatError, RangeError
from .model import Minutia, MinutiaTemplate, MinutiaType

_MAGIC = "MNT"
_VERSION = "1"
_STEM_RE = re.compile(r"(\d+)_(\d+)")


@dataclass(frozen=True)
class ManifestEntry:
    subject: int
    impression: int
    path: Path


@dataclass(frozen=True)
class DatasetManifest:
    """Discovered dataset files keyed by (subject, impression)."""

    entries: tuple[ManifestEntry, ...]
    name: str

    def __len__(self) -> int:
        return len(self.entries)


def _meaningful_lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        out.append(line)
    return out


def _parse_float(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"non-numeric {what}: {token!r}") from None


def parse_template(text: str, template_id: str = "") -> MinutiaTemplate:
    """Parse MNT text into a validated template.

    Raises:
        FormatError: bad magic/version, malformed numbers, or wrong counts.
        RangeError: direction outside [0, 360), quality outside [0, 1], or
            a position outside the declared image box.
    """
    lines = _meaningful_lines(text)
    if len(lines) < 3:
        raise FormatError("truncated template: header lines missing")
    if lines[0].split() != [_MAGIC, _VERSION]:
        raise FormatError(f"bad magic/version line: {lines[0]!r}")

    dims = lines[1].split()
    if len(dims) != 2:
        raise FormatError(f"expected '<width> <height>', got {lines[1]!r}")
    try:
        width, height = int(dims[0]), int(dims[1])
    except ValueError:
        raise FormatError(f"non-integer image size: {lines[1]!r}") from None
    if width <= 0 or height <= 0:
        raise FormatError(f"image size must be positive, got {width}x{height}")

    try:
        count = int(lines[2])
    except ValueError:
        raise FormatError(f"non-integer minutia count: {lines[2]!r}") from None
    if count < 0:
        raise FormatError(f"negative minutia count: {count}")

    records = lines[3:]
    if len(records) != count:
        raise FormatError(f"expected {count} records, found {len(records)}")

    minutiae = []
    for lineno, record in enumerate(records, start=1):
        parts = record.split()
        if len(parts) != 5:
            raise FormatError(
                f"record {lineno}: expected 5 fields, got {len(parts)}"
            )
        x = _parse_float(parts[0], "x")
        y = _parse_float(parts[1], "y")
        direction = _parse_float(parts[2], "direction")
        if parts[3] not in ("E", "B"):
            raise FormatError(f"record {lineno}: unknown minutia type {parts[3]!r}")
        quality = _parse_float(parts[4], "quality")

        if not 0.0 <= direction < 360.0:
            raise RangeError(f"record {lineno}: direction {direction} not in [0, 360)")
        if not 0.0 <= quality <= 1.0:
            raise RangeError(f"record {lineno}: quality {quality} not in [0, 1]")
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise RangeError(
                f"record {lineno}: position ({x}, {y}) outside {width}x{height}"
            )
        minutiae.append(
            Minutia(x, y, direction, MinutiaType(parts[3]), quality)
        )
    return MinutiaTemplate(tuple(minutiae), width, height, template_id)


def _format_direction(direction: float) -> str:
    s = f"{direction:.6f}"
    # 359.9999996 would round into the excluded endpoint; wrap it.
    return "0.000000" if s == "360.000000" else s


def write_template(t: MinutiaTemplate) -> str:
    """Serialize a template; parse(write(t)) round-trips to 6 decimals."""
    lines = [f"{_MAGIC} {_VERSION}", f"{t.width} {t.height}", str(len(t))]
    for m in t.minutiae:
        lines.append(
            f"{m.x:.6f} {m.y:.6f} {_format_direction(m.direction)} "
            f"{m.mtype.value} {m.quality:.6f}"
        )
    return "\n".join(lines) + "\n"


def load_template(path: str | Path) -> MinutiaTemplate:
    """Read and parse an MNT file; the file stem becomes the template id."""
    p = Path(path)
    return parse_template(p.read_text(encoding="utf-8"), template_id=p.stem)


def save_template(t: MinutiaTemplate, path: str | Path) -> None:
    Path(path).write_text(write_template(t), encoding="utf-8", newline="\n")


def scan_dataset(root: str | Path, pattern: str = "*.mnt") -> DatasetManifest:
    """Discover `<subject>_<impression>.mnt` files under a directory.

    Files matching the glob pattern whose stem is not `<int>_<int>` are
    ignored. Entries come back sorted by (subject, impression).

    Raises:
        NotADirectoryError: root does not exist or is not a directory.
        DuplicateEntryError: two files map to the same (subject, impression).
    """
    rootp = Path(root)
    if not rootp.is_dir():
        raise NotADirectoryError(f"not a dataset directory: {rootp}")
    found: dict[tuple[int, int], ManifestEntry] = {}
    for path in sorted(rootp.glob(pattern)):
        m = _STEM_RE.fullmatch(path.stem)
        if not m:
            continue
        key = (int(m.group(1)), int(m.group(2)))
        if key in found:
            raise DuplicateEntryError(
                f"duplicate subject/impression {key}: {found[key].path.name} "
                f"and {path.name}"
            )
        found[key] = ManifestEntry(key[0], key[1], path)
    entries = tuple(found[k] for k in sorted(found))
    return DatasetManifest(entries, name=rootp.name)
