"""Text formats: field snapshots as CSV and grayscale images as plain PGM."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from nlskt.grid import Domain, Field, State

FLOAT = ".17g"


def fmt(x) -> str:
    return format(float(x), FLOAT)


def write_rows(path, header, rows) -> None:
    """CSV with ``\\n`` line ends and round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _domain_comment(domain: Domain) -> str:
    parts = [f"dim={domain.dim}"]
    parts += [f"lower={';'.join(fmt(v) for v in domain.lower)}",
              f"upper={';'.join(fmt(v) for v in domain.upper)}",
              f"cells={';'.join(str(n) for n in domain.cells)}"]
    return "# " + " ".join(parts)


def _parse_comment(line: str) -> Domain:
    kv = dict(p.split("=", 1) for p in line.lstrip("# ").split())
    nums = lambda s: tuple(float(v) for v in s.split(";"))
    return Domain(nums(kv["lower"]), nums(kv["upper"]), tuple(int(v) for v in kv["cells"].split(";")))


def state_to_csv(state: State) -> str:
    """Snapshot text: a domain comment line, a header, one row per cell."""
    dom = state.domain
    coords = dom.coords().reshape(-1, dom.dim)
    names = ["x", "y"][:dom.dim]
    buf = io.StringIO()
    buf.write(_domain_comment(dom) + f" t={fmt(state.t)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["u1", "u2"])
    for c, a, b in zip(coords, state.u1.values.ravel(), state.u2.values.ravel()):
        w.writerow([fmt(v) for v in c] + [fmt(a), fmt(b)])
    return buf.getvalue()


def write_state(path, state: State) -> None:
    Path(path).write_text(state_to_csv(state))


def read_state(path) -> State:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing domain comment line")
    dom = _parse_comment(lines[0].split(" t=")[0])
    t = float(lines[0].split(" t=")[1]) if " t=" in lines[0] else 0.0
    rows = list(csv.reader(lines[1:]))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if body.shape[0] != dom.size:
        raise ValueError(f"{path}: {body.shape[0]} rows for {dom.size} cells")
    return State.from_arrays(dom, body[:, header.index("u1")], body[:, header.index("u2")], t)


def write_pgm(path, image: Field, maxval: int = 255, lo: float | None = None, hi: float | None = None) -> None:
    """Plain (P2) graymap; values are mapped linearly from ``[lo, hi]``."""
    v = image.values
    if v.ndim != 2:
        raise ValueError("PGM output needs a 2D field")
    lo = float(v.min()) if lo is None else lo
    hi = float(v.max()) if hi is None else hi
    scale = maxval / (hi - lo) if hi > lo else 0.0
    q = np.clip(np.rint((v - lo) * scale), 0, maxval).astype(int)
    rows, cols = q.shape
    with open(path, "w", newline="") as fh:
        fh.write(f"P2\n{cols} {rows}\n{maxval}\n")
        for r in q:
            fh.write(" ".join(str(x) for x in r) + "\n")


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Pixel array (rows, cols) and maxval of a plain graymap."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM file")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    px = np.array(tokens[4:], dtype=float)
    if px.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} pixels, found {px.size}")
    return px.reshape(rows, cols), maxval


def image_field(pixels: np.ndarray, pixel_size: float = 1.0) -> Field:
    """Field on ``(0, rows) x (0, cols)`` (in pixel units) holding the image."""
    rows, cols = pixels.shape
    dom = Domain((0.0, 0.0), (rows * pixel_size, cols * pixel_size), (rows, cols))
    return Field(dom, pixels)
