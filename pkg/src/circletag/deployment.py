"""Initial robot configurations: generators and the plain-text file format.

Random deployments use numpy's PCG64 bit generator.  Per-trial seeds are
derived from a base seed with :class:`numpy.random.SeedSequence`, so a
batch is reproducible on any platform.

File format (UTF-8, LF)::

    # circletag deployment v1
    # n=3
    # r=1
    # L=10            (only for random deployments)
    # seed=42         (only for random deployments)
    0,0
    3.5,-1.25
    ...

Index 0 (the first data line) is the leader.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

FORMAT_TAG = "circletag deployment v1"
SEED_MAX = 2**64


class DeploymentParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(eq=False)
class Deployment:
    positions: np.ndarray
    comm_range_r: float = 1.0
    region_radius_L: Optional[float] = None
    seed: Optional[int] = None
    center: tuple = field(default=(0.0, 0.0))

    def __post_init__(self):
        pts = np.array(self.positions, dtype=float).reshape(-1, 2)
        if len(pts) < 1:
            raise ValueError("a deployment needs at least one robot")
        if not np.isfinite(pts).all():
            raise ValueError("robot positions must be finite")
        if not self.comm_range_r > 0:
            raise ValueError("communication range must be positive")
        if self.region_radius_L is not None:
            if not self.region_radius_L > 0:
                raise ValueError("region radius must be positive")
            far = np.hypot(*(pts - np.asarray(self.center)).T).max()
            if far > self.region_radius_L * (1 + 1e-12):
                raise ValueError("a robot lies outside the region radius")
        pts.setflags(write=False)
        self.positions = pts

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def leader(self) -> np.ndarray:
        return self.positions[0]

    def normalized(self) -> "Deployment":
        """Same deployment rescaled so that the communication range is 1."""
        r = self.comm_range_r
        if r == 1.0:
            return self
        L = None if self.region_radius_L is None else self.region_radius_L / r
        return Deployment(self.positions / r, 1.0, L, self.seed, tuple(np.asarray(self.center) / r))

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return (self.positions.shape == other.positions.shape
                and bool((self.positions == other.positions).all())
                and self.comm_range_r == other.comm_range_r
                and self.region_radius_L == other.region_radius_L
                and self.seed == other.seed)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Derive an independent 64-bit seed for one trial of a batch."""
    ss = np.random.SeedSequence([_check_seed(base_seed), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def uniform_disk(n: int, L: float, seed: int, r: float = 1.0) -> Deployment:
    """``n`` i.i.d. points uniform over the disk of radius ``L`` at the origin."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not L > 0:
        raise ValueError("L must be positive")
    uv = make_rng(seed).random((n, 2))
    rho = L * np.sqrt(uv[:, 0])
    theta = 2.0 * math.pi * uv[:, 1]
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
    return Deployment(pts, r, L, _check_seed(seed))


def worst_case_path(n: int, M: float, r: float = 1.0) -> Deployment:
    """Collinear robots spaced ``M`` apart with the leader at the left end."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not M > 0:
        raise ValueError("M must be positive")
    xs = np.arange(n, dtype=float) * M
    return Deployment(np.column_stack([xs, np.zeros(n)]), r)


def save_deployment(d: Deployment, out=None) -> bytes:
    lines = [f"# {FORMAT_TAG}", f"# n={d.n}", f"# r={d.comm_range_r!r}"]
    if d.region_radius_L is not None:
        lines.append(f"# L={d.region_radius_L!r}")
    if d.seed is not None:
        lines.append(f"# seed={d.seed}")
    lines.extend(f"{x:.17g},{y:.17g}" for x, y in d.positions)
    data = ("\n".join(lines) + "\n").encode("utf-8")
    if out is not None:
        out.write(data)
    return data


def load_deployment(source: Union[bytes, str, io.IOBase], r: Optional[float] = None) -> Deployment:
    """Parse the deployment file format; ``r`` overrides the file's range."""
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    meta = {}
    pts = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = (value.strip(), lineno)
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DeploymentParseError(lineno, f"expected 'x,y', got {line!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise DeploymentParseError(lineno, f"non-numeric coordinate in {line!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DeploymentParseError(lineno, f"non-finite coordinate in {line!r}")
        pts.append((x, y))
    if not pts:
        raise DeploymentParseError(lineno if text else 1, "no robots in file")

    def meta_value(key, conv):
        if key not in meta:
            return None
        value, lineno = meta[key]
        try:
            return conv(value)
        except ValueError:
            raise DeploymentParseError(lineno, f"bad {key} value {value!r}") from None

    declared_n = meta_value("n", int)
    if declared_n is not None and declared_n != len(pts):
        raise DeploymentParseError(meta["n"][1], f"header declares n={declared_n}, file has {len(pts)} robots")
    file_r = meta_value("r", float)
    comm_r = r if r is not None else (file_r if file_r is not None else 1.0)
    try:
        return Deployment(np.array(pts), comm_r, meta_value("L", float), meta_value("seed", int))
    except ValueError as exc:
        raise DeploymentParseError(1, str(exc)) from None
