"""Sampled vector fields, the ROBF file format and benchmark field generators."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import CUBE, TORUS, GridDomain

NORMS = {"1": 1, "2": 2, "inf": math.inf}


class FieldFormatError(ValueError):
    pass


def norm_name(p: float) -> str:
    return "inf" if p == math.inf else str(int(p))


def parse_norm(text: str | float | int) -> float:
    key = str(text).strip().lower()
    if key in ("infinity", "max", "math.inf"):
        key = "inf"
    if key not in NORMS:
        raise ValueError(f"norm must be one of 1, 2, inf; got {text!r}")
    return NORMS[key]


def norm(v, p: float = math.inf) -> float:
    """The l_p magnitude of a vector (p in 1, 2, inf)."""
    a = np.abs(np.asarray(v, dtype=float))
    if p == math.inf:
        return float(a.max(initial=0.0))
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(math.sqrt(float((a * a).sum())))
    raise ValueError(f"unsupported norm {p}")


@dataclass
class SampledField:
    """Vertex values of a map ``X -> R^n`` on a grid, with its simplexwise Lipschitz constant.

    ``values`` has shape ``(V, n)`` in row-major vertex order.
    """

    domain: GridDomain
    values: np.ndarray
    alpha: float
    p: float = math.inf
    heuristic_alpha: bool = False

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.shape[0] != self.domain.vertex_count:
            raise ValueError(
                f"{self.values.shape[0]} vertex records for a grid of {self.domain.vertex_count} vertices"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        parse_norm(norm_name(self.p))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def grid_values(self) -> np.ndarray:
        return self.values.reshape(self.domain.shape + (self.n,))

    def max_edge_increment(self) -> float:
        """Largest l_p distance between the values at the two ends of a triangulation edge."""
        d = self.domain
        grid = self.grid_values()
        worst = 0.0
        for mask in range(1, 1 << d.m):
            a, b = _edge_views(d, grid, mask)
            diff = np.abs(a - b)
            if self.p == math.inf:
                inc = diff.max(axis=-1)
            elif self.p == 1:
                inc = diff.sum(axis=-1)
            else:
                inc = np.sqrt((diff * diff).sum(axis=-1))
            if inc.size:
                worst = max(worst, float(inc.max()))
        return worst

    def check_alpha(self) -> bool:
        """Warn (and return False) if some sampled edge increment exceeds alpha."""
        inc = self.max_edge_increment()
        if inc > self.alpha:
            warnings.warn(f"declared alpha {self.alpha} is below a sampled edge increment {inc}")
            return False
        return True


@dataclass
class ObjectiveField:
    """Scalar objective values on the same grid, with their Lipschitz constant."""

    domain: GridDomain
    values: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.shape[0] != self.domain.vertex_count:
            raise ValueError("objective does not match the grid")

    @classmethod
    def from_sampled(cls, field: SampledField) -> ObjectiveField:
        if field.n != 1:
            raise ValueError("an objective field has exactly one component")
        return cls(field.domain, field.values[:, 0], field.alpha)


def _edge_views(d: GridDomain, grid: np.ndarray, mask: int) -> tuple[np.ndarray, np.ndarray]:
    if d.periodic:
        axes = [j for j in range(d.m) if mask >> j & 1]
        return grid, np.roll(grid, [-1] * len(axes), axis=axes)
    lo, hi = [], []
    for j in range(d.m):
        if mask >> j & 1:
            lo.append(slice(0, -1))
            hi.append(slice(1, None))
        else:
            lo.append(slice(None))
            hi.append(slice(None))
    return grid[tuple(lo)], grid[tuple(hi)]


# -- ROBF ---------------------------------------------------------------------


def save_field(field: SampledField, path: str | Path, binary: bool = True) -> None:
    d = field.domain
    header = [
        "robf 1",
        f"topology {d.topology}",
        f"dims {d.m}",
        "grid " + " ".join(str(g) for g in d.resolutions),
        f"codomain {field.n}",
        f"alpha {field.alpha!r}",
        f"norm {norm_name(field.p)}",
        f"data {'binary' if binary else 'text'}",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(field.values.astype("<f8").tobytes())
        else:
            lines = (" ".join(repr(float(x)) for x in row) for row in field.values)
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


def _header_value(line: bytes, key: str) -> list[str]:
    parts = line.decode("ascii", errors="replace").split()
    if not parts or parts[0] != key:
        raise FieldFormatError(f"expected a {key!r} header line, got {line[:60]!r}")
    return parts[1:]


def load_field(path: str | Path) -> SampledField:
    raw = Path(path).read_bytes()
    try:
        return _parse_field(raw)
    except FieldFormatError:
        raise
    except ValueError as exc:
        raise FieldFormatError(f"malformed file: {exc}") from None


def _parse_field(raw: bytes) -> SampledField:
    lines = []
    pos = 0
    for _ in range(8):
        end = raw.find(b"\n", pos)
        if end < 0:
            raise FieldFormatError("truncated header")
        lines.append(raw[pos:end].rstrip(b"\r"))
        pos = end + 1
    if _header_value(lines[0], "robf") != ["1"]:
        raise FieldFormatError("unsupported ROBF version")
    (topology,) = _header_value(lines[1], "topology")
    if topology not in (CUBE, TORUS):
        raise FieldFormatError(f"unknown topology {topology!r}")
    try:
        (m,) = map(int, _header_value(lines[2], "dims"))
        grid = tuple(map(int, _header_value(lines[3], "grid")))
        (n,) = map(int, _header_value(lines[4], "codomain"))
        (alpha,) = map(float, _header_value(lines[5], "alpha"))
    except ValueError as exc:
        raise FieldFormatError(f"malformed header: {exc}") from None
    if len(grid) != m:
        raise FieldFormatError(f"dims {m} but {len(grid)} grid sizes")
    if n < 1:
        raise FieldFormatError("codomain must be positive")
    (p_text,) = _header_value(lines[6], "norm")
    try:
        p = parse_norm(p_text)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from None
    (encoding,) = _header_value(lines[7], "data")
    try:
        domain = GridDomain(grid, topology)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from None
    count = domain.vertex_count
    body = raw[pos:]
    if encoding == "binary":
        if len(body) != 8 * n * count:
            raise FieldFormatError(
                f"binary body has {len(body)} bytes, expected {8 * n * count}"
            )
        values = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(count, n)
    elif encoding == "text":
        rows = [r.split() for r in body.decode("ascii").splitlines() if r.strip()]
        if len(rows) != count:
            raise FieldFormatError(f"{len(rows)} vertex records, expected {count}")
        if any(len(r) != n for r in rows):
            raise FieldFormatError(f"every vertex record needs {n} components")
        try:
            values = np.array(rows, dtype=np.float64)
        except ValueError as exc:
            raise FieldFormatError(str(exc)) from None
    else:
        raise FieldFormatError(f"unknown data encoding {encoding!r}")
    if not np.all(np.isfinite(values)):
        raise FieldFormatError("non-finite field values")
    try:
        return SampledField(domain, values, alpha, p)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from None


# -- generators -----------------------------------------------------------------


def _integer_mesh(domain: GridDomain) -> list[np.ndarray]:
    """Grid coordinates scaled by ``g - 1``: the integers ``2i - (g - 1)``."""
    idx = np.indices(domain.shape).reshape(domain.m, -1)
    return [2 * idx[a] - (g - 1) for a, g in enumerate(domain.shape)]


def _rounded(numerators: list[np.ndarray], denominator: int) -> np.ndarray:
    # Components are exact rationals; equal values round to the same double,
    # so exact ties between components survive into the sampled field.
    return np.stack([np.asarray(num, dtype=np.int64).astype(float) / denominator for num in numerators], axis=1)


def gen_quadratic(n: int, g: int) -> SampledField:
    """``f_1 = x_1^2 - sum_{j>1} x_j^2`` and ``f_j = 2 x_1 x_j`` on the ``g^n`` cube grid."""
    if n < 2 or g < 2:
        raise ValueError("quadratic benchmark needs n >= 2 and g >= 2")
    domain = GridDomain((g,) * n)
    x = _integer_mesh(domain)
    comps = [x[0] ** 2 - sum(x[j] ** 2 for j in range(1, n))]
    comps += [2 * x[0] * x[j] for j in range(1, n)]
    return SampledField(domain, _rounded(comps, (g - 1) ** 2), 4 * n / (g - 1))


def gen_hopf(n: int, g: int) -> SampledField:
    """The Hopf map (n = 3) and its suspensions on the ``g^(n+1)`` cube grid."""
    if n < 3 or g < 2:
        raise ValueError("Hopf benchmark needs n >= 3 and g >= 2")
    domain = GridDomain((g,) * (n + 1))
    x = _integer_mesh(domain)
    comps = [
        2 * x[0] * x[2] + 2 * x[1] * x[3],
        2 * x[1] * x[2] - 2 * x[0] * x[3],
        x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2,
    ]
    comps += [x[k] * (g - 1) for k in range(4, n + 1)]
    return SampledField(domain, _rounded(comps, (g - 1) ** 2), 4 * (n + 1) / (g - 1))


POWER = "power"
GAUSSIAN = "gaussian"


def _spectrum(shape: tuple[int, ...], kind: str, scale: float) -> np.ndarray:
    """Spectral amplitude on the discrete torus (frequencies folded to |p| <= g/2)."""
    if not scale > 0:
        raise ValueError(f"spectrum parameter must be positive, got {scale}")
    sq = np.zeros(shape)
    for axis, g in enumerate(shape):
        freq = np.fft.fftfreq(g, d=1.0 / g)
        view = [1] * len(shape)
        view[axis] = g
        sq = sq + (freq.reshape(view) ** 2)
    if kind == POWER:
        return (1.0 + sq) ** (-scale)
    if kind == GAUSSIAN:
        # Fourier transform of exp(-|x|^2 / (2 l^2)) on a grid of unit spacing.
        k2 = sq * (2 * np.pi / np.array(shape, dtype=float).mean()) ** 2
        return np.exp(-0.5 * scale**2 * k2)
    raise ValueError(f"unknown spectrum {kind!r}")


def _stationary_component(shape: tuple[int, ...], weight: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Real white noise has Hermitian-symmetric Fourier coefficients, so filtering
    # it by a real even weight and transforming back gives a real stationary field.
    noise = rng.standard_normal(shape)
    half = weight[..., : shape[-1] // 2 + 1]
    axes = list(range(len(shape)))
    out = np.fft.irfftn(np.fft.rfftn(noise) * np.sqrt(half), s=shape, axes=axes)
    # Exact marginal variance of the construction, not the sample variance.
    var = weight.sum() / weight.size
    return out / math.sqrt(var)


def gen_gaussian(m: int, g: int, n: int, spectrum: str = POWER, scale: float = 3.0,
                 topology: str = CUBE, seed: int = 0, safety: float = 1.0) -> SampledField:
    """A centred stationary Gaussian random field with unit marginal variance per component.

    Cube fields are synthesized on a ``(2g)^m`` torus and restricted to one
    corner to avoid periodic correlations.  The analysed field is
    ``f(x) - f(x0)`` with ``x0`` the grid midpoint, so ``f(x0) = 0``.  Alpha is
    the largest sampled edge increment times ``safety``.
    """
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    domain = GridDomain((g,) * m, topology)
    synth = (2 * g,) * m if topology == CUBE else (g,) * m
    weight = _spectrum(synth, spectrum, scale)
    rng = np.random.Generator(np.random.Philox(key=seed))
    comps = []
    for _ in range(n):
        comp = _stationary_component(synth, weight, rng)
        comps.append(comp[tuple(slice(0, g) for _ in range(m))].ravel())
    values = np.stack(comps, axis=1)
    centre = domain.vertex_id((g // 2,) * m)
    values = values - values[centre]
    tmp = SampledField(domain, values, 1.0)
    alpha = tmp.max_edge_increment() * safety
    return SampledField(domain, values, alpha if alpha > 0 else 1.0, heuristic_alpha=True)


def quadratic_gradient_bound(coefs: np.ndarray, p: float = math.inf) -> float:
    """Global Lipschitz constant of ``x -> (x^T A_k x)_k`` on ``[-1, 1]^m`` from l_inf to l_p.

    The differential of component k at x applied to h is ``x^T S_k h`` with
    ``S_k = A_k + A_k^T``.  Over the unit l_inf ball in x and h this is
    bilinear, so its maximum is attained at sign vectors and equals
    ``max_{s, t} s^T S_k t``; the components combine under the l_p norm.
    """
    coefs = np.asarray(coefs, dtype=float)
    m = coefs.shape[1]
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    best = 0.0
    for s in signs:
        per = []
        for a in coefs:
            sym = a + a.T
            per.append(np.abs(sym.T @ s).sum())
        per = np.array(per)
        if p == math.inf:
            val = per.max()
        elif p == 1:
            val = per.sum()
        else:
            val = math.sqrt(float((per**2).sum()))
        best = max(best, float(val))
    return best


def gen_random_quadratic(g: int, seed: int = 0, m: int = 4, n: int = 3) -> SampledField:
    """``f_k(x) = sum_ij a^k_ij x_i x_j`` with standard normal coefficients on ``[-1, 1]^m``.

    Alpha is the gradient bound times the l_inf edge length ``2 / (g - 1)`` of
    the triangulation.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    coefs = rng.standard_normal((n, m, m))
    domain = GridDomain((g,) * m)
    x = np.stack([c.ravel() for c in domain.mesh()], axis=1)
    values = np.einsum("vi,kij,vj->vk", x, coefs, x)
    alpha = quadratic_gradient_bound(coefs) * 2.0 / (g - 1)
    return SampledField(domain, values, alpha)


__all__ = [
    "FieldFormatError",
    "ObjectiveField",
    "SampledField",
    "gen_gaussian",
    "gen_hopf",
    "gen_quadratic",
    "gen_random_quadratic",
    "load_field",
    "norm",
    "parse_norm",
    "save_field",
]
