"""Single-particle harmonic-oscillator basis and contact-interaction integrals.

Units throughout: hbar = m = omega = a_ho = 1.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import roots_hermite

log = logging.getLogger(__name__)

CACHE_FORMAT_VERSION = 1
_PI_QUARTER = np.pi ** -0.25


@dataclass(frozen=True)
class HoParams:
    n_max: int
    quad_order: int | None = None

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.quad_order is None:
            object.__setattr__(self, "quad_order", 2 * self.n_max + 2)
        if self.quad_order < 2 * self.n_max + 2:
            raise ValueError(
                f"quad_order={self.quad_order} too small for n_max={self.n_max} "
                f"(need >= {2 * self.n_max + 2})"
            )


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Hermite rule for the weight exp(-x**2)."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_hermite(cls, order: int) -> "QuadratureGrid":
        x, w = roots_hermite(order)
        return cls(x, w)

    def integrate(self, f) -> float:
        """Integrate ``f(x) * exp(-x**2)`` over the real line."""
        return float(np.dot(self.weights, f(self.nodes)))


def ho_energy(n: int) -> float:
    if n < 0:
        raise ValueError(f"HO quantum number must be >= 0, got {n}")
    return n + 0.5


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized HO eigenfunctions phi_0..phi_n_max at ``x``.

    Returns an array of shape ``(n_max + 1,) + shape(x)``. Uses the
    normalized three-term recurrence, so it stays finite for large n.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = x * np.sqrt(2.0 / (n + 1)) * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def eval_ho(n: int, x, n_max: int | None = None):
    if n < 0 or (n_max is not None and n > n_max):
        raise ValueError(f"HO index {n} out of range [0, {n_max}]")
    val = hermite_functions(n, x)[n]
    return float(val) if np.ndim(val) == 0 else val


def _scaled_orbitals(n_max: int, quad_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Orbital values and weights for integrals of four HO functions.

    phi_a phi_b phi_c phi_d = exp(-2x^2) * poly(x); with x = u/sqrt(2) the
    Gauss-Hermite rule in u is exact for the polynomial part. The
    exp(u^2) compensation is spread as exp(u^2/4) over each orbital.
    """
    u, w = roots_hermite(quad_order)
    x = u / np.sqrt(2.0)
    phi = hermite_functions(n_max, x) * np.exp(0.25 * u * u)
    return phi, w / np.sqrt(2.0)


def sorted_tuples(n_max: int) -> np.ndarray:
    return np.array(
        list(itertools.combinations_with_replacement(range(n_max + 1), 4)), dtype=np.int64
    ).reshape(-1, 4)


@dataclass
class DeltaIntegralTable:
    """I[a,b,c,d] = int phi_a phi_b phi_c phi_d dx for all indices <= n_max.

    Values are computed once per sorted index tuple and copied to every
    permutation, so lookups are bit-identical under index permutation.
    """

    params: HoParams
    full: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, params: HoParams) -> "DeltaIntegralTable":
        n = params.n_max
        phi, w = _scaled_orbitals(n, params.quad_order)
        tup = sorted_tuples(n)
        vals = np.empty(len(tup))
        chunk = 20000
        for s in range(0, len(tup), chunk):
            t = tup[s:s + chunk]
            prod = phi[t[:, 0]] * phi[t[:, 1]] * phi[t[:, 2]] * phi[t[:, 3]]
            vals[s:s + chunk] = prod @ w
        vals[tup.sum(axis=1) % 2 == 1] = 0.0
        full = np.empty((n + 1,) * 4)
        for perm in set(itertools.permutations(range(4))):
            full[tuple(tup[:, p] for p in perm)] = vals
        full.flags.writeable = False
        table = cls(params, full)
        table._check_bound()
        return table

    @property
    def n_max(self) -> int:
        return self.params.n_max

    def __call__(self, a: int, b: int, c: int, d: int) -> float:
        for i in (a, b, c, d):
            if i < 0 or i > self.n_max:
                raise IndexError(f"HO index {i} out of range [0, {self.n_max}]")
        return float(self.full[a, b, c, d])

    def _check_bound(self):
        if not np.all(np.isfinite(self.full)):
            raise FloatingPointError("non-finite delta integral")
        bad = np.abs(self.full) > self.full[0, 0, 0, 0] * (1 + 1e-12)
        if bad.any():
            log.warning("%d delta integrals exceed I_0000 in magnitude", int(bad.sum()))

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.full).tobytes()).hexdigest()

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez(
                fh,
                version=np.int64(CACHE_FORMAT_VERSION),
                n_max=np.int64(self.params.n_max),
                quad_order=np.int64(self.params.quad_order),
                checksum=np.array(self.checksum()),
                table=self.full,
            )
        tmp.replace(path)

    @classmethod
    def load(cls, path, params: HoParams) -> "DeltaIntegralTable":
        with np.load(path) as data:
            if int(data["version"]) != CACHE_FORMAT_VERSION:
                raise ValueError(f"cache format version {int(data['version'])} unsupported")
            key = (int(data["n_max"]), int(data["quad_order"]))
            if key != (params.n_max, params.quad_order):
                raise ValueError(f"cache key {key} does not match {(params.n_max, params.quad_order)}")
            full = np.array(data["table"])
            expected = str(data["checksum"])
        table = cls(params, full)
        if table.checksum() != expected:
            raise ValueError(f"cache checksum mismatch in {path}")
        full.flags.writeable = False
        return table

    @classmethod
    def cached(cls, params: HoParams, cache_dir=None) -> "DeltaIntegralTable":
        """Build the table, reusing ``cache_dir`` when given."""
        if cache_dir is None:
            return cls.build(params)
        path = Path(cache_dir) / f"delta_n{params.n_max}_q{params.quad_order}.npz"
        if path.exists():
            try:
                return cls.load(path, params)
            except (ValueError, KeyError, OSError) as exc:
                log.warning("ignoring bad integral cache %s: %s", path, exc)
        table = cls.build(params)
        path.parent.mkdir(parents=True, exist_ok=True)
        table.save(path)
        return table


def delta_integral(table: DeltaIntegralTable, a: int, b: int, c: int, d: int) -> float:
    return table(a, b, c, d)
