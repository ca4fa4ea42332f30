"""Order-independent realisation of the host field and parasite randomness.

A :class:`HostField` hands out, for one ``(seed, trial)``:

* ``U_x`` uniform on (0, 1), deciding immunity (susceptible iff ``U_x <= p``),
* ``A_x`` the offspring count released when the host at ``x`` is infected,
* walk steps ``Y^{x,i}_n`` of the parasite labelled ``(x, i)``,
* jump directions ``D^x_k`` used by the vertex-wise construction.

Every value is a keyed hash of the trial key, a domain tag, the vertex
fingerprint and a counter, so it does not depend on query order and the same
field can drive runs at different ``p`` and both constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import keyed
from .graphs import GraphSpec


class OffspringError(ValueError):
    pass


@dataclass(frozen=True)
class OffspringSpec:
    """Offspring law on the non-negative integers.

    kinds: ``deterministic`` (k), ``poisson`` (lam), ``geometric`` (q: success
    probability, ``P(A=k) = q (1-q)^k``), ``finite`` (weights: mapping value ->
    probability).
    """

    kind: str
    k: int | None = None
    lam: float | None = None
    q: float | None = None
    weights: tuple[tuple[int, float], ...] | None = None
    _cdf: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == "deterministic":
            if self.k is None or self.k < 0:
                raise OffspringError("deterministic offspring needs k >= 0")
        elif self.kind == "poisson":
            if self.lam is None or not 0 <= self.lam <= 30:
                raise OffspringError("poisson offspring needs 0 <= lam <= 30")
        elif self.kind == "geometric":
            if self.q is None or not 0 < self.q <= 1:
                raise OffspringError("geometric offspring needs 0 < q <= 1")
        elif self.kind == "finite":
            if not self.weights:
                raise OffspringError("finite offspring needs weights")
            ws = tuple(sorted((int(v), float(w)) for v, w in dict(self.weights).items()))
            if any(v < 0 or w < 0 for v, w in ws):
                raise OffspringError("finite offspring values and weights must be >= 0")
            if abs(sum(w for _, w in ws) - 1.0) > 1e-12:
                raise OffspringError(f"finite offspring weights sum to {sum(w for _, w in ws)!r}, not 1")
            object.__setattr__(self, "weights", ws)
        else:
            raise OffspringError(f"unknown offspring kind {self.kind!r}")
        object.__setattr__(self, "_cdf", self._build_cdf())

    # constructors -----------------------------------------------------------
    @classmethod
    def deterministic(cls, k: int) -> "OffspringSpec":
        return cls("deterministic", k=k)

    @classmethod
    def poisson(cls, lam: float) -> "OffspringSpec":
        return cls("poisson", lam=lam)

    @classmethod
    def geometric(cls, q: float) -> "OffspringSpec":
        return cls("geometric", q=q)

    @classmethod
    def finite(cls, weights: dict) -> "OffspringSpec":
        return cls("finite", weights=tuple(weights.items()))

    @classmethod
    def from_dict(cls, data: dict) -> "OffspringSpec":
        data = dict(data)
        kind = data.pop("kind", None)
        params = data.pop("params", data)
        if kind == "finite":
            w = params.get("weights", params)
            return cls.finite({int(k): float(v) for k, v in w.items()})
        try:
            return cls(kind, **params)
        except TypeError as exc:
            raise OffspringError(f"bad parameters for {kind}: {exc}") from None

    def to_dict(self) -> dict:
        if self.kind == "deterministic":
            return {"kind": "deterministic", "params": {"k": self.k}}
        if self.kind == "poisson":
            return {"kind": "poisson", "params": {"lam": self.lam}}
        if self.kind == "geometric":
            return {"kind": "geometric", "params": {"q": self.q}}
        return {"kind": "finite", "params": {"weights": {str(v): w for v, w in self.weights}}}

    def __str__(self) -> str:
        if self.kind == "deterministic":
            return f"Deterministic({self.k})"
        if self.kind == "poisson":
            return f"Poisson({self.lam})"
        if self.kind == "geometric":
            return f"Geometric({self.q})"
        return "FinitePMF{" + ", ".join(f"{v}:{w}" for v, w in self.weights) + "}"

    # exact quantities -------------------------------------------------------
    def mean(self) -> float:
        if self.kind == "deterministic":
            return float(self.k)
        if self.kind == "poisson":
            return float(self.lam)
        if self.kind == "geometric":
            return (1 - self.q) / self.q
        return math.fsum(v * w for v, w in self.weights)

    def p_zero(self) -> float:
        return self.pmf(0)

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.kind == "deterministic":
            return 1.0 if k == self.k else 0.0
        if self.kind == "poisson":
            return math.exp(-self.lam + k * math.log(self.lam) - math.lgamma(k + 1)) if self.lam > 0 else float(k == 0)
        if self.kind == "geometric":
            return self.q * (1 - self.q) ** k
        return dict(self.weights).get(k, 0.0)

    def pgf(self, s: float) -> float:
        if self.kind == "deterministic":
            return s ** self.k
        if self.kind == "poisson":
            return math.exp(self.lam * (s - 1))
        if self.kind == "geometric":
            return self.q / (1 - (1 - self.q) * s)
        return math.fsum(w * s ** v for v, w in self.weights)

    def pgf_derivative(self, s: float) -> float:
        if self.kind == "deterministic":
            return self.k * s ** (self.k - 1) if self.k else 0.0
        if self.kind == "poisson":
            return self.lam * math.exp(self.lam * (s - 1))
        if self.kind == "geometric":
            return self.q * (1 - self.q) / (1 - (1 - self.q) * s) ** 2
        return math.fsum(w * v * s ** (v - 1) for v, w in self.weights if v)

    def conditioned_positive(self) -> "OffspringSpec":
        """Law of ``A`` given ``A >= 1``."""
        p0 = self.p_zero()
        if p0 >= 1:
            raise OffspringError("A = 0 almost surely; cannot condition on A >= 1")
        if p0 == 0:
            return self
        if self.kind == "finite":
            return OffspringSpec.finite({v: w / (1 - p0) for v, w in self.weights if v >= 1})
        # truncate the tail where the remaining mass is below double precision
        ws, k, mass = {}, 1, 0.0
        while mass < 1 - p0 - 1e-17 and k < 10_000:
            w = self.pmf(k)
            ws[k] = w
            mass += w
            k += 1
        total = math.fsum(ws.values())
        return OffspringSpec.finite({v: w / total for v, w in ws.items() if w > 0})

    # sampling ---------------------------------------------------------------
    def _build_cdf(self):
        if self.kind == "deterministic":
            return None
        if self.kind == "finite":
            values = np.array([v for v, _ in self.weights], dtype=np.int64)
            cdf = np.cumsum([w for _, w in self.weights])
            cdf[-1] = 1.0
            return values, cdf
        if self.kind == "poisson":
            # exact CDF walk, tabulated until the tail is below 2^-60
            values, cdf, acc, k = [], [], 0.0, 0
            while True:
                acc += self.pmf(k)
                values.append(k)
                cdf.append(acc)
                k += 1
                if 1 - acc < 2.0 ** -60 or k > 200:
                    break
            cdf[-1] = 1.0
            return np.array(values, dtype=np.int64), np.array(cdf)
        return None

    def from_uniform(self, u: float) -> int:
        """Inverse-CDF draw from a uniform ``u`` in (0, 1)."""
        if self.kind == "deterministic":
            return self.k
        if self.kind == "geometric":
            if self.q == 1:
                return 0
            return int(math.floor(math.log(u) / math.log(1 - self.q)))
        values, cdf = self._cdf
        return int(values[min(int(np.searchsorted(cdf, u, side="left")), len(values) - 1)])

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(u.shape, self.k, dtype=np.int64)
        if self.kind == "geometric":
            if self.q == 1:
                return np.zeros(u.shape, dtype=np.int64)
            return np.floor(np.log(u) / math.log(1 - self.q)).astype(np.int64)
        values, cdf = self._cdf
        return values[np.minimum(np.searchsorted(cdf, u, side="left"), len(values) - 1)]


class HostField:
    """Lazily revealed per-vertex randomness for one trial.

    Values are derived, never drawn, so the memo tables only save work; they
    cannot change what a query returns.
    """

    def __init__(self, graph: GraphSpec, offspring: OffspringSpec, seed: int, trial: int = 0):
        self.graph = graph
        self.offspring = offspring
        self.seed = seed
        self.trial = trial
        key = keyed.trial_key(seed, trial)
        self.key = key
        self.key_u = keyed.derive(key, keyed.TAG_U)
        self.key_a = keyed.derive(key, keyed.TAG_A)
        self.key_y = keyed.derive(key, keyed.TAG_Y)
        self.key_d = keyed.derive(key, keyed.TAG_D)
        self._fp: dict = {}
        self._fp_cache: dict = {}

    def fingerprint(self, v) -> int:
        h = self._fp.get(v)
        if h is None:
            h = self.graph.fingerprint_cached(v, self._fp_cache)
            self._fp[v] = h
        return h

    # per-vertex keys from a known fingerprint (used by the engines' arenas)
    def uniform_fp(self, fp: int) -> float:
        return keyed.to_unit(keyed.derive(self.key_u, fp))

    def uniform_fps(self, fps: np.ndarray) -> np.ndarray:
        return keyed.to_unit_np(keyed.derive_np(self.key_u, fps.view(np.int64)))

    def offspring_fp(self, fp: int) -> int:
        return self.offspring.from_uniform(keyed.to_unit(keyed.derive(self.key_a, fp)))

    def direction_key_fp(self, fp: int) -> int:
        return keyed.derive(self.key_d, fp)

    def label_key_fp(self, fp: int, index: int) -> int:
        return keyed.derive(keyed.derive(self.key_y, fp), index)

    # public queries ---------------------------------------------------------
    def uniform(self, v) -> float:
        return self.uniform_fp(self.fingerprint(v))

    def susceptible(self, v, p: float) -> bool:
        return self.uniform(v) <= p

    def offspring_count(self, v) -> int:
        return self.offspring_fp(self.fingerprint(v))

    def walk_step(self, label: tuple, n: int, current):
        """Position after step ``n`` (``n >= 1``) of the walk labelled
        ``label = (birth vertex, index)`` currently at ``current``."""
        x, i = label
        u = keyed.to_unit(keyed.stream(self.label_key_fp(self.fingerprint(x), i), n))
        return self.graph.neighbor(current, int(u * self.graph.degree(current)))

    def jump_direction(self, v, k: int):
        """Target of the ``k``-th jump (``k >= 1``) ever made from ``v``."""
        if k < 1:
            raise ValueError("jump counter starts at 1")
        u = keyed.to_unit(keyed.stream(self.direction_key_fp(self.fingerprint(v)), k))
        return self.graph.neighbor(v, int(u * self.graph.degree(v)))


def host_immunity(field: HostField, v, p: float) -> str:
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return "susceptible" if field.susceptible(v, p) else "immune"


def offspring_count(field: HostField, v) -> int:
    return field.offspring_count(v)


def walk_step(field: HostField, label: tuple, n: int, current):
    return field.walk_step(label, n, current)


def jump_direction(field: HostField, v, k: int):
    return field.jump_direction(v, k)
