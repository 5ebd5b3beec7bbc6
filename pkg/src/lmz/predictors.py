"""Autoregressive next-symbol predictors.

A predictor session alternates ``predict()`` (returns a quantized
distribution over the alphabet) with ``observe(symbol)`` (conditions the
context on the symbol actually coded).  Sessions are replay-deterministic:
the state after observing a symbol sequence is a pure function of the spec
and the sequence, with all probability arithmetic done in exact integers up
to the final quantization.

Built-in kinds:

* ``uniform`` - fixed flat distribution, observe is a no-op.
* ``order0``  - add-one (Laplace) counts over the whole alphabet.
* ``orderK``  - interpolation over context orders k..1 down to the order-0
  estimate: ``P_j = lam(n) * E_j + (1 - lam(n)) * P_{j-1}`` for every
  length-j context seen before (unseen levels are skipped), where ``E_j``
  is the add-quarter estimate ``(4c + 1) / (4n + S)`` over the context's
  counts and the weight grows with the context count n in sixteenths,
  ``lam(n) = floor(144n / (10n + 40)) / 16`` (1/8 at n=1, 9/16 at n=8,
  capped at 7/8).  Count-scaled weights keep barely-seen contexts from
  drowning the learned lower orders, and the quarter-strength smoothing
  keeps unseen-context noise near flat on incompressible input while
  staying sharp on structured input.

External predictors speak the wire protocol; see :mod:`lmz.protocol`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import (
    MAX_ALPHABET,
    TOTAL,
    QuantizedDistribution,
    _HAVE_NUMBA,
    _quantize_exact,
    _quantize_into,
    njit,
    quantize_distribution,
    uniform_distribution,
)
from .errors import PredictorStateError, UnknownPredictorError

BUILTIN_VERSION = "v1"
MAX_ORDER = 8

KIND_UNIFORM = "uniform"
KIND_ORDER0 = "order0"
KIND_ORDERK = "orderK"
KIND_EXTERNAL = "external"
_BUILTIN_KINDS = (KIND_UNIFORM, KIND_ORDER0, KIND_ORDERK)


def _lam16(n: int) -> int:
    """Context-count mixing weight in sixteenths: 2 at n=1 rising to 14."""
    return (144 * n) // (10 * n + 40)


@dataclass(frozen=True)
class PredictorSpec:
    """Identity of a predictor: kind, alphabet, order, exact build tag."""

    kind: str
    alphabet_size: int = 256
    order: int = 0
    version_tag: str = BUILTIN_VERSION

    def __post_init__(self):
        if self.kind not in (*_BUILTIN_KINDS, KIND_EXTERNAL):
            raise UnknownPredictorError(self.kind, "unrecognized kind")
        if not 2 <= self.alphabet_size <= MAX_ALPHABET:
            raise ValueError(f"alphabet_size must be in [2, {MAX_ALPHABET}]")
        if self.kind == KIND_ORDERK and not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in [0, {MAX_ORDER}]")
        if not self.version_tag:
            raise ValueError("version_tag must be non-empty")

    def to_string(self) -> str:
        """Canonical archive-header form, e.g. ``orderK:k=2:S=256:v1``."""
        if self.kind == KIND_ORDERK:
            return f"{self.kind}:k={self.order}:S={self.alphabet_size}:{self.version_tag}"
        return f"{self.kind}:S={self.alphabet_size}:{self.version_tag}"

    @classmethod
    def from_string(cls, s: str) -> "PredictorSpec":
        parts = s.split(":")
        if len(parts) < 3:
            raise UnknownPredictorError(s, "malformed spec string")
        kind = parts[0]
        if kind == KIND_ORDERK:
            if len(parts) != 4 or not parts[1].startswith("k="):
                raise UnknownPredictorError(s, "malformed orderK spec string")
            try:
                order = int(parts[1][2:])
            except ValueError:
                raise UnknownPredictorError(s, "bad order") from None
            s_field, tag = parts[2], parts[3]
        elif kind in (*_BUILTIN_KINDS, KIND_EXTERNAL):
            if len(parts) != 3:
                raise UnknownPredictorError(s, "malformed spec string")
            order = 0
            s_field, tag = parts[1], parts[2]
        else:
            raise UnknownPredictorError(s)
        if not s_field.startswith("S="):
            raise UnknownPredictorError(s, "missing alphabet size")
        try:
            alphabet = int(s_field[2:])
        except ValueError:
            raise UnknownPredictorError(s, "bad alphabet size") from None
        try:
            return cls(kind=kind, alphabet_size=alphabet, order=order, version_tag=tag)
        except (ValueError, UnknownPredictorError):
            raise UnknownPredictorError(s) from None


class PredictorSession:
    """Base session: enforces the strict predict/observe alternation."""

    def __init__(self, spec: PredictorSpec):
        self.spec = spec
        self.tokens_seen = 0
        self._awaiting_observe = False

    def predict(self) -> QuantizedDistribution:
        if self._awaiting_observe:
            raise PredictorStateError("predict() called twice without observe()")
        dist = self._predict()
        self._awaiting_observe = True
        return dist

    def observe(self, symbol: int) -> None:
        if not self._awaiting_observe:
            raise PredictorStateError("observe() called without a preceding predict()")
        if not 0 <= symbol < self.spec.alphabet_size:
            raise PredictorStateError(
                f"symbol {symbol} outside alphabet of size {self.spec.alphabet_size}"
            )
        self._observe(symbol)
        self.tokens_seen += 1
        self._awaiting_observe = False

    def end(self) -> None:
        """Release session resources.  No-op for built-ins."""

    def _predict(self) -> QuantizedDistribution:
        raise NotImplementedError

    def _observe(self, symbol: int) -> None:
        raise NotImplementedError


class UniformSession(PredictorSession):
    def __init__(self, spec: PredictorSpec):
        super().__init__(spec)
        self._dist = uniform_distribution(spec.alphabet_size)

    def _predict(self) -> QuantizedDistribution:
        return self._dist

    def _observe(self, symbol: int) -> None:
        pass


@njit(cache=True)
def _order0_kernel(counts, w, f, cum, comp, scratch):  # pragma: no cover - compiled
    for i in range(counts.shape[0]):
        w[i] = counts[i] + 1
    _quantize_into(w, f, cum, comp, scratch)


@njit(cache=True)
def _interp_kernel(counts0, base, flat, idx, add, w, f, cum, comp, scratch):  # pragma: no cover
    for i in range(counts0.shape[0]):
        w[i] = base * (counts0[i] + 1) + flat
    for t in range(idx.shape[0]):
        w[idx[t]] += add[t]
    _quantize_into(w, f, cum, comp, scratch)


class Order0Session(PredictorSession):
    """Laplace counts: weight of symbol x is count(x) + 1."""

    def __init__(self, spec: PredictorSpec):
        super().__init__(spec)
        S = spec.alphabet_size
        self._counts = np.zeros(S, dtype=np.int64)
        self._wbuf = np.empty(S, dtype=np.int64)
        self._comp = np.empty(S, dtype=np.int64)
        self._scratch = np.empty(S, dtype=np.int64)

    def _predict(self) -> QuantizedDistribution:
        S = self.spec.alphabet_size
        # int64 is ample here: weights are bounded by tokens_seen + 1.
        if _HAVE_NUMBA and (self.tokens_seen + 1) * S * TOTAL < (1 << 62):
            f = np.empty(S, dtype=np.int64)
            cum = np.empty(S + 1, dtype=np.int64)
            _order0_kernel(self._counts, self._wbuf, f, cum, self._comp, self._scratch)
            dist = QuantizedDistribution._trusted(f)
            dist._cum = cum
            return dist
        return quantize_distribution(self._counts + 1, S)

    def _observe(self, symbol: int) -> None:
        self._counts[symbol] += 1


class OrderKSession(PredictorSession):
    """Interpolated context model of maximum order k (see module docstring)."""

    def __init__(self, spec: PredictorSpec):
        super().__init__(spec)
        S = spec.alphabet_size
        self.k = spec.order
        self._counts0 = np.zeros(S, dtype=np.int64)
        # _tables[j] maps a length-j context key to [n, {symbol: count}].
        self._tables: list[dict] = [dict() for _ in range(self.k + 1)]
        self._hist: list[int] = []
        self._wbuf = np.empty(S, dtype=np.int64)
        self._comp = np.empty(S, dtype=np.int64)
        self._scratch = np.empty(S, dtype=np.int64)
        self._bytes_keys = S <= 256

    def _key(self, j: int):
        tail = self._hist[-j:]
        return bytes(tail) if self._bytes_keys else tuple(tail)

    def _active_levels(self):
        # Highest order first; a level participates once its context exists.
        levels = []
        for j in range(min(self.k, len(self._hist)), 0, -1):
            entry = self._tables[j].get(self._key(j))
            if entry is not None:
                levels.append(entry)
        return levels

    def _predict(self) -> QuantizedDistribution:
        S = self.spec.alphabet_size
        levels = self._active_levels()
        m = len(levels)
        T0 = self.tokens_seen + S
        if m == 0:
            if _HAVE_NUMBA and T0 * S * TOTAL < (1 << 62):
                f = np.empty(S, dtype=np.int64)
                cum = np.empty(S + 1, dtype=np.int64)
                _order0_kernel(self._counts0, self._wbuf, f, cum, self._comp, self._scratch)
                dist = QuantizedDistribution._trusted(f)
                dist._cum = cum
                return dist
            return quantize_distribution(self._counts0 + 1, S)

        # Integer weights on the common denominator 16^m * prod(4n_j+S) * T0:
        #   w(x) = base*(c0(x)+1) + sum_i coef_i*(4*c_i(x)+1)
        # where level i (highest order first) carries the mixing weight
        # t_i/16 * prod_{i'<i}(16-t_{i'})/16, so
        #   coef_i = t_i * prod_{i'<i}(16-t_{i'}) * 16^(m-1-i) * T0 * prod_{j!=i}(4n_j+S)
        #   base   = prod_i(16-t_i) * prod_i(4n_i+S).
        dens = [4 * n + S for n, _ in levels]
        prodA = 1
        for d in dens:
            prodA *= d
        flat = 0
        coefs = []
        p16 = 16 ** (m - 1)
        upstream = 1  # prod of (16 - t) over the levels above this one
        for i, ((n, _), d) in enumerate(zip(levels, dens)):
            t = _lam16(n)
            coef = t * upstream * p16 * T0 * (prodA // d)
            coefs.append(coef)
            flat += coef
            upstream *= 16 - t
            p16 //= 16
        base = upstream * prodA
        D = (16**m) * prodA * T0  # == sum of all weights

        if _HAVE_NUMBA and D * TOTAL < (1 << 62) and D * S < (1 << 62):
            n_add = sum(len(cnts) for _, cnts in levels)
            idx = np.empty(n_add, dtype=np.int64)
            add = np.empty(n_add, dtype=np.int64)
            t = 0
            for coef, (_, cnts) in zip(coefs, levels):
                coef4 = 4 * coef
                for sym, c in cnts.items():
                    idx[t] = sym
                    add[t] = coef4 * c
                    t += 1
            f = np.empty(S, dtype=np.int64)
            cum = np.empty(S + 1, dtype=np.int64)
            _interp_kernel(
                self._counts0, base, flat, idx, add,
                self._wbuf, f, cum, self._comp, self._scratch,
            )
            dist = QuantizedDistribution._trusted(f)
            dist._cum = cum
            return dist

        # Arbitrary-precision fallback, bit-identical by construction.
        w = [base * (int(c) + 1) + flat for c in self._counts0]
        for coef, (_, cnts) in zip(coefs, levels):
            coef4 = 4 * coef
            for sym, c in cnts.items():
                w[sym] += coef4 * c
        return QuantizedDistribution._trusted(_quantize_exact(w, S))

    def _observe(self, symbol: int) -> None:
        self._counts0[symbol] += 1
        for j in range(1, min(self.k, len(self._hist)) + 1):
            key = self._key(j)
            entry = self._tables[j].get(key)
            if entry is None:
                self._tables[j][key] = [1, {symbol: 1}]
            else:
                entry[0] += 1
                cnts = entry[1]
                cnts[symbol] = cnts.get(symbol, 0) + 1
        self._hist.append(symbol)
        if len(self._hist) > self.k:
            del self._hist[0]


def begin_session(spec: PredictorSpec) -> PredictorSession:
    """Fresh session with empty context for a built-in predictor.

    External predictors need a live connection; use
    :func:`lmz.protocol.connect` and its ``begin_session``.
    """
    if spec.kind == KIND_UNIFORM:
        return UniformSession(spec)
    if spec.kind == KIND_ORDER0:
        return Order0Session(spec)
    if spec.kind == KIND_ORDERK:
        return OrderKSession(spec)
    if spec.kind == KIND_EXTERNAL:
        raise UnknownPredictorError(
            spec.to_string(), "external predictors require a connection"
        )
    raise UnknownPredictorError(spec.kind)


def resolve_builtin(spec_string: str) -> PredictorSpec:
    """Parse an archive spec string and check it names this build's predictor.

    Raises :class:`UnknownPredictorError` for foreign kinds or version tags,
    so decompression fails fast rather than silently mis-modeling.
    """
    spec = PredictorSpec.from_string(spec_string)
    if spec.kind == KIND_EXTERNAL:
        return spec
    if spec.version_tag != BUILTIN_VERSION:
        raise UnknownPredictorError(
            spec_string,
            f"built-in predictors are version {BUILTIN_VERSION!r}, archive wants {spec.version_tag!r}",
        )
    return spec
