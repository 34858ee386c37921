"""Extended-range numbers and shell sampling schedules.

Two representations live here:

* :class:`ScalePoint`, a scalar stored as ``(sign, logmag)``.  This is the
  user-facing type (CLI arguments, CSV columns, schedule radii).
* :class:`ScaleBatch`, a batch of vectors stored as ``exp(scale) * mant``
  with one float ``scale`` per row.  Germs are evaluated on batches.  Keeping
  a shared exponent per row means that sums and differences of nearby points
  at depth ``e^-1e9`` are ordinary float operations on the mantissas, so no
  precision is lost to the size of the exponent.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

#: beyond this gap in log-magnitude, :func:`sp_add` returns the dominant term
SATURATION_GAP = 700.0

# mantissa rescaling is only done while the factor stays a normal double
_MIN_FACTOR = 1e-290


@dataclass(frozen=True, eq=False)
class ScalePoint:
    """Real number ``sign * exp(logmag)``; ``sign == 0`` is exactly zero."""

    sign: int
    logmag: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign != 0 and not math.isfinite(self.logmag):
            raise ValueError("logmag must be finite for a nonzero ScalePoint")

    @classmethod
    def from_float(cls, x: float) -> ScalePoint:
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r}")
        if x == 0.0:
            return ZERO
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def exp(cls, logmag: float, sign: int = 1) -> ScalePoint:
        return cls(sign, float(logmag))

    def to_float(self) -> float:
        """Ordinary float value; under/overflows like ``math.exp``."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.logmag)
        except OverflowError:
            return self.sign * math.inf

    def __eq__(self, other):
        if not isinstance(other, ScalePoint):
            return NotImplemented
        if self.sign != other.sign:
            return False
        return self.sign == 0 or self.logmag == other.logmag

    def __hash__(self):
        return hash((0, 0.0)) if self.sign == 0 else hash((self.sign, self.logmag))

    def __neg__(self) -> ScalePoint:
        return ScalePoint(-self.sign, self.logmag) if self.sign else self

    def __abs__(self) -> ScalePoint:
        return ScalePoint(1, self.logmag) if self.sign else self

    def __mul__(self, other: ScalePoint) -> ScalePoint:
        return sp_mul(self, other)

    def __add__(self, other: ScalePoint) -> ScalePoint:
        return sp_add(self, other)

    def __sub__(self, other: ScalePoint) -> ScalePoint:
        return sp_add(self, -other)

    def __str__(self):
        if self.sign == 0:
            return "0"
        return f"{'+' if self.sign > 0 else '-'}exp({self.logmag!r})"

    def __repr__(self):
        return f"ScalePoint({self})"

    @classmethod
    def parse(cls, text: str) -> ScalePoint:
        """Parse ``+exp(L)``, ``-exp(L)``, ``exp(L)``, ``0`` or a plain float."""
        t = text.strip()
        m = _TEXT_RE.fullmatch(t)
        if m:
            sign = -1 if m.group(1) == "-" else 1
            return cls(sign, float(m.group(2)))
        try:
            return cls.from_float(float(t))
        except ValueError:
            raise ValueError(f"not a ScalePoint: {text!r}") from None


_TEXT_RE = re.compile(r"([+-]?)exp\(\s*([^()\s]+)\s*\)")

ZERO = ScalePoint(0, 0.0)
ONE = ScalePoint(1, 0.0)


def sp_mul(x: ScalePoint, y: ScalePoint) -> ScalePoint:
    if x.sign == 0 or y.sign == 0:
        return ZERO
    return ScalePoint(x.sign * y.sign, x.logmag + y.logmag)


def sp_add(x: ScalePoint, y: ScalePoint) -> ScalePoint:
    """Sum by log-sum-exp on the dominant magnitude.

    Exact when one operand is zero.  When the log-magnitudes differ by more
    than ``SATURATION_GAP`` the dominant operand is returned unchanged.
    """
    if x.sign == 0:
        return y
    if y.sign == 0:
        return x
    big, small = (x, y) if x.logmag >= y.logmag else (y, x)
    gap = small.logmag - big.logmag
    if gap < -SATURATION_GAP:
        return big
    if big.sign == small.sign:
        return ScalePoint(big.sign, big.logmag + math.log1p(math.exp(gap)))
    if gap == 0.0:
        return ZERO
    return ScalePoint(big.sign, big.logmag + math.log1p(-math.exp(gap)))


# ---------------------------------------------------------------------------
# batches


class ScaleBatch:
    """``N`` vectors of dimension ``d``; row ``i`` is ``exp(scale[i]) * mant[i]``.

    A row whose mantissa is all zeros is the zero vector and its scale is
    irrelevant.  Instances are treated as immutable.
    """

    __slots__ = ("scale", "mant")

    def __init__(self, scale, mant):
        mant = np.asarray(mant, dtype=float)
        if mant.ndim == 1:
            mant = mant[:, None]
        scale = np.broadcast_to(np.asarray(scale, dtype=float), mant.shape[:1])
        self.scale = scale
        self.mant = mant

    # construction ---------------------------------------------------------

    @classmethod
    def from_float(cls, x) -> ScaleBatch:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.ndim == 1:
            x = x[:, None]
        return cls(np.zeros(x.shape[0]), x)

    @classmethod
    def from_logmag(cls, sign, logmag, direction=None) -> ScaleBatch:
        """Rows ``sign * exp(logmag)`` (1-d) or ``exp(logmag) * direction``."""
        logmag = np.asarray(logmag, dtype=float)
        if direction is None:
            mant = np.asarray(sign, dtype=float).reshape(-1, 1)
        else:
            mant = np.asarray(direction, dtype=float)
        scale = np.where(np.isfinite(logmag), logmag, 0.0)
        return cls(scale, mant)

    @classmethod
    def from_points(cls, points) -> ScaleBatch:
        pts = list(points)
        sign = np.array([p.sign for p in pts], dtype=float)
        logm = np.array([p.logmag if p.sign else 0.0 for p in pts])
        return cls(logm, sign[:, None])

    @classmethod
    def zeros(cls, n: int, dim: int) -> ScaleBatch:
        return cls(np.zeros(n), np.zeros((n, dim)))

    # basic properties -----------------------------------------------------

    def __len__(self):
        return self.mant.shape[0]

    @property
    def dim(self) -> int:
        return self.mant.shape[1]

    def __getitem__(self, idx) -> ScaleBatch:
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return ScaleBatch(self.scale[idx], self.mant[idx])

    def is_zero(self) -> np.ndarray:
        return ~np.any(self.mant != 0.0, axis=1)

    def norm_log(self) -> np.ndarray:
        """Natural log of the Euclidean row norms (``-inf`` for zero rows)."""
        with np.errstate(divide="ignore"):
            return self.scale + np.log(np.linalg.norm(self.mant, axis=1))

    def sign(self) -> np.ndarray:
        """Sign of the single component (1-d batches)."""
        return np.sign(self.mant[:, 0])

    def logmag(self) -> np.ndarray:
        """Log-magnitude of the single component (1-d batches)."""
        with np.errstate(divide="ignore"):
            return self.scale + np.log(np.abs(self.mant[:, 0]))

    def to_float(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            out = self.mant * np.exp(self.scale)[:, None]
        out[self.mant == 0.0] = 0.0
        return out

    def to_points(self) -> list[ScalePoint]:
        s = self.sign()
        lm = self.logmag()
        return [ZERO if si == 0 else ScalePoint(int(si), float(li)) for si, li in zip(s, lm)]

    # arithmetic -----------------------------------------------------------

    def __neg__(self) -> ScaleBatch:
        return ScaleBatch(self.scale, -self.mant)

    def __add__(self, other: ScaleBatch) -> ScaleBatch:
        za, zb = self.is_zero(), other.is_zero()
        s = np.where(za, other.scale, np.where(zb, self.scale, np.maximum(self.scale, other.scale)))
        with np.errstate(over="ignore", under="ignore"):
            fa = np.where(za, 0.0, np.exp(np.where(za, 0.0, self.scale - s)))
            fb = np.where(zb, 0.0, np.exp(np.where(zb, 0.0, other.scale - s)))
        return ScaleBatch(s, self.mant * fa[:, None] + other.mant * fb[:, None])

    def __sub__(self, other: ScaleBatch) -> ScaleBatch:
        return self + (-other)

    def times(self, factor) -> ScaleBatch:
        """Multiply rows by ordinary floats (scalar or per-row)."""
        f = np.asarray(factor, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        return ScaleBatch(self.scale, self.mant * f)

    def scaled(self, log_factor, factor=None) -> ScaleBatch:
        """Multiply every row by ``exp(log_factor)`` (a positive scalar).

        If ``factor`` (the same number as a float) is given and is a normal
        double, the mantissas are multiplied directly, which keeps products
        such as ``3**-n * x`` rounded once.
        """
        if factor is not None and factor >= _MIN_FACTOR:
            return ScaleBatch(self.scale, self.mant * factor)
        return ScaleBatch(self.scale + log_factor, self.mant)

    def matmul(self, matrix) -> ScaleBatch:
        """Rows ``matrix @ x``."""
        return ScaleBatch(self.scale, self.mant @ np.asarray(matrix, dtype=float).T)

    def concat(self, *others: ScaleBatch) -> ScaleBatch:
        parts = (self,) + others
        return ScaleBatch(
            np.concatenate([p.scale for p in parts]), np.concatenate([p.mant for p in parts])
        )

    def hstack(self, other: ScaleBatch) -> ScaleBatch:
        """Row-wise concatenation of components ``(x, y)``."""
        s = np.maximum(np.where(self.is_zero(), -np.inf, self.scale),
                       np.where(other.is_zero(), -np.inf, other.scale))
        s = np.where(np.isfinite(s), s, 0.0)
        with np.errstate(under="ignore"):
            fa = np.exp(np.minimum(self.scale - s, 0.0))
            fb = np.exp(np.minimum(other.scale - s, 0.0))
        return ScaleBatch(s, np.hstack([self.mant * fa[:, None], other.mant * fb[:, None]]))

    def split_rows(self):
        """Return ``(lognorm, unit)`` with ``row = exp(lognorm) * unit``.

        Zero rows get ``lognorm = -inf`` and a zero ``unit``.
        """
        n = np.linalg.norm(self.mant, axis=1)
        safe = np.where(n > 0, n, 1.0)
        with np.errstate(divide="ignore"):
            lognorm = self.scale + np.log(n)
        return lognorm, self.mant / safe[:, None]


def norm_ratio(num: ScaleBatch, den: ScaleBatch) -> np.ndarray:
    """Row-wise ``||num|| / ||den||`` as floats (``nan`` where ``den`` is zero)."""
    nn = np.linalg.norm(num.mant, axis=1)
    dn = np.linalg.norm(den.mant, axis=1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        out = (nn / dn) * np.exp(num.scale - den.scale)
    out = np.where(nn == 0.0, 0.0, out)
    return np.where(dn == 0.0, np.nan, out)


# ---------------------------------------------------------------------------
# shell schedules


@dataclass(frozen=True)
class ShellSchedule:
    """Geometric shells ``r_{j+1} < |x| <= r_j`` with ``r_j = r0 * ratio**j``.

    ``log_ratio`` may be given instead of ``ratio`` for ratios below the
    float range (``ratio`` is then derived and may be 0.0).
    """

    r0: ScalePoint = ONE
    ratio: float = 0.5
    shells: int = 200
    samples_per_shell: int = 256
    rng_seed: int = 0
    log_ratio: float | None = None

    def __post_init__(self):
        if self.r0.sign != 1:
            raise ValueError("r0 must be positive")
        if self.log_ratio is None:
            if not 0.0 < self.ratio < 1.0:
                raise ValueError("ratio must lie in (0, 1)")
            object.__setattr__(self, "log_ratio", math.log(self.ratio))
        else:
            if not self.log_ratio < 0.0:
                raise ValueError("log_ratio must be negative")
            object.__setattr__(self, "ratio", math.exp(self.log_ratio))
        if self.shells < 1 or self.samples_per_shell < 1:
            raise ValueError("shells and samples_per_shell must be positive")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")

    @classmethod
    def from_logs(cls, log_r0: float, log_ratio: float, shells: int,
                  samples_per_shell: int = 256, rng_seed: int = 0) -> ShellSchedule:
        return cls(ScalePoint(1, float(log_r0)), 0.5, shells, samples_per_shell, rng_seed,
                   log_ratio=float(log_ratio))

    def replace(self, **changes) -> ShellSchedule:
        fields = dict(r0=self.r0, shells=self.shells, samples_per_shell=self.samples_per_shell,
                      rng_seed=self.rng_seed)
        if "ratio" in changes:
            fields["ratio"] = changes.pop("ratio")
        else:
            fields["log_ratio"] = changes.pop("log_ratio", self.log_ratio)
        fields.update(changes)
        return ShellSchedule(**fields)

    @property
    def step(self) -> float:
        """Width of one shell in log-magnitude."""
        return -self.log_ratio

    def radius_log(self, j) -> np.ndarray:
        """Log of the outer radius of shell ``j`` (``j = shells`` is the floor)."""
        return self.r0.logmag + np.asarray(j, dtype=float) * self.log_ratio

    def radius(self, j: int) -> ScalePoint:
        return ScalePoint(1, float(self.radius_log(j)))

    def shell_of(self, lognorm) -> np.ndarray:
        """Shell index containing a point of the given log-norm (clipped)."""
        idx = np.floor((self.r0.logmag - np.asarray(lognorm)) / self.step)
        idx = np.where(np.isfinite(idx), idx, self.shells - 1)
        return np.clip(idx, 0, self.shells - 1).astype(int)

    def rng(self, j: int, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.rng_seed, j, stream])

    def log_samples(self, j: int) -> np.ndarray:
        """Stratified log-uniform log-magnitudes in ``(log r_{j+1}, log r_j]``."""
        if not 0 <= j < self.shells:
            raise IndexError(f"shell index {j} out of range for {self.shells} shells")
        rng = self.rng(j)
        n = self.samples_per_shell
        u = (np.arange(n) + rng.random(n)) / n
        return self.radius_log(j) - u * self.step

    def batch(self, j: int, dim: int = 1) -> ScaleBatch:
        logs = self.log_samples(j)
        rng = self.rng(j, 1)
        if dim == 1:
            return ScaleBatch.from_logmag(rng.choice([-1.0, 1.0], size=logs.size), logs)
        d = rng.standard_normal((logs.size, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return ScaleBatch.from_logmag(None, logs, direction=d)

    def all_batches(self, dim: int = 1) -> tuple[ScaleBatch, np.ndarray]:
        """All shell samples stacked, with their shell indices."""
        parts = [self.batch(j, dim) for j in range(self.shells)]
        idx = np.repeat(np.arange(self.shells), self.samples_per_shell)
        return parts[0].concat(*parts[1:]), idx


def shell_points(s: ShellSchedule, shell_index: int) -> list[ScalePoint]:
    """The 1-d sample points of one shell."""
    return s.batch(shell_index, 1).to_points()


def default_schedule(**overrides) -> ShellSchedule:
    """``r0 = 1``, ratio 1/2, 200 shells, 256 samples per shell."""
    return ShellSchedule(**overrides)


def deep_schedule(depth: float, shells: int = 400, samples_per_shell: int = 256,
                  rng_seed: int = 0, log_r0: float = 0.0) -> ShellSchedule:
    """Schedule whose innermost radius is ``exp(log_r0 - depth)``."""
    return ShellSchedule.from_logs(log_r0, -float(depth) / shells, shells, samples_per_shell,
                                   rng_seed)
