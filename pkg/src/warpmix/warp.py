"""Monotone Gaussianizing transformation stacks.

A stack is an ordered composition of elementary strictly-increasing maps:
sinh-arcsinh ("sal"-style) steps with free shape parameters, Box-Cox and
log steps for non-negative responses, a constant shift for zero handling,
and data-derived standardization steps.  Two templates are provided: the
default stack standardizes, applies D sinh-arcsinh steps, and standardizes
again; the non-negative stack prepends shift + Box-Cox.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, SpecificationError

SINH_ARCSINH = "sinh_arcsinh"
BOX_COX = "box_cox"
LOG = "log"
STANDARDIZE = "standardize"
SHIFT = "shift"

_KINDS = (SINH_ARCSINH, BOX_COX, LOG, STANDARDIZE, SHIFT)
_N_PARAMS = {SINH_ARCSINH: 4, BOX_COX: 1, LOG: 0, STANDARDIZE: 2, SHIFT: 1}

# Identity parameters for a sinh-arcsinh step: w1 + w2*sinh(w3*asinh(y) - w4).
IDENTITY_SA = (0.0, 1.0, 1.0, 0.0)

# Smallest admissible value of min(y) + c ahead of a log/Box-Cox step.
SHIFT_FLOOR = 1e-8
_LOG_TINY = math.log(1e-12)


@dataclass(frozen=True)
class WarpStep:
    """One elementary transformation.

    ``params`` are held on the natural (constrained) scale.  ``trainable``
    marks which entries the likelihood optimizer may move; standardize
    steps are always data-derived and never trainable.  ``shift_min`` is
    the data-derived lower bound on the shift constant.
    """

    kind: str
    params: tuple[float, ...] = ()
    trainable: tuple[bool, ...] = ()
    shift_min: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecificationError(f"unknown step kind {self.kind!r}")
        if len(self.params) != _N_PARAMS[self.kind]:
            raise SpecificationError(
                f"{self.kind} expects {_N_PARAMS[self.kind]} parameters, "
                f"got {len(self.params)}"
            )
        if len(self.trainable) != len(self.params):
            object.__setattr__(self, "trainable", self._default_trainable())
        if self.kind == SINH_ARCSINH and (self.params[1] <= 0 or self.params[2] <= 0):
            raise SpecificationError(
                "sinh_arcsinh scale parameters must be positive"
            )
        if self.kind == STANDARDIZE and self.params[1] <= 0:
            raise SpecificationError("standardize scale must be positive")

    def _default_trainable(self):
        if self.kind == STANDARDIZE:
            return (False, False)
        return (True,) * _N_PARAMS[self.kind]

    @property
    def n_trainable(self):
        return sum(self.trainable)


def sa_step(params=IDENTITY_SA):
    return WarpStep(SINH_ARCSINH, tuple(float(p) for p in params))


def standardize_step(loc=0.0, scale=1.0):
    return WarpStep(STANDARDIZE, (float(loc), float(scale)), (False, False))


def box_cox_step(lam=1.0):
    return WarpStep(BOX_COX, (float(lam),))


def log_step():
    return WarpStep(LOG)


def shift_step(c=0.0, shift_min=0.0):
    return WarpStep(SHIFT, (float(c),), (True,), shift_min=float(shift_min))


def _step_forward(step, y):
    p = step.params
    if step.kind == SINH_ARCSINH:
        return p[0] + p[1] * np.sinh(p[2] * np.arcsinh(y) - p[3])
    if step.kind == BOX_COX:
        _require_positive(y, "box_cox")
        lam = p[0]
        if lam == 0.0:
            return np.log(y)
        return (np.power(y, lam) - 1.0) / lam
    if step.kind == LOG:
        _require_positive(y, "log")
        return np.log(y)
    if step.kind == STANDARDIZE:
        return (y - p[0]) / p[1]
    if step.kind == SHIFT:
        return y + p[0]
    raise SpecificationError(step.kind)


def _step_inverse(step, z):
    p = step.params
    if step.kind == SINH_ARCSINH:
        return np.sinh((np.arcsinh((z - p[0]) / p[1]) + p[3]) / p[2])
    if step.kind == BOX_COX:
        lam = p[0]
        if lam == 0.0:
            return np.exp(z)
        base = lam * z + 1.0
        bad = np.flatnonzero(base <= 0)
        if bad.size:
            raise DomainViolation(
                f"box_cox inverse out of range at index {bad[0]}", indices=bad
            )
        return np.power(base, 1.0 / lam)
    if step.kind == LOG:
        return np.exp(z)
    if step.kind == STANDARDIZE:
        return p[1] * z + p[0]
    if step.kind == SHIFT:
        return z - p[0]
    raise SpecificationError(step.kind)


def _step_log_deriv(step, y):
    p = step.params
    if step.kind == SINH_ARCSINH:
        # log(w2*w3*cosh(w3*asinh(y) - w4)) - 0.5*log(1 + y^2); logcosh is
        # evaluated in overflow-safe form.
        t = p[2] * np.arcsinh(y) - p[3]
        logcosh = np.abs(t) + np.log1p(np.exp(-2.0 * np.abs(t))) - math.log(2.0)
        return math.log(p[1]) + math.log(p[2]) + logcosh - 0.5 * np.log1p(y * y)
    if step.kind == BOX_COX:
        _require_positive(y, "box_cox")
        return (p[0] - 1.0) * np.log(y)
    if step.kind == LOG:
        _require_positive(y, "log")
        return -np.log(y)
    if step.kind == STANDARDIZE:
        return np.full_like(y, -math.log(p[1]))
    if step.kind == SHIFT:
        return np.zeros_like(y)
    raise SpecificationError(step.kind)


def _require_positive(y, kind):
    bad = np.flatnonzero(~(y > 0))
    if bad.size:
        raise DomainViolation(
            f"{kind} requires strictly positive input; "
            f"first violation at index {bad[0]} (value {y[bad[0]]!r})",
            indices=bad,
        )


@dataclass(frozen=True)
class WarpStack:
    """Ordered composition of :class:`WarpStep` values.  Immutable."""

    steps: tuple[WarpStep, ...]
    template: str = "custom"  # "default", "nonneg", or "custom"

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def d_count(self):
        return sum(1 for s in self.steps if s.kind == SINH_ARCSINH)

    @property
    def n_trainable(self):
        return sum(s.n_trainable for s in self.steps)

    def to_json(self):
        records = []
        for s in self.steps:
            rec = {
                "kind": s.kind,
                "params": list(s.params),
                "trainable": list(s.trainable),
            }
            if s.kind == SHIFT:
                rec["shift_min"] = s.shift_min
            records.append(rec)
        return json.dumps({"template": self.template, "steps": records})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        steps = []
        for rec in doc["steps"]:
            steps.append(
                WarpStep(
                    rec["kind"],
                    tuple(rec["params"]),
                    tuple(bool(t) for t in rec["trainable"]),
                    shift_min=rec.get("shift_min", 0.0),
                )
            )
        return cls(tuple(steps), template=doc.get("template", "custom"))


def default_template(d):
    """standardize -> d sinh-arcsinh steps -> standardize"""
    if d < 0:
        raise SpecificationError("number of sinh-arcsinh steps must be >= 0")
    steps = [standardize_step()]
    steps += [sa_step() for _ in range(d)]
    steps.append(standardize_step())
    return WarpStack(tuple(steps), template="default")


def nonneg_template(d, y=None):
    """shift -> Box-Cox -> standardize -> d sinh-arcsinh steps -> standardize

    When ``y`` is given, the shift constant and its lower bound are derived
    from min(y) so that the shifted response stays strictly positive.
    """
    if d < 0:
        raise SpecificationError("number of sinh-arcsinh steps must be >= 0")
    if y is not None:
        ymin = float(np.min(y))
        c0 = max(0.0, 1e-6 - ymin)
        cmin = max(0.0, SHIFT_FLOOR - ymin)
        shift = shift_step(max(c0, cmin), shift_min=cmin)
    else:
        shift = shift_step(1e-6)
    steps = [shift, box_cox_step(1.0), standardize_step()]
    steps += [sa_step() for _ in range(d)]
    steps.append(standardize_step())
    return WarpStack(tuple(steps), template="nonneg")


def forward(stack, y):
    """Apply the composed transformation element-wise."""
    cur = np.asarray(y, dtype=float)
    for step in stack.steps:
        cur = _step_forward(step, cur)
    bad = np.flatnonzero(~np.isfinite(cur))
    if bad.size:
        raise DomainViolation(
            f"non-finite transform output at index {bad[0]}", indices=bad
        )
    return cur


def inverse(stack, z):
    """Invert the composed transformation (steps applied in reverse)."""
    cur = np.asarray(z, dtype=float)
    for step in reversed(stack.steps):
        cur = _step_inverse(step, cur)
    return cur


def log_jacobian(stack, y):
    """Sum over samples of the log-derivative of the composed map."""
    cur = np.asarray(y, dtype=float)
    total = 0.0
    for step in stack.steps:
        ld = _step_log_deriv(step, cur)
        if not np.all(np.isfinite(ld)):
            raise DomainViolation("non-finite transform derivative")
        total += float(np.sum(ld))
        cur = _step_forward(step, cur)
    return total


def log_deriv_samples(stack, y):
    """Per-sample log-derivative of the composed map (used for marginal
    effects, where the derivative appears per observation)."""
    cur = np.asarray(y, dtype=float)
    total = np.zeros_like(cur)
    for step in stack.steps:
        total += _step_log_deriv(step, cur)
        cur = _step_forward(step, cur)
    return total


def fit_standardize(stack, y):
    """Set every standardize step's location/scale from its input stream.

    Each standardize step receives the empirical mean and population
    (1/N) standard deviation of whatever reaches it, so the stack output
    ends up with mean 0 and sd 1.  Returns a new stack.
    """
    cur = np.asarray(y, dtype=float)
    new_steps = []
    for step in stack.steps:
        if step.kind == STANDARDIZE:
            loc = float(np.mean(cur))
            scale = float(np.std(cur))
            if scale <= 0 or not np.isfinite(scale):
                raise SpecificationError(
                    "standardize step saw a (near-)constant input stream"
                )
            step = standardize_step(loc, scale)
        new_steps.append(step)
        cur = _step_forward(step, cur)
    return WarpStack(tuple(new_steps), template=stack.template)


def pack_params(stack):
    """Flatten trainable parameters into an unconstrained vector.

    Positive-constrained entries (sinh-arcsinh scales, the shift margin)
    are mapped through log so the optimizer works box-free.
    """
    out = []
    for step in stack.steps:
        if step.kind == SINH_ARCSINH:
            w1, w2, w3, w4 = step.params
            out += [w1, math.log(w2), math.log(w3), w4]
        elif step.kind == BOX_COX and step.trainable[0]:
            out.append(step.params[0])
        elif step.kind == SHIFT and step.trainable[0]:
            margin = step.params[0] - step.shift_min
            out.append(math.log(margin) if margin > 0 else _LOG_TINY)
    return np.asarray(out, dtype=float)


def unpack_params(stack, v):
    """Inverse of :func:`pack_params`; returns a new stack."""
    v = np.asarray(v, dtype=float)
    if v.shape != (stack.n_trainable,):
        raise SpecificationError(
            f"expected parameter vector of length {stack.n_trainable}, "
            f"got shape {v.shape}"
        )
    pos = 0
    new_steps = []
    for step in stack.steps:
        if step.kind == SINH_ARCSINH:
            w1, lw2, lw3, w4 = v[pos : pos + 4]
            pos += 4
            step = sa_step((w1, math.exp(lw2), math.exp(lw3), w4))
        elif step.kind == BOX_COX and step.trainable[0]:
            step = box_cox_step(v[pos])
            pos += 1
        elif step.kind == SHIFT and step.trainable[0]:
            step = shift_step(
                step.shift_min + math.exp(v[pos]), shift_min=step.shift_min
            )
            pos += 1
        new_steps.append(step)
    return WarpStack(tuple(new_steps), template=stack.template)
