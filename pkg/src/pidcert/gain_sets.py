"""Gain regions for PID/PD/PI control of uncertain non-affine plants.

Membership in each region is decided by exact arithmetic on the strict
inequalities that define it; numerical margins belong to the downstream
certificate machinery, not here.  All regions are open and unbounded, and the
PID region is a semi-cone (closed under scaling by any factor >= 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UsageError

SECOND_ORDER = "second_order"
FIRST_ORDER = "first_order"

PID = "PID"
PD = "PD"
PI = "PI"


@dataclass(frozen=True)
class UncertaintyBounds:
    """Derivative bounds quantifying the admissible plant class.

    For second-order plants: |df/dx1| <= L1, |df/dx2| <= L2 and
    Sym[df/du] >= b_lower * I.  First-order plants use a single state bound L
    (stored in L1; L2 is unused and kept at 0).
    """

    L1: float
    L2: float
    b_lower: float
    order: str = SECOND_ORDER

    def __post_init__(self):
        if self.order not in (SECOND_ORDER, FIRST_ORDER):
            raise UsageError(f"unknown order {self.order!r}")
        if not (self.b_lower > 0):
            raise UsageError("b_lower must be > 0")
        if self.L1 < 0 or self.L2 < 0:
            raise UsageError("L1 and L2 must be >= 0")
        if self.order == FIRST_ORDER and self.L2 != 0:
            raise UsageError("first-order bounds use (L, b_lower); L2 must be 0")

    @staticmethod
    def first_order(L: float, b_lower: float) -> "UncertaintyBounds":
        return UncertaintyBounds(L1=L, L2=0.0, b_lower=b_lower, order=FIRST_ORDER)

    @property
    def L(self) -> float:
        """State bound of a first-order class."""
        return self.L1


@dataclass(frozen=True)
class GainVector:
    """Controller gains with a kind tag; unused entries stay at 0."""

    kind: str
    kp: float
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        if self.kind not in (PID, PD, PI):
            raise UsageError(f"unknown controller kind {self.kind!r}")
        for v in (self.kp, self.ki, self.kd):
            if not math.isfinite(v):
                raise UsageError("gains must be finite")

    def scaled(self, alpha: float) -> "GainVector":
        return GainVector(self.kind, alpha * self.kp, alpha * self.ki, alpha * self.kd)


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of a gain-region test: slack of every strict inequality."""

    member: bool
    margins: tuple[tuple[str, float], ...]
    kbar: float

    def slack(self, name: str) -> float:
        for key, value in self.margins:
            if key == name:
                return value
        raise KeyError(name)


def coupling_term(kp: float, kd: float, ub: UncertaintyBounds) -> float:
    """The quantity (L1 + L2)(kp + kd) / b_lower entering the inequalities."""
    return (ub.L1 + ub.L2) * (kp + kd) / ub.b_lower


def _report(margins: list[tuple[str, float]], kbar: float) -> MembershipReport:
    member = all(s > 0 for _, s in margins)
    return MembershipReport(member=member, margins=tuple(margins), kbar=kbar)


def _require_kind(g: GainVector, kind: str, op: str) -> None:
    if g.kind != kind:
        raise UsageError(f"{op} requires {kind} gains, got {g.kind}")


def pid_membership(g: GainVector, ub: UncertaintyBounds) -> MembershipReport:
    """Test kp,ki,kd > 0, kp^2 > 2 ki kd + kbar and kd^2 > kp/b + kbar."""
    _require_kind(g, PID, "pid_membership")
    if ub.order != SECOND_ORDER:
        raise UsageError("PID region is defined for second-order bounds")
    kbar = coupling_term(g.kp, g.kd, ub)
    margins = [
        ("kp_positive", g.kp),
        ("ki_positive", g.ki),
        ("kd_positive", g.kd),
        ("kp_sq_vs_cross", g.kp**2 - 2.0 * g.ki * g.kd - kbar),
        ("kd_sq_vs_kp", g.kd**2 - g.kp / ub.b_lower - kbar),
    ]
    return _report(margins, kbar)


def pd_membership(g: GainVector, ub: UncertaintyBounds) -> MembershipReport:
    """Test kp,kd > 0, kp^2 > kbar and kd^2 > kp/b + kbar."""
    _require_kind(g, PD, "pd_membership")
    if ub.order != SECOND_ORDER:
        raise UsageError("PD region is defined for second-order bounds")
    kbar = coupling_term(g.kp, g.kd, ub)
    margins = [
        ("kp_positive", g.kp),
        ("kd_positive", g.kd),
        ("kp_sq_vs_coupling", g.kp**2 - kbar),
        ("kd_sq_vs_kp", g.kd**2 - g.kp / ub.b_lower - kbar),
    ]
    return _report(margins, kbar)


def pi_membership(g: GainVector, ub: UncertaintyBounds) -> MembershipReport:
    """Test kp,ki > 0 and kp^2 b > kp L + ki + L^2/(4b) (first-order class)."""
    _require_kind(g, PI, "pi_membership")
    if ub.order != FIRST_ORDER:
        raise UsageError("PI region is defined for first-order bounds")
    L, b = ub.L, ub.b_lower
    margins = [
        ("kp_positive", g.kp),
        ("ki_positive", g.ki),
        ("quadratic", g.kp**2 * b - g.kp * L - g.ki - L**2 / (4.0 * b)),
    ]
    return _report(margins, kbar=0.0)


def pi_relaxed_membership(g: GainVector, ub: UncertaintyBounds) -> MembershipReport:
    """The larger scalar PI region: kp b > L and ki > 0.

    For one-dimensional plants this region is both sufficient and necessary
    for asymptotic regulation; it strictly contains the exponential-rate PI
    region above.
    """
    _require_kind(g, PI, "pi_relaxed_membership")
    if ub.order != FIRST_ORDER:
        raise UsageError("relaxed PI region is defined for first-order bounds")
    margins = [
        ("kp_b_vs_L", g.kp * ub.b_lower - ub.L),
        ("ki_positive", g.ki),
    ]
    return _report(margins, kbar=0.0)


def membership(g: GainVector, ub: UncertaintyBounds) -> MembershipReport:
    """Dispatch on the gain kind."""
    if g.kind == PID:
        return pid_membership(g, ub)
    if g.kind == PD:
        return pd_membership(g, ub)
    return pi_membership(g, ub)


def suggest_gains(
    kind: str,
    ub: UncertaintyBounds,
    ki: float | None = None,
    margin: float = 0.1,
) -> GainVector:
    """Construct an interior point of the requested gain region.

    PID: kp = kd = (2 ki + (2(L1+L2)+1)/b) * (1+margin), any ki > 0.
    PD:  kp = kd = ((2(L1+L2)+1)/b) * (1+margin).
    PI:  kp = 2L/b + ki/L  (L = 0 degenerates to kp = sqrt(ki/b)*(1+margin)+margin).

    The returned gains are re-checked against the membership predicate; a
    failure there is a bug, not a user error.
    """
    if margin < 0:
        raise UsageError("margin must be >= 0")
    if kind == PID:
        if ub.order != SECOND_ORDER:
            raise UsageError("PID suggestion needs second-order bounds")
        ki_val = 1.0 if ki is None else float(ki)
        if not ki_val > 0:
            raise UsageError("ki must be > 0 for PID")
        base = 2.0 * ki_val + (2.0 * (ub.L1 + ub.L2) + 1.0) / ub.b_lower
        k = base * (1.0 + margin)
        g = GainVector(PID, kp=k, ki=ki_val, kd=k)
    elif kind == PD:
        if ub.order != SECOND_ORDER:
            raise UsageError("PD suggestion needs second-order bounds")
        base = (2.0 * (ub.L1 + ub.L2) + 1.0) / ub.b_lower
        k = base * (1.0 + margin)
        g = GainVector(PD, kp=k, kd=k)
    elif kind == PI:
        if ub.order != FIRST_ORDER:
            raise UsageError("PI suggestion needs first-order bounds")
        ki_val = 1.0 if ki is None else float(ki)
        if not ki_val > 0:
            raise UsageError("ki must be > 0 for PI")
        if ub.L > 0:
            kp = 2.0 * ub.L / ub.b_lower + ki_val / ub.L
        else:
            # the generic formula divides by L; fall back to the bare inequality
            kp = math.sqrt(ki_val / ub.b_lower) * (1.0 + margin) + margin
        g = GainVector(PI, kp=kp, ki=ki_val)
    else:
        raise UsageError(f"unknown controller kind {kind!r}")

    report = membership(g, ub)
    if not report.member:
        raise RuntimeError(
            f"internal error: suggested {kind} gains {g} fail membership "
            f"(margins {report.margins})"
        )
    return g


def semi_cone_check(g: GainVector, ub: UncertaintyBounds, alphas) -> bool:
    """True iff alpha*g stays in the PID region for every alpha in the list.

    Requires g itself to be a member (the semi-cone property only scales
    members outward).
    """
    _require_kind(g, PID, "semi_cone_check")
    if not pid_membership(g, ub).member:
        raise UsageError("semi_cone_check requires a PID region member")
    for alpha in alphas:
        if alpha < 1.0:
            raise UsageError("scaling factors must be >= 1")
        if not pid_membership(g.scaled(float(alpha)), ub).member:
            return False
    return True
