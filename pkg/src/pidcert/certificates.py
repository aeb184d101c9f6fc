"""Structured Lyapunov matrices, decrease certificates, and envelope constants.

For gains inside the PID/PD/PI regions this module builds the closed-form
block matrix P (positive definite by construction), assembles the frozen
closed-loop matrix A(a, b, theta), forms Q = -(PA + A^T P), and certifies a
uniform lower bound alpha on lambda_min(Q) over the whole uncertainty ball

    |a| <= L1,  |b| <= L2,  Sym[theta] >= b_lower * I.

The PD and PI margins are exact closed forms; the PID margin is a sampled,
safety-deflated estimate of the ball minimum (the minimum exists but has no
closed form), flagged as an estimate in all outputs.  From (P, alpha) we get
the trajectory envelope constants: decay rate lambda = alpha/(2 lambda_max(P))
and overshoot gain M.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import matrix_kernel as mk
from .errors import CertificateError, UsageError
from .gain_sets import (
    FIRST_ORDER,
    PD,
    PI,
    PID,
    GainVector,
    UncertaintyBounds,
    coupling_term,
    membership,
)

BOUND_SLACK = 1e-9


@dataclass
class FrozenUncertainty:
    """A point of the uncertainty ball: constant matrices (a, b, theta).

    ``b`` is absent for first-order (PI) plants.  Bound membership is checked
    at construction against the given class bounds.
    """

    a: np.ndarray
    theta: np.ndarray
    b: Optional[np.ndarray] = None

    @staticmethod
    def checked(ub: UncertaintyBounds, a, theta, b=None) -> "FrozenUncertainty":
        am = mk.as_square(a, "a")
        tm = mk.as_square(theta, "theta")
        if mk.operator_norm(am) > ub.L1 + BOUND_SLACK:
            raise UsageError(f"|a| = {mk.operator_norm(am):.6g} exceeds L1 = {ub.L1}")
        lam_min, _ = mk.eig_extrema(mk.symmetrize(tm))
        if lam_min < ub.b_lower - BOUND_SLACK:
            raise UsageError(
                f"lambda_min(Sym[theta]) = {lam_min:.6g} below b_lower = {ub.b_lower}"
            )
        bm = None
        if b is not None:
            bm = mk.as_square(b, "b")
            if mk.operator_norm(bm) > ub.L2 + BOUND_SLACK:
                raise UsageError(
                    f"|b| = {mk.operator_norm(bm):.6g} exceeds L2 = {ub.L2}"
                )
        elif ub.order != FIRST_ORDER:
            raise UsageError("second-order frozen uncertainty needs the b matrix")
        return FrozenUncertainty(a=am, theta=tm, b=bm)


@dataclass
class QReport:
    """Decrease-matrix audit at one frozen uncertainty point."""

    Q: np.ndarray
    Q0: np.ndarray
    lambda_min_Q: float
    lambda_min_Q0: float
    schur_chain_pass: bool


@dataclass
class LyapunovCertificate:
    kind: str
    n: int
    gains: GainVector
    bounds: UncertaintyBounds
    P: np.ndarray
    alpha: float
    lambda_min_P: float
    lambda_max_P: float
    M: float
    lambda_decay: float
    method: str
    seed: Optional[int] = None
    samples: Optional[int] = None

    def to_json_dict(self) -> dict:
        g = self.gains
        ub = self.bounds
        return {
            "kind": self.kind,
            "n": self.n,
            "gains": {"kp": g.kp, "ki": g.ki, "kd": g.kd},
            "bounds": {
                "L1": ub.L1,
                "L2": ub.L2,
                "b_lower": ub.b_lower,
                "order": ub.order,
            },
            "alpha": self.alpha,
            "lambda_min_P": self.lambda_min_P,
            "lambda_max_P": self.lambda_max_P,
            "M": self.M,
            "lambda": self.lambda_decay,
            "method": self.method,
            "seed": self.seed,
            "samples": self.samples,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def from_json_dict(d: dict) -> "LyapunovCertificate":
        ub = UncertaintyBounds(
            L1=d["bounds"]["L1"],
            L2=d["bounds"]["L2"],
            b_lower=d["bounds"]["b_lower"],
            order=d["bounds"]["order"],
        )
        g = GainVector(d["kind"], d["gains"]["kp"], d["gains"]["ki"], d["gains"]["kd"])
        P = build_P(d["kind"], g, ub, d["n"])
        return LyapunovCertificate(
            kind=d["kind"],
            n=d["n"],
            gains=g,
            bounds=ub,
            P=P,
            alpha=d["alpha"],
            lambda_min_P=d["lambda_min_P"],
            lambda_max_P=d["lambda_max_P"],
            M=d["M"],
            lambda_decay=d["lambda"],
            method=d["method"],
            seed=d.get("seed"),
            samples=d.get("samples"),
        )

    @staticmethod
    def load(path) -> "LyapunovCertificate":
        with open(path) as fh:
            return LyapunovCertificate.from_json_dict(json.load(fh))


def _require_member(g: GainVector, ub: UncertaintyBounds, what: str) -> None:
    report = membership(g, ub)
    if not report.member:
        raise UsageError(
            f"{what} requires gains inside the {g.kind} region; "
            f"failing slacks: {[(k, v) for k, v in report.margins if v <= 0]}"
        )


def _core_P_pid(g: GainVector, b: float) -> np.ndarray:
    kp, ki, kd = g.kp, g.ki, g.kd
    return np.array(
        [
            [2 * ki * kp * b, 2 * ki * kd * b, ki],
            [2 * ki * kd * b, 2 * kp * kd * b - ki, kp],
            [ki, kp, kd],
        ]
    )


def pid_det_formula(g: GainVector, b: float) -> float:
    """Closed-form determinant of the 3x3 PID core block."""
    kp, ki, kd = g.kp, g.ki, g.kd
    return ki * (4 * kp**2 * kd**2 * b**2 + ki**2 - 2 * kp**3 * b - 4 * ki * kd**3 * b**2)


def build_P_pid(g: GainVector, ub: UncertaintyBounds, n: int) -> np.ndarray:
    """3n x 3n Lyapunov matrix for PID gains; verifies the leading-minor chain.

    The block matrix is the Kronecker lift core x I_n, so its spectrum is n
    copies of the 3x3 core spectrum.
    """
    _require_member(g, ub, "build_P_pid")
    core = _core_P_pid(g, ub.b_lower)
    m1 = core[0, 0]
    m2 = core[0, 0] * core[1, 1] - core[0, 1] ** 2
    m3 = pid_det_formula(g, ub.b_lower)
    lam_min, _ = mk.eig_extrema(core)
    if not (m1 > 0 and m2 > 0 and m3 > 0 and lam_min > 0):
        raise CertificateError(
            "leading-minor chain failed for a region member "
            f"(minors {m1:.6g}, {m2:.6g}, {m3:.6g}, lambda_min {lam_min:.6g})"
        )
    return mk.kronecker(core, np.eye(n))


def build_P_pd(g: GainVector, ub: UncertaintyBounds, n: int) -> np.ndarray:
    """2n x 2n Lyapunov matrix for PD gains."""
    _require_member(g, ub, "build_P_pd")
    kp, kd, b = g.kp, g.kd, ub.b_lower
    core = np.array([[2 * kp * kd * b, kp], [kp, kd]])
    # positivity reduces to kp * (2 kd^2 b - kp) > 0
    if not (2 * kp * kd * b > 0 and kp * (2 * kd**2 * b - kp) > 0):
        raise CertificateError("PD Lyapunov block failed its positivity check")
    return mk.kronecker(core, np.eye(n))


def build_P_pi(g: GainVector, ub: UncertaintyBounds, n: int) -> np.ndarray:
    """2n x 2n Lyapunov matrix for PI gains."""
    _require_member(g, ub, "build_P_pi")
    kp, ki, b = g.kp, g.ki, ub.b_lower
    core = np.array([[2 * kp * ki * b, ki], [ki, kp]])
    # positivity reduces to ki * (2 kp^2 b - ki) > 0
    if not (2 * kp * ki * b > 0 and ki * (2 * kp**2 * b - ki) > 0):
        raise CertificateError("PI Lyapunov block failed its positivity check")
    return mk.kronecker(core, np.eye(n))


def build_P(kind: str, g: GainVector, ub: UncertaintyBounds, n: int) -> np.ndarray:
    if kind == PID:
        return build_P_pid(g, ub, n)
    if kind == PD:
        return build_P_pd(g, ub, n)
    if kind == PI:
        return build_P_pi(g, ub, n)
    raise UsageError(f"unknown certificate kind {kind!r}")


def assemble_A(kind: str, g: GainVector, fu: FrozenUncertainty, n: int) -> np.ndarray:
    """Companion-form frozen closed-loop matrix for the given kind.

    theta enters as given (possibly non-symmetric); only the certified bound
    substitution replaces it by b_lower * I.
    """
    I = np.eye(n)
    Z = np.zeros((n, n))
    a, theta = fu.a, fu.theta
    if a.shape != (n, n) or theta.shape != (n, n):
        raise UsageError("frozen uncertainty dimension does not match n")
    if kind == PID:
        if fu.b is None:
            raise UsageError("PID assembly needs the b matrix")
        return np.block(
            [
                [Z, I, Z],
                [Z, Z, I],
                [-g.ki * theta, a - g.kp * theta, fu.b - g.kd * theta],
            ]
        )
    if kind == PD:
        if fu.b is None:
            raise UsageError("PD assembly needs the b matrix")
        return np.block([[Z, I], [a - g.kp * theta, fu.b - g.kd * theta]])
    if kind == PI:
        return np.block([[Z, I], [-g.ki * theta, a - g.kp * theta]])
    raise UsageError(f"unknown certificate kind {kind!r}")


def _theta_floor(ub: UncertaintyBounds, n: int) -> np.ndarray:
    return ub.b_lower * np.eye(n)


def _schur_chain_matrices(g: GainVector, ub: UncertaintyBounds, fu: FrozenUncertainty):
    """Blocks of the complement chain E - B^T D^{-1} B for the PID kind."""
    kp, ki, kd = g.kp, g.ki, g.kd
    b_ = ub.b_lower
    a, bmat = fu.a, fu.b
    n = a.shape[0]
    I = np.eye(n)
    k1 = (kp**2 - 2 * ki * kd) * b_
    k2 = kd**2 * b_ - kp
    a_hat = mk.symmetrize(a)
    b_hat = mk.symmetrize(bmat)
    D1 = 2 * k1 * I - 2 * kp * a_hat - (a.T @ a) / (2 * b_)
    B1 = -(kp * bmat + kd * a.T + (a.T @ bmat) / (2 * b_))
    E1 = 2 * k2 * I - 2 * kd * b_hat - (bmat.T @ bmat) / (2 * b_)
    return mk.symmetrize(D1), B1, mk.symmetrize(E1)


def q_report(
    kind: str,
    g: GainVector,
    ub: UncertaintyBounds,
    fu: FrozenUncertainty,
    n: int,
) -> QReport:
    """Q = -(PA + A^T P) at one frozen point, plus the worst-case bound Q0.

    Q0 replaces theta by its symmetric floor b_lower * I; the gap Q - Q0 is a
    rank-one-gain Kronecker product with Sym[theta] - b_lower*I, hence PSD.
    For the PID kind the report also runs the Schur complement chain that
    proves Q0 > 0.
    """
    _require_member(g, ub, "q_report")
    P = build_P(kind, g, ub, n)
    A = assemble_A(kind, g, fu, n)
    Q = mk.symmetrize(-(P @ A + A.T @ P))
    fu0 = FrozenUncertainty(a=fu.a, theta=_theta_floor(ub, n), b=fu.b)
    A0 = assemble_A(kind, g, fu0, n)
    Q0 = mk.symmetrize(-(P @ A0 + A0.T @ P))
    gap_min, _ = mk.eig_extrema(mk.symmetrize(Q - Q0))
    if gap_min < -1e-9:
        raise CertificateError(
            f"theta-floor substitution step failed: lambda_min(Q - Q0) = {gap_min:.3e}"
        )
    lam_q, _ = mk.eig_extrema(Q)
    lam_q0, _ = mk.eig_extrema(Q0)
    chain = True
    if kind == PID:
        D1, B1, E1 = _schur_chain_matrices(g, ub, fu)
        chain = (
            mk.is_positive_definite(D1)
            and mk.is_positive_definite(E1)
            and mk.eigen_gap_sufficient(D1, B1, E1)
        )
        if not chain:
            raise CertificateError(
                "Schur complement chain failed for a region member"
            )
        if lam_q0 <= 0:
            raise CertificateError(
                f"worst-case decrease block check failed: lambda_min(Q0) = {lam_q0:.3e}"
            )
    return QReport(
        Q=Q,
        Q0=Q0,
        lambda_min_Q=lam_q,
        lambda_min_Q0=lam_q0,
        schur_chain_pass=bool(chain),
    )


# ---------------------------------------------------------------------------
# Batch Q0 assembly over sampled (a, b) for the uniform margin estimate.
# ---------------------------------------------------------------------------


def _batch_q0_pid(g: GainVector, ub: UncertaintyBounds, A: np.ndarray, B: np.ndarray):
    kp, ki, kd = g.kp, g.ki, g.kd
    b_ = ub.b_lower
    N, n, _ = A.shape
    k1 = (kp**2 - 2 * ki * kd) * b_
    k2 = kd**2 * b_ - kp
    I = np.eye(n)
    At = np.transpose(A, (0, 2, 1))
    Bt = np.transpose(B, (0, 2, 1))
    Q = np.zeros((N, 3 * n, 3 * n))
    Q[:, :n, :n] = 2 * ki**2 * b_ * I
    Q[:, :n, n : 2 * n] = -ki * A
    Q[:, :n, 2 * n :] = -ki * B
    Q[:, n : 2 * n, n : 2 * n] = 2 * k1 * I - kp * (A + At)
    Q[:, n : 2 * n, 2 * n :] = -(kp * B + kd * At)
    Q[:, 2 * n :, 2 * n :] = 2 * k2 * I - kd * (B + Bt)
    Q[:, n : 2 * n, :n] = np.transpose(Q[:, :n, n : 2 * n], (0, 2, 1))
    Q[:, 2 * n :, :n] = np.transpose(Q[:, :n, 2 * n :], (0, 2, 1))
    Q[:, 2 * n :, n : 2 * n] = np.transpose(Q[:, n : 2 * n, 2 * n :], (0, 2, 1))
    return Q


def _batch_q0_pd(g: GainVector, ub: UncertaintyBounds, A: np.ndarray, B: np.ndarray):
    kp, kd = g.kp, g.kd
    b_ = ub.b_lower
    N, n, _ = A.shape
    I = np.eye(n)
    At = np.transpose(A, (0, 2, 1))
    Bt = np.transpose(B, (0, 2, 1))
    Q = np.zeros((N, 2 * n, 2 * n))
    Q[:, :n, :n] = 2 * kp**2 * b_ * I - kp * (A + At)
    Q[:, :n, n:] = -(kp * B + kd * At)
    Q[:, n:, n:] = 2 * (kd**2 * b_ - kp) * I - kd * (B + Bt)
    Q[:, n:, :n] = np.transpose(Q[:, :n, n:], (0, 2, 1))
    return Q


def _batch_q0_pi(g: GainVector, ub: UncertaintyBounds, A: np.ndarray, B=None):
    kp, ki = g.kp, g.ki
    b_ = ub.b_lower
    N, n, _ = A.shape
    I = np.eye(n)
    At = np.transpose(A, (0, 2, 1))
    Q = np.zeros((N, 2 * n, 2 * n))
    Q[:, :n, :n] = 2 * ki**2 * b_ * I
    Q[:, :n, n:] = -ki * A
    Q[:, n:, n:] = 2 * kp**2 * b_ * I - kp * (A + At) - 2 * ki * I
    Q[:, n:, :n] = np.transpose(Q[:, :n, n:], (0, 2, 1))
    return Q


def _structured_ball_points(L: float, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Extreme-leaning candidates of the operator-norm ball of radius L."""
    pts = [np.zeros((n, n)), L * np.eye(n), -L * np.eye(n)]
    if n == 1 or L == 0.0:
        return pts
    for _ in range(3):
        signs = rng.choice([-1.0, 1.0], size=n)
        pts.append(L * np.diag(signs))
    for _ in range(3):
        qmat, _ = np.linalg.qr(rng.standard_normal((n, n)))
        pts.append(L * qmat)
    return pts


def _random_ball_points(L: float, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Boundary-biased sample of the operator-norm ball: half the draws sit
    on the sphere, half at a uniform fraction of the radius."""
    out = np.zeros((count, n, n))
    if L == 0.0 or count == 0:
        return out
    for i in range(count):
        direction = rng.standard_normal((n, n))
        nrm = np.linalg.norm(direction, 2)
        if nrm == 0.0:
            continue
        radius = L if rng.random() < 0.5 else L * rng.random()
        out[i] = direction * (radius / nrm)
    return out


def sample_frozen_uncertainty(
    ub: UncertaintyBounds, n: int, rng: np.random.Generator
) -> FrozenUncertainty:
    """Random interior point of the uncertainty ball (for tests and sweeps)."""

    def ball(L):
        direction = rng.standard_normal((n, n))
        nrm = np.linalg.norm(direction, 2)
        return direction * (L * rng.random() / nrm) if nrm > 0 else np.zeros((n, n))

    a = ball(ub.L1)
    b = None if ub.order == FIRST_ORDER else ball(ub.L2)
    # Sym[theta] >= b_lower*I: PSD bump plus a skew part
    w = rng.standard_normal((n, n))
    psd = w @ w.T * (0.5 / n)
    skew = rng.standard_normal((n, n))
    skew = (skew - skew.T) / 2.0
    theta = ub.b_lower * np.eye(n) + psd + skew
    return FrozenUncertainty.checked(ub, a=a, theta=theta, b=b)


def schur_chain_certified(g: GainVector, ub: UncertaintyBounds) -> bool:
    """Sampling-free sufficient PID check, uniform over the whole ball.

    Uses the analytic lower/upper bounds on the complement blocks:
    the check is conservative (True implies a positive uniform margin
    exists) and returns no numeric alpha.
    """
    _require_member(g, ub, "schur_chain_certified")
    kp, ki, kd = g.kp, g.ki, g.kd
    L1, L2, b_ = ub.L1, ub.L2, ub.b_lower
    d1 = 2 * (kp**2 - 2 * ki * kd) * b_ - 2 * kp * L1 - L1**2 / (2 * b_)
    e1 = 2 * (kd**2 * b_ - kp) - 2 * kd * L2 - L2**2 / (2 * b_)
    b1 = kp * L2 + kd * L1 + L1 * L2 / (2 * b_)
    return d1 > 0 and e1 > 0 and d1 * e1 > b1**2


def certify_margin(
    kind: str,
    g: GainVector,
    ub: UncertaintyBounds,
    n: int,
    strategy: str | None = None,
    samples: int = 20_000,
    safety: float = 0.2,
    seed: int = 0,
):
    """Certificate with a uniform decrease margin over the uncertainty ball.

    Strategies: ``exact_gamma`` (PI and PD closed forms), ``sampled``
    (boundary-biased sampling of (a, b), deflated by ``safety``), and
    ``schur_chain`` (PID only; returns the bare boolean of the sampling-free
    check instead of a certificate).
    """
    if strategy is None:
        strategy = "sampled" if kind == PID else "exact_gamma"
    if strategy == "schur_chain":
        if kind != PID:
            raise UsageError("schur_chain strategy applies to the PID kind only")
        return schur_chain_certified(g, ub)
    _require_member(g, ub, "certify_margin")
    P = build_P(kind, g, ub, n)
    lam_min_p, lam_max_p = mk.eig_extrema(P)
    used_seed: Optional[int] = None
    used_samples: Optional[int] = None

    if strategy == "exact_gamma":
        if kind == PI:
            L, b_ = ub.L, ub.b_lower
            q1 = np.array(
                [
                    [2 * g.ki**2 * b_, -g.ki * L],
                    [-g.ki * L, 2 * (g.kp**2 * b_ - g.kp * L - g.ki)],
                ]
            )
            alpha, _ = mk.eig_extrema(q1)
        elif kind == PD:
            kbar = coupling_term(g.kp, g.kd, ub)
            b_ = ub.b_lower
            alpha = 2.0 * min(
                (g.kp**2 - kbar) * b_, g.kd**2 * b_ - g.kp - kbar * b_
            )
        else:
            raise UsageError("no exact margin formula for the PID kind; use sampled")
        method = "exact_gamma"
    elif strategy == "sampled":
        if not 0.0 <= safety < 1.0:
            raise UsageError("safety must be in [0, 1)")
        rng = np.random.default_rng(seed)
        struct_a = _structured_ball_points(ub.L1, n, rng)
        struct_b = _structured_ball_points(ub.L2, n, rng) if kind != PI else [None]
        pairs_a = []
        pairs_b = []
        for sa in struct_a:
            for sb in struct_b:
                pairs_a.append(sa)
                if sb is not None:
                    pairs_b.append(sb)
        n_random = max(0, samples - len(pairs_a))
        rand_a = _random_ball_points(ub.L1, n, n_random, rng)
        A = np.concatenate([np.stack(pairs_a), rand_a], axis=0)
        if kind != PI:
            rand_b = _random_ball_points(ub.L2, n, n_random, rng)
            B = np.concatenate([np.stack(pairs_b), rand_b], axis=0)
        else:
            B = None
        if kind == PID:
            Q0 = _batch_q0_pid(g, ub, A, B)
        elif kind == PD:
            Q0 = _batch_q0_pd(g, ub, A, B)
        else:
            Q0 = _batch_q0_pi(g, ub, A)
        lam = np.linalg.eigvalsh(Q0)[:, 0]
        idx = int(np.argmin(lam))
        ball_min = float(lam[idx])
        # cross-check the batch eigensolver at the minimizing sample
        check, _ = mk.eig_extrema(mk.symmetrize(Q0[idx]))
        if abs(check - ball_min) > 1e-9 * (1.0 + abs(ball_min)):
            raise CertificateError(
                f"eigen cross-check mismatch at ball minimum: {check} vs {ball_min}"
            )
        if ball_min <= 0:
            raise CertificateError(
                f"sampled ball minimum is not positive ({ball_min:.3e}); "
                "gains sit too close to the region boundary"
            )
        alpha = (1.0 - safety) * ball_min
        method = "sampled"
        used_seed = seed
        used_samples = int(A.shape[0])
    else:
        raise UsageError(f"unknown strategy {strategy!r}")

    if not alpha > 0:
        raise CertificateError(f"certified margin is not positive: {alpha:.3e}")
    m1 = math.sqrt(2.0 * lam_max_p / lam_min_p)
    if kind == PID:
        M = max(m1, m1 / g.ki)
    elif kind == PD:
        M = m1
    else:
        M = math.sqrt(lam_max_p / lam_min_p)
    lam_decay = alpha / (2.0 * lam_max_p)
    return LyapunovCertificate(
        kind=kind,
        n=n,
        gains=g,
        bounds=ub,
        P=P,
        alpha=float(alpha),
        lambda_min_P=lam_min_p,
        lambda_max_P=lam_max_p,
        M=float(M),
        lambda_decay=float(lam_decay),
        method=method,
        seed=used_seed,
        samples=used_samples,
    )
