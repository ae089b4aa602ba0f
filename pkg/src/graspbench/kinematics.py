"""
Serial-chain kinematics: forward kinematics, geometric Jacobian and a damped
least-squares (Levenberg-Marquardt) IK solver with null-space posture control.

Joint i sits at `anchor` in the frame of link i-1, rotated by its fixed origin
rotation; it then turns about (hinge) or slides along (slide) its local axis.
The end-effector frame is the last link frame composed with `ee_offset`.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources as ilr
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .config import Settings, require_positive
from .errors import DimensionError, ValidationError
from .geometry.transforms import Pose, quat_to_matrix


logger = logging.getLogger(__name__)

JOINT_KINDS = ("hinge", "slide")


@dataclass(frozen=True, eq=False)
class ChainJoint:
    name: str
    kind: str
    axis: np.ndarray
    anchor: np.ndarray
    limits: Tuple[float, float]
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        if self.kind not in JOINT_KINDS:
            raise ValidationError(f"joint {self.name!r}: kind must be hinge or slide (got {self.kind!r})")
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = float(np.linalg.norm(axis))
        if not n > 1e-9:
            raise ValidationError(f"joint {self.name!r}: axis must be nonzero")
        object.__setattr__(self, "axis", axis / n)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(3))
        origin = Pose(np.zeros(3), self.rotation)
        object.__setattr__(self, "rotation", origin.rotation)
        lo, hi = (float(v) for v in self.limits)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"joint {self.name!r}: limits need lo < hi (got [{lo}, {hi}])")
        object.__setattr__(self, "limits", (lo, hi))

    @property
    def origin_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.anchor
        return m

    def motion_matrix(self, q: float) -> np.ndarray:
        m = np.eye(4)
        if self.kind == "slide":
            m[:3, 3] = self.axis * q
            return m
        k = self.axis
        kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        m[:3, :3] = np.eye(3) + math.sin(q) * kx + (1.0 - math.cos(q)) * (kx @ kx)
        return m


@dataclass(frozen=True, eq=False)
class KinematicChain:
    name: str
    joints: Tuple[ChainJoint, ...]
    ee_offset: Pose = field(default_factory=Pose.identity)
    q_rest: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not self.joints:
            raise ValidationError("a chain needs at least one joint")
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ValidationError("joint names must be unique")
        object.__setattr__(self, "joints", tuple(self.joints))
        if self.q_rest is not None:
            rest = np.asarray(self.q_rest, dtype=float).reshape(-1)
            if rest.shape != (self.dof,):
                raise DimensionError(f"q_rest has {rest.size} entries, chain has {self.dof} joints")
            object.__setattr__(self, "q_rest", self.clamp(rest))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    @property
    def rest(self) -> np.ndarray:
        return self.q_rest if self.q_rest is not None else (self.lower + self.upper) / 2.0

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower, self.upper)

    def within_limits(self, q: Sequence[float], tol: float = 0.0) -> bool:
        qa = np.asarray(q, dtype=float)
        return bool(np.all(qa >= self.lower - tol) and np.all(qa <= self.upper + tol))

    def check_q(self, q: Sequence[float], warn: bool = True) -> np.ndarray:
        qa = np.asarray(q, dtype=float).reshape(-1)
        if qa.shape != (self.dof,):
            raise DimensionError(f"expected {self.dof} joint values, got {qa.size}")
        if not np.all(np.isfinite(qa)):
            raise ValidationError("joint values must be finite")
        clamped = self.clamp(qa)
        if warn and not np.array_equal(clamped, qa):
            logger.warning("joint values outside limits clamped for chain %s", self.name)
        return clamped

    def _frames(self, q: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
        """Joint frames (before their own motion) and the end-effector frame, as 4x4 matrices."""
        t = np.eye(4)
        frames = []
        for joint, qi in zip(self.joints, q):
            t = t @ joint.origin_matrix
            frames.append(t)
            t = t @ joint.motion_matrix(float(qi))
        return frames, t @ self.ee_offset.as_matrix()

    def link_poses(self, q: Sequence[float]) -> List[Pose]:
        """Pose of every link frame (after its joint's motion), base to tip."""
        qa = self.check_q(q)
        t = np.eye(4)
        out = []
        for joint, qi in zip(self.joints, qa):
            t = t @ joint.origin_matrix @ joint.motion_matrix(float(qi))
            out.append(Pose.from_matrix(t))
        return out


@dataclass(frozen=True)
class IkParams:
    max_iters: int = 100
    lambda0: float = 1e-3
    lambda_decrease: float = 0.5
    lambda_increase: float = 4.0
    lambda_min: float = 1e-9
    lambda_max: float = 1e3
    position_tolerance: float = 1e-6
    orientation_tolerance: float = 1e-6
    null_space_gain: float = 0.0
    step_clamp: float = 0.5
    q_rest: Optional[Tuple[float, ...]] = None
    mask: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValidationError("ik.max_iters must be >= 1")
        for key in ("lambda0", "lambda_min", "lambda_max", "position_tolerance", "orientation_tolerance", "step_clamp"):
            if not getattr(self, key) > 0:
                raise ValidationError(f"ik.{key} must be > 0")
        if not 0.0 < self.lambda_decrease < 1.0:
            raise ValidationError("ik.lambda_decrease must be in (0, 1)")
        if not self.lambda_increase > 1.0:
            raise ValidationError("ik.lambda_increase must be > 1")
        if not self.lambda_min <= self.lambda0 <= self.lambda_max:
            raise ValidationError("ik.lambda0 must lie within [lambda_min, lambda_max]")
        if self.null_space_gain < 0:
            raise ValidationError("ik.null_space_gain must be >= 0")
        if len(self.mask) != 6 or any(w < 0 for w in self.mask) or not any(w > 0 for w in self.mask):
            raise ValidationError("ik mask needs 6 non-negative weights, at least one positive")

    @classmethod
    def from_settings(cls, settings: Settings) -> "IkParams":
        s = "ik"
        f = settings.getfloat
        return cls(
            max_iters=settings.getint(s, "max_iters"),
            lambda0=require_positive(s, "lambda0", f(s, "lambda0")),
            lambda_decrease=f(s, "lambda_decrease"),
            lambda_increase=f(s, "lambda_increase"),
            lambda_min=require_positive(s, "lambda_min", f(s, "lambda_min")),
            lambda_max=require_positive(s, "lambda_max", f(s, "lambda_max")),
            position_tolerance=require_positive(s, "position_tolerance", f(s, "position_tolerance")),
            orientation_tolerance=require_positive(s, "orientation_tolerance", f(s, "orientation_tolerance")),
            null_space_gain=f(s, "null_space_gain"),
            step_clamp=require_positive(s, "step_clamp", f(s, "step_clamp")),
        )

    @property
    def position_only(self) -> "IkParams":
        return replace(self, mask=(1.0, 1.0, 1.0, 0.0, 0.0, 0.0))

    def as_dict(self) -> Dict[str, object]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class IkSolution:
    q: np.ndarray
    converged: bool
    iterations: int
    position_residual: float
    orientation_residual: float

    def as_dict(self) -> Dict[str, object]:
        return {
            "q": [float(v) for v in self.q],
            "converged": self.converged,
            "iterations": self.iterations,
            "position_residual": self.position_residual,
            "orientation_residual": self.orientation_residual,
        }


# ---------- Operations ----------

def fk(chain: KinematicChain, q: Sequence[float]) -> Pose:
    """End-effector pose."""
    _, ee = chain._frames(chain.check_q(q))
    return Pose.from_matrix(ee)


def _jacobian(chain: KinematicChain, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    frames, ee = chain._frames(q)
    p_e = ee[:3, 3]
    jac = np.zeros((6, chain.dof))
    for i, (joint, t) in enumerate(zip(chain.joints, frames)):
        z = t[:3, :3] @ joint.axis
        if joint.kind == "hinge":
            jac[:3, i] = np.cross(z, p_e - t[:3, 3])
            jac[3:, i] = z
        else:
            jac[:3, i] = z
    return jac, ee


def jacobian(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    """6 x n geometric Jacobian at the end-effector origin (linear rows first)."""
    return _jacobian(chain, chain.check_q(q))[0]


def pose_error(target: Pose, current: np.ndarray) -> np.ndarray:
    """(position error; rotation vector of R_target R_current^T)."""
    dp = target.translation - current[:3, 3]
    dr = Rotation.from_matrix(target.matrix @ current[:3, :3].T).as_rotvec()
    return np.concatenate([dp, dr])


def _residuals(e: np.ndarray, w: np.ndarray) -> Tuple[float, float]:
    we = w * e
    return float(np.linalg.norm(we[:3])), float(np.linalg.norm(we[3:]))


def ik_solve(chain: KinematicChain, target: Pose, q0: Sequence[float],
             params: Optional[IkParams] = None) -> IkSolution:
    """
    Damped least squares with an adaptive damping factor. Each iteration takes
    dq = (J^T J + lambda I)^-1 J^T e + k (I - J^+ J)(q_rest - q); a step is
    accepted when it lowers the weighted error, otherwise it is retried without
    the posture term and then lambda grows. Residuals are reported on the
    masked error.
    """
    p = params or IkParams()
    w = np.asarray(p.mask, dtype=float)
    check_ori = bool(np.any(w[3:] > 0))
    rest = np.asarray(p.q_rest, dtype=float) if p.q_rest is not None else chain.rest
    if rest.shape != (chain.dof,):
        raise DimensionError(f"q_rest has {rest.size} entries, chain has {chain.dof} joints")
    q = chain.check_q(q0)
    lam = p.lambda0
    jac, ee = _jacobian(chain, q)
    e = pose_error(target, ee)
    cost = float(np.sum((w * e) ** 2))
    eye = np.eye(chain.dof)

    def done(err: np.ndarray) -> bool:
        pos, ori = _residuals(err, w)
        return pos <= p.position_tolerance and (not check_ori or ori <= p.orientation_tolerance)

    def trial(step: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        norm = float(np.max(np.abs(step)))
        if norm > p.step_clamp:
            step = step * (p.step_clamp / norm)
        q_new = chain.clamp(q + step)
        jac_new, ee_new = _jacobian(chain, q_new)
        e_new = pose_error(target, ee_new)
        return q_new, jac_new, e_new, float(np.sum((w * e_new) ** 2))

    iterations = 0
    while iterations < p.max_iters and not done(e):
        iterations += 1
        jw = w[:, None] * jac
        try:
            dq = np.linalg.solve(jw.T @ jw + lam * eye, jw.T @ (w * e))
        except np.linalg.LinAlgError:
            if lam >= p.lambda_max:
                break
            lam = min(lam * p.lambda_increase, p.lambda_max)
            continue
        steps = [dq]
        if p.null_space_gain > 0:
            proj = eye - np.linalg.pinv(jw) @ jw
            steps.insert(0, dq + p.null_space_gain * (proj @ (rest - q)))
        accepted = False
        for step in steps:
            q_new, jac_new, e_new, cost_new = trial(step)
            if cost_new < cost:
                q, jac, e, cost = q_new, jac_new, e_new, cost_new
                lam = max(lam * p.lambda_decrease, p.lambda_min)
                accepted = True
                break
        if not accepted:
            if lam >= p.lambda_max:
                break
            lam = min(lam * p.lambda_increase, p.lambda_max)

    pos, ori = _residuals(e, w)
    converged = done(e)
    if not converged:
        logger.debug("ik did not converge for %s after %d iterations (pos %.3g m, ori %.3g rad)",
                     chain.name, iterations, pos, ori)
    return IkSolution(q, converged, iterations, pos, ori)


def ik_solve_batch(chain: KinematicChain, targets: Sequence[Pose], seeds: Sequence[Sequence[float]],
                   params: Optional[IkParams] = None, threads: int = 1) -> List[IkSolution]:
    """Independent solves; results match ik_solve element-wise and keep input order."""
    if len(targets) != len(seeds):
        raise DimensionError(f"{len(targets)} targets but {len(seeds)} seeds")
    if not targets:
        return []
    p = params or IkParams()

    def one(item: Tuple[Pose, Sequence[float]]) -> IkSolution:
        return ik_solve(chain, item[0], item[1], p)

    items = list(zip(targets, seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, items))
    else:
        out = [one(i) for i in items]
    n_ok = sum(s.converged for s in out)
    logger.info("ik batch on %s: %d/%d converged", chain.name, n_ok, len(out))
    return out


def random_configurations(chain: KinematicChain, n: int, seed: int, margin: float = 0.0) -> np.ndarray:
    """n configurations drawn uniformly within the limits (shrunk by `margin` on each side)."""
    rng = np.random.default_rng(seed)
    lo = chain.lower + margin
    hi = chain.upper - margin
    return lo + rng.random((n, chain.dof)) * (hi - lo)


def builtin_chain(name: str) -> KinematicChain:
    """Chains shipped with the package (panda7, planar2r)."""
    from .codecs import chain_from_dict

    res = ilr.files("graspbench.chains").joinpath(f"{name}.json")
    if not res.is_file():
        raise ValidationError(f"unknown built-in chain {name!r}")
    return chain_from_dict(json.loads(res.read_text(encoding="utf-8")))


__all__ = [
    "ChainJoint",
    "IkParams",
    "IkSolution",
    "KinematicChain",
    "builtin_chain",
    "fk",
    "ik_solve",
    "ik_solve_batch",
    "jacobian",
    "pose_error",
    "random_configurations",
]
