"""Rigid-body dynamics of a quadrotor team carrying a cable-slung load.

The model is a team of N quadrotors coupled to one rigid payload through
massless, tension-only cables.  All bodies live in a z-up world frame with
gravity ``g_vec = (0, 0, -9.81)`` m/s^2.

Per quadrotor i:

    m_i * a_i   = m_i * g_vec + sat(F_i) * R(Th_i) e_z + T_i * R(Th_L) e_i
    Th_i_dot    = Gamma(Th_i) * w_i
    J_i * w_i_dot = -w_i x (J_i w_i) + tau_i

and for the load:

    m_L * a_L   = m_L * g_vec - sum_i T_i * R(Th_L) e_i
    Th_L_dot    = Gamma(Th_L) * w_L
    J_L * w_L_dot = -w_L x (J_L w_L) + sum_i r_i x (-T_i e_i)

where e_i is the unit vector from quadrotor i to its attachment point,
expressed in the load body frame, and r_i the body-frame attachment offset.
Cable forces obey Newton's third law exactly: the load sees -T_i R e_i, the
quadrotor +T_i R e_i.

Attitude is parameterized by roll/pitch/yaw Euler angles with

    R(Th) = Rz(psi) * Ry(theta) * Rx(phi)

and the matching body-rate transform Gamma(Th).  Both are singular-free only
for |phi|, |theta| < pi/2; a guard band of GIMBAL_GUARD rad raises
GimbalDomainError instead of silently clamping.

Cables are unilateral stiff spring-dampers: slack below rest length (zero
force), otherwise T = k_c * stretch + c_c * stretch_rate, floored at zero.
This keeps the equations of motion an explicit ODE suitable for fixed-step
RK4 while guaranteeing T >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateCableError, GimbalDomainError, NonFiniteStateError

GRAVITY = np.array([0.0, 0.0, -9.81])
GIMBAL_GUARD = 0.05  # rad inside +-pi/2 where the rate transform trips a fault


# ---------------------------------------------------------------------------
# attitude math
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EulerAngles:
    """Roll/pitch/yaw in radians."""

    phi: float
    theta: float
    psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])

    @staticmethod
    def from_array(a: np.ndarray) -> "EulerAngles":
        return EulerAngles(float(a[0]), float(a[1]), float(a[2]))


def rotation_matrices(att: np.ndarray) -> np.ndarray:
    """Body-to-world rotation matrices for an (..., 3) array of Euler angles.

    Uses the yaw-pitch-roll composition Rz(psi) Ry(theta) Rx(phi), the
    convention consistent with :func:`euler_rate_matrices`.
    """
    att = np.asarray(att, dtype=float)
    phi, theta, psi = att[..., 0], att[..., 1], att[..., 2]
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)

    R = np.empty(att.shape[:-1] + (3, 3))
    R[..., 0, 0] = cp * ct
    R[..., 0, 1] = cp * st * sf - sp * cf
    R[..., 0, 2] = cp * st * cf + sp * sf
    R[..., 1, 0] = sp * ct
    R[..., 1, 1] = sp * st * sf + cp * cf
    R[..., 1, 2] = sp * st * cf - cp * sf
    R[..., 2, 0] = -st
    R[..., 2, 1] = ct * sf
    R[..., 2, 2] = ct * cf
    return R


def rotation_matrix(att: EulerAngles | np.ndarray) -> np.ndarray:
    """3x3 body-to-world rotation for a single attitude."""
    a = att.as_array() if isinstance(att, EulerAngles) else np.asarray(att, dtype=float)
    return rotation_matrices(a)


def check_gimbal(att: np.ndarray, guard: float = GIMBAL_GUARD) -> None:
    """Raise GimbalDomainError if roll or pitch leaves the safe domain."""
    att = np.asarray(att, dtype=float)
    limit = np.pi / 2.0 - guard
    if np.any(np.abs(att[..., :2]) >= limit):
        raise GimbalDomainError(
            f"attitude outside |phi|,|theta| < pi/2 - {guard}: {att!r}"
        )


def euler_rate_matrices(att: np.ndarray, guard: float = GIMBAL_GUARD) -> np.ndarray:
    """Transform Gamma mapping body rates to Euler-angle rates, batched.

    Gamma(Th) = [[1, s(phi) t(theta),  c(phi) t(theta)],
                 [0, c(phi),          -s(phi)         ],
                 [0, s(phi)/c(theta),  c(phi)/c(theta)]]

    Raises GimbalDomainError outside the guarded invertibility domain.
    """
    att = np.asarray(att, dtype=float)
    check_gimbal(att, guard)
    phi, theta = att[..., 0], att[..., 1]
    cf, sf = np.cos(phi), np.sin(phi)
    ct, tt = np.cos(theta), np.tan(theta)

    G = np.zeros(att.shape[:-1] + (3, 3))
    G[..., 0, 0] = 1.0
    G[..., 0, 1] = sf * tt
    G[..., 0, 2] = cf * tt
    G[..., 1, 1] = cf
    G[..., 1, 2] = -sf
    G[..., 2, 1] = sf / ct
    G[..., 2, 2] = cf / ct
    return G


def euler_rate_transform(att: EulerAngles | np.ndarray, guard: float = GIMBAL_GUARD) -> np.ndarray:
    """Single-attitude Gamma(Th); see :func:`euler_rate_matrices`."""
    a = att.as_array() if isinstance(att, EulerAngles) else np.asarray(att, dtype=float)
    return euler_rate_matrices(a, guard)


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product (hat) matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(M: np.ndarray) -> np.ndarray:
    """Inverse of :func:`skew` for a skew-symmetric 3x3 matrix."""
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


# quaternions, scalar-first (w, x, y, z); used for attitude error math
def euler_to_quat(att: np.ndarray) -> np.ndarray:
    phi, theta, psi = np.asarray(att, dtype=float)
    cf, sf = np.cos(phi / 2), np.sin(phi / 2)
    ct, st = np.cos(theta / 2), np.sin(theta / 2)
    cp, sp = np.cos(psi / 2), np.sin(psi / 2)
    # qz(psi) * qy(theta) * qx(phi)
    return np.array([
        cp * ct * cf + sp * st * sf,
        cp * ct * sf - sp * st * cf,
        cp * st * cf + sp * ct * sf,
        sp * ct * cf - cp * st * sf,
    ])


def quat_mul(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q
    w2, x2, y2, z2 = p
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_log3(q: np.ndarray) -> np.ndarray:
    """Rotation-vector logarithm of a unit quaternion.

    Canonicalizes sign (w >= 0) so antipodal representations agree; returns
    zero at identity.
    """
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    vec = q[1:]
    s = np.linalg.norm(vec)
    if s < 1e-12:
        return 2.0 * vec  # small-angle limit
    angle = 2.0 * np.arctan2(s, q[0])
    return angle * vec / s


# ---------------------------------------------------------------------------
# parameters and state containers
# ---------------------------------------------------------------------------

def _check_spd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {M.shape}")
    if not np.allclose(M, M.T, atol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.linalg.eigvalsh(M) <= 0.0):
        raise ValueError(f"{name} must be positive definite")
    return M


@dataclass
class QuadrotorParams:
    mass: float
    inertia: np.ndarray
    f_max: float
    tau_max: float = 0.2

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("quadrotor mass must be positive")
        if self.f_max <= 0.0:
            raise ValueError("f_max must be positive")
        self.inertia = _check_spd(self.inertia, "quadrotor inertia")


@dataclass
class PayloadParams:
    mass: float
    inertia: np.ndarray
    attachments: np.ndarray  # (N, 3) body-frame offsets
    cable_length: float
    cable_stiffness: float = 5000.0
    cable_damping: float = 50.0

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("payload mass must be positive")
        self.inertia = _check_spd(self.inertia, "payload inertia")
        self.attachments = np.atleast_2d(np.asarray(self.attachments, dtype=float))
        if self.attachments.shape[0] < 1 or self.attachments.shape[1] != 3:
            raise ValueError("attachments must be a non-empty (N, 3) array")
        if self.cable_length <= 0.0:
            raise ValueError("cable_length must be positive")
        if self.cable_stiffness < 0.0 or self.cable_damping < 0.0:
            raise ValueError("cable stiffness/damping must be non-negative")

    @property
    def n_cables(self) -> int:
        return self.attachments.shape[0]


@dataclass
class SystemParams:
    """Full team parameterization plus the gravity vector."""

    quads: Sequence[QuadrotorParams]
    payload: PayloadParams
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float)
        if len(self.quads) != self.payload.n_cables:
            raise ValueError("one attachment per quadrotor required")
        # cached arrays for the vectorized derivative
        self.quad_mass = np.array([q.mass for q in self.quads])
        self.quad_f_max = np.array([q.f_max for q in self.quads])
        self.quad_inertia = np.stack([q.inertia for q in self.quads])
        self.quad_inertia_inv = np.linalg.inv(self.quad_inertia)
        self.payload_inertia_inv = np.linalg.inv(self.payload.inertia)

    @property
    def n(self) -> int:
        return len(self.quads)


@dataclass
class QuadrotorState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: EulerAngles
    body_rates: np.ndarray


@dataclass
class PayloadState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: EulerAngles
    body_rates: np.ndarray


@dataclass
class CableState:
    tension: float
    direction_body: np.ndarray
    taut: bool


@dataclass
class QuadInput:
    thrust: float
    torque: np.ndarray


class SystemState:
    """Payload + quadrotor states with a packed-vector representation.

    The packed layout groups fields across the team so the derivative can be
    evaluated with array operations:

        [pL(3), ThL(3), vL(3), wL(3),
         p(N,3), Th(N,3), v(N,3), w(N,3)]  all row-major flattened
    """

    def __init__(self, time: float, vec: np.ndarray, n: int):
        self.time = float(time)
        self.vec = np.asarray(vec, dtype=float)
        self.n = n
        if self.vec.shape != (12 + 12 * n,):
            raise ValueError(f"state vector must have length {12 + 12 * n}")

    # --- payload views -----------------------------------------------------
    @property
    def payload_pos(self) -> np.ndarray:
        return self.vec[0:3]

    @property
    def payload_att(self) -> np.ndarray:
        return self.vec[3:6]

    @property
    def payload_vel(self) -> np.ndarray:
        return self.vec[6:9]

    @property
    def payload_omega(self) -> np.ndarray:
        return self.vec[9:12]

    # --- quadrotor views, shape (N, 3) --------------------------------------
    def _block(self, k: int) -> np.ndarray:
        off = 12 + 3 * self.n * k
        return self.vec[off:off + 3 * self.n].reshape(self.n, 3)

    @property
    def quad_pos(self) -> np.ndarray:
        return self._block(0)

    @property
    def quad_att(self) -> np.ndarray:
        return self._block(1)

    @property
    def quad_vel(self) -> np.ndarray:
        return self._block(2)

    @property
    def quad_omega(self) -> np.ndarray:
        return self._block(3)

    @property
    def payload(self) -> PayloadState:
        return PayloadState(self.payload_pos.copy(), self.payload_vel.copy(),
                            EulerAngles.from_array(self.payload_att),
                            self.payload_omega.copy())

    @property
    def quads(self) -> list[QuadrotorState]:
        return [QuadrotorState(self.quad_pos[i].copy(), self.quad_vel[i].copy(),
                               EulerAngles.from_array(self.quad_att[i]),
                               self.quad_omega[i].copy())
                for i in range(self.n)]

    def cables(self, params: SystemParams) -> list[CableState]:
        """Cable states derived from the current geometry."""
        tension, e_body, taut, _, _ = _cable_arrays(self, params)
        return [CableState(float(tension[i]), e_body[i].copy(), bool(taut[i]))
                for i in range(self.n)]

    def copy(self) -> "SystemState":
        return SystemState(self.time, self.vec.copy(), self.n)

    @staticmethod
    def assemble(time: float,
                 payload: PayloadState,
                 quads: Sequence[QuadrotorState]) -> "SystemState":
        n = len(quads)
        vec = np.empty(12 + 12 * n)
        vec[0:3] = payload.position
        vec[3:6] = payload.attitude.as_array()
        vec[6:9] = payload.velocity
        vec[9:12] = payload.body_rates
        vec[12:12 + 3 * n] = np.stack([q.position for q in quads]).ravel()
        vec[12 + 3 * n:12 + 6 * n] = np.stack([q.attitude.as_array() for q in quads]).ravel()
        vec[12 + 6 * n:12 + 9 * n] = np.stack([q.velocity for q in quads]).ravel()
        vec[12 + 9 * n:12 + 12 * n] = np.stack([q.body_rates for q in quads]).ravel()
        return SystemState(time, vec, n)


# ---------------------------------------------------------------------------
# force elements
# ---------------------------------------------------------------------------

def saturate_thrust(f: float, f_max: float) -> float:
    """Collective-thrust saturation: caps at f_max, clamps negatives to zero."""
    if f >= f_max:
        return f_max
    return max(f, 0.0)


def _cable_arrays(state: SystemState, params: SystemParams):
    """Vectorized cable model for the whole team.

    Returns (tension (N,), e_body (N,3), taut (N,), force_on_quad_world (N,3),
    attach_world (N,3)).
    """
    p = params.payload
    R_L = rotation_matrices(state.payload_att)
    attach_world = state.payload_pos + params.payload.attachments @ R_L.T
    # attachment velocity: v_L + R (w x r)
    w = state.payload_omega
    attach_vel = state.payload_vel + np.cross(w, p.attachments) @ R_L.T

    d = attach_world - state.quad_pos                     # quad -> attachment
    dist = np.linalg.norm(d, axis=1)
    if np.any(dist < 1e-9):
        raise DegenerateCableError("quadrotor coincides with attachment point")
    d_hat = d / dist[:, None]

    stretch = dist - p.cable_length
    stretch_rate = np.einsum("ij,ij->i", d_hat, attach_vel - state.quad_vel)
    taut = stretch >= 0.0
    tension = np.where(
        taut,
        np.maximum(0.0, p.cable_stiffness * stretch + p.cable_damping * stretch_rate),
        0.0,
    )
    e_body = d_hat @ R_L  # R_L^T applied row-wise
    force_on_quad = tension[:, None] * d_hat
    return tension, e_body, taut, force_on_quad, attach_world


def cable_forces(quad: QuadrotorState, payload: PayloadState, r_i: np.ndarray,
                 params: PayloadParams) -> CableState:
    """Single-cable state for one quadrotor/attachment pair."""
    r_i = np.asarray(r_i, dtype=float)
    R_L = rotation_matrix(payload.attitude)
    attach = payload.position + R_L @ r_i
    attach_vel = payload.velocity + R_L @ np.cross(payload.body_rates, r_i)

    d = attach - quad.position
    dist = float(np.linalg.norm(d))
    if dist < 1e-9:
        raise DegenerateCableError("quadrotor coincides with attachment point")
    d_hat = d / dist

    stretch = dist - params.cable_length
    if stretch < 0.0:
        return CableState(0.0, R_L.T @ d_hat, False)
    stretch_rate = float(d_hat @ (attach_vel - quad.velocity))
    tension = max(0.0, params.cable_stiffness * stretch
                  + params.cable_damping * stretch_rate)
    return CableState(tension, R_L.T @ d_hat, True)


# ---------------------------------------------------------------------------
# equations of motion
# ---------------------------------------------------------------------------

def _derivative_vec(state: SystemState, thrust: np.ndarray, torque: np.ndarray,
                    params: SystemParams) -> np.ndarray:
    """Time derivative of the packed state vector.

    thrust: (N,) pre-saturation collective thrusts; torque: (N, 3) body moments.
    """
    n = params.n
    check_gimbal(state.quad_att)
    check_gimbal(state.payload_att)

    tension, e_body, _, force_on_quad, _ = _cable_arrays(state, params)
    g = params.gravity

    # quadrotors
    R_q = rotation_matrices(state.quad_att)
    f_sat = np.clip(thrust, 0.0, params.quad_f_max)
    thrust_world = f_sat[:, None] * R_q[:, :, 2]
    quad_acc = g + (thrust_world + force_on_quad) / params.quad_mass[:, None]

    G_q = euler_rate_matrices(state.quad_att)
    quad_att_rate = np.einsum("nij,nj->ni", G_q, state.quad_omega)

    Jw = np.einsum("nij,nj->ni", params.quad_inertia, state.quad_omega)
    gyro = np.cross(state.quad_omega, Jw)
    quad_omega_dot = np.einsum("nij,nj->ni", params.quad_inertia_inv, torque - gyro)

    # payload
    p = params.payload
    R_L = rotation_matrices(state.payload_att)
    cable_sum = (tension[:, None] * e_body).sum(axis=0)
    load_acc = g - (R_L @ cable_sum) / p.mass

    G_L = euler_rate_matrices(state.payload_att)
    load_att_rate = G_L @ state.payload_omega

    wL = state.payload_omega
    moment = np.cross(p.attachments, -tension[:, None] * e_body).sum(axis=0)
    load_omega_dot = params.payload_inertia_inv @ (
        moment - np.cross(wL, p.inertia @ wL))

    out = np.empty_like(state.vec)
    out[0:3] = state.payload_vel
    out[3:6] = load_att_rate
    out[6:9] = load_acc
    out[9:12] = load_omega_dot
    out[12:12 + 3 * n] = state.quad_vel.ravel()
    out[12 + 3 * n:12 + 6 * n] = quad_att_rate.ravel()
    out[12 + 6 * n:12 + 9 * n] = quad_acc.ravel()
    out[12 + 9 * n:12 + 12 * n] = quad_omega_dot.ravel()
    return out


def _inputs_to_arrays(inputs: Sequence[QuadInput], n: int):
    if len(inputs) != n:
        raise ValueError(f"expected {n} inputs, got {len(inputs)}")
    thrust = np.array([u.thrust for u in inputs], dtype=float)
    torque = np.stack([np.asarray(u.torque, dtype=float) for u in inputs])
    return thrust, torque


def system_derivative(state: SystemState, inputs: Sequence[QuadInput],
                      params: SystemParams) -> SystemState:
    """Full-system derivative as a SystemState-shaped container (time slot = 1)."""
    thrust, torque = _inputs_to_arrays(inputs, params.n)
    dvec = _derivative_vec(state, thrust, torque, params)
    return SystemState(1.0, dvec, params.n)


def integrate_rk4(state: SystemState, inputs: Sequence[QuadInput], dt: float,
                  params: SystemParams) -> SystemState:
    """One classical RK4 step with inputs held constant over the interval."""
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    if dt == 0.0:
        return state.copy()
    thrust, torque = _inputs_to_arrays(inputs, params.n)
    n = params.n

    def f(vec: np.ndarray) -> np.ndarray:
        return _derivative_vec(SystemState(state.time, vec, n), thrust, torque, params)

    y = state.vec
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_new)):
        raise NonFiniteStateError(f"state diverged at t={state.time + dt}")
    return SystemState(state.time + dt, y_new, n)
