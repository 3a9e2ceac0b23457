"""SO(3)/SE(3) operations on rotation-translation pairs.

Poses map camera coordinates to world coordinates: P_W = R @ P_C + t.
Tangent vectors are ordered (rho, omega) with rho the translational part,
and updates use the right convention T * exp(xi^).
"""

import numpy as np


def hat(w):
    """Skew-symmetric 3x3 matrix of a 3-vector."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def so3_exp(w):
    """Rotation matrix from a rotation vector (Rodrigues)."""
    theta2 = float(np.dot(w, w))
    W = hat(w)
    if theta2 < 1e-16:
        return np.eye(3) + W + 0.5 * (W @ W)
    theta = np.sqrt(theta2)
    return (np.eye(3)
            + (np.sin(theta) / theta) * W
            + ((1.0 - np.cos(theta)) / theta2) * (W @ W))


def so3_log(R):
    """Rotation vector of a rotation matrix."""
    cos_theta = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-10:
        # first-order: R ~ I + hat(w)
        return np.array([R[2, 1] - R[1, 2],
                         R[0, 2] - R[2, 0],
                         R[1, 0] - R[0, 1]]) * 0.5
    if np.pi - theta < 1e-6:
        # near pi the antisymmetric part degenerates; use the symmetric part
        axis = np.sqrt(np.maximum((np.diag(R) + 1.0) / 2.0, 0.0))
        # fix signs from off-diagonal sums
        if axis[0] >= axis[1] and axis[0] >= axis[2]:
            axis[1] = np.copysign(axis[1], R[0, 1] + R[1, 0])
            axis[2] = np.copysign(axis[2], R[0, 2] + R[2, 0])
        elif axis[1] >= axis[2]:
            axis[0] = np.copysign(axis[0], R[0, 1] + R[1, 0])
            axis[2] = np.copysign(axis[2], R[1, 2] + R[2, 1])
        else:
            axis[0] = np.copysign(axis[0], R[0, 2] + R[2, 0])
            axis[1] = np.copysign(axis[1], R[1, 2] + R[2, 1])
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            return np.zeros(3)
        return theta * axis / norm
    return theta / (2.0 * np.sin(theta)) * np.array([R[2, 1] - R[1, 2],
                                                     R[0, 2] - R[2, 0],
                                                     R[1, 0] - R[0, 1]])


def _so3_left_jacobian(w):
    theta2 = float(np.dot(w, w))
    W = hat(w)
    if theta2 < 1e-16:
        return np.eye(3) + 0.5 * W + (W @ W) / 6.0
    theta = np.sqrt(theta2)
    return (np.eye(3)
            + ((1.0 - np.cos(theta)) / theta2) * W
            + ((theta - np.sin(theta)) / (theta2 * theta)) * (W @ W))


def _so3_left_jacobian_inv(w):
    theta2 = float(np.dot(w, w))
    W = hat(w)
    if theta2 < 1e-16:
        return np.eye(3) - 0.5 * W + (W @ W) / 12.0
    theta = np.sqrt(theta2)
    cot_half = 1.0 / np.tan(0.5 * theta)
    coeff = (1.0 / theta2) * (1.0 - 0.5 * theta * cot_half)
    return np.eye(3) - 0.5 * W + coeff * (W @ W)


class SE3:
    """Rigid transform with rotation matrix R and translation t."""

    __slots__ = ("R", "t")

    def __init__(self, R=None, t=None):
        self.R = np.eye(3) if R is None else np.asarray(R, dtype=float)
        self.t = np.zeros(3) if t is None else np.asarray(t, dtype=float).reshape(3)

    @staticmethod
    def identity():
        return SE3()

    @staticmethod
    def exp(xi):
        """Exponential map; xi = (rho, omega)."""
        xi = np.asarray(xi, dtype=float)
        rho, omega = xi[:3], xi[3:]
        R = so3_exp(omega)
        V = _so3_left_jacobian(omega)
        return SE3(R, V @ rho)

    def log(self):
        """Tangent vector (rho, omega) with self = exp(...)."""
        omega = so3_log(self.R)
        rho = _so3_left_jacobian_inv(omega) @ self.t
        return np.concatenate([rho, omega])

    def compose(self, other):
        return SE3(self.R @ other.R, self.R @ other.t + self.t)

    def __mul__(self, other):
        return self.compose(other)

    def inverse(self):
        Rt = self.R.T
        return SE3(Rt, -Rt @ self.t)

    def retract(self, xi):
        """Right-perturbed update T * exp(xi^)."""
        return self.compose(SE3.exp(xi))

    def transform(self, points):
        """Apply to world-bound points; accepts (3,) or (N, 3)."""
        points = np.asarray(points, dtype=float)
        return points @ self.R.T + self.t

    def inverse_transform(self, points):
        """World points into this pose's camera frame."""
        points = np.asarray(points, dtype=float)
        return (points - self.t) @ self.R

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.t
        return T

    @staticmethod
    def from_matrix(T):
        return SE3(T[:3, :3].copy(), T[:3, 3].copy())

    def copy(self):
        return SE3(self.R.copy(), self.t.copy())

    def __repr__(self):
        return f"SE3(t={np.array2string(self.t, precision=4)})"


def rotation_to_quaternion(R):
    """Unit quaternion (qx, qy, qz, qw) of a rotation matrix."""
    trace = np.trace(R)
    if trace > 0:
        s = 0.5 / np.sqrt(trace + 1.0)
        qw = 0.25 / s
        qx = (R[2, 1] - R[1, 2]) * s
        qy = (R[0, 2] - R[2, 0]) * s
        qz = (R[1, 0] - R[0, 1]) * s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        qw = (R[2, 1] - R[1, 2]) / s
        qx = 0.25 * s
        qy = (R[0, 1] + R[1, 0]) / s
        qz = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        qw = (R[0, 2] - R[2, 0]) / s
        qx = (R[0, 1] + R[1, 0]) / s
        qy = 0.25 * s
        qz = (R[1, 2] + R[2, 1]) / s
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        qw = (R[1, 0] - R[0, 1]) / s
        qx = (R[0, 2] + R[2, 0]) / s
        qy = (R[1, 2] + R[2, 1]) / s
        qz = 0.25 * s
    q = np.array([qx, qy, qz, qw])
    q /= np.linalg.norm(q)
    if q[3] < 0:
        q = -q
    return q


def quaternion_to_rotation(q):
    """Rotation matrix of a unit quaternion (qx, qy, qz, qw)."""
    qx, qy, qz, qw = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
        [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
        [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
    ])
