"""Thin-plate RBF lifting dictionary and snapshot data matrices.

The lifted state keeps the native state in its first n components and
appends one thin-plate radial basis value per center:

    psi(x) = [x_1, ..., x_n, d_1^2 ln d_1, ..., d_N^2 ln d_N]',
    d_i = ||x - r_i||_2,

with the singular value at d = 0 replaced by its limit 0.  Optional
z-scoring (mean/scale) is stored with the dictionary so a serialized model
fully determines lifted simulation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectoryData


class DimensionMismatchError(ValueError):
    """Trajectory and dictionary dimensions disagree."""


@dataclass(frozen=True)
class LiftingDictionary:
    """State-identity plus thin-plate RBF observables.

    Attributes:
        n: Native state dimension.
        centers: (n_rbf, n) RBF centers, pairwise distinct.
        mean/scale: Optional per-dimension z-scoring applied before lifting
            (and undone by :meth:`unlift_state`); None disables it.
    """

    n: int
    centers: np.ndarray
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.n)
        object.__setattr__(self, "centers", centers)
        if self.mean is not None:
            object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if self.scale is not None:
            scale = np.asarray(self.scale, dtype=float)
            if np.any(scale <= 0):
                raise ValueError("z-scoring scale must be positive")
            object.__setattr__(self, "scale", scale)
        if len(centers) > 1:
            diffs = centers[:, None, :] - centers[None, :, :]
            dist = np.sqrt(np.sum(diffs**2, axis=-1))
            np.fill_diagonal(dist, np.inf)
            if dist.min() < 1e-9:
                raise ValueError("RBF centers must be pairwise distinct")

    @property
    def n_rbf(self) -> int:
        return self.centers.shape[0]

    @property
    def size(self) -> int:
        """Total lifted dimension N = n + n_rbf."""
        return self.n + self.n_rbf

    def _normalize(self, x: np.ndarray) -> np.ndarray:
        if self.mean is not None:
            x = x - self.mean
        if self.scale is not None:
            x = x / self.scale
        return x

    def lift(self, x) -> np.ndarray:
        """Lift a single state vector to length ``size``."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise DimensionMismatchError(f"state has length {x.size}, expected {self.n}")
        z = self._normalize(x)
        out = np.empty(self.size)
        out[: self.n] = z
        if self.n_rbf:
            d = np.linalg.norm(z[None, :] - self.centers, axis=1)
            out[self.n :] = _thin_plate(d)
        return out

    def lift_columns(self, states: np.ndarray) -> np.ndarray:
        """Lift each row of (K, n) ``states``; returns (size, K) columns."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.n:
            raise DimensionMismatchError(
                f"states have dimension {states.shape[1]}, expected {self.n}"
            )
        z = self._normalize(states)
        blocks = [z.T]
        if self.n_rbf:
            d = np.linalg.norm(z[:, None, :] - self.centers[None, :, :], axis=2)
            blocks.append(_thin_plate(d).T)
        return np.vstack(blocks)

    def unlift_state(self, leading: np.ndarray) -> np.ndarray:
        """Map the first n lifted components back to native coordinates."""
        x = np.asarray(leading, dtype=float)
        if self.scale is not None:
            x = x * self.scale
        if self.mean is not None:
            x = x + self.mean
        return x

    def to_json_dict(self) -> dict:
        out = {"n": self.n, "centers": self.centers.tolist()}
        if self.mean is not None:
            out["mean"] = self.mean.tolist()
        if self.scale is not None:
            out["scale"] = self.scale.tolist()
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "LiftingDictionary":
        return cls(
            n=int(d["n"]),
            centers=np.asarray(d["centers"], dtype=float).reshape(-1, int(d["n"])),
            mean=np.asarray(d["mean"], dtype=float) if "mean" in d else None,
            scale=np.asarray(d["scale"], dtype=float) if "scale" in d else None,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _thin_plate(d: np.ndarray) -> np.ndarray:
    """d^2 ln d with the removable singularity at d = 0 set to its limit 0."""
    out = np.zeros_like(d)
    pos = d > 0
    out[pos] = d[pos] ** 2 * np.log(d[pos])
    return out


def sample_centers(
    n: int, n_rbf: int, box, seed: int = 0, min_separation: float = 1e-9
) -> LiftingDictionary:
    """Draw ``n_rbf`` distinct centers uniformly from a per-dimension box.

    ``box`` is (n, 2) rows of [low, high].  Draws closer than
    ``min_separation`` to an accepted center are rejected and redrawn, so
    the result is deterministic given the seed.
    """
    box = np.asarray(box, dtype=float).reshape(n, 2)
    if not np.all(np.isfinite(box)):
        raise ValueError("sampling box must be finite")
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    attempts = 0
    while len(accepted) < n_rbf:
        c = rng.uniform(box[:, 0], box[:, 1])
        if all(np.linalg.norm(c - a) >= min_separation for a in accepted):
            accepted.append(c)
        attempts += 1
        if attempts > 1000 * max(n_rbf, 1):
            raise RuntimeError("could not draw distinct centers; box too degenerate")
    centers = np.array(accepted).reshape(n_rbf, n)
    return LiftingDictionary(n=n, centers=centers)


def state_box(states: np.ndarray, inflate: float = 0.1) -> np.ndarray:
    """Empirical min/max box of training states, inflated symmetrically.

    Zero-width dimensions are widened to +/- inflate so the box never
    degenerates.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    lo = states.min(axis=0)
    hi = states.max(axis=0)
    width = np.maximum(hi - lo, 0.0)
    pad = np.where(width > 0, 0.5 * inflate * width, inflate if inflate > 0 else 1.0)
    return np.stack([lo - pad, hi + pad], axis=1)


def make_dictionary(
    traj: TrajectoryData,
    n_rbf: int,
    seed: int = 0,
    normalize: bool = False,
    inflate: float = 0.1,
) -> LiftingDictionary:
    """Build a dictionary for a trajectory: box from data, centers by seed.

    With ``normalize`` the states are z-scored first and the centers are
    drawn in the normalized coordinates.
    """
    states = traj.states
    mean = scale = None
    if normalize:
        mean = states.mean(axis=0)
        scale = states.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        states = (states - mean) / scale
    base = sample_centers(traj.n, n_rbf, state_box(states, inflate), seed=seed)
    return LiftingDictionary(n=traj.n, centers=base.centers, mean=mean, scale=scale)


@dataclass(frozen=True)
class DataMatrices:
    """Snapshot matrices: lifted states, shifted lifted states, inputs, outputs."""

    Theta: np.ndarray  # (N, L)
    ThetaPlus: np.ndarray  # (N, L)
    Omega: np.ndarray  # (m, L)
    Y: np.ndarray  # (l, L)

    def __post_init__(self):
        Ls = {self.Theta.shape[1], self.ThetaPlus.shape[1], self.Omega.shape[1], self.Y.shape[1]}
        if len(Ls) != 1:
            raise DimensionMismatchError(f"inconsistent column counts {Ls}")
        for name in ("Theta", "ThetaPlus", "Omega", "Y"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def L(self) -> int:
        return self.Theta.shape[1]


def build_matrices(traj: TrajectoryData, dictionary: LiftingDictionary) -> DataMatrices:
    """Assemble the four snapshot matrices from a trajectory.

    Column k holds psi(x(k)), psi(x(k+1)), u(k) and y(k) respectively,
    k = 0..L-1.
    """
    if traj.n != dictionary.n:
        raise DimensionMismatchError(
            f"trajectory state dimension {traj.n} != dictionary {dictionary.n}"
        )
    lifted = dictionary.lift_columns(traj.states)  # (N, L+1)
    return DataMatrices(
        Theta=lifted[:, :-1].copy(),
        ThetaPlus=lifted[:, 1:].copy(),
        Omega=traj.inputs.T.copy(),
        Y=traj.outputs[:-1].T.copy(),
    )
