"""Skeleton preprocessing: ego-centred frames, scale normalisation, joint attention.

Conventions: +y is vertical, +x is the canonical lateral axis (the
left-to-right shoulder direction after rotation). Frames are arrays of shape
``(J, 3)``; a sequence stores them stacked as ``(T, J, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

EPS = 1e-12


class PreprocessError(ValueError):
    """Sequence cannot be normalised (e.g. zero torso length)."""


@dataclass(frozen=True)
class JointSchema:
    name: str
    joints: tuple[str, ...]
    root: str
    neck: str
    left_shoulder: str
    right_shoulder: str

    def __len__(self) -> int:
        return len(self.joints)

    def index(self, joint: str) -> int:
        return self.joints.index(joint)


MSR20 = JointSchema(
    "msr20",
    ("right_shoulder", "left_shoulder", "neck", "spine", "right_hip", "left_hip",
     "hip_center", "right_elbow", "left_elbow", "right_wrist", "left_wrist",
     "right_hand", "left_hand", "right_knee", "left_knee", "right_ankle",
     "left_ankle", "right_foot", "left_foot", "head"),
    root="hip_center", neck="neck", left_shoulder="left_shoulder",
    right_shoulder="right_shoulder",
)

# Florence has no hip-centre joint; the spine joint is the lowest torso point.
FLORENCE15 = JointSchema(
    "florence15",
    ("head", "neck", "spine", "left_shoulder", "left_elbow", "left_wrist",
     "right_shoulder", "right_elbow", "right_wrist", "left_hip", "left_knee",
     "left_ankle", "right_hip", "right_knee", "right_ankle"),
    root="spine", neck="neck", left_shoulder="left_shoulder",
    right_shoulder="right_shoulder",
)

SCHEMAS = {s.name: s for s in (MSR20, FLORENCE15)}


def get_schema(name: str) -> JointSchema:
    try:
        return SCHEMAS[name]
    except KeyError:
        raise ValueError(f"unknown joint schema {name!r}; known: {sorted(SCHEMAS)}") from None


@dataclass
class SkeletonSequence:
    frames: np.ndarray
    label: int
    subject: int = 0
    event: int = 0
    schema: str = "msr20"
    name: str = ""
    # indices into the schema of the joints present in ``frames``
    joints: tuple[int, ...] | None = None
    unrotated: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 3 or self.frames.shape[2] != 3 or self.frames.shape[0] == 0:
            raise ValueError(f"frames must be a non-empty (T, J, 3) array, got {self.frames.shape}")
        if self.joints is None:
            self.joints = tuple(range(self.frames.shape[1]))
        if len(self.joints) != self.frames.shape[1]:
            raise ValueError("joint index list does not match the frame width")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("skeleton coordinates must be finite")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames, **changes) -> "SkeletonSequence":
        return replace(self, frames=frames, **changes)


def _schema_positions(seq: SkeletonSequence, schema: JointSchema, *names: str) -> list[int]:
    out = []
    for n in names:
        j = schema.index(n)
        if j not in seq.joints:
            raise PreprocessError(f"joint {n!r} was removed before this step")
        out.append(seq.joints.index(j))
    return out


def egocentric_transform(seq: SkeletonSequence) -> SkeletonSequence:
    """Per frame: move the root joint to the origin, then rotate about +y so the
    left-to-right shoulder vector points along +x.

    Frames whose shoulders coincide in the horizontal plane stay unrotated and
    are listed in ``unrotated``.
    """
    schema = get_schema(seq.schema)
    root, ls, rs = _schema_positions(seq, schema, schema.root, schema.left_shoulder,
                                     schema.right_shoulder)
    f = seq.frames - seq.frames[:, root:root + 1, :]
    lateral = f[:, rs, :] - f[:, ls, :]
    vx, vz = lateral[:, 0], lateral[:, 2]
    norm = np.hypot(vx, vz)
    ok = norm > EPS
    c = np.where(ok, vx / np.where(ok, norm, 1.0), 1.0)
    s = np.where(ok, vz / np.where(ok, norm, 1.0), 0.0)
    x, y, z = f[..., 0], f[..., 1], f[..., 2]
    out = np.stack([c[:, None] * x + s[:, None] * z,
                    y,
                    -s[:, None] * x + c[:, None] * z], axis=-1)
    flagged = tuple(int(i) for i in np.flatnonzero(~ok))
    return seq.with_frames(out, unrotated=flagged)


def torso_length(frame: np.ndarray, seq: SkeletonSequence) -> float:
    schema = get_schema(seq.schema)
    root, neck = _schema_positions(seq, schema, schema.root, schema.neck)
    return float(np.linalg.norm(frame[neck] - frame[root]))


def scale_normalize(seq: SkeletonSequence) -> SkeletonSequence:
    """Scale the whole sequence so the first frame's root-neck distance is 1."""
    length = torso_length(seq.frames[0], seq)
    if not length > EPS:
        raise PreprocessError(f"zero torso length in first frame of {seq.name or 'sequence'}")
    return seq.with_frames(seq.frames / length)


def joint_path_lengths(seq: SkeletonSequence) -> np.ndarray:
    if len(seq) < 2:
        return np.zeros(seq.n_joints)
    steps = np.linalg.norm(np.diff(seq.frames, axis=0), axis=2)
    return steps.sum(axis=0)


def attention_select(seq: SkeletonSequence, k: int) -> SkeletonSequence:
    """Keep the ``k`` joints that travel furthest over the sequence.

    Ties go to the lower schema index; kept joints stay in schema order.
    """
    if not 1 <= k <= seq.n_joints:
        raise ValueError(f"k must be in [1, {seq.n_joints}], got {k}")
    if k == seq.n_joints:
        return seq
    motion = joint_path_lengths(seq)
    # stable sort on -motion keeps lower indices first among equals
    chosen = np.sort(np.argsort(-motion, kind="stable")[:k])
    return seq.with_frames(seq.frames[:, chosen, :],
                           joints=tuple(seq.joints[i] for i in chosen))


def to_native_vector(frame: np.ndarray) -> np.ndarray:
    """Concatenated (x, y, z) of each joint, in joint order."""
    return np.asarray(frame, dtype=float).reshape(-1)


@dataclass(frozen=True)
class PreprocessConfig:
    schema: str = "msr20"
    attention_k: int | None = None  # None keeps every joint
    egocentric: bool = True
    scale: bool = True

    def native_dim(self) -> int:
        k = self.attention_k or len(get_schema(self.schema))
        return 3 * k


def preprocess(seq: SkeletonSequence, cfg: PreprocessConfig) -> np.ndarray:
    """Raw sequence -> ``(T, 3k)`` native input vectors."""
    if seq.schema != cfg.schema:
        raise ValueError(f"sequence schema {seq.schema!r} does not match config {cfg.schema!r}")
    if cfg.egocentric:
        seq = egocentric_transform(seq)
    if cfg.scale:
        seq = scale_normalize(seq)
    if cfg.attention_k is not None:
        seq = attention_select(seq, cfg.attention_k)
    return seq.frames.reshape(len(seq), -1)
