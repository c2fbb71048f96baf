"""Synthetic skeleton actions for tests, demos and smoke runs.

Each class is a fixed periodic motion of a few limbs around a standing
pose. Every generated sequence applies its own performer scale, facing
direction, position, tempo and sensor noise, so the preprocessing layer has
something to undo.
"""
from __future__ import annotations

import numpy as np

from .datasets import Dataset
from .skeleton import MSR20, JointSchema, SkeletonSequence, get_schema

# standing pose in metres; +y up, +x towards the performer's right
_POSE = {
    "hip_center": (0.0, 0.0, 0.0), "spine": (0.0, 0.25, 0.0), "neck": (0.0, 0.5, 0.0),
    "head": (0.0, 0.65, 0.0),
    "right_shoulder": (0.18, 0.45, 0.0), "left_shoulder": (-0.18, 0.45, 0.0),
    "right_elbow": (0.21, 0.18, 0.0), "left_elbow": (-0.21, 0.18, 0.0),
    "right_wrist": (0.23, -0.05, 0.02), "left_wrist": (-0.23, -0.05, 0.02),
    "right_hand": (0.23, -0.12, 0.03), "left_hand": (-0.23, -0.12, 0.03),
    "right_hip": (0.1, -0.05, 0.0), "left_hip": (-0.1, -0.05, 0.0),
    "right_knee": (0.1, -0.45, 0.02), "left_knee": (-0.1, -0.45, 0.02),
    "right_ankle": (0.1, -0.85, 0.0), "left_ankle": (-0.1, -0.85, 0.0),
    "right_foot": (0.1, -0.9, 0.08), "left_foot": (-0.1, -0.9, 0.08),
}

# limb -> (joint, share of the limb displacement)
_LIMBS = {
    "right_arm": (("right_elbow", 0.5), ("right_wrist", 0.9), ("right_hand", 1.0)),
    "left_arm": (("left_elbow", 0.5), ("left_wrist", 0.9), ("left_hand", 1.0)),
    "right_leg": (("right_knee", 0.5), ("right_ankle", 0.9), ("right_foot", 1.0)),
    "left_leg": (("left_knee", 0.5), ("left_ankle", 0.9), ("left_foot", 1.0)),
    "torso": (("spine", 0.2), ("neck", 0.6), ("head", 1.0),
              ("right_shoulder", 0.6), ("left_shoulder", 0.6)),
}
_LIMB_NAMES = tuple(_LIMBS)


def base_pose(schema: JointSchema) -> np.ndarray:
    return np.array([_POSE[j] for j in schema.joints], dtype=float)


def _class_templates(n_classes: int, rng: np.random.Generator) -> list[list[tuple]]:
    templates = []
    for c in range(n_classes):
        n_limbs = 1 + c % 2 + (c % 3 == 0)
        limbs = rng.choice(len(_LIMB_NAMES), size=min(n_limbs, len(_LIMB_NAMES)), replace=False)
        motions = []
        for li in limbs:
            amp = rng.normal(size=3)
            amp *= rng.uniform(0.25, 0.5) / np.linalg.norm(amp)
            amp2 = rng.normal(size=3)
            amp2 *= rng.uniform(0.05, 0.2) / np.linalg.norm(amp2)
            cycles = rng.choice([0.5, 1.0, 1.5, 2.0])
            phase = rng.uniform(0, 2 * np.pi)
            motions.append((_LIMB_NAMES[li], amp, amp2, cycles, phase))
        templates.append(motions)
    return templates


def _render(schema: JointSchema, motions, n_frames: int, amp_scale: float) -> np.ndarray:
    pose = base_pose(schema)
    t = np.linspace(0.0, 1.0, n_frames)
    frames = np.repeat(pose[None], n_frames, axis=0)
    for limb, amp, amp2, cycles, phase in motions:
        wave = np.sin(2 * np.pi * cycles * t + phase)
        wave2 = np.sin(4 * np.pi * cycles * t + phase)
        disp = amp_scale * (wave[:, None] * amp + wave2[:, None] * amp2)
        for joint, share in _LIMBS[limb]:
            if joint in schema.joints:
                frames[:, schema.index(joint)] += share * disp
    return frames


def _rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def make_synthetic(n_classes: int = 5, per_class: int = 12, n_subjects: int = 6,
                   frames: tuple[int, int] = (25, 40), noise: float = 0.01,
                   schema: str = MSR20.name, seed: int = 0) -> Dataset:
    """Labelled synthetic dataset with ``n_classes * per_class`` sequences."""
    sch = get_schema(schema)
    rng = np.random.default_rng(seed)
    templates = _class_templates(n_classes, rng)
    seqs = []
    for c in range(n_classes):
        for k in range(per_class):
            subject = 1 + k % n_subjects
            n = int(rng.integers(frames[0], frames[1] + 1))
            f = _render(sch, templates[c], n, rng.uniform(0.85, 1.15))
            f *= rng.uniform(0.8, 1.25)
            f = f @ _rot_y(rng.uniform(-np.pi / 3, np.pi / 3)).T
            f += rng.uniform(-1.0, 1.0, size=3) + np.array([0.0, 1.0, 2.5])
            f += rng.normal(scale=noise, size=f.shape)
            seqs.append(SkeletonSequence(f, c, subject, 1 + k // n_subjects, schema=sch.name,
                                         name=f"syn_c{c:02d}_{k:03d}"))
    classes = [f"synthetic_{c:02d}" for c in range(n_classes)]
    return Dataset(seqs, classes, sch.name)
