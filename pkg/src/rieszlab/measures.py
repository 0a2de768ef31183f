"""Finite positive combinations of Dirac masses and their transforms.

The JSON schema is {"n": int, "masses": [{"a": float, "c": [float x n]}]},
masses strictly positive.  Transform evaluation refuses points within
POLE_RADIUS of any center; the maximal truncation enumerates the partial
sums of contributions ordered by decreasing distance (ties enter together).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, PoleError

POLE_RADIUS = 1e-12


@dataclass(frozen=True)
class PointMassMeasure:
    n: int
    masses: np.ndarray   # (N,), strictly positive
    centers: np.ndarray  # (N, n)

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        centers = np.asarray(self.centers, dtype=float)
        if not isinstance(self.n, int) or self.n < 1:
            raise DomainError("dimension n must be a positive integer")
        if masses.ndim != 1 or masses.size < 1:
            raise DomainError("at least one mass is required")
        if centers.shape != (masses.size, self.n):
            raise DomainError("centers must have shape (N, n)")
        if not np.all(np.isfinite(masses)) or not np.all(masses > 0):
            raise DomainError("masses must be finite and strictly positive")
        if not np.all(np.isfinite(centers)):
            raise DomainError("centers must be finite")
        masses.flags.writeable = False
        centers.flags.writeable = False
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "centers", centers)

    @property
    def count(self):
        return self.masses.size

    def to_json_dict(self):
        return {
            "n": self.n,
            "masses": [
                {"a": float(a), "c": [float(v) for v in c]}
                for a, c in zip(self.masses, self.centers)
            ],
        }

    @classmethod
    def from_json_dict(cls, obj):
        try:
            n = obj["n"]
            entries = obj["masses"]
            masses = [e["a"] for e in entries]
            centers = [e["c"] for e in entries]
        except (KeyError, TypeError) as exc:
            raise DomainError("malformed measure object: %s" % exc) from exc
        if len(entries) == 0:
            raise DomainError("measure must carry at least one mass")
        return cls(int(n), np.array(masses, dtype=float), np.array(centers, dtype=float))


def measure_from_json(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError("invalid measure JSON: %s" % exc) from exc
    return PointMassMeasure.from_json_dict(obj)


def measure_to_json(nu):
    return json.dumps(nu.to_json_dict(), sort_keys=True)


def total_variation(nu):
    # correctly rounded, so cell-exact mass identities survive the sum
    return math.fsum(nu.masses)


def merge_duplicate_centers(nu):
    """Sum masses sharing exactly equal centers; output in lexicographic
    center order (delta measures at one point add)."""
    order = np.lexsort(nu.centers.T[::-1])
    centers = nu.centers[order]
    masses = nu.masses[order]
    keep_centers = [centers[0]]
    keep_masses = [masses[0]]
    for c, a in zip(centers[1:], masses[1:]):
        if np.array_equal(c, keep_centers[-1]):
            keep_masses[-1] = keep_masses[-1] + a
        else:
            keep_centers.append(c)
            keep_masses.append(a)
    return PointMassMeasure(nu.n, np.array(keep_masses), np.array(keep_centers))


def _check_pair(spec, nu):
    if spec.n != nu.n:
        raise DomainError("kernel and measure dimensions disagree")


def transform_many(spec, nu, points):
    """T nu at a batch of points, no pole checks (callers mask poles)."""
    points = np.asarray(points, dtype=float)
    diffs = points[:, None, :] - nu.centers[None, :, :]
    vals = kernels.kernel_values(spec, diffs.reshape(-1, spec.n))
    return vals.reshape(points.shape[0], nu.count) @ nu.masses


def eval_transform(spec, nu, x):
    """T nu(x) = sum a_k K(x - c_k); x must avoid every pole."""
    _check_pair(spec, nu)
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,) or not np.all(np.isfinite(x)):
        raise DomainError("point must be a finite vector of shape (n,)")
    dists = np.linalg.norm(nu.centers - x, axis=1)
    if np.min(dists) <= POLE_RADIUS:
        raise PoleError("evaluation point within %g of a mass center" % POLE_RADIUS)
    return float(transform_many(spec, nu, x[None, :])[0])


def eval_max_truncation(spec, nu, x):
    """T^# nu(x): sup over truncation radii of |sum_{|x-c_k|>eps} a_k K(x-c_k)|.

    For finitely many masses this is the max over the N+1 partial sums taken
    in order of decreasing distance, with equal distances entering together.
    """
    _check_pair(spec, nu)
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,) or not np.all(np.isfinite(x)):
        raise DomainError("point must be a finite vector of shape (n,)")
    dists = np.linalg.norm(nu.centers - x, axis=1)
    if np.min(dists) <= POLE_RADIUS:
        raise PoleError("evaluation point within %g of a mass center" % POLE_RADIUS)
    terms = nu.masses * kernels.kernel_values(spec, x[None, :] - nu.centers)
    order = np.argsort(-dists, kind="stable")
    d_sorted = dists[order]
    sums = np.cumsum(terms[order])
    best = 0.0
    for idx in range(nu.count):
        if idx == nu.count - 1 or d_sorted[idx + 1] != d_sorted[idx]:
            best = max(best, abs(float(sums[idx])))
    return best
