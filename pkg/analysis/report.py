import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

__all__ = ['Cluster', 'DefectReport', 'cluster_radius', 'cluster_report', 'compare']

logger = logging.getLogger(__name__)


def cluster_radius(h_ex):
    """Radius 2 ln h / sqrt(h) of the disks around the points of Lambda that collect a cluster."""
    return 2 * np.log(h_ex) / np.sqrt(h_ex)


@dataclass
class Cluster:
    p: tuple
    D: int
    members: List[int] = field(default_factory=list)
    meso_coords: List[tuple] = field(default_factory=list)

    def to_dict(self):
        return {"p": list(self.p), "D": self.D, "members": self.members,
                "meso_coords": [list(z) for z in self.meso_coords]}


@dataclass
class DefectReport:
    h_ex: float
    defects: list
    clusters: List[Cluster]
    stray: List[int] = field(default_factory=list)

    @property
    def D(self):
        return tuple(c.D for c in self.clusters)

    @property
    def vortices(self):
        return [d for d in self.defects if not d.touches_boundary and d.degree != 0]

    @property
    def total_degree(self):
        return sum(d.degree for d in self.vortices)

    def to_dict(self):
        return {
            "h_ex": self.h_ex,
            "n_defects": len(self.defects),
            "total_degree": self.total_degree,
            "D": list(self.D),
            "defects": [d.to_dict() for d in self.defects],
            "clusters": [c.to_dict() for c in self.clusters],
            "stray": self.stray,
        }


def cluster_report(defects, london, h_ex, pinning=None) -> DefectReport:
    """Group detected vortices around the minimizers of xi0 and rescale them by l = sqrt(D / h_ex).

    Micro coordinates (z - y) / (lambda delta) against the nearest inclusion are carried on each defect
    by detect_defects when a pinning field is given.
    """
    radius = cluster_radius(h_ex)
    clusters = [Cluster(p=tuple(p), D=0) for p in london.lambda_set]
    stray = []
    for n, defect in enumerate(defects):
        if defect.touches_boundary or defect.degree == 0:
            continue
        if not clusters:
            stray.append(n)
            continue
        dist = [np.hypot(defect.center[0] - c.p[0], defect.center[1] - c.p[1]) for c in clusters]
        k = int(np.argmin(dist))
        if dist[k] <= radius:
            clusters[k].members.append(n)
            clusters[k].D += defect.degree
        else:
            stray.append(n)

    for c in clusters:
        if c.D <= 0:
            continue
        ell = np.sqrt(c.D / h_ex)
        c.meso_coords = [((defects[n].center[0] - c.p[0]) / ell, (defects[n].center[1] - c.p[1]) / ell)
                         for n in c.members]
    if stray:
        logger.warning("%d vortices lie outside every cluster disk of radius %.4f", len(stray), radius)
    if pinning is not None:
        inside = sum(bool(defects[n].inside_inclusion) for c in clusters for n in c.members)
        logger.info("%d of %d clustered vortices sit inside an inclusion", inside,
                    sum(len(c.members) for c in clusters))
    return DefectReport(h_ex=h_ex, defects=list(defects), clusters=clusters, stray=stray)


def _pairwise_min(points):
    if len(points) < 2:
        return None
    x = np.asarray(points, dtype=float)
    dist = np.hypot(x[:, None, 0] - x[None, :, 0], x[:, None, 1] - x[None, :, 1])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def compare(report: DefectReport, prediction, london=None, meso_points: Optional[Dict[int, list]] = None):
    """Observed vortex structure against the predicted count and cluster degrees.

    The separation and distance-to-Lambda figures are the rescaled constants
    min |z_i - z_j| h / ln h and max dist(z_i, Lambda) sqrt(h) / ln h, which stay bounded when the
    predicted structure holds. meso_points maps a cluster index to the mesoscopic minimizer (sorted points) used to
    score the rescaled positions.
    """
    h = report.h_ex
    vortices = report.vortices
    centers = [v.center for v in vortices]
    observed = len(vortices)
    result = {
        "h_ex": h,
        "d_observed": observed,
        "d_predicted": prediction.d,
        "regime": prediction.regime,
        "count_matches": observed == prediction.d,
        "all_degree_one": all(v.degree == 1 for v in vortices),
        "D_observed": list(report.D),
        "D_admissible": tuple(report.D) in {tuple(D) for D in prediction.degrees} if prediction.degrees else None,
        "stray": len(report.stray),
    }

    sep = _pairwise_min(centers)
    result["separation_constant"] = sep * h / np.log(h) if sep is not None else None
    if london is not None and centers and london.lambda_set:
        lam = np.asarray(london.lambda_set)
        far = max(float(np.hypot(lam[:, 0] - x, lam[:, 1] - y).min()) for x, y in centers)
        result["lambda_distance_constant"] = far * np.sqrt(h) / np.log(h)
    else:
        result["lambda_distance_constant"] = None

    meso = []
    for k, c in enumerate(report.clusters):
        if c.D < 2 or not meso_points or k not in meso_points:
            continue
        target = np.asarray(meso_points[k], dtype=float)
        got = np.asarray(sorted(c.meso_coords), dtype=float)
        if got.shape == target.shape:
            meso.append(float(np.abs(got - target).max()))
    result["meso_deviation"] = max(meso) if meso else None

    logger.info("observed %d vortices (predicted %d, regime %s), D = %s", observed, prediction.d,
                prediction.regime, result["D_observed"])
    return result
