import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from errors import ConvergenceError, MesoTableError
from .london import solve_zeta, tilde_V
from .renorm import VortexConfig, w_macro

__all__ = ['WbarEntry', 'CriticalLadder', 'Prediction', 'lambda_d_set', 'script_W', 'wbar_table', 'l1_l2',
           'slope', 'deltas', 'gamma_tilde', 'h0c1', 'hc1', 'build_ladder', 'ladder_report', 'crossing_field',
           'crossing_fields',
           'predicted_energy', 'predict']

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class WbarEntry:
    value: float
    argmin: Tuple[int, ...]
    minimizers: Tuple[Tuple[int, ...], ...] = ()


def lambda_d_set(d, N0):
    """Degree splittings of d over N0 points with every entry floor(d/N0) or ceil(d/N0)."""
    q, r = divmod(int(d), int(N0))
    out = []
    for up in combinations(range(N0), r):
        out.append(tuple(q + 1 if k in up else q for k in range(N0)))
    return sorted(out, reverse=True)


def _wbar(wbar, d):
    if d == 0:
        return 0.0
    entry = wbar[d]
    return entry.value if isinstance(entry, WbarEntry) else float(entry)


def script_W(D, london, meso_C, grid):
    """W^macro over the occupied points of Lambda, plus C_{p,D_p}, plus the modified London energy."""
    if all(Dk == 0 for Dk in D):
        return 0.0
    points = [p for p, Dk in zip(london.lambda_set, D) if Dk > 0]
    degrees = [Dk for Dk in D if Dk > 0]
    meso = 0.0
    for k, Dk in enumerate(D):
        if Dk == 0:
            continue
        if (k, Dk) not in meso_C:
            raise MesoTableError(f"no mesoscopic constant for point {k} with degree {Dk}")
        meso += meso_C[(k, Dk)]
    macro = w_macro(VortexConfig(points, degrees), grid)
    _, v_min = tilde_V(solve_zeta(points, degrees, grid), points, degrees)
    return float(macro + meso + v_min)


def wbar_table(london, grid, d_max, meso_C) -> Dict[int, WbarEntry]:
    N0 = london.N0
    table = {0: WbarEntry(0.0, (0,) * N0, ((0,) * N0,))}
    for d in range(1, d_max + 1):
        values = {D: script_W(D, london, meso_C, grid) for D in lambda_d_set(d, N0)}
        best = min(values.values())
        minimizers = tuple(D for D, v in values.items() if v <= best + TIE_TOL * max(1.0, abs(best)))
        table[d] = WbarEntry(float(best), minimizers[0], minimizers)
        logger.debug("Wbar_%d = %.6f at %s", d, best, minimizers)
    return table


def l1_l2(d, wbar, N0, D=None):
    if d == 0:
        return 0.0, 0.0
    if D is None:
        D = lambda_d_set(d, N0)[0]
    D = np.asarray(D)
    l1 = np.pi / 2 * (float(np.sum(D ** 2)) - d)
    big = D[D >= 1].astype(float)
    l2 = _wbar(wbar, d) + np.pi / 2 * float(np.sum((big - big ** 2) * np.log(big)))
    return float(l1), float(l2)


def slope(wbar, d, d_prime):
    """Averaged quotient (Wbar_d' - Wbar_d) / (d' - d)."""
    if d_prime <= d:
        raise ValueError(f"need d < d', got d={d}, d'={d_prime}")
    return (_wbar(wbar, d_prime) - _wbar(wbar, d)) / (d_prime - d)


def deltas(d, M_omega, N0, wbar, d_prime=None):
    """Increments of L1 and L2 per unit degree, divided by M_omega; averaged over (d, d_prime] when given."""
    if d_prime is None:
        d_prime = d + 1
    if d_prime <= d:
        raise ValueError(f"need d < d', got d={d}, d'={d_prime}")
    l1a, l2a = l1_l2(d, wbar, N0)
    l1b, l2b = l1_l2(d_prime, wbar, N0)
    span = M_omega * (d_prime - d)
    return (l1b - l1a) / span, (l2b - l2a) / span


def gamma_tilde(w_micro_min, b, gamma, xi0_inf_norm):
    return (w_micro_min + b ** 2 * (gamma + np.pi * np.log(b))) / (2 * np.pi * xi0_inf_norm)


def h0c1(epsilon, lam_delta, b, xi0_inf_norm, w_micro_min, gamma):
    lead = (b ** 2 * abs(np.log(epsilon)) + (1 - b ** 2) * abs(np.log(lam_delta))) / (2 * xi0_inf_norm)
    return float(lead + gamma_tilde(w_micro_min, b, gamma, xi0_inf_norm))


def hc1(H0, wbar, M_omega, N0):
    return float(H0 + min(_wbar(wbar, d) / (d * M_omega) for d in range(1, N0 + 1)))


def crossing_field(H0, delta1, delta2):
    """Root of g(h) = h - delta1 ln h - H0 - delta2 on its increasing branch h > delta1."""
    if delta1 < 0:
        raise ValueError(f"delta1 must be non-negative, got {delta1}")
    if delta1 == 0:
        h = H0 + delta2
        if not h > 0:
            raise ConvergenceError(f"crossing field H0 + delta2 = {h:.6g} is not positive")
        return float(h)

    def g(h):
        return h - delta1 * np.log(h) - H0 - delta2

    lo = delta1
    if g(lo) >= 0:
        raise ConvergenceError(f"no crossing above h = {lo:.6g}", float(g(lo)))
    hi = 2.0 * lo
    for _ in range(200):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"could not bracket the crossing above h = {lo:.6g}")
    return float(brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps))


def _try_crossing(H0, delta1, delta2):
    try:
        return crossing_field(H0, delta1, delta2)
    except ConvergenceError as e:
        logger.warning("%s", e)
        return None


@dataclass(frozen=True)
class CriticalLadder:
    wbar: dict
    N0: int
    M_omega: float
    H0: float
    d_star: List[int]
    K_star: List[float]
    KI: List[float]
    inputs: dict = field(default_factory=dict)

    @property
    def L(self):
        return len(self.d_star)

    @property
    def d_max(self):
        return max(self.wbar)

    def kii_available(self):
        """Number of K^(II) values the table supports."""
        return max(0, self.d_max - self.N0)

    def _delta(self, k):
        if k < 1 or self.N0 + k > self.d_max:
            raise MesoTableError(f"K^(II)_{k} needs Wbar up to d={self.N0 + k}, table stops at {self.d_max}")
        return deltas(self.N0 + k - 1, self.M_omega, self.N0, self.wbar)

    def KII(self, k):
        d1, d2 = self._delta(k)
        return float(self.H0 + d1 * np.log(self.H0) + d2)

    def crossing(self, k):
        """Exact field where N0 + k vortices become cheaper than N0 + k - 1 in the energy expansion."""
        d1, d2 = self._delta(k)
        return crossing_field(self.H0, d1, d2)

    def KII_list(self):
        return [self.KII(k) for k in range(1, self.kii_available() + 1)]

    def crossing_list(self):
        """K^(II) crossings, None where the expansion has no crossing on the increasing branch."""
        return [_try_crossing(self.H0, *self._delta(k)) for k in range(1, self.kii_available() + 1)]

    def expansion(self, d, h_ex):
        """predicted_energy of d vortices without the common h_ex^2 J0 term."""
        return predicted_energy(d, h_ex, 0.0, self.M_omega, self.H0, *l1_l2(d, self.wbar, self.N0))


def build_ladder(wbar, N0, M_omega, H0, inputs=None) -> CriticalLadder:
    d_star, K_star = [], []
    last = 0
    while last < N0:
        base = _wbar(wbar, last)
        slopes = {d: (_wbar(wbar, d) - base) / (d - last) for d in range(last + 1, N0 + 1)}
        K = min(slopes.values())
        chosen = max(d for d, s in slopes.items() if s <= K + TIE_TOL * max(1.0, abs(K)))
        d_star.append(chosen)
        K_star.append(float(K))
        last = chosen
    KI = [float(H0 + K / M_omega) for K in K_star]
    logger.info("ladder: d* = %s, K* = %s", d_star, K_star)
    return CriticalLadder(wbar=dict(wbar), N0=N0, M_omega=M_omega, H0=H0, d_star=d_star, K_star=K_star, KI=KI,
                          inputs=dict(inputs or {}))


def crossing_fields(ladder: CriticalLadder):
    """Fields where predicted_energy of consecutive counts cross, as (d, d', h) along d* then N0 + k."""
    counts = [0] + list(ladder.d_star) + [ladder.N0 + k for k in range(1, ladder.kii_available() + 1)]
    out = []
    for d, d_prime in zip(counts[:-1], counts[1:]):
        d1, d2 = deltas(d, ladder.M_omega, ladder.N0, ladder.wbar, d_prime)
        out.append((d, d_prime, _try_crossing(ladder.H0, d1, d2)))
    return out


def ladder_report(ladder: CriticalLadder):
    wbar = {}
    for d in sorted(ladder.wbar):
        entry = ladder.wbar[d]
        if isinstance(entry, WbarEntry):
            wbar[str(d)] = {"value": entry.value, "argmin": list(entry.argmin),
                            "minimizers": [list(D) for D in entry.minimizers]}
        else:
            wbar[str(d)] = {"value": float(entry)}
    return {
        "H0c1": ladder.H0,
        "Hc1": ladder.KI[0],
        "KI": ladder.KI,
        "KII": ladder.KII_list(),
        "KII_crossings": ladder.crossing_list(),
        "crossings": [{"from": d, "to": d_prime, "h": h} for d, d_prime, h in crossing_fields(ladder)],
        "Kstar": ladder.K_star,
        "dstar": ladder.d_star,
        "M_omega": ladder.M_omega,
        "N0": ladder.N0,
        "wbar": wbar,
        "inputs": ladder.inputs,
    }


def predicted_energy(d, h_ex, J0, M_omega, H0, l1, l2):
    return float(h_ex ** 2 * J0 + d * M_omega * (-h_ex + H0) + l1 * np.log(h_ex) + l2)


@dataclass(frozen=True)
class Prediction:
    d: int
    degrees: List[Tuple[int, ...]]
    regime: str
    interval: Optional[Tuple[float, float]] = None

    def to_dict(self):
        return {"d": self.d, "degrees": [list(D) for D in self.degrees], "regime": self.regime,
                "interval": list(self.interval) if self.interval is not None else None}


def _allowed(ladder, d):
    entry = ladder.wbar.get(d)
    if isinstance(entry, WbarEntry) and entry.minimizers:
        return list(entry.minimizers)
    if d == 0:
        return [(0,) * ladder.N0]
    return lambda_d_set(d, ladder.N0)


def predict(h_ex, ladder: CriticalLadder, window=0.0) -> Prediction:
    """Vortex count and admissible cluster degrees at applied field h_ex."""
    if not h_ex > 0:
        raise ValueError(f"h_ex must be positive, got {h_ex}")
    # thresholds: (low edge, high edge, count below, count above)
    edges = []
    below = 0
    for K, d in zip(ladder.KI, ladder.d_star):
        edges.append((K - window, K + window, below, d))
        below = d
    for k, X in enumerate(ladder.crossing_list(), start=1):
        K = ladder.KII(k)
        if X is None:
            X = K
        edges.append((min(K, X) - window, max(K, X) + window, ladder.N0 + k - 1, ladder.N0 + k))
    edges.sort()

    hits = [e for e in edges if e[0] < h_ex < e[1]]
    if hits:
        counts = []
        for _, _, d_lo, d_hi in hits:
            counts.extend(c for c in (d_lo, d_hi) if c not in counts)
        degrees = []
        for c in sorted(counts):
            degrees.extend(D for D in _allowed(ladder, c) if D not in degrees)
        interval = (min(e[0] for e in hits), max(e[1] for e in hits))
        return Prediction(min(counts), degrees, "ambiguous", interval)

    energies = [ladder.expansion(d, h_ex) for d in range(ladder.d_max + 1)]
    d = int(np.argmin(energies))
    if d == 0:
        return Prediction(0, _allowed(ladder, 0), "subcritical")
    if d == ladder.d_max and h_ex >= max(e[1] for e in edges):
        return Prediction(d, _allowed(ladder, d), "exhausted")
    regime = "ladder" if d <= ladder.N0 else "beyond"
    return Prediction(d, _allowed(ladder, d), regime)
