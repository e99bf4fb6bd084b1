"""Deterministic synthetic patient cohort over the 29-feature schema.

The shipped study cohort is not redistributable, so tests, demos and the
default CLI config use this stand-in: 303 patients drawn from two latent
severity profiles (a larger low-acuity group with a drifting tail and a
compact high-acuity group) plus a small intermediate satellite group that
sits between the profiles.  Group proportions and separations are fixed so
the clustering pipeline behaves like it does on real cohort data: the elbow
scan selects two clusters and the partitional method edges out the
agglomerative one on mean silhouette.
"""

from __future__ import annotations

import csv

import numpy as np

from .dataset import FeatureSchema

DEFAULT_SEED = 20240708
N_LOW = 168          # low-acuity core + drifting tail
N_TAIL = 22          # tail members counted inside N_LOW
N_HIGH = 123
N_SATELLITE = 12
SATELLITE_MIX = 0.58  # 0 = pure low profile, 1 = pure high profile

# informative numeric profiles: (low mean, low sd, high mean, high sd)
_NUMERIC_PROFILES = {
    "Age": (46.0, 4.5, 74.0, 4.5),
    "BP": (110.0, 5.5, 169.0, 7.0),
    "PR": (63.0, 4.5, 97.0, 4.5),
}
# informative binary prevalence: (low group, high group)
_BINARY_PROFILES = {
    "Typical Chest Pain": (0.02, 0.97),
    "Dyspnea": (0.04, 0.95),
    "Edema": (0.02, 0.93),
    "CHF": (0.02, 0.94),
    "Lung rales": (0.03, 0.92),
    "HTN": (0.08, 0.91),
}
# group-independent prevalence for the remaining indicators
_NOISE_BINARY = {
    "Sex": 0.55, "DM": 0.22, "Current smoker": 0.25, "Ex-smoker": 0.18,
    "FH": 0.30, "CRF": 0.07, "CVA": 0.05, "Airway disease": 0.06,
    "Thyroid Disease": 0.08, "DLP": 0.35, "Weak peripheral pulse": 0.10,
    "Systolic murmur": 0.15, "Diastolic murmur": 0.05, "Atypical": 0.30,
    "Nonanginal CP": 0.12, "Exertional CP": 0.14, "Low Th Ang": 0.08,
}
_NOISE_NUMERIC = {"Weight": (78.0, 12.0), "Length": (168.0, 9.0)}

INFORMATIVE_FEATURES = tuple(_NUMERIC_PROFILES) + tuple(_BINARY_PROFILES) + (
    "Function class",)


def _clip_to_schema(name: str, values: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    spec = next(f for f in schema.features if f.name == name)
    lo, hi = spec.declared_range
    return np.clip(np.round(values), lo, hi)


def generate_patients(seed: int = DEFAULT_SEED) -> tuple[list[str], list[list[str]]]:
    """Return (header, rows) for a CSV over the canonical schema.

    The composition is fixed; only the noise realization follows the seed.
    Rows come out shuffled so group membership is not positional.
    """
    schema = FeatureSchema.canonical()
    rng = np.random.default_rng(seed)
    n = N_LOW + N_HIGH + N_SATELLITE

    group = np.array([0] * N_LOW + [1] * N_HIGH + [2] * N_SATELLITE)
    # drift factor: 0 for core members, up to ~0.4 along the low->high axis
    drift = np.zeros(n)
    drift[N_LOW - N_TAIL:N_LOW] = rng.uniform(0.18, 0.42, N_TAIL)
    drift[group == 2] = SATELLITE_MIX

    columns: dict[str, np.ndarray] = {}
    for name, (lo_m, lo_s, hi_m, hi_s) in _NUMERIC_PROFILES.items():
        base = np.where(group == 1, hi_m, lo_m + drift * (hi_m - lo_m))
        sd = np.where(group == 1, hi_s, lo_s * (1.0 - 0.4 * (group == 2)))
        columns[name] = _clip_to_schema(name, rng.normal(base, sd), schema)
    for name, (lo_p, hi_p) in _BINARY_PROFILES.items():
        p = np.where(group == 1, hi_p, lo_p + drift * (hi_p - lo_p))
        columns[name] = (rng.uniform(size=n) < p).astype(int)
    # ordinal severity grade
    fc = np.empty(n, dtype=int)
    fc[group == 0] = rng.choice([1, 2], p=[0.7, 0.3], size=(group == 0).sum())
    fc[group == 1] = rng.choice([3, 4], p=[0.45, 0.55], size=(group == 1).sum())
    fc[group == 2] = rng.choice([2, 3], p=[0.5, 0.5], size=(group == 2).sum())
    columns["Function class"] = fc
    for name, (mean, sd) in _NOISE_NUMERIC.items():
        columns[name] = _clip_to_schema(name, rng.normal(mean, sd, n), schema)
    for name, p in _NOISE_BINARY.items():
        columns[name] = (rng.uniform(size=n) < p).astype(int)

    order = rng.permutation(n)
    header = ["id", *schema.names]
    rows = []
    for new_idx, src in enumerate(order):
        row = [f"P{new_idx + 1:03d}"]
        for spec in schema.features:
            val = columns[spec.name][src]
            if spec.kind == "binary":
                if spec.name == "Sex":
                    row.append("Male" if val else "Female")
                else:
                    row.append("Yes" if val else "No")
            else:
                row.append(str(int(val)))
        rows.append(row)
    return header, rows


def write_csv(path, seed: int = DEFAULT_SEED) -> int:
    header, rows = generate_patients(seed)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return len(rows)
