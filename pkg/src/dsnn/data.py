"""UNSW-NB15 ingestion, preprocessing, task-incremental splits and synthetic clusters."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._io import save_npz
from .encoding import ScalingStats, fit_scaling, normalize

log = logging.getLogger(__name__)

# Header of the UNSW-NB15 training/testing-set CSVs. Everything except id and
# the two label columns is a feature: 42 in total.
UNSW_COLUMNS = [
    "id", "dur", "proto", "service", "state", "spkts", "dpkts", "sbytes", "dbytes", "rate",
    "sttl", "dttl", "sload", "dload", "sloss", "dloss", "sinpkt", "dinpkt", "sjit", "djit",
    "swin", "stcpb", "dtcpb", "dwin", "tcprtt", "synack", "ackdat", "smean", "dmean",
    "trans_depth", "response_body_len", "ct_srv_src", "ct_state_ttl", "ct_dst_ltm",
    "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm", "is_ftp_login", "ct_ftp_cmd",
    "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst", "is_sm_ips_ports", "attack_cat", "label",
]
UNSW_CATEGORICAL = ["proto", "service", "state"]
DEFAULT_FEATURES = [c for c in UNSW_COLUMNS if c not in ("id", "attack_cat", "label")]
DEFAULT_GROUPINGS = [["DoS", "Reconnaissance"], ["Backdoor", "Generic"], ["Exploits", "Fuzzers"]]
DEFAULT_EXCLUDED = ["Worms", "Shellcode", "Analysis"]
DEFAULT_ALIASES = {"Backdoors": "Backdoor"}
BENIGN = "Normal"


@dataclass
class Schema:
    columns: list[str] = field(default_factory=lambda: list(UNSW_COLUMNS))
    categorical: list[str] = field(default_factory=lambda: list(UNSW_CATEGORICAL))
    label_column: str = "label"
    category_column: str = "attack_cat"
    has_header: bool = True
    benign_category: str = BENIGN
    aliases: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_ALIASES))

    def __post_init__(self):
        for name in (self.label_column, self.category_column, *self.categorical):
            if name not in self.columns:
                raise ValueError(f"schema column {name!r} not declared")

    @property
    def numeric(self) -> list[str]:
        skip = set(self.categorical) | {self.category_column}
        return [c for c in self.columns if c not in skip]


@dataclass
class FlowRecord:
    fields: dict
    label: int
    category: str


@dataclass
class FlowRecords:
    """Columnar flow table: numeric columns float64, categorical columns str objects."""

    columns: dict[str, np.ndarray]
    label: np.ndarray
    category: np.ndarray
    schema: Schema
    skipped: int = 0

    def __len__(self) -> int:
        return self.label.size

    def __getitem__(self, i: int) -> FlowRecord:
        fields = {k: (v[i].item() if v.dtype != object else v[i]) for k, v in self.columns.items()}
        return FlowRecord(fields, int(self.label[i]), str(self.category[i]))

    def subset(self, idx) -> "FlowRecords":
        idx = np.asarray(idx, dtype=np.int64)
        return FlowRecords({k: v[idx] for k, v in self.columns.items()}, self.label[idx], self.category[idx], self.schema)

    def to_csv(self, path: str | Path) -> None:
        s = self.schema
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if s.has_header:
                w.writerow(s.columns)
            for i in range(len(self)):
                row = []
                for c in s.columns:
                    if c == s.label_column:
                        row.append(str(int(self.label[i])))
                    elif c == s.category_column:
                        row.append(self.category[i])
                    elif c in s.categorical:
                        row.append(self.columns[c][i])
                    else:
                        row.append(repr(float(self.columns[c][i])))
                w.writerow(row)


def _empty(schema: Schema) -> FlowRecords:
    cols = {c: np.zeros(0) for c in schema.numeric if c != schema.label_column}
    cols.update({c: np.zeros(0, dtype=object) for c in schema.categorical})
    return FlowRecords(cols, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=object), schema)


def load_csv(paths: str | Path | Sequence[str | Path], schema: Schema | None = None) -> FlowRecords:
    """Parse CSV files; rows that fail numeric parsing or lack a category are skipped and counted."""
    schema = schema or Schema()
    if isinstance(paths, (str, Path)):
        paths = [paths]
    numeric = [c for c in schema.numeric if c != schema.label_column]
    pos = {c: i for i, c in enumerate(schema.columns)}
    num_vals: dict[str, list[float]] = {c: [] for c in numeric}
    cat_vals: dict[str, list[str]] = {c: [] for c in schema.categorical}
    labels: list[int] = []
    cats: list[str] = []
    skipped = 0
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"missing input file: {path}")
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            if schema.has_header:
                header = next(reader, None)
                if header is None:
                    log.warning("%s is empty", path)
                    continue
                if [h.strip() for h in header] != schema.columns:
                    raise ValueError(f"schema mismatch in {path}: header does not match declared columns")
            for row in reader:
                if not row:
                    continue
                if len(row) != len(schema.columns):
                    skipped += 1
                    continue
                try:
                    nums = [float(row[pos[c]]) for c in numeric]
                    lab = int(float(row[pos[schema.label_column]]))
                except ValueError:
                    skipped += 1
                    continue
                cat = row[pos[schema.category_column]].strip()
                cat = schema.aliases.get(cat, cat)
                if not cat:
                    if lab != 0:
                        skipped += 1
                        continue
                    cat = schema.benign_category
                for c, x in zip(numeric, nums):
                    num_vals[c].append(x)
                for c in schema.categorical:
                    cat_vals[c].append(row[pos[c]].strip())
                labels.append(lab)
                cats.append(cat)
    if not labels:
        log.warning("no records parsed from %s", [str(p) for p in paths])
        out = _empty(schema)
        out.skipped = skipped
        return out
    if skipped:
        log.warning("skipped %d malformed rows", skipped)
    cols: dict[str, np.ndarray] = {c: np.array(v, dtype=np.float64) for c, v in num_vals.items()}
    cols.update({c: np.array(v, dtype=object) for c, v in cat_vals.items()})
    return FlowRecords(cols, np.array(labels, dtype=np.int64), np.array(cats, dtype=object), schema, skipped)


@dataclass
class Preprocessed:
    X: np.ndarray
    label: np.ndarray
    category: np.ndarray
    stats: ScalingStats
    encoders: dict[str, dict[str, int]]
    feature_list: list[str]
    dropped: int = 0


def _encode_columns(records: FlowRecords, feature_list: Sequence[str], encoders: dict[str, dict[str, int]]) -> np.ndarray:
    out = np.empty((len(records), len(feature_list)))
    for j, name in enumerate(feature_list):
        col = records.columns[name]
        if name in encoders:
            table = encoders[name]
            unseen = len(table)
            out[:, j] = [table.get(v, unseen) for v in col]
        else:
            out[:, j] = col
    return out


def preprocess(
    records: FlowRecords,
    feature_list: Sequence[str] = DEFAULT_FEATURES,
    stats: ScalingStats | None = None,
    encoders: dict[str, dict[str, int]] | None = None,
) -> Preprocessed:
    """Encode, clean and min-max scale ``records`` onto ``feature_list``.

    Pass ``stats``/``encoders`` fitted on the training split to transform other
    splits; values outside the training range clamp to [0, 1].
    """
    feature_list = list(feature_list)
    missing = [f for f in feature_list if f not in records.columns]
    if missing:
        raise ValueError(f"unknown feature name(s): {missing}")
    if encoders is None:
        encoders = {
            name: {v: i for i, v in enumerate(sorted(set(records.columns[name].tolist())))}
            for name in feature_list
            if records.columns[name].dtype == object
        }
    raw = _encode_columns(records, feature_list, encoders)
    keep = np.all(np.isfinite(raw), axis=1)
    raw = raw[keep]
    if stats is None:
        stats = fit_scaling(raw)
    X = normalize(raw, stats) if raw.size else raw
    return Preprocessed(X, records.label[keep], records.category[keep], stats, encoders, feature_list, int((~keep).sum()))


def select_by_variance(X: np.ndarray, names: Sequence[str], k: int = 42) -> list[str]:
    """Fallback feature selector: the ``k`` highest-variance scaled columns, in original order."""
    var = np.asarray(X).var(axis=0)
    top = np.sort(np.argsort(-var, kind="stable")[:k])
    return [names[i] for i in top]


@dataclass
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def split_8_1_1(strata: Sequence, seed: int, min_per_class: int = 10) -> DatasetSplit:
    """Stratified seeded 80/10/10 partition of record indices."""
    strata = np.asarray(strata)
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in sorted(set(strata.tolist())):
        idx = np.flatnonzero(strata == c)
        if idx.size < min_per_class:
            raise ValueError(f"class {c!r} too small to split ({idx.size} < {min_per_class})")
        idx = rng.permutation(idx)
        n_train = int(round(0.8 * idx.size))
        n_val = int(round(0.1 * idx.size))
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    train, val, test = (np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.int64) for p in parts)
    return DatasetSplit(train, val, test)


@dataclass
class TaskSpec:
    ordinal: int
    classes: list[str]
    include_benign: bool = True


@dataclass
class TaskStream:
    spec: TaskSpec
    attack: np.ndarray  # record indices
    benign: np.ndarray


def make_tasks(
    categories: Sequence[str],
    groupings: Sequence[Sequence[str]],
    benign: str = BENIGN,
    excluded: Iterable[str] = DEFAULT_EXCLUDED,
    indices: np.ndarray | None = None,
    seed: int = 0,
) -> list[TaskStream]:
    """One stream per class group; each gets a fresh disjoint slice of the benign pool."""
    categories = np.asarray(categories)
    excluded = set(excluded)
    seen: set[str] = set()
    for group in groupings:
        for c in group:
            if c in seen:
                raise ValueError(f"overlapping groups: {c!r} appears twice")
            if c in excluded:
                raise ValueError(f"class {c!r} is excluded but appears in a group")
            if c == benign:
                raise ValueError("benign class cannot form a task group")
            seen.add(c)
    if indices is None:
        indices = np.arange(categories.size)
    indices = np.asarray(indices, dtype=np.int64)
    cats = categories[indices]
    pool = np.random.default_rng(seed).permutation(indices[cats == benign])
    slices = np.array_split(pool, len(groupings)) if len(groupings) else []
    tasks = []
    for t, group in enumerate(groupings):
        attack = indices[np.isin(cats, list(group))]
        tasks.append(TaskStream(TaskSpec(t, list(group)), attack, np.sort(slices[t])))
    return tasks


@dataclass
class ClusterSpec:
    centroid: np.ndarray
    spread: float
    label: str
    count: int


def synth_generate(clusters: Sequence[ClusterSpec], seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian clusters clipped to the unit cube, in cluster order."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c in clusters:
        centroid = np.asarray(c.centroid, dtype=np.float64)
        if c.count <= 0:
            raise ValueError("cluster count must be positive")
        if np.any(centroid < 0) or np.any(centroid > 1):
            raise ValueError("centroid outside the unit cube")
        pts = centroid + c.spread * rng.standard_normal((c.count, centroid.size))
        xs.append(np.clip(pts, 0.0, 1.0))
        ys.extend([c.label] * c.count)
    return np.vstack(xs), np.array(ys, dtype=object)


def block_clusters(
    classes: Sequence[str],
    n_features: int = 42,
    hot: float = 0.9,
    cold: float = 0.05,
    spread: float = 0.05,
    counts: Sequence[int] | int = 200,
) -> list[ClusterSpec]:
    """Clusters whose centroids are ``hot`` on a private block of features and ``cold`` elsewhere."""
    block = n_features // len(classes)
    if block < 1:
        raise ValueError("more classes than features")
    if isinstance(counts, int):
        counts = [counts] * len(classes)
    specs = []
    for k, (name, n) in enumerate(zip(classes, counts)):
        centroid = np.full(n_features, cold)
        centroid[k * block:(k + 1) * block] = hot
        specs.append(ClusterSpec(centroid, spread, name, int(n)))
    return specs


def nearest_centroid_accuracy(X: np.ndarray, y: Sequence[str], centroids: dict[str, np.ndarray]) -> float:
    names = list(centroids)
    C = np.stack([centroids[n] for n in names])
    d = ((np.asarray(X)[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    pred = np.array(names, dtype=object)[np.argmin(d, axis=1)]
    return float(np.mean(pred == np.asarray(y, dtype=object)))


def array_digest(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.asarray(a)
        if a.dtype == object:
            h.update(json.dumps([str(x) for x in a.tolist()]).encode())
        else:
            h.update(str(a.dtype).encode())
            h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def write_cache(out_dir: str | Path, prep: Preprocessed, split: DatasetSplit, seed: int, extra: dict | None = None) -> dict:
    """Store the preprocessed matrix and split; returns the manifest (also written as JSON)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_npz(
        out_dir / "dataset.npz",
        X=prep.X,
        label=prep.label,
        category=np.array([str(c) for c in prep.category]),
        train=split.train,
        validation=split.validation,
        test=split.test,
    )
    prep.stats.save(out_dir / "scaling.json")
    manifest = {
        "format": 1,
        "feature_list": list(prep.feature_list),
        "n_features": len(prep.feature_list),
        "scaling": prep.stats.to_dict(),
        "encoders": prep.encoders,
        "seed": int(seed),
        "rows": {
            "total": int(prep.X.shape[0]),
            "train": int(split.train.size),
            "validation": int(split.validation.size),
            "test": int(split.test.size),
            "dropped": int(prep.dropped),
        },
        "class_counts": {str(k): int(v) for k, v in zip(*np.unique(prep.category.astype(str), return_counts=True))},
        "digest": array_digest(prep.X, prep.label, prep.category, split.train, split.validation, split.test),
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_cache(cache_dir: str | Path):
    cache_dir = Path(cache_dir)
    if not (cache_dir / "manifest.json").exists():
        raise FileNotFoundError(f"no dataset cache in {cache_dir}")
    manifest = json.loads((cache_dir / "manifest.json").read_text())
    with np.load(cache_dir / "dataset.npz", allow_pickle=False) as z:
        arrays = {k: z[k] for k in z.files}
    arrays["category"] = arrays["category"].astype(object)
    return manifest, arrays


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()


def subsample_per_class(idx: np.ndarray, strata: np.ndarray, cap: int | None, seed: int) -> np.ndarray:
    """Keep at most ``cap`` indices per class (seeded); identity when cap is None."""
    if cap is None:
        return idx
    rng = np.random.default_rng(seed)
    keep = []
    for c in sorted(set(strata[idx].tolist())):
        members = idx[strata[idx] == c]
        if members.size > cap:
            members = np.sort(rng.choice(members, cap, replace=False))
        keep.append(members)
    return np.sort(np.concatenate(keep)) if keep else idx

