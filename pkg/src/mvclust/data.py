"""Dataset ingestion and synthetic data.

The interchange format is deliberately plain text.  A dataset is described
by a TOML manifest:

    name = "toy"
    n = 4
    delimiter = ","          # optional; default: any whitespace
    labels = "labels.txt"    # optional; n integer lines

    [[views]]
    path = "view0.txt"       # n rows x dim columns, delimited numeric text
    dim = 2

View files store one sample per row; in memory a view is the transposed
``(dim, n)`` matrix whose columns are samples.  Paths are resolved
relative to the manifest.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = [
    "ManifestError",
    "MultiViewDataset",
    "load_dataset",
    "save_dataset",
    "generate_synthetic",
]


class ManifestError(ValueError):
    """A manifest or one of the files it references is invalid."""


@dataclass
class MultiViewDataset:
    views: list
    labels: np.ndarray | None = None
    name: str = ""

    @property
    def n_samples(self):
        return self.views[0].shape[1]

    @property
    def n_views(self):
        return len(self.views)

    def validate(self):
        if not self.views:
            raise ManifestError("dataset has no views")
        n = self.n_samples
        for v, x in enumerate(self.views):
            if x.ndim != 2 or x.shape[1] != n:
                raise ManifestError(
                    "view %d has shape %s, expected (*, %d)" % (v, x.shape, n)
                )
            if not np.isfinite(x).all():
                raise ManifestError("view %d contains non-finite entries" % v)
        if self.labels is not None and len(self.labels) != n:
            raise ManifestError(
                "labels length %d does not match n=%d" % (len(self.labels), n)
            )
        return self


def _read_matrix(path, delimiter, expected_rows, expected_cols):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            tokens = line.split(delimiter) if delimiter else line.split()
            values = []
            for col, token in enumerate(tokens, start=1):
                token = token.strip()
                try:
                    values.append(float(token))
                except ValueError:
                    raise ManifestError(
                        "%s: non-numeric value %r at row %d, column %d"
                        % (path, token, lineno, col)
                    ) from None
            rows.append(values)
    if not rows:
        raise ManifestError("%s: file is empty" % path)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ManifestError(
            "%s: ragged rows (widths %s)" % (path, sorted(widths))
        )
    mat = np.asarray(rows, dtype=float)
    if mat.shape != (expected_rows, expected_cols):
        raise ManifestError(
            "%s: expected %d rows x %d columns, found %d x %d"
            % (path, expected_rows, expected_cols, mat.shape[0], mat.shape[1])
        )
    return mat


def _read_labels(path, expected_rows):
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            try:
                values.append(int(token))
            except ValueError:
                raise ManifestError(
                    "%s: non-integer label %r at line %d" % (path, token, lineno)
                ) from None
    if len(values) != expected_rows:
        raise ManifestError(
            "%s: expected %d labels, found %d" % (path, expected_rows, len(values))
        )
    return np.asarray(values, dtype=np.int64)


def load_dataset(manifest_path):
    """Load a multi-view dataset from a TOML manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError("manifest not found: %s" % manifest_path)
    try:
        with open(manifest_path, "rb") as fh:
            meta = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ManifestError("%s: %s" % (manifest_path, err)) from None

    for key in ("n", "views"):
        if key not in meta:
            raise ManifestError("%s: missing required key %r" % (manifest_path, key))
    n = meta["n"]
    if not isinstance(n, int) or n < 2:
        raise ManifestError("%s: n must be an integer >= 2" % manifest_path)
    entries = meta["views"]
    if not isinstance(entries, list) or not entries:
        raise ManifestError("%s: views must be a non-empty list" % manifest_path)
    delimiter = meta.get("delimiter") or None
    base = manifest_path.parent

    views = []
    for v, entry in enumerate(entries):
        for key in ("path", "dim"):
            if key not in entry:
                raise ManifestError(
                    "%s: view %d is missing key %r" % (manifest_path, v, key)
                )
        path = base / entry["path"]
        if not path.is_file():
            raise ManifestError("view file not found: %s" % path)
        mat = _read_matrix(path, delimiter, n, entry["dim"])
        views.append(mat.T.copy())

    labels = None
    if "labels" in meta:
        label_path = base / meta["labels"]
        if not label_path.is_file():
            raise ManifestError("labels file not found: %s" % label_path)
        labels = _read_labels(label_path, n)

    name = meta.get("name", manifest_path.stem)
    return MultiViewDataset(views=views, labels=labels, name=name).validate()


def save_dataset(dataset, directory, delimiter=","):
    """Write a dataset in the manifest format; returns the manifest path.

    Floats are written with 17 significant digits so a save/load round
    trip is bit-exact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset.validate()
    n = dataset.n_samples
    lines = [
        'name = "%s"' % (dataset.name or directory.name),
        "n = %d" % n,
        'delimiter = "%s"' % delimiter,
    ]
    if dataset.labels is not None:
        lines.append('labels = "labels.txt"')
        np.savetxt(directory / "labels.txt", dataset.labels, fmt="%d")
    for v, x in enumerate(dataset.views):
        fname = "view%d.txt" % v
        np.savetxt(directory / fname, x.T, fmt="%.17g", delimiter=delimiter)
        lines += ["", "[[views]]", 'path = "%s"' % fname, "dim = %d" % x.shape[0]]
    manifest = directory / "dataset.toml"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def generate_synthetic(
    per_cluster=50,
    clusters=3,
    views=3,
    noise=1.0,
    seed=0,
    latent_dim=None,
    view_dims=None,
    separation=10.0,
):
    """Gaussian clusters rendered through independent linear views.

    Latent points are unit-variance Gaussians around well-separated
    centers; every view applies its own random linear map plus Gaussian
    noise (``noise`` may be a scalar or a per-view sequence).  Labels are
    attached and everything is deterministic for a fixed seed.
    """
    if per_cluster < 1 or clusters < 1 or views < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    q = latent_dim if latent_dim is not None else max(2, clusters)
    if view_dims is None:
        view_dims = [10 + 5 * v for v in range(views)]
    if len(view_dims) != views:
        raise ValueError("need one dimension per view")
    noise_levels = np.broadcast_to(np.asarray(noise, dtype=float), (views,))

    # centers: rows of a random orthogonal frame, pairwise separation * sqrt(2)
    frame, _ = np.linalg.qr(rng.normal(size=(q, q)))
    centers = separation * frame[:clusters]
    labels = np.repeat(np.arange(clusters), per_cluster)
    latent = centers[labels] + rng.normal(size=(labels.size, q))
    perm = rng.permutation(labels.size)
    labels = labels[perm]
    latent = latent[perm]

    view_list = []
    for v in range(views):
        mixing = rng.normal(size=(view_dims[v], q)) / np.sqrt(q)
        x = mixing @ latent.T + noise_levels[v] * rng.normal(
            size=(view_dims[v], labels.size)
        )
        view_list.append(x)
    return MultiViewDataset(
        views=view_list, labels=labels.astype(np.int64), name="synthetic"
    ).validate()
