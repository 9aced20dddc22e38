"""Text artifacts: CSV tables, JSON-lines records and run manifests."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from pathlib import Path

    from mashumaro.mixins.orjson import DataClassORJSONMixin
    from numpy.typing import NDArray

    from .models import BiasCurvePoint, EpochRecord, LandscapePoint, RunManifest
    from .toytrain import ToyDataset

_LOGGER = logging.getLogger(__name__)

BIAS_HEADER = (
    "estimator",
    "n_sub",
    "mu",
    "p_true",
    "p_hat_opt",
    "risk_opt",
    "delta_v",
    "delta_p",
    "converged",
)
LANDSCAPE_HEADER = ("estimator", "n_sub", "mu", "p_true", "p_hat", "sd_risk")
TRACE_HEADER = ("epoch", "learning_rate", "train_loss", "val_loss")


def format_float(value: float) -> str:
    """Render a float with 9 significant digits."""
    if math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def atomic_write(path: Path, text: str) -> Path:
    """Write text to a temporary file next to path, then rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        "w",
        encoding="utf-8",
        newline="",
        dir=path.parent,
        prefix=f".{path.name}.",
        delete=False,
    ) as handle:
        handle.write(text)
    os.replace(handle.name, path)
    _LOGGER.debug("Wrote %s", path)
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def bias_csv(points: Iterable[BiasCurvePoint]) -> str:
    """Render bias curve rows sorted by (estimator, n_sub, mu, p_true)."""
    ordered = sorted(points, key=lambda r: (r.estimator, r.n_sub, r.mu, r.p_true))
    return _csv_text(
        BIAS_HEADER,
        (
            (
                str(r.estimator),
                str(r.n_sub),
                format_float(r.mu),
                format_float(r.p_true),
                format_float(r.p_hat_opt),
                format_float(r.risk_opt),
                format_float(r.delta_v),
                format_float(r.delta_p),
                "true" if r.converged else "false",
            )
            for r in ordered
        ),
    )


def landscape_csv(points: Iterable[LandscapePoint]) -> str:
    """Render landscape rows sorted by (estimator, n_sub, mu, p_true, p_hat)."""
    ordered = sorted(
        points, key=lambda r: (r.estimator, r.n_sub, r.mu, r.p_true, r.p_hat)
    )
    return _csv_text(
        LANDSCAPE_HEADER,
        (
            (
                str(r.estimator),
                str(r.n_sub),
                format_float(r.mu),
                format_float(r.p_true),
                format_float(r.p_hat),
                format_float(r.sd_risk),
            )
            for r in ordered
        ),
    )


def trace_csv(trace: Iterable[EpochRecord]) -> str:
    """Render the per-epoch loss trace."""
    return _csv_text(
        TRACE_HEADER,
        (
            (
                str(r.epoch),
                format_float(r.learning_rate),
                format_float(r.train_loss),
                format_float(r.val_loss),
            )
            for r in trace
        ),
    )


def dataset_csv(dataset: ToyDataset, images: NDArray | None = None) -> str:
    """Render one row per (image, pixel): region, label and features."""
    subset = dataset.select(images)
    header = (
        "image",
        "pixel",
        "region",
        "label",
        *(f"feature_{f}" for f in range(subset.n_features)),
    )
    rows = (
        (
            str(i),
            str(k),
            str(int(subset.region_of_pixel[k])),
            str(int(subset.labels[i, k])),
            *(format_float(float(v)) for v in subset.features[i, k]),
        )
        for i in range(subset.n_images)
        for k in range(subset.n_pixels)
    )
    return _csv_text(header, rows)


def json_lines(records: Iterable[DataClassORJSONMixin]) -> str:
    """Render one JSON object per line."""
    return "".join(f"{record.to_json()}\n" for record in records)


def write_manifest(path: Path, manifest: RunManifest) -> Path:
    """Write the manifest, listing itself among the outputs."""
    if str(path) not in manifest.output_paths:
        manifest.output_paths.append(str(path))
    return atomic_write(path, f"{manifest.to_json()}\n")
