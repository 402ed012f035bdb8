"""Shared fixtures: a tiny on-disk dataset and one cached export.

Building the encoders takes a couple of seconds, so the default export
runs once per session and read-only tests share its artifacts.
"""

from dataclasses import dataclass
from pathlib import Path

import pytest
from PIL import Image

from melrag import CaseRecord, ClinicalMetadata, Label, Sex, save_cases

from melrag_exporter import export_embeddings
from melrag_exporter.export import ExportManifest


@dataclass(frozen=True)
class Workspace:
    root: Path
    cases_path: Path
    images_dir: Path
    cases: tuple[CaseRecord, ...]


def _write_image(path: Path, shade: int, size: tuple[int, int]) -> None:
    # non-square sizes exercise the resize step
    Image.new("RGB", size, (shade, shade // 2 + 10, 255 - shade)).save(path)


@pytest.fixture(scope="session")
def workspace(tmp_path_factory) -> Workspace:
    root = tmp_path_factory.mktemp("export_ws")
    images_dir = root / "images"
    images_dir.mkdir()
    cases = (
        CaseRecord(
            id="e0",
            metadata=ClinicalMetadata(age=35, sex=Sex.FEMALE, anatomical_site="back"),
            label=Label.BENIGN,
            image_ref="e0.png",
        ),
        CaseRecord(
            id="e1",
            metadata=ClinicalMetadata(age=70, sex=Sex.MALE, anatomical_site="lower extremity"),
            label=Label.MALIGNANT,
            image_ref="lesion_one.png",
        ),
        # no image_ref: the file is found under the case id
        CaseRecord(
            id="e2",
            metadata=ClinicalMetadata(age=None, sex=None, anatomical_site=None),
            label=Label.BENIGN,
            image_ref=None,
        ),
    )
    _write_image(images_dir / "e0.png", 40, (320, 200))
    _write_image(images_dir / "lesion_one.png", 128, (224, 224))
    _write_image(images_dir / "e2.png", 220, (64, 480))
    cases_path = root / "cases.jsonl"
    save_cases(cases, cases_path)
    return Workspace(root=root, cases_path=cases_path, images_dir=images_dir, cases=cases)


@pytest.fixture(scope="session")
def resnext_export(workspace) -> tuple[ExportManifest, Path]:
    out = workspace.root / "default.mmeb"
    manifest = export_embeddings(
        workspace.cases_path, workspace.images_dir, "resnext50", "attribute_value", out
    )
    return manifest, out
