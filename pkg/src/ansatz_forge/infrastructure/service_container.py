from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from ansatz_forge.infrastructure.manifest_repository import ManifestRepository
from ansatz_forge.infrastructure.results_repository import ResultsRepository, atomic_write_text


@dataclass
class ForgeServices:
    manifest_repository: ManifestRepository
    results_repository: ResultsRepository
    read_text: Callable[[str], str]


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _make_dirs(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def build_forge_services(
    *,
    read_text: Callable[[str], str] = _read_text,
    write_text: Callable[[str, str], None] = atomic_write_text,
    make_dirs: Callable[[str], None] = _make_dirs,
) -> ForgeServices:
    manifest_repository = ManifestRepository(read_text=read_text)
    results_repository = ResultsRepository(
        write_text=write_text,
        make_dirs=make_dirs,
    )

    return ForgeServices(
        manifest_repository=manifest_repository,
        results_repository=results_repository,
        read_text=read_text,
    )
