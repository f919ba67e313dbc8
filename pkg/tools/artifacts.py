"""
Artifact Writer
Writes CSV tables with a commented header, JSON documents and run manifests.
Every file is written once, atomically, through a temp file in the target directory.
"""

import json
import logging
import os
import tempfile
import time
from datetime import datetime, timezone
from typing import Any, Dict, Optional

LOGGER = logging.getLogger(__name__)


class ArtifactWriter:
    """
    Resolves output paths and writes run artifacts.

    Relative paths go under `output_dir`, which defaults to LORLAB_OUTPUT_DIR or the
    working directory.
    """

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = output_dir or os.getenv("LORLAB_OUTPUT_DIR") or os.getcwd()

    def resolve(self, path: str) -> str:
        if os.path.isabs(path):
            return path
        return os.path.join(self.output_dir, path)

    def write_text(self, path: str, text: str) -> str:
        target = self.resolve(path)
        directory = os.path.dirname(target) or "."
        os.makedirs(directory, exist_ok=True)
        handle, temp_path = tempfile.mkstemp(dir=directory, prefix=".lorlab-", suffix=".tmp")
        try:
            with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
                stream.write(text)
            os.replace(temp_path, target)
        except BaseException:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        LOGGER.debug("wrote %s (%d bytes)", target, len(text))
        return target

    def write_csv(self, path: str, body: str, header: Dict[str, Any]) -> str:
        """CSV body preceded by '# key: value' lines naming units, mesh and tolerance."""
        lines = [f"# {key}: {value}" for key, value in header.items()]
        return self.write_text(path, "\n".join(lines) + "\n" + body)

    def write_json(self, path: str, data: Any) -> str:
        return self.write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def write_manifest(self, artifact_path: str, config: Dict[str, Any], result: Dict[str, Any],
                       version: str, started: float) -> str:
        """<artifact>.manifest.json with the config echo, tool version, wall time and timestamp."""
        manifest = {
            "config": config,
            "version": version,
            "result": result,
            "wall_time_seconds": round(time.perf_counter() - started, 6),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        return self.write_json(f"{artifact_path}.manifest.json", manifest)
