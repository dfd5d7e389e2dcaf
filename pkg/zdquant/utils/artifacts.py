"""Saved canonical triplets, so codec runs never re-solve."""

import hashlib
import json
from datetime import datetime
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import ArtifactError

TRIPLET_VERSION = 1


def fingerprint(model, distortion, channel=None) -> str:
    """SHA-256 over the source, the distortion matrix and the channel matrix."""
    digest = hashlib.sha256(model.fingerprint().encode())
    digest.update(np.ascontiguousarray(distortion.matrix).tobytes())
    if channel is not None:
        digest.update(np.ascontiguousarray(channel.matrix).tobytes())
    return digest.hexdigest()


class TripletStore:
    """Reads and writes one versioned triplet file."""

    def __init__(self, triplet_file: Union[str, Path]):
        self.triplet_file = Path(triplet_file)

    def save(self, triplet, model, distortion, channel=None) -> Path:
        """Write the triplet along with the fingerprint of what it was solved for."""
        grid = triplet.grid
        data = {
            "version": TRIPLET_VERSION,
            "timestamp": datetime.now().isoformat(),
            "fingerprint": fingerprint(model, distortion, channel),
            "num_states": grid.num_states,
            "resolution": grid.resolution,
            "num_symbols": triplet.actions[0].num_symbols,
            "actions": [list(q.labels) for q in triplet.actions],
            "gain": triplet.gain,
            "values": triplet.h.values.tolist(),
            "policy": [int(i) for i in triplet.policy],
            "reference_index": triplet.reference_index,
            "method": triplet.method,
            "tolerance": triplet.tolerance,
            "iterations": triplet.iterations,
            "residual": triplet.residual,
            "bound_valid": triplet.bound_valid,
            "channel": None if channel is None else channel.matrix.tolist(),
            "diagnostics": triplet.diagnostics,
        }
        try:
            self.triplet_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.triplet_file, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2)
        except OSError as e:
            raise ArtifactError(f"Failed to save triplet: {e}")
        return self.triplet_file

    def _read(self) -> dict:
        if not self.exists():
            raise ArtifactError(f"Triplet file not found: {self.triplet_file}")
        try:
            with open(self.triplet_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            raise ArtifactError(f"Failed to load triplet: {e}")
        if data.get("version") != TRIPLET_VERSION:
            raise ArtifactError(f"Unsupported triplet version {data.get('version')!r}")
        return data

    def load(self, model=None, distortion=None, channel=None):
        """Rebuild the CanonicalTriplet; with a model given, reject a mismatched file."""
        from ..belief import BeliefGrid
        from ..channel import Channel
        from ..quantizer import Quantizer
        from ..solver.average_cost import CanonicalTriplet
        from ..solver.kernel import ValueFunction

        data = self._read()
        if model is not None and data["fingerprint"] != fingerprint(model, distortion, channel):
            raise ArtifactError(
                f"{self.triplet_file} was solved for a different model, distortion or channel"
            )
        try:
            grid = BeliefGrid(data["num_states"], data["resolution"])
            return CanonicalTriplet(
                gain=float(data["gain"]),
                h=ValueFunction(grid, data["values"]),
                policy=np.array(data["policy"], dtype=np.int64),
                actions=tuple(Quantizer(tuple(labels), data["num_symbols"]) for labels in data["actions"]),
                reference_index=int(data["reference_index"]),
                method=data["method"],
                tolerance=float(data["tolerance"]),
                iterations=int(data["iterations"]),
                residual=float(data["residual"]),
                channel=None if data["channel"] is None else Channel(data["channel"]),
                bound_valid=bool(data["bound_valid"]),
                diagnostics=data.get("diagnostics", {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"Malformed triplet file {self.triplet_file}: {e}")

    def exists(self) -> bool:
        return self.triplet_file.exists()

    def validate(self, model, distortion, channel=None) -> bool:
        """True if the stored triplet was solved for exactly this model."""
        try:
            return self._read()["fingerprint"] == fingerprint(model, distortion, channel)
        except (ArtifactError, KeyError):
            return False
