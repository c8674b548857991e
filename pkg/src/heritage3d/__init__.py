"""heritage3d: multi-view heritage imagery to validated glTF 2.0 assets.

A five-stage pipeline (acquire, prompt, 2D synthesis, 3D generation,
publish) with pluggable generation backends, deterministic offline mocks,
per-stage timing metrics, a job state machine with crash-safe journaling,
and an HTTP/CLI surface for operating it.
"""

__version__ = "0.1.0"
