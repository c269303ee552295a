"""
Files and the command line
==========================

Every stage reads and writes a small little-endian binary container, so a
run can stop and resume anywhere. This script drives the same pipeline
through the CLI entry point in a temporary directory.
"""

import tempfile
from pathlib import Path

from spvlad.cli import main
from spvlad.ingest import load_encodings

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    data, pca, cb, enc = (str(tmp / n) for n in ("data.spvd", "pca.spvm", "cb.spvm", "enc.spve"))

    # %%
    main(["synth", "--scenes", "12", "--feature-dim", "300", "--out", data])
    main(["train-pca", "--in", data, "--dim", "256", "--out", pca])
    main(["train-codebook", "--in", data, "--pca", pca, "--k", "4", "--out", cb])
    main(["encode", "--in", data, "--pca", pca, "--codebook", cb, "--level", "2", "--out", enc])

    # %%
    # Each binary file has a JSON sidecar for eyeballing; the binary wins.
    print((tmp / "enc.json").read_text())
    main(["inspect", cb])
    main(["inspect", enc, "--limit", "1"])
    print("vector length:", load_encodings(enc)[0].vector.size)
