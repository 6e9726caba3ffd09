"""Multimodal video emotion classifier.

The heavy lifting lives in the C++ extension ``_emofuse``. ``train`` and
``evaluate`` drive the same code paths as the ``emofuse`` command line.
"""

from ._emofuse import (
    LABELS,
    Classifier,
    DecodeError,
    DimensionError,
    Error,
    ParameterError,
    compute_stats,
    decode_container,
    encode_container,
    gradcheck,
    param_count,
    read_container,
    read_stats,
    run_cli,
    sample_indices,
    synth,
    write_container,
)

__all__ = [
    "LABELS",
    "Classifier",
    "DecodeError",
    "DimensionError",
    "Error",
    "ParameterError",
    "compute_stats",
    "decode_container",
    "encode_container",
    "evaluate",
    "gradcheck",
    "param_count",
    "read_container",
    "read_stats",
    "run_cli",
    "sample_indices",
    "synth",
    "train",
    "write_container",
]


def _run(args):
    code, out, err = run_cli([str(a) for a in args])
    if code != 0:
        raise Error(err.strip() or f"emofuse {args[0]} exited with {code}")
    return out


def _flags(options):
    args = []
    for key, value in options.items():
        if value is None:
            continue
        args += ["--" + key.replace("_", "-"), str(value)]
    return args


def train(manifest, out, **options):
    """Trains a model and writes checkpoint.vmf, history.csv and stats.vmf to ``out``.

    Keyword options mirror the ``train`` flags (``dim``, ``heads``, ``n``,
    ``batch_size``, ``lr``, ``dropout``, ``patience``, ``max_epochs``,
    ``seed``, ...). Returns the command's text summary.
    """
    return _run(["train", "--manifest", manifest, "--out", out, *_flags(options)])


def evaluate(manifest, checkpoint, out, split="test", **options):
    """Scores a split and writes report.json, confusion.csv and predictions.csv to ``out``.

    Returns the parsed report.
    """
    import json
    import os

    _run(["eval", "--manifest", manifest, "--checkpoint", checkpoint, "--out", out, "--split", split,
          *_flags(options)])
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        return json.load(fh)
