"""``crackpot`` command line: detect, train, eval, gradcheck, bench.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (``--canny-low`` for key
``canny_low``). Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

import numpy as np

from . import dataeval, netpbm, pipeline
from .errors import CrackpotError
from .neuralnet import NetworkConfig, init_params, load_weights, save_weights
from .neuralnet.gradcheck import gradient_check
from .roadmask import RoadMaskSource

COMMANDS = ("detect", "train", "eval", "gradcheck", "bench")
GRADCHECK_TOLERANCE = 1e-4


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type, default, help)
SETTINGS = {
    "input": (str, None, "frame file, directory of frames, or pattern with {index}"),
    "weights": (str, None, "weight file (.cpot) to read, or to write for train"),
    "data": (str, None, "dataset root with crack/ and nocrack/ subdirectories"),
    "out": (str, ".", "output directory"),
    "road_mask": (str, "full-frame", "full-frame, trapezoid:x,y;x,y;x,y;x,y or a PGM pattern with {index}"),
    "overlay": (_bool, False, "write overlay_{index}.ppm images"),
    "timings": (_bool, False, "print the per-stage timing CSV"),
    "threads": (int, 1, "worker threads; 1 is the deterministic sequential mode"),
    "canny_low": (float, 50.0, "Canny lower hysteresis threshold"),
    "canny_high": (float, 150.0, "Canny upper hysteresis threshold"),
    "dilate_iterations": (int, 3, "3x3 dilation passes over the edge map"),
    "min_area": (int, 80, "minimum component size in pixels"),
    "patch_size": (int, 64, "candidate patch side and network input side"),
    "threshold": (float, 0.5, "crack probability decision threshold"),
    "max_candidates": (int, 64, "largest candidates kept per frame"),
    "in_channels": (int, 3, "network input channels"),
    "conv1_filters": (int, 32, "first convolution width"),
    "fire2_squeeze": (int, 16, ""),
    "fire2_expand": (int, 32, ""),
    "fire3_squeeze": (int, 16, ""),
    "fire3_expand": (int, 32, ""),
    "fire4_squeeze": (int, 32, ""),
    "fire4_expand": (int, 64, ""),
    "codewords": (int, 32, "encoding codewords K"),
    "lr": (float, 1e-5, "Adam learning rate"),
    "batch_size": (int, 64, "training batch size"),
    "epochs": (int, 20, "training epochs"),
    "beta1": (float, 0.9, "Adam first-moment decay"),
    "beta2": (float, 0.999, "Adam second-moment decay"),
    "eps": (float, 1e-8, "Adam epsilon"),
    "seed": (int, 0, "random seed"),
    "frames": (int, 100, "synthetic frames for bench"),
}


class UsageError(Exception):
    pass


class RunError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="crackpot", description="Road crack detection")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="file of key = value lines")
    for key, (kind, default, text) in SETTINGS.items():
        flag = "--" + key.replace("_", "-")
        if kind is _bool:
            parser.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=text)
        else:
            parser.add_argument(flag, dest=key, type=kind, default=None, help=f"{text} (default {default})")
    return parser


def read_config(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = SETTINGS[key][0](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def parse_cli(argv, environ=None):
    """Return ``(command, settings)``; raises UsageError on bad input."""
    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)
    settings = {key: default for key, (_, default, _) in SETTINGS.items()}
    if "CRACKPOT_THREADS" in environ:
        try:
            settings["threads"] = int(environ["CRACKPOT_THREADS"])
        except ValueError as exc:
            raise UsageError(f"CRACKPOT_THREADS is not an integer: {environ['CRACKPOT_THREADS']!r}") from exc
    if args.config:
        settings.update(read_config(args.config))
    for key in SETTINGS:
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if settings["threads"] < 1:
        raise UsageError("threads must be >= 1")
    return args.command, settings


def network_config(s) -> NetworkConfig:
    return NetworkConfig(
        in_channels=s["in_channels"],
        patch_size=s["patch_size"],
        conv1_filters=s["conv1_filters"],
        fire=(
            (s["fire2_squeeze"], s["fire2_expand"]),
            (s["fire3_squeeze"], s["fire3_expand"]),
            (s["fire4_squeeze"], s["fire4_expand"]),
        ),
        codewords=s["codewords"],
    )


def pipeline_config(s) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        canny_low=s["canny_low"],
        canny_high=s["canny_high"],
        dilate_iterations=s["dilate_iterations"],
        min_area=s["min_area"],
        patch_size=s["patch_size"],
        threshold=s["threshold"],
        max_candidates=s["max_candidates"],
    )


def road_source(text: str) -> RoadMaskSource:
    if text == "full-frame":
        return RoadMaskSource.full_frame()
    if text.startswith("trapezoid:"):
        corners = [tuple(float(v) for v in pair.split(",")) for pair in text[len("trapezoid:") :].split(";")]
        return RoadMaskSource.trapezoid(corners)
    return RoadMaskSource.from_files(text)


def frame_sources(text: str):
    """Zero-argument loaders for each frame named by ``text``."""
    if "{index}" in text:
        paths = []
        i = 0
        while os.path.exists(text.format(index=i)):
            paths.append(text.format(index=i))
            i += 1
    elif os.path.isdir(text):
        paths = sorted(glob.glob(os.path.join(text, "*.pgm")) + glob.glob(os.path.join(text, "*.ppm")))
    else:
        paths = [text]
    return [lambda p=p: netpbm.read_image(p) for p in paths]


def _require(s, *keys):
    for key in keys:
        if not s.get(key):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _step(where, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (CrackpotError, OSError, ValueError) as exc:
        raise RunError(f"{where}: {exc}") from exc


def _weights(s, net_cfg):
    if s["weights"]:
        params, cfg = _step("neuralnet.load_weights", load_weights, s["weights"])
        return params, cfg
    return init_params(net_cfg, s["seed"]), net_cfg


def cmd_detect(s, out):
    _require(s, "input", "weights")
    params, net_cfg = _weights(s, network_config(s))
    cfg = _step("pipeline.PipelineConfig", pipeline_config, s)
    src = _step("roadmask.RoadMaskSource", road_source, s["road_mask"])
    frames = frame_sources(s["input"])
    results, summary = _step(
        "pipeline.run_sequence", pipeline.run_sequence, frames, src, params, cfg, net_cfg, threads=s["threads"]
    )
    os.makedirs(s["out"], exist_ok=True)
    with open(os.path.join(s["out"], "detections.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(pipeline.detections_csv(results))
    if s["overlay"]:
        for r, load in zip(results, frames):
            image = pipeline.render_overlay(load(), r)
            netpbm.write_image(os.path.join(s["out"], f"overlay_{r.frame_index}.ppm"), image)
    if s["timings"]:
        out.write(summary.timing_csv())
    return 0


def cmd_train(s, out):
    _require(s, "data")
    net_cfg = _step("neuralnet.NetworkConfig", network_config, s)
    dataset = _step("dataeval.load_patch_dataset", dataeval.load_patch_dataset, s["data"])
    result = _step(
        "dataeval.train",
        dataeval.train,
        dataset,
        net_cfg,
        lr=s["lr"],
        batch_size=s["batch_size"],
        epochs=s["epochs"],
        beta1=s["beta1"],
        beta2=s["beta2"],
        eps=s["eps"],
        seed=s["seed"],
        threads=s["threads"],
    )
    os.makedirs(s["out"], exist_ok=True)
    weights = s["weights"] or os.path.join(s["out"], "weights.cpot")
    _step("neuralnet.save_weights", save_weights, result.params, net_cfg, weights)
    dataeval.write_training_log(os.path.join(s["out"], "train_log.csv"), result.log)
    return 0


def cmd_eval(s, out):
    _require(s, "data", "weights")
    params, net_cfg = _weights(s, None)
    dataset = _step("dataeval.load_patch_dataset", dataeval.load_patch_dataset, s["data"])
    report = _step(
        "dataeval.evaluate", dataeval.evaluate, dataset, params, net_cfg, s["threshold"], threads=s["threads"]
    )
    out.write(dataeval.MetricsReport.CSV_HEADER + "\n" + report.csv_row() + "\n")
    return 0


def cmd_gradcheck(s, out):
    report = gradient_check(seed=s["seed"])
    out.write(f"max_relative_error,{report.max_relative_error:.3e}\n")
    out.write(f"checked,{report.checked}\nskipped_at_kinks,{report.skipped}\n")
    return 0 if report.max_relative_error < GRADCHECK_TOLERANCE else 1


def cmd_bench(s, out):
    params, net_cfg = _weights(s, network_config(s))
    cfg = _step("pipeline.PipelineConfig", pipeline_config, s)
    summary, pre, extra = pipeline.benchmark(s["frames"], params, net_cfg, cfg, seed=s["seed"])
    text = summary.timing_csv()
    if pre:
        p = np.array(pre)
        text += f"preprocess,{p.mean():.1f},{np.percentile(p, 50):.1f},{np.percentile(p, 95):.1f}\n"
    out.write(text)
    out.write(f"frames,{summary.frames}\nfps,{summary.fps:.2f}\n")
    out.write(f"preprocess_fps,{extra['preprocess_fps']:.2f}\n")
    out.write(f"classify_us_per_candidate,{extra['classify_us_per_candidate']:.1f}\n")
    return 0


HANDLERS = {
    "detect": cmd_detect,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "bench": cmd_bench,
}


def run(command, settings, out=None) -> int:
    out = sys.stdout if out is None else out
    return HANDLERS[command](settings, out)


def main(argv=None, out=None, err=None, environ=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    command = "crackpot"
    try:
        command, settings = parse_cli(sys.argv[1:] if argv is None else argv, environ)
        return run(command, settings, out)
    except UsageError as exc:
        err.write(f"crackpot: usage error: {exc}\n")
        return 2
    except RunError as exc:
        err.write(f"crackpot: error in {exc}\n")
        return 1
    except (CrackpotError, OSError, ValueError) as exc:
        err.write(f"crackpot: error in {command}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
