"""Command-line interface: ``stmseg {decompose,cartoon,texture,pipeline,synth}``."""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import synth
from .decomposition import decompose
from .errors import StmsegError
from .io import load_image, save_gray, save_label_map
from .pipeline import METHODS, PipelineConfig, run_pipeline
from .presets import PRESETS

log = logging.getLogger("stmseg")

# flag dest -> (config section, field)
_FLAG_MAP = {
    "sigma": ("decomposition", "sigma"),
    "lam": ("cartoon", "lam"),
    "mu": ("cartoon", "mu"),
    "beta": ("cartoon", "beta"),
    "dt": ("cartoon", "dt"),
    "max_iter": ("cartoon", "max_iter"),
    "percentile": ("detection", "p"),
    "eta": ("detection", "eta"),
    "clusters": ("kmeans", "k"),
    "replications": ("kmeans", "replications"),
    "cluster_dt": ("mbo", "dt"),
}


def _percentile(text):
    value = float(text)
    # Accept both 0.92 and 92.
    return value / 100.0 if value > 1 else value


def _common(p):
    p.add_argument("input", help="grayscale image (PNG/PGM/TIFF, 8 or 16 bit) or .npy array")
    p.add_argument("-o", "--output-dir", default=".", help="directory for outputs (default: .)")
    p.add_argument("--stem", help="output file stem (default: input file name)")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    p.add_argument("--seed", type=int, help="seed for every random stage")
    p.add_argument("--sigma", type=float, help="low-pass scale of the cartoon/texture split")


def _cartoon_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="intensity fidelity weight")
    p.add_argument("--mu", type=float, help="interface length weight")
    p.add_argument("--beta", type=float, help="local fidelity weight (0: plain model)")
    p.add_argument("--dt", type=float, help="time step of the segmentation MBO scheme")
    p.add_argument("--max-iter", type=int, help="maximum segmentation iterations")


def _texture_flags(p):
    p.add_argument("--percentile", type=_percentile,
                   help="spectrum threshold percentile, e.g. 0.92 or 92")
    p.add_argument("--eta", type=float, help="wedge merge fraction")
    p.add_argument("--clusters", type=int, help="number of texture clusters k")
    p.add_argument("--replications", type=int, help="k-means restarts")
    p.add_argument("--method", choices=METHODS, help="texture clustering method")
    p.add_argument("--cluster-dt", type=float, help="time step of the clustering MBO")
    p.add_argument("--dump-subbands", metavar="DIR",
                   help="write curvelet subbands as raw float64 + manifest")


def build_parser():
    parser = argparse.ArgumentParser(prog="stmseg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="split an image into cartoon and texture")
    _common(p)

    p = sub.add_parser("cartoon", help="four-phase segmentation of the cartoon part")
    _common(p)
    _cartoon_flags(p)

    p = sub.add_parser("texture", help="curvelet features and clustering of the texture part")
    _common(p)
    _texture_flags(p)

    p = sub.add_parser("pipeline", help="cartoon and texture segmentation")
    _common(p)
    _cartoon_flags(p)
    _texture_flags(p)

    p = sub.add_parser("synth", help="write a synthetic scene with ground truth")
    p.add_argument("kind", choices=sorted(synth.SCENES))
    p.add_argument("-o", "--output", required=True, help="output stem; writes <stem>.npy etc.")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, help="stripe or ramp amplitude")
    p.add_argument("--noise-std", type=float, help="noise level (composite only)")
    return parser


def config_from_args(args):
    """Merge config file, preset and flags (in increasing priority)."""
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    if args.preset:
        doc["preset"] = args.preset
    for dest, (section, name) in _FLAG_MAP.items():
        value = getattr(args, dest, None)
        if value is not None:
            doc.setdefault(section, {})[name] = value
    for key in ("seed", "method", "dump_subbands", "stem"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    doc["input_path"] = args.input
    doc["output_dir"] = args.output_dir
    return PipelineConfig.from_dict(doc)


def _stem(args):
    return args.stem or os.path.splitext(os.path.basename(args.input))[0]


def _cmd_decompose(args):
    cfg = config_from_args(args)
    image, _ = load_image(args.input)
    parts = decompose(image, cfg.decomposition)
    os.makedirs(args.output_dir, exist_ok=True)
    base = os.path.join(args.output_dir, _stem(args))
    np.save(base + ".u.npy", parts.cartoon)
    np.save(base + ".v.npy", parts.texture)
    save_gray(base + ".u.png", parts.cartoon)
    save_gray(base + ".v.png", 128 + parts.texture)
    log.info("wrote %s.{u,v}.npy and previews", base)


def _cmd_run(args, cartoon, texture):
    result = run_pipeline(config_from_args(args), cartoon=cartoon, texture=texture)
    for path in result.report.get("outputs", []):
        log.info("wrote %s", path)


def _cmd_synth(args):
    params = {"size": args.size}
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    if args.noise_std is not None:
        params["noise_std"] = args.noise_std
    scene = synth.synth_generate(args.kind, seed=args.seed, **params)
    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    np.save(args.output + ".npy", scene.image)
    save_label_map(args.output + ".cartoon_truth.png", scene.cartoon_truth)
    save_label_map(args.output + ".texture_truth.png", scene.texture_truth)
    log.info("wrote %s.npy and truth maps", args.output)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "decompose":
            _cmd_decompose(args)
        elif args.command == "cartoon":
            _cmd_run(args, cartoon=True, texture=False)
        elif args.command == "texture":
            _cmd_run(args, cartoon=False, texture=True)
        elif args.command == "pipeline":
            _cmd_run(args, cartoon=True, texture=True)
        else:
            _cmd_synth(args)
    except (StmsegError, OSError, ValueError) as exc:
        print(f"stmseg: error: {exc}", file=sys.stderr)
        return 1
    return 0
