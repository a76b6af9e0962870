"""Command-line front end: ``qrabi {spectrum,wigner,verify,state}``.

Options come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (``#`` starts a comment), then command-line flags.
Outputs are rendered in memory, written to temporary names and renamed
only after every file of the command is ready.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from .models import ModelId, ModelParams, build_hamiltonian, model_space
from .operators import ConvergenceError, QRabiError, lowest_eigenpairs
from .perturbation import spectrum_sweep
from .states import CatKind, DensityKind, DensityMatrix, cat_state, coherent_state, reference_density
from .verify import run_verification
from .wigner import PlaneSection, SectionKind, grid_samples, wigner_values

log = logging.getLogger("qrabi")

STATE_KINDS = ("GROUND", "COHERENT") + tuple(k.value for k in CatKind) + tuple(k.value for k in DensityKind)

DEFAULTS = {
    "model": "R1",
    "omega": 1.0,
    "b_field": 0.1,
    "phi": 7 * math.pi / 6,
    "lambda": 0.5,
    "lambda_range": None,
    "truncation": 50,
    "kind": "GROUND",
    "k": 0,
    "alpha": 3.0,
    "section": "diag",
    "b_coord": None,
    "scale": 1 / math.sqrt(2),
    "extent": 5.0,
    "resolution": 101,
    "out": ".",
}


@dataclass
class RunConfig:
    model: ModelId
    params: ModelParams
    truncation: int
    lambda_range: Optional[Tuple[float, float, int]]
    kind: str
    k: int
    alpha: float
    section: SectionKind
    b_coord: Optional[int]
    scale: float
    extent: float
    resolution: int
    out: str

    def lambda_grid(self) -> np.ndarray:
        if self.lambda_range is None:
            return np.array([self.params.lam])
        a, b, n = self.lambda_range
        return np.linspace(a, b, n) if n > 1 else np.array([a])


class ConfigError(QRabiError):
    pass


def _float(name, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{name}: must be finite, got {value!r}")
    return x


def _int(name, value) -> int:
    try:
        return int(str(value).strip())
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {value!r}") from None


def parse_range(text: str) -> Tuple[float, float, int]:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"lambda_range: expected start:stop:steps, got {text!r}")
    a, b = _float("lambda_range", parts[0]), _float("lambda_range", parts[1])
    n = _int("lambda_range", parts[2])
    if n < 1:
        raise ConfigError(f"lambda_range: steps must be >= 1, got {n}")
    return a, b, n


def read_config_file(path: str) -> Dict[str, str]:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"config line {no}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"config line {no}: empty value for {key!r}")
        values[key] = value
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    try:
        model = ModelId.parse(merged["model"])
    except QRabiError as exc:
        raise ConfigError(f"model: {exc}") from None
    try:
        params = ModelParams(omega=_float("omega", merged["omega"]), b_field=_float("b_field", merged["b_field"]),
                             phi=_float("phi", merged["phi"]), lam=_float("lambda", merged["lambda"]))
    except ConfigError:
        raise
    except QRabiError as exc:
        raise ConfigError(f"params: {exc}") from None
    truncation = _int("truncation", merged["truncation"])
    if truncation < 1:
        raise ConfigError(f"truncation: must be >= 1, got {truncation}")
    lrange = parse_range(merged["lambda_range"]) if merged["lambda_range"] is not None else None
    kind = str(merged["kind"]).upper()
    if kind not in STATE_KINDS:
        raise ConfigError(f"kind: expected one of {', '.join(STATE_KINDS)}, got {merged['kind']!r}")
    k = _int("k", merged["k"])
    if k not in (0, 1, 2):
        raise ConfigError(f"k: must be 0, 1 or 2, got {k}")
    section = str(merged["section"]).upper()
    if section not in ("DIAG", "FRINGE"):
        raise ConfigError(f"section: expected diag or fringe, got {merged['section']!r}")
    b_coord = None if merged["b_coord"] is None else _int("b_coord", merged["b_coord"]) % 3
    extent = _float("extent", merged["extent"])
    if extent <= 0:
        raise ConfigError(f"extent: must be > 0, got {extent}")
    resolution = _int("resolution", merged["resolution"])
    if resolution < 2:
        raise ConfigError(f"resolution: must be >= 2, got {resolution}")
    scale = _float("scale", merged["scale"])
    if scale <= 0:
        raise ConfigError(f"scale: must be > 0, got {scale}")
    return RunConfig(model, params, truncation, lrange, kind, k, _float("alpha", merged["alpha"]),
                     SectionKind(section), b_coord, scale, extent, resolution, str(merged["out"]))


def fmt(x: float) -> str:
    """Shortest round-trip text of ``x`` rounded to 12 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise QRabiError(f"refusing to write non-finite value {x!r}")
    return repr(float(f"{x:.12g}"))


def csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_outputs(out_dir: str, files: Dict[str, str]):
    """Write every file to a temporary name first, then rename them all into place."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            staged.append((tmp, os.path.join(out_dir, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def _params_meta(cfg: RunConfig) -> List[str]:
    p = cfg.params
    return [f"model = {cfg.model.value}", f"omega = {fmt(p.omega)}", f"b_field = {fmt(p.b_field)}",
            f"phi = {fmt(p.phi)}", f"lambda = {fmt(p.lam)}", f"truncation = {cfg.truncation}"]


def cmd_spectrum(cfg: RunConfig) -> Dict[str, str]:
    if cfg.model not in (ModelId.R1, ModelId.R2):
        raise ConfigError(f"model: spectrum compares with closed forms for R1 and R2 only, got {cfg.model.value}")
    res = spectrum_sweep(cfg.model, cfg.params, cfg.lambda_grid(), 3, cfg.truncation)
    if res.failures:
        raise QRabiError("eigensolver failed at " + "; ".join(res.failures.values()))
    rows = [[lam, *ex, *pt] for lam, ex, pt in zip(res.lambda_grid, res.exact_by_k, res.perturbative)]
    header = ["lambda", "exact_e0", "exact_e1", "exact_e2", "pert_k0", "pert_k1", "pert_k2"]
    return {"spectrum.csv": csv_text(header, rows)}


def ground_state(cfg: RunConfig):
    space = model_space(cfg.model, cfg.truncation)
    H = build_hamiltonian(cfg.model, cfg.params, space)
    return lowest_eigenpairs(H, 1)[0][1]


def build_state(cfg: RunConfig):
    kind = cfg.kind
    if kind == "GROUND":
        return ground_state(cfg)
    if kind == "COHERENT":
        return coherent_state(cfg.alpha, cfg.truncation)
    if kind in CatKind.__members__:
        return cat_state(kind, cfg.k, cfg.alpha, cfg.truncation)
    return reference_density(kind, cfg.k, cfg.alpha, cfg.truncation)


def cmd_wigner(cfg: RunConfig) -> Dict[str, str]:
    state = build_state(cfg)
    rho = state if isinstance(state, DensityMatrix) else DensityMatrix.pure(state)
    fock = rho.space.fock_slots
    has_q = bool(rho.space.qutrit_slots)
    if len(fock) != 2:
        raise ConfigError(f"kind: plane sections need a two-mode state, {cfg.kind} for model "
                          f"{cfg.model.value} has {len(fock)} mode(s)")
    W = grid_samples(cfg.extent, cfg.resolution)
    flat = W.ravel()
    files = {}
    maps = []
    panels = [(a, b) for a in range(3) for b in range(3)] if has_q else [None]
    sections: Dict[int, PlaneSection] = {}
    for panel in panels:
        b = panel[1] if panel else 0
        sb = cfg.b_coord if cfg.b_coord is not None else b
        sections.setdefault(sb, PlaneSection(cfg.section, sb, cfg.scale))
    values = {}
    for sb, sec in sorted(sections.items()):
        z1, z2 = sec.map(flat)
        want = [p for p in panels if (cfg.b_coord if cfg.b_coord is not None else (p[1] if p else 0)) == sb]
        vals = wigner_values(rho, z1, z2, want if has_q else [(0, 0)])
        for p, v in zip(want, vals):
            values[p] = (sec, v)
    for panel in panels:
        sec, v = values[panel]
        rows = zip(flat.real, flat.imag, v)
        name = f"wigner_a{panel[0]}_b{panel[1]}.csv" if panel else "wigner_boson.csv"
        files[name] = csv_text(["re_w", "im_w", "value"], rows)
        maps.append(f"{name}: {sec.describe()}")
    meta = _params_meta(cfg) + [
        f"state = {cfg.kind}", f"k = {cfg.k}", f"alpha = {fmt(cfg.alpha)}",
        f"extent = {fmt(cfg.extent)}", f"resolution = {cfg.resolution}",
        "sampling = row-major, rows im_w ascending, columns re_w ascending, both linspace(-extent, extent, resolution)",
        "prefactor = " + ("1/(3 pi^2)" if has_q else "1/pi^2"),
    ] + [f"section {m}" for m in maps]
    files["meta.txt"] = "\n".join(meta) + "\n"
    return files


def cmd_state(cfg: RunConfig) -> Dict[str, str]:
    state = build_state(cfg)
    if isinstance(state, DensityMatrix):
        if len(state.weights) != 1:
            raise ConfigError(f"kind: {cfg.kind} is a mixed state; only pure states have amplitudes")
        amps = state.vectors[:, 0]
    else:
        amps = state.amplitudes
    rows = [[i, a.real, a.imag] for i, a in enumerate(amps)]
    dims = "x".join(str(d) for d in state.space.dims)
    meta = _params_meta(cfg) + [f"state = {cfg.kind}", f"k = {cfg.k}", f"alpha = {fmt(cfg.alpha)}",
                                f"dims = {dims}", "ordering = row-major over factors, qutrit first"]
    return {"state.csv": csv_text(["index", "re", "im"], rows), "state_meta.txt": "\n".join(meta) + "\n"}


def cmd_verify(cfg: RunConfig) -> Tuple[Dict[str, str], bool, str]:
    report = run_verification(cfg.params, cfg.truncation)
    return {"verify.txt": report.render()}, report.overall, report.render_text()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--model", help="R1, R2, R2P or ALT")
    common.add_argument("--omega", help="boson frequency")
    common.add_argument("--b-field", dest="b_field", help="magnetic field strength B")
    common.add_argument("--phi", help="magnetic field phase")
    common.add_argument("--lambda", dest="lambda", help="coupling strength")
    common.add_argument("--lambda-range", dest="lambda_range", help="start:stop:steps coupling grid")
    common.add_argument("--truncation", help="Fock cutoff N_max per mode")
    common.add_argument("--kind", help="state kind: " + ", ".join(STATE_KINDS))
    common.add_argument("--k", help="symmetry sector 0, 1 or 2")
    common.add_argument("--alpha", help="coherent amplitude")
    common.add_argument("--section", type=str.lower, choices=["diag", "fringe"])
    common.add_argument("--b-coord", dest="b_coord", help="pin the fringe section to this b")
    common.add_argument("--scale", help="section scale s (diag: z1 = s w, z2 = s w*)")
    common.add_argument("--extent", help="grid half-width in w")
    common.add_argument("--resolution", help="grid points per axis")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="qrabi", description="Z3 Rabi model spectra, states and Wigner functions")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="exact vs first-order low spectrum over a coupling grid")
    sub.add_parser("wigner", parents=[common], help="Wigner function panels on a plane section")
    sub.add_parser("verify", parents=[common], help="run the verification report")
    sub.add_parser("state", parents=[common], help="dump state amplitudes")
    return parser


def _threads() -> Optional[int]:
    raw = os.environ.get("QRABI_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QRABI_THREADS: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"QRABI_THREADS: expected a positive integer, got {raw!r}")
    return n


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        with threadpool_limits(limits=_threads()):
            ok = True
            if args.command == "spectrum":
                files = cmd_spectrum(cfg)
            elif args.command == "wigner":
                files = cmd_wigner(cfg)
            elif args.command == "state":
                files = cmd_state(cfg)
            else:
                files, ok, text = cmd_verify(cfg)
                sys.stdout.write(text)
        write_outputs(cfg.out, files)
        log.info("wrote %s", ", ".join(sorted(files)))
    except QRabiError as exc:
        print(f"qrabi: error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, OSError) as exc:
        print(f"qrabi: error: {exc}", file=sys.stderr)
        return 3
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
