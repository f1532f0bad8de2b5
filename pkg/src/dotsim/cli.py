"""Command-line interface.

Each subcommand assembles a flat config from an optional JSON file plus
flag overrides (flags win), validates it through the same path as
`dotsim run --config`, and hands it to the runner. Exit status 0 on
success, 2 for config problems, 1 for compute or write failures.
"""
import argparse
import sys

from . import __version__
from .config import ConfigError, read_document, validate_config
from .runner import run

S = argparse.SUPPRESS


def _common(parser) -> None:
    parser.add_argument("--config", default=S, metavar="FILE",
                        help="JSON config file; flags override its values")
    parser.add_argument("--out", dest="out", default=S, metavar="PATH",
                        help="artifact output path")
    parser.add_argument("--seed", dest="seed", type=int, default=S,
                        help="RNG seed for noisy synthetics")
    parser.add_argument("--threads", dest="threads", type=int, default=S,
                        help="worker threads (0 = DOTSIM_THREADS or 1)")


def _screening_flags(parser) -> None:
    parser.add_argument("--layout", dest="layout", default=S,
                        help="builtin layout name or layout JSON path")
    parser.add_argument("--tile-nm", dest="tile_nm", type=float, default=S,
                        help="tile grid pitch, nm")
    parser.add_argument("--depth-nm", dest="depth_nm", type=float, default=S,
                        help="electron plane depth below the gates, nm")
    parser.add_argument("--permittivity", dest="rel_permittivity",
                        type=float, default=S)


def _geometry_flags(parser) -> None:
    parser.add_argument("--a-qd", dest="a_qd_nm", type=float, default=S,
                        help="dot pitch, nm")
    parser.add_argument("--fwhm", dest="fwhm_nm", type=float, default=S,
                        help="orbital full width at half maximum, nm")


def _molecule_flags(parser) -> None:
    parser.add_argument("--sites", dest="sites", type=int, default=S)
    parser.add_argument("--t", dest="t_ueV", type=float, default=S,
                        help="hopping, ueV")
    parser.add_argument("--v0", dest="v0_ueV", type=float, default=S,
                        help="nuclear strength, ueV at one pitch")
    parser.add_argument("--r-min", dest="r_min", type=float, default=S,
                        help="smallest separation, units of the pitch")
    parser.add_argument("--r-max", dest="r_max", type=float, default=S)
    parser.add_argument("--r-steps", dest="r_steps", type=int, default=S)
    parser.add_argument("--ee-model", dest="ee_model", default=S,
                        choices=("bare", "image", "tiled"))
    parser.add_argument("--soft-core", dest="soft_core", type=float,
                        default=S, help="softening radius, nm")
    _geometry_flags(parser)
    _screening_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dotsim",
        description="Screened interactions, dot-array spectra and "
                    "charge-stability analysis.")
    parser.add_argument("--version", action="version",
                        version=f"dotsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    screen = sub.add_parser("screen",
                            help="pair potential vs separation "
                                 "(bare, image, tiled)")
    screen.add_argument("--rho-min", dest="rho_min_nm", type=float, default=S)
    screen.add_argument("--rho-max", dest="rho_max_nm", type=float, default=S)
    screen.add_argument("--rho-steps", dest="rho_steps", type=int, default=S)
    screen.add_argument("--reference", dest="reference", default=S,
                        choices=("reservoir", "isolated"))
    _screening_flags(screen)
    _common(screen)

    params = sub.add_parser("params",
                            help="interaction matrix elements of a dot array")
    params.add_argument("--sites", dest="sites", type=int, default=S)
    params.add_argument("--dots", dest="dots", default=S, metavar="FILE",
                        help="dot-array JSON; omitted = uniform chain")
    params.add_argument("--model", dest="model", default=S,
                        choices=("bare", "image", "tiled"))
    _geometry_flags(params)
    _screening_flags(params)
    _common(params)

    atom = sub.add_parser("atom", help="one-electron levels vs V0")
    atom.add_argument("--sites", dest="sites", type=int, default=S)
    atom.add_argument("--t", dest="t_ueV", type=float, default=S)
    atom.add_argument("--v0-min", dest="v0_min_ueV", type=float, default=S)
    atom.add_argument("--v0-max", dest="v0_max_ueV", type=float, default=S)
    atom.add_argument("--v0-steps", dest="v0_steps", type=int, default=S)
    atom.add_argument("--levels", dest="levels", type=int, default=S)
    _geometry_flags(atom)
    _common(atom)

    molecule = sub.add_parser("molecule",
                              help="two-electron dissociation curve")
    _molecule_flags(molecule)
    _common(molecule)

    occupation = sub.add_parser("occupation",
                                help="site occupations under bias")
    occupation.add_argument("--bias-slope", dest="bias_slope_ueV",
                            type=float, default=S,
                            help="detuning ramp, ueV per site")
    _molecule_flags(occupation)
    _common(occupation)

    stability = sub.add_parser("stability",
                               help="charge-stability diagrams and fits")
    stsub = stability.add_subparsers(dest="mode", required=True)
    simulate = stsub.add_parser("simulate", help="synthesize a diagram CSV")
    simulate.add_argument("--v-ij", dest="v_ij_ueV", type=float, default=S)
    simulate.add_argument("--t-ij", dest="t_ij_ueV", type=float, default=S)
    simulate.add_argument("--center-i", dest="center_i_ueV", type=float,
                          default=S)
    simulate.add_argument("--center-j", dest="center_j_ueV", type=float,
                          default=S)
    simulate.add_argument("--span", dest="span_ueV", type=float, default=S,
                          help="half range of each axis; 0 = auto")
    simulate.add_argument("--points", dest="points", type=int, default=S)
    simulate.add_argument("--broadening", dest="broadening_ueV", type=float,
                          default=S)
    simulate.add_argument("--noise", dest="noise", type=float, default=S,
                          help="additive noise level, fraction of one step")
    simulate.add_argument("--weight-i", dest="weight_i", type=float,
                          default=S)
    simulate.add_argument("--weight-j", dest="weight_j", type=float,
                          default=S)
    _common(simulate)
    fit = stsub.add_parser("fit", help="fit an anti-crossing to a diagram")
    fit.add_argument("--input", dest="input", default=S, metavar="CSV",
                     help="diagram CSV to fit")
    fit.add_argument("--fix-t", dest="fix_t_ueV", type=float, default=S,
                     help="freeze the tunnel coupling at this value")
    _common(fit)

    runp = sub.add_parser("run", help="execute a config file")
    runp.add_argument("--config", required=True, metavar="FILE")
    runp.add_argument("--out", dest="out", default=S)
    runp.add_argument("--seed", dest="seed", type=int, default=S)
    runp.add_argument("--threads", dest="threads", type=int, default=S)
    return parser


def _assemble(args: argparse.Namespace) -> dict:
    values = vars(args).copy()
    command = values.pop("command")
    mode = values.pop("mode", None)
    document = {}
    if "config" in values:
        document = read_document(values.pop("config"))

    if command != "run":
        stated = document.get("experiment")
        if stated is not None and stated != command:
            raise ConfigError(f"experiment: config file says {stated!r} "
                              f"but the command line says {command!r}")
        document["experiment"] = command
    if mode is not None:
        stated = document.get("mode")
        if stated is not None and stated != mode:
            raise ConfigError(f"mode: config file says {stated!r} but the "
                              f"command line says {mode!r}")
        document["mode"] = mode

    document.update(values)  # flags override the file
    return document


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = validate_config(_assemble(args))
        artifacts = run(config, stream=sys.stdout)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in artifacts:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
