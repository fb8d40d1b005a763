from types import ModuleType

from srdetect.commands import calibrate, figure1, oc, qsd, simulate, theorem2

# subcommand name -> handler module exposing HELP, add_arguments(), run()
COMMANDS: dict[str, ModuleType] = {
    "theorem2": theorem2,
    "figure1": figure1,
    "oc": oc,
    "qsd": qsd,
    "calibrate": calibrate,
    "simulate": simulate,
}
