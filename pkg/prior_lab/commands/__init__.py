"""CLI subcommands"""
from prior_lab.commands import data, experiment, kmeans, sampling, train, verify

# Registration order is the order shown in --help
COMMAND_MODULES = (
    verify,
    train,
    experiment,
    kmeans,
    sampling,
    data,
)


def register_all(subparsers) -> None:
    """Attach every subcommand parser"""
    for module in COMMAND_MODULES:
        module.register(subparsers)
