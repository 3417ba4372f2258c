from logging import DEBUG, INFO, basicConfig
from typing import Annotated

from result import Err
from typer import Option, Typer

from lindsim.commands.analyze_error import analyze_error
from lindsim.commands.common import fail
from lindsim.commands.kraus_dump import kraus_dump
from lindsim.commands.primitives_verify import primitives_verify
from lindsim.commands.quadrature import quadrature
from lindsim.commands.simulate import simulate
from lindsim.commands.td_simulate import td_simulate
from lindsim.config import load_config

COMMANDS = [
    simulate,
    analyze_error,
    quadrature,
    primitives_verify,
    kraus_dump,
    td_simulate,
]
typer = Typer()
for command in COMMANDS:
    _ = typer.command()(command)


@typer.callback()
def main(
    config_file: Annotated[str, Option(help="Configuration file path")] = "config.toml",
    debug: Annotated[bool, Option(help="Enable more verbose logs")] = False,
):
    basicConfig(level=DEBUG if debug else INFO)
    result = load_config(config_file)
    if isinstance(result, Err):
        fail(result.err_value, f"validating {config_file}")


if __name__ == "__main__":
    typer()
