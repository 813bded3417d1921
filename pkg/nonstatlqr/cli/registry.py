# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
The :class:`CommandRegistry` turns decorated functions into commands of one
:external:class:`argparse.ArgumentParser` and executes command lines against it.

.. code-block:: python

    commands = CommandRegistry(prog="nonstat-lqr")

    @commands.command
    def simulate(n: RequiredOption | int, seed: Option | int = 0):
        \"\"\"
        Simulate a controller.

        :param n: number of rounds
        :param seed: random seed
        \"\"\"

    commands.execute(["simulate", "--n", "100"])
"""

from __future__ import annotations

import argparse
import shlex
import sys
from typing import Any, Callable, Dict, List, Optional, TextIO, Tuple, Union

from .annotations import ZeroOrMore
from .parser import CommandNode
from ..errors import CommandLineError


def default_error_handler(exc: CommandLineError) -> None:
    """Print the error message to stderr."""
    sys.stderr.write(str(exc) + "\n")
    sys.stderr.flush()


class CommandRegistry:
    """
    Registry of the commands of a command line program.

    Registering a command with the name :code:`help` is reserved; the registry provides it and
    prints the help of the root or of the given command.

    :param prog: program name shown in the usage line
    :param description: text shown by :code:`help` without a command
    """

    def __init__(self, prog: Optional[str] = None, description: str = ""):
        self._rootnode = CommandNode(None, prog=prog)
        self._rootnode.description = description
        self._rootnode.get_node("help").function = self.help

    @property
    def rootnode(self) -> CommandNode:
        return self._rootnode

    @property
    def argumentparser(self) -> argparse.ArgumentParser:
        return self._rootnode.argumentparser

    def command(self, func: Callable) -> Callable:
        """
        Decorator to register a function as a command.

        The command is named after the function, with :code:`__` replaced by :code:`-`.
        """
        name = func.__name__.replace("__", "-")
        if name == "help":
            raise ValueError("the 'help' command is reserved")
        self._rootnode.get_node(name).function = func
        return func

    def execute(self, commandline: Union[str, List[str]], error_handler=default_error_handler,
                stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> Optional[Any]:
        """
        Parse a command line and call the command function.

        :param commandline: a string, split like a POSIX shell would, or a list of tokens
        :param error_handler: called with the :class:`~nonstatlqr.errors.CommandLineError` of an invalid
            command line. If :code:`None` the error is raised.
        :param stdout: redirects the output of the parser and of the command
        :param stderr: redirects error messages of the parser and of the command
        :return: whatever the command function returns
        """
        arg_list = split_commandline(commandline)
        old_stdout, old_stderr = sys.stdout, sys.stderr
        result = None
        try:
            if stdout:
                sys.stdout = stdout
            if stderr:
                sys.stderr = stderr
            try:
                named_args = self.argumentparser.parse_args(arg_list)
            except argparse.ArgumentError as err:
                raise CommandLineError(str(err)) from err
            func: Callable = named_args.func
            node: CommandNode = named_args.node
            args, kwargs = get_arguments_from_namespace(named_args, node)
            result = func(*args, **kwargs)
        except CommandLineError as err:
            if error_handler is None:
                raise
            error_handler(err)
        finally:
            sys.stdout, sys.stderr = old_stdout, old_stderr
        return result

    def help(self, command: ZeroOrMore[str]) -> int:
        """
        Show the help of a command.

        :param command: name of the command
        """
        node = self._rootnode
        if command and self._rootnode.has_node(command):
            node = self._rootnode.get_node(command)
        node.argumentparser.print_help()
        return 0


def get_arguments_from_namespace(namespace: argparse.Namespace, node: CommandNode
                                 ) -> Tuple[List[Any], Dict[str, Any]]:
    """Split the namespace into the positional and keyword arguments of the command function."""
    values = vars(namespace)
    args = [values[name] for name in node.positional_args if name in values]
    kwargs = {name: values[name] for name in node.optional_args if name in values}
    return args, kwargs


def split_commandline(cmdline: Union[str, List[str]]) -> List[str]:
    if isinstance(cmdline, str):
        return shlex.split(cmdline)
    if isinstance(cmdline, (list, tuple)):
        return [str(token) for token in cmdline]
    raise TypeError("command line must be a string or a list of strings")
