# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Building blocks of the command line surface.

:class:`CommandNode` stores one command with its arguments and the child commands. The arguments are
read from the signature and the docstring of the function that implements the command. Once the tree
is complete :meth:`CommandNode.generate_parser` turns it into an :external:class:`argparse.ArgumentParser`.
"""

from __future__ import annotations

import argparse
import inspect
import sys
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple, Union

from . import annotations as markers
from ..errors import CommandLineError


class NonExitingArgumentParser(argparse.ArgumentParser):
    """
    An :external:class:`argparse.ArgumentParser` that raises :class:`~nonstatlqr.errors.CommandLineError`
    instead of calling :external:func:`sys.exit`.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        if "exit_on_error" not in kwargs:
            self.exit_on_error = False

    def exit(self, status=0, message=None):
        if message:
            self._print_message(message, sys.stderr)
        if status != 0:
            raise CommandLineError(message or f"exit status {status}")

    def error(self, message) -> NoReturn:
        raise CommandLineError(message)


class CommandArgument:
    """
    One argument of a command.

    :param name: the Python name of the parameter
    """

    def __init__(self, name: str):
        if not name.isidentifier():
            raise ValueError(f"name '{name}' is not a valid name for an argument")
        self.dest = name
        self.optional = False
        self.required = False
        self.flag = False
        self.nargs: Optional[str] = None
        self.type: Optional[Callable] = None
        self.default: Any = None
        self.choices: Optional[Sequence] = None
        self.help = ""

    @property
    def name(self) -> str:
        """The name on the command line, :code:`--h-cap` for the parameter :code:`h_cap`."""
        if self.optional:
            return "--" + self.dest.replace("_", "-")
        return self.dest

    @property
    def positional(self) -> bool:
        return not self.optional

    def get_command_line(self) -> Tuple[List[str], Dict[str, Any]]:
        """The arguments of the matching :external:meth:`argparse.ArgumentParser.add_argument` call."""
        kwargs: Dict[str, Any] = {}
        if self.flag:
            kwargs["action"] = "store_true"
        else:
            if self.type:
                kwargs["type"] = self.type
            if self.nargs:
                kwargs["nargs"] = self.nargs
            if self.choices:
                kwargs["choices"] = self.choices
        if self.default is not None:
            kwargs["default"] = self.default
        if self.optional:
            kwargs["dest"] = self.dest
            if self.required:
                kwargs["required"] = True
        if self.help:
            kwargs["help"] = self.help
        return [self.name], kwargs

    def __str__(self):
        args, kwargs = self.get_command_line()
        kwargstr = ",".join(f"{key}={value}" for key, value in kwargs.items())
        return ", ".join(filter(None, [",".join(args), kwargstr]))


class CommandNode:
    """
    Single node of the command tree.

    The root node (title :code:`None`) is created by :class:`~nonstatlqr.cli.registry.CommandRegistry`,
    the children by its :meth:`~nonstatlqr.cli.registry.CommandRegistry.command` decorator.

    :param title: name of the command, :code:`None` for the root node
    :param parent: the parent node, :code:`None` for the root node
    :param prog: program name shown in the usage (root node only)
    """

    def __init__(self, title: Optional[str], parent: Optional[CommandNode] = None, prog: Optional[str] = None):
        self.title = title
        self.parent = parent
        self.prog = prog
        self.description = ""
        self.children: Dict[str, CommandNode] = {}
        self.arguments: Dict[str, CommandArgument] = {}
        self.positional_args: List[str] = []
        self.optional_args: List[str] = []
        self._func: Callable[..., Any] = self.no_command
        self._globals: Dict[str, Any] = {}
        self._parser: Optional[argparse.ArgumentParser] = None

    @property
    def root(self) -> CommandNode:
        return self.parent.root if self.parent else self

    @property
    def function(self) -> Callable[..., Any]:
        """
        The function implementing the command.

        Setting it reads the arguments from the signature and the docstring of the function.
        """
        return self._func

    @function.setter
    def function(self, function: Callable[..., Any]) -> None:
        if not callable(function):
            raise TypeError(f"'function' must be callable, was a {type(function)}")
        self._func = function
        self._globals = getattr(function, "__globals__", {})
        self.analyse_signature(function)
        self.analyse_docstring(function)

    @property
    def argumentparser(self) -> argparse.ArgumentParser:
        """The parser of this node, generated from the root on first access."""
        if self._parser is None:
            self.root.generate_parser(None)
        return self._parser

    def get_argument(self, name: str) -> Optional[CommandArgument]:
        """Look up an argument by its Python name or its command line name."""
        return self.arguments.get(name.lstrip("-").replace("-", "_"))

    def add_argument(self, arg: CommandArgument) -> None:
        if arg.dest in self.arguments:
            raise ValueError(f"argument '{arg.dest}' declared twice")
        self.arguments[arg.dest] = arg
        if arg.positional:
            self.positional_args.append(arg.dest)
        else:
            self.optional_args.append(arg.dest)

    def get_node(self, command: Union[str, List[str]]) -> CommandNode:
        """
        The node of a command (or a list of command and sub commands), created if missing.
        """
        names = [command] if isinstance(command, str) else list(command)
        if not names:
            return self
        name = names.pop(0)
        node = self.children.get(name)
        if node is None:
            node = CommandNode(name, self)
            self.children[name] = node
            self.root._parser = None
        return node.get_node(names)

    def has_node(self, command: Union[str, List[str]]) -> bool:
        names = [command] if isinstance(command, str) else list(command)
        if not names:
            return False
        node = self.children.get(names[0])
        if node is None:
            return False
        return len(names) == 1 or node.has_node(names[1:])

    def generate_parser(self, parentparser) -> None:
        """
        Build the :external:class:`argparse.ArgumentParser` of this node and of all its children.

        :param parentparser: the sub parser action of the parent, :code:`None` for the root node
        """
        if self.parent is None:
            self._parser = NonExitingArgumentParser(prog=self.prog, description=self.description, add_help=False)
        else:
            self._parser = parentparser.add_parser(name=self.title, help=self.description,
                                                   description=self.description, add_help=False)
        for arg in self.arguments.values():
            args, kwargs = arg.get_command_line()
            self._parser.add_argument(*args, **kwargs)
        self._parser.set_defaults(func=self._func, node=self)
        if self.children:
            subparsers = self._parser.add_subparsers()
            for child in self.children.values():
                child.generate_parser(subparsers)

    def no_command(self, **_) -> None:
        pass

    def analyse_signature(self, func: Callable) -> None:
        signature = inspect.signature(func)
        for name, para in signature.parameters.items():
            if para.kind in (para.VAR_POSITIONAL, para.VAR_KEYWORD) or name == "self":
                continue
            arg = CommandArgument(name)
            annotation = para.annotation if para.annotation is not signature.empty else ""
            self.analyse_annotation(annotation, arg)
            if para.default is not signature.empty:
                arg.default = para.default
            if arg.flag and arg.default is not False:
                raise ValueError(f"flag '{name}' must default to False")
            if arg.choices and arg.default is not None and arg.default not in arg.choices:
                raise ValueError(f"default value {arg.default} must be in the list of choices")
            self.add_argument(arg)

    def analyse_annotation(self, annotation: Any, arg: CommandArgument) -> None:
        if not annotation:
            return
        text = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", str(annotation))
        for part in split_union(text):
            if part:
                self.analyse_annotation_part(part, arg)

    def analyse_annotation_part(self, part: str, arg: CommandArgument) -> None:
        key = part.split("[")[0].split(".")[-1]
        if key == markers.Flag.__name__:
            arg.optional = True
            arg.flag = True
        elif key == markers.Option.__name__:
            arg.optional = True
        elif key == markers.RequiredOption.__name__:
            arg.optional = True
            arg.required = True
        elif key == markers.ZeroOrMore.__name__:
            arg.nargs = "*"
            content = get_bracket_content(part)
            if content:
                self.analyse_annotation_part(content, arg)
        elif key == markers.Choices.__name__:
            choices = eval(get_bracket_content(part), self._globals)
            try:
                arg.choices = tuple(choices)
            except TypeError:
                raise ValueError(f"choices of '{arg.dest}' are not a sequence: {choices}")
        elif part != "Any":
            new_type = eval(part, self._globals)
            if not callable(new_type):
                raise TypeError(f"{part} is not callable")
            arg.type = new_type

    def analyse_docstring(self, func: Callable) -> None:
        """
        The text up to the first field becomes the description; :code:`:param name:` lines become
        the help of the arguments.
        """
        docstring = inspect.getdoc(func)
        if not docstring:
            return
        description: List[str] = []
        in_description = True
        for line in docstring.splitlines():
            line = line.strip()
            if line.startswith(":param"):
                in_description = False
                name, _, text = line[len(":param"):].partition(":")
                arg = self.get_argument(name.strip())
                if arg is None:
                    raise NameError(f":param {name.strip()}: no parameter with this name")
                arg.help = text.strip()
            elif line.startswith(":"):
                in_description = False
            elif in_description and line:
                description.append(line)
        self.description = " ".join(description)

    def __str__(self):
        args = ",".join(self.arguments)
        result = f"{self.title}({args}) : {self.description}"
        for child in self.children.values():
            result += "\n" + "\n".join(f"\t{line}" for line in str(child).splitlines())
        return result


def get_bracket_content(string: str) -> str:
    """
    Content of the outermost brackets, :code:`foo[bar[baz]]` gives :code:`bar[baz]`.

    :return: the content, empty if there are no brackets
    """
    first = string.find("[")
    last = string.rfind("]")
    if -1 < first < last:
        return string[first + 1:last]
    return ""


def split_union(string: str) -> List[str]:
    """Split :code:`a | b[c | d]` at the top level bars."""
    result: List[str] = []
    tmp: List[str] = []
    depth = 0
    for char in string:
        if char == "|" and depth == 0:
            result.append("".join(tmp).strip())
            tmp = []
            continue
        if char in "[({":
            depth += 1
        elif char in "])}":
            depth -= 1
        tmp.append(char)
    result.append("".join(tmp).strip())
    return result
