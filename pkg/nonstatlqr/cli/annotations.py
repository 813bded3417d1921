# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Annotations for the command functions.

The classes in this module carry no code and must not be instantiated. They mark the parameters of
a command function and are read by :class:`~nonstatlqr.cli.parser.CommandNode` when the command is
registered:

.. code-block:: python

    @commands.command
    def simulate(n: RequiredOption | int, prune: Option | Choices[("none", "geometric")] = "none"):
        ...

A parameter without a marker becomes a positional argument.
"""

from typing import Generic, TypeVar

T = TypeVar('T')


class _Marker:
    def __new__(cls, *args, **kwargs):
        raise TypeError(f"{cls.__name__} is only used for annotations and should not be instantiated")


class Flag(_Marker):
    """
    A switch without a value, :code:`--name`.

    The parameter must default to :code:`False`; the flag stores :code:`True` when present.
    """


class Option(_Marker):
    """
    An optional argument, :code:`--name VALUE`.

    Underscores in the parameter name are written as hyphens on the command line,
    e.g. :code:`h_cap` becomes :code:`--h-cap`.
    """


class RequiredOption(_Marker):
    """An :class:`Option` that must be given."""


class ZeroOrMore(Generic[T], _Marker):
    """Any number of values, collected into a list."""


class Choices(Generic[T], _Marker):
    """
    Restricts the values of an argument. The bracket holds a tuple of the allowed values:

    .. code-block:: python

        def cmd(controller: Option | Choices[("prodr", "zero")] = "prodr"):
    """
