# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or go to <https://opensource.org/licenses/MIT>.

from .annotations import Choices, Flag, Option, RequiredOption, ZeroOrMore
from .parser import CommandArgument, CommandNode, NonExitingArgumentParser
from .registry import CommandRegistry

__api_classes__ = [Flag, Option, RequiredOption, ZeroOrMore, Choices,
                   CommandRegistry, CommandNode, CommandArgument, NonExitingArgumentParser]

__all__ = [c.__name__ for c in __api_classes__]
