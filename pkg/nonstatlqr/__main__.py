# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or go to <https://opensource.org/licenses/MIT>.

import sys

from .cli.main import main

sys.exit(main())
