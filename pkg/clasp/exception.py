#!/usr/bin/env python
# Copyright 2026 clasp developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


class ClaspException(Exception):
    pass


class InputError(ClaspException):
    """Malformed model, assignment, marginals or model file
    """
    pass


class CapacityError(ClaspException):
    """State space, induced width or search budget too large to handle
    """
    pass


class UnsupportedError(ClaspException):
    """Operation only defined for binary models
    """
    pass


class ExhaustionError(ClaspException):
    """No variable left to select
    """
    pass


class ConfigError(ClaspException):
    pass


class GenerationError(ClaspException):
    """Random graph generation ran out of attempts
    """
    pass
