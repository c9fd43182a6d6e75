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
"""
Packaged defaults

Inference tolerances, restart counts and the experiment matrix live in
``clasp/data/*.json`` so that they can be inspected and changed without
touching the solvers.
"""

import json
import pkg_resources

from .exception import ConfigError


def _load(fname):
    path = pkg_resources.resource_filename(__name__, 'data/' + fname)
    with open(path, 'r') as f:
        return json.loads(f.read())


def load_defaults(section):
    '''Return the packaged defaults of one solver section

    >>> load_defaults('mf')['tol']
    1e-07
    '''
    data = _load('defaults.json')
    try:
        return dict(data[section])
    except KeyError:
        raise ConfigError(f"No defaults defined for section: {section}")


def load_experiments():
    '''Return the heuristic basket and experiment matrix
    '''
    return _load('experiments.json')


def basket():
    '''The ten clamp selection heuristics

    >>> len(basket())
    10
    '''
    return list(load_experiments()['basket'])
