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
Random and structured binary models

Singleton parameters are drawn from ``U[theta_range]`` and edge weights from
``U[w_range]``. Every parameter gets its own random stream keyed by the
element it belongs to, so a model's ``theta`` does not change when the edge
set does and vice versa.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from .config import load_experiments
from .exception import ConfigError, GenerationError
from .model import from_binary

log = logging.getLogger('clasp_debug')

#: Bump when the mapping from seeds to models changes
STREAM_VERSION = 1

FAMILIES = ('grid', 'erdos', 'regular', 'complete', 'cycle', 'symmetric', 'lamp', 'barbell')

#: Edges of the lamp model: a 4-clique hanging off a star through a path
LAMP_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5),
              (5, 6), (5, 7), (5, 8), (5, 9))

#: Attractive 5-clique joined to a frustrated triangle
BARBELL_WEIGHTS = dict([((i, j), 6.0) for i in range(5) for j in range(i + 1, 5)]
                       + [((0, 5), 6.0), ((5, 6), 6.0), ((5, 7), 6.0), ((6, 7), -6.0)])

_REGULAR_ATTEMPTS = 100


@dataclass(frozen=True)
class GenSpec:
    """Recipe for one model

    Attributes:
        family: ``grid`` (toroidal unless ``toroidal`` is false, ``n`` a square),
            ``erdos``, ``regular``, ``complete``, ``cycle``, ``symmetric``
            (``topology`` cycle or complete, all ``theta = 0`` and ``W = w``),
            ``lamp`` or ``barbell``
        p: edge probability for ``erdos``, default ``4 / (n - 1)``
        w: common weight of ``symmetric`` and ``lamp`` models; on ``complete`` or
            ``cycle`` it gives the symmetric model of that topology
    """
    family: str
    n: int = 0
    theta_range: Tuple[float, float] = (-2.0, 2.0)
    w_range: Tuple[float, float] = (-6.0, 6.0)
    seed: int = 0
    p: Optional[float] = None
    degree: int = 4
    toroidal: bool = True
    topology: str = 'complete'
    w: Optional[float] = None

    def __post_init__(self):
        for name in ('theta_range', 'w_range'):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown model family {self.family}, expected one of {FAMILIES}")
        for name in ('theta_range', 'w_range'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must be ordered, got ({lo}, {hi})")
        if self.family in ('grid', 'erdos', 'regular', 'complete', 'cycle', 'symmetric') \
                and self.n < 1:
            raise ConfigError(f"{self.family} models need n >= 1")
        if (self.family == 'cycle' or (self.family == 'symmetric' and self.topology == 'cycle')) \
                and self.n < 3:
            raise ConfigError(f"cycle models need n >= 3, got {self.n}")
        if self.w is not None and self.family not in ('complete', 'cycle', 'symmetric', 'lamp'):
            raise ConfigError(f"A common weight w does not apply to {self.family} models")
        if self.family == 'grid' and round(np.sqrt(self.n)) ** 2 != self.n:
            raise ConfigError(f"grid models need a square number of variables, got {self.n}")
        if self.p is not None and not 0 <= self.p <= 1:
            raise ConfigError(f"Edge probability must be in [0, 1], got {self.p}")
        if self.family == 'regular' and (self.n * self.degree) % 2:
            raise ConfigError(f"n * degree must be even, got {self.n} * {self.degree}")
        if self.family == 'symmetric':
            if self.topology not in ('cycle', 'complete'):
                raise ConfigError(f"Unknown symmetric topology {self.topology}")
            if self.w is None:
                raise ConfigError("symmetric models need a weight w")

    def describe(self):
        '''One line of ``key=value`` pairs for CSV headers
        '''
        def fmt(v):
            return ','.join(str(x) for x in v) if isinstance(v, tuple) else str(v)
        return ' '.join(f'{k}={fmt(v)}' for k, v in asdict(self).items() if v is not None)


def preset(name):
    '''Named parameter range from the experiment configuration

    >>> preset('attractive')
    (0.0, 6.0)
    '''
    ranges = load_experiments()['ranges']
    if name not in ranges:
        raise ConfigError(f"Unknown range preset {name}, expected one of {sorted(ranges)}")
    return tuple(float(x) for x in ranges[name])


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAM_VERSION,) + key))


def _structure_seed(seed):
    return int(np.random.SeedSequence(seed, spawn_key=(STREAM_VERSION, 2)).generate_state(1)[0])


def _graph(spec):
    seed = _structure_seed(spec.seed)
    if spec.family == 'grid':
        side = int(round(np.sqrt(spec.n)))
        g = nx.grid_2d_graph(side, side, periodic=spec.toroidal)
        return nx.convert_node_labels_to_integers(g, ordering='sorted')
    if spec.family == 'erdos':
        p = spec.p if spec.p is not None else min(1.0, 4.0 / max(spec.n - 1, 1))
        return nx.gnp_random_graph(spec.n, p, seed=seed)
    if spec.family == 'regular':
        for attempt in range(_REGULAR_ATTEMPTS):
            g = nx.random_regular_graph(spec.degree, spec.n, seed=seed + attempt)
            if nx.is_connected(g):
                return g
            log.debug("regular graph attempt %d disconnected", attempt)
        raise GenerationError(f"No connected {spec.degree}-regular graph on {spec.n} vertices "
                              f"after {_REGULAR_ATTEMPTS} attempts")
    if spec.family == 'cycle' or (spec.family == 'symmetric' and spec.topology == 'cycle'):
        return nx.cycle_graph(spec.n)
    return nx.complete_graph(spec.n)


def _weights(spec, edges):
    lo, hi = spec.w_range
    out = {}
    for i, j in edges:
        i, j = min(i, j), max(i, j)
        out[(i, j)] = float(_stream(spec.seed, 1, i, j).uniform(lo, hi))
    return out


def generate(spec):
    '''Build the binary model described by ``spec``, deterministic in ``spec.seed``
    '''
    if spec.family == 'lamp':
        return lamp_model(2.0 if spec.w is None else spec.w)
    if spec.family == 'barbell':
        return barbell_model()
    if spec.family == 'symmetric':
        return symmetric_model(spec.n, spec.w, spec.topology)
    if spec.w is not None:
        return symmetric_model(spec.n, spec.w, spec.family)
    edges = sorted((min(e), max(e)) for e in _graph(spec).edges)
    lo, hi = spec.theta_range
    theta = [float(_stream(spec.seed, 0, i).uniform(lo, hi)) for i in range(spec.n)]
    return from_binary(theta, _weights(spec, edges))


def symmetric_model(n, w, topology='complete'):
    '''``theta = 0`` and every edge of ``C_n`` or ``K_n`` weighted ``w``
    '''
    g = nx.cycle_graph(n) if topology == 'cycle' else nx.complete_graph(n)
    return from_binary([0.0] * n, {(min(e), max(e)): float(w) for e in g.edges})


def lamp_model(w=2.0):
    '''Ten variables: a 4-clique, a path out of it and a star at its end
    '''
    return from_binary([0.0] * 10, {e: float(w) for e in LAMP_EDGES})


def barbell_model():
    '''Eight variables: an attractive 5-clique, a bridge and a frustrated triangle
    '''
    return from_binary([0.0] * 8, BARBELL_WEIGHTS)
