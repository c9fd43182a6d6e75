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
Exact log-partition functions

* :func:`brute_logz` enumerates every configuration (the oracle).
* :func:`eliminate_logz` runs variable elimination in the log domain along a
  min-fill order, which handles 9x9 toroidal binary grids.
* :func:`exact_marginal` obtains ``p(x_i)`` from clamped sub-partition
  functions.

All sums are max-shifted log-sum-exps.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from .config import load_defaults
from .exception import CapacityError, InputError
from .model import clamp

log = logging.getLogger('clasp_debug')

_LIMITS = load_defaults('exact')


def _state_count(model):
    return int(np.prod([float(l) for l in model.labels])) if model.n else 1


def log_potential_table(model):
    '''Dense array of ``-E(x)`` with one axis per variable
    '''
    table = np.zeros(model.labels)
    for i, t in enumerate(model.theta):
        shape = [1] * model.n
        shape[i] = model.labels[i]
        table = table + t.reshape(shape)
    for (i, j), t in zip(model.edges, model.pairwise):
        shape = [1] * model.n
        shape[i], shape[j] = model.labels[i], model.labels[j]
        table = table + t.reshape(shape)
    return table


def brute_logz(model):
    '''Log-partition function by enumeration

    Tables above ``brute_dense_states`` entries are split by clamping the first
    variable, so memory stays bounded.

    >>> from clasp.model import from_binary
    >>> round(float(brute_logz(from_binary([0.0], {}))), 12) == round(float(np.log(2)), 12)
    True

    Raises:
        CapacityError: more than ``2**25`` configurations
    '''
    states = _state_count(model)
    if states > _LIMITS['brute_max_states']:
        raise CapacityError(f"State space of {states} configurations exceeds the brute force limit "
                            f"of {_LIMITS['brute_max_states']}")
    return _brute(model)


def _brute(model):
    if model.n == 0:
        return 0.0
    if _state_count(model) <= _LIMITS['brute_dense_states']:
        return float(logsumexp(log_potential_table(model)))
    parts = []
    for label in range(model.labels[0]):
        child, cmap = clamp(model, 0, label)
        parts.append(_brute(child) + cmap.log_constant)
    return float(logsumexp(parts))


@dataclass(frozen=True)
class EliminationOrder:
    order: Tuple[int, ...]
    induced_width: int


def _adjacency(model):
    adj = {i: set(model.neighbors(i)) for i in range(model.n)}
    return adj


def _eliminate_vertex(adj, v):
    nbrs = adj.pop(v)
    for a in nbrs:
        adj[a].discard(v)
        adj[a].update(nbrs - {a})
    return len(nbrs)


def min_fill_order(model):
    '''Greedy min-fill elimination order, ties broken by lowest index
    '''
    adj = _adjacency(model)
    order = []
    width = 0
    while adj:
        best, best_fill = None, None
        for v in sorted(adj):
            nbrs = sorted(adj[v])
            fill = sum(1 for x in range(len(nbrs)) for y in range(x + 1, len(nbrs))
                       if nbrs[y] not in adj[nbrs[x]])
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
                if fill == 0:
                    break
        width = max(width, _eliminate_vertex(adj, best))
        order.append(best)
    return EliminationOrder(order=tuple(order), induced_width=width)


def induced_width(model, order):
    '''Width of ``order`` on the interaction graph of ``model``
    '''
    if sorted(order) != list(range(model.n)):
        raise InputError("Elimination order must be a permutation of the variables")
    adj = _adjacency(model)
    return max([_eliminate_vertex(adj, v) for v in order], default=0)


def _expand(scope, table, union, labels):
    '''Broadcast ``table`` over ``scope`` to the axes of ``union``
    '''
    perm = sorted(range(len(scope)), key=lambda a: union.index(scope[a]))
    table = np.transpose(table, perm)
    shape = [labels[v] if v in scope else 1 for v in union]
    return table.reshape(shape)


def eliminate_logz(model, order=None):
    '''Log-partition function by variable elimination

    Args:
        order: :class:`EliminationOrder`, default from :func:`min_fill_order`

    Raises:
        CapacityError: when an intermediate table would exceed the size limit
    '''
    if model.n == 0:
        return 0.0
    if order is None:
        order = min_fill_order(model)
    width = induced_width(model, list(order.order))
    if max(model.labels) ** (width + 1) > _LIMITS['elimination_max_table']:
        raise CapacityError(f"Induced width {width} is too large for exact elimination")

    factors = [((i,), t) for i, t in enumerate(model.theta)]
    factors += [((i, j), t) for (i, j), t in zip(model.edges, model.pairwise)]
    const = 0.0
    for v in order.order:
        touching = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        union = sorted(set(x for scope, _ in touching for x in scope))
        total = 0.0
        for scope, table in touching:
            total = total + _expand(scope, table, union, model.labels)
        reduced = logsumexp(total, axis=union.index(v))
        rest = tuple(x for x in union if x != v)
        if rest:
            factors.append((rest, reduced))
        else:
            const += float(reduced)
    log.debug("eliminated %d variables, width %d", model.n, width)
    return const


def exact_logz(model):
    '''Brute force for small state spaces, elimination otherwise
    '''
    if _state_count(model) <= _LIMITS['dispatch_brute_states']:
        return brute_logz(model)
    return eliminate_logz(model)


def exact_marginal(model, var):
    '''``p(X_var = x)`` from the clamped sub-partition functions
    '''
    parts = []
    for label in range(model.labels[var]):
        child, cmap = clamp(model, var, label)
        parts.append(exact_logz(child) + cmap.log_constant)
    return softmax(np.array(parts))


def exact_marginals(model):
    '''Singleton marginals of every variable
    '''
    return [exact_marginal(model, i) for i in range(model.n)]
