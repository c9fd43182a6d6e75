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
Discrete pairwise Markov random fields

A :class:`PairwiseModel` stores log-potential tables for every variable and
every edge. The energy of a full configuration ``x`` is

    E(x) = - sum_i theta_i(x_i) - sum_(i,j) theta_ij(x_i, x_j)

so that ``p(x)`` is proportional to ``exp(-E(x))``. Edges are stored in
canonical orientation ``i < j``; :meth:`PairwiseModel.edge_table` transposes
on demand.

Binary models can also be read through a :class:`BinaryView`, the ``(theta,
W)`` parameterisation

    E(x) = - sum_i theta_i x_i - sum_(i,j) W_ij/2 [x_i x_j + (1-x_i)(1-x_j)]

in which an edge is attractive when ``W_ij >= 0``.

* :func:`clamp` fixes one variable and returns the sub-model whose partition
  function is the restricted sum, together with a :class:`ClampMap`.
* :func:`flip` relabels binary variables without changing the partition
  function.
* :func:`balance_certificate` finds a flip set making a model attractive, or a
  frustrated cycle proving none exists.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Tuple

import networkx as nx
import numpy as np

from .exception import InputError, UnsupportedError


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class PairwiseModel(object):
    """Immutable pairwise MRF

    Args:
        labels: label count per variable, each >= 2
        theta: per-variable log-potential tables (length ``labels[i]``)
        pairwise: mapping ``(i, j) -> table`` of shape ``(labels[i], labels[j])``
        var_names: stable identifiers, default ``0..n-1``; they survive
            :func:`clamp`, :func:`flip` and :func:`delete_variables`
    """

    def __init__(self, labels, theta, pairwise=None, var_names=None):
        labels = tuple(int(l) for l in labels)
        n = len(labels)
        if any(l < 2 for l in labels):
            raise InputError(f"Every variable needs at least 2 labels, got {labels}")
        if len(theta) != n:
            raise InputError(f"Expected {n} singleton tables, got {len(theta)}")
        thetas = []
        for i, t in enumerate(theta):
            t = _frozen(t)
            if t.shape != (labels[i],):
                raise InputError(f"Singleton table of variable {i} has shape {t.shape}, "
                                 f"expected ({labels[i]},)")
            thetas.append(t)

        tables = {}
        for (i, j), t in (pairwise or {}).items():
            i, j = int(i), int(j)
            if i == j:
                raise InputError(f"Self-loop on variable {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"Edge ({i}, {j}) references a missing variable")
            t = np.array(t, dtype=float)
            if i > j:
                i, j, t = j, i, t.T
            if (i, j) in tables:
                raise InputError(f"Duplicate edge ({i}, {j})")
            if t.shape != (labels[i], labels[j]):
                raise InputError(f"Pairwise table of edge ({i}, {j}) has shape {t.shape}, "
                                 f"expected {(labels[i], labels[j])}")
            tables[(i, j)] = _frozen(t)

        if var_names is None:
            var_names = tuple(range(n))
        var_names = tuple(var_names)
        if len(var_names) != n or len(set(var_names)) != n:
            raise InputError("var_names must be unique, one per variable")

        for t in thetas + list(tables.values()):
            if not np.all(np.isfinite(t)):
                raise InputError("Potential tables must be finite")

        self.labels = labels
        self.theta = tuple(thetas)
        self.edges = tuple(sorted(tables))
        self.pairwise = tuple(tables[e] for e in self.edges)
        self.var_names = var_names
        self._index = {e: k for k, e in enumerate(self.edges)}
        self._nbrs = tuple([] for _ in range(n))
        for k, (i, j) in enumerate(self.edges):
            self._nbrs[i].append((j, k))
            self._nbrs[j].append((i, k))

    @property
    def n(self):
        return len(self.labels)

    @property
    def is_binary(self):
        return all(l == 2 for l in self.labels)

    def neighbors(self, i):
        '''Neighbours of ``i`` in ascending order
        '''
        return [j for j, _ in self._nbrs[i]]

    def incident(self, i):
        '''``(neighbour, edge index)`` pairs of variable ``i``
        '''
        return list(self._nbrs[i])

    def degree(self, i):
        return len(self._nbrs[i])

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self._index

    def edge_index(self, i, j):
        try:
            return self._index[(min(i, j), max(i, j))]
        except KeyError:
            raise InputError(f"No edge ({i}, {j})")

    def edge_table(self, i, j):
        '''Pairwise table oriented as ``(labels[i], labels[j])``
        '''
        t = self.pairwise[self.edge_index(i, j)]
        return t if i < j else t.T

    def index_of(self, name):
        try:
            return self.var_names.index(name)
        except ValueError:
            raise InputError(f"No variable named {name!r}")

    def graph(self):
        '''The interaction graph as :class:`networkx.Graph` on indices ``0..n-1``
        '''
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def binary_view(self):
        '''Return ``(BinaryView, constant)`` with ``A(model) = A(view) + constant``

        Raises:
            UnsupportedError: if any variable has more than two labels
        '''
        if not self.is_binary:
            raise UnsupportedError("Binary view requires every variable to have 2 labels")
        theta = np.array([t[1] - t[0] for t in self.theta])
        const = float(sum(t[0] for t in self.theta))
        w = np.zeros(len(self.edges))
        for k, ((i, j), t) in enumerate(zip(self.edges, self.pairwise)):
            w[k] = t[0, 0] + t[1, 1] - t[0, 1] - t[1, 0]
            c = t[0, 0] - w[k] / 2
            theta[i] += t[1, 0] - c
            theta[j] += t[0, 1] - c
            const += c
        return BinaryView(theta=_frozen(theta), edges=self.edges, w=_frozen(w)), const

    def __eq__(self, other):
        if not isinstance(other, PairwiseModel):
            return NotImplemented
        return (self.labels == other.labels and self.edges == other.edges
                and self.var_names == other.var_names
                and all(np.array_equal(a, b) for a, b in zip(self.theta, other.theta))
                and all(np.array_equal(a, b) for a, b in zip(self.pairwise, other.pairwise)))

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def __repr__(self):
        return f"PairwiseModel(n={self.n}, edges={len(self.edges)}, labels={set(self.labels)})"


@dataclass(frozen=True, eq=False)
class BinaryView:
    """``(theta, W)`` parameterisation of a binary model

    ``w[k]`` is the weight of ``edges[k]``.
    """
    theta: np.ndarray
    edges: Tuple[Tuple[int, int], ...]
    w: np.ndarray

    def weight(self, i, j):
        return float(self.w[self.edges.index((min(i, j), max(i, j)))])

    def matrix(self):
        '''Dense symmetric ``W`` matrix, zero where there is no edge
        '''
        n = len(self.theta)
        m = np.zeros((n, n))
        for (i, j), w in zip(self.edges, self.w):
            m[i, j] = m[j, i] = w
        return m

    def as_dict(self):
        return {e: float(w) for e, w in zip(self.edges, self.w)}


@dataclass(frozen=True)
class ClampMap:
    """Record of the clamps applied to reach a sub-model

    ``assignments`` are ``(variable name, label)`` pairs in the order applied,
    ``index_map[k]`` is the index in the parent model of surviving variable
    ``k``, and ``log_constant`` is the log-potential carried out of the model
    so that ``A(parent restricted) = A(child) + log_constant``.
    """
    assignments: Tuple[Tuple[object, int], ...] = ()
    index_map: Tuple[int, ...] = ()
    log_constant: float = 0.0

    def then(self, other):
        '''Compose with a clamp applied to the child model
        '''
        return ClampMap(assignments=self.assignments + other.assignments,
                        index_map=tuple(self.index_map[k] for k in other.index_map),
                        log_constant=self.log_constant + other.log_constant)


def from_binary(theta, w, var_names=None):
    '''Build a binary model from ``(theta, W)``

    >>> m = from_binary([0.0, 0.0], {(0, 1): 2.0})
    >>> energy(m, (0, 0)), energy(m, (1, 1))
    (-1.0, -1.0)

    Args:
        theta: per-variable scalars
        w: mapping ``(i, j) -> W_ij``
    '''
    n = len(theta)
    singles = [(0.0, float(t)) for t in theta]
    tables = {}
    seen = set()
    for (i, j), wij in w.items():
        key = (min(i, j), max(i, j))
        if key in seen:
            raise InputError(f"Duplicate edge ({i}, {j})")
        seen.add(key)
        half = float(wij) / 2
        tables[(i, j)] = [[half, 0.0], [0.0, half]]
    return PairwiseModel([2] * n, singles, tables, var_names=var_names)


def energy(model, config):
    '''Energy ``E(x)`` of a full assignment

    Raises:
        InputError: wrong length or label out of range
    '''
    config = tuple(int(x) for x in config)
    if len(config) != model.n:
        raise InputError(f"Configuration has {len(config)} entries, model has {model.n} variables")
    for i, x in enumerate(config):
        if not 0 <= x < model.labels[i]:
            raise InputError(f"Label {x} out of range for variable {i}")
    e = -sum(float(t[x]) for t, x in zip(model.theta, config))
    e -= sum(float(t[config[i], config[j]]) for (i, j), t in zip(model.edges, model.pairwise))
    return e


def clamp(model, var, label):
    '''Fix variable ``var`` to ``label``

    Edges to ``var`` are absorbed into the neighbours' singleton tables and
    ``theta_var(label)`` is carried in :attr:`ClampMap.log_constant`.

    >>> m = from_binary([0.0, 0.0], {(0, 1): 2.0})
    >>> child, cmap = clamp(m, 0, 0)
    >>> child.theta[0].tolist(), cmap.log_constant
    ([1.0, 0.0], 0.0)

    Returns:
        ``(child model, ClampMap)``
    '''
    var, label = int(var), int(label)
    if not 0 <= var < model.n:
        raise InputError(f"No variable {var} in a model with {model.n} variables")
    if not 0 <= label < model.labels[var]:
        raise InputError(f"Label {label} out of range for variable {var}")

    keep = [i for i in range(model.n) if i != var]
    new_index = {old: k for k, old in enumerate(keep)}
    theta = [np.array(model.theta[i]) for i in keep]
    tables = {}
    for (i, j), t in zip(model.edges, model.pairwise):
        if i == var:
            theta[new_index[j]] += t[label, :]
        elif j == var:
            theta[new_index[i]] += t[:, label]
        else:
            tables[(new_index[i], new_index[j])] = t
    child = PairwiseModel([model.labels[i] for i in keep], theta, tables,
                          var_names=[model.var_names[i] for i in keep])
    cmap = ClampMap(assignments=((model.var_names[var], label),),
                    index_map=tuple(keep),
                    log_constant=float(model.theta[var][label]))
    return child, cmap


def clamp_many(model, assignments):
    '''Apply a sequence of clamps given as ``(variable name, label)`` pairs
    '''
    cmap = ClampMap(index_map=tuple(range(model.n)))
    for name, label in assignments:
        model, step = clamp(model, model.index_of(name), label)
        cmap = cmap.then(step)
    return model, cmap


def delete_variables(model, names):
    '''Drop variables and their edges without absorbing anything

    Used to look at the graph left once some variables are clamped, when only
    the edge weights matter.
    '''
    drop = set(names)
    keep = [i for i in range(model.n) if model.var_names[i] not in drop]
    new_index = {old: k for k, old in enumerate(keep)}
    tables = {(new_index[i], new_index[j]): t
              for (i, j), t in zip(model.edges, model.pairwise)
              if i in new_index and j in new_index}
    return PairwiseModel([model.labels[i] for i in keep], [model.theta[i] for i in keep],
                         tables, var_names=[model.var_names[i] for i in keep])


def flip(model, subset):
    '''Relabel ``x_i -> 1 - x_i`` for every ``i`` in ``subset``

    Raises:
        UnsupportedError: for non-binary models
    '''
    if not model.is_binary:
        raise UnsupportedError("Only binary models can be flipped")
    subset = set(int(i) for i in subset)
    theta = [t[::-1] if i in subset else t for i, t in enumerate(model.theta)]
    tables = {}
    for (i, j), t in zip(model.edges, model.pairwise):
        if i in subset:
            t = t[::-1, :]
        if j in subset:
            t = t[:, ::-1]
        tables[(i, j)] = t
    return PairwiseModel(model.labels, theta, tables, var_names=model.var_names)


@dataclass(frozen=True)
class Balanced:
    """Flipping ``subset`` makes every retained edge attractive"""
    subset: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class Frustrated:
    """``cycle`` is a closed vertex sequence with an odd number of repulsive edges"""
    cycle: Tuple[int, ...] = ()


def _tree_path(parent, depth, u, v):
    '''Vertices on the BFS-tree path from ``u`` to ``v``
    '''
    left, right = [u], [v]
    while depth[u] > depth[v]:
        u = parent[u]
        left.append(u)
    while depth[v] > depth[u]:
        v = parent[v]
        right.append(v)
    while u != v:
        u, v = parent[u], parent[v]
        left.append(u)
        right.append(v)
    return left + right[-2::-1]


def balance_certificate(model, weight_floor=0.0):
    '''Two-colour the sign graph of a binary model

    Edges with ``|W_ij| <= weight_floor`` are ignored. Runs a breadth first
    search in which crossing a repulsive edge changes colour.

    Returns:
        :class:`Balanced` with the flip set, or :class:`Frustrated` with a
        witness cycle
    '''
    view, _ = model.binary_view()
    adj = [[] for _ in range(model.n)]
    for (i, j), w in zip(view.edges, view.w):
        if abs(w) > weight_floor:
            adj[i].append((j, w < 0))
            adj[j].append((i, w < 0))

    colour = [None] * model.n
    parent = [None] * model.n
    depth = [0] * model.n
    for root in range(model.n):
        if colour[root] is not None:
            continue
        colour[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, repulsive in adj[u]:
                want = colour[u] ^ int(repulsive)
                if colour[v] is None:
                    colour[v] = want
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    queue.append(v)
                elif colour[v] != want:
                    return Frustrated(cycle=tuple(_tree_path(parent, depth, u, v)))
    return Balanced(subset=frozenset(i for i in range(model.n) if colour[i] == 1))


def is_balanced(model, weight_floor=0.0):
    return isinstance(balance_certificate(model, weight_floor), Balanced)


def is_attractive(model):
    view, _ = model.binary_view()
    return bool(np.all(view.w >= 0))
