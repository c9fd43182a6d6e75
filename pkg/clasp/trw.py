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
Tree-reweighted upper bound

The TRW entropy ``sum_i H(mu_i) - sum_(i,j) rho_ij I_ij`` is a convex
combination of spanning-tree entropies, with ``rho_ij`` the probability that
edge ``(i, j)`` appears in a tree drawn from the chosen distribution over
spanning trees. Here that distribution is the uniform one, so ``rho`` is
either computed exactly from effective resistances or estimated by sampling
trees with Wilson's algorithm.

``rho`` is keyed by pairs of variable names so that the weights of a parent
model carry over unchanged to its clamped children.
"""

import logging
import time
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .bethe import BpConfig, MessagePassing, _average_energy, _entropy_terms, needs_logdomain
from .config import load_defaults
from .exception import InputError
from .result import InferenceResult

log = logging.getLogger('clasp_debug')

SOURCES = ('sampled', 'exact', 'uniform', 'restricted')


@dataclass(frozen=True)
class EdgeAppearance:
    """Edge appearance probabilities

    Attributes:
        rho: mapping ``(name_i, name_j) -> rho_ij`` in the model's edge orientation
        source: how the weights were obtained
        ntrees: trees drawn when ``source == 'sampled'``
        seed: sampling seed when ``source == 'sampled'``
    """
    rho: dict
    source: str
    ntrees: int = 0
    seed: int = 0

    def vector(self, model):
        '''``rho`` in the order of ``model.edges``

        Raises:
            InputError: an edge of the model has no weight or a weight outside ``(0, 1]``
        '''
        names = model.var_names
        out = np.empty(len(model.edges))
        for k, (i, j) in enumerate(model.edges):
            key = (names[i], names[j])
            value = self.rho.get(key, self.rho.get(key[::-1]))
            if value is None:
                raise InputError(f"No edge appearance probability for edge {key}")
            if not 0 < value <= 1 + 1e-12:
                raise InputError(f"Edge appearance probability {value} for {key} is outside (0, 1]")
            out[k] = min(value, 1.0)
        return out

    def total(self):
        return float(sum(self.rho.values()))


def _named(model, values, source, **kwargs):
    names = model.var_names
    return EdgeAppearance({(names[i], names[j]): float(v) for (i, j), v in zip(model.edges, values)},
                          source, **kwargs)


def _graph(model):
    g = nx.Graph()
    g.add_nodes_from(range(model.n))
    g.add_edges_from(model.edges)
    return g


def exact_tree_weights(model):
    '''Uniform spanning tree edge probabilities from effective resistances

    For an edge of a connected graph the probability of appearing in a
    uniform spanning tree equals its effective resistance
    ``(e_i - e_j)^T L^+ (e_i - e_j)``. Disconnected graphs are handled one
    component at a time, so the weights sum to ``n - #components``.
    '''
    g = _graph(model)
    rho = np.ones(len(model.edges))
    for comp in nx.connected_components(g):
        if len(comp) < 3:
            continue
        nodes = sorted(comp)
        where = {v: k for k, v in enumerate(nodes)}
        lap = nx.laplacian_matrix(g, nodelist=nodes).toarray().astype(float)
        # grounding the first vertex makes the Laplacian invertible
        inv = np.zeros_like(lap)
        inv[1:, 1:] = np.linalg.inv(lap[1:, 1:])
        for k, (i, j) in enumerate(model.edges):
            if i in where and j in where:
                a, b = where[i], where[j]
                rho[k] = inv[a, a] + inv[b, b] - 2 * inv[a, b]
    return _named(model, np.clip(rho, 1e-12, 1.0), 'exact')


def _wilson(adj, nodes, rng):
    '''Edges of one uniform spanning tree of a connected component
    '''
    in_tree = {nodes[0]}
    nxt = {}
    tree = []
    for start in nodes[1:]:
        u = start
        while u not in in_tree:
            nbrs = adj[u]
            nxt[u] = nbrs[rng.integers(len(nbrs))]
            u = nxt[u]
        u = start
        while u not in in_tree:
            in_tree.add(u)
            tree.append((min(u, nxt[u]), max(u, nxt[u])))
            u = nxt[u]
    return tree


def sample_tree_weights(model, ntrees=1000, seed=0):
    '''Estimate ``rho`` as edge frequencies over ``ntrees`` uniform spanning trees

    Trees are drawn with Wilson's loop-erased random walk, per component.
    Edges never drawn get ``1 / (2 ntrees)`` to stay positive.
    '''
    if ntrees < 1:
        raise InputError(f"ntrees must be at least 1, got {ntrees}")
    g = _graph(model)
    adj = {v: sorted(g.neighbors(v)) for v in g.nodes}
    components = [sorted(c) for c in nx.connected_components(g) if len(c) > 1]
    rng = np.random.default_rng(seed)
    counts = dict.fromkeys(model.edges, 0)
    for _ in range(ntrees):
        for nodes in components:
            for e in _wilson(adj, nodes, rng):
                counts[e] += 1
    freq = np.array([counts[e] / ntrees for e in model.edges])
    freq = np.maximum(freq, 1.0 / (2 * ntrees))
    return _named(model, freq, 'sampled', ntrees=ntrees, seed=seed)


def uniform_tree_weights(model):
    '''``rho_ij = (n_c - 1) / |E_c|`` within each component

    Cheap stand-in that keeps the right total but ignores the graph shape.
    '''
    g = _graph(model)
    rho = np.ones(len(model.edges))
    for comp in nx.connected_components(g):
        sub = g.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        value = (len(comp) - 1) / sub.number_of_edges()
        for k, (i, j) in enumerate(model.edges):
            if i in comp:
                rho[k] = value
    return _named(model, rho, 'uniform')


def default_tree_weights(model, seed=0):
    '''Exact weights for small models, sampled ones above the configured size
    '''
    cfg = load_defaults('tree_weights')
    if model.n <= cfg['exact_max_n']:
        return exact_tree_weights(model)
    return sample_tree_weights(model, cfg['ntrees'], seed)


def restrict_weights(rho, child, recompute=False, seed=0):
    '''Edge weights for a clamped child

    By default the parent's weights on the surviving edges are reused as they
    are; the child is then bounded with a tree distribution that is no longer
    uniform over its own spanning trees, which keeps the bound valid. With
    ``recompute`` the weights are rebuilt for the child graph.
    '''
    if recompute:
        return default_tree_weights(child, seed)
    return _named(child, rho.vector(child), 'restricted', ntrees=rho.ntrees, seed=rho.seed)


def _rho_vector(model, rho):
    if isinstance(rho, EdgeAppearance):
        return rho.vector(model)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (len(model.edges),) or np.any(rho <= 0) or np.any(rho > 1 + 1e-12):
        raise InputError("rho needs one value in (0, 1] per edge")
    return rho


def trw_free_energy(model, mu, rho):
    '''TRW free energy ``theta . mu + sum_i H(mu_i) - sum_(i,j) rho_ij I_ij``

    Raises:
        InputError: polytope violation beyond ``1e-6`` or invalid ``rho``
    '''
    mu.validate(model)
    weights = _rho_vector(model, rho)
    singles, info = _entropy_terms(model, mu)
    return _average_energy(model, mu) + sum(singles) - float(np.dot(weights, info))


def trw_optimize(model, rho=None, cfg=None, warm=None):
    '''Damped tree-reweighted message passing

    The TRW objective is concave over the local polytope so the converged
    value is its global maximum and an upper bound on ``A(theta)``.

    Args:
        rho: :class:`EdgeAppearance`; built with :func:`default_tree_weights` when ``None``
        cfg: :class:`~clasp.bethe.BpConfig`, defaults from the ``trw`` section
        warm: named messages from a parent run, used for the first restart
    '''
    cfg = cfg or BpConfig.from_defaults('trw')
    start = time.perf_counter()
    if rho is None:
        rho = default_tree_weights(model, cfg.seed)
    weights = _rho_vector(model, rho)
    rng = np.random.default_rng(cfg.seed)
    best = None
    for restart in range(cfg.restarts):
        engine = MessagePassing(model, weights, logdomain=needs_logdomain(model, cfg, weights))
        if restart == 0:
            engine.init(cfg.init, rng, warm)
        else:
            engine.init('random', rng)
        converged, iters = engine.run(cfg, rng)
        if not converged:
            log.warning("TRW restart %d did not converge in %d iterations", restart, iters)
        mu = engine.beliefs()
        value = trw_free_energy(model, mu, weights)
        key = (converged, value)
        if best is None or key > best[0]:
            best = (key, mu, iters, engine.named_messages())
    (converged, value), mu, iters, messages = best
    return InferenceResult(log_z=value, marginals=mu, method='TRW', bound='upper',
                           converged=converged, iters=iters,
                           wall_time=time.perf_counter() - start, rho=rho, messages=messages)
