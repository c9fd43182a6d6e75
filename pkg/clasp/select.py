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
Choosing the variable to clamp

Every heuristic assigns a score to each variable of a binary model and the
highest score wins, ties going to the lowest index. Scores are computed on
the 2-core of the graph (what is left after repeatedly removing leaves)
because clamping a variable that lies on no cycle cannot help Bethe or TRW.

========================  ====================================================
``maxW``                  sum of ``|W_ij|`` over neighbours, on the core
``maxW0``                 the same on the whole graph
``Mpower``                closed walks through the variable that are not
                          pure back-and-forth excursions
``frustCycles``           strength of frustrated fundamental cycles
``strongCycles``          strength of all fundamental cycles
``TRE-<name>``            score above times the entropy of the TRW marginal
========================  ====================================================
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .exception import ExhaustionError, InputError, UnsupportedError
from .model import delete_variables
from .result import InferenceResult

log = logging.getLogger('clasp_debug')

HEURISTICS = ('maxW', 'maxW0', 'Mpower', 'frustCycles', 'strongCycles')
TRE_PREFIX = 'TRE-'


@dataclass(frozen=True, eq=False)
class SelectionScore:
    """Per-variable scores of one heuristic

    Attributes:
        heuristic: name of the heuristic
        scores: one value per model variable, ``-inf`` outside the core
        core_map: model indices of the variables that were scored
        fallback: the heuristic could not discriminate and the scores come
            from the unstripped graph or are all zero
    """
    heuristic: str
    scores: np.ndarray
    core_map: Tuple[int, ...] = ()
    fallback: bool = False

    def best(self):
        '''Index of the largest score, lowest index on ties
        '''
        return int(np.argmax(self.scores))


def _require_binary(model):
    if not model.is_binary:
        raise UnsupportedError("Clamp selection heuristics need a binary model")


def strip_to_core(graph):
    '''Remove degree-1 vertices until none remain

    >>> core, index = strip_to_core(nx.path_graph(4))
    >>> index
    ()

    Returns:
        ``(core subgraph, sorted original vertices of the core)``
    '''
    core = nx.k_core(graph, 2)
    return core, tuple(sorted(core.nodes))


def _core(model, strip):
    '''Scoring domain: the core or, when it is empty or not wanted, everything
    '''
    everything = tuple(range(model.n))
    if not strip:
        return everything, False
    _, index = strip_to_core(model.graph())
    if not index:
        return everything, True
    return index, False


def _spread(model, index, values):
    scores = np.full(model.n, -np.inf)
    scores[list(index)] = values
    return scores


def _core_weights(model, index):
    '''Dense ``W`` matrix restricted to ``index``
    '''
    view, _ = model.binary_view()
    return view.matrix()[np.ix_(index, index)]


def score_maxw(model, strip=True):
    '''``s(i) = sum_j |W_ij|``

    When stripping leaves nothing (the graph is a forest) the scores of the
    whole graph are used and ``fallback`` is set.
    '''
    _require_binary(model)
    index, fallback = _core(model, strip)
    w = _core_weights(model, index)
    return SelectionScore('maxW' if strip else 'maxW0',
                          _spread(model, index, np.abs(w).sum(axis=1)), index, fallback)


def mpower_matrix(w):
    '''``M_ij = tanh|W_ij / 4| / (n - 1)``, zero diagonal
    '''
    n = len(w)
    return np.tanh(np.abs(w) / 4) / max(n - 1, 1)


def score_mpower(model):
    '''``[(I - M)^-1 - I]_ii - s_i / (1 - s_i)`` with ``s_i = [M^2]_ii``

    The first term sums every closed walk from ``i`` weighted by products of
    ``M``; the correction removes walks that only step out to a neighbour and
    straight back, repeatedly. Rows of ``M`` sum to less than one so the
    series converges.
    '''
    _require_binary(model)
    index, fallback = _core(model, True)
    if len(index) < 2:
        return SelectionScore('Mpower', _spread(model, index, 0.0), index, True)
    m = mpower_matrix(_core_weights(model, index))
    eye = np.eye(len(index))
    walks = np.diag(np.linalg.inv(eye - m)) - 1
    backtrack = np.diag(m @ m)
    return SelectionScore('Mpower', _spread(model, index, walks - backtrack / (1 - backtrack)),
                          index, fallback)


def max_spanning_tree(n, edges, weights):
    '''Kruskal, heaviest first, ties broken by edge position

    Returns:
        positions in ``edges`` of the tree edges
    '''
    order = sorted(range(len(edges)), key=lambda k: (-weights[k], k))
    forest = nx.utils.UnionFind(range(n))
    tree = []
    for k in order:
        i, j = edges[k]
        if forest[i] != forest[j]:
            forest.union(i, j)
            tree.append(k)
    return tree


def cycle_score(weights):
    '''``log(1 + prod tanh(W / 4))`` over the edges of a cycle, signs kept

    >>> round(cycle_score([4.0, 4.0, -4.0]), 6)
    -0.582938
    '''
    prod = np.prod(np.tanh(np.asarray(weights, dtype=float) / 4))
    # finite when tanh saturates
    return float(np.log1p(np.clip(prod, -1 + 1e-15, 1)))


def score_cycles(model, mode='frustrated'):
    '''Accumulate fundamental cycle scores onto the vertices of each cycle

    A maximum spanning tree on ``tanh|W/4|`` is built over the core; every
    edge left out of it closes one cycle. ``frustrated`` mode only counts
    cycles with a negative score (an odd number of repulsive edges),
    ``strong`` mode counts them all. Final scores are absolute values.
    '''
    if mode not in ('frustrated', 'strong'):
        raise InputError(f"Unknown cycle mode: {mode}")
    _require_binary(model)
    name = 'frustCycles' if mode == 'frustrated' else 'strongCycles'
    index, _ = _core(model, True)
    view, _ = model.binary_view()
    where = {v: k for k, v in enumerate(index)}
    edges, weights = [], []
    for (i, j), w in zip(view.edges, view.w):
        if i in where and j in where:
            edges.append((where[i], where[j]))
            weights.append(float(w))
    weights = np.array(weights)
    tree_pos = set(max_spanning_tree(len(index), edges, np.tanh(np.abs(weights) / 4)))
    tree = nx.Graph()
    tree.add_nodes_from(range(len(index)))
    tree.add_edges_from(edges[k] for k in tree_pos)
    signed = {}
    for (a, b), w in zip(edges, weights):
        signed[(a, b)] = signed[(b, a)] = w

    acc = np.zeros(len(index))
    for k, (a, b) in enumerate(edges):
        if k in tree_pos:
            continue
        path = nx.shortest_path(tree, a, b)
        score = cycle_score([signed[(u, v)] for u, v in zip(path, path[1:])] + [weights[k]])
        if mode == 'strong' or score < 0:
            acc[path] += score
    acc = np.abs(acc)
    return SelectionScore(name, _spread(model, index, acc), index, not np.any(acc > 0))


def tre_adjust(scores, model, trw):
    '''Multiply every score by the entropy of the variable's TRW marginal

    Args:
        trw: TRW :class:`~clasp.result.InferenceResult` for ``model`` or a
            mapping ``variable name -> entropy`` (e.g. averaged over branches)

    Raises:
        InputError: an entropy is missing
    '''
    entropies = trw.singleton_entropies(model) if isinstance(trw, InferenceResult) else trw
    if entropies is None:
        raise InputError("TRE heuristics need TRW marginals")
    try:
        h = np.array([entropies[name] for name in model.var_names], dtype=float)
    except KeyError as e:
        raise InputError(f"No TRW entropy for variable {e.args[0]}")
    out = np.where(np.isneginf(scores.scores), -np.inf, scores.scores * h)
    return SelectionScore(TRE_PREFIX + scores.heuristic, out, scores.core_map, scores.fallback)


_SCORERS = {
    'maxW': lambda m: score_maxw(m, strip=True),
    'maxW0': lambda m: score_maxw(m, strip=False),
    'Mpower': score_mpower,
    'frustCycles': lambda m: score_cycles(m, 'frustrated'),
    'strongCycles': lambda m: score_cycles(m, 'strong'),
}


def parse_heuristic(name):
    '''``(base heuristic, uses TRW entropies)``

    Raises:
        InputError: unknown name
    '''
    tre = name.startswith(TRE_PREFIX)
    base = name[len(TRE_PREFIX):] if tre else name
    if base not in _SCORERS:
        raise InputError(f"Unknown heuristic: {name}")
    return base, tre


def score(model, heuristic, entropies=None):
    '''Scores of ``heuristic`` on ``model``

    A cycle heuristic that finds no cycle to score falls back to ``maxW0``.
    '''
    base, tre = parse_heuristic(heuristic)
    result = _SCORERS[base](model)
    if result.fallback and base in ('frustCycles', 'strongCycles'):
        log.debug("%s found no cycles, scoring with maxW0", heuristic)
        result = SelectionScore(base, score_maxw(model, strip=False).scores,
                                tuple(range(model.n)), True)
    if tre:
        result = tre_adjust(result, model, entropies)
    return result


@dataclass(frozen=True)
class SelectionContext:
    """What the selector may look at

    Attributes:
        exclude: names of variables already clamped
        entropies: ``variable name -> TRW marginal entropy`` for ``TRE-`` heuristics
    """
    exclude: frozenset = field(default_factory=frozenset)
    entropies: Optional[dict] = None


class Selection(NamedTuple):
    var: int
    name: object
    heuristic: str
    fallback: bool


def pick(model, heuristic, context=None):
    '''Choose a variable of ``model`` with ``heuristic``

    Already clamped variables are deleted from the graph before scoring.

    Returns:
        :class:`Selection` with the index in ``model``

    Raises:
        ExhaustionError: no variable left to choose
    '''
    context = context or SelectionContext()
    work = delete_variables(model, context.exclude)
    if work.n == 0:
        raise ExhaustionError("Every variable is already clamped")
    result = score(work, heuristic, context.entropies)
    k = result.best()
    name = work.var_names[k]
    return Selection(model.index_of(name), name, heuristic, result.fallback)


def select_variable(model, heuristic, context=None):
    '''Index in ``model`` of the variable ``heuristic`` would clamp
    '''
    return pick(model, heuristic, context).var


def score_frame(model, heuristics, trw=None):
    '''Scores of several heuristics as a long table ``heuristic, var, score``
    '''
    entropies = trw.singleton_entropies(model) if isinstance(trw, InferenceResult) else trw
    rows = []
    for h in heuristics:
        result = score(model, h, entropies)
        rows.extend((h, name, float(s)) for name, s in zip(model.var_names, result.scores))
    return pd.DataFrame(rows, columns=['heuristic', 'var', 'score'])


def agreement(picks, reference='pseudo-greedy'):
    '''How often each heuristic picks the same variable as ``reference``

    Args:
        picks: frame with columns ``run, round, heuristic, var``

    Returns:
        frame ``heuristic, round, agreement`` with the fraction of runs agreeing
    '''
    ref = picks[picks['heuristic'] == reference][['run', 'round', 'var']]
    ref = ref.rename(columns={'var': 'reference'})
    merged = picks[picks['heuristic'] != reference].merge(ref, on=['run', 'round'])
    merged['agree'] = (merged['var'] == merged['reference']).astype(float)
    out = merged.groupby(['heuristic', 'round'], sort=True)['agree'].mean()
    return out.reset_index().rename(columns={'agree': 'agreement'})
