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
Clamp and sum

Clamping variable ``i`` to each of its labels splits ``Z`` into the
sub-partition functions of the clamped models. Running an approximate method
on every child and summing the estimates gives

    A^(i) = log sum_x exp(A(x; theta))

which for mean field and TRW can only tighten the bound of the unclamped
model. :func:`clamp_sequence` repeats this for several rounds, choosing one
variable per round and clamping it in every live branch.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .bethe import BpConfig, bethe_optimize
from .config import basket as default_basket
from .exact import exact_logz
from .exception import ClaspException, ConfigError, ExhaustionError, InputError
from .meanfield import MfConfig, mf_optimize
from .model import ClampMap, clamp, is_balanced
from .result import METHODS, InferenceResult
from . import select
from .trw import restrict_weights, trw_optimize

__all__ = ['InferenceResult', 'ClampConfig', 'run_method', 'clamp_sum', 'clamp_sequence',
           'ClampReport', 'ClampRound', 'BranchSet', 'greedy_select', 'pseudo_greedy_select',
           'sequence_aggregate', 'direction']

log = logging.getLogger('clasp_debug')

PROXIES = ('trw', 'gap', 'mf')
META_SELECTORS = ('greedy', 'pseudo-greedy', 'first')


@dataclass(frozen=True)
class ClampConfig:
    """Settings of every method plus the clamping framework

    Attributes:
        recompute_rho: rebuild TRW edge weights for every child instead of
            restricting the parent's
        proxy: how Bethe on an unbalanced model ranks candidates, by the
            fall in ``trw``, the fall in the TRW-MF ``gap`` or the rise in ``mf``
        jobs: threads used to evaluate branches
        basket: heuristics tried by the pseudo-greedy selector
    """
    mf: MfConfig = field(default_factory=MfConfig.from_defaults)
    bethe: BpConfig = field(default_factory=BpConfig.from_defaults)
    trw: BpConfig = field(default_factory=lambda: BpConfig.from_defaults('trw'))
    recompute_rho: bool = False
    proxy: str = 'trw'
    jobs: int = 1
    basket: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.proxy not in PROXIES:
            raise ConfigError(f"proxy must be one of {PROXIES}, got {self.proxy}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        for h in self.basket:
            select.parse_heuristic(h)

    @classmethod
    def from_defaults(cls, **overrides):
        values = {'basket': tuple(default_basket())}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def run_method(model, method, cfg=None, warm=None, rho=None):
    '''Run one estimator on ``model``

    Args:
        warm: parent :class:`FactorizedMarginals` for ``MF``, named messages
            for ``Bethe`` and ``TRW``
        rho: edge weights for ``TRW``
    '''
    cfg = cfg or ClampConfig.from_defaults()
    if method == 'MF':
        return mf_optimize(model, cfg.mf, warm=warm)
    if method == 'Bethe':
        return bethe_optimize(model, cfg.bethe, warm=warm)
    if method == 'TRW':
        return trw_optimize(model, rho=rho, cfg=cfg.trw, warm=warm)
    if method == 'Exact':
        start = time.perf_counter()
        value = exact_logz(model)
        return InferenceResult(log_z=value, marginals=None, method='Exact', bound='none',
                               wall_time=time.perf_counter() - start)
    raise InputError(f"Unknown method {method}, expected one of {METHODS}")


def _run_child(child, step, method, parent, cfg):
    '''Estimate a clamped child, warm started from its parent's result
    '''
    warm, rho = None, None
    if parent is not None and method == 'MF':
        warm = parent.marginals.restrict(step.index_map)
    elif parent is not None and method in ('Bethe', 'TRW'):
        warm = parent.messages
    if method == 'TRW' and parent is not None and parent.rho is not None:
        rho = restrict_weights(parent.rho, child, recompute=cfg.recompute_rho, seed=cfg.trw.seed)
    return run_method(child, method, cfg, warm=warm, rho=rho)


def _map(cfg, fn, items):
    items = list(items)
    if cfg.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


class ClampSum(NamedTuple):
    aggregate: float
    p_tilde: np.ndarray
    children: List[InferenceResult]


def clamp_sum(model, method, var, cfg=None, parent=None):
    '''Clamp ``var`` to every label and sum the children's estimates

    Children include the constant carried out by the clamp, so their
    ``log_z`` values are directly comparable with the parent's.

    Args:
        parent: result of ``method`` on ``model``; computed when missing and
            used to warm start the children

    Returns:
        :class:`ClampSum` ``(aggregate, p_tilde, children)``
    '''
    cfg = cfg or ClampConfig.from_defaults()
    if not 0 <= var < model.n:
        raise InputError(f"No variable {var} in a model with {model.n} variables")
    if parent is None and method != 'Exact':
        parent = run_method(model, method, cfg)

    def child(label):
        sub, step = clamp(model, var, label)
        return _run_child(sub, step, method, parent, cfg).shifted(step.log_constant)

    children = _map(cfg, child, range(model.labels[var]))
    values = np.array([c.log_z for c in children])
    aggregate = float(logsumexp(values))
    return ClampSum(aggregate, np.exp(values - aggregate), children)


def direction(method, model, proxy='trw'):
    '''``max`` or ``min`` for the method's bound, ``None`` when it has none

    Bethe on an unbalanced model is ranked through ``proxy``: a TRW or gap
    proxy wants the smallest value, an MF proxy the largest.
    '''
    if method == 'MF':
        return 'max'
    if method == 'TRW':
        return 'min'
    if method == 'Bethe':
        if model.is_binary and is_balanced(model):
            return 'max'
        return 'max' if proxy == 'mf' else 'min'
    return None


def _best(candidates, values, how):
    '''Candidate with the best value, earliest on ties
    '''
    values = np.asarray(values, dtype=float)
    if how is None:
        return 0
    return int(np.argmax(values) if how == 'max' else np.argmin(values))


def greedy_select(model, method, cfg=None):
    '''Try every variable and keep the best aggregate

    Returns:
        ``(var, aggregate)``
    '''
    cfg = cfg or ClampConfig.from_defaults()
    how = direction(method, model, cfg.proxy)
    ranking = _ranking(model, method, cfg)
    candidates = list(range(model.n))
    values = [ranking(v) for v in candidates]
    k = _best(candidates, values, how)
    return candidates[k], clamp_sum(model, method, candidates[k], cfg).aggregate


def _ranking(model, method, cfg):
    '''Function ``var -> value`` used to compare candidates for ``method``
    '''
    needs_proxy = method == 'Bethe' and not (model.is_binary and is_balanced(model))
    if not needs_proxy:
        parent = None if method == 'Exact' else run_method(model, method, cfg)
        return lambda v: clamp_sum(model, method, v, cfg, parent).aggregate
    trw = run_method(model, 'TRW', cfg)
    mf = run_method(model, 'MF', cfg)
    if cfg.proxy == 'trw':
        return lambda v: clamp_sum(model, 'TRW', v, cfg, trw).aggregate
    if cfg.proxy == 'mf':
        return lambda v: clamp_sum(model, 'MF', v, cfg, mf).aggregate
    return lambda v: (clamp_sum(model, 'TRW', v, cfg, trw).aggregate
                      - clamp_sum(model, 'MF', v, cfg, mf).aggregate)


def pseudo_greedy_select(model, method, heuristics=None, cfg=None):
    '''Evaluate only the variables the heuristics would pick

    Returns:
        ``(var, aggregate, table)`` where ``table`` has one row per heuristic
        with its pick and the ranking value of that pick
    '''
    cfg = cfg or ClampConfig.from_defaults()
    heuristics = tuple(heuristics or cfg.basket)
    if not heuristics:
        raise InputError("pseudo-greedy selection needs at least one heuristic")
    entropies = None
    if any(select.parse_heuristic(h)[1] for h in heuristics):
        entropies = run_method(model, 'TRW', cfg).singleton_entropies(model)
    context = select.SelectionContext(entropies=entropies)
    free = list(model.var_names)
    picks = [model.index_of(_pick_with_fallback(model, h, context, free)[0]) for h in heuristics]
    ranking = _ranking(model, method, cfg)
    candidates = sorted(set(picks))
    values = {v: ranking(v) for v in candidates}
    how = direction(method, model, cfg.proxy)
    k = _best(candidates, [values[v] for v in candidates], how)
    table = pd.DataFrame({'heuristic': heuristics, 'var': picks,
                          'value': [values[v] for v in picks]})
    return candidates[k], clamp_sum(model, method, candidates[k], cfg).aggregate, table


@dataclass
class Branch:
    """One leaf of the clamp tree"""
    path: Tuple[int, ...]
    model: object
    cmap: ClampMap
    result: Optional[InferenceResult]

    @property
    def total(self):
        return self.result.log_z + self.cmap.log_constant


class BranchSet(object):
    """Live branches of one method, all clamped on the same variables"""

    def __init__(self, model, method, cfg, root=None):
        self.method = method
        self.cfg = cfg
        root = root or run_method(model, method, cfg)
        self.branches = [Branch((), model, ClampMap(index_map=tuple(range(model.n))), root)]
        self.names = ()

    def aggregate(self):
        values = [b.total for b in sorted(self.branches, key=lambda b: b.path)]
        return float(logsumexp(values))

    def expand(self, name):
        '''New set with ``name`` clamped to every label in every branch
        '''
        jobs = []
        for b in self.branches:
            var = b.model.index_of(name)
            jobs.extend((b, label) for label in range(b.model.labels[var]))

        def child(job):
            b, label = job
            sub, step = clamp(b.model, b.model.index_of(name), label)
            result = _run_child(sub, step, self.method, b.result, self.cfg)
            return Branch(b.path + (label,), sub, b.cmap.then(step), result)

        out = BranchSet.__new__(BranchSet)
        out.method, out.cfg = self.method, self.cfg
        out.branches = sorted(_map(self.cfg, child, jobs), key=lambda b: b.path)
        out.names = self.names + (name,)
        return out

    def label_distribution(self, name):
        '''``p~`` of the labels of a clamped variable
        '''
        agg = self.aggregate()
        pos = self.names.index(name)
        size = 1 + max(b.path[pos] for b in self.branches)
        p = np.zeros(size)
        for b in self.branches:
            p[b.path[pos]] += np.exp(b.total - agg)
        return p

    def entropies(self):
        '''Branch-weighted average entropy of every unclamped variable
        '''
        agg = self.aggregate()
        out = {}
        for b in self.branches:
            weight = np.exp(b.total - agg)
            for name, h in b.result.singleton_entropies(b.model).items():
                out[name] = out.get(name, 0.0) + weight * h
        return out


@dataclass
class ClampRound:
    """Outcome of one clamping round"""
    round: int
    var: int
    name: object
    aggregate: float
    p_tilde: np.ndarray
    branches: List[Tuple[Tuple[int, ...], float]]
    wall_time: float
    selector: str
    fallback: str = ''
    picks: dict = field(default_factory=dict)


@dataclass
class ClampReport:
    """Estimates of a clamp sequence, round by round

    ``rounds[t]`` holds the aggregate after ``t + 1`` clamps.
    """
    method: str
    selector: str
    root: InferenceResult
    rounds: List[ClampRound] = field(default_factory=list)
    exact: Optional[float] = None

    COLUMNS = ['round', 'var', 'label_path', 'child_logz', 'aggregate_logz', 'exact_logz',
               'wall_time_ms']

    def curve(self):
        '''Aggregates for 0, 1, ... clamps
        '''
        return [self.root.log_z] + [r.aggregate for r in self.rounds]

    def to_frame(self):
        exact = np.nan if self.exact is None else self.exact
        rows = [(0, -1, '', self.root.log_z, self.root.log_z, exact, 1000 * self.root.wall_time)]
        for r in self.rounds:
            for path, value in r.branches:
                rows.append((r.round, r.var, '-'.join(str(x) for x in path), value, r.aggregate,
                             exact, 1000 * r.wall_time))
        return pd.DataFrame(rows, columns=self.COLUMNS)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def _fixed(selector):
    return not isinstance(selector, str)


def clamp_sequence(model, method, selector, k, cfg=None, exact=None):
    '''Clamp ``k`` variables one round at a time

    Args:
        selector: heuristic name, ``greedy``, ``pseudo-greedy``, ``first``
            or a sequence of variable names to clamp in order
        exact: ``A(theta)`` to store in the report

    A selector that fails (for instance on a non-binary model) falls back to
    ``maxW0`` and then to the lowest unclamped index; the report records it.
    '''
    cfg = cfg or ClampConfig.from_defaults()
    if method not in METHODS:
        raise InputError(f"Unknown method {method}, expected one of {METHODS}")
    if not 1 <= k <= model.n:
        raise InputError(f"Number of clamps must be between 1 and {model.n}, got {k}")
    if _fixed(selector):
        selector = tuple(selector)
        if len(selector) < k:
            raise InputError(f"{k} rounds need {k} variables, got {len(selector)}")
        label = 'fixed'
    else:
        if selector not in META_SELECTORS:
            select.parse_heuristic(selector)
        label = selector

    how = direction(method, model, cfg.proxy)
    needs_proxy = method == 'Bethe' and not (model.is_binary and is_balanced(model))
    tre = label == 'pseudo-greedy' and any(select.parse_heuristic(h)[1] for h in cfg.basket)
    tre = tre or (label not in META_SELECTORS + ('fixed',) and select.parse_heuristic(label)[1])

    sets = {method: BranchSet(model, method, cfg)}
    searching = needs_proxy and label in ('greedy', 'pseudo-greedy')
    if (searching or tre) and 'TRW' not in sets:
        sets['TRW'] = BranchSet(model, 'TRW', cfg)
    if searching and cfg.proxy in ('mf', 'gap') and 'MF' not in sets:
        sets['MF'] = BranchSet(model, 'MF', cfg)

    report = ClampReport(method, label, sets[method].branches[0].result, exact=exact)
    clamped = []
    for t in range(1, k + 1):
        start = time.perf_counter()
        cache = {}

        def expanded(which, name):
            if (which, name) not in cache:
                cache[(which, name)] = sets[which].expand(name)
            return cache[(which, name)]

        def value(name):
            if not needs_proxy:
                return expanded(method, name).aggregate()
            if cfg.proxy == 'trw':
                return expanded('TRW', name).aggregate()
            if cfg.proxy == 'mf':
                return expanded('MF', name).aggregate()
            return expanded('TRW', name).aggregate() - expanded('MF', name).aggregate()

        free = [model.var_names[i] for i in range(model.n) if model.var_names[i] not in clamped]
        context = select.SelectionContext(
            exclude=frozenset(clamped),
            entropies=sets['TRW'].entropies() if 'TRW' in sets and tre else None)
        fallback, picks = '', {}
        if label == 'fixed':
            name = selector[t - 1]
            model.index_of(name)
            if name in clamped:
                raise InputError(f"Variable {name} is clamped twice")
        elif label == 'first':
            name = free[0]
        elif label == 'greedy':
            values = [value(n) for n in free]
            name = free[_best(free, values, how)]
        elif label == 'pseudo-greedy':
            for h in cfg.basket:
                picks[h] = _pick_with_fallback(model, h, context, free)[0]
            candidates = sorted(set(picks.values()), key=model.index_of)
            values = [value(n) for n in candidates]
            name = candidates[_best(candidates, values, how)]
            picks['pseudo-greedy'] = name
        else:
            name, fallback = _pick_with_fallback(model, label, context, free)

        for which in list(sets):
            sets[which] = expanded(which, name)
        clamped.append(name)
        current = sets[method]
        agg = current.aggregate()
        report.rounds.append(ClampRound(
            round=t, var=model.index_of(name), name=name, aggregate=agg,
            p_tilde=current.label_distribution(name),
            branches=[(b.path, b.total) for b in current.branches],
            wall_time=time.perf_counter() - start, selector=label, fallback=fallback,
            picks=picks))
        log.debug("%s %s round %d clamps %s: %.6f", method, label, t, name, agg)
    return report


def _pick_with_fallback(model, heuristic, context, free):
    '''Heuristic pick, else ``maxW0``, else the lowest unclamped variable
    '''
    try:
        chosen = select.pick(model, heuristic, context)
        return chosen.name, ('unstripped' if chosen.fallback else '')
    except ExhaustionError:
        raise
    except ClaspException as e:
        log.info("%s failed (%s), falling back to maxW0", heuristic, e)
    try:
        return select.pick(model, 'maxW0', context).name, 'maxW0'
    except ExhaustionError:
        raise
    except ClaspException as e:
        log.info("maxW0 failed (%s), clamping the lowest index", e)
    return free[0], 'first'


def sequence_aggregate(model, method, names, cfg=None):
    '''Aggregate after clamping exactly ``names``, in that order
    '''
    cfg = cfg or ClampConfig.from_defaults()
    branches = BranchSet(model, method, cfg)
    for name in names:
        branches = branches.expand(name)
    return branches.aggregate()

