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
Bethe approximation

The Bethe free energy of pseudomarginals ``mu`` in the local polytope is

    theta . mu + sum_i H(mu_i) - sum_(i,j) I_ij(mu_ij)

and its stationary points are the fixed points of loopy belief propagation.
:func:`bethe_optimize` runs damped sum-product from several starts and keeps
the best converged fixed point.

:class:`MessagePassing` is the engine shared with
:mod:`clasp.trw`: with edge weights ``rho`` it runs tree-reweighted message
passing, with ``rho = 1`` it is plain belief propagation.
"""

import logging
import time
from dataclasses import dataclass, fields
from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import logsumexp

from .config import load_defaults
from .exception import ConfigError, InputError
from .model import is_balanced
from .result import InferenceResult, entropy

log = logging.getLogger('clasp_debug')

#: ``|W|`` above which message passing switches to the log domain
LOGDOMAIN_THRESHOLD = 20.0


@dataclass(frozen=True, eq=False)
class PseudoMarginals:
    """Singleton tables and one ``L_i x L_j`` table per edge of the model"""
    singles: Tuple[np.ndarray, ...]
    pairs: Tuple[np.ndarray, ...]

    def polytope_violation(self, model):
        '''Largest normalisation or marginalisation error
        '''
        worst = 0.0
        for mu in self.singles:
            worst = max(worst, abs(float(np.sum(mu)) - 1), float(-np.min(mu, initial=0)))
        for (i, j), mu in zip(model.edges, self.pairs):
            worst = max(worst, abs(float(np.sum(mu)) - 1), float(-np.min(mu, initial=0)),
                        float(np.max(np.abs(mu.sum(axis=1) - self.singles[i]))),
                        float(np.max(np.abs(mu.sum(axis=0) - self.singles[j]))))
        return worst

    def validate(self, model, tol=1e-6):
        if len(self.singles) != model.n or len(self.pairs) != len(model.edges):
            raise InputError("Pseudomarginals do not match the model")
        for i, mu in enumerate(self.singles):
            if np.shape(mu) != (model.labels[i],):
                raise InputError(f"Singleton table of variable {i} has shape {np.shape(mu)}")
        for (i, j), mu in zip(model.edges, self.pairs):
            if np.shape(mu) != (model.labels[i], model.labels[j]):
                raise InputError(f"Pairwise table of edge ({i}, {j}) has shape {np.shape(mu)}")
        worst = self.polytope_violation(model)
        if worst > tol:
            raise InputError(f"Pseudomarginals violate the local polytope by {worst:.3g}")
        return self

    @classmethod
    def independent(cls, model, singles):
        '''``mu_ij = mu_i mu_j`` for every edge
        '''
        singles = tuple(np.asarray(mu, dtype=float) for mu in singles)
        return cls(singles, tuple(np.outer(singles[i], singles[j]) for i, j in model.edges))


@dataclass(frozen=True)
class BpConfig:
    """Message passing settings

    ``schedule`` is ``sequential`` (fixed edge order) or ``random``;
    ``init`` is ``uniform`` or ``random`` for the first restart, later
    restarts are always random; ``logdomain`` is ``auto``, ``yes`` or ``no``.
    """
    damping: float = 0.5
    tol: float = 1e-9
    max_iters: int = 10000
    schedule: str = 'sequential'
    restarts: int = 5
    seed: int = 0
    init: str = 'uniform'
    logdomain: str = 'auto'

    def __post_init__(self):
        if not 0 <= self.damping < 1:
            raise ConfigError(f"damping must be in [0, 1), got {self.damping}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1 or self.restarts < 1:
            raise ConfigError("max_iters and restarts must be at least 1")
        if self.schedule not in ('sequential', 'random'):
            raise ConfigError(f"Unknown schedule: {self.schedule}")
        if self.init not in ('uniform', 'random'):
            raise ConfigError(f"Unknown message init: {self.init}")
        if self.logdomain not in ('auto', 'yes', 'no'):
            raise ConfigError(f"logdomain must be auto, yes or no, got {self.logdomain}")

    @classmethod
    def from_defaults(cls, section='bethe', **overrides):
        values = load_defaults(section)
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})


def _normalize(p):
    return p / p.sum()


def _lognormalize(a):
    return a - logsumexp(a)


class MessagePassing(object):
    """Damped (reweighted) sum-product on a pairwise model

    Directed message ``2k`` runs along ``edges[k]`` from ``i`` to ``j``,
    message ``2k + 1`` from ``j`` to ``i``. The update for ``i -> j`` is

        m(x_j) ~ sum_x_i exp(theta_i + theta_ij / rho_ij) prod_k m_ki^rho_ki / m_ji

    which for ``rho = 1`` is ordinary belief propagation. Messages are kept as
    probabilities, or as logs when ``logdomain`` is set; damping always mixes
    probabilities.
    """

    def __init__(self, model, rho=None, logdomain=False):
        self.model = model
        self.rho = np.ones(len(model.edges)) if rho is None else np.asarray(rho, dtype=float)
        self.logdomain = logdomain
        # (source, target, edge, table oriented source x target)
        self.directed = []
        for k, ((i, j), t) in enumerate(zip(model.edges, model.pairwise)):
            self.directed.append((i, j, k, t / self.rho[k]))
            self.directed.append((j, i, k, t.T / self.rho[k]))
        self.inbox = [[] for _ in range(model.n)]
        for d, (i, j, k, _) in enumerate(self.directed):
            self.inbox[j].append(d)
        self.messages = None

    def reverse(self, d):
        return d ^ 1

    def init(self, mode='uniform', rng=None, warm=None):
        '''Set the starting messages

        Args:
            warm: mapping ``(source name, target name) -> probabilities``;
                messages missing from it start uniform
        '''
        names = self.model.var_names
        msgs = []
        for i, j, k, _ in self.directed:
            size = self.model.labels[j]
            if warm is not None and (names[i], names[j]) in warm:
                m = np.array(warm[(names[i], names[j])], dtype=float)
            elif mode == 'random' and rng is not None:
                m = rng.dirichlet(np.ones(size))
            else:
                m = np.full(size, 1.0 / size)
            m = np.maximum(m, 1e-300)
            msgs.append(np.log(m / m.sum()) if self.logdomain else m / m.sum())
        self.messages = msgs

    def _weighted_inbox(self, i):
        '''``theta_i + sum_k rho_ki log m_ki`` in the log domain
        '''
        acc = np.array(self.model.theta[i])
        for d in self.inbox[i]:
            m = self.messages[d]
            acc += self.rho[self.directed[d][2]] * (m if self.logdomain else np.log(m))
        return acc

    def _compute(self, d, inbox=None):
        i, j, k, table = self.directed[d]
        if inbox is None:
            inbox = self._weighted_inbox(i)
        back = self.messages[self.reverse(d)]
        pre = inbox - (back if self.logdomain else np.log(back))
        if self.logdomain:
            return _lognormalize(logsumexp(pre[:, None] + table, axis=0))
        pre = np.exp(pre - pre.max())
        return _normalize(pre @ np.exp(table - table.max()))

    def sweep(self, damping=0.0, order=None):
        '''Update every directed message once, return the largest change
        '''
        delta = 0.0
        for d in (range(len(self.directed)) if order is None else order):
            new = self._compute(d)
            old = self.messages[d]
            if self.logdomain:
                if damping > 0:
                    new = _lognormalize(np.logaddexp(np.log1p(-damping) + new, np.log(damping) + old))
                change = float(np.max(np.abs(np.exp(new) - np.exp(old))))
            else:
                if damping > 0:
                    new = _normalize((1 - damping) * new + damping * old)
                new = np.maximum(new, 1e-300)
                change = float(np.max(np.abs(new - old)))
            self.messages[d] = new
            delta = max(delta, change)
        return delta

    def run(self, cfg, rng=None):
        '''Sweep until the largest message change drops below ``cfg.tol``

        Returns:
            ``(converged, iterations)``
        '''
        rng = rng or np.random.default_rng(cfg.seed)
        for it in range(1, cfg.max_iters + 1):
            order = rng.permutation(len(self.directed)) if cfg.schedule == 'random' else None
            if self.sweep(cfg.damping, order) < cfg.tol:
                return True, it
        return False, cfg.max_iters

    def beliefs(self):
        '''Assemble pseudomarginals from the current messages

        Pairwise beliefs are fitted to the singleton beliefs by iterative
        proportional fitting so that the result always lies in the local
        polytope; at a fixed point the correction is at the level of the
        message tolerance.
        '''
        model = self.model
        inboxes = [self._weighted_inbox(i) for i in range(model.n)]
        singles = tuple(np.exp(_lognormalize(a)) for a in inboxes)
        pairs = []
        for k, (i, j) in enumerate(model.edges):
            d = 2 * k
            to_j, to_i = self.messages[d], self.messages[d + 1]
            if not self.logdomain:
                to_j, to_i = np.log(to_j), np.log(to_i)
            table = self.directed[d][3]
            logb = (inboxes[i] - to_i)[:, None] + (inboxes[j] - to_j)[None, :] + table
            pairs.append(_fit_margins(np.exp(_lognormalize(logb.ravel())).reshape(logb.shape),
                                      singles[i], singles[j]))
        return PseudoMarginals(singles, tuple(pairs))

    def named_messages(self):
        '''Messages as probabilities keyed by ``(source name, target name)``
        '''
        names = self.model.var_names
        return {(names[i], names[j]): (np.exp(m) if self.logdomain else np.array(m))
                for (i, j, _, _), m in zip(self.directed, self.messages)}


def _fit_margins(table, row, col, tol=1e-13, max_iters=1000):
    for _ in range(max_iters):
        r = table.sum(axis=1)
        table = table * np.divide(row, r, out=np.zeros_like(r), where=r > 0)[:, None]
        c = table.sum(axis=0)
        table = table * np.divide(col, c, out=np.zeros_like(c), where=c > 0)[None, :]
        if np.max(np.abs(table.sum(axis=1) - row)) < tol:
            break
    return table


def needs_logdomain(model, cfg, rho=None):
    '''Decide the message domain for ``cfg.logdomain == 'auto'``
    '''
    if cfg.logdomain != 'auto':
        return cfg.logdomain == 'yes'
    if not model.edges:
        return False
    spread = np.array([t.max() - t.min() for t in model.pairwise])
    if rho is not None:
        spread = spread / np.asarray(rho)
    return bool(np.max(spread) * 2 > LOGDOMAIN_THRESHOLD)


def _entropy_terms(model, mu):
    singles = [entropy(m) for m in mu.singles]
    info = [singles[i] + singles[j] - entropy(p) for (i, j), p in zip(model.edges, mu.pairs)]
    return singles, info


def _average_energy(model, mu):
    value = sum(float(t @ m) for t, m in zip(model.theta, mu.singles))
    return value + sum(float(np.sum(t * p)) for t, p in zip(model.pairwise, mu.pairs))


def bethe_free_energy(model, mu):
    '''Bethe free energy of pseudomarginals in the local polytope

    Raises:
        InputError: polytope violation beyond ``1e-6``
    '''
    mu.validate(model)
    singles, info = _entropy_terms(model, mu)
    return _average_energy(model, mu) + sum(singles) - sum(info)


class BpRun(NamedTuple):
    marginals: PseudoMarginals
    converged: bool
    iters: int
    messages: dict


def bp_run(model, cfg=None, init='uniform', rng=None, warm=None):
    '''One damped belief propagation run

    Returns:
        :class:`BpRun` ``(marginals, converged, iters, messages)``
    '''
    cfg = cfg or BpConfig.from_defaults()
    engine = MessagePassing(model, logdomain=needs_logdomain(model, cfg))
    rng = rng or np.random.default_rng(cfg.seed)
    engine.init(init, rng, warm)
    converged, iters = engine.run(cfg, rng)
    return BpRun(engine.beliefs(), converged, iters, engine.named_messages())


def bethe_optimize(model, cfg=None, warm=None):
    '''Best Bethe fixed point over ``cfg.restarts`` belief propagation runs

    The estimate is the largest Bethe free energy among converged runs; when
    no run converges the largest value seen is returned with
    ``converged=False``. The result is a lower bound when the model is
    balanced (attractive up to a flip).

    Args:
        warm: named messages from a parent run, used for the first restart
    '''
    cfg = cfg or BpConfig.from_defaults()
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    best = None
    for restart in range(cfg.restarts):
        mode = cfg.init if restart == 0 else 'random'
        run = bp_run(model, cfg, mode, rng, warm if restart == 0 else None)
        value = bethe_free_energy(model, run.marginals)
        if not run.converged:
            log.warning("belief propagation restart %d did not converge in %d iterations",
                        restart, run.iters)
        key = (run.converged, value)
        if best is None or key > best[0]:
            best = (key, run)
    (converged, value), run = best
    bound = 'lower' if model.is_binary and is_balanced(model) else 'none'
    return InferenceResult(log_z=value, marginals=run.marginals, method='Bethe', bound=bound,
                           converged=converged, iters=run.iters,
                           wall_time=time.perf_counter() - start, messages=run.messages)
