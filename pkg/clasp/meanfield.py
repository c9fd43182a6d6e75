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
Naive mean field

Maximises the mean-field free energy

    F(q) = sum_i theta_i . mu_i + sum_(i,j) mu_i^T theta_ij mu_j + sum_i H(mu_i)

over fully factorised ``q`` by coordinate ascent. Every update is the exact
maximiser in one coordinate, so ``F`` never decreases and the best value found
is a lower bound on ``A(theta)``.
"""

import logging
import time
from dataclasses import dataclass, fields
from typing import Tuple

import numpy as np
from scipy.special import softmax

from .config import load_defaults
from .exception import ConfigError, InputError
from .result import InferenceResult, entropy

log = logging.getLogger('clasp_debug')


@dataclass(frozen=True, eq=False)
class FactorizedMarginals:
    """One distribution per variable"""
    singles: Tuple[np.ndarray, ...]

    def validate(self, model, tol=1e-12):
        if len(self.singles) != model.n:
            raise InputError(f"Marginals for {len(self.singles)} variables, model has {model.n}")
        for i, mu in enumerate(self.singles):
            if np.shape(mu) != (model.labels[i],):
                raise InputError(f"Marginal of variable {i} has shape {np.shape(mu)}")
            if np.any(np.asarray(mu) < 0) or abs(np.sum(mu) - 1) > max(tol, 1e-9):
                raise InputError(f"Marginal of variable {i} is not a distribution")
        return self

    def restrict(self, index_map):
        '''Marginals of the surviving variables of a clamped child
        '''
        return FactorizedMarginals(tuple(self.singles[k] for k in index_map))

    @classmethod
    def uniform(cls, model):
        return cls(tuple(np.full(l, 1.0 / l) for l in model.labels))

    @classmethod
    def random(cls, model, rng):
        '''Symmetric Dirichlet(1) draw for every variable
        '''
        return cls(tuple(rng.dirichlet(np.ones(l)) for l in model.labels))


@dataclass(frozen=True)
class MfConfig:
    """Coordinate ascent settings

    ``init`` is ``uniform`` or ``random``; a warm start is passed to
    :func:`mf_optimize` directly.
    """
    tol: float = 1e-7
    max_sweeps: int = 10000
    restarts: int = 5
    seed: int = 0
    init: str = 'random'

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1 or self.restarts < 1:
            raise ConfigError("max_sweeps and restarts must be at least 1")
        if self.init not in ('uniform', 'random'):
            raise ConfigError(f"Unknown mean field init: {self.init}")

    @classmethod
    def from_defaults(cls, **overrides):
        values = load_defaults('mf')
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})


def mf_free_energy(model, q):
    '''Mean-field free energy of ``q`` in nats
    '''
    q.validate(model)
    value = sum(float(t @ mu) for t, mu in zip(model.theta, q.singles))
    value += sum(float(q.singles[i] @ t @ q.singles[j])
                 for (i, j), t in zip(model.edges, model.pairwise))
    value += sum(entropy(mu) for mu in q.singles)
    return value


def _local_field(model, singles, var):
    field = np.array(model.theta[var])
    for j, k in model.incident(var):
        t = model.pairwise[k]
        field += t @ singles[j] if var < j else t.T @ singles[j]
    return field


def mf_update(model, q, var):
    '''Replace ``mu_var`` by the softmax of its local field
    '''
    singles = list(q.singles)
    singles[var] = softmax(_local_field(model, singles, var))
    return FactorizedMarginals(tuple(singles))


def _ascend(model, singles, cfg):
    '''Sweep in ascending variable order until the largest change is below tol
    '''
    for sweep in range(1, cfg.max_sweeps + 1):
        delta = 0.0
        for i in range(model.n):
            new = softmax(_local_field(model, singles, i))
            delta = max(delta, float(np.max(np.abs(new - singles[i]))))
            singles[i] = new
        if delta < cfg.tol:
            return singles, True, sweep
    return singles, False, cfg.max_sweeps


def mf_optimize(model, cfg=None, warm=None):
    '''Best mean-field lower bound over ``cfg.restarts`` runs

    The first run starts from ``warm`` when given, otherwise from ``cfg.init``;
    the remaining runs start from random marginals drawn from ``cfg.seed``.

    Returns:
        :class:`~clasp.result.InferenceResult` with ``bound='lower'``
    '''
    cfg = cfg or MfConfig.from_defaults()
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    best = None
    for restart in range(cfg.restarts):
        if restart == 0 and warm is not None:
            init = warm.validate(model)
        elif restart == 0 and cfg.init == 'uniform':
            init = FactorizedMarginals.uniform(model)
        else:
            init = FactorizedMarginals.random(model, rng)
        singles, converged, sweeps = _ascend(model, [np.array(mu) for mu in init.singles], cfg)
        q = FactorizedMarginals(tuple(singles))
        value = mf_free_energy(model, q)
        if not converged:
            log.warning("mean field restart %d did not converge in %d sweeps", restart, sweeps)
        if best is None or value > best[0]:
            best = (value, q, converged, sweeps)
    value, q, converged, sweeps = best
    return InferenceResult(log_z=value, marginals=q, method='MF', bound='lower',
                           converged=converged, iters=sweeps,
                           wall_time=time.perf_counter() - start)
