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
Model files

Two formats are supported:

UAI ``MARKOV`` files
    preamble with the variable count, cardinalities, factor count and factor
    scopes, then one table per factor in row-major order. Tables hold
    potentials, so values are logged on read and exponentiated on write.

Native text
    a header line ``n m``, one line ``i L_i theta_i(0) ... theta_i(L_i-1)`` per
    variable, then for each of the ``m`` edges a line ``i j`` followed by a
    line with the row-major log table.
"""

import logging
import os

import numpy as np

from .exception import InputError
from .model import PairwiseModel

log = logging.getLogger('clasp_debug')


def _tokens(path):
    with open(path, 'r') as f:
        return f.read().split()


class _Reader(object):
    def __init__(self, tokens, path):
        self.tokens = tokens
        self.pos = 0
        self.path = path

    def next(self, cast=str):
        try:
            tok = self.tokens[self.pos]
        except IndexError:
            raise InputError(f"Unexpected end of file in {self.path}")
        self.pos += 1
        try:
            return cast(tok)
        except ValueError:
            raise InputError(f"Bad token {tok!r} in {self.path}")

    def ints(self, count):
        return [self.next(int) for _ in range(count)]

    def floats(self, count):
        return np.array([self.next(float) for _ in range(count)])


def read_uai(path):
    '''Read a UAI ``MARKOV`` file with unary and pairwise factors

    Factors sharing a scope are summed in log space.

    Raises:
        InputError: malformed file, higher-order scopes or zero table entries
    '''
    r = _Reader(_tokens(path), path)
    kind = r.next()
    if kind.upper() != 'MARKOV':
        raise InputError(f"Only MARKOV networks are supported, {path} is {kind}")
    n = r.next(int)
    labels = r.ints(n)
    nfactors = r.next(int)
    scopes = []
    for _ in range(nfactors):
        size = r.next(int)
        if size not in (1, 2):
            raise InputError(f"Factor of arity {size} in {path}: only unary and pairwise factors are supported")
        scope = r.ints(size)
        if any(not 0 <= v < n for v in scope):
            raise InputError(f"Factor scope {list(scope)} in {path} names variables outside 0..{n - 1}")
        if size == 2 and scope[0] == scope[1]:
            raise InputError(f"Pairwise factor over a single variable {scope[0]} in {path}")
        scopes.append(scope)

    theta = [np.zeros(l) for l in labels]
    tables = {}
    for scope in scopes:
        count = r.next(int)
        shape = tuple(labels[v] for v in scope)
        if count != int(np.prod(shape)):
            raise InputError(f"Table for scope {scope} has {count} entries, expected {int(np.prod(shape))}")
        values = r.floats(count).reshape(shape)
        if np.any(values <= 0):
            raise InputError(f"Zero or negative potential in factor {scope} of {path}")
        values = np.log(values)
        if len(scope) == 1:
            theta[scope[0]] = theta[scope[0]] + values
        else:
            i, j = scope
            if i > j:
                i, j, values = j, i, values.T
            tables[(i, j)] = tables.get((i, j), 0) + values
    log.debug("read %s: %d variables, %d factors", path, n, nfactors)
    return PairwiseModel(labels, theta, tables)


def write_uai(model, path):
    '''Write a UAI ``MARKOV`` file: one unary factor per variable then one
    pairwise factor per edge
    '''
    lines = ['MARKOV', str(model.n), ' '.join(str(l) for l in model.labels),
             str(model.n + len(model.edges))]
    lines += [f'1 {i}' for i in range(model.n)]
    lines += [f'2 {i} {j}' for i, j in model.edges]
    lines.append('')
    for t in list(model.theta) + list(model.pairwise):
        lines.append(str(t.size))
        lines.append(' '.join('%.17g' % v for v in np.exp(t).ravel()))
        lines.append('')
    with open(path, 'w') as f:
        f.write('\n'.join(lines))


def read_native(path):
    '''Read the native text format
    '''
    r = _Reader(_tokens(path), path)
    n, m = r.next(int), r.next(int)
    labels, theta = [], []
    for k in range(n):
        i = r.next(int)
        if i != k:
            raise InputError(f"Variable lines must be in order, found {i} at position {k} in {path}")
        labels.append(r.next(int))
        theta.append(r.floats(labels[-1]))
    tables = {}
    for _ in range(m):
        i, j = r.next(int), r.next(int)
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"Edge ({i}, {j}) out of range in {path}")
        if (i, j) in tables or (j, i) in tables:
            raise InputError(f"Duplicate edge ({i}, {j}) in {path}")
        tables[(i, j)] = r.floats(labels[i] * labels[j]).reshape(labels[i], labels[j])
    return PairwiseModel(labels, theta, tables)


def write_native(model, path):
    lines = [f'{model.n} {len(model.edges)}']
    for i, (l, t) in enumerate(zip(model.labels, model.theta)):
        lines.append(' '.join([str(i), str(l)] + ['%.17g' % v for v in t]))
    for (i, j), t in zip(model.edges, model.pairwise):
        lines.append(f'{i} {j}')
        lines.append(' '.join('%.17g' % v for v in t.ravel()))
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')


def load_model(path):
    '''Read a model file, UAI when the extension is ``.uai``
    '''
    if not os.path.exists(path):
        raise InputError(f"Model file not found: {path}")
    if path.lower().endswith('.uai'):
        return read_uai(path)
    return read_native(path)


def save_model(model, path):
    if path.lower().endswith('.uai'):
        write_uai(model, path)
    else:
        write_native(model, path)
