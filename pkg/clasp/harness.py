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
Experiments behind the command line

Each function returns pandas frames; :func:`write_frame` stores them as CSV
preceded by ``# `` lines that record how they were produced. Everything
except the timing columns is a deterministic function of the arguments.
"""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from math import comb, perm
from typing import NamedTuple

import numpy as np
import pandas as pd
import pkg_resources

from .clamping import ClampConfig, clamp_sequence, clamp_sum, direction, run_method
from .clamping import sequence_aggregate
from .config import load_experiments
from .exact import exact_logz
from .exception import CapacityError, InputError
from .gen import GenSpec, generate, symmetric_model
from .model import is_balanced

log = logging.getLogger('clasp_debug')

CLAMP_COLUMNS = ['run', 'method', 'selector', 'round', 'err', 'abs_err', 'time_ms',
                 'estimate', 'exact']
SWEEP_COLUMNS = ['topology', 'n', 'w', 'method', 'err', 'err_after_1_clamp']
HIST_COLUMNS = ['round', 'bin_lo', 'bin_hi', 'count']

#: Largest symmetric model swept, solved by brute force
SWEEP_MAX_N = 12


def version():
    try:
        return pkg_resources.get_distribution('clasp').version
    except pkg_resources.DistributionNotFound:
        return 'unknown'


def provenance(command, **details):
    '''Comment lines describing how a CSV was made
    '''
    lines = [f'clasp {version()} {command}']
    lines.extend(f'{k}: {v}' for k, v in details.items())
    return lines


def write_frame(frame, path, header=()):
    '''Write ``frame`` as CSV with ``# `` comment lines in front
    '''
    with open(path, 'w', encoding='utf-8', newline='') as f:
        for line in header:
            f.write(f'# {line}\n')
        frame.to_csv(f, index=False, float_format='%.10g')
    log.debug("wrote %d rows to %s", len(frame), path)


def load_results(path, tol=1e-8):
    '''Read a CSV written by :func:`write_frame`

    Raises:
        InputError: an ``err`` value does not match ``estimate - exact``
    '''
    frame = pd.read_csv(path, comment='#')
    if {'err', 'estimate', 'exact'} <= set(frame.columns) and len(frame):
        bad = ~np.isclose(frame['err'], frame['estimate'] - frame['exact'], rtol=0, atol=tol)
        if bad.any():
            raise InputError(f"{int(bad.sum())} rows of {path} have err != estimate - exact")
    return frame


def infer(model, method, cfg=None, exact=False):
    '''One estimate as a dict ready for printing

    With ``exact`` the true ``A`` and the error are added.
    '''
    result = run_method(model, method, cfg)
    out = {'method': method, 'log_z': result.log_z, 'bound': result.bound,
           'converged': result.converged, 'iters': result.iters,
           'time_ms': 1000 * result.wall_time}
    if exact:
        out['exact'] = result.log_z if method == 'Exact' else exact_logz(model)
        out['err'] = out['log_z'] - out['exact']
    return out


def sweep(topology, n, weights, methods=('MF', 'Bethe', 'TRW'), cfg=None):
    '''Error of each method on symmetric models over a grid of weights

    ``err_after_1_clamp`` clamps variable 0; all variables are equivalent.
    '''
    if n > SWEEP_MAX_N:
        raise CapacityError(f"Sweeps use brute force, n must be at most {SWEEP_MAX_N}")
    cfg = cfg or ClampConfig.from_defaults()
    rows = []
    for w in weights:
        model = symmetric_model(n, w, topology)
        exact = exact_logz(model)
        for method in methods:
            root = run_method(model, method, cfg)
            clamped = clamp_sum(model, method, 0, cfg, parent=root).aggregate
            rows.append((topology, n, float(w), method, root.log_z - exact, clamped - exact))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def experiment_specs(base, runs):
    '''``runs`` copies of ``base`` with consecutive seeds
    '''
    return [replace(base, seed=base.seed + r) for r in range(runs)]


def _clamp_run(job):
    '''All methods and selectors on one generated model
    '''
    run, spec, methods, selectors, rounds, cfg = job
    model = generate(spec)
    exact = exact_logz(model)
    k = min(rounds, model.n)
    rows, picks = [], []
    for method in methods:
        if k == 0:
            root = run_method(model, method, cfg)
            rows.extend((run, method, selector, 0, root.log_z, exact, 1000 * root.wall_time)
                        for selector in selectors)
            continue
        for selector in selectors:
            report = clamp_sequence(model, method, selector, k, cfg, exact=exact)
            rows.append((run, method, selector, 0, report.root.log_z, exact,
                         1000 * report.root.wall_time))
            for r in report.rounds:
                rows.append((run, method, selector, r.round, r.aggregate, exact,
                             1000 * r.wall_time))
                for h, name in r.picks.items():
                    picks.append((run, method, r.round, h, name))
    return rows, picks, is_balanced(model)


def _parallel(fn, jobs, n_jobs):
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


class ClampResults(NamedTuple):
    runs: pd.DataFrame
    summary: pd.DataFrame
    agreement: pd.DataFrame
    timing: pd.DataFrame


def clamp_experiment(specs, methods, selectors, rounds, cfg=None, jobs=1):
    '''Error against number of clamps for every run, method and selector

    Returns:
        :class:`ClampResults` with the per-run rows, mean curves (plus the
        best and worst heuristic of the basket per round), the agreement of
        each heuristic with the pseudo-greedy choice and mean timings
    '''
    from .select import agreement
    cfg = cfg or ClampConfig.from_defaults()
    if rounds < 0:
        raise InputError(f"rounds must be at least 0, got {rounds}")
    if not methods:
        raise InputError("At least one method is needed")
    jobs_list = [(run, spec, tuple(methods), tuple(selectors), rounds, cfg)
                 for run, spec in enumerate(specs)]
    rows, picks, balanced = [], [], []
    for run_rows, run_picks, run_balanced in _parallel(_clamp_run, jobs_list, jobs):
        rows.extend(run_rows)
        picks.extend(run_picks)
        balanced.append(run_balanced)

    frame = pd.DataFrame(rows, columns=['run', 'method', 'selector', 'round', 'estimate',
                                        'exact', 'time_ms'])
    frame['err'] = frame['estimate'] - frame['exact']
    frame['abs_err'] = frame['err'].abs()
    frame = frame[CLAMP_COLUMNS].sort_values(['run', 'method', 'selector', 'round'],
                                             kind='mergesort').reset_index(drop=True)

    summary = summarize(frame, mixed=not all(balanced), basket=cfg.basket)
    pick_frame = pd.DataFrame(picks, columns=['run', 'method', 'round', 'heuristic', 'var'])
    agree = pd.DataFrame(columns=['method', 'heuristic', 'round', 'agreement'])
    if len(pick_frame):
        parts = []
        for method, group in pick_frame.groupby('method', sort=True):
            part = agreement(group)
            part.insert(0, 'method', method)
            parts.append(part)
        agree = pd.concat(parts, ignore_index=True)
    timing = (frame.groupby(['method', 'selector', 'round'], sort=True)['time_ms']
              .mean().reset_index())
    return ClampResults(frame, summary, agree, timing)


def summarize(frame, mixed=False, basket=()):
    '''Mean error curves, with ``best`` and ``worst`` rows over the basket

    ``error`` is the mean signed error, except for Bethe on models that are
    not all balanced where the mean absolute error is reported.
    '''
    columns = ['method', 'selector', 'round', 'runs', 'err', 'abs_err', 'error']
    if not len(frame):
        return pd.DataFrame(columns=columns)
    grouped = frame.groupby(['method', 'selector', 'round'], sort=True)
    summary = grouped.agg(runs=('run', 'count'), err=('err', 'mean'),
                          abs_err=('abs_err', 'mean')).reset_index()
    use_abs = (summary['method'] == 'Bethe') & mixed
    summary['error'] = np.where(use_abs, summary['abs_err'], summary['err'])
    extra = []
    in_basket = summary[summary['selector'].isin(basket)]
    for (method, rnd), group in in_basket.groupby(['method', 'round'], sort=True):
        order = group.sort_values('abs_err', kind='mergesort')
        for label, row in (('best', order.iloc[0]), ('worst', order.iloc[-1])):
            extra.append((method, label, rnd, row['runs'], row['err'], row['abs_err'],
                          row['error']))
    if extra:
        summary = pd.concat([summary, pd.DataFrame(extra, columns=columns)], ignore_index=True)
    return summary[columns]


class SequenceSearch(NamedTuple):
    method: str
    k: int
    exhaustive: float
    greedy: float
    gap: float
    best_sequence: tuple
    greedy_sequence: tuple


#: Warm started from a parent optimum that depends on clamp order
ORDERED_SEARCH = ('MF', 'Bethe')


def _search_cost(model, k, ordered=False):
    '''Inference calls needed to evaluate every set, or every sequence, of ``k`` variables
    '''
    width = max(model.labels, default=2)
    per_set = sum(width ** t for t in range(1, k + 1))
    return (perm(model.n, k) if ordered else comb(model.n, k)) * per_set


def sequence_search(model, method, k, cfg=None, max_calls=None):
    '''Best set or sequence of ``k`` clamps found by exhaustive search against greedy

    ``gap`` is how much better the exhaustive aggregate is in the method's
    bound direction; Bethe on an unbalanced model is ranked by distance to
    the exact value. The greedy sequence is among the candidates so the gap
    is never negative.

    MF and Bethe children are warm started from their parent's optimum, so
    their search runs over ordered sequences; TRW and Exact only over sets.

    Raises:
        CapacityError: ``k`` above the supported depth or too many inference calls
    '''
    limits = load_experiments()['sequence_search']
    max_calls = max_calls or limits['max_inference_calls']
    if not 1 <= k <= min(limits['max_rounds'], model.n):
        raise CapacityError(f"Sequence search supports 1 <= k <= {limits['max_rounds']}")
    ordered = method in ORDERED_SEARCH
    if _search_cost(model, k, ordered) > max_calls:
        raise CapacityError(f"Sequence search over {model.n} variables at depth {k} "
                            f"needs more than {max_calls} inference calls")
    cfg = cfg or ClampConfig.from_defaults()
    greedy = clamp_sequence(model, method, 'greedy', k, cfg)
    greedy_seq = tuple(r.name for r in greedy.rounds)
    greedy_value = greedy.rounds[-1].aggregate

    if ordered:
        pool = [s for s in itertools.permutations(model.var_names, k) if s != greedy_seq]
    else:
        pool = [s for s in itertools.combinations(model.var_names, k)
                if set(s) != set(greedy_seq)]
    candidates = [greedy_seq] + pool
    values = [greedy_value] + [sequence_aggregate(model, method, s, cfg) for s in candidates[1:]]
    values = np.array(values)
    how = direction(method, model, cfg.proxy)
    if method == 'Bethe' and not (model.is_binary and is_balanced(model)):
        exact = exact_logz(model)
        scores = -np.abs(values - exact)
        g_score = -abs(greedy_value - exact)
    elif how == 'min':
        scores, g_score = -values, -greedy_value
    else:
        scores, g_score = values, greedy_value
    best = int(np.argmax(scores)) if how is not None else 0
    return SequenceSearch(method, k, float(values[best]), greedy_value,
                          float(scores[best] - g_score), candidates[best], greedy_seq)


def histogram(specs, rounds=None, bins=None, half_width=None, selector='maxW', cfg=None, jobs=1):
    '''Counts of the signed Bethe error in fixed bins at the given clamp rounds

    Errors outside ``[-half_width, half_width]`` are counted in the end bins.
    '''
    settings = load_experiments()['histogram']
    rounds = tuple(settings['rounds'] if rounds is None else rounds)
    bins = bins or settings['bins']
    half_width = half_width or settings['half_width']
    edges = np.linspace(-half_width, half_width, bins + 1)
    if not specs:
        return pd.DataFrame(columns=HIST_COLUMNS)
    cfg = cfg or ClampConfig.from_defaults()
    k = max(rounds)
    jobs_list = [(run, spec, ('Bethe',), (selector,), k, cfg) for run, spec in enumerate(specs)]
    errors = {r: [] for r in rounds}
    for run_rows, _, _ in _parallel(_clamp_run, jobs_list, jobs):
        for _, _, _, rnd, estimate, exact, _ in run_rows:
            if rnd in errors:
                errors[rnd].append(estimate - exact)
    rows = []
    for rnd in rounds:
        values = np.clip(errors[rnd], edges[0], edges[-1])
        counts, _ = np.histogram(values, bins=edges)
        rows.extend((rnd, lo, hi, int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    return pd.DataFrame(rows, columns=HIST_COLUMNS)


def default_spec(family, n, theta_range=None, w_range=None, seed=0, **kwargs):
    ''':class:`GenSpec` with range presets filled in
    '''
    ranges = load_experiments()['ranges']
    return GenSpec(family=family, n=n,
                   theta_range=tuple(theta_range or ranges['theta']),
                   w_range=tuple(w_range or ranges['mixed']), seed=seed, **kwargs)
