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
import logging
import os
import sys

import click
import numpy as np

from . import harness
from .bethe import BpConfig
from .clamping import ClampConfig
from .config import basket, load_experiments
from .exception import ConfigError
from .formats import load_model, save_model
from .gen import FAMILIES, generate, preset
from .meanfield import MfConfig

METHOD_NAMES = {'mf': 'MF', 'bethe': 'Bethe', 'trw': 'TRW', 'exact': 'Exact'}


def clasp_catch():
    debug_logger = logging.getLogger('clasp_debug')
    debug_logger.setLevel(logging.CRITICAL)
    try:
        clasp()
    except Exception as e:
        click.echo('ERROR: %s' % e)
        debug_logger.exception(e)
        sys.exit(1)


@click.group()
@click.option('--debug', is_flag=True, default=False,
              help="Show debug info")
@click.option('--log', 'logfile', default=None, envvar='CLASP_LOG',
              help="Append a record of each command to this file (default: $CLASP_LOG)")
@click.pass_context
def clasp(ctx, debug, logfile):
    """
    Estimate log partition functions of pairwise models with mean field, Bethe
    and TRW, and measure how much clamping variables helps
    """
    ctx.obj = {}
    ctx.obj['log'] = config_log(logfile)
    if debug:
        debug_logger = logging.getLogger('clasp_debug')
        debug_logger.setLevel(logging.DEBUG)
        if not debug_logger.handlers:
            debug_logger.addHandler(logging.StreamHandler())


def config_log(logfile=None):
    ''' configure the log keeping track of the commands that were run '''
    logger = logging.getLogger('clasp_log')
    formatter = logging.Formatter('%(asctime)s; %(message)s', "%Y-%m-%d %H:%M:%S")
    logger.setLevel(logging.INFO)
    logger.propagate = False
    for h in list(logger.handlers):
        logger.removeHandler(h)

    # warnings to the console
    clog = logging.StreamHandler()
    clog.setLevel(logging.WARNING)
    logger.addHandler(clog)

    if logfile:
        flog = logging.FileHandler(logfile)
        flog.setLevel(logging.INFO)
        flog.setFormatter(formatter)
        logger.addHandler(flog)
    return logger


def _range(ctx, param, value):
    '''``lo,hi`` or the name of a preset range'''
    if value is None:
        return None
    if ',' not in value:
        try:
            return preset(value)
        except ConfigError as e:
            raise click.BadParameter(str(e))
    try:
        lo, hi = (float(x) for x in value.split(','))
    except ValueError:
        raise click.BadParameter(f"expected lo,hi or a preset name, got {value}")
    return (lo, hi)


def _methods(ctx, param, value):
    if isinstance(value, tuple):
        return tuple(METHOD_NAMES[v.lower()] for v in value)
    return METHOD_NAMES[value.lower()]


def model_args(f):
    constraints = [
        click.option('--model', 'model_path', type=click.Path(),
                     help="Model file, UAI when it ends in .uai"),
        click.option('--family', type=click.Choice(FAMILIES), default='grid',
                     help="Generated model family when no --model is given"),
        click.option('--n', type=int, default=25, help="Number of variables"),
        click.option('--theta-range', callback=_range, default=None,
                     help="Singleton range lo,hi or preset name. Default: theta"),
        click.option('--w-range', callback=_range, default=None,
                     help="Edge weight range lo,hi or preset name. Default: mixed"),
        click.option('--w-uniform', 'w', type=float, default=None,
                     help="Common weight of symmetric and lamp models, or of every edge of a complete or cycle model"),
        click.option('--topology', type=click.Choice(['cycle', 'complete']), default='complete',
                     help="Graph of symmetric models"),
        click.option('--seed', type=int, default=0, help="Generator and solver seed"),
    ]
    for c in reversed(constraints):
        f = c(f)
    return f


def solver_args(f):
    constraints = [
        click.option('--restarts', type=int, default=None,
                     help="Restarts of MF and Bethe. Default: packaged defaults"),
        click.option('--damping', type=float, default=None,
                     help="Bethe message damping. Default: 0.5"),
        click.option('--proxy', type=click.Choice(['trw', 'gap', 'mf']), default='trw',
                     help="How Bethe on unbalanced models ranks clamp candidates"),
        click.option('--recompute-rho/--restrict-rho', default=False,
                     help="Rebuild TRW edge weights for clamped models. Default: --restrict-rho"),
        click.option('--jobs', type=int, default=1, help="Parallel workers"),
    ]
    for c in reversed(constraints):
        f = c(f)
    return f


def build_config(seed, restarts=None, damping=None, proxy='trw', recompute_rho=False,
                 threads=1):
    return ClampConfig(mf=MfConfig.from_defaults(seed=seed, restarts=restarts),
                       bethe=BpConfig.from_defaults(seed=seed, restarts=restarts,
                                                    damping=damping),
                       trw=BpConfig.from_defaults('trw', seed=seed),
                       recompute_rho=recompute_rho, proxy=proxy, jobs=threads,
                       basket=tuple(basket()))


def get_spec(family, n, theta_range, w_range, w, topology, seed):
    return harness.default_spec(family, n, theta_range, w_range, seed=seed, w=w,
                                topology=topology)


def get_model(model_path, **spec_args):
    if model_path:
        return load_model(model_path), f'model file {model_path}'
    spec = get_spec(**spec_args)
    return generate(spec), spec.describe()


def side_path(out, kind):
    root, _ = os.path.splitext(out)
    return f'{root}.{kind}.csv'


@clasp.command()
@model_args
@solver_args
@click.option('--method', '-M', multiple=True, callback=_methods, default=['mf', 'bethe', 'trw'],
              type=click.Choice(list(METHOD_NAMES), case_sensitive=False),
              help="Estimator, can be repeated")
@click.option('--exact/--no-exact', default=False, help="Also compute the exact value")
@click.pass_context
def infer(ctx, model_path, family, n, theta_range, w_range, w, topology, seed,
          restarts, damping, proxy, recompute_rho, jobs, method, exact):
    """
    Estimate the log partition function of one model
    """
    model, source = get_model(model_path, family=family, n=n, theta_range=theta_range,
                              w_range=w_range, w=w, topology=topology, seed=seed)
    ctx.obj['log'].info(f"infer {source} methods={','.join(method)}")
    cfg = build_config(seed, restarts, damping, proxy, recompute_rho, threads=jobs)
    for m in method:
        out = harness.infer(model, m, cfg, exact=exact)
        line = (f"{out['method']}: logZ={out['log_z']:.10g} bound={out['bound']} "
                f"converged={out['converged']} iters={out['iters']} time={out['time_ms']:.1f}ms")
        if exact:
            line += f" exact={out['exact']:.10g} err={out['err']:.3g}"
        click.echo(line)


@clasp.command()
@click.option('--topology', type=click.Choice(['cycle', 'complete']), default='complete')
@click.option('--n', type=int, default=5)
@click.option('--w-grid', default='-12,12,0.5', help="Weights as start,stop,step")
@click.option('--method', '-M', multiple=True, callback=_methods, default=['mf', 'bethe', 'trw'],
              type=click.Choice(['mf', 'bethe', 'trw'], case_sensitive=False))
@click.option('--seed', type=int, default=0)
@click.option('--out', required=True, type=click.Path(), help="Output csv")
@click.pass_context
def sweep(ctx, topology, n, w_grid, method, seed, out):
    """
    Error of each method on symmetric models as the common weight varies
    """
    try:
        start, stop, step = (float(x) for x in w_grid.split(','))
    except ValueError:
        raise click.BadParameter(f"expected start,stop,step, got {w_grid}", param_hint='--w-grid')
    weights = np.round(np.arange(start, stop + step / 2, step), 10)
    ctx.obj['log'].info(f"sweep {topology} n={n} w={w_grid}")
    frame = harness.sweep(topology, n, weights, method, build_config(seed))
    harness.write_frame(frame, out, harness.provenance('sweep', topology=topology, n=n,
                                                        weights=w_grid, seed=seed))
    click.echo(f"Wrote {len(frame)} rows to {out}")


@clasp.command()
@model_args
@solver_args
@click.option('--method', '-M', multiple=True, callback=_methods, default=['mf', 'bethe', 'trw'],
              type=click.Choice(['mf', 'bethe', 'trw'], case_sensitive=False))
@click.option('--selector', '-s', multiple=True,
              help="Heuristic, greedy, pseudo-greedy or first. Default: basket and pseudo-greedy")
@click.option('--rounds', '-k', type=int, default=None, help="Clamps per run. Default: 5")
@click.option('--runs', type=int, default=None, help="Generated models. Default: 20")
@click.option('--full', is_flag=True, default=False,
              help="Use the full experiment matrix (slow)")
@click.option('--out', required=True, type=click.Path(), help="Output csv")
@click.pass_context
def clamp(ctx, model_path, family, n, theta_range, w_range, w, topology, seed,
          restarts, damping, proxy, recompute_rho, jobs, method, selector, rounds, runs,
          full, out):
    """
    Error against number of clamps for each method and selector
    """
    matrix = load_experiments()['full' if full else 'desk']
    if full:
        ctx.obj['log'].warning("--full runs the complete experiment matrix, this takes hours")
    runs = runs or matrix['runs']
    rounds = matrix['rounds'] if rounds is None else rounds
    selectors = tuple(selector) or tuple(basket()) + ('pseudo-greedy',)
    cfg = build_config(seed, restarts, damping, proxy, recompute_rho)
    if model_path:
        raise click.UsageError("clamp experiments run on generated models, use --family")
    spec = get_spec(family, n, theta_range, w_range, w, topology, seed)
    ctx.obj['log'].info(f"clamp {spec.describe()} runs={runs} rounds={rounds}")
    results = harness.clamp_experiment(harness.experiment_specs(spec, runs), method,
                                       selectors, rounds, cfg, jobs=jobs)
    header = harness.provenance('clamp', spec=spec.describe(), runs=runs, rounds=rounds,
                                seeds=f'{seed}..{seed + runs - 1}',
                                selectors=','.join(selectors))
    harness.write_frame(results.runs, out, header)
    harness.write_frame(results.summary, side_path(out, 'summary'), header)
    harness.write_frame(results.agreement, side_path(out, 'agreement'), header)
    harness.write_frame(results.timing, side_path(out, 'timing'), header)
    click.echo(f"Wrote {len(results.runs)} rows to {out}")


@clasp.command()
@model_args
@solver_args
@click.option('--method', '-M', callback=_methods, default='trw',
              type=click.Choice(list(METHOD_NAMES), case_sensitive=False))
@click.option('--rounds', '-k', type=int, default=2, help="Number of clamps, at most 3")
@click.pass_context
def seqsearch(ctx, model_path, family, n, theta_range, w_range, w, topology, seed,
              restarts, damping, proxy, recompute_rho, jobs, method, rounds):
    """
    Compare the best set of clamps with the greedy sequence
    """
    model, source = get_model(model_path, family=family, n=n, theta_range=theta_range,
                              w_range=w_range, w=w, topology=topology, seed=seed)
    ctx.obj['log'].info(f"seqsearch {source} method={method} k={rounds}")
    cfg = build_config(seed, restarts, damping, proxy, recompute_rho, threads=jobs)
    found = harness.sequence_search(model, method, rounds, cfg)
    click.echo(f"exhaustive: {found.exhaustive:.10g} clamps={list(found.best_sequence)}")
    click.echo(f"greedy: {found.greedy:.10g} clamps={list(found.greedy_sequence)}")
    click.echo(f"gap: {found.gap:.3g}")


@clasp.command()
@model_args
@solver_args
@click.option('--selector', '-s', default='maxW', help="Clamp selector")
@click.option('--runs', type=int, default=None, help="Generated models. Default: 20")
@click.option('--out', required=True, type=click.Path(), help="Output csv")
@click.pass_context
def hist(ctx, model_path, family, n, theta_range, w_range, w, topology, seed,
         restarts, damping, proxy, recompute_rho, jobs, selector, runs, out):
    """
    Histogram of the signed Bethe error before and after clamping
    """
    runs = load_experiments()['desk']['runs'] if runs is None else runs
    spec = get_spec(family, n, theta_range, w_range, w, topology, seed)
    ctx.obj['log'].info(f"hist {spec.describe()} runs={runs} selector={selector}")
    cfg = build_config(seed, restarts, damping, proxy, recompute_rho)
    frame = harness.histogram(harness.experiment_specs(spec, runs), selector=selector,
                              cfg=cfg, jobs=jobs)
    harness.write_frame(frame, out, harness.provenance('hist', spec=spec.describe(), runs=runs,
                                                       selector=selector))
    click.echo(f"Wrote {len(frame)} rows to {out}")


@clasp.command()
@model_args
@click.option('--out', required=True, type=click.Path(), help="Model file, UAI if it ends in .uai")
@click.pass_context
def gen(ctx, model_path, family, n, theta_range, w_range, w, topology, seed, out):
    """
    Write a generated model to a file
    """
    if model_path:
        raise click.UsageError("gen writes generated models, use --family")
    spec = get_spec(family, n, theta_range, w_range, w, topology, seed)
    model = generate(spec)
    save_model(model, out)
    ctx.obj['log'].info(f"gen {spec.describe()} -> {out}")
    click.echo(f"Wrote {spec.family} model with {model.n} variables to {out}")
