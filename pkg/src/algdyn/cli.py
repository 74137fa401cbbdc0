#!/usr/bin/env python3
"""algdyn command-line tool."""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

try:
    from importlib.metadata import version as _pkg_version
    __version__ = _pkg_version('algdyn')
except Exception:
    __version__ = 'unknown'

import click
from pydantic import BaseModel, ConfigDict
from rich.console import Console
from rich.logging import RichHandler

from algdyn.config import Settings, load_settings
from algdyn.counterexamples import (
    padic_times_p_demo,
    periodic_densify,
    shift_embed_demo,
    sigma_injectivity_exhaustive,
    sigma_nonsurjectivity_witness,
)
from algdyn.equivariant import (
    AffineMapSpec,
    EndoOnFinitelyGenerated,
    dual_injective,
    dual_surjective,
    image_chain_stabilization,
    rational_rank_check,
    stratum_endomorphism,
    surjunctivity_experiment,
)
from algdyn.errors import DimensionMismatch, LatticeParseError, OracleMismatch
from algdyn.group_ring import format_exponent, format_poly, is_lopsided, mul as poly_mul, parse_poly
from algdyn.principal_system import (
    PrincipalSystem,
    expansivity_certificate,
    is_torsion_module,
    mixing_certificate,
    periodic_point_count,
    surjunctivity_routes,
    torsion_count_oracle,
)
from algdyn.render import ReportRenderer
from algdyn.zlattice import (
    Lattice,
    diagonal_family,
    format_matrix,
    parse_lattice,
    parse_matrix,
    random_hnf_lattices,
    smith_normal_form,
)

log = logging.getLogger(__name__)

DEMOS = ('shift-embed', 'padic', 'solenoid', 'ledrappier', 'rational-rank')

Record = Tuple[str, Dict[str, Any]]


class RunConfig(BaseModel):
    """One command invocation: raw inputs, validated by the command before it computes."""

    model_config = ConfigDict(extra='forbid')

    command: Literal['mul', 'snf', 'fixedpoints', 'certify', 'surjunctivity', 'dcc', 'sigma', 'densify', 'demo']
    params: Dict[str, Any] = {}
    output_format: Literal['text', 'json-lines'] = 'text'


@dataclass
class RunResult:
    status: int
    lines: List[str] = field(default_factory=list)
    error: Optional[BaseException] = None


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------

_DIAG_FAMILY = re.compile(r'diag:N<=(\d+)$')
_RANDOM_FAMILY = re.compile(r'random:(\d+),(\d+)$')


def resolve_dim(polys: Sequence[str], lattices: Sequence[str] = (), dim: Optional[int] = None) -> int:
    """Explicit --dim, else the dimension of the given lattices, else the largest variable index."""
    if dim is not None:
        if dim < 1:
            raise DimensionMismatch(f"dimension must be positive, got {dim}")
        return dim
    dims = {len(parse_matrix(text)) for text in lattices if not text.startswith(('diag:', 'random:'))}
    if len(dims) > 1:
        raise DimensionMismatch(f"lattices of different dimensions {sorted(dims)}")
    if dims:
        return dims.pop()
    return max(parse_poly(text).dim for text in polys)


def parse_lattice_family(text: str, dim: int, max_diagonal: int = 4) -> List[Lattice]:
    """``diag:N<=K`` for (NZ)^d with N = 1..K, or ``random:count,seed``."""
    match = _DIAG_FAMILY.match(text.strip())
    if match:
        return diagonal_family(dim, int(match.group(1)))
    match = _RANDOM_FAMILY.match(text.strip())
    if match:
        return random_hnf_lattices(dim, int(match.group(1)), int(match.group(2)), max_diagonal)
    raise LatticeParseError("expected diag:N<=K or random:count,seed", text, 0)


def parse_rationals(text: str) -> Tuple[Fraction, ...]:
    values = []
    for item in text.split(','):
        try:
            values.append(Fraction(item.strip()))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"invalid rational {item.strip()!r} in {text!r}") from None
    return tuple(values)


def parse_cell(text: str, dim: int) -> Tuple[Tuple[int, ...], str]:
    """``x,y=symbol``."""
    coords, sep, symbol = text.partition('=')
    if not sep or not symbol.strip():
        raise ValueError(f"cell {text!r} must look like 0,1=a")
    try:
        omega = tuple(int(c) for c in coords.split(','))
    except ValueError:
        raise ValueError(f"cell {text!r} has a non-integer coordinate") from None
    if len(omega) != dim:
        raise DimensionMismatch(f"cell {text!r} is not in Z^{dim}")
    return omega, symbol.strip()


def _lattices(params: Dict[str, Any], dim: int, settings: Settings) -> List[Lattice]:
    lattices = [parse_lattice(text, dim) for text in params.get('lattice') or ()]
    for family in params.get('lattices') or ():
        lattices.extend(parse_lattice_family(family, dim, settings.random_lattice_max_diagonal))
    return lattices


def _fractions(values: Sequence[Fraction]) -> str:
    return '(' + ','.join(str(v) for v in values) + ')'


def _given(params: Dict[str, Any], key: str, default: Any) -> Any:
    """The option value when one was passed, even 0, else the default."""
    value = params.get(key)
    return default if value is None else value


def _demo_range(params: Dict[str, Any], default: int, first: int) -> int:
    last = _given(params, 'm', default)
    if last < first:
        raise ValueError(f"--m must be at least {first}, got {last}")
    return last


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _run_mul(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    dim = resolve_dim([params['f'], params['g']], dim=params.get('dim'))
    f, g = parse_poly(params['f'], dim), parse_poly(params['g'], dim)
    product = poly_mul(f, g)
    return 0, [('mul', {'f': format_poly(f), 'g': format_poly(g), 'product': format_poly(product)})]


def _run_snf(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    matrix = parse_matrix(params['matrix'])
    snf = smith_normal_form(matrix)
    return 0, [('snf', {'matrix': format_matrix(matrix), 'invariants': list(snf.invariants)})]


def _run_fixedpoints(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    lattice_texts = list(params.get('lattice') or ())
    dim = resolve_dim([params['f']], lattice_texts, params.get('dim'))
    system = PrincipalSystem(parse_poly(params['f'], dim))
    lattices = _lattices(params, dim, settings)
    if not lattices:
        raise LatticeParseError("give at least one --lattice or --lattices family")
    records = []
    for L in lattices:
        structure = system.fixed_points(L)
        fields = {
            'f': format_poly(system.f),
            'lattice': L.format(),
            'torus_rank': structure.torus_rank,
            'torsion': list(structure.torsion.invariant_factors),
        }
        if params.get('oracle'):
            if structure.is_finite:
                count = torsion_count_oracle(system.f, L, settings.oracle_tolerance, settings.oracle_dps)
                if count != structure.torsion.order:
                    raise OracleMismatch(
                        f"character product {count} differs from |torsion| {structure.torsion.order} on {L}")
                fields['oracle'] = count
            else:
                fields['oracle'] = 'torus'
        records.append(('fixedpoints', fields))
    return 0, records


def _run_certify(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    f = parse_poly(params['f'], params.get('dim'))
    grid_exponent = _given(params, 'grid_exponent', settings.grid_exponent)
    eps = Fraction(params['eps']) if params.get('eps') else settings.eps_fraction
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    lopsided = is_lopsided(f)
    return 0, [('certify', {
        'f': format_poly(f),
        'lopsided': format_exponent(lopsided) if lopsided is not None else None,
        'expansive': str(expansivity_certificate(f, grid_exponent)),
        'mixing': str(mixing_certificate(f, eps)),
        'torsion_module': is_torsion_module(f),
    })]


def _run_surjunctivity(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    lattice_texts = list(params.get('lattice') or ())
    dim = resolve_dim([params['f'], params['a']], lattice_texts, params.get('dim'))
    f, a = parse_poly(params['f'], dim), parse_poly(params['a'], dim)
    tau = AffineMapSpec(a, parse_rationals(params.get('b') or '0'))
    lattices = _lattices(params, dim, settings) or diagonal_family(dim, 3)
    report = surjunctivity_experiment(
        tau, f, lattices, jobs=_given(params, 'jobs', settings.jobs), progress=settings.progress)
    records: List[Record] = [
        ('stratum', {'lattice': s.lattice.format(), 'injective': s.injective, 'surjective': s.surjective})
        for s in report.strata
    ]
    records.append(('verdict', {'verdict': report.overall}))
    return (1 if report.counterexamples else 0), records


def _run_dcc(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    if params.get('factors') is not None:
        factors = tuple(int(m) for m in params['factors'].split(',')) if params['factors'].strip() else ()
        matrix = parse_matrix(params['matrix']) if factors else ()
        e = EndoOnFinitelyGenerated(factors, matrix)
    else:
        if not (params.get('f') and params.get('a') and params.get('lattice')):
            raise ValueError("dcc needs --factors with --matrix, or --f, --a and --lattice")
        lattice_texts = list(params['lattice'])
        dim = resolve_dim([params['f'], params['a']], lattice_texts, params.get('dim'))
        f, a = parse_poly(params['f'], dim), parse_poly(params['a'], dim)
        lattices = [parse_lattice(text, dim) for text in lattice_texts]
        if len(lattices) != 1:
            raise LatticeParseError("dcc analyses one stratum at a time")
        e = stratum_endomorphism(a, f, lattices[0])
    chain = image_chain_stabilization(e)
    return 0, [('dcc', {
        'group': list(e.factors),
        'matrix': format_matrix(e.matrix),
        'injective': dual_injective(e),
        'surjective': dual_surjective(e),
        'k': chain.k,
    })]


def _run_sigma(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    width = params['width']
    if not 1 <= width <= settings.sigma_max_width:
        raise ValueError(f"width must be between 1 and {settings.sigma_max_width}, got {width}")
    injective = sigma_injectivity_exhaustive(width, progress=settings.progress)
    witness = str(sigma_nonsurjectivity_witness(width)) if width >= 2 else 'none'
    return (0 if injective else 1), [('sigma', {'width': width, 'injective': injective, 'witness': witness})]


def _run_densify(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    dim = params['dim']
    if dim < 1:
        raise DimensionMismatch(f"dimension must be positive, got {dim}")
    window = dict(parse_cell(text, dim) for text in params.get('cell') or ())
    lattice = parse_lattice(params['lattice'], dim) if params.get('lattice') else None
    default = params.get('default')
    config = periodic_densify(
        window, params['n'], dim, settings.default_symbol if default is None else default, lattice)
    lattice_text = config.lattice.format()
    return 0, [
        ('densify', {'lattice': lattice_text, 'cell': format_exponent(rep), 'value': value})
        for rep, value in config.values
    ]


def _run_demo(params: Dict[str, Any], settings: Settings) -> Tuple[int, List[Record]]:
    name = params['name']
    values: Dict[str, Any]
    if name == 'shift-embed':
        report = shift_embed_demo(_given(params, 'm', 3))
        values = {
            'level': report.level,
            'source': _fractions(report.example_source),
            'image': _fractions(report.example_image),
            'samples': report.samples_checked,
            'injective': report.injective,
            'excluded': _fractions(report.excluded_target),
            'excluded_has_preimage': report.excluded_has_preimage,
        }
    elif name == 'padic':
        report = padic_times_p_demo(_given(params, 'p', 2), _given(params, 'm', 4))
        values = {
            'p': report.p,
            'level': report.level,
            'kernel_order': report.kernel_order,
            'cokernel_order': report.cokernel_order,
            'excluded': format_exponent(report.excluded),
            'enumerated': report.enumerated,
        }
    elif name == 'solenoid':
        f = parse_poly('u1 - 2')
        last = _demo_range(params, 10, 1)
        counts = [periodic_point_count(f, Lattice.scalar(1, n)) for n in range(1, last + 1)]
        values = {'f': format_poly(f), 'counts': '[' + ','.join(str(c) for c in counts) + ']'}
    elif name == 'ledrappier':
        f = parse_poly('1 + u1 + u2')
        last = _demo_range(params, 5, 2)
        counts = [periodic_point_count(f, Lattice.scalar(2, n)) for n in range(2, last + 1)]
        values = {
            'f': format_poly(f),
            'first': 2,
            'counts': '[' + ','.join('torus' if c is None else str(c) for c in counts) + ']',
            'expansive': str(expansivity_certificate(f, settings.grid_exponent)),
            'mixing': str(mixing_certificate(f, settings.eps_fraction)),
            'routes': ','.join(surjunctivity_routes(f)),
        }
    elif name == 'rational-rank':
        matrix = parse_matrix(params.get('matrix') or '2,1;1,1')
        values = {'matrix': format_matrix(matrix), 'verdict': str(rational_rank_check(matrix))}
    else:
        raise ValueError(f"unknown demo {name!r}, expected one of {', '.join(DEMOS)}")
    return 0, [('demo', {'name': name, 'values': values})]


_HANDLERS: Dict[str, Callable[[Dict[str, Any], Settings], Tuple[int, List[Record]]]] = {
    'mul': _run_mul,
    'snf': _run_snf,
    'fixedpoints': _run_fixedpoints,
    'certify': _run_certify,
    'surjunctivity': _run_surjunctivity,
    'dcc': _run_dcc,
    'sigma': _run_sigma,
    'densify': _run_densify,
    'demo': _run_demo,
}


def run(config: RunConfig, settings: Optional[Settings] = None) -> RunResult:
    """Execute one command; 0 on success, 1 on a negative verdict, 2 on bad input."""
    settings = settings or Settings()
    renderer = ReportRenderer(config.output_format)
    try:
        status, records = _HANDLERS[config.command](config.params, settings)
    except ValueError as e:
        log.debug("%s failed", config.command, exc_info=True)
        return RunResult(2, error=e)
    return RunResult(status, [renderer.render(kind, **fields) for kind, fields in records])


# ---------------------------------------------------------------------------
# Click front end
# ---------------------------------------------------------------------------

def setup_logging(verbose: bool) -> None:
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    logger = logging.getLogger('algdyn')
    logger.handlers = [handler]
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def report_error(error: BaseException) -> None:
    message = ' '.join(str(error).split())
    click.echo(f"[ERROR] {type(error).__name__}: {message}", err=True)


def _execute(ctx: click.Context, command: str, **params: Any) -> None:
    obj = ctx.obj
    try:
        config = RunConfig(command=command, params=params, output_format=obj['output'])
        settings = load_settings(obj['config'])
    except (ValueError, OSError) as e:
        report_error(e)
        ctx.exit(2)
    if obj['progress']:
        settings = settings.model_copy(update={'progress': True})
    result = run(config, settings)
    for line in result.lines:
        click.echo(line)
    if result.error is not None:
        report_error(result.error)
    ctx.exit(result.status)


@click.group()
@click.version_option(__version__, prog_name='algdyn')
@click.option('--output', type=click.Choice(['text', 'json-lines']), default='text',
              help='Report format (default: text)')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help='YAML settings file overriding the bundled defaults')
@click.option('--verbose', '-v', is_flag=True, help='Log progress details to stderr')
@click.option('--progress', is_flag=True, help='Show progress bars for long searches')
@click.pass_context
def cli(ctx, output, config_path, verbose, progress):
    """Exact computations for algebraic dynamical systems over Z^d."""
    ctx.ensure_object(dict)
    ctx.obj.update(output=output, config=config_path, progress=progress)
    setup_logging(verbose)


dim_option = click.option('--dim', type=int, default=None, help='Dimension d of Z^d (default: inferred)')
lattice_option = click.option('--lattice', multiple=True,
                              help='Lattice basis as rows "a,b;c,d" (columns generate); repeatable')
lattices_option = click.option('--lattices', multiple=True,
                               help='Lattice family: diag:N<=K or random:count,seed; repeatable')


@cli.command()
@click.option('--f', 'f', required=True, help='First polynomial, e.g. "1 + u1 + u2"')
@click.option('--g', 'g', required=True, help='Second polynomial')
@dim_option
@click.pass_context
def mul(ctx, f, g, dim):
    """Multiply two Laurent polynomials."""
    _execute(ctx, 'mul', f=f, g=g, dim=dim)


@cli.command()
@click.option('--matrix', required=True, help='Integer matrix as rows "a,b;c,d"')
@click.pass_context
def snf(ctx, matrix):
    """Smith normal form invariant factors."""
    _execute(ctx, 'snf', matrix=matrix)


@cli.command()
@click.option('--f', 'f', required=True, help='Polynomial defining X_f')
@lattice_option
@lattices_option
@click.option('--oracle', is_flag=True, help='Cross-check |torsion| with the character product')
@dim_option
@click.pass_context
def fixedpoints(ctx, f, lattice, lattices, oracle, dim):
    """Structure T^k x F of the points of X_f fixed by each lattice."""
    _execute(ctx, 'fixedpoints', f=f, lattice=list(lattice), lattices=list(lattices), oracle=oracle, dim=dim)


@cli.command()
@click.option('--f', 'f', required=True, help='Polynomial defining X_f')
@click.option('--grid-exponent', type=int, default=None, help='Torus grid spacing 2^-n (default from settings)')
@click.option('--eps', default=None, help='Accuracy of the l1 inverse, e.g. 1/1000000')
@dim_option
@click.pass_context
def certify(ctx, f, grid_exponent, eps, dim):
    """Expansivity and mixing certificates."""
    _execute(ctx, 'certify', f=f, grid_exponent=grid_exponent, eps=eps, dim=dim)


@cli.command()
@click.option('--f', 'f', required=True, help='Polynomial defining X_f')
@click.option('--a', 'a', required=True, help='Linear part: multiplication by a on the dual')
@click.option('--b', 'b', default='0', help='Translation: one rational mod 1, or one per coset')
@lattice_option
@lattices_option
@click.option('--jobs', type=int, default=None, help='Worker processes for the strata (default from settings)')
@dim_option
@click.pass_context
def surjunctivity(ctx, f, a, b, lattice, lattices, jobs, dim):
    """Check injective => surjective for an affine map on every stratum."""
    _execute(ctx, 'surjunctivity', f=f, a=a, b=b, lattice=list(lattice), lattices=list(lattices),
             jobs=jobs, dim=dim)


@cli.command()
@click.option('--factors', default=None, help='Cyclic orders of the group, 0 for a free factor, e.g. "8,0"')
@click.option('--matrix', default=None, help='Endomorphism matrix acting on column vectors')
@click.option('--f', 'f', default=None, help='Polynomial defining X_f (stratum mode)')
@click.option('--a', 'a', default=None, help='Linear part (stratum mode)')
@lattice_option
@dim_option
@click.pass_context
def dcc(ctx, factors, matrix, f, a, lattice, dim):
    """Injectivity, surjectivity and chain stabilisation of an endomorphism."""
    if factors is not None and matrix is None and factors.strip():
        raise click.UsageError('--factors needs --matrix')
    _execute(ctx, 'dcc', factors=factors, matrix=matrix, f=f, a=a, lattice=list(lattice), dim=dim)


@cli.command()
@click.option('--width', type=int, required=True, help='Window width for the exhaustive search')
@click.pass_context
def sigma(ctx, width):
    """Injective but not surjective map on the one-chain subshift."""
    _execute(ctx, 'sigma', width=width)


@cli.command()
@click.option('--cell', multiple=True, help='Window cell "x,y=symbol"; repeatable')
@click.option('--n', 'n', type=int, required=True, help='Period N')
@click.option('--dim', type=int, required=True, help='Dimension d')
@click.option('--default', 'default', default=None, help='Symbol outside the window (default from settings)')
@click.option('--lattice', default=None, help='Period lattice instead of (NZ)^d')
@click.pass_context
def densify(ctx, cell, n, dim, default, lattice):
    """Periodic configuration agreeing with a finite window."""
    _execute(ctx, 'densify', cell=list(cell), n=n, dim=dim, default=default, lattice=lattice)


@cli.command()
@click.argument('name', type=click.Choice(DEMOS))
@click.option('--m', 'm', type=int, default=None, help='Truncation level or range')
@click.option('--p', 'p', type=int, default=None, help='Prime for the p-adic demo')
@click.option('--matrix', default=None, help='Dual matrix for the rational-rank demo')
@click.pass_context
def demo(ctx, name, m, p, matrix):
    """Worked examples: shift-embed, padic, solenoid, ledrappier, rational-rank."""
    _execute(ctx, 'demo', name=name, m=m, p=p, matrix=matrix)


def main():
    """Main entry point."""
    cli()


if __name__ == '__main__':
    main()
