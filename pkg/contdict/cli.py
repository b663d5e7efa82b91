"""Command-line experiments: synth, noise, learn, denoise, eval."""

import argparse
import logging
import os
import sys

from . import basis
from . import cloud_io
from . import dictlearn
from . import exceptions
from . import geometry
from . import pipeline
from . import pursuit
from . import utils

log = logging.getLogger(__name__)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError('must be >= 1, got %d' % value)
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError('must be >= 0, got %d' % value)
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError('must be > 0, got %s' % text)
    return value


def _non_negative_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError('must be >= 0, got %s' % text)
    return value


def _seed(text):
    try:
        return utils.check_seed(int(text))
    except exceptions.InvalidParameterFailure as e:
        raise argparse.ArgumentTypeError(str(e))


def _check_readable(path, what):
    if not os.path.isfile(path):
        raise exceptions.ContDictIOFailure('%s %s does not exist' % (what, path))


def _check_writable(path):
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise exceptions.ContDictIOFailure('output directory %s does not exist' % directory)


def cmd_synth(args):
    _check_writable(args.out)
    cloud = cloud_io.synth_cloud(args.shape, args.n, args.seed)
    cloud_io.write_cloud(cloud, args.out, args.format)
    print(len(cloud))
    return 0


def cmd_noise(args):
    spec = cloud_io.NoiseSpec(args.sigma, args.seed)
    _check_readable(args.input, 'input cloud')
    _check_writable(args.out)
    cloud = cloud_io.read_cloud(args.input, args.format)
    cloud_io.write_cloud(cloud_io.add_noise(cloud, spec), args.out, args.format)
    return 0


def _learn_params(args):
    return dictlearn.LearnParams(
        n_atoms=args.n_atoms,
        basis=basis.BasisSpec(args.max_freq_u, args.max_freq_v),
        sparsity_L=args.sparsity_L,
        outer_iters=args.outer_iters,
        error_threshold=args.error_threshold,
        seed=args.seed,
        inner_ls_ridge=args.ridge,
        alternation_rounds=args.alternation_rounds,
        stall_tolerance=args.stall_tolerance,
        threads=args.threads,
    )


def cmd_learn(args):
    params = _learn_params(args)
    if args.radius <= 0:
        raise exceptions.InvalidParameterFailure('radius must be > 0')
    _check_readable(args.input, 'training cloud')
    _check_writable(args.out)
    _check_writable(args.trace)

    cloud = cloud_io.read_cloud(args.input, args.format)
    train = dictlearn.training_set_from_cloud(
        cloud, args.radius, args.center_strategy, min_points=max(3, params.sparsity_L + 1))
    if len(train) == 0:
        raise exceptions.DegeneratePatchFailure(
            'no usable training patches: %d points with radius %g give no patch with at least %d points'
            % (len(cloud), args.radius, max(3, params.sparsity_L + 1)))
    log.info('Learning from %d patches', len(train))
    dictionary, trace = dictlearn.learn(train, params)
    basis.write_dictionary(dictionary, args.out)
    trace.write_csv(args.trace)
    return 0


def cmd_denoise(args):
    params = pipeline.DenoiseParams(
        radius=args.radius,
        center_strategy=args.center_strategy,
        pursuit=pursuit.PursuitParams(
            sparsity_L=args.sparsity_L,
            residual_tol=args.residual_tol,
            lam=args.lam,
            max_iters=args.max_iters,
        ),
        solver=args.solver,
        min_patch_points=args.min_patch_points,
        noise_sigma=args.noise_sigma,
        threads=args.threads,
    )
    _check_readable(args.input, 'noisy cloud')
    _check_readable(args.dict, 'dictionary')
    _check_writable(args.out)
    if args.report:
        _check_writable(args.report)

    dictionary = basis.read_dictionary(args.dict)
    cloud = cloud_io.read_cloud(args.input, args.format)
    denoised, report = pipeline.denoise(cloud, dictionary, params)
    cloud_io.write_cloud(denoised, args.out, args.format)
    if args.report:
        try:
            with open(args.report, 'w', encoding='utf-8') as f:
                f.write(report.to_text())
        except OSError as e:
            raise exceptions.ContDictIOFailure('cannot write %s: %s' % (args.report, e), superExc=e)
    else:
        sys.stdout.write(report.to_text())
    return 0


def cmd_eval(args):
    if args.reference is None and args.shape is None:
        raise exceptions.InvalidParameterFailure('eval needs --reference and/or --shape')
    _check_readable(args.input, 'input cloud')
    if args.reference is not None:
        _check_readable(args.reference, 'reference cloud')

    cloud = cloud_io.read_cloud(args.input, args.format)
    if len(cloud) == 0:
        raise exceptions.EmptyCloudFailure('%s holds no points' % args.input)
    if args.reference is not None:
        reference = cloud_io.read_cloud(args.reference, args.format)
        print('chamfer %s' % utils.format_float(pipeline.chamfer_distance(cloud, reference)))
    if args.shape is not None:
        print('rmse %s' % utils.format_float(pipeline.rmse_to_surface(cloud, args.shape)))
    return 0


def _add_format(parser):
    parser.add_argument('--format', choices=cloud_io.FORMATS, default=None,
                        help='cloud file format (default: from the file extension)')


def _add_patch_args(parser):
    parser.add_argument('--radius', type=_positive_float, required=True, help='patch radius in world units')
    parser.add_argument('--center-strategy', dest='center_strategy', choices=geometry.CENTER_STRATEGIES,
                        default='poisson_stride', help='how patch centres are chosen')


def _common_args(parser, suppress=False):
    parser.add_argument('-v', '--verbose', action='count', default=argparse.SUPPRESS if suppress else 0,
                        help='more logging (repeatable)')
    parser.add_argument('--threads', type=_positive_int, default=argparse.SUPPRESS if suppress else None,
                        help='worker threads (default: $CONTDICT_THREADS or all cores)')


def build_parser():
    parser = argparse.ArgumentParser(prog='contdict', description=__doc__)
    _common_args(parser)
    # also accepted after the command; unset there so the values given before it survive
    common = argparse.ArgumentParser(add_help=False)
    _common_args(common, suppress=True)
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    synth = subparsers.add_parser('synth', parents=[common], help='sample a synthetic surface')
    synth.add_argument('--shape', choices=cloud_io.SHAPES, required=True)
    synth.add_argument('--n', type=_positive_int, required=True, help='number of points')
    synth.add_argument('--seed', type=_seed, default=0)
    synth.add_argument('--out', required=True)
    _add_format(synth)
    synth.set_defaults(func=cmd_synth)

    noise = subparsers.add_parser('noise', parents=[common], help='add isotropic Gaussian noise')
    noise.add_argument('--input', required=True)
    noise.add_argument('--out', required=True)
    noise.add_argument('--sigma', type=_non_negative_float, required=True, help='noise std in world units')
    noise.add_argument('--seed', type=_seed, default=0)
    _add_format(noise)
    noise.set_defaults(func=cmd_noise)

    learn = subparsers.add_parser('learn', parents=[common], help='learn a continuous dictionary from a cloud')
    learn.add_argument('--input', required=True)
    learn.add_argument('--out', required=True, help='CDICT file to write')
    learn.add_argument('--trace', default='trace.csv', help='error trace CSV (default: trace.csv)')
    _add_patch_args(learn)
    learn.add_argument('--max-freq-u', dest='max_freq_u', type=_non_negative_int, default=5)
    learn.add_argument('--max-freq-v', dest='max_freq_v', type=_non_negative_int, default=5)
    learn.add_argument('--n-atoms', dest='n_atoms', type=_positive_int, default=36)
    learn.add_argument('--sparsity-L', dest='sparsity_L', type=_non_negative_int, default=4)
    learn.add_argument('--outer-iters', dest='outer_iters', type=_positive_int, default=20)
    learn.add_argument('--error-threshold', dest='error_threshold', type=_non_negative_float, default=0.0)
    learn.add_argument('--ridge', type=_non_negative_float, default=None,
                       help='ridge weight of the atom update (default: scaled to the data)')
    learn.add_argument('--alternation-rounds', dest='alternation_rounds', type=_positive_int, default=2)
    learn.add_argument('--stall-tolerance', dest='stall_tolerance', type=_non_negative_float, default=1e-3,
                       help='relative improvement below which an atom is re-seeded (0 disables)')
    learn.add_argument('--seed', type=_seed, default=0)
    _add_format(learn)
    learn.set_defaults(func=cmd_learn)

    den = subparsers.add_parser('denoise', parents=[common], help='denoise a cloud with a dictionary')
    den.add_argument('--input', required=True)
    den.add_argument('--dict', required=True, help='CDICT dictionary file')
    den.add_argument('--out', required=True)
    den.add_argument('--report', default=None, help='report file (default: stdout)')
    _add_patch_args(den)
    den.add_argument('--solver', choices=pursuit.SOLVERS, default='relaxed')
    den.add_argument('--sparsity-L', dest='sparsity_L', type=_non_negative_int, default=4)
    den.add_argument('--lambda', dest='lam', type=_non_negative_float, default=0.0,
                     help='l1 weight (default: 1.5 * noise-sigma * sqrt(patch size), in patch units)')
    den.add_argument('--noise-sigma', dest='noise_sigma', type=_non_negative_float, default=None,
                     help='noise std estimate in world units')
    den.add_argument('--residual-tol', dest='residual_tol', type=_non_negative_float, default=0.0)
    den.add_argument('--max-iters', dest='max_iters', type=_positive_int, default=1000)
    den.add_argument('--min-patch-points', dest='min_patch_points', type=int, default=3)
    den.add_argument('--seed', type=_seed, default=0, help='accepted for uniformity; denoising draws no randomness')
    _add_format(den)
    den.set_defaults(func=cmd_denoise)

    ev = subparsers.add_parser('eval', parents=[common], help='compare a cloud to a reference cloud or surface')
    ev.add_argument('--input', required=True)
    ev.add_argument('--reference', default=None, help='reference cloud for the Chamfer distance')
    ev.add_argument('--shape', choices=cloud_io.SHAPES, default=None, help='analytic surface for the RMSE')
    _add_format(ev)
    ev.set_defaults(func=cmd_eval)
    return parser


def _configure_logging(verbose):
    if verbose:
        level = logging.DEBUG if verbose > 1 else logging.INFO
        logging.basicConfig(level=level, stream=sys.stderr,
                            format='%(asctime)s %(name)s %(levelname)s %(message)s')


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    _configure_logging(args.verbose)
    try:
        options = utils.options_from_environment()
        if args.threads is None:
            args.threads = options['threads']
        return args.func(args)
    except exceptions.ContDictFailure as e:
        sys.stderr.write('error: %s\n' % e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
