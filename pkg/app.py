from flask import Flask, request, jsonify
import os
import logging
from dotenv import load_dotenv
from services.bnb_solver import BranchAndBoundSolver, BranchStrategy
from services.dkp_generator import DkpGenerator
from services.experiment_service import ExperimentRequest, ExperimentService
from services.instance_file_service import InstanceFileService
from services.reformulation_service import NoIntegerSolution, ReformulationService
from utils.errors import DkpLabError, GeneratorError, LimitExceeded, ParseError
from utils.knapsack_bounds import frob_p_bounds
from utils.lattice_core import ReductionProfile
from utils.settings import setup_logging

# Load environment variables
load_dotenv()
setup_logging()

logger = logging.getLogger(__name__)

app = Flask(__name__)
app.config['MAX_CONTENT_LENGTH'] = 4 * 1024 * 1024

# Initialize services
generator = DkpGenerator()
files = InstanceFileService()
solver = BranchAndBoundSolver()


def _payload():
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ParseError('Request body must be a JSON object')
    return data


def _instance(data):
    text = data.get('instance')
    if not text:
        raise ParseError('No instance text provided')
    return files.parse_instance(text)


def _bounds(values):
    return tuple(None if v in (None, 'inf') else int(v) for v in values)


def _error_status(e: DkpLabError) -> int:
    if isinstance(e, LimitExceeded):
        return 422
    return 400


@app.errorhandler(DkpLabError)
def handle_dkplab_error(e):
    kind = 'generator constraint' if isinstance(e, GeneratorError) else type(e).__name__
    logger.warning(f"Rejected request ({kind}): {e}")
    return jsonify({'error': str(e), 'kind': type(e).__name__}), _error_status(e)


@app.route('/health')
def health():
    """Health check endpoint"""
    return jsonify({'status': 'healthy', 'service': 'dkplab'})


@app.route('/generate', methods=['POST'])
def generate():
    """Generate a recipe or named-family instance"""
    data = _payload()
    family = data.get('family', '')
    try:
        if family == 'recipe1':
            params = generator.recipe1(data['p'], data['r'], _bounds(data['u']), int(data['k']),
                                       M=data.get('M'), beta_policy=data.get('beta_policy', 'widest'))
            inst = params.to_instance(name=data.get('name', 'recipe1'))
        elif family == 'recipe2':
            params = generator.recipe2(data['p'], data['r'], int(data['k']), M=data.get('M'),
                                       beta_policy=data.get('beta_policy', 'tight-low'))
            inst = params.to_instance(name=data.get('name', 'recipe2'))
        else:
            params = None
            inst = generator.named_instance(family, int(data.get('n', 0)), data.get('extra') or {})
    except KeyError as e:
        return jsonify({'error': f'Missing field {e}'}), 400
    except (TypeError, ValueError) as e:
        if isinstance(e, DkpLabError):
            raise
        return jsonify({'error': f'Invalid field value: {e}'}), 400

    return jsonify({
        'success': True,
        'instance': files.serialize_instance(inst),
        'M': params.M if params else None,
        'beta': [params.beta1, params.beta2] if params else None,
        'certified': params.certified() if params else None
    })


@app.route('/reformulate', methods=['POST'])
def reformulate():
    """Rangespace or AHL reformulation, returned as a bundle"""
    data = _payload()
    inst = _instance(data)
    service = ReformulationService(ReductionProfile.parse(data.get('reduction', 'lll')))
    shift = None
    if data.get('rhs_reduce'):
        reduction = service.rhs_reduce(inst)
        inst, shift = reduction.instance, reduction.shift

    if data.get('method', 'rangespace') == 'ahl':
        reform = service.ahl(inst)
    else:
        reform = service.rangespace(inst)

    response = {'success': True, 'bundle': files.serialize_bundle(reform, shift)}
    if isinstance(reform, NoIntegerSolution):
        response['certificate'] = reform.describe()
    return jsonify(response)


@app.route('/solve', methods=['POST'])
def solve():
    """Branch-and-bound node counts"""
    data = _payload()
    inst = _instance(data)
    fixed_order = tuple(data.get('fixed_order') or ())
    strategy = BranchStrategy(
        kind=data.get('branch', 'variable'),
        order=data.get('order') or ('fixed' if fixed_order else 'most_fractional'),
        fixed_order=fixed_order,
        seed=int(data.get('seed', 0)),
        direction=tuple(data['direction']) if data.get('direction') else None,
        node_limit=data.get('node_limit')
    )
    report = solver.solve(inst, strategy, data.get('objective'))
    return jsonify({'success': True, 'strategy': strategy.label(), 'report': report.summary()})


@app.route('/verify', methods=['POST'])
def verify():
    """Split certificates, p-branching Frobenius bounds and node lower bounds"""
    data = _payload()
    inst = _instance(data)
    result = {'success': True}

    cert = data.get('cert')
    if cert:
        result['certificate'] = solver.check_split_certificate(inst, cert['p'], int(cert['k']))
    if data.get('frob_bounds'):
        params = generator.params_from_instance(inst)
        lower, upper = frob_p_bounds(params.p, params.r, params.M)
        result['frob_p_bounds'] = [str(lower), str(upper)]
    if data.get('node_lb'):
        result['node_lower_bound'] = generator.node_lower_bound(generator.params_from_instance(inst))
    return jsonify(result)


@app.route('/experiment', methods=['POST'])
def experiment():
    """Run a desk-scale experiment table"""
    data = _payload()
    experiment_request = ExperimentRequest(
        table=data.get('table', 't1'),
        n=int(data.get('n', 10)),
        count=int(data.get('count', 5)),
        seed=int(data.get('seed', 0)),
        node_limit=data.get('node_limit'),
        u10=bool(data.get('u10', False)),
        run_orig=bool(data.get('run_orig', True))
    )
    service = ExperimentService()
    df = service.run(experiment_request)

    response = {
        'success': True,
        'rows': df.fillna('').to_dict(orient='records'),
        'summary': service.summarize(df)
    }
    if data.get('export'):
        response['export_path'] = service.export_to_excel(df, experiment_request.table)
    return jsonify(response)


@app.errorhandler(500)
def internal_error(e):
    logger.error(f"Internal server error: {e}")
    return jsonify({'error': 'Internal server error'}), 500


if __name__ == '__main__':
    port = int(os.getenv('FLASK_PORT', 5000))
    app.run(host=os.getenv('FLASK_HOST', '0.0.0.0'), port=port,
            debug=os.getenv('FLASK_DEBUG', 'False').lower() == 'true')
