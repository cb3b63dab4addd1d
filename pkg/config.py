"""
Configuration settings for the FID spin-wave memory simulator
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def get_setting(key: str, default: str = '') -> str:
    """Get an override from the environment (FIDMEM_* variables)"""
    return os.getenv(f'FIDMEM_{key}', default)


# Default solver resolutions (dimensionless units: Γ = 1, z in units of 1/α)
RESOLUTION_DEFAULTS = {
    'n_delta': 512,
    'n_z': 400,
    'n_points': 8192,
    'window_factor': 15.0
}

# Desk-scale resolutions used by figure sweeps unless --dense is given
DESK_RESOLUTION = {
    'n_delta': 256,
    'n_z': 200,
    'n_points': 4096,
    'window_factor': 15.0
}

SOLVER_SETTINGS = {
    'refinement_tolerance': 2e-3,  # 0.2 percentage points
    'tail_tolerance': 1e-4,        # fraction of retrieved energy left beyond the horizon
    'tail_step': 0.005,            # longest retrieval step after the window, units of 1/Γ
    'max_retrieval_time': 20.0,    # in units of 1/Γ
    'passivity_tolerance': 1e-3
}

QUADRATURE_SETTINGS = {
    'tolerance': 1e-4,
    'limit': 2000
}

OPTIMIZER_SETTINGS = {
    'bracket': (1e-3, 1.0),
    'prescan_points': 16,
    'relative_tolerance': 1e-3,
    'shape_tolerance': 1e-3,
    'max_iterations': 12,
    'window_growth': 2.0
}

FEASIBILITY_SETTINGS = {
    'data_file': get_setting('CRYSTAL_FILE', 'data/crystals.yaml'),
    'bohr_magneton_ghz_per_tesla': 13.996,
    'tau_ratio': 0.1,
    'reference_crystal': 'Nd:YVO4'
}

# Figure sweeps: (start, stop, desk count, dense count)
FIGURE_SETTINGS = {
    2: {'alphaL': (0.0, 200.0, 40, 201), 'gammaT': [0.1, 0.05, 0.01]},
    3: {'alphaL': (0.0, 200.0, 40, 201), 'gammaT': [0.1, 0.05, 0.01]},
    4: {'alphaL': (0.0, 60.0, 7, 31)},
    5: {'alphaL': (0.0, 60.0, 7, 31)},
    6: {'alphaL': (0.0, 60.0, 7, 31)}
}

CLI_SETTINGS = {
    'tool_version': '0.3.0',
    'csv_schema_version': 1,
    'output_dir': get_setting('OUTPUT_DIR', 'results'),
    'workers': int(get_setting('WORKERS', '0')) or (os.cpu_count() or 1)
}
