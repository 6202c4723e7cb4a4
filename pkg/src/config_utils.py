# Configuration helpers shared by the swarm group planner scripts.
# The global settings live in an INI file (one section per processing
# step, keys prefixed by their type); the per-run settings live in a
# scenario JSON file.
#
# Created by: Andy Carter, PE
# Created - 2024.03.11
# Last revised - 2024.05.20 - scenario overrides of global keys
#
# swarm-group-plan - shared by every processing script


# ************************************************************
import argparse
import configparser
import copy
import json
import os
# ************************************************************


# Every key the scripts read, with the value used when the INI omits it
DICT_DEFAULT_CONFIG = {
    'grid_map': {
        'flt_resolution': 0.1,
        'flt_boundary_distance': 10.0,
    },
    'mapf': {
        'flt_omega': 1.3,
        'flt_tie_weight': 0.5,
        'int_node_budget': 100000,
        'flt_time_budget': 0.1,
        'int_expansion_budget': 200000,
        'flt_mapf_resolution': 0.5,
        'flt_mapf_padding': 2.0,
    },
    'minco': {
        'int_s': 3,
        'flt_sample_rate': 20.0,
    },
    'penalty': {
        'list_flt_lambda': [1.0, 20.0, 1.0e4, 1.0e4, 1.0e4, 1.0e2],
        'list_flt_chi': [1.0, 1.0, 1.0, 1.0, 1.0],
        'int_kappa': 16,
        'flt_clearance_obstacle': 0.3,
        'flt_clearance_swarm': 0.5,
        'flt_v_max': 1.7,
        'flt_a_max': 6.2,
        'flt_j_max': 20.0,
        'list_flt_downwash': [1.0, 1.0, 0.25],
    },
    'joint_opt': {
        'int_max_iter': 500,
        'flt_tolerance': 1.0e-4,
        'int_retry_limit': 3,
        'flt_reweight_factor': 10.0,
        'flt_margin_clearance': 0.05,
        'flt_margin_dynamic': 0.05,
        'flt_min_duration': 0.1,
        'int_min_pieces': 1,
        'flt_post_check_tolerance': 0.0,
    },
    'group_plan': {
        'int_n_min': 2,
        'int_n_max': 8,
        'flt_d_safe': 1.0,
        'flt_horizon': 7.5,
        'flt_neighbour_radius': 12.0,
        'b_map_sharing': True,
        'flt_latency': 0.0,
    },
    'sim_harness': {
        'flt_dt': 0.1,
        'flt_refresh_period': 1.0,
        'flt_timeout': 120.0,
        'flt_arrival_radius': 0.1,
        'flt_arrival_speed': 0.1,
        'flt_sensing_radius': 2.5,
        'flt_lookahead': 3.0,
        'flt_agent_radius': 0.25,
        'int_seeds': 10,
        'int_cores': 1,
    },
    'bench_mapf': {
        'list_int_agents': [2, 4, 6, 8],
        'list_flt_spacing': [4.0, 3.0, 2.0],
        'list_flt_volume': [256.0, 576.0, 1276.0],
        'flt_height': 4.0,
        'flt_pillar_radius': 0.25,
        'flt_resolution': 0.5,
        'int_seeds': 10,
        'flt_threshold': 0.1,
        'int_cores': 1,
    },
}


# ^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^
def is_valid_file(parser, arg):
    if not os.path.exists(arg):
        parser.error("The file %s does not exist" % arg)
    else:
        # File exists so return the path
        return arg
# ^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
def str2bool(v):
    if isinstance(v, bool):
        return v
    if v.lower() in ('yes', 'true', 't', 'y', '1'):
        return True
    elif v.lower() in ('no', 'false', 'f', 'n', '0'):
        return False
    else:
        raise argparse.ArgumentTypeError('Boolean value expected.')
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# ````````````````````````````````````````
def fn_json_from_ini(str_ini_path):
    # Read the INI file
    config = configparser.ConfigParser()
    config.read(str_ini_path)

    # Convert to a dictionary
    config_dict = {section: dict(config[section]) for section in config.sections()}

    # Convert to JSON
    json_data = json.dumps(config_dict, indent=4)

    return(json_data)
# ````````````````````````````````````````


# ````````````````````````````````````````
def fn_cast_value(str_key, value):
    # cast one INI string by the prefix of its key
    if not isinstance(value, str):
        return value

    str_value = value.strip()

    if str_key.startswith('list_'):
        list_items = [s.strip() for s in str_value.strip('[]').split(',') if s.strip() != '']
        str_item_key = str_key[len('list_'):]
        return [fn_cast_value(str_item_key, s) for s in list_items]
    if str_key.startswith('flt_'):
        return float(str_value)
    if str_key.startswith('int_'):
        return int(float(str_value))
    if str_key.startswith('b_'):
        return str2bool(str_value)
    return str_value
# ````````````````````````````````````````


# --------------------------------------------------------
def fn_typed_config_from_ini(str_ini_path=None):

    """
    Global configuration as a nested dictionary of typed values.  Keys
    missing from the INI (or a missing INI) fall back to
    DICT_DEFAULT_CONFIG.

    Args:
        str_ini_path: path to the global INI file, or None

    Returns:
        dict_config: {section: {key: typed value}}
    """

    dict_config = copy.deepcopy(DICT_DEFAULT_CONFIG)

    if str_ini_path is None:
        return dict_config

    if not os.path.exists(str_ini_path):
        raise FileNotFoundError('Global INI not found: ' + str(str_ini_path))

    dict_raw = json.loads(fn_json_from_ini(str_ini_path))

    for str_section, dict_section in dict_raw.items():
        dict_target = dict_config.setdefault(str_section, {})
        for str_key, value in dict_section.items():
            dict_target[str_key] = fn_cast_value(str_key, value)

    return dict_config
# --------------------------------------------------------


# --------------------------------------------------------
def fn_apply_overrides(dict_config, dict_overrides):
    # scenario JSON may replace any global key: {"section": {"key": value}}
    dict_merged = copy.deepcopy(dict_config)

    if not dict_overrides:
        return dict_merged

    for str_section, dict_section in dict_overrides.items():
        dict_target = dict_merged.setdefault(str_section, {})
        for str_key, value in dict_section.items():
            dict_target[str_key] = fn_cast_value(str_key, value)

    return dict_merged
# --------------------------------------------------------


# ........................................................
def fn_read_run_json(str_json_path):
    with open(str_json_path) as f:
        json_run_data = json.load(f)
    return json_run_data
# ........................................................
